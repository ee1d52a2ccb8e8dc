//! Gradient almost Ricci soliton warped products: construction from base
//! data and numerical verification of the identities such structures obey.
//!
//! Layout:
//! - [`expr`] scalar expression language with exact differentiation
//! - [`geometry`] chart-based Riemannian tensor calculus
//! - [`warped`] warped product metrics and block Ricci formulas
//! - [`constraints`] residuals of the soliton and base equations
//! - [`conformal_ode`] ODE reduction for conformally flat bases
//! - [`rigidity`] elliptic identity, integral identity, hypothesis reports
//! - [`catalog`] named example instances
//! - [`scenario`] JSON configs, runs and reports behind the CLI

pub mod error;
pub mod expr;
pub mod geometry;
pub mod warped;
pub mod constraints;
pub mod conformal_ode;
pub mod rigidity;
pub mod catalog;
pub mod scenario;

pub use expr::{parse, Expression};

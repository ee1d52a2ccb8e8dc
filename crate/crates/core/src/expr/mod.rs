//! Scalar expression language.
//!
//! Expressions are immutable trees over real literals, symbols, the five
//! arithmetic operators and a fixed set of elementary functions. They can be
//! parsed from text, differentiated exactly, rendered back to text and
//! compiled into a small stack program for fast pointwise evaluation.
//!
//! Differentiation applies only local constant folding (`0*x`, `x+0`,
//! literal arithmetic); there is no attempt at a canonical form.

mod compile;
mod diff;
mod parse;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

pub use compile::CompiledExpr;
pub use parse::parse;

use thiserror::Error;

/// Syntax error with the byte offset where parsing stopped.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("syntax error at offset {offset}: expected {expected}")]
pub struct ParseError {
    pub offset: usize,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Tanh,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Exp,
        Func::Log,
        Func::Sin,
        Func::Cos,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub(crate) fn apply(self, x: f64) -> Result<f64, EvalError> {
        let y = match self {
            Func::Exp => x.exp(),
            Func::Log => {
                if x <= 0.0 {
                    return Err(EvalError::Domain(format!("log of non-positive value {x}")));
                }
                x.ln()
            }
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(EvalError::Domain(format!("sqrt of negative value {x}")));
                }
                x.sqrt()
            }
        };
        if y.is_finite() {
            Ok(y)
        } else {
            Err(EvalError::Domain(format!("{}({x}) overflows", self.name())))
        }
    }
}

/// Expression tree node. Children are reference counted so derivative
/// trees share subexpressions with their source.
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Literal(f64),
    Symbol(Arc<str>),
    Neg(Arc<Expression>),
    Binary(BinOp, Arc<Expression>, Arc<Expression>),
    Call(Func, Arc<Expression>),
}

pub(crate) fn apply_binary(op: BinOp, a: f64, b: f64) -> Result<f64, EvalError> {
    let y = match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b == 0.0 {
                return Err(EvalError::Domain("division by zero".into()));
            }
            a / b
        }
        BinOp::Pow => return power(a, b),
    };
    if y.is_finite() {
        Ok(y)
    } else {
        Err(EvalError::Domain(format!("{a} {} {b} is not finite", op.symbol())))
    }
}

/// `a^b`: integer exponents use repeated multiplication, anything else is
/// `exp(b*log(a))` and needs `a > 0`.
pub(crate) fn power(a: f64, b: f64) -> Result<f64, EvalError> {
    let y = if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
        if a == 0.0 && b < 0.0 {
            return Err(EvalError::Domain("zero raised to a negative power".into()));
        }
        a.powi(b as i32)
    } else {
        if a <= 0.0 {
            return Err(EvalError::Domain(format!(
                "non-integer power {b} of non-positive base {a}"
            )));
        }
        (b * a.ln()).exp()
    };
    if y.is_finite() {
        Ok(y)
    } else {
        Err(EvalError::Domain(format!("{a}^{b} is not finite")))
    }
}

impl Expression {
    pub fn literal(v: f64) -> Self {
        Expression::Literal(v)
    }

    pub fn symbol(name: &str) -> Self {
        Expression::Symbol(Arc::from(name))
    }

    pub fn as_literal(&self) -> Option<f64> {
        match self {
            Expression::Literal(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_literal() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_literal() == Some(1.0)
    }

    // Folding constructors. These never change the value of the expression
    // where it is defined.

    pub fn neg(a: Expression) -> Expression {
        match a {
            Expression::Literal(v) => Expression::Literal(-v),
            Expression::Neg(inner) => (*inner).clone(),
            other => Expression::Neg(Arc::new(other)),
        }
    }

    pub fn add(a: Expression, b: Expression) -> Expression {
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        Self::fold_binary(BinOp::Add, a, b)
    }

    pub fn sub(a: Expression, b: Expression) -> Expression {
        if b.is_zero() {
            return a;
        }
        if a.is_zero() {
            return Expression::neg(b);
        }
        Self::fold_binary(BinOp::Sub, a, b)
    }

    pub fn mul(a: Expression, b: Expression) -> Expression {
        if a.is_zero() || b.is_zero() {
            return Expression::Literal(0.0);
        }
        if a.is_one() {
            return b;
        }
        if b.is_one() {
            return a;
        }
        if a.as_literal() == Some(-1.0) {
            return Expression::neg(b);
        }
        if b.as_literal() == Some(-1.0) {
            return Expression::neg(a);
        }
        Self::fold_binary(BinOp::Mul, a, b)
    }

    pub fn div(a: Expression, b: Expression) -> Expression {
        if b.is_one() {
            return a;
        }
        if a.is_zero() && !b.is_zero() {
            return Expression::Literal(0.0);
        }
        Self::fold_binary(BinOp::Div, a, b)
    }

    pub fn pow(a: Expression, b: Expression) -> Expression {
        if b.is_zero() {
            return Expression::Literal(1.0);
        }
        if b.is_one() {
            return a;
        }
        Self::fold_binary(BinOp::Pow, a, b)
    }

    pub fn call(func: Func, a: Expression) -> Expression {
        if let Some(v) = a.as_literal() {
            if let Ok(y) = func.apply(v) {
                return Expression::Literal(y);
            }
        }
        Expression::Call(func, Arc::new(a))
    }

    fn fold_binary(op: BinOp, a: Expression, b: Expression) -> Expression {
        if let (Some(x), Some(y)) = (a.as_literal(), b.as_literal()) {
            if let Ok(v) = apply_binary(op, x, y) {
                return Expression::Literal(v);
            }
        }
        Expression::Binary(op, Arc::new(a), Arc::new(b))
    }

    /// Exact partial derivative with respect to `var`.
    pub fn differentiate(&self, var: &str) -> Expression {
        diff::differentiate(self, var)
    }

    /// Repeated differentiation along the listed variables, in order.
    pub fn differentiate_along(&self, vars: &[&str]) -> Expression {
        vars.iter().fold(self.clone(), |e, v| e.differentiate(v))
    }

    pub fn evaluate(&self, bindings: &HashMap<String, f64>) -> Result<f64, EvalError> {
        match self {
            Expression::Literal(v) => Ok(*v),
            Expression::Symbol(name) => bindings
                .get(name.as_ref())
                .copied()
                .ok_or_else(|| EvalError::Unbound(name.to_string())),
            Expression::Neg(a) => Ok(-a.evaluate(bindings)?),
            Expression::Binary(op, a, b) => {
                apply_binary(*op, a.evaluate(bindings)?, b.evaluate(bindings)?)
            }
            Expression::Call(f, a) => f.apply(a.evaluate(bindings)?),
        }
    }

    /// Compile against an ordered list of coordinate names. Every free
    /// symbol must appear in `vars`.
    pub fn compile(&self, vars: &[String]) -> Result<CompiledExpr, EvalError> {
        CompiledExpr::new(self, vars)
    }

    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        match self {
            Expression::Literal(_) => {}
            Expression::Symbol(s) => {
                out.insert(s.to_string());
            }
            Expression::Neg(a) | Expression::Call(_, a) => a.collect_symbols(out),
            Expression::Binary(_, a, b) => {
                a.collect_symbols(out);
                b.collect_symbols(out);
            }
        }
    }

    pub fn depends_on(&self, var: &str) -> bool {
        match self {
            Expression::Literal(_) => false,
            Expression::Symbol(s) => s.as_ref() == var,
            Expression::Neg(a) | Expression::Call(_, a) => a.depends_on(var),
            Expression::Binary(_, a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    /// Replace every occurrence of the symbol `name` by `with`, folding
    /// constants on the way back up.
    pub fn substitute(&self, name: &str, with: &Expression) -> Expression {
        match self {
            Expression::Literal(_) => self.clone(),
            Expression::Symbol(s) => {
                if s.as_ref() == name {
                    with.clone()
                } else {
                    self.clone()
                }
            }
            Expression::Neg(a) => Expression::neg(a.substitute(name, with)),
            Expression::Binary(op, a, b) => {
                let (a, b) = (a.substitute(name, with), b.substitute(name, with));
                match op {
                    BinOp::Add => Expression::add(a, b),
                    BinOp::Sub => Expression::sub(a, b),
                    BinOp::Mul => Expression::mul(a, b),
                    BinOp::Div => Expression::div(a, b),
                    BinOp::Pow => Expression::pow(a, b),
                }
            }
            Expression::Call(f, a) => Expression::call(*f, a.substitute(name, with)),
        }
    }

    /// Substitute numeric values for parameter symbols.
    pub fn bind_parameters(&self, params: &HashMap<String, f64>) -> Expression {
        params.iter().fold(self.clone(), |e, (k, v)| {
            e.substitute(k, &Expression::Literal(*v))
        })
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expression::Literal(_) | Expression::Symbol(_) => 1,
            Expression::Neg(a) | Expression::Call(_, a) => 1 + a.node_count(),
            Expression::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expression::Literal(v) if *v < 0.0 => 3,
            Expression::Literal(_) | Expression::Symbol(_) | Expression::Call(..) => 5,
            Expression::Neg(_) => 3,
            Expression::Binary(op, ..) => op.precedence(),
        }
    }
}

impl From<f64> for Expression {
    fn from(v: f64) -> Self {
        Expression::Literal(v)
    }
}

impl std::str::FromStr for Expression {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expression, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Renders with the minimum parentheses needed for the rendered text to
/// parse back to the same tree.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Literal(v) => {
                if *v < 0.0 {
                    write!(f, "-{}", -v)
                } else {
                    write!(f, "{v}")
                }
            }
            Expression::Symbol(s) => write!(f, "{s}"),
            Expression::Neg(a) => {
                f.write_str("-")?;
                write_child(f, a, a.precedence() < 3)
            }
            Expression::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expression::Binary(op, a, b) => {
                let p = op.precedence();
                if *op == BinOp::Pow {
                    // base must be an atom; exponent may be unary or power
                    write_child(f, a, a.precedence() <= p)?;
                    f.write_str("^")?;
                    write_child(f, b, b.precedence() < 3)
                } else {
                    write_child(f, a, a.precedence() < p)?;
                    write!(f, "{}", op.symbol())?;
                    write_child(f, b, b.precedence() <= p)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bind(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn evaluate_sum() {
        let e = parse("x+y").unwrap();
        assert_eq!(e.evaluate(&bind(&[("x", 1.0), ("y", 2.0)])).unwrap(), 3.0);
    }

    #[test]
    fn division_by_zero_is_domain_error() {
        let e = parse("1/x").unwrap();
        assert!(matches!(
            e.evaluate(&bind(&[("x", 0.0)])),
            Err(EvalError::Domain(_))
        ));
    }

    #[test]
    fn log_of_negative_is_domain_error() {
        let e = parse("log(x)").unwrap();
        assert!(matches!(
            e.evaluate(&bind(&[("x", -1.0)])),
            Err(EvalError::Domain(_))
        ));
    }

    #[test]
    fn unbound_symbol_reported() {
        let e = parse("x*z").unwrap();
        assert_eq!(
            e.evaluate(&bind(&[("x", 1.0)])),
            Err(EvalError::Unbound("z".into()))
        );
    }

    #[test]
    fn fractional_power_needs_positive_base() {
        let e = parse("x^0.5").unwrap();
        assert!((e.evaluate(&bind(&[("x", 4.0)])).unwrap() - 2.0).abs() < 1e-15);
        assert!(e.evaluate(&bind(&[("x", -4.0)])).is_err());
        let sq = parse("x^2").unwrap();
        assert_eq!(sq.evaluate(&bind(&[("x", -3.0)])).unwrap(), 9.0);
    }

    #[test]
    fn corollary_lambda_at_origin() {
        // lambda = (2-m-n)/2 * exp(-2 xi) + c1 with c1 = 0, m = 2, n = 3
        let e = parse("(2-m-n)/2*exp(-2*xi) + c1").unwrap();
        let v = e
            .evaluate(&bind(&[("m", 2.0), ("n", 3.0), ("xi", 0.0), ("c1", 0.0)]))
            .unwrap();
        assert_eq!(v, -1.5);
    }

    #[test]
    fn render_examples() {
        for (src, want) in [
            ("a-(b-c)", "a-(b-c)"),
            ("(a-b)-c", "a-b-c"),
            ("a^b^c", "a^b^c"),
            ("(a^b)^c", "(a^b)^c"),
            ("-x^2", "-x^2"),
            ("(-x)^2", "(-x)^2"),
            ("2^-x", "2^-x"),
            ("a/(b*c)", "a/(b*c)"),
            ("-(a+b)", "-(a+b)"),
            ("sinh(t)", "sinh(t)"),
        ] {
            assert_eq!(parse(src).unwrap().to_string(), want, "{src}");
        }
    }

    #[test]
    fn substitute_folds() {
        let e = parse("x*y + 0*z").unwrap();
        let s = e.substitute("x", &Expression::literal(0.0));
        assert_eq!(s.evaluate(&bind(&[("y", 5.0), ("z", 1.0)])).unwrap(), 0.0);
        assert!(!s.depends_on("x"));
    }
}

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Coordinate chart: ordered coordinate names and a closed domain box.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    names: Vec<String>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Chart {
    pub fn new<S: AsRef<str>>(names: &[S], lower: &[f64], upper: &[f64]) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::Invalid("chart needs at least one coordinate".into()));
        }
        if lower.len() != n || upper.len() != n {
            return Err(Error::Dimension(format!(
                "{n} coordinates but bounds of length {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (a, b)) in lower.iter().zip(upper).enumerate() {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(Error::Invalid(format!(
                    "interval for `{}` is degenerate: [{a}, {b}]",
                    names[i].as_ref()
                )));
            }
        }
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(Error::Invalid(format!("duplicate coordinate `{a}`")));
            }
        }
        Ok(Chart { names, lower: lower.to_vec(), upper: upper.to_vec() })
    }

    /// Chart with the same box `[lo, hi]` on every axis.
    pub fn cube<S: AsRef<str>>(names: &[S], lo: f64, hi: f64) -> Result<Self> {
        let n = names.len();
        Chart::new(names, &vec![lo; n], &vec![hi; n])
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (a, b))| *x >= *a && *x <= *b)
    }

    /// Product chart; coordinate names must be disjoint.
    pub fn product(&self, other: &Chart) -> Result<Chart> {
        let names: Vec<&String> = self.names.iter().chain(other.names.iter()).collect();
        let lower: Vec<f64> = self.lower.iter().chain(&other.lower).copied().collect();
        let upper: Vec<f64> = self.upper.iter().chain(&other.upper).copied().collect();
        Chart::new(&names, &lower, &upper)
    }

    /// Grid with `count` points per axis spanning the whole domain.
    pub fn grid(&self, count: usize) -> Grid {
        Grid {
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            counts: vec![count; self.dim()],
        }
    }
}

/// Tensor-product sampling grid. Points are enumerated lexicographically
/// with the last axis varying fastest, which fixes the reduction order.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    counts: Vec<usize>,
}

impl Grid {
    pub fn new(lower: &[f64], upper: &[f64], counts: &[usize]) -> Result<Self> {
        if lower.len() != upper.len() || lower.len() != counts.len() || lower.is_empty() {
            return Err(Error::Dimension("grid bounds and counts must match".into()));
        }
        if counts.contains(&0) {
            return Err(Error::Invalid("grid axis with zero points".into()));
        }
        if lower.iter().zip(upper).any(|(a, b)| a > b) {
            return Err(Error::Invalid("grid lower bound exceeds upper bound".into()));
        }
        Ok(Grid { lower: lower.to_vec(), upper: upper.to_vec(), counts: counts.to_vec() })
    }

    pub fn uniform(lower: &[f64], upper: &[f64], count: usize) -> Result<Self> {
        Grid::new(lower, upper, &vec![count; lower.len()])
    }

    pub fn cube(dim: usize, lo: f64, hi: f64, count: usize) -> Result<Self> {
        Grid::new(&vec![lo; dim], &vec![hi; dim], &vec![count; dim])
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    fn axis_value(&self, axis: usize, k: usize) -> f64 {
        let (a, b, c) = (self.lower[axis], self.upper[axis], self.counts[axis]);
        if c == 1 {
            0.5 * (a + b)
        } else {
            a + (b - a) * k as f64 / (c - 1) as f64
        }
    }

    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let d = self.dim();
        let mut p = vec![0.0; d];
        for axis in (0..d).rev() {
            let c = self.counts[axis];
            p[axis] = self.axis_value(axis, index % c);
            index /= c;
        }
        p
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Cartesian product, `self` axes first.
    pub fn product(&self, other: &Grid) -> Grid {
        Grid {
            lower: self.lower.iter().chain(&other.lower).copied().collect(),
            upper: self.upper.iter().chain(&other.upper).copied().collect(),
            counts: self.counts.iter().chain(&other.counts).copied().collect(),
        }
    }

    /// Same counts on the box shrunk by `margin` on every side (axes too
    /// short to shrink collapse to their midpoint).
    pub fn inset(&self, margin: f64) -> Grid {
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        for i in 0..self.dim() {
            if upper[i] - lower[i] > 2.0 * margin {
                lower[i] += margin;
                upper[i] -= margin;
            } else {
                let mid = 0.5 * (lower[i] + upper[i]);
                lower[i] = mid;
                upper[i] = mid;
            }
        }
        Grid { lower, upper, counts: self.counts.clone() }
    }

    /// Human-readable spec used in reports; fixed formatting.
    pub fn describe(&self) -> String {
        let counts: Vec<String> = self.counts.iter().map(|c| c.to_string()).collect();
        let boxes: Vec<String> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| format!("[{a:.6},{b:.6}]"))
            .collect();
        format!("{} on {}", counts.join("x"), boxes.join("x"))
    }

    /// Evaluate `f` at every grid point in parallel. Results come back in
    /// grid order and the first failing point (in that order) is reported.
    pub fn sweep<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&[f64]) -> Result<T> + Sync + Send,
    {
        let results: Vec<Result<T>> = (0..self.len())
            .into_par_iter()
            .map(|i| f(&self.point(i)))
            .collect();
        results.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_rejects_degenerate_interval() {
        assert!(Chart::new(&["x"], &[1.0], &[1.0]).is_err());
        assert!(Chart::new(&["x", "x"], &[0.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(Chart::new::<&str>(&[], &[], &[]).is_err());
    }

    #[test]
    fn grid_enumeration_order() {
        let g = Grid::new(&[0.0, 0.0], &[1.0, 2.0], &[2, 3]).unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], vec![0.0, 0.0]);
        assert_eq!(pts[1], vec![0.0, 1.0]);
        assert_eq!(pts[5], vec![1.0, 2.0]);
    }

    #[test]
    fn sweep_preserves_order() {
        let g = Grid::cube(2, -1.0, 1.0, 5).unwrap();
        let v = g.sweep(|p| Ok(p[0] * 10.0 + p[1])).unwrap();
        let direct: Vec<f64> = g.points().iter().map(|p| p[0] * 10.0 + p[1]).collect();
        assert_eq!(v, direct);
    }
}

//! Uniformly sampled functions and cubic-spline reconstruction.
//!
//! A [`GridFn`] holds samples of a function on a uniform grid, optionally
//! with exact first-derivative samples alongside (integrators produce
//! both). [`Spline`] is the natural cubic interpolant of a grid; it can
//! report value and first three derivatives at any interior point. Spline
//! derivative accuracy degrades with order: values converge as h^4, first
//! derivatives as h^3, second as h^2, and the piecewise-constant third
//! derivative only as h, with additional loss near the natural ends.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("grid step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("grid needs at least {min} nodes, got {got}")]
    TooShort { min: usize, got: usize },
    #[error("non-finite sample at node {index}")]
    NonFinite { index: usize },
    #[error("derivative track has {got} samples for {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("x = {x} is outside the grid [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
}

/// Minimum node count: the widest derivative stencil used anywhere in the
/// crate spans five nodes.
pub const MIN_NODES: usize = 5;

/// Samples of a function on the uniform grid `start + i*step`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    start: f64,
    step: f64,
    values: Vec<f64>,
    derivs: Option<Vec<f64>>,
}

impl GridFn {
    pub fn new(start: f64, step: f64, values: Vec<f64>) -> Result<GridFn, GridError> {
        Self::build(start, step, values, None)
    }

    /// Grid carrying exact first-derivative samples alongside the values.
    pub fn with_derivs(
        start: f64,
        step: f64,
        values: Vec<f64>,
        derivs: Vec<f64>,
    ) -> Result<GridFn, GridError> {
        Self::build(start, step, values, Some(derivs))
    }

    fn build(
        start: f64,
        step: f64,
        values: Vec<f64>,
        derivs: Option<Vec<f64>>,
    ) -> Result<GridFn, GridError> {
        if !(step.is_finite() && step > 0.0) || !start.is_finite() {
            return Err(GridError::BadStep(step));
        }
        if values.len() < MIN_NODES {
            return Err(GridError::TooShort { min: MIN_NODES, got: values.len() });
        }
        for (index, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(GridError::NonFinite { index });
            }
        }
        if let Some(d) = &derivs {
            if d.len() != values.len() {
                return Err(GridError::LengthMismatch { expected: values.len(), got: d.len() });
            }
            for (index, v) in d.iter().enumerate() {
                if !v.is_finite() {
                    return Err(GridError::NonFinite { index });
                }
            }
        }
        Ok(GridFn { start, step, values, derivs })
    }

    pub fn sample(
        start: f64,
        step: f64,
        n: usize,
        f: impl Fn(f64) -> f64,
    ) -> Result<GridFn, GridError> {
        let values = (0..n).map(|i| f(start + step * i as f64)).collect();
        Self::build(start, step, values, None)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn end(&self) -> f64 {
        self.x(self.values.len() - 1)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivs(&self) -> Option<&[f64]> {
        self.derivs.as_deref()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Truncates to the first `n` nodes, dropping the rest.
    pub fn truncate(&mut self, n: usize) -> Result<(), GridError> {
        if n < MIN_NODES {
            return Err(GridError::TooShort { min: MIN_NODES, got: n });
        }
        if n < self.values.len() {
            self.values.truncate(n);
            if let Some(d) = &mut self.derivs {
                d.truncate(n);
            }
        }
        Ok(())
    }
}

/// Natural cubic spline through a grid (second derivative zero at the
/// ends). Piece `i` covers `[x_i, x_{i+1}]` with local polynomial
/// `y_i + B t + C t^2 + D t^3`.
#[derive(Debug, Clone)]
pub struct Spline {
    start: f64,
    step: f64,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl Spline {
    pub fn fit(g: &GridFn) -> Spline {
        let n = g.len();
        let h = g.step();
        let y = g.values().to_vec();
        let mut m = vec![0.0; n];
        // Tridiagonal system for interior second derivatives:
        // m[i-1] + 4 m[i] + m[i+1] = 6 (y[i-1] - 2 y[i] + y[i+1]) / h^2
        let interior = n - 2;
        if interior > 0 {
            let mut diag = vec![4.0; interior];
            let mut rhs: Vec<f64> = (1..n - 1)
                .map(|i| 6.0 * (y[i - 1] - 2.0 * y[i] + y[i + 1]) / (h * h))
                .collect();
            for i in 1..interior {
                let w = 1.0 / diag[i - 1];
                diag[i] -= w;
                rhs[i] -= w * rhs[i - 1];
            }
            m[interior] = rhs[interior - 1] / diag[interior - 1];
            for i in (1..interior).rev() {
                m[i] = (rhs[i - 1] - m[i + 1]) / diag[i - 1];
            }
        }
        Spline { start: g.start(), step: h, y, m }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.start + self.step * (self.y.len() - 1) as f64
    }

    /// Value and first three derivatives at `x`. The third derivative is
    /// constant on each piece.
    pub fn eval_derivs(&self, x: f64) -> Result<[f64; 4], GridError> {
        let lo = self.start;
        let hi = self.end();
        if !(lo..=hi).contains(&x) {
            return Err(GridError::OutOfDomain { x, lo, hi });
        }
        let h = self.step;
        let mut i = ((x - lo) / h).floor() as usize;
        if i >= self.y.len() - 1 {
            i = self.y.len() - 2;
        }
        let t = x - (lo + h * i as f64);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let b = (self.y[i + 1] - self.y[i]) / h - h * (2.0 * m0 + m1) / 6.0;
        let c = m0 / 2.0;
        let d = (m1 - m0) / (6.0 * h);
        Ok([
            self.y[i] + t * (b + t * (c + t * d)),
            b + t * (2.0 * c + t * 3.0 * d),
            2.0 * c + 6.0 * d * t,
            6.0 * d,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(
            GridFn::new(0.0, -1.0, vec![0.0; 10]),
            Err(GridError::BadStep(_))
        ));
        assert!(matches!(
            GridFn::new(0.0, 0.1, vec![0.0; 3]),
            Err(GridError::TooShort { .. })
        ));
        assert!(matches!(
            GridFn::new(0.0, 0.1, vec![0.0, 1.0, f64::NAN, 0.0, 0.0]),
            Err(GridError::NonFinite { index: 2 })
        ));
    }

    #[test]
    fn spline_reproduces_smooth_function() {
        let h = 1e-2;
        let g = GridFn::sample(0.0, h, 301, f64::sin).unwrap();
        let s = Spline::fit(&g);
        // Probe at an off-knot interior point.
        let x = 1.5037;
        let [v, d1, d2, d3] = s.eval_derivs(x).unwrap();
        assert!((v - x.sin()).abs() < 1e-8, "value err {}", (v - x.sin()).abs());
        assert!((d1 - x.cos()).abs() < 1e-6, "d1 err {}", (d1 - x.cos()).abs());
        assert!((d2 + x.sin()).abs() < 1e-4, "d2 err {}", (d2 + x.sin()).abs());
        assert!((d3 + x.cos()).abs() < 2e-2, "d3 err {}", (d3 + x.cos()).abs());
    }

    #[test]
    fn spline_is_exact_on_straight_lines() {
        let g = GridFn::sample(0.0, 0.5, 9, |x| 3.0 * x - 1.0).unwrap();
        let s = Spline::fit(&g);
        let [v, d1, d2, _] = s.eval_derivs(1.23).unwrap();
        assert!((v - (3.0 * 1.23 - 1.0)).abs() < 1e-12);
        assert!((d1 - 3.0).abs() < 1e-12);
        assert!(d2.abs() < 1e-12);
    }

    #[test]
    fn spline_rejects_out_of_domain() {
        let g = GridFn::sample(0.0, 0.1, 11, f64::sin).unwrap();
        let s = Spline::fit(&g);
        assert!(matches!(s.eval_derivs(1.2), Err(GridError::OutOfDomain { .. })));
    }
}

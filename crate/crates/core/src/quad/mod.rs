//! The one-dimensional integration experiment: an oscillatory test
//! function, Monte Carlo and trapezoidal estimators of
//! `I = ∫ f'(x) dξ(x)`, and the convergence study that compares them.

mod experiment;
mod tail;

pub use experiment::{
    build_sample_curve, convergence_study, estimator_registry, fit_loglog_slope, log_spaced_counts,
    reference_value, variance_ratio, ConvergenceRow, Estimator, IntegrationExperiment, McByParts,
    McDirect, Reference, SampledCurve, SamplingMode, Trapezoid,
};
pub use tail::{tail_slope, TailSlope};

use crate::error::{Error, Result};

/// `f(x) = ((x - a)(x + a) sin(K x²))²` on `[-a, a]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatoryF {
    a: f64,
    k: f64,
}

impl OscillatoryF {
    pub fn new(a: f64, k: f64) -> Result<Self> {
        if a > 0.0 && k > 0.0 && a.is_finite() && k.is_finite() {
            Ok(Self { a, k })
        } else {
            Err(Error::InvalidArgument(format!(
                "oscillatory function needs a > 0 and K > 0, got a={a}, K={k}"
            )))
        }
    }

    pub fn half_width(&self) -> f64 {
        self.a
    }

    pub fn oscillation(&self) -> f64 {
        self.k
    }

    pub fn value(&self, x: f64) -> f64 {
        let p = x * x - self.a * self.a;
        let s = (self.k * x * x).sin();
        let ps = p * s;
        ps * ps
    }

    /// `4 x P S (S + K P cos(K x²))` with `P = x² - a²`, `S = sin(K x²)`.
    pub fn deriv(&self, x: f64) -> f64 {
        let p = x * x - self.a * self.a;
        let (s, c) = (self.k * x * x).sin_cos();
        4.0 * x * p * s * (s + self.k * p * c)
    }
}

/// Pairwise (cascade) summation; the order of additions depends only on
/// the slice length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// Monte Carlo estimate `(1/N) Σ h(xⁱ)` for samples drawn from a
/// probability measure.
pub fn mc_estimate(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(pairwise_sum(values) / values.len() as f64)
}

/// Unbiased sample variance.
pub fn sample_variance(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::TooFewSamples {
            got: values.len(),
            need: 2,
        });
    }
    let mean = mc_estimate(values)?;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    Ok(pairwise_sum(&sq) / (values.len() - 1) as f64)
}

/// Composite trapezoidal rule on a uniform grid.
pub fn trapezoid(values: &[f64], grid: &[f64]) -> Result<f64> {
    if values.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} values for {} grid points",
            values.len(),
            grid.len()
        )));
    }
    if grid.len() < 2 {
        return Err(Error::TooFewSamples {
            got: grid.len(),
            need: 2,
        });
    }
    let n = grid.len() - 1;
    let h = (grid[n] - grid[0]) / n as f64;
    if !(h > 0.0) {
        return Err(Error::GridMismatch("grid must be increasing".into()));
    }
    let tol = 1e-6 * h;
    for (j, w) in grid.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > tol {
            return Err(Error::GridMismatch(format!(
                "non-uniform spacing at interval {j}: {} vs {h}",
                w[1] - w[0]
            )));
        }
    }
    let interior = pairwise_sum(values) - 0.5 * (values[0] + values[n]);
    Ok(h * interior)
}

/// Piecewise-linear interpolant; held constant beyond the end
/// breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Interp1D {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Interp1D {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::GridMismatch(format!(
                "{} breakpoints for {} values",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 2 {
            return Err(Error::TooFewSamples {
                got: xs.len(),
                need: 2,
            });
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "Interp1D data" });
        }
        if let Some(j) = xs.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::GridMismatch(format!(
                "breakpoints not strictly increasing at index {j}"
            )));
        }
        Ok(Self { xs, ys })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let j = self.xs.partition_point(|&b| b <= x) - 1;
        self.lerp(j, x)
    }

    fn lerp(&self, j: usize, x: f64) -> f64 {
        let (x0, x1) = (self.xs[j], self.xs[j + 1]);
        let t = (x - x0) / (x1 - x0);
        self.ys[j] + t * (self.ys[j + 1] - self.ys[j])
    }

    /// Evaluates at non-decreasing query points with a moving cursor.
    pub fn eval_sorted(&self, queries: &[f64]) -> Vec<f64> {
        let n = self.xs.len();
        let mut j = 0;
        queries
            .iter()
            .map(|&x| {
                if x <= self.xs[0] {
                    return self.ys[0];
                }
                if x >= self.xs[n - 1] {
                    return self.ys[n - 1];
                }
                while self.xs[j + 1] <= x {
                    j += 1;
                }
                self.lerp(j, x)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::uniform_nodes;
    use proptest::prelude::*;

    #[test]
    fn f_vanishes_at_ends_and_origin() {
        let f = OscillatoryF::new(2.0199, 1e5).unwrap();
        for x in [-2.0199, 2.0199] {
            assert_eq!(f.value(x), 0.0);
            assert_eq!(f.deriv(x), 0.0);
        }
        assert_eq!(f.value(0.0), 0.0);
        assert!(OscillatoryF::new(-1.0, 1.0).is_err());
        assert!(OscillatoryF::new(1.0, 0.0).is_err());
    }

    #[test]
    fn f_deriv_matches_central_difference() {
        let f = OscillatoryF::new(2.0199, 10.0).unwrap();
        let h = 1e-7;
        for x in [1.0, -0.4, 1.7] {
            let fd = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
            let d = f.deriv(x);
            assert!((fd - d).abs() <= 1e-6 * d.abs(), "x={x}: {fd} vs {d}");
        }
    }

    #[test]
    fn mc_examples() {
        assert_eq!(mc_estimate(&[2.5; 17]).unwrap(), 2.5);
        assert_eq!(mc_estimate(&[]), Err(Error::EmptySample));
        assert_eq!(sample_variance(&[1.0, 3.0]).unwrap(), 2.0);
    }

    #[test]
    fn trapezoid_examples() {
        let a = 2.0199;
        let grid = uniform_nodes(-a, a, 101);
        let ones = vec![1.0; 101];
        assert!((trapezoid(&ones, &grid).unwrap() - 2.0 * a).abs() < 1e-14);
        let lin: Vec<f64> = grid.iter().map(|x| 3.0 * x + 1.0).collect();
        assert!((trapezoid(&lin, &grid).unwrap() - 2.0 * a).abs() < 1e-13);
        assert!(matches!(trapezoid(&ones[..5], &grid), Err(Error::GridMismatch(_))));
        let bent = vec![0.0, 1.0, 3.0];
        assert!(matches!(trapezoid(&[1.0; 3], &bent), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn trapezoid_self_convergence_k10() {
        // N = 1e6 against N = 1e7 on the smooth K = 10 integrand
        let f = OscillatoryF::new(2.0199, 10.0).unwrap();
        let run = |n: usize| {
            let g = uniform_nodes(-2.0199, 2.0199, n);
            let v: Vec<f64> = g.iter().map(|&x| f.deriv(x) * (1.0 + 0.1 * x)).collect();
            trapezoid(&v, &g).unwrap()
        };
        let (coarse, fine) = (run(1_000_000), run(10_000_000));
        assert!((coarse - fine).abs() <= 1e-5 * fine.abs(), "{coarse} vs {fine}");
    }

    #[test]
    fn interp_basics() {
        let it = Interp1D::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(it.eval(0.5), 1.0);
        assert_eq!(it.eval(2.0), 1.0);
        assert_eq!(it.eval(-1.0), 0.0);
        assert_eq!(it.eval(5.0), 0.0);
        assert_eq!(it.eval(1.0), 2.0);
        assert_eq!(it.eval_sorted(&[-1.0, 0.5, 1.0, 2.0, 5.0]), vec![0.0, 1.0, 2.0, 1.0, 0.0]);
        assert!(Interp1D::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Interp1D::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn mc_scales_linearly_and_ignores_order(v in prop::collection::vec(-100.0f64..100.0, 1..300), alpha in -4.0f64..4.0) {
            let base = mc_estimate(&v).unwrap();
            // power-of-two scaling is exact
            let scaled: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
            prop_assert_eq!(mc_estimate(&scaled).unwrap(), 2.0 * base);
            let gen: Vec<f64> = v.iter().map(|x| alpha * x).collect();
            prop_assert!((mc_estimate(&gen).unwrap() - alpha * base).abs() <= 1e-12 * (1.0 + (alpha * base).abs()) * 100.0);
            let mut rev = v.clone();
            rev.reverse();
            prop_assert!((mc_estimate(&rev).unwrap() - base).abs() <= 1e-12 * 100.0);
        }

        #[test]
        fn sorted_eval_matches_pointwise(mut q in prop::collection::vec(-1.0f64..4.0, 1..50)) {
            let it = Interp1D::new(vec![0.0, 0.5, 1.5, 3.0], vec![1.0, -1.0, 2.0, 0.5]).unwrap();
            q.sort_by(f64::total_cmp);
            let a = it.eval_sorted(&q);
            for (x, y) in q.iter().zip(a) {
                prop_assert_eq!(it.eval(*x), y);
            }
        }
    }
}

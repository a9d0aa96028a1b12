use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{mc_estimate, sample_variance, trapezoid, Interp1D, OscillatoryF};
use crate::chart::{uniform_nodes, TrajectoryChart};
use crate::density::density_line;
use crate::dynsys::VanDerPolScenario;
use crate::error::{Error, Result};
use crate::registry::Registry;

/// Samples of the half-period Van der Pol chart `x(ξ) = u(ξ T½)` at
/// `ξ_i = i/(N-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    pub xi: Vec<f64>,
    pub x: Vec<f64>,
    pub dudt: Vec<f64>,
    /// `NaN` where `undefined` is set.
    pub rho: Vec<f64>,
    /// `NaN` where `undefined` is set.
    pub g: Vec<f64>,
    /// Cumulative polyline length.
    pub arclen: Vec<f64>,
    /// Endpoints and any sample where the slope vanishes.
    pub undefined: Vec<bool>,
    pub t_half: f64,
}

impl SampledCurve {
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// Indices where `ρ` and `g` are defined.
    pub fn defined(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| !self.undefined[i])
    }
}

/// Integrates the half period with `Δt = T½/(N-1)` (substepped when
/// that exceeds the scenario step) and evaluates `ρ`
/// and `g` at every sample; the two endpoints are always flagged.
pub fn build_sample_curve(scn: &VanDerPolScenario, n: usize) -> Result<SampledCurve> {
    if n < 2 {
        return Err(Error::TooFewSamples { got: n, need: 2 });
    }
    let chart = TrajectoryChart::vdp_half_period(scn)?;
    let samples = chart.sample_uniform(n)?;
    let mut out = SampledCurve {
        xi: samples.xi,
        x: Vec::with_capacity(n),
        dudt: Vec::with_capacity(n),
        rho: Vec::with_capacity(n),
        g: Vec::with_capacity(n),
        arclen: Vec::with_capacity(n),
        undefined: Vec::with_capacity(n),
        t_half: chart.span(),
    };
    let mut len = 0.0;
    for (i, (jet, state)) in samples.jets.iter().zip(&samples.states).enumerate() {
        let x = jet.x()[0];
        if let Some(prev) = out.x.last() {
            len += (x - prev).abs();
        }
        let endpoint = i == 0 || i == n - 1;
        let eval = if endpoint || state[1] <= 0.0 {
            None
        } else {
            density_line(jet).ok()
        };
        out.x.push(x);
        out.dudt.push(state[1]);
        out.arclen.push(len);
        match eval {
            Some(d) => {
                out.rho.push(d.rho);
                out.g.push(d.g[0]);
                out.undefined.push(false);
            }
            None => {
                out.rho.push(f64::NAN);
                out.g.push(f64::NAN);
                out.undefined.push(true);
            }
        }
    }
    Ok(out)
}

/// How the sequence `x¹ … xᴺ` distributed by the chart is generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingMode {
    /// `xⁱ = x((i-1)/(N-1))`; the first and last samples are endpoints.
    Equispaced,
    /// `ξ` drawn uniformly from a seeded generator.
    Random { seed: u64 },
}

/// Interpolated `x(ξ)`, `ρ(x)` and `g(x)` built once from a base curve,
/// then reused for every sample count.
#[derive(Debug, Clone)]
pub struct IntegrationExperiment {
    pub f: OscillatoryF,
    pub sampling: SamplingMode,
    x_of_xi: Interp1D,
    rho_of_x: Interp1D,
    g_of_x: Interp1D,
}

impl IntegrationExperiment {
    pub fn new(curve: &SampledCurve, f: OscillatoryF, sampling: SamplingMode) -> Result<Self> {
        let x_of_xi = Interp1D::new(curve.xi.clone(), curve.x.clone())?;
        let idx: Vec<usize> = curve.defined().collect();
        let xs: Vec<f64> = idx.iter().map(|&i| curve.x[i]).collect();
        let rho_of_x = Interp1D::new(xs.clone(), idx.iter().map(|&i| curve.rho[i]).collect())?;
        let g_of_x = Interp1D::new(xs, idx.iter().map(|&i| curve.g[i]).collect())?;
        Ok(Self {
            f,
            sampling,
            x_of_xi,
            rho_of_x,
            g_of_x,
        })
    }

    pub fn rho(&self, x: f64) -> f64 {
        self.rho_of_x.eval(x)
    }

    pub fn g(&self, x: f64) -> f64 {
        self.g_of_x.eval(x)
    }

    /// The `n` sample points, each with an endpoint flag.
    pub fn sequence(&self, n: usize) -> Result<Vec<(f64, bool)>> {
        if n < 2 {
            return Err(Error::TooFewSamples { got: n, need: 2 });
        }
        Ok(match self.sampling {
            SamplingMode::Equispaced => {
                let xi: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
                self.x_of_xi
                    .eval_sorted(&xi)
                    .into_iter()
                    .enumerate()
                    .map(|(i, x)| (x, i == 0 || i == n - 1))
                    .collect()
            }
            SamplingMode::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).rotate_left(32));
                (0..n)
                    .map(|_| (self.x_of_xi.eval(rng.gen::<f64>()), false))
                    .collect()
            }
        })
    }
}

/// An estimator of `I` selectable by name.
pub trait Estimator: Send + Sync {
    fn name(&self) -> &str;

    fn estimate(&self, exp: &IntegrationExperiment, n: usize) -> Result<f64>;
}

/// `(1/N) Σ f'(xⁱ)`
pub struct McDirect;

/// `-(1/N) Σ f(xⁱ) g(xⁱ)`, endpoint samples contributing zero.
pub struct McByParts;

/// Trapezoidal rule of `f'(x) ρ(x)` on a uniform `N`-point grid over `[-a, a]`.
pub struct Trapezoid;

impl Estimator for McDirect {
    fn name(&self) -> &str {
        "mc-direct"
    }

    fn estimate(&self, exp: &IntegrationExperiment, n: usize) -> Result<f64> {
        let values: Vec<f64> = exp.sequence(n)?.iter().map(|(x, _)| exp.f.deriv(*x)).collect();
        mc_estimate(&values)
    }
}

impl Estimator for McByParts {
    fn name(&self) -> &str {
        "mc-by-parts"
    }

    fn estimate(&self, exp: &IntegrationExperiment, n: usize) -> Result<f64> {
        let values: Vec<f64> = exp
            .sequence(n)?
            .iter()
            .map(|&(x, end)| if end { 0.0 } else { exp.f.value(x) * exp.g(x) })
            .collect();
        Ok(-mc_estimate(&values)?)
    }
}

impl Estimator for Trapezoid {
    fn name(&self) -> &str {
        "trapezoid"
    }

    fn estimate(&self, exp: &IntegrationExperiment, n: usize) -> Result<f64> {
        let a = exp.f.half_width();
        let grid = uniform_nodes(-a, a, n.max(2));
        let rho = exp.rho_of_x.eval_sorted(&grid);
        let values: Vec<f64> = grid.iter().zip(&rho).map(|(&x, r)| exp.f.deriv(x) * r).collect();
        trapezoid(&values, &grid)
    }
}

pub fn estimator_registry() -> Registry<dyn Estimator> {
    let mut reg: Registry<dyn Estimator> = Registry::new("estimator");
    reg.register("mc-direct", "Monte Carlo mean of f'", || Box::new(McDirect));
    reg.register("mc-by-parts", "Monte Carlo mean of -f g", || Box::new(McByParts));
    reg.register("trapezoid", "trapezoidal rule of f' rho", || Box::new(Trapezoid));
    reg
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub n: usize,
    pub value: f64,
    /// Trapezoid at `n/2`, used to judge the reference.
    pub check: f64,
    pub rel_diff: f64,
}

/// Trapezoid reference at `n`, with a half-resolution consistency check.
pub fn reference_value(exp: &IntegrationExperiment, n: usize) -> Result<Reference> {
    let value = Trapezoid.estimate(exp, n)?;
    let check = Trapezoid.estimate(exp, n / 2)?;
    Ok(Reference {
        n,
        value,
        check,
        rel_diff: (value - check).abs() / value.abs(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub method: String,
    pub estimate: f64,
    pub rel_error: f64,
}

pub fn convergence_study(
    exp: &IntegrationExperiment,
    counts: &[usize],
    reference: f64,
    estimators: &[Box<dyn Estimator>],
) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::with_capacity(counts.len() * estimators.len());
    for &n in counts {
        for est in estimators {
            let estimate = est.estimate(exp, n)?;
            rows.push(ConvergenceRow {
                n,
                method: est.name().to_string(),
                estimate,
                rel_error: (estimate - reference).abs() / reference.abs(),
            });
        }
    }
    Ok(rows)
}

/// Roughly `per_decade` log-spaced counts from `lo` to `hi` inclusive.
pub fn log_spaced_counts(lo: usize, hi: usize, per_decade: usize) -> Vec<usize> {
    assert!(lo >= 1 && hi >= lo && per_decade >= 1);
    let (l0, l1) = ((lo as f64).log10(), (hi as f64).log10());
    let steps = ((l1 - l0) * per_decade as f64).ceil().max(1.0) as usize;
    let mut out: Vec<usize> = (0..=steps)
        .map(|i| 10f64.powf(l0 + (l1 - l0) * i as f64 / steps as f64).round() as usize)
        .collect();
    out.dedup();
    out
}

/// Least-squares slope of `log₁₀ err` against `log₁₀ N` over points with
/// `N` in `window` and `err > floor`. `None` with fewer than two points.
pub fn fit_loglog_slope(points: &[(usize, f64)], window: (f64, f64), floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, e)| {
            let n = *n as f64;
            n >= window.0 && n <= window.1 && *e > floor && e.is_finite()
        })
        .map(|(n, e)| ((*n as f64).log10(), e.log10()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// `var{f'(xⁱ)} / var{f(xⁱ) g(xⁱ)}` over the defined samples of `curve`.
pub fn variance_ratio(curve: &SampledCurve, f: &OscillatoryF) -> Result<f64> {
    let idx: Vec<usize> = curve.defined().collect();
    let direct: Vec<f64> = idx.iter().map(|&i| f.deriv(curve.x[i])).collect();
    let by_parts: Vec<f64> = idx.iter().map(|&i| f.value(curve.x[i]) * curve.g[i]).collect();
    Ok(sample_variance(&direct)? / sample_variance(&by_parts)?)
}

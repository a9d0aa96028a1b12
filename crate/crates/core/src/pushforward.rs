//! Propagation of chart jets, and with them the density gradient,
//! through a diffeomorphism `φ`:
//!
//! ```text
//! e_i^{k+1}  = Dφ e_i^k
//! a_ij^{k+1} = D²φ(e_i^k, e_j^k) + Dφ a_ij^k
//! ```

use std::sync::Arc;

use rayon::prelude::*;

use crate::chart::ChartJet;
use crate::density::{density_general, TANGENT_TOL};
use crate::dynsys::{rk2_step, rk2_tangent_step, DynSystem};
use crate::error::{ensure_finite, Error, Result};
use crate::smallmat::{axpy, dot, norm, Mat};

/// A twice-differentiable map `ℝⁿ → ℝⁿ`.
pub trait DiscreteMap: Send + Sync {
    fn dim(&self) -> usize;

    fn map(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// `Dφ(x)`, with `(Dφ)_ij = ∂_j φ_i`.
    fn jac(&self, x: &[f64]) -> Result<Mat>;

    /// `Dφ(x) v`
    fn jvp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.jac(x)?.matvec(v))
    }

    /// `D²φ(x)(u, v)`
    fn hess_bilinear(&self, x: &[f64], u: &[f64], v: &[f64]) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityMap {
    pub dim: usize,
}

impl DiscreteMap for IdentityMap {
    fn dim(&self) -> usize {
        self.dim
    }

    fn map(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(x.to_vec())
    }

    fn jac(&self, _x: &[f64]) -> Result<Mat> {
        Ok(Mat::identity(self.dim))
    }

    fn jvp(&self, _x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Ok(v.to_vec())
    }

    fn hess_bilinear(&self, _x: &[f64], _u: &[f64], _v: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; self.dim])
    }
}

/// `φ(x) = A x`.
#[derive(Debug, Clone)]
pub struct LinearMap {
    pub a: Mat,
}

impl DiscreteMap for LinearMap {
    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn map(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.a.matvec(x))
    }

    fn jac(&self, _x: &[f64]) -> Result<Mat> {
        Ok(self.a.clone())
    }

    fn hess_bilinear(&self, _x: &[f64], _u: &[f64], _v: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; self.dim()])
    }
}

/// One RK2 midpoint step of an ODE, with its exact first and second
/// derivatives.
#[derive(Clone)]
pub struct Rk2Flow {
    system: Arc<dyn DynSystem>,
    dt: f64,
}

impl Rk2Flow {
    pub fn new(system: Arc<dyn DynSystem>, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        Ok(Self { system, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

impl DiscreteMap for Rk2Flow {
    fn dim(&self) -> usize {
        self.system.dim()
    }

    fn map(&self, x: &[f64]) -> Result<Vec<f64>> {
        rk2_step(self.system.as_ref(), x, self.dt)
    }

    fn jac(&self, x: &[f64]) -> Result<Mat> {
        let n = self.dim();
        let mut j = Mat::zeros(n, n);
        for k in 0..n {
            let mut unit = vec![0.0; n];
            unit[k] = 1.0;
            let col = self.jvp(x, &unit)?;
            for i in 0..n {
                j[(i, k)] = col[i];
            }
        }
        Ok(j)
    }

    fn jvp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        rk2_tangent_step(self.system.as_ref(), x, v, self.dt)
    }

    /// With `y = x + dt/2 f(x)` and `du = u + dt/2 Df(x) u`:
    /// `dt [D²f(y)(du, dv) + dt/2 Df(y) D²f(x)(u, v)]`.
    fn hess_bilinear(&self, x: &[f64], u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let sys = self.system.as_ref();
        let dt = self.dt;
        let mut y = x.to_vec();
        axpy(0.5 * dt, &sys.f(x), &mut y);
        let mut du = u.to_vec();
        axpy(0.5 * dt, &sys.jvp(x, u), &mut du);
        let mut dv = v.to_vec();
        axpy(0.5 * dt, &sys.jvp(x, v), &mut dv);
        let inner = sys.hess_bilinear(x, u, v);
        let mut out = sys.hess_bilinear(&y, &du, &dv);
        axpy(0.5 * dt, &sys.jvp(&y, &inner), &mut out);
        for o in out.iter_mut() {
            *o *= dt;
        }
        ensure_finite(&out, "rk2 hessian")?;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JetState {
    pub k: usize,
    pub jet: ChartJet,
}

impl JetState {
    pub fn initial(jet: ChartJet) -> Self {
        Self { k: 0, jet }
    }
}

/// Pushes a jet one step through `φ`. Only the `i ≤ j` second
/// derivatives are computed.
pub fn push_jet(phi: &dyn DiscreteMap, s: &JetState) -> Result<JetState> {
    let jet = &s.jet;
    let x = jet.x();
    let x1 = phi.map(x)?;
    let e1 = jet
        .tangents()
        .iter()
        .map(|e| phi.jvp(x, e))
        .collect::<Result<Vec<_>>>()?;
    let m = jet.param_dim();
    let mut a1 = Vec::with_capacity(m * (m + 1) / 2);
    for i in 0..m {
        for j in i..m {
            let mut v = phi.hess_bilinear(x, jet.e(i), jet.e(j))?;
            axpy(1.0, &phi.jvp(x, jet.a(i, j))?, &mut v);
            a1.push(v);
        }
    }
    let out = ChartJet::new(x1, e1, a1).map_err(|e| match e {
        Error::NonFinite { .. } => Error::NonFinite { context: "push_jet" },
        other => other,
    })?;
    Ok(JetState { k: s.k + 1, jet: out })
}

/// Density gradient of the chart at step `k`; the same computation as
/// [`density_general`].
pub fn g_from_jet(s: &JetState) -> Result<Vec<f64>> {
    Ok(density_general(&s.jet)?.g)
}

/// One-parameter form: `g = -(q·a)/‖e‖²` with `q = e/‖e‖`.
pub fn g_curve(e: &[f64], a: &[f64]) -> Result<f64> {
    let len = norm(e);
    if len < TANGENT_TOL {
        return Err(Error::ZeroTangent { component: 0, norm: len });
    }
    let q: Vec<f64> = e.iter().map(|v| v / len).collect();
    Ok(-dot(&q, a) / (len * len))
}

/// State of one curve sample at a recorded step.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSnapshot {
    pub k: usize,
    /// Points `x^k(c_j)`.
    pub x: Vec<Vec<f64>>,
    /// `‖e^k(c_j)‖`, i.e. `1/ρ^k`.
    pub speed: Vec<f64>,
    pub g: Vec<f64>,
}

/// Evolves a family of one-parameter jets (one per grid sample) through
/// `steps` applications of `φ` and records `x`, `‖e‖` and `g` at the
/// steps listed in `record` (values above `steps` are ignored).
///
/// Samples are independent and processed in parallel; each sample's
/// recursion is sequential in `k`, so results do not depend on the
/// thread count.
pub fn evolve_curve(
    phi: &dyn DiscreteMap,
    initial: &[ChartJet],
    steps: usize,
    record: &[usize],
) -> Result<Vec<CurveSnapshot>> {
    if let Some(bad) = initial.iter().find(|j| j.param_dim() != 1) {
        return Err(Error::DimensionMismatch {
            context: "evolve_curve (one-parameter jets)",
            expected: 1,
            got: bad.param_dim(),
        });
    }
    let mut ks: Vec<usize> = record.iter().copied().filter(|&k| k <= steps).collect();
    ks.sort_unstable();
    ks.dedup();

    let Some(&last) = ks.last() else {
        return Ok(Vec::new());
    };

    // per sample: one (x, speed, g) per recorded step
    let per_sample = initial
        .par_iter()
        .map(|jet0| {
            let mut x = jet0.x().to_vec();
            let mut e = jet0.e(0).to_vec();
            let mut a = jet0.a(0, 0).to_vec();
            let mut out = Vec::with_capacity(ks.len());
            let mut next = 0;
            for k in 0..=last {
                if ks[next] == k {
                    next += 1;
                    out.push((x.clone(), norm(&e), g_curve(&e, &a)?));
                }
                if k == last {
                    break;
                }
                let mut a1 = phi.hess_bilinear(&x, &e, &e)?;
                axpy(1.0, &phi.jvp(&x, &a)?, &mut a1);
                let e1 = phi.jvp(&x, &e)?;
                x = phi.map(&x)?;
                e = e1;
                a = a1;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ks
        .iter()
        .enumerate()
        .map(|(r, &k)| CurveSnapshot {
            k,
            x: per_sample.iter().map(|s| s[r].0.clone()).collect(),
            speed: per_sample.iter().map(|s| s[r].1).collect(),
            g: per_sample.iter().map(|s| s[r].2).collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{jet_ode_surface, ParaboloidChart, SurfaceSeed, Chart};
    use crate::dynsys::lorenz63;

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        norm(&d) / norm(b).max(1e-300)
    }

    fn lorenz_curve_jet(c: f64) -> ChartJet {
        ChartJet::curve(vec![c, c, 28.0], vec![1.0, 1.0, 0.0], vec![0.0; 3]).unwrap()
    }

    #[test]
    fn identity_leaves_jet_unchanged() {
        let jet = ParaboloidChart::default().jet(&[0.2, 0.4]).unwrap();
        let s = JetState::initial(jet.clone());
        let out = push_jet(&IdentityMap { dim: 3 }, &s).unwrap();
        assert_eq!(out.k, 1);
        assert_eq!(out.jet, jet);
    }

    #[test]
    fn linear_map_pushes_linearly() {
        let a = Mat::from_rows(&[vec![1.0, 2.0, 0.0], vec![0.0, 1.0, -1.0], vec![0.5, 0.0, 1.0]]);
        let jet = ParaboloidChart::default().jet(&[0.2, 0.4]).unwrap();
        let out = push_jet(&LinearMap { a: a.clone() }, &JetState::initial(jet.clone())).unwrap();
        for i in 0..2 {
            assert_eq!(out.jet.e(i), a.matvec(jet.e(i)).as_slice());
            for j in 0..2 {
                assert_eq!(out.jet.a(i, j), a.matvec(jet.a(i, j)).as_slice());
            }
        }
    }

    #[test]
    fn rk2_flow_derivatives_match_differences() {
        let flow = Rk2Flow::new(Arc::new(lorenz63()), 0.01).unwrap();
        let x = [1.0, 2.0, 20.0];
        let u = [0.3, -1.0, 0.5];
        let v = [1.0, 0.2, -0.4];
        let h = 1e-5;
        let shift = |d: &[f64], s: f64| -> Vec<f64> { x.iter().zip(d).map(|(a, b)| a + s * b).collect() };
        let (jp, jm) = (flow.jvp(&shift(&u, h), &v).unwrap(), flow.jvp(&shift(&u, -h), &v).unwrap());
        let fd: Vec<f64> = jp.iter().zip(&jm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let hv = flow.hess_bilinear(&x, &u, &v).unwrap();
        assert!(rel_err(&fd, &hv) < 1e-6);
        let hv2 = flow.hess_bilinear(&x, &v, &u).unwrap();
        assert!(rel_err(&hv2, &hv) < 1e-13);
        let j = flow.jac(&x).unwrap();
        assert!(rel_err(&j.matvec(&u), &flow.jvp(&x, &u).unwrap()) < 1e-14);
    }

    #[test]
    fn pushed_jet_matches_surface_chart() {
        let sys = lorenz63();
        let flow = Rk2Flow::new(Arc::new(sys), 0.002).unwrap();
        let c = -2.5;
        let mut s = JetState::initial(lorenz_curve_jet(c));
        for _ in 0..50 {
            s = push_jet(&flow, &s).unwrap();
        }
        let direct = jet_ode_surface(&sys, &SurfaceSeed::lorenz(), c, 0.1, 0.002)
            .unwrap()
            .restrict(&[0])
            .unwrap();
        assert!(rel_err(s.jet.x(), direct.x()) < 1e-12);
        assert!(rel_err(s.jet.e(0), direct.e(0)) < 1e-12);
        assert!(rel_err(s.jet.a(0, 0), direct.a(0, 0)) < 1e-10);
    }

    #[test]
    fn g_zero_at_start_and_one_dim_form_matches_general() {
        let flow = Rk2Flow::new(Arc::new(lorenz63()), 0.002).unwrap();
        let mut s = JetState::initial(lorenz_curve_jet(1.5));
        assert!(g_from_jet(&s).unwrap()[0] == 0.0);
        for _ in 0..30 {
            s = push_jet(&flow, &s).unwrap();
            let general = g_from_jet(&s).unwrap()[0];
            let curve = g_curve(s.jet.e(0), s.jet.a(0, 0)).unwrap();
            assert!((general - curve).abs() <= 1e-13 * curve.abs().max(1.0));
        }
    }

    #[test]
    fn g_invariant_to_initial_tangent_scale() {
        let flow = Rk2Flow::new(Arc::new(lorenz63()), 0.002).unwrap();
        let base = lorenz_curve_jet(0.7);
        let scaled = base.rescale_params(&[3.5]).unwrap();
        let (mut s1, mut s2) = (JetState::initial(base), JetState::initial(scaled));
        for _ in 0..40 {
            s1 = push_jet(&flow, &s1).unwrap();
            s2 = push_jet(&flow, &s2).unwrap();
        }
        let (g1, g2) = (g_from_jet(&s1).unwrap()[0], g_from_jet(&s2).unwrap()[0]);
        assert!((g1 - g2).abs() <= 1e-12 * g1.abs().max(1.0));
    }

    #[test]
    fn evolve_curve_records_requested_steps() {
        let flow = Rk2Flow::new(Arc::new(lorenz63()), 0.002).unwrap();
        let jets: Vec<ChartJet> = [-1.0, 0.0, 1.0].iter().map(|&c| lorenz_curve_jet(c)).collect();
        let snaps = evolve_curve(&flow, &jets, 20, &[20, 0, 10, 50]).unwrap();
        assert_eq!(snaps.iter().map(|s| s.k).collect::<Vec<_>>(), vec![0, 10, 20]);
        assert!(snaps[0].g.iter().all(|g| *g == 0.0));
        // cross-check step 20 against explicit pushes
        let mut s = JetState::initial(jets[2].clone());
        for _ in 0..20 {
            s = push_jet(&flow, &s).unwrap();
        }
        let g = g_from_jet(&s).unwrap()[0];
        assert!((snaps[2].g[2] - g).abs() <= 1e-12 * g.abs().max(1.0));
        assert_eq!(snaps[2].g[0], -snaps[2].g[2]);
        assert_eq!(snaps[2].x[2], s.jet.x().to_vec());
    }

    #[test]
    fn evolve_curve_rejects_surfaces() {
        let jet = ParaboloidChart::default().jet(&[0.0, 0.0]).unwrap();
        assert!(evolve_curve(&IdentityMap { dim: 3 }, &[jet], 1, &[1]).is_err());
    }
}

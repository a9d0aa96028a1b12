//! Quick internal consistency checks, cheap enough to run from the CLI.

use std::sync::Arc;

use crate::chart::{jet_analytic, ChartJet, OdeSurfaceChart, SurfaceSeed};
use crate::density::{density_curve, density_general, density_line, directional_log_density_derivative};
use crate::dynsys::{self, rk2_step, rk2_tangent_step, DynSystem, VanDerPolScenario};
use crate::error::Result;
use crate::pushforward::{push_jet, JetState, Rk2Flow};
use crate::smallmat::{thin_qr, Mat};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn within(name: &'static str, err: f64, tol: f64) -> Self {
        Self {
            name,
            passed: err <= tol,
            detail: format!("error {err:.3e} (tolerance {tol:.1e})"),
        }
    }

    fn failed(name: &'static str, err: impl std::fmt::Display) -> Self {
        Self {
            name,
            passed: false,
            detail: err.to_string(),
        }
    }
}

fn run(name: &'static str, tol: f64, check: impl FnOnce() -> Result<f64>) -> CheckOutcome {
    match check() {
        Ok(err) if err.is_finite() => CheckOutcome::within(name, err, tol),
        Ok(err) => CheckOutcome::failed(name, format!("non-finite error {err}")),
        Err(e) => CheckOutcome::failed(name, e),
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn qr_reconstruction() -> Result<f64> {
    let a = Mat::from_rows(&[
        vec![1.0, 2.0],
        vec![-3.0, 0.5],
        vec![0.25, 4.0],
        vec![2.0, -1.0],
    ]);
    let qr = thin_qr(&a)?;
    let back = qr.q.matmul(&qr.r);
    let orth = qr.q.transpose().matmul(&qr.q).sub(&Mat::identity(2));
    Ok(back.sub(&a).max_abs().max(orth.max_abs()))
}

fn formulas_agree() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for xi in [0.1, 0.5, 0.9] {
        let jet = jet_analytic("exponential", &[xi])?;
        let l = density_line(&jet)?;
        let c = density_curve(&jet)?;
        let g = density_general(&jet)?;
        worst = worst
            .max((l.rho - g.rho).abs() + (c.rho - g.rho).abs())
            .max((l.g[0] - g.g[0]).abs() + (c.g[0] - g.g[0]).abs());
    }
    Ok(worst)
}

/// `∂_ξi log ρ = ‖e_i‖ g_i` against central differences on the paraboloid.
fn paraboloid_gradient() -> Result<f64> {
    let h = 1e-5;
    let log_rho = |xi: &[f64]| -> Result<f64> { Ok(density_general(&jet_analytic("paraboloid", xi)?)?.rho.ln()) };
    let mut worst: f64 = 0.0;
    for xi in [[0.3, -0.2], [-0.7, 0.4]] {
        let jet = jet_analytic("paraboloid", &xi)?;
        let d = density_general(&jet)?;
        for i in 0..2 {
            let (mut p, mut m) = (xi, xi);
            p[i] += h;
            m[i] -= h;
            let fd = (log_rho(&p)? - log_rho(&m)?) / (2.0 * h);
            let len = crate::smallmat::norm(jet.e(i));
            worst = worst.max((fd - len * d.g[i]).abs());
        }
    }
    Ok(worst)
}

fn rk2_tangent() -> Result<f64> {
    let sys = dynsys::lorenz63();
    let (x, v, dt, h) = ([1.0, -2.0, 20.0], [0.3, 0.1, -0.5], 0.01, 1e-6);
    let shift = |s: f64| -> Vec<f64> { x.iter().zip(&v).map(|(a, b)| a + s * b).collect() };
    let fd: Vec<f64> = rk2_step(&sys, &shift(h), dt)?
        .iter()
        .zip(rk2_step(&sys, &shift(-h), dt)?)
        .map(|(p, m)| (p - m) / (2.0 * h))
        .collect();
    Ok(max_diff(&fd, &rk2_tangent_step(&sys, &x, &v, dt)?))
}

fn pushed_matches_surface() -> Result<f64> {
    let dt = 0.002;
    let sys: Arc<dyn DynSystem> = Arc::new(dynsys::lorenz63());
    let flow = Rk2Flow::new(sys.clone(), dt)?;
    let chart = OdeSurfaceChart::new(sys, SurfaceSeed::lorenz(), (-5.0, 5.0), 0.1, dt)?;
    let mut s = JetState::initial(ChartJet::curve(vec![1.5, 1.5, 28.0], vec![1.0, 1.0, 0.0], vec![0.0; 3])?);
    for _ in 0..50 {
        s = push_jet(&flow, &s)?;
    }
    let target = crate::chart::Chart::jet(&chart, &[1.5, 0.1])?.restrict(&[0])?;
    Ok(max_diff(s.jet.x(), target.x())
        .max(max_diff(s.jet.e(0), target.e(0)))
        .max(max_diff(s.jet.a(0, 0), target.a(0, 0))))
}

fn trivial_charts() -> Result<f64> {
    let cases: [(&str, &[f64], f64); 4] = [
        ("circle", &[0.3], 1.0 / (2.0 * std::f64::consts::PI)),
        ("affine", &[0.6], 0.5),
        ("flat", &[0.2, 0.7], 1.0),
        ("scaled-flat", &[0.2, 0.7], 1.0 / 6.0),
    ];
    let mut worst: f64 = 0.0;
    for (name, xi, rho) in cases {
        let d = density_general(&jet_analytic(name, xi)?)?;
        worst = worst.max((d.rho - rho).abs() / rho);
        worst = d.g.iter().fold(worst, |m, g| m.max(g.abs()));
    }
    Ok(worst)
}

/// `g` of a linearly reparameterized paraboloid against the directional
/// derivative of the original.
fn reparameterization() -> Result<f64> {
    let l = [[2.0, 0.5], [-0.3, 1.5]];
    let jet = jet_analytic("paraboloid", &[0.3, -0.2])?;
    let base = density_general(&jet)?;
    let comb = |c: &[f64], vs: &[&[f64]]| -> Vec<f64> {
        (0..3).map(|r| c.iter().zip(vs).map(|(c, v)| c * v[r]).sum()).collect()
    };
    let col = |k: usize| [l[0][k], l[1][k]];
    let e: Vec<Vec<f64>> = (0..2).map(|k| comb(&col(k), &[jet.e(0), jet.e(1)])).collect();
    let mut a = Vec::new();
    for p in 0..2 {
        for q in p..2 {
            let (cp, cq) = (col(p), col(q));
            let c = [cp[0] * cq[0], cp[0] * cq[1] + cp[1] * cq[0], cp[1] * cq[1]];
            a.push(comb(&c, &[jet.a(0, 0), jet.a(0, 1), jet.a(1, 1)]));
        }
    }
    let moved = density_general(&ChartJet::new(jet.x().to_vec(), e, a)?)?;
    let mut worst: f64 = 0.0;
    for k in 0..2 {
        let along = directional_log_density_derivative(&base, &jet, &col(k))?;
        worst = worst.max((along - moved.g[k]).abs() / along.abs());
    }
    Ok(worst)
}

fn vdp_half_period() -> Result<f64> {
    let scn = VanDerPolScenario::default();
    Ok((scn.half_period()? - scn.t_half_nominal).abs())
}

/// Runs every check; never panics.
pub fn run_all() -> Vec<CheckOutcome> {
    vec![
        run("qr-reconstruction", 1e-12, qr_reconstruction),
        run("trivial-charts", 1e-12, trivial_charts),
        run("line-curve-general-agree", 1e-13, formulas_agree),
        run("linear-reparameterization", 1e-10, reparameterization),
        run("paraboloid-gradient-fd", 1e-6, paraboloid_gradient),
        run("rk2-tangent-fd", 1e-6, rk2_tangent),
        run("pushforward-vs-surface", 1e-9, pushed_matches_surface),
        run("vdp-half-period", 5e-3, vdp_half_period),
    ]
}

//! Density `ρ` and density gradient `g = ∇ₛ log ρ` implied by a chart.
//!
//! `ρ` is the density of points mapped from the uniform parameter
//! measure per unit length/area/volume of the image; `g_i` is the
//! derivative of `log ρ` per unit arc length along the isoparametric
//! curve of `ξ_i`, in the direction of increasing `ξ_i`.

use crate::chart::ChartJet;
use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::smallmat::{back_substitute, dot, norm, thin_qr};

/// Tangent lengths below this are treated as degenerate.
pub const TANGENT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityEval {
    pub rho: f64,
    pub g: Vec<f64>,
    /// `∏ diag(R)`, so that `rho * det_r == 1`.
    pub det_r: f64,
}

fn expect_dims(jet: &ChartJet, m: usize, n: Option<usize>, context: &'static str) -> Result<()> {
    if jet.param_dim() != m {
        return Err(Error::DimensionMismatch {
            context,
            expected: m,
            got: jet.param_dim(),
        });
    }
    if let Some(n) = n {
        if jet.ambient_dim() != n {
            return Err(Error::DimensionMismatch {
                context,
                expected: n,
                got: jet.ambient_dim(),
            });
        }
    }
    Ok(())
}

/// Line manifold (`m = n = 1`): `ρ = 1/|x'|`, `g = -x''/x'²`.
///
/// `g` here is `∂ₓ log ρ`, the derivative along increasing `x`.
pub fn density_line(jet: &ChartJet) -> Result<DensityEval> {
    expect_dims(jet, 1, Some(1), "density_line")?;
    let d1 = jet.e(0)[0];
    let d2 = jet.a(0, 0)[0];
    if d1.abs() < TANGENT_TOL {
        return Err(Error::ZeroTangent {
            component: 0,
            norm: d1.abs(),
        });
    }
    Ok(DensityEval {
        rho: 1.0 / d1.abs(),
        g: vec![-d2 / (d1 * d1)],
        det_r: d1.abs(),
    })
}

/// Curve in `ℝⁿ`: `ρ = 1/‖x'‖`, `g = -(x'·x'')/‖x'‖³`.
pub fn density_curve(jet: &ChartJet) -> Result<DensityEval> {
    expect_dims(jet, 1, None, "density_curve")?;
    let e = jet.e(0);
    let speed = norm(e);
    if speed < TANGENT_TOL {
        return Err(Error::ZeroTangent {
            component: 0,
            norm: speed,
        });
    }
    Ok(DensityEval {
        rho: 1.0 / speed,
        g: vec![-dot(e, jet.a(0, 0)) / (speed * speed * speed)],
        det_r: speed,
    })
}

/// Any `m ≤ n`, via the thin QR factorization `∇_ξ x = Q R`:
///
/// `ρ = 1/det R` and `g_i = -tr(Qᵀ ∂_i∇_ξx R⁻¹) / ‖e_i‖`.
///
/// The trace is accumulated column by column: with `M_i[l][k] = q_l·a_ik`,
/// `tr(M_i R⁻¹) = Σ_k (R⁻¹ M_i[:, k])_k`, each term one back substitution.
pub fn density_general(jet: &ChartJet) -> Result<DensityEval> {
    let m = jet.param_dim();
    let lengths: Vec<f64> = jet.tangents().iter().map(|e| norm(e)).collect();
    if let Some((i, &len)) = lengths.iter().enumerate().find(|(_, l)| **l < TANGENT_TOL) {
        return Err(Error::ZeroTangent {
            component: i,
            norm: len,
        });
    }
    let qr = thin_qr(&jet.gradient())?;
    let q_cols: Vec<Vec<f64>> = (0..m).map(|j| qr.q.column(j)).collect();
    let det_r = qr.det_r();

    let mut g = Vec::with_capacity(m);
    for (i, len) in lengths.iter().enumerate() {
        let mut trace = 0.0;
        for k in 0..m {
            let a_ik = jet.a(i, k);
            let column: Vec<f64> = q_cols.iter().map(|q| dot(q, a_ik)).collect();
            trace += back_substitute(&qr.r, &column)?[k];
        }
        g.push(-trace / len);
    }
    Ok(DensityEval {
        rho: 1.0 / det_r,
        g,
        det_r,
    })
}

/// Derivative of `log ρ` per unit length along the image of the
/// parameter direction `direction`: `Σ_i d_i ‖e_i‖ g_i / ‖Σ_i d_i e_i‖`.
pub fn directional_log_density_derivative(
    eval: &DensityEval,
    jet: &ChartJet,
    direction: &[f64],
) -> Result<f64> {
    let m = jet.param_dim();
    if direction.len() != m || eval.g.len() != m {
        return Err(Error::DimensionMismatch {
            context: "directional_log_density_derivative",
            expected: m,
            got: direction.len(),
        });
    }
    let mut mapped = vec![0.0; jet.ambient_dim()];
    let mut weighted = 0.0;
    for (i, d) in direction.iter().enumerate() {
        let e = jet.e(i);
        for (acc, v) in mapped.iter_mut().zip(e) {
            *acc += d * v;
        }
        weighted += d * norm(e) * eval.g[i];
    }
    let len = norm(&mapped);
    if len < TANGENT_TOL {
        return Err(Error::ZeroTangent {
            component: 0,
            norm: len,
        });
    }
    Ok(weighted / len)
}

/// A density-gradient formula selectable by name.
pub trait DensityFormula: Send + Sync {
    fn name(&self) -> &str;

    /// Whether the formula applies to jets of this shape.
    fn supports(&self, param_dim: usize, ambient_dim: usize) -> bool;

    fn evaluate(&self, jet: &ChartJet) -> Result<DensityEval>;
}

pub struct LineFormula;
pub struct CurveFormula;
pub struct GeneralFormula;

impl DensityFormula for LineFormula {
    fn name(&self) -> &str {
        "line"
    }

    fn supports(&self, m: usize, n: usize) -> bool {
        m == 1 && n == 1
    }

    fn evaluate(&self, jet: &ChartJet) -> Result<DensityEval> {
        density_line(jet)
    }
}

impl DensityFormula for CurveFormula {
    fn name(&self) -> &str {
        "curve"
    }

    fn supports(&self, m: usize, _n: usize) -> bool {
        m == 1
    }

    fn evaluate(&self, jet: &ChartJet) -> Result<DensityEval> {
        density_curve(jet)
    }
}

impl DensityFormula for GeneralFormula {
    fn name(&self) -> &str {
        "general"
    }

    fn supports(&self, m: usize, n: usize) -> bool {
        m >= 1 && m <= n
    }

    fn evaluate(&self, jet: &ChartJet) -> Result<DensityEval> {
        density_general(jet)
    }
}

pub fn registry() -> Registry<dyn DensityFormula> {
    let mut reg: Registry<dyn DensityFormula> = Registry::new("formula");
    reg.register("line", "1/|x'| and -x''/x'^2 (m = n = 1)", || Box::new(LineFormula));
    reg.register("curve", "1/|x'| and -(x'.x'')/|x'|^3 (m = 1)", || Box::new(CurveFormula));
    reg.register("general", "thin-QR trace formula (any m <= n)", || Box::new(GeneralFormula));
    reg
}

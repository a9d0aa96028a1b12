//! Charts `x(ξ): U ⊂ ℝᵐ → ℝⁿ` and their second-order jets.
//!
//! Closed-form charts return exact derivatives. ODE-generated charts
//! return derivatives of the discrete RK2 flow, so that they agree with
//! the pushforward recursion to roundoff.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::dynsys::{self, rk2_jet_step, DynSystem, VanDerPolScenario};
use crate::error::{ensure_finite, Error, Result};
use crate::registry::Registry;
use crate::smallmat::{scaled, Mat};

/// Position, first and second parametric derivatives of a chart at one
/// parameter value. Second derivatives are stored once per unordered
/// index pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartJet {
    x: Vec<f64>,
    e: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
}

fn packed_index(m: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * (2 * m - i - 1) / 2 + j
}

impl ChartJet {
    /// `a_upper` lists `a_ij` for `i ≤ j` in row order:
    /// `a_00, a_01, …, a_0(m-1), a_11, …`.
    pub fn new(x: Vec<f64>, e: Vec<Vec<f64>>, a_upper: Vec<Vec<f64>>) -> Result<Self> {
        let n = x.len();
        let m = e.len();
        if m == 0 {
            return Err(Error::DimensionMismatch {
                context: "ChartJet tangents",
                expected: 1,
                got: 0,
            });
        }
        if a_upper.len() != m * (m + 1) / 2 {
            return Err(Error::DimensionMismatch {
                context: "ChartJet second derivatives",
                expected: m * (m + 1) / 2,
                got: a_upper.len(),
            });
        }
        for v in e.iter().chain(&a_upper) {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "ChartJet vector length",
                    expected: n,
                    got: v.len(),
                });
            }
        }
        let jet = Self { x, e, a: a_upper };
        if !jet.is_finite() {
            return Err(Error::NonFinite { context: "ChartJet" });
        }
        Ok(jet)
    }

    /// Builds a jet from a callback giving `a_ij`; only `i ≤ j` is queried.
    pub fn from_fn(
        x: Vec<f64>,
        e: Vec<Vec<f64>>,
        mut second: impl FnMut(usize, usize) -> Vec<f64>,
    ) -> Result<Self> {
        let m = e.len();
        let mut a = Vec::with_capacity(m * (m + 1) / 2);
        for i in 0..m {
            for j in i..m {
                a.push(second(i, j));
            }
        }
        Self::new(x, e, a)
    }

    /// One-parameter jet.
    pub fn curve(x: Vec<f64>, e: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        Self::new(x, vec![e], vec![a])
    }

    pub fn param_dim(&self) -> usize {
        self.e.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn e(&self, i: usize) -> &[f64] {
        &self.e[i]
    }

    pub fn tangents(&self) -> &[Vec<f64>] {
        &self.e
    }

    /// `a_ij = a_ji`.
    pub fn a(&self, i: usize, j: usize) -> &[f64] {
        &self.a[packed_index(self.param_dim(), i, j)]
    }

    /// `∇_ξ x` as an `n × m` matrix, one column per parameter.
    pub fn gradient(&self) -> Mat {
        Mat::from_columns(&self.e)
    }

    pub fn is_finite(&self) -> bool {
        self.x
            .iter()
            .chain(self.e.iter().flatten())
            .chain(self.a.iter().flatten())
            .all(|v| v.is_finite())
    }

    /// Jet of the chart restricted to the parameters in `params`, the
    /// others held fixed.
    pub fn restrict(&self, params: &[usize]) -> Result<ChartJet> {
        let e = params.iter().map(|&i| self.e[i].clone()).collect();
        let mut a = Vec::new();
        for (p, &i) in params.iter().enumerate() {
            for &j in &params[p..] {
                a.push(self.a(i, j).to_vec());
            }
        }
        ChartJet::new(self.x.clone(), e, a)
    }

    /// Jet after the linear change of parameters `ξ_i = scale_i η_i + shift_i`
    /// (shifts do not change derivatives).
    pub fn rescale_params(&self, scale: &[f64]) -> Result<ChartJet> {
        let m = self.param_dim();
        if scale.len() != m {
            return Err(Error::DimensionMismatch {
                context: "rescale_params",
                expected: m,
                got: scale.len(),
            });
        }
        let e = (0..m).map(|i| scaled(scale[i], &self.e[i])).collect();
        ChartJet::from_fn(self.x.clone(), e, |i, j| scaled(scale[i] * scale[j], self.a(i, j)))
    }
}

/// The parameter box `U = [lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ChartDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::DimensionMismatch {
                context: "ChartDomain bounds",
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidArgument(format!(
                "domain needs lower < upper componentwise, got {lower:?} / {upper:?}"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn unit(m: usize) -> Self {
        Self {
            lower: vec![0.0; m],
            upper: vec![1.0; m],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        xi.len() == self.dim()
            && xi
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn check(&self, xi: &[f64]) -> Result<()> {
        if self.contains(xi) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                xi: xi.to_vec(),
                lower: self.lower.clone(),
                upper: self.upper.clone(),
            })
        }
    }
}

pub trait Chart: Send + Sync {
    fn name(&self) -> &str;

    fn domain(&self) -> &ChartDomain;

    fn ambient_dim(&self) -> usize;

    fn param_dim(&self) -> usize {
        self.domain().dim()
    }

    fn jet(&self, xi: &[f64]) -> Result<ChartJet>;

    fn point(&self, xi: &[f64]) -> Result<Vec<f64>> {
        Ok(self.jet(xi)?.x)
    }
}

/// `x(ξ) = start + (end - start) ξ` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineChart {
    start: Vec<f64>,
    end: Vec<f64>,
    domain: ChartDomain,
}

impl AffineChart {
    pub fn new(start: Vec<f64>, end: Vec<f64>) -> Self {
        assert_eq!(start.len(), end.len());
        Self {
            start,
            end,
            domain: ChartDomain::unit(1),
        }
    }
}

impl Chart for AffineChart {
    fn name(&self) -> &str {
        "affine"
    }

    fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    fn ambient_dim(&self) -> usize {
        self.start.len()
    }

    fn jet(&self, xi: &[f64]) -> Result<ChartJet> {
        self.domain.check(xi)?;
        let d: Vec<f64> = self.end.iter().zip(&self.start).map(|(b, a)| b - a).collect();
        let x = self.start.iter().zip(&d).map(|(a, di)| a + di * xi[0]).collect();
        ChartJet::curve(x, d, vec![0.0; self.start.len()])
    }
}

/// Circle of radius `r` traversed once as `ξ` runs over `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleChart {
    radius: f64,
    domain: ChartDomain,
}

impl CircleChart {
    pub fn new(radius: f64) -> Self {
        Self {
            radius,
            domain: ChartDomain::unit(1),
        }
    }
}

impl Chart for CircleChart {
    fn name(&self) -> &str {
        "circle"
    }

    fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    fn ambient_dim(&self) -> usize {
        2
    }

    fn jet(&self, xi: &[f64]) -> Result<ChartJet> {
        self.domain.check(xi)?;
        let w = 2.0 * PI;
        let (s, c) = (w * xi[0]).sin_cos();
        let r = self.radius;
        ChartJet::curve(
            vec![r * c, r * s],
            vec![-w * r * s, w * r * c],
            vec![-w * w * r * c, -w * w * r * s],
        )
    }
}

/// `x(ξ) = exp(ξ)` on `[0, 1]`; the implied density is `1/x` on `[1, e]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialChart {
    domain: ChartDomain,
}

impl Default for ExponentialChart {
    fn default() -> Self {
        Self {
            domain: ChartDomain::unit(1),
        }
    }
}

impl Chart for ExponentialChart {
    fn name(&self) -> &str {
        "exponential"
    }

    fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    fn ambient_dim(&self) -> usize {
        1
    }

    fn jet(&self, xi: &[f64]) -> Result<ChartJet> {
        self.domain.check(xi)?;
        let v = xi[0].exp();
        ChartJet::curve(vec![v], vec![v], vec![v])
    }
}

/// `x(ξ) = (ξ₁, ξ₂, ξ₁² + ξ₂²)` on `[-1, 1]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParaboloidChart {
    domain: ChartDomain,
}

impl Default for ParaboloidChart {
    fn default() -> Self {
        Self {
            domain: ChartDomain {
                lower: vec![-1.0, -1.0],
                upper: vec![1.0, 1.0],
            },
        }
    }
}

impl Chart for ParaboloidChart {
    fn name(&self) -> &str {
        "paraboloid"
    }

    fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn jet(&self, xi: &[f64]) -> Result<ChartJet> {
        self.domain.check(xi)?;
        let (u, v) = (xi[0], xi[1]);
        ChartJet::new(
            vec![u, v, u * u + v * v],
            vec![vec![1.0, 0.0, 2.0 * u], vec![0.0, 1.0, 2.0 * v]],
            vec![vec![0.0, 0.0, 2.0], vec![0.0; 3], vec![0.0, 0.0, 2.0]],
        )
    }
}

/// `x(ξ) = offset + A ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearChart {
    name: &'static str,
    matrix: Mat,
    offset: Vec<f64>,
    domain: ChartDomain,
}

impl LinearChart {
    pub fn new(name: &'static str, matrix: Mat, offset: Vec<f64>, domain: ChartDomain) -> Result<Self> {
        if matrix.rows() != offset.len() || matrix.cols() != domain.dim() {
            return Err(Error::DimensionMismatch {
                context: "LinearChart",
                expected: matrix.rows(),
                got: offset.len(),
            });
        }
        Ok(Self {
            name,
            matrix,
            offset,
            domain,
        })
    }

    /// `(ξ₁, ξ₂, 0)` on the unit square.
    pub fn flat() -> Self {
        Self::planar("flat", 1.0, 1.0)
    }

    /// `(2ξ₁, 3ξ₂, 0)` on the unit square.
    pub fn scaled_flat() -> Self {
        Self::planar("scaled-flat", 2.0, 3.0)
    }

    fn planar(name: &'static str, sx: f64, sy: f64) -> Self {
        let matrix = Mat::from_rows(&[vec![sx, 0.0], vec![0.0, sy], vec![0.0, 0.0]]);
        Self::new(name, matrix, vec![0.0; 3], ChartDomain::unit(2)).expect("consistent shapes")
    }
}

impl Chart for LinearChart {
    fn name(&self) -> &str {
        self.name
    }

    fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    fn ambient_dim(&self) -> usize {
        self.offset.len()
    }

    fn jet(&self, xi: &[f64]) -> Result<ChartJet> {
        self.domain.check(xi)?;
        let mut x = self.matrix.matvec(xi);
        for (xi, o) in x.iter_mut().zip(&self.offset) {
            *xi += o;
        }
        let m = self.domain.dim();
        let e = (0..m).map(|j| self.matrix.column(j)).collect();
        let n = self.offset.len();
        ChartJet::from_fn(x, e, |_, _| vec![0.0; n])
    }
}

/// `x(ξ) = Σ_d c_d ξ^d` on `[0, 1]` with vector coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialCurve {
    coeffs: Vec<Vec<f64>>,
    domain: ChartDomain,
}

impl PolynomialCurve {
    /// `coeffs[d]` multiplies `ξ^d`.
    pub fn new(coeffs: Vec<Vec<f64>>) -> Result<Self> {
        let n = coeffs.first().map_or(0, |c| c.len());
        if n == 0 || coeffs.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidArgument(
                "polynomial coefficients must be non-empty vectors of equal length".into(),
            ));
        }
        Ok(Self {
            coeffs,
            domain: ChartDomain::unit(1),
        })
    }
}

impl Chart for PolynomialCurve {
    fn name(&self) -> &str {
        "polynomial"
    }

    fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    fn ambient_dim(&self) -> usize {
        self.coeffs[0].len()
    }

    fn jet(&self, xi: &[f64]) -> Result<ChartJet> {
        self.domain.check(xi)?;
        let t = xi[0];
        let n = self.ambient_dim();
        let (mut x, mut e, mut a) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        // Horner on value and both derivatives
        for c in self.coeffs.iter().rev() {
            for k in 0..n {
                a[k] = a[k] * t + 2.0 * e[k];
                e[k] = e[k] * t + x[k];
                x[k] = x[k] * t + c[k];
            }
        }
        ChartJet::curve(x, e, a)
    }
}

/// Initial curve of an ODE-swept surface: `x₀(c) = origin + c·direction`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSeed {
    pub origin: Vec<f64>,
    pub direction: Vec<f64>,
}

impl SurfaceSeed {
    /// `x₀(c) = (c, c, 28)`.
    pub fn lorenz() -> Self {
        Self {
            origin: vec![0.0, 0.0, 28.0],
            direction: vec![1.0, 1.0, 0.0],
        }
    }

    fn start(&self, c: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let x = self
            .origin
            .iter()
            .zip(&self.direction)
            .map(|(o, d)| o + c * d)
            .collect();
        (x, self.direction.clone(), vec![0.0; self.origin.len()])
    }
}

/// Surface jet from state, `∂_c x`, `∂²_c x`: the `t` derivatives come
/// from the vector field by the chain rule.
fn surface_jet(sys: &dyn DynSystem, x: &[f64], v: &[f64], w: &[f64]) -> Result<ChartJet> {
    let fx = sys.f(x);
    let dfv = sys.jvp(x, v);
    let dff = sys.jvp(x, &fx);
    ChartJet::new(
        x.to_vec(),
        vec![v.to_vec(), fx],
        vec![w.to_vec(), dfv, dff],
    )
}

fn steps_for(t: f64, dt: f64) -> Result<usize> {
    if !(t >= 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need t >= 0 and dt > 0, got t={t}, dt={dt}"
        )));
    }
    let k = (t / dt).round();
    if (k * dt - t).abs() > 1e-9 * t.max(1.0) {
        return Err(Error::InvalidArgument(format!("t={t} is not a multiple of dt={dt}")));
    }
    Ok(k as usize)
}

/// Jet of the surface `ξ = (c, t)` swept by integrating `sys` from the
/// seed curve, evaluated at a time that is a multiple of `dt`.
pub fn jet_ode_surface(
    sys: &dyn DynSystem,
    seed: &SurfaceSeed,
    c: f64,
    t: f64,
    dt: f64,
) -> Result<ChartJet> {
    let steps = steps_for(t, dt)?;
    let (mut x, mut v, mut w) = seed.start(c);
    for _ in 0..steps {
        (x, v, w) = rk2_jet_step(sys, &x, &v, &w, dt)?;
    }
    surface_jet(sys, &x, &v, &w)
}

/// Surface chart on `[c_lo, c_hi] × [0, t_max]` generated by an ODE.
pub struct OdeSurfaceChart {
    system: Arc<dyn DynSystem>,
    seed: SurfaceSeed,
    dt: f64,
    domain: ChartDomain,
}

/// Cached jets on a `(c, t)` grid: `jets[ic][it]` at `t = it·dt`.
#[derive(Debug, Clone)]
pub struct SurfaceGrid {
    pub c: Vec<f64>,
    pub t: Vec<f64>,
    pub jets: Vec<Vec<ChartJet>>,
}

impl OdeSurfaceChart {
    pub fn new(
        system: Arc<dyn DynSystem>,
        seed: SurfaceSeed,
        c_range: (f64, f64),
        t_max: f64,
        dt: f64,
    ) -> Result<Self> {
        if seed.origin.len() != system.dim() || seed.direction.len() != system.dim() {
            return Err(Error::DimensionMismatch {
                context: "surface seed",
                expected: system.dim(),
                got: seed.origin.len(),
            });
        }
        steps_for(t_max, dt)?;
        let domain = ChartDomain::new(vec![c_range.0, 0.0], vec![c_range.1, t_max])?;
        Ok(Self {
            system,
            seed,
            dt,
            domain,
        })
    }

    /// Lorenz '63 surface over `c ∈ [-5, 5]`, `t ∈ [0, 0.4]`.
    pub fn lorenz(dt: f64) -> Result<Self> {
        Self::new(
            Arc::new(dynsys::lorenz63()),
            SurfaceSeed::lorenz(),
            (-5.0, 5.0),
            0.4,
            dt,
        )
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn system(&self) -> &Arc<dyn DynSystem> {
        &self.system
    }

    pub fn seed(&self) -> &SurfaceSeed {
        &self.seed
    }

    pub fn time_steps(&self) -> usize {
        steps_for(self.domain.upper()[1], self.dt).expect("validated at construction")
    }

    /// Integrates one trajectory per `c` node (in parallel) and keeps
    /// the jet at every time step.
    pub fn sample_grid(&self, c_nodes: &[f64]) -> Result<SurfaceGrid> {
        let steps = self.time_steps();
        for &c in c_nodes {
            self.domain.check(&[c, 0.0])?;
        }
        let sys = self.system.as_ref();
        let jets = c_nodes
            .par_iter()
            .map(|&c| {
                let (mut x, mut v, mut w) = self.seed.start(c);
                let mut row = Vec::with_capacity(steps + 1);
                row.push(surface_jet(sys, &x, &v, &w)?);
                for _ in 0..steps {
                    (x, v, w) = rk2_jet_step(sys, &x, &v, &w, self.dt)?;
                    row.push(surface_jet(sys, &x, &v, &w)?);
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        let t = (0..=steps).map(|k| k as f64 * self.dt).collect();
        Ok(SurfaceGrid {
            c: c_nodes.to_vec(),
            t,
            jets,
        })
    }
}

impl Chart for OdeSurfaceChart {
    fn name(&self) -> &str {
        "ode-surface"
    }

    fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    fn ambient_dim(&self) -> usize {
        self.system.dim()
    }

    fn jet(&self, xi: &[f64]) -> Result<ChartJet> {
        self.domain.check(xi)?;
        jet_ode_surface(self.system.as_ref(), &self.seed, xi[0], xi[1], self.dt)
    }
}

/// `n` nodes on `[lo, hi]`; symmetric intervals give exactly mirrored
/// nodes (`c[n-1-j] == -c[j]`).
pub fn uniform_nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "need at least two nodes");
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let d = (n - 1) as f64;
    (0..n)
        .map(|j| mid + half * ((2 * j) as f64 - d) / d)
        .collect()
}

/// A chart obtained by rescaling time along one ODE trajectory:
/// `x(ξ) = P s(ξ T)` where `s` solves the ODE and `P` selects state
/// components. Derivatives are `T P f(s)` and `T² P Df(s) f(s)`.
pub struct TrajectoryChart {
    name: &'static str,
    system: Arc<dyn DynSystem>,
    start: Vec<f64>,
    span: f64,
    components: Vec<usize>,
    dt: f64,
    domain: ChartDomain,
}

/// A trajectory chart evaluated on a uniform `ξ` grid.
#[derive(Debug, Clone)]
pub struct TrajectorySamples {
    pub xi: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub jets: Vec<ChartJet>,
}

impl TrajectoryChart {
    pub fn new(
        name: &'static str,
        system: Arc<dyn DynSystem>,
        start: Vec<f64>,
        span: f64,
        components: Vec<usize>,
        dt: f64,
    ) -> Result<Self> {
        if !(span > 0.0) || !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "trajectory chart needs positive span and dt, got {span}, {dt}"
            )));
        }
        if components.is_empty() || components.iter().any(|&k| k >= system.dim()) {
            return Err(Error::InvalidArgument("invalid component selection".into()));
        }
        Ok(Self {
            name,
            system,
            start,
            span,
            components,
            dt,
            domain: ChartDomain::unit(1),
        })
    }

    /// `x(ξ) = u(ξ T½)` on the first half period.
    pub fn vdp_half_period(scn: &VanDerPolScenario) -> Result<Self> {
        let t_half = scn.half_period()?;
        Self::new(
            "vdp-line",
            Arc::new(scn.system),
            scn.initial_state(),
            t_half,
            vec![0],
            scn.dt,
        )
    }

    /// `x(ξ) = (u, du/dt)(ξ T)` over one full period.
    pub fn vdp_loop(scn: &VanDerPolScenario) -> Result<Self> {
        let period = scn.period()?;
        Self::new(
            "vdp-loop",
            Arc::new(scn.system),
            scn.initial_state(),
            period,
            vec![0, 1],
            scn.dt,
        )
    }

    /// Time span `T` mapped onto `ξ ∈ [0, 1]`.
    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn system(&self) -> &Arc<dyn DynSystem> {
        &self.system
    }

    fn jet_from_state(&self, s: &[f64]) -> Result<ChartJet> {
        let fs = self.system.f(s);
        let dff = self.system.jvp(s, &fs);
        let t = self.span;
        let pick = |v: &[f64], scale: f64| -> Vec<f64> {
            self.components.iter().map(|&k| scale * v[k]).collect()
        };
        ChartJet::curve(pick(s, 1.0), pick(&fs, t), pick(&dff, t * t))
    }

    /// `n ≥ 2` samples at `ξ_i = i/(n-1)`. The step is `T/(n-1)`, split
    /// into equal substeps no longer than the chart's `dt`, so every
    /// sample is a trajectory node.
    pub fn sample_uniform(&self, n: usize) -> Result<TrajectorySamples> {
        if n < 2 {
            return Err(Error::TooFewSamples { got: n, need: 2 });
        }
        let h = self.span / (n - 1) as f64;
        let sub = (h / self.dt).ceil().max(1.0) as usize;
        let sys = self.system.as_ref();
        let mut states = Vec::with_capacity(n);
        states.push(self.start.clone());
        for i in 1..n {
            let mut s = dynsys::integrate(sys, &states[i - 1], h / sub as f64, sub)?;
            states.push(s.pop().expect("integrate returns the start state"));
        }
        let jets = states
            .iter()
            .map(|s| self.jet_from_state(s))
            .collect::<Result<Vec<_>>>()?;
        let xi = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        Ok(TrajectorySamples { xi, states, jets })
    }
}

impl Chart for TrajectoryChart {
    fn name(&self) -> &str {
        self.name
    }

    fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    fn ambient_dim(&self) -> usize {
        self.components.len()
    }

    fn jet(&self, xi: &[f64]) -> Result<ChartJet> {
        self.domain.check(xi)?;
        let s = dynsys::integrate_to(self.system.as_ref(), &self.start, xi[0] * self.span, self.dt)?;
        ensure_finite(&s, "trajectory chart")?;
        self.jet_from_state(&s)
    }
}

pub fn registry() -> Registry<dyn Chart> {
    let mut reg: Registry<dyn Chart> = Registry::new("chart");
    reg.register("affine", "segment from 1 to 3 on the real line", || {
        Box::new(AffineChart::new(vec![1.0], vec![3.0]))
    });
    reg.register("circle", "unit circle, one turn", || Box::new(CircleChart::new(1.0)));
    reg.register("exponential", "x = exp(xi) on [0, 1]", || {
        Box::new(ExponentialChart::default())
    });
    reg.register("paraboloid", "(u, v, u^2 + v^2) on [-1, 1]^2", || {
        Box::new(ParaboloidChart::default())
    });
    reg.register("flat", "(u, v, 0) on the unit square", || Box::new(LinearChart::flat()));
    reg.register("scaled-flat", "(2u, 3v, 0) on the unit square", || {
        Box::new(LinearChart::scaled_flat())
    });
    reg.register("vdp-line", "Van der Pol u over the first half period", || {
        Box::new(
            TrajectoryChart::vdp_half_period(&VanDerPolScenario::default())
                .expect("default Van der Pol scenario has a half period"),
        )
    });
    reg.register("vdp-loop", "Van der Pol (u, du/dt) over one period", || {
        Box::new(
            TrajectoryChart::vdp_loop(&VanDerPolScenario::default())
                .expect("default Van der Pol scenario has a period"),
        )
    });
    reg.register("lorenz-surface", "Lorenz '63 surface swept from (c, c, 28)", || {
        Box::new(OdeSurfaceChart::lorenz(0.002).expect("valid default surface"))
    });
    reg
}

/// Jet of a registered chart.
pub fn jet_analytic(chart: &str, xi: &[f64]) -> Result<ChartJet> {
    registry().create(chart)?.jet(xi)
}

//! Built-in vector fields, the RK2 midpoint integrator, and the
//! first/second-order tangent steps of that integrator.
//!
//! The tangent steps are exact derivatives of the discrete RK2 map with
//! respect to the initial condition, so propagated derivatives match
//! finite differences of discrete trajectories rather than of the
//! continuous flow.

use crate::error::{ensure_finite, Error, Result};
use crate::registry::Registry;
use crate::smallmat::{axpy, Mat};

/// An autonomous vector field `dx/dt = f(x)` with analytic first and
/// second derivatives.
pub trait DynSystem: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn f(&self, x: &[f64]) -> Vec<f64>;

    fn jac(&self, x: &[f64]) -> Mat;

    /// `Df(x) v`
    fn jvp(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        self.jac(x).matvec(v)
    }

    /// Component `i` is `∂_k ∂_l f_i(x) v_k w_l`.
    fn hess_bilinear(&self, x: &[f64], v: &[f64], w: &[f64]) -> Vec<f64>;
}

/// `u'' = mu (1 - u²) u' - u` written for the state `(u, u')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanDerPol {
    pub mu: f64,
}

impl Default for VanDerPol {
    fn default() -> Self {
        Self { mu: 2.0 }
    }
}

impl DynSystem for VanDerPol {
    fn name(&self) -> &str {
        "vanderpol"
    }

    fn dim(&self) -> usize {
        2
    }

    fn f(&self, x: &[f64]) -> Vec<f64> {
        let (u, du) = (x[0], x[1]);
        vec![du, self.mu * (1.0 - u * u) * du - u]
    }

    fn jac(&self, x: &[f64]) -> Mat {
        let (u, du) = (x[0], x[1]);
        Mat::from_rows(&[
            vec![0.0, 1.0],
            vec![-2.0 * self.mu * u * du - 1.0, self.mu * (1.0 - u * u)],
        ])
    }

    fn jvp(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let (u, du) = (x[0], x[1]);
        vec![
            v[1],
            (-2.0 * self.mu * u * du - 1.0) * v[0] + self.mu * (1.0 - u * u) * v[1],
        ]
    }

    fn hess_bilinear(&self, x: &[f64], v: &[f64], w: &[f64]) -> Vec<f64> {
        let (u, du) = (x[0], x[1]);
        // ∂uu f2 = -2 mu u', ∂u∂u' f2 = -2 mu u, ∂u'u' f2 = 0
        let c = -2.0 * self.mu;
        vec![0.0, c * du * v[0] * w[0] + c * u * (v[0] * w[1] + v[1] * w[0])]
    }
}

/// Lorenz '63 with the classical parameters by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorenz63 {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Default for Lorenz63 {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }
}

impl DynSystem for Lorenz63 {
    fn name(&self) -> &str {
        "lorenz63"
    }

    fn dim(&self) -> usize {
        3
    }

    fn f(&self, x: &[f64]) -> Vec<f64> {
        vec![
            self.sigma * (x[1] - x[0]),
            x[0] * (self.rho - x[2]) - x[1],
            x[0] * x[1] - self.beta * x[2],
        ]
    }

    fn jac(&self, x: &[f64]) -> Mat {
        Mat::from_rows(&[
            vec![-self.sigma, self.sigma, 0.0],
            vec![self.rho - x[2], -1.0, -x[0]],
            vec![x[1], x[0], -self.beta],
        ])
    }

    fn jvp(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        vec![
            self.sigma * (v[1] - v[0]),
            (self.rho - x[2]) * v[0] - v[1] - x[0] * v[2],
            x[1] * v[0] + x[0] * v[1] - self.beta * v[2],
        ]
    }

    fn hess_bilinear(&self, _x: &[f64], v: &[f64], w: &[f64]) -> Vec<f64> {
        vec![
            0.0,
            -(v[0] * w[2] + v[2] * w[0]),
            v[0] * w[1] + v[1] * w[0],
        ]
    }
}

/// `f(x) = A x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: Mat,
}

impl LinearSystem {
    pub fn new(a: Mat) -> Self {
        assert_eq!(a.rows(), a.cols(), "linear system needs a square matrix");
        Self { a }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(Mat::zeros(n, n))
    }
}

impl DynSystem for LinearSystem {
    fn name(&self) -> &str {
        "linear"
    }

    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn f(&self, x: &[f64]) -> Vec<f64> {
        self.a.matvec(x)
    }

    fn jac(&self, _x: &[f64]) -> Mat {
        self.a.clone()
    }

    fn hess_bilinear(&self, _x: &[f64], _v: &[f64], _w: &[f64]) -> Vec<f64> {
        vec![0.0; self.dim()]
    }
}

/// Wraps a bare vector field and supplies its derivatives by central
/// differences. Meant for checking third-party systems, not production
/// runs.
pub struct FiniteDifferenceSystem<F> {
    dim: usize,
    field: F,
    step: f64,
}

impl<F> FiniteDifferenceSystem<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(dim: usize, field: F) -> Self {
        Self {
            dim,
            field,
            step: 1e-5,
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }
}

impl<F> DynSystem for FiniteDifferenceSystem<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn name(&self) -> &str {
        "finite-difference"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn f(&self, x: &[f64]) -> Vec<f64> {
        (self.field)(x)
    }

    fn jac(&self, x: &[f64]) -> Mat {
        let n = self.dim;
        let mut j = Mat::zeros(n, n);
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            let col = self.jvp(x, &e);
            for i in 0..n {
                j[(i, k)] = col[i];
            }
        }
        j
    }

    fn jvp(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let h = self.step;
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        axpy(h, v, &mut xp);
        axpy(-h, v, &mut xm);
        let fp = (self.field)(&xp);
        let fm = (self.field)(&xm);
        fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
    }

    fn hess_bilinear(&self, x: &[f64], v: &[f64], w: &[f64]) -> Vec<f64> {
        // polarization of the directional second derivative
        let h = self.step.sqrt() * 1e-1;
        let second = |d: &[f64]| -> Vec<f64> {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            axpy(h, d, &mut xp);
            axpy(-h, d, &mut xm);
            let fp = (self.field)(&xp);
            let f0 = (self.field)(x);
            let fm = (self.field)(&xm);
            (0..self.dim)
                .map(|i| (fp[i] - 2.0 * f0[i] + fm[i]) / (h * h))
                .collect()
        };
        let sum: Vec<f64> = v.iter().zip(w).map(|(a, b)| a + b).collect();
        let diff: Vec<f64> = v.iter().zip(w).map(|(a, b)| a - b).collect();
        let sp = second(&sum);
        let sm = second(&diff);
        sp.iter().zip(&sm).map(|(a, b)| 0.25 * (a - b)).collect()
    }
}

pub fn vanderpol() -> VanDerPol {
    VanDerPol::default()
}

pub fn lorenz63() -> Lorenz63 {
    Lorenz63::default()
}

pub fn registry() -> Registry<dyn DynSystem> {
    let mut reg: Registry<dyn DynSystem> = Registry::new("system");
    reg.register("vanderpol", "Van der Pol oscillator, damping 2", || {
        Box::new(vanderpol())
    });
    reg.register("lorenz63", "Lorenz '63, sigma=10 rho=28 beta=8/3", || {
        Box::new(lorenz63())
    });
    reg
}

/// Time step of the RK2 midpoint scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepScheme {
    dt: f64,
}

impl StepScheme {
    pub fn new(dt: f64) -> Result<Self> {
        if dt > 0.0 && dt.is_finite() {
            Ok(Self { dt })
        } else {
            Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")))
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

fn midpoint(sys: &dyn DynSystem, x: &[f64], dt: f64) -> (Vec<f64>, Vec<f64>) {
    let fx = sys.f(x);
    let mut y = x.to_vec();
    axpy(0.5 * dt, &fx, &mut y);
    (y, fx)
}

/// `x + dt f(x + dt/2 f(x))`
pub fn rk2_step(sys: &dyn DynSystem, x: &[f64], dt: f64) -> Result<Vec<f64>> {
    let (y, _) = midpoint(sys, x, dt);
    let mut out = x.to_vec();
    axpy(dt, &sys.f(&y), &mut out);
    ensure_finite(&out, "rk2_step")?;
    Ok(out)
}

/// Derivative of [`rk2_step`] with respect to `x`, applied to `v`.
pub fn rk2_tangent_step(sys: &dyn DynSystem, x: &[f64], v: &[f64], dt: f64) -> Result<Vec<f64>> {
    let (y, _) = midpoint(sys, x, dt);
    let mut dy = v.to_vec();
    axpy(0.5 * dt, &sys.jvp(x, v), &mut dy);
    let mut out = v.to_vec();
    axpy(dt, &sys.jvp(&y, &dy), &mut out);
    ensure_finite(&out, "rk2_tangent_step")?;
    Ok(out)
}

/// Second derivative of [`rk2_step`] along the curve whose first and
/// second derivatives at `x` are `v` and `w`.
pub fn rk2_second_tangent_step(
    sys: &dyn DynSystem,
    x: &[f64],
    v: &[f64],
    w: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    Ok(rk2_jet_step(sys, x, v, w, dt)?.2)
}

/// One RK2 step of state, first tangent and second tangent together.
///
/// With `y = x + dt/2 f(x)` and `dy = v + dt/2 Df(x) v`:
/// `w' = w + dt [D²f(y)(dy, dy) + Df(y) (w + dt/2 (D²f(x)(v, v) + Df(x) w))]`.
pub fn rk2_jet_step(
    sys: &dyn DynSystem,
    x: &[f64],
    v: &[f64],
    w: &[f64],
    dt: f64,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let (y, _) = midpoint(sys, x, dt);

    let mut dy = v.to_vec();
    axpy(0.5 * dt, &sys.jvp(x, v), &mut dy);

    let mut ddy = w.to_vec();
    axpy(0.5 * dt, &sys.hess_bilinear(x, v, v), &mut ddy);
    axpy(0.5 * dt, &sys.jvp(x, w), &mut ddy);

    let mut x1 = x.to_vec();
    axpy(dt, &sys.f(&y), &mut x1);
    let mut v1 = v.to_vec();
    axpy(dt, &sys.jvp(&y, &dy), &mut v1);
    let mut w1 = w.to_vec();
    axpy(dt, &sys.hess_bilinear(&y, &dy, &dy), &mut w1);
    axpy(dt, &sys.jvp(&y, &ddy), &mut w1);

    ensure_finite(&x1, "rk2_step")?;
    ensure_finite(&v1, "rk2_tangent_step")?;
    ensure_finite(&w1, "rk2_second_tangent_step")?;
    Ok((x1, v1, w1))
}

/// States at `t = 0, dt, ..., steps·dt`.
pub fn integrate(sys: &dyn DynSystem, x0: &[f64], dt: f64, steps: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x0.to_vec());
    let mut x = x0.to_vec();
    for _ in 0..steps {
        x = rk2_step(sys, &x, dt)?;
        out.push(x.clone());
    }
    Ok(out)
}

/// State at `t_end`, with a shortened final step when `t_end` is not a
/// multiple of `dt`.
pub fn integrate_to(sys: &dyn DynSystem, x0: &[f64], t_end: f64, dt: f64) -> Result<Vec<f64>> {
    let full = (t_end / dt).floor() as usize;
    let mut x = x0.to_vec();
    for _ in 0..full {
        x = rk2_step(sys, &x, dt)?;
    }
    let rest = t_end - full as f64 * dt;
    if rest > 1e-15 * t_end.max(1.0) {
        x = rk2_step(sys, &x, rest)?;
    }
    Ok(x)
}

/// The Van der Pol run used by the one-dimensional experiments: start
/// at `(-a, 0)`, integrate with a fixed step, and locate the half and
/// full period from sign changes of `du/dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanDerPolScenario {
    pub a: f64,
    pub dt: f64,
    /// Rough half period, used only to bound the crossing search.
    pub t_half_nominal: f64,
    pub system: VanDerPol,
}

impl Default for VanDerPolScenario {
    fn default() -> Self {
        Self {
            a: 2.0199,
            dt: 1e-4,
            t_half_nominal: 3.819,
            system: VanDerPol::default(),
        }
    }
}

impl VanDerPolScenario {
    pub fn initial_state(&self) -> Vec<f64> {
        vec![-self.a, 0.0]
    }

    /// Time at which `du/dt` first changes sign from positive to
    /// non-positive (the maximum of `u`).
    pub fn half_period(&self) -> Result<f64> {
        self.crossing(1)
    }

    /// Time of the next `du/dt` sign change from negative to
    /// non-negative (the return to the minimum of `u`).
    pub fn period(&self) -> Result<f64> {
        self.crossing(2)
    }

    fn crossing(&self, which: usize) -> Result<f64> {
        let sys = &self.system;
        let dt = self.dt;
        let max_steps = ((2.0 * which as f64 + 1.0) * self.t_half_nominal / dt).ceil() as usize;
        let mut x = self.initial_state();
        let mut found = 0;
        // skip the start where du/dt = 0 exactly
        let mut prev = x[1];
        for k in 0..max_steps {
            let next = rk2_step(sys, &x, dt)?;
            let cur = next[1];
            let t0 = k as f64 * dt;
            let hit = if found % 2 == 0 {
                prev > 0.0 && cur <= 0.0
            } else {
                prev < 0.0 && cur >= 0.0
            };
            if hit {
                found += 1;
                if found == which {
                    return Ok(t0 + dt * prev / (prev - cur));
                }
            }
            prev = cur;
            x = next;
        }
        Err(Error::InvalidArgument(format!(
            "no du/dt sign change #{which} within {max_steps} steps"
        )))
    }
}

//! Nonlinear systems, trajectory simulation, and dissipativity audits.
//!
//! The system class is `x' = f(x, u)`, `y = h(x)` with as many outputs as inputs and
//! a steady state at the origin. A system is *nonlinear negative imaginary* when it
//! admits a positive-definite storage function `V` with `V'(x) <= y'^T u` along
//! trajectories — note the derivative of the *output* on the right-hand side, which
//! is what distinguishes the property from passivity. This module provides the
//! trajectory-level check (differential and integral form), the pointwise check for
//! input-affine systems, a global-attractivity probe, and the built-in example
//! systems used across the test suites.

use crate::error::{Error, Result};
use crate::mat::{self, Matrix};
use crate::signal::Signal;
use std::io::{self, Write};
use std::sync::Arc;

type DynFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
type OutFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type JacFn = Arc<dyn Fn(&[f64]) -> Matrix + Send + Sync>;
type DriftFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type InputMapFn = Arc<dyn Fn(&[f64]) -> Matrix + Send + Sync>;

/// Step used by every finite-difference fallback in this module.
const FD_STEP: f64 = 1e-6;

/// General nonlinear system `x' = f(x, u)`, `y = h(x)`.
#[derive(Clone)]
pub struct NonlinearSystem {
    name: String,
    n: usize,
    m: usize,
    f: DynFn,
    h: OutFn,
    h_jac: Option<JacFn>,
}

impl NonlinearSystem {
    /// Construct and validate: the origin must be a steady state (`f(0,0) = 0`,
    /// `h(0) = 0` within `1e-12`).
    pub fn new(
        name: impl Into<String>,
        n: usize,
        m: usize,
        f: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        h: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        let sys = NonlinearSystem {
            name: name.into(),
            n,
            m,
            f: Arc::new(f),
            h: Arc::new(h),
            h_jac: None,
        };
        sys.validate_origin()?;
        Ok(sys)
    }

    pub fn with_output_jacobian(
        mut self,
        jac: impl Fn(&[f64]) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        self.h_jac = Some(Arc::new(jac));
        self
    }

    fn validate_origin(&self) -> Result<()> {
        let zero_x = vec![0.0; self.n];
        let zero_u = vec![0.0; self.m];
        let f0 = (self.f)(&zero_x, &zero_u);
        let h0 = (self.h)(&zero_x);
        if f0.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "{}: dynamics returned {} states, expected {}",
                self.name,
                f0.len(),
                self.n
            )));
        }
        if h0.len() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "{}: output returned {} channels, expected {}",
                self.name,
                h0.len(),
                self.m
            )));
        }
        if mat::norm_inf(&f0) > 1e-12 || mat::norm_inf(&h0) > 1e-12 {
            return Err(Error::DimensionMismatch(format!(
                "{}: the origin is not a steady state",
                self.name
            )));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn input_dim(&self) -> usize {
        self.m
    }

    pub fn dynamics(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        (self.f)(x, u)
    }

    pub fn output(&self, x: &[f64]) -> Vec<f64> {
        (self.h)(x)
    }

    /// Output Jacobian `dh/dx` (m x n): analytic when supplied, otherwise central
    /// finite differences with step `1e-6`.
    pub fn output_jacobian(&self, x: &[f64]) -> Matrix {
        if let Some(j) = &self.h_jac {
            return j(x);
        }
        let mut m = Matrix::zeros(self.m, self.n);
        let mut xp = x.to_vec();
        for j in 0..self.n {
            let x0 = xp[j];
            xp[j] = x0 + FD_STEP;
            let hp = (self.h)(&xp);
            xp[j] = x0 - FD_STEP;
            let hm = (self.h)(&xp);
            xp[j] = x0;
            for i in 0..self.m {
                m[(i, j)] = (hp[i] - hm[i]) / (2.0 * FD_STEP);
            }
        }
        m
    }

    /// `y' = dh/dx * f(x, u)` at a point.
    pub fn output_rate(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        self.output_jacobian(x).matvec(&self.dynamics(x, u))
    }

    pub fn has_analytic_output_jacobian(&self) -> bool {
        self.h_jac.is_some()
    }
}

/// Input-affine system `x' = f(x) + g(x) u`, `y = h(x)`.
#[derive(Clone)]
pub struct AffineSystem {
    name: String,
    n: usize,
    m: usize,
    drift: DriftFn,
    input_map: InputMapFn,
    h: OutFn,
    h_jac: Option<JacFn>,
}

impl AffineSystem {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        m: usize,
        drift: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        input_map: impl Fn(&[f64]) -> Matrix + Send + Sync + 'static,
        h: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        let sys = AffineSystem {
            name: name.into(),
            n,
            m,
            drift: Arc::new(drift),
            input_map: Arc::new(input_map),
            h: Arc::new(h),
            h_jac: None,
        };
        // reuse the origin validation by lowering to the general form
        sys.clone().into_system()?;
        Ok(sys)
    }

    pub fn with_output_jacobian(
        mut self,
        jac: impl Fn(&[f64]) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        self.h_jac = Some(Arc::new(jac));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn input_dim(&self) -> usize {
        self.m
    }

    pub fn drift(&self, x: &[f64]) -> Vec<f64> {
        (self.drift)(x)
    }

    pub fn input_matrix(&self, x: &[f64]) -> Matrix {
        (self.input_map)(x)
    }

    pub fn output(&self, x: &[f64]) -> Vec<f64> {
        (self.h)(x)
    }

    /// Lower to the general representation (the simulation entry point).
    pub fn into_system(self) -> Result<NonlinearSystem> {
        let drift = self.drift.clone();
        let input_map = self.input_map.clone();
        let h = self.h.clone();
        let sys = NonlinearSystem::new(
            self.name.clone(),
            self.n,
            self.m,
            move |x, u| {
                let mut dx = drift(x);
                let g = input_map(x);
                let gu = g.matvec(u);
                for (d, v) in dx.iter_mut().zip(gu) {
                    *d += v;
                }
                dx
            },
            move |x| h(x),
        )?;
        Ok(match self.h_jac {
            Some(j) => {
                let j = j.clone();
                sys.with_output_jacobian(move |x| j(x))
            }
            None => sys,
        })
    }

    pub fn to_system(&self) -> NonlinearSystem {
        self.clone().into_system().expect("validated at construction")
    }
}

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Candidate storage function with optional analytic gradient.
#[derive(Clone)]
pub struct StorageFunction {
    v: ScalarFn,
    grad: Option<GradientFn>,
}

impl StorageFunction {
    pub fn new(v: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        StorageFunction { v: Arc::new(v), grad: None }
    }

    pub fn with_gradient(
        mut self,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    /// Quadratic storage `V(x) = x^T P x / 2` with its exact gradient.
    pub fn quadratic(p: &Matrix) -> Self {
        assert!(p.is_square(), "storage matrix must be square");
        let p1 = p.clone();
        let p2 = p.clone();
        StorageFunction::new(move |x| 0.5 * mat::dot(x, &p1.matvec(x)))
            .with_gradient(move |x| p2.matvec(x))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.v)(x)
    }

    /// Analytic gradient when available, else central differences (step `1e-6`).
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        if let Some(g) = &self.grad {
            return g(x);
        }
        let mut out = vec![0.0; x.len()];
        let mut xp = x.to_vec();
        for (j, o) in out.iter_mut().enumerate() {
            let x0 = xp[j];
            xp[j] = x0 + FD_STEP;
            let vp = (self.v)(&xp);
            xp[j] = x0 - FD_STEP;
            let vm = (self.v)(&xp);
            xp[j] = x0;
            *o = (vp - vm) / (2.0 * FD_STEP);
        }
        out
    }
}

/// Sampled trajectory: `times`, `states`, `inputs`, and `outputs` all share one
/// length, and `outputs[k] = h(states[k])` by construction.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() > 1 { self.times[1] - self.times[0] } else { 0.0 }
    }

    /// Write as CSV with header `t,x1..xn,u1..um,y1..ym`, 17 significant digits.
    pub fn write_csv(&self, w: &mut impl Write) -> io::Result<()> {
        let n = self.states.first().map_or(0, Vec::len);
        let m = self.inputs.first().map_or(0, Vec::len);
        let p = self.outputs.first().map_or(0, Vec::len);
        write!(w, "t")?;
        for i in 1..=n {
            write!(w, ",x{i}")?;
        }
        for i in 1..=m {
            write!(w, ",u{i}")?;
        }
        for i in 1..=p {
            write!(w, ",y{i}")?;
        }
        writeln!(w)?;
        for k in 0..self.len() {
            write!(w, "{:.16e}", self.times[k])?;
            for v in &self.states[k] {
                write!(w, ",{v:.16e}")?;
            }
            for v in &self.inputs[k] {
                write!(w, ",{v:.16e}")?;
            }
            for v in &self.outputs[k] {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &std::path::Path) -> io::Result<()> {
        let mut f = io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut f)
    }
}

/// Fixed-step fourth-order Runge–Kutta simulation.
///
/// Samples are recorded at every step including `t = 0`; the step count is
/// `round(t_final / dt)`. Trajectories that blow past `1e12` in any coordinate (or
/// go non-finite) abort with [`Error::NonFinite`] stamped with the failure time.
pub fn simulate(
    sys: &NonlinearSystem,
    x0: &[f64],
    input: &Signal,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory> {
    assert!(dt > 0.0 && t_final > 0.0, "time span and step must be positive");
    assert_eq!(x0.len(), sys.state_dim(), "initial state dimension mismatch");
    let steps = (t_final / dt).round().max(1.0) as usize;
    let mut x = x0.to_vec();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut inputs = Vec::with_capacity(steps + 1);
    let mut outputs = Vec::with_capacity(steps + 1);

    let record =
        |t: f64,
         x: &[f64],
         times: &mut Vec<f64>,
         states: &mut Vec<Vec<f64>>,
         inputs: &mut Vec<Vec<f64>>,
         outputs: &mut Vec<Vec<f64>>| {
            times.push(t);
            states.push(x.to_vec());
            inputs.push(input.eval(t));
            outputs.push(sys.output(x));
        };

    record(0.0, &x, &mut times, &mut states, &mut inputs, &mut outputs);
    for k in 0..steps {
        let t = k as f64 * dt;
        let u1 = input.eval(t);
        let u2 = input.eval(t + 0.5 * dt);
        let u3 = input.eval(t + dt);
        let k1 = sys.dynamics(&x, &u1);
        let k2 = sys.dynamics(&stepped(&x, &k1, 0.5 * dt), &u2);
        let k3 = sys.dynamics(&stepped(&x, &k2, 0.5 * dt), &u2);
        let k4 = sys.dynamics(&stepped(&x, &k3, dt), &u3);
        for i in 0..x.len() {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t_next = (k + 1) as f64 * dt;
        if x.iter().any(|v| !v.is_finite() || v.abs() > 1e12) {
            return Err(Error::NonFinite { t: t_next });
        }
        record(t_next, &x, &mut times, &mut states, &mut inputs, &mut outputs);
    }
    Ok(Trajectory { times, states, inputs, outputs })
}

fn stepped(x: &[f64], k: &[f64], h: f64) -> Vec<f64> {
    x.iter().zip(k).map(|(xi, ki)| xi + h * ki).collect()
}

/// Output derivatives along a trajectory.
///
/// When the system carries an analytic output Jacobian, `y' = dh/dx f(x,u)` is
/// evaluated pointwise at every sample. Otherwise fourth-order finite differences
/// of the recorded outputs are used: the standard central stencil inside, one-sided
/// five-point stencils at the two samples on each end.
pub fn output_rates(sys: &NonlinearSystem, traj: &Trajectory) -> Vec<Vec<f64>> {
    let len = traj.len();
    if sys.has_analytic_output_jacobian() {
        return (0..len)
            .map(|k| sys.output_rate(&traj.states[k], &traj.inputs[k]))
            .collect();
    }
    let p = traj.outputs.first().map_or(0, Vec::len);
    let dt = traj.dt();
    assert!(len >= 5, "finite-difference output rates need at least 5 samples");
    let mut rates = vec![vec![0.0; p]; len];
    let y = &traj.outputs;
    for c in 0..p {
        // one-sided, 4th order
        rates[0][c] = (-25.0 * y[0][c] + 48.0 * y[1][c] - 36.0 * y[2][c] + 16.0 * y[3][c]
            - 3.0 * y[4][c])
            / (12.0 * dt);
        rates[1][c] = (-3.0 * y[0][c] - 10.0 * y[1][c] + 18.0 * y[2][c] - 6.0 * y[3][c]
            + y[4][c])
            / (12.0 * dt);
        rates[len - 2][c] = (3.0 * y[len - 1][c] + 10.0 * y[len - 2][c] - 18.0 * y[len - 3][c]
            + 6.0 * y[len - 4][c]
            - y[len - 5][c])
            / (12.0 * dt);
        rates[len - 1][c] = (25.0 * y[len - 1][c] - 48.0 * y[len - 2][c] + 36.0 * y[len - 3][c]
            - 16.0 * y[len - 4][c]
            + 3.0 * y[len - 5][c])
            / (12.0 * dt);
        for k in 2..len - 2 {
            rates[k][c] = (y[k - 2][c] - 8.0 * y[k - 1][c] + 8.0 * y[k + 1][c] - y[k + 2][c])
                / (12.0 * dt);
        }
    }
    rates
}

/// Trajectory-level dissipativity report for the inequality `V' <= y'^T u`.
#[derive(Debug, Clone)]
pub struct DissipativityReport {
    /// Worst excess `V' - y'^T u` over all samples (positive = violated).
    pub max_violation: f64,
    pub worst_time: f64,
    /// Minimum over `t` of `integral(y'^T u) - (V(x(t)) - V(x(0)))`; negative means
    /// the integral form of the inequality fails somewhere.
    pub integral_slack: f64,
    pub samples: usize,
}

impl DissipativityReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_violation <= tol && self.integral_slack >= -tol
    }
}

/// Check `V' <= y'^T u` along a recorded trajectory, in both differential and
/// integral form. `V'` is evaluated pointwise as `grad V . f(x, u)`.
pub fn dissipativity_check(
    sys: &NonlinearSystem,
    storage: &StorageFunction,
    traj: &Trajectory,
) -> DissipativityReport {
    let len = traj.len();
    assert!(len >= 2, "dissipativity check needs at least two samples");
    let rates = output_rates(sys, traj);
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst_time = 0.0;
    let mut integral = 0.0;
    let mut integral_slack = f64::INFINITY;
    let v0 = storage.eval(&traj.states[0]);
    let mut prev_supply = 0.0;
    for (k, rate) in rates.iter().enumerate() {
        let x = &traj.states[k];
        let u = &traj.inputs[k];
        let vdot = mat::dot(&storage.gradient(x), &sys.dynamics(x, u));
        let supply = mat::dot(rate, u);
        let excess = vdot - supply;
        if excess > max_violation {
            max_violation = excess;
            worst_time = traj.times[k];
        }
        if k > 0 {
            integral += 0.5 * (supply + prev_supply) * (traj.times[k] - traj.times[k - 1]);
            let slack = integral - (storage.eval(x) - v0);
            integral_slack = integral_slack.min(slack);
        }
        prev_supply = supply;
    }
    DissipativityReport { max_violation, worst_time, integral_slack, samples: len }
}

/// Pointwise nonlinear-KYP inequality report for input-affine systems.
#[derive(Debug, Clone)]
pub struct PointwiseNniReport {
    /// Worst excess `grad V . (f + g u) - (dh/dx (f + g u))^T u` over the samples.
    pub max_violation: f64,
    pub worst_state: Vec<f64>,
    pub worst_input: Vec<f64>,
    /// Fraction of samples with positive excess (beyond `1e-9`).
    pub violating_fraction: f64,
}

/// Evaluate the state-space NNI inequality at arbitrary `(x, u)` samples — no
/// simulation involved, so this probes the whole box, not just reachable points.
pub fn nni_pointwise_check(
    sys: &AffineSystem,
    storage: &StorageFunction,
    samples: &[(Vec<f64>, Vec<f64>)],
) -> PointwiseNniReport {
    assert!(!samples.is_empty(), "need at least one sample");
    let general = sys.to_system();
    let excesses = crate::exec::map(samples, |(x, u)| {
        let xdot = general.dynamics(x, u);
        let vdot = mat::dot(&storage.gradient(x), &xdot);
        let ydot = general.output_jacobian(x).matvec(&xdot);
        vdot - mat::dot(&ydot, u)
    });
    let mut worst = f64::NEG_INFINITY;
    let mut worst_idx = 0;
    let mut violating = 0usize;
    for (i, &e) in excesses.iter().enumerate() {
        if e > worst {
            worst = e;
            worst_idx = i;
        }
        if e > 1e-9 {
            violating += 1;
        }
    }
    PointwiseNniReport {
        max_violation: worst,
        worst_state: samples[worst_idx].0.clone(),
        worst_input: samples[worst_idx].1.clone(),
        violating_fraction: violating as f64 / samples.len() as f64,
    }
}

/// Sobol `(x, u)` samples over `[lo, hi]^(n+m)`, split into state and input parts.
pub fn sample_state_input_box(
    n: usize,
    m: usize,
    count: usize,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    crate::sobol::sample_box(n + m, count, lo, hi, seed)
        .into_iter()
        .map(|p| (p[..n].to_vec(), p[n..].to_vec()))
        .collect()
}

/// Unforced-convergence probe: simulate from each initial condition with zero input
/// and test `||x(T)|| < delta`. Blow-ups count as failures, not errors.
#[derive(Debug, Clone)]
pub struct GasProbeReport {
    pub all_converged: bool,
    pub worst_final_norm: f64,
    /// Indices of initial conditions that failed to converge.
    pub failures: Vec<usize>,
}

pub fn gas_probe(
    sys: &NonlinearSystem,
    ics: &[Vec<f64>],
    t_final: f64,
    dt: f64,
    delta: f64,
) -> GasProbeReport {
    let zero = Signal::Zero { channels: sys.input_dim() };
    let finals = crate::exec::map(ics, |x0| {
        match simulate(sys, x0, &zero, t_final, dt) {
            Ok(traj) => mat::norm2(traj.states.last().unwrap()),
            Err(_) => f64::INFINITY,
        }
    });
    let mut failures = Vec::new();
    let mut worst = 0.0_f64;
    for (i, &norm) in finals.iter().enumerate() {
        worst = worst.max(norm);
        // A NaN final norm must count as a failure, hence not `norm >= delta`.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(norm < delta) {
            failures.push(i);
        }
    }
    GasProbeReport { all_converged: failures.is_empty(), worst_final_norm: worst, failures }
}

// ---------------------------------------------------------------------------
// Built-in example systems
// ---------------------------------------------------------------------------

/// Mass–spring–damper parameters for `m x'' + beta x' + k (x + x^3) = u`.
#[derive(Debug, Clone, Copy)]
pub struct MsdParams {
    pub mass: f64,
    pub beta: f64,
    pub k: f64,
}

impl Default for MsdParams {
    fn default() -> Self {
        MsdParams { mass: 1.0, beta: 1.0, k: 2.0 }
    }
}

/// Mass–spring–damper with hardening cubic spring, output `y = x`, and the
/// mechanical energy `V = m x2^2 / 2 + k (x1^2/2 + x1^4/4)` as storage.
pub fn make_msd(params: MsdParams) -> Result<(AffineSystem, StorageFunction)> {
    for (name, value) in
        [("mass", params.mass), ("beta", params.beta), ("k", params.k)]
    {
        if value <= 0.0 {
            return Err(Error::NonPositiveParameter { name, value });
        }
    }
    let MsdParams { mass, beta, k } = params;
    let sys = AffineSystem::new(
        "msd",
        2,
        1,
        move |x| vec![x[1], -(k / mass) * (x[0] + x[0].powi(3)) - (beta / mass) * x[1]],
        move |_| Matrix::from_rows(&[vec![0.0], vec![1.0 / mass]]),
        |x| vec![x[0]],
    )?
    .with_output_jacobian(|_| Matrix::from_rows(&[vec![1.0, 0.0]]));
    let storage = StorageFunction::new(move |x| {
        0.5 * mass * x[1] * x[1] + k * (0.5 * x[0] * x[0] + 0.25 * x[0].powi(4))
    })
    .with_gradient(move |x| vec![k * (x[0] + x[0].powi(3)), mass * x[1]]);
    Ok((sys, storage))
}

/// One-degree-of-freedom Hamiltonian system with collocated force input:
/// `q' = dH/dp`, `p' = -dH/dq + u`, `y = q`. Storage is the Hamiltonian itself and
/// the dissipation inequality holds with equality (`V' = y'^T u`).
pub fn make_hamiltonian(
    name: impl Into<String>,
    hamiltonian: impl Fn(f64, f64) -> f64 + Send + Sync + Clone + 'static,
    grad: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + Clone + 'static,
) -> Result<(AffineSystem, StorageFunction)> {
    let g1 = grad.clone();
    let sys = AffineSystem::new(
        name,
        2,
        1,
        move |x| {
            let (hq, hp) = g1(x[0], x[1]);
            vec![hp, -hq]
        },
        |_| Matrix::from_rows(&[vec![0.0], vec![1.0]]),
        |x| vec![x[0]],
    )?
    .with_output_jacobian(|_| Matrix::from_rows(&[vec![1.0, 0.0]]));
    let h2 = hamiltonian.clone();
    let storage = StorageFunction::new(move |x| h2(x[0], x[1])).with_gradient(move |x| {
        let (hq, hp) = grad(x[0], x[1]);
        vec![hq, hp]
    });
    Ok((sys, storage))
}

/// Linear oscillator `H = (q^2 + p^2) / 2`.
pub fn make_hamiltonian_oscillator() -> (AffineSystem, StorageFunction) {
    make_hamiltonian(
        "hamiltonian_oscillator",
        |q, p| 0.5 * (q * q + p * p),
        |q, p| (q, p),
    )
    .expect("origin is a steady state")
}

/// Gravity pendulum `H = p^2/2 + (1 - cos q)`.
pub fn make_hamiltonian_pendulum() -> (AffineSystem, StorageFunction) {
    make_hamiltonian(
        "hamiltonian_pendulum",
        |q, p| 0.5 * p * p + (1.0 - q.cos()),
        |q, p| (q.sin(), p),
    )
    .expect("origin is a steady state")
}

/// Parameters of the planar two-link manipulator (uniform rods, centers of mass at
/// mid-length, inertias `m l^2 / 12`).
#[derive(Debug, Clone, Copy)]
pub struct Pendulum2Params {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub gravity: f64,
}

impl Default for Pendulum2Params {
    fn default() -> Self {
        Pendulum2Params { m1: 1.0, m2: 1.0, l1: 1.0, l2: 1.0, gravity: 9.81 }
    }
}

/// Two-link Euler–Lagrange manipulator with joint torques as inputs and joint
/// angles as outputs. State is `(q1, q2, q1', q2')`; angles are measured from the
/// hanging equilibrium so the potential is zero at the origin. Storage is the total
/// mechanical energy; the Coriolis matrix comes from Christoffel symbols, so
/// `M' - 2C` is skew-symmetric and the dissipation inequality holds with equality.
pub fn make_euler_lagrange_pendulum2(
    params: Pendulum2Params,
) -> Result<(AffineSystem, StorageFunction)> {
    for (name, value) in [
        ("m1", params.m1),
        ("m2", params.m2),
        ("l1", params.l1),
        ("l2", params.l2),
        ("gravity", params.gravity),
    ] {
        if value <= 0.0 {
            return Err(Error::NonPositiveParameter { name, value });
        }
    }
    let Pendulum2Params { m1, m2, l1, l2, gravity } = params;
    let (lc1, lc2) = (0.5 * l1, 0.5 * l2);
    let (i1, i2) = (m1 * l1 * l1 / 12.0, m2 * l2 * l2 / 12.0);
    let alpha = i1 + i2 + m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2);
    let beta = m2 * l1 * lc2;
    let delta = i2 + m2 * lc2 * lc2;
    let grav1 = (m1 * lc1 + m2 * l1) * gravity;
    let grav2 = m2 * lc2 * gravity;

    let mass = move |q2: f64| {
        let c2 = q2.cos();
        Matrix::from_rows(&[
            vec![alpha + 2.0 * beta * c2, delta + beta * c2],
            vec![delta + beta * c2, delta],
        ])
    };
    let gravity_torque = move |q1: f64, q2: f64| {
        vec![grav1 * q1.sin() + grav2 * (q1 + q2).sin(), grav2 * (q1 + q2).sin()]
    };

    let drift = move |x: &[f64]| {
        let (q1, q2, qd1, qd2) = (x[0], x[1], x[2], x[3]);
        let s2 = q2.sin();
        // C(q, q') q' from Christoffel symbols
        let cqd = [
            -beta * s2 * qd2 * qd1 - beta * s2 * (qd1 + qd2) * qd2,
            beta * s2 * qd1 * qd1,
        ];
        let g = gravity_torque(q1, q2);
        let rhs = vec![-cqd[0] - g[0], -cqd[1] - g[1]];
        let qdd = mass(q2).solve_vec(&rhs).expect("inertia matrix is positive definite");
        vec![qd1, qd2, qdd[0], qdd[1]]
    };
    let input_map = move |x: &[f64]| {
        let minv = mass(x[1]).inverse().expect("inertia matrix is positive definite");
        Matrix::from_fn(4, 2, |i, j| if i < 2 { 0.0 } else { minv[(i - 2, j)] })
    };
    let sys = AffineSystem::new("pendulum2", 4, 2, drift, input_map, |x| vec![x[0], x[1]])?
        .with_output_jacobian(|_| {
            Matrix::from_rows(&[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]])
        });

    let storage = StorageFunction::new(move |x| {
        let (q1, q2, qd1, qd2) = (x[0], x[1], x[2], x[3]);
        let qd = vec![qd1, qd2];
        let kinetic = 0.5 * mat::dot(&qd, &mass(q2).matvec(&qd));
        let potential = grav1 * (1.0 - q1.cos()) + grav2 * (1.0 - (q1 + q2).cos());
        kinetic + potential
    })
    .with_gradient(move |x| {
        let (q1, q2, qd1, qd2) = (x[0], x[1], x[2], x[3]);
        let qd = vec![qd1, qd2];
        let s2 = q2.sin();
        // dV/dq2 includes the configuration dependence of the inertia matrix
        let dm_quad = 0.5
            * (-2.0 * beta * s2 * qd1 * qd1 - 2.0 * beta * s2 * qd1 * qd2);
        let g = gravity_torque(q1, q2);
        let mqd = mass(q2).matvec(&qd);
        vec![g[0], dm_quad + g[1], mqd[0], mqd[1]]
    });
    Ok((sys, storage))
}

//! Positive-feedback interconnections and the steady-state machinery that
//! backs their stability audits.
//!
//! The loop under study closes two systems onto each other, `u1 = y2 + r1`,
//! `u2 = y1 + r2`, with the references held at zero for stability runs. Four
//! things are audited before a closed-loop experiment is trusted:
//!
//! 1. every constant input admits a steady state (Newton solves converge),
//! 2. the input-to-steady-state map is continuous (no branch jumps under
//!    warm-started continuation),
//! 3. the chained steady-state outputs never oppose each other
//!    (`y1_bar . y2_bar >= 0`),
//! 4. the loop's steady-state gain stays inside the unit sector.
//!
//! On top of those, [`composite_lyapunov`] assembles the candidate
//! `W(x1, x2) = V1 + V2 - h1(x1)^T h2(x2)`, [`positivity_probe`] hunts for
//! sign failures of `W`, and [`steady_state_gain_iteration`] replays the
//! contraction ledger that justifies the cross term.

use crate::error::{Error, Result};
use crate::mat::{self, Matrix};
use crate::nonlinear::{simulate, NonlinearSystem, StorageFunction};
use crate::signal::Signal;
use crate::{exec, sobol};
use std::io::Write;

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 100;
const FD_STEP: f64 = 1e-7;

/// Equilibrium of `f(x, u_bar) = 0` located by Newton's method.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub u_bar: Vec<f64>,
    pub x_bar: Vec<f64>,
    pub y_bar: Vec<f64>,
    /// `||f(x_bar, u_bar)||_2` at the returned point.
    pub newton_residual: f64,
    pub converged: bool,
}

/// Damped Newton solve of `f(x, u_bar) = 0` from `x_guess`.
///
/// The Jacobian is forward-differenced with step `1e-7`; steps are scaled back
/// by an Armijo test on `||f||^2` until they make progress. Converges when the
/// residual drops below `1e-10`. If the primary guess dead-ends — typical just
/// past a fold, where the tracked branch has ceased to exist — the solve
/// retries from a small deterministic palette of scaled starts so that a root
/// on another branch can still be reached (and the resulting jump observed by
/// the continuation audit).
///
/// Errors: [`Error::SingularJacobian`] if the linear solve degenerates,
/// [`Error::MaxIterations`] when no attempt reaches the tolerance; the
/// reported residual is the best one achieved.
pub fn solve_steady_state(
    sys: &NonlinearSystem,
    u_bar: &[f64],
    x_guess: &[f64],
) -> Result<SteadyState> {
    assert_eq!(u_bar.len(), sys.input_dim(), "steady-state input dimension");
    assert_eq!(x_guess.len(), sys.state_dim(), "steady-state guess dimension");
    let n = sys.state_dim();
    let scale = 1.0 + mat::norm_inf(x_guess);
    let mut starts: Vec<Vec<f64>> = vec![x_guess.to_vec(), vec![0.0; n]];
    for s in [1.0, -1.0, 2.0, -2.0, 4.0, -4.0] {
        starts.push(vec![s * scale; n]);
    }

    let mut best_err: Option<(f64, Error)> = None;
    for start in &starts {
        match newton_attempt(sys, u_bar, start) {
            Ok(ss) => return Ok(ss),
            Err((res, err)) => {
                if best_err.as_ref().is_none_or(|(r, _)| res < *r) {
                    best_err = Some((res, err));
                }
            }
        }
    }
    Err(best_err.expect("at least one start was attempted").1)
}

fn newton_attempt(
    sys: &NonlinearSystem,
    u_bar: &[f64],
    start: &[f64],
) -> std::result::Result<SteadyState, (f64, Error)> {
    let n = sys.state_dim();
    let mut x = start.to_vec();
    let mut fx = sys.dynamics(&x, u_bar);
    let mut res = mat::norm2(&fx);

    for _ in 0..=NEWTON_MAX_ITER {
        if res <= NEWTON_TOL {
            return Ok(SteadyState {
                u_bar: u_bar.to_vec(),
                x_bar: x.clone(),
                y_bar: sys.output(&x),
                newton_residual: res,
                converged: true,
            });
        }
        // forward-difference Jacobian of x -> f(x, u_bar)
        let mut jac = Matrix::zeros(n, n);
        for j in 0..n {
            let mut xp = x.clone();
            xp[j] += FD_STEP;
            let fp = sys.dynamics(&xp, u_bar);
            for i in 0..n {
                jac[(i, j)] = (fp[i] - fx[i]) / FD_STEP;
            }
        }
        let neg_fx: Vec<f64> = fx.iter().map(|v| -v).collect();
        let dir = match jac.solve_vec(&neg_fx) {
            Ok(d) => d,
            Err(_) => return Err((res, Error::SingularJacobian)),
        };

        // Armijo backtracking on the squared residual
        let mut lambda = 1.0;
        let mut advanced = false;
        while lambda >= 1e-12 {
            let cand: Vec<f64> =
                x.iter().zip(&dir).map(|(xi, di)| xi + lambda * di).collect();
            let fc = sys.dynamics(&cand, u_bar);
            let rc = mat::norm2(&fc);
            if rc <= (1.0 - 1e-4 * lambda) * res {
                x = cand;
                fx = fc;
                res = rc;
                advanced = true;
                break;
            }
            lambda *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    Err((res, Error::MaxIterations { limit: NEWTON_MAX_ITER, residual: res }))
}

/// Warm-started continuation along an ordered input path, with branch-jump
/// detection.
#[derive(Debug, Clone)]
pub struct ContinuationReport {
    pub states: Vec<Vec<f64>>,
    /// Largest ratio of a step to the preceding secant trend.
    pub max_jump: f64,
    pub jump_index: Option<usize>,
    pub continuous: bool,
}

/// Track the steady state along `u_path`, warm-starting each Newton solve from
/// the previous solution. A step whose size exceeds 10 times the local secant
/// trend is flagged as a branch jump — evidence (not proof) that the
/// input-to-equilibrium map is discontinuous or multivalued.
pub fn continuation_audit(
    sys: &NonlinearSystem,
    u_path: &[Vec<f64>],
) -> Result<ContinuationReport> {
    assert!(u_path.len() >= 2, "continuation needs an actual path");
    let mut states: Vec<Vec<f64>> = Vec::with_capacity(u_path.len());
    let mut guess = vec![0.0; sys.state_dim()];
    for u in u_path {
        let ss = solve_steady_state(sys, u, &guess)?;
        guess = ss.x_bar.clone();
        states.push(ss.x_bar);
    }
    let mut max_jump: f64 = 0.0;
    let mut jump_index = None;
    let mut prev_step: Option<f64> = None;
    for i in 1..states.len() {
        let step = mat::norm2(
            &states[i]
                .iter()
                .zip(&states[i - 1])
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        );
        if let Some(trend) = prev_step {
            let floor = 1e-9 * (1.0 + mat::norm2(&states[i - 1]));
            let ratio = step / trend.max(floor);
            if ratio > max_jump {
                max_jump = ratio;
                if ratio > 10.0 {
                    jump_index = Some(i);
                }
            }
        }
        prev_step = Some(step);
    }
    Ok(ContinuationReport { states, max_jump, jump_index, continuous: max_jump <= 10.0 })
}

/// Two systems in positive feedback: `u1 = y2 + r1`, `u2 = y1 + r2`.
#[derive(Clone)]
pub struct FeedbackSystem {
    plant: NonlinearSystem,
    controller: NonlinearSystem,
}

/// Close the loop. Requires the plant's input width to match the controller's
/// output width and vice versa (outputs here always have the width of the
/// respective input, so this reduces to equal channel counts).
pub fn positive_feedback_loop(
    plant: NonlinearSystem,
    controller: NonlinearSystem,
) -> Result<FeedbackSystem> {
    if plant.input_dim() != controller.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "feedback ports disagree: plant has {} channels, controller {}",
            plant.input_dim(),
            controller.input_dim()
        )));
    }
    Ok(FeedbackSystem { plant, controller })
}

impl FeedbackSystem {
    pub fn plant(&self) -> &NonlinearSystem {
        &self.plant
    }

    pub fn controller(&self) -> &NonlinearSystem {
        &self.controller
    }

    pub fn state_dim(&self) -> usize {
        self.plant.state_dim() + self.controller.state_dim()
    }

    /// The closed loop as a single system on the stacked state `(x1, x2)`.
    ///
    /// Inputs are the stacked references `(r1, r2)` (drive them with
    /// [`Signal::Zero`] for autonomous runs) and the output stacks `(y1, y2)`.
    pub fn system(&self) -> NonlinearSystem {
        let n1 = self.plant.state_dim();
        let m1 = self.plant.input_dim();
        let m2 = self.controller.input_dim();
        let plant = self.plant.clone();
        let ctrl = self.controller.clone();
        let (po, co) = (self.plant.clone(), self.controller.clone());
        let (pj, cj) = (self.plant.clone(), self.controller.clone());
        let name = format!("{}<->{}", self.plant.name(), self.controller.name());
        NonlinearSystem::new(
            name,
            self.state_dim(),
            m1 + m2,
            move |z, r| {
                let (x1, x2) = z.split_at(n1);
                let y1 = plant.output(x1);
                let y2 = ctrl.output(x2);
                let u1: Vec<f64> = y2.iter().zip(&r[..m1]).map(|(a, b)| a + b).collect();
                let u2: Vec<f64> = y1.iter().zip(&r[m1..]).map(|(a, b)| a + b).collect();
                let mut dz = plant.dynamics(x1, &u1);
                dz.extend(ctrl.dynamics(x2, &u2));
                dz
            },
            move |z| {
                let (x1, x2) = z.split_at(n1);
                let mut y = po.output(x1);
                y.extend(co.output(x2));
                y
            },
        )
        .expect("origin-anchored subsystems keep the loop origin-anchored")
        .with_output_jacobian(move |z| {
            let (x1, x2) = z.split_at(n1);
            let j1 = pj.output_jacobian(x1);
            let j2 = cj.output_jacobian(x2);
            let mut jac = Matrix::zeros(m1 + m2, z.len());
            for i in 0..m1 {
                for k in 0..n1 {
                    jac[(i, k)] = j1[(i, k)];
                }
            }
            for i in 0..m2 {
                for k in 0..x2.len() {
                    jac[(m1 + i, n1 + k)] = j2[(i, k)];
                }
            }
            jac
        })
    }

    /// Steady-state chain for a held plant input: `u1 -> (x1_bar, y1_bar)`,
    /// then `u2 = y1_bar -> (x2_bar, y2_bar)`.
    pub fn steady_state_chain(&self, u1: &[f64]) -> Result<(SteadyState, SteadyState)> {
        let g1 = vec![0.0; self.plant.state_dim()];
        let s1 = solve_steady_state(&self.plant, u1, &g1)?;
        let g2 = vec![0.0; self.controller.state_dim()];
        let s2 = solve_steady_state(&self.controller, &s1.y_bar, &g2)?;
        Ok((s1, s2))
    }
}

/// Outcome of the steady-state output-sign audit.
#[derive(Debug, Clone)]
pub struct SignChainReport {
    pub products: Vec<f64>,
    pub worst_value: f64,
    pub worst_u: Vec<f64>,
    pub nonnegative: bool,
}

/// For each grid input, chase the steady-state chain and check
/// `y1_bar . y2_bar >= 0` (within `1e-9`).
pub fn steady_state_sign_audit(
    fb: &FeedbackSystem,
    u_grid: &[Vec<f64>],
) -> Result<SignChainReport> {
    let chained: Result<Vec<(f64, Vec<f64>)>> = exec::map(u_grid, |u| {
        let (s1, s2) = fb.steady_state_chain(u)?;
        Ok((mat::dot(&s1.y_bar, &s2.y_bar), u.clone()))
    })
    .into_iter()
    .collect();
    let chained = chained?;
    let products: Vec<f64> = chained.iter().map(|(p, _)| *p).collect();
    let (worst_value, worst_u) = chained
        .into_iter()
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .expect("sign audit needs a non-empty grid");
    Ok(SignChainReport { products, worst_value, worst_u, nonnegative: worst_value >= -1e-9 })
}

/// Steady-state sector audit: is the loop's chained gain below one?
#[derive(Debug, Clone)]
pub struct SectorScan {
    pub u_grid: Vec<Vec<f64>>,
    pub y2_bars: Vec<Vec<f64>>,
    /// Largest `||y2_bar|| / ||u1_bar||` over the grid and the limit probes.
    pub gamma_hat: f64,
    pub margin: f64,
    pub satisfied: bool,
}

impl SectorScan {
    /// Figure-style CSV: each grid point with the admissible band at slope
    /// `1 - margin`. Multichannel scans are written as norms with the sign of
    /// the first channel.
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "u_bar,y2_bar,upper_bound,lower_bound")?;
        let slope = 1.0 - self.margin;
        for (u, y) in self.u_grid.iter().zip(&self.y2_bars) {
            let (us, ys) = if u.len() == 1 {
                (u[0], y[0])
            } else {
                (mat::norm2(u).copysign(u[0]), mat::norm2(y).copysign(y[0]))
            };
            let band = slope * us.abs();
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", us, ys, band, -band)?;
        }
        Ok(())
    }
}

/// Measure `gamma_hat = max ||y2_bar|| / ||u1_bar||` over the grid.
///
/// Inputs inside a `1e-6` ball at zero are skipped (the ratio is 0/0 there);
/// the zero limit is probed instead with one-sided inputs of size `1e-4` on
/// each channel. Satisfied iff `gamma_hat <= 1 - margin`.
pub fn sector_scan(
    fb: &FeedbackSystem,
    u_grid: &[Vec<f64>],
    margin: f64,
) -> Result<SectorScan> {
    let mut probes: Vec<Vec<f64>> = Vec::new();
    let m = fb.plant.input_dim();
    for ch in 0..m {
        for sign in [1.0, -1.0] {
            let mut p = vec![0.0; m];
            p[ch] = sign * 1e-4;
            probes.push(p);
        }
    }
    let kept: Vec<Vec<f64>> =
        u_grid.iter().filter(|u| mat::norm2(u) > 1e-6).cloned().collect();
    let all: Vec<Vec<f64>> = kept.iter().chain(&probes).cloned().collect();
    let ratios_and_y: Result<Vec<(f64, Vec<f64>)>> = exec::map(&all, |u| {
        let (_, s2) = fb.steady_state_chain(u)?;
        Ok((mat::norm2(&s2.y_bar) / mat::norm2(u), s2.y_bar))
    })
    .into_iter()
    .collect();
    let ratios_and_y = ratios_and_y?;
    let gamma_hat = ratios_and_y
        .iter()
        .map(|(r, _)| *r)
        .fold(0.0_f64, f64::max);
    let y2_bars: Vec<Vec<f64>> =
        ratios_and_y.into_iter().take(kept.len()).map(|(_, y)| y).collect();
    Ok(SectorScan {
        u_grid: kept,
        y2_bars,
        gamma_hat,
        margin,
        satisfied: gamma_hat <= 1.0 - margin,
    })
}

/// `W(x1, x2) = V1(x1) + V2(x2) - h1(x1)^T h2(x2)` with a chain-rule gradient.
pub fn composite_lyapunov(
    fb: &FeedbackSystem,
    v1: &StorageFunction,
    v2: &StorageFunction,
) -> StorageFunction {
    let n1 = fb.plant.state_dim();
    let (pe, ce) = (fb.plant.clone(), fb.controller.clone());
    let (pg, cg) = (fb.plant.clone(), fb.controller.clone());
    let (v1e, v2e) = (v1.clone(), v2.clone());
    let (v1g, v2g) = (v1.clone(), v2.clone());
    StorageFunction::new(move |z: &[f64]| {
        let (x1, x2) = z.split_at(n1);
        v1e.eval(x1) + v2e.eval(x2) - mat::dot(&pe.output(x1), &ce.output(x2))
    })
    .with_gradient(move |z: &[f64]| {
        let (x1, x2) = z.split_at(n1);
        let y1 = pg.output(x1);
        let y2 = cg.output(x2);
        let j1 = pg.output_jacobian(x1);
        let j2 = cg.output_jacobian(x2);
        let mut grad = v1g.gradient(x1);
        for (k, gk) in grad.iter_mut().enumerate() {
            for i in 0..y2.len() {
                *gk -= j1[(i, k)] * y2[i];
            }
        }
        let mut g2 = v2g.gradient(x2);
        for (k, gk) in g2.iter_mut().enumerate() {
            for i in 0..y1.len() {
                *gk -= j2[(i, k)] * y1[i];
            }
        }
        grad.extend(g2);
        grad
    })
}

/// Projected gradient descent inside `[lo, hi]^dim`; returns the refined point
/// and value. Shared by the positivity probes and the zero-locus hunts.
pub(crate) fn descend_box(
    w: &StorageFunction,
    start: &[f64],
    lo: f64,
    hi: f64,
    iters: usize,
) -> (Vec<f64>, f64) {
    let clamp = |v: f64| v.max(lo).min(hi);
    let mut x = start.to_vec();
    let mut fx = w.eval(&x);
    let mut step = 0.05 * (hi - lo);
    for _ in 0..iters {
        let g = w.gradient(&x);
        let gn = mat::norm2(&g);
        if gn < 1e-14 {
            break;
        }
        let mut t = step / gn;
        let mut moved = false;
        while t * gn > 1e-16 {
            let cand: Vec<f64> =
                x.iter().zip(&g).map(|(xi, gi)| clamp(xi - t * gi)).collect();
            let fc = w.eval(&cand);
            if fc < fx - 1e-15 {
                x = cand;
                fx = fc;
                step = (t * gn * 1.5).min(0.5 * (hi - lo));
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (x, fx)
}

/// Sampled positivity evidence for a scalar state function.
#[derive(Debug, Clone)]
pub struct PositivityReport {
    pub min_value: f64,
    pub argmin: Vec<f64>,
    /// True when no raw sample went below `-1e-12`.
    pub positive_on_samples: bool,
}

/// Sobol-sample `w` over `[lo, hi]^dim` and polish the 10 smallest values by
/// projected descent. The reported minimum includes the polished points, so a
/// thin negative valley missed by the raw grid is still found.
pub fn positivity_probe(
    w: &StorageFunction,
    dim: usize,
    lo: f64,
    hi: f64,
    n_samples: usize,
    seed: u64,
) -> PositivityReport {
    let pts = sobol::sample_box(dim, n_samples, lo, hi, seed);
    let vals = exec::map(&pts, |p| w.eval(p));
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
    let positive_on_samples = vals[order[0]] >= -1e-12;

    let mut min_value = vals[order[0]];
    let mut argmin = pts[order[0]].clone();
    for &idx in order.iter().take(10) {
        let (x, fx) = descend_box(w, &pts[idx], lo, hi, 200);
        if fx < min_value {
            min_value = fx;
            argmin = x;
        }
    }
    PositivityReport { min_value, argmin, positive_on_samples }
}

/// Ledger of the steady-state contraction argument.
#[derive(Debug, Clone)]
pub struct GainIterationReport {
    /// `||u1^(i)||` for each stage, starting from `u1^(1) = h2(x2_start)`.
    pub u_norm_trace: Vec<f64>,
    /// Consecutive norm ratios (empty when the trace has fewer than 2 stages).
    pub ratios: Vec<f64>,
    /// Running lower-bound ledger for the cross term of `W`, transcribed from
    /// the contraction argument: `V1 + V2 - (1/sqrt(gamma)) y1.y2` at stage i,
    /// plus `(1/sqrt(gamma) - 1)` times the first stage's cross term.
    pub lower_bound_trace: Vec<f64>,
    /// Every stage contracted by at least `sqrt(gamma)` (within `1e-9`).
    pub converged: bool,
}

/// Replay the fixed-point chain that bounds the cross term of `W`:
/// `u1^(1) = h2(x2_start)`, then `u1^(i+1) = y2_bar^(i) / sqrt(gamma)` where
/// each stage solves the plant and controller steady states in turn.
///
/// With the sector audit passed (chained gain at most `gamma < 1`), the norms
/// must contract by `sqrt(gamma)` per stage; `converged` records whether they
/// actually did. A start with `h2(x2) = 0` short-circuits: the cross term is
/// zero and there is nothing to iterate.
pub fn steady_state_gain_iteration(
    fb: &FeedbackSystem,
    v1: &StorageFunction,
    v2: &StorageFunction,
    start: (&[f64], &[f64]),
    gamma: f64,
    max_iter: usize,
) -> Result<GainIterationReport> {
    assert!(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
    let root = gamma.sqrt();
    let mut u1 = fb.controller.output(start.1);
    if mat::norm2(&u1) <= 1e-14 {
        return Ok(GainIterationReport {
            u_norm_trace: Vec::new(),
            ratios: Vec::new(),
            lower_bound_trace: Vec::new(),
            converged: true,
        });
    }
    let mut u_norm_trace = vec![mat::norm2(&u1)];
    let mut lower_bound_trace = Vec::new();
    let mut first_cross: Option<f64> = None;
    for _ in 0..max_iter {
        let (s1, s2) = fb.steady_state_chain(&u1)?;
        let cross = mat::dot(&s1.y_bar, &s2.y_bar);
        let first = *first_cross.get_or_insert(cross);
        lower_bound_trace.push(
            v1.eval(&s1.x_bar) + v2.eval(&s2.x_bar) - cross / root
                + (1.0 / root - 1.0) * first,
        );
        u1 = s2.y_bar.iter().map(|y| y / root).collect();
        u_norm_trace.push(mat::norm2(&u1));
    }
    let ratios: Vec<f64> =
        u_norm_trace.windows(2).map(|w| w[1] / w[0]).collect();
    let converged = ratios.iter().all(|r| *r <= root + 1e-9);
    Ok(GainIterationReport { u_norm_trace, ratios, lower_bound_trace, converged })
}

/// Result of running the closed loop from a batch of initial conditions.
#[derive(Debug, Clone)]
pub struct ClosedLoopReport {
    pub final_norms: Vec<f64>,
    pub all_converged: bool,
    /// Sampled `W` never rose by more than `1e-5` along any trajectory.
    pub w_monotone: bool,
    /// Largest pointwise `dW/dt = grad W . f(z, 0)` seen at any sample.
    pub worst_dw: f64,
}

/// Simulate the autonomous loop (`r = 0`) from each initial condition and
/// check convergence (`||z(T)|| < delta`) together with monotone decay of `w`.
pub fn closed_loop_experiment(
    fb: &FeedbackSystem,
    w: &StorageFunction,
    ics: &[Vec<f64>],
    t_final: f64,
    dt: f64,
    delta: f64,
) -> Result<ClosedLoopReport> {
    let sys = fb.system();
    let zero = Signal::Zero { channels: sys.input_dim() };
    let runs: Result<Vec<(f64, bool, f64)>> = exec::map(ics, |z0| {
        let traj = simulate(&sys, z0, &zero, t_final, dt)?;
        let mut monotone = true;
        let mut prev = f64::INFINITY;
        let mut worst_dw = f64::NEG_INFINITY;
        let r = vec![0.0; sys.input_dim()];
        for z in &traj.states {
            let val = w.eval(z);
            if val > prev + 1e-5 {
                monotone = false;
            }
            prev = val;
            let dw = mat::dot(&w.gradient(z), &sys.dynamics(z, &r));
            worst_dw = worst_dw.max(dw);
        }
        Ok((mat::norm2(traj.states.last().unwrap()), monotone, worst_dw))
    })
    .into_iter()
    .collect();
    let runs = runs?;
    Ok(ClosedLoopReport {
        final_norms: runs.iter().map(|r| r.0).collect(),
        all_converged: runs.iter().all(|r| r.0 < delta),
        w_monotone: runs.iter().all(|r| r.1),
        worst_dw: runs.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Shared-input parallel sum: both systems see `u`, the outputs add.
pub fn parallel_interconnection(
    a: &NonlinearSystem,
    b: &NonlinearSystem,
) -> Result<NonlinearSystem> {
    if a.input_dim() != b.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "parallel sum needs matching channels: {} vs {}",
            a.input_dim(),
            b.input_dim()
        )));
    }
    let n1 = a.state_dim();
    let (ad, bd) = (a.clone(), b.clone());
    let (ao, bo) = (a.clone(), b.clone());
    let (aj, bj) = (a.clone(), b.clone());
    let name = format!("{}||{}", a.name(), b.name());
    Ok(NonlinearSystem::new(
        name,
        a.state_dim() + b.state_dim(),
        a.input_dim(),
        move |z, u| {
            let (x1, x2) = z.split_at(n1);
            let mut dz = ad.dynamics(x1, u);
            dz.extend(bd.dynamics(x2, u));
            dz
        },
        move |z| {
            let (x1, x2) = z.split_at(n1);
            ao.output(x1)
                .iter()
                .zip(bo.output(x2))
                .map(|(p, q)| p + q)
                .collect()
        },
    )?
    .with_output_jacobian(move |z| {
        let (x1, x2) = z.split_at(n1);
        let j1 = aj.output_jacobian(x1);
        let j2 = bj.output_jacobian(x2);
        let m = j1.rows();
        let mut jac = Matrix::zeros(m, z.len());
        for i in 0..m {
            for k in 0..x1.len() {
                jac[(i, k)] = j1[(i, k)];
            }
            for k in 0..x2.len() {
                jac[(i, n1 + k)] = j2[(i, k)];
            }
        }
        jac
    }))
}

/// `V(z) = V1(z[..n1]) + V2(z[n1..])` with the gradients stacked.
pub fn sum_storage(v1: &StorageFunction, v2: &StorageFunction, n1: usize) -> StorageFunction {
    let (e1, e2) = (v1.clone(), v2.clone());
    let (g1, g2) = (v1.clone(), v2.clone());
    StorageFunction::new(move |z: &[f64]| e1.eval(&z[..n1]) + e2.eval(&z[n1..]))
        .with_gradient(move |z: &[f64]| {
            let mut g = g1.gradient(&z[..n1]);
            g.extend(g2.gradient(&z[n1..]));
            g
        })
}

/// Spot check of zero-state observability: under zero input, a trajectory with
/// silent output must be the zero trajectory.
#[derive(Debug, Clone)]
pub struct ObservabilityReport {
    pub checked: usize,
    /// Initial conditions whose output stayed below the quiet threshold while
    /// the state did not — direct counterexamples.
    pub quiet_nonzero: Vec<Vec<f64>>,
    pub consistent: bool,
}

/// Simulate `u = 0` from each initial condition; any run whose output norm
/// never exceeds `quiet_tol` while its state norm does is recorded as a
/// counterexample. Passing is evidence for zero-state observability, not a
/// certificate.
pub fn observability_spot_check(
    sys: &NonlinearSystem,
    ics: &[Vec<f64>],
    t_final: f64,
    dt: f64,
    quiet_tol: f64,
) -> Result<ObservabilityReport> {
    let zero = Signal::Zero { channels: sys.input_dim() };
    let flags: Result<Vec<Option<Vec<f64>>>> = exec::map(ics, |x0| {
        let traj = simulate(sys, x0, &zero, t_final, dt)?;
        let quiet = traj.outputs.iter().all(|y| mat::norm_inf(y) <= quiet_tol);
        let moved = traj.states.iter().any(|x| mat::norm_inf(x) > quiet_tol * 10.0);
        Ok(if quiet && moved { Some(x0.clone()) } else { None })
    })
    .into_iter()
    .collect();
    let quiet_nonzero: Vec<Vec<f64>> = flags?.into_iter().flatten().collect();
    Ok(ObservabilityReport {
        checked: ics.len(),
        consistent: quiet_nonzero.is_empty(),
        quiet_nonzero,
    })
}

//! Batch front end: load system descriptions, run the analyses, emit reports
//! on stdout and CSV artifacts under `--out`.
//!
//! Exit codes are a contract, never conflated:
//!
//! * `0` — the requested property was certified / every audit passed;
//! * `1` — the property was refuted or a premise failed (the report names it);
//! * `2` — input error (unparseable description, bad flag, empty IC set);
//! * `3` — numerical failure (singular Jacobian, divergent integration, ...).
//!
//! Progress chatter goes to stderr and is gated by `NI_AUDIT_LOG`
//! (`quiet`, `info`, `debug`; default `info`). Reports and CSVs are
//! deterministic functions of the inputs and `--seed`.

mod desc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ni_core::error::{Error, Result};
use ni_core::free_motion::{
    cascade_storage, check_cascade_conditions, storage_positivity_audit, verify_cascade_nni,
};
use ni_core::interconnect::{
    closed_loop_experiment, composite_lyapunov, continuation_audit, observability_spot_check,
    positive_feedback_loop, sector_scan, steady_state_gain_iteration, steady_state_sign_audit,
};
use ni_core::lti::{
    ni_frequency_test, pr_frequency_test, search_certificate, sni_frequency_test,
    time_domain_ni_check, FrequencyGrid, DEFAULT_TOL,
};
use ni_core::msd::{msd_closed_loop_demo, steady_state_profile};
use ni_core::nonlinear::{dissipativity_check, simulate, NonlinearSystem, StorageFunction};
use ni_core::signal::Signal;
use ni_core::sobol;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::OnceLock;

#[derive(Parser)]
#[command(
    name = "ni-audit",
    version,
    about = "Certify, audit, and exercise negative-imaginary dynamical systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Directory for CSV artifacts (created if missing)
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Seed for every sampled quantity: Sobol clouds, random input signals
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Numerical tolerance override (per-command default otherwise)
    #[arg(long)]
    tol: Option<f64>,
    /// Grid as `lo:hi:count` — frequencies for verify-lti (log-spaced),
    /// steady-state inputs elsewhere (linear)
    #[arg(long)]
    grid: Option<String>,
    /// Sample box as `lo:hi` for Sobol audits
    #[arg(long = "box")]
    sample_box: Option<String>,
    /// Simulation horizon
    #[arg(long = "T")]
    t_final: Option<f64>,
    /// Fixed integration step
    #[arg(long)]
    dt: Option<f64>,
    /// Cap the worker thread pool (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Copy, Clone, ValueEnum)]
enum Property {
    Ni,
    Sni,
    Pr,
}

#[derive(Copy, Clone, ValueEnum)]
enum InputShape {
    Zero,
    Sine,
    Random,
}

#[derive(Subcommand)]
enum Cmd {
    /// Frequency test, certificate search, and trajectory check for an LTI description
    VerifyLti {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Property::Ni)]
        property: Property,
        #[command(flatten)]
        common: Common,
    },
    /// Trajectory dissipativity of a nonlinear description against its storage function
    VerifyNni {
        file: PathBuf,
        /// Number of random bounded input signals
        #[arg(long, default_value_t = 10)]
        inputs: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Full premise audit and closed-loop experiment for plant/controller in positive feedback
    AuditInterconnection {
        plant: PathBuf,
        controller: PathBuf,
        /// Number of Sobol initial conditions for the closed-loop experiment
        #[arg(long, default_value_t = 20)]
        ics: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Condition check, storage construction, dissipativity and positivity audits for an integrator cascade
    FreeMotion {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// End-to-end oscillator demo: premise audits, then convergence from random initial conditions
    MsdDemo {
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 2.0)]
        phi: f64,
        /// Number of Sobol initial conditions in the unit box
        #[arg(long, default_value_t = 20)]
        ics: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Steady-state sector profile of the oscillator loop (closed-form chain)
    SectorScan {
        #[arg(long, default_value_t = 2.0)]
        phi: f64,
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Integrate a described system under a chosen input and write the trajectory CSV
    Simulate {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = InputShape::Sine)]
        input: InputShape,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        /// Initial state as comma-separated numbers (default: origin)
        #[arg(long)]
        x0: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

// --------------------------------------------------------------------------
// logging
// --------------------------------------------------------------------------

#[derive(PartialEq, PartialOrd, Clone, Copy)]
enum Verbosity {
    Quiet,
    Info,
    Debug,
}

fn verbosity() -> Verbosity {
    static LEVEL: OnceLock<Verbosity> = OnceLock::new();
    *LEVEL.get_or_init(|| match std::env::var("NI_AUDIT_LOG").as_deref() {
        Ok("quiet") => Verbosity::Quiet,
        Ok("debug") => Verbosity::Debug,
        _ => Verbosity::Info,
    })
}

macro_rules! info {
    ($($arg:tt)*) => {
        if verbosity() >= Verbosity::Info {
            eprintln!($($arg)*);
        }
    };
}

macro_rules! debug {
    ($($arg:tt)*) => {
        if verbosity() >= Verbosity::Debug {
            eprintln!($($arg)*);
        }
    };
}

// --------------------------------------------------------------------------
// flag plumbing
// --------------------------------------------------------------------------

fn parse_grid(spec: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidGrid(format!("`{spec}` is not lo:hi:count")));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::InvalidGrid(format!("bad grid bound `{}`", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::InvalidGrid(format!("bad grid bound `{}`", parts[1])))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| Error::InvalidGrid(format!("bad grid count `{}`", parts[2])))?;
    if n < 2 || hi <= lo {
        return Err(Error::InvalidGrid(format!("degenerate grid `{spec}`")));
    }
    Ok((lo, hi, n))
}

fn parse_box(spec: &str) -> Result<(f64, f64)> {
    let (lo, hi) = spec
        .split_once(':')
        .ok_or_else(|| Error::InvalidGrid(format!("`{spec}` is not lo:hi")))?;
    let lo: f64 = lo
        .parse()
        .map_err(|_| Error::InvalidGrid(format!("bad box bound `{lo}`")))?;
    let hi: f64 = hi
        .parse()
        .map_err(|_| Error::InvalidGrid(format!("bad box bound `{hi}`")))?;
    if hi <= lo {
        return Err(Error::InvalidGrid(format!("degenerate box `{spec}`")));
    }
    Ok((lo, hi))
}

impl Common {
    fn sample_box_or(&self, lo: f64, hi: f64) -> Result<(f64, f64)> {
        match &self.sample_box {
            Some(s) => parse_box(s),
            None => Ok((lo, hi)),
        }
    }

    fn linear_grid_or(&self, lo: f64, hi: f64, n: usize) -> Result<Vec<Vec<f64>>> {
        let (lo, hi, n) = match &self.grid {
            Some(s) => parse_grid(s)?,
            None => (lo, hi, n),
        };
        let step = (hi - lo) / (n - 1) as f64;
        Ok((0..n).map(|i| vec![lo + step * i as f64]).collect())
    }

    fn frequency_grid(&self) -> Result<FrequencyGrid> {
        match &self.grid {
            Some(s) => {
                let (lo, hi, n) = parse_grid(s)?;
                FrequencyGrid::log_space(lo, hi, n)
            }
            None => Ok(FrequencyGrid::standard()),
        }
    }

    fn horizon_or(&self, t: f64, dt: f64) -> (f64, f64) {
        (self.t_final.unwrap_or(t), self.dt.unwrap_or(dt))
    }

    fn prepare_out(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out).map_err(|e| {
            Error::DimensionMismatch(format!(
                "cannot create output directory {}: {e}",
                self.out.display()
            ))
        })
    }

    fn csv_path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn save_csv(
    path: &Path,
    write: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| Error::DimensionMismatch(format!("cannot write {}: {e}", path.display())))?;
    let mut buf = std::io::BufWriter::new(file);
    write(&mut buf)
        .and_then(|()| buf.flush())
        .map_err(|e| Error::DimensionMismatch(format!("cannot write {}: {e}", path.display())))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn status(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Exit-code classification for errors that escape a command.
fn classify(e: &Error) -> u8 {
    match e {
        // the inputs were bad
        Error::Parse { .. }
        | Error::DimensionMismatch(_)
        | Error::InvalidGrid(_)
        | Error::NonPositiveParameter { .. }
        | Error::NonSquare { .. }
        | Error::NotSymmetric { .. } => 2,
        // the system refuted a premise of the requested analysis
        Error::AssumptionFailed { .. }
        | Error::CertificateNotFound
        | Error::NotHurwitz { .. }
        | Error::Cond1Violated { .. } => 1,
        // the numerics gave out
        _ => 3,
    }
}

// --------------------------------------------------------------------------
// commands
// --------------------------------------------------------------------------

fn cmd_verify_lti(file: &Path, property: Property, common: &Common) -> Result<u8> {
    let d = desc::parse_file(file)?;
    let sys = d.to_state_space()?;
    let grid = common.frequency_grid()?;
    let tol = common.tol.unwrap_or(DEFAULT_TOL);
    let (t_final, dt) = common.horizon_or(20.0, 1e-3);
    println!(
        "system {} ({} states, {} inputs, {} outputs)",
        d.label,
        sys.order(),
        sys.inputs(),
        sys.outputs()
    );

    let mut certified = true;
    match property {
        Property::Pr => {
            let rep = pr_frequency_test(&sys, &grid, tol)?;
            println!(
                "  positive-real frequency test: {}  worst lambda_min {:.3e} at omega {:.3e} ({} points)",
                status(rep.is_pr),
                rep.worst_lambda_min,
                rep.worst_omega,
                rep.points_tested
            );
            certified &= rep.is_pr;
        }
        Property::Ni | Property::Sni => {
            if matches!(property, Property::Sni) {
                let rep = sni_frequency_test(&sys, &grid, 0.0)?;
                println!(
                    "  strict frequency test: {}  worst slack {:.3e} at omega {:.3e}",
                    status(rep.is_sni),
                    rep.worst_slack,
                    rep.worst_omega
                );
                certified &= rep.is_sni;
            } else {
                let rep = ni_frequency_test(&sys, &grid, tol)?;
                println!(
                    "  frequency test: {}  worst lambda_min {:.3e} at omega {:.3e} ({} points)",
                    status(rep.is_ni),
                    rep.worst_lambda_min,
                    rep.worst_omega,
                    rep.points_tested
                );
                certified &= rep.is_ni;
            }
            match search_certificate(&sys, 5000, tol) {
                Ok(cert) => {
                    println!(
                        "  certificate search: {}  affine residual {:.3e}, lambda_min(P) {:.3e}, lambda_max(AP+PA') {:.3e}",
                        status(cert.valid),
                        cert.residual_affine,
                        cert.lambda_min_p,
                        cert.lambda_max_lyap
                    );
                    certified &= cert.valid;
                    if cert.valid {
                        let storage = cert.storage_matrix()?;
                        let mut rng = ni_core::signal::seeded_rng(common.seed);
                        let input = Signal::random_bounded(&mut rng, sys.inputs(), 1.0);
                        let rep = time_domain_ni_check(&sys, &storage, &input, t_final, dt)?;
                        let ok = rep.passed(1e-6);
                        println!(
                            "  trajectory check: {}  max violation {:.3e}, integral slack {:.3e} over T={t_final}",
                            status(ok),
                            rep.max_violation,
                            rep.integral_slack
                        );
                        certified &= ok;
                    }
                }
                Err(Error::CertificateNotFound) => {
                    println!("  certificate search: FAIL  no certificate within budget");
                    certified = false;
                }
                Err(e) => return Err(e),
            }
        }
    }

    println!("verdict: {}", if certified { "certified" } else { "refuted" });
    Ok(if certified { 0 } else { 1 })
}

/// Storage lookup that falls back to certificate search for LTI descriptions.
fn system_with_storage(d: &desc::SystemDescription) -> Result<(NonlinearSystem, StorageFunction)> {
    let (sys, storage) = d.instantiate()?;
    if let Some(v) = storage {
        return Ok((sys, v));
    }
    if let Ok(ss) = d.to_state_space() {
        debug!("no canonical storage for {}; searching a certificate", d.label);
        let cert = search_certificate(&ss, 5000, DEFAULT_TOL)?;
        if !cert.valid {
            return Err(Error::CertificateNotFound);
        }
        return Ok((sys, StorageFunction::quadratic(&cert.storage_matrix()?)));
    }
    Err(Error::DimensionMismatch(format!(
        "no storage function is known for `{}`",
        d.label
    )))
}

fn cmd_verify_nni(file: &Path, inputs: usize, common: &Common) -> Result<u8> {
    if inputs == 0 {
        return Err(Error::DimensionMismatch("need at least one input signal".into()));
    }
    let d = desc::parse_file(file)?;
    let (sys, storage) = system_with_storage(&d)?;
    let tol = common.tol.unwrap_or(1e-5);
    let (t_final, dt) = common.horizon_or(20.0, 1e-3);
    println!(
        "system {} ({} states, {} inputs): {} random bounded inputs, T={t_final}, dt={dt}",
        d.label,
        sys.state_dim(),
        sys.input_dim(),
        inputs
    );

    let signals = Signal::random_batch(common.seed, inputs, sys.input_dim(), 1.0);
    let x0 = vec![0.0; sys.state_dim()];
    let mut worst = f64::NEG_INFINITY;
    let mut worst_slack = f64::INFINITY;
    for (i, sig) in signals.iter().enumerate() {
        let traj = simulate(&sys, &x0, sig, t_final, dt)?;
        let rep = dissipativity_check(&sys, &storage, &traj);
        debug!(
            "  input {i}: max violation {:.3e}, integral slack {:.3e}",
            rep.max_violation, rep.integral_slack
        );
        worst = worst.max(rep.max_violation);
        worst_slack = worst_slack.min(rep.integral_slack);
    }
    let ok = worst <= tol && worst_slack >= -tol;
    println!(
        "  dissipation inequality: {}  worst pointwise excess {:.3e}, worst integral slack {:.3e} (tol {tol:.1e})",
        status(ok),
        worst,
        worst_slack
    );
    println!("verdict: {}", if ok { "certified" } else { "refuted" });
    Ok(if ok { 0 } else { 1 })
}

fn cmd_audit_interconnection(
    plant_file: &Path,
    controller_file: &Path,
    ics: usize,
    common: &Common,
) -> Result<u8> {
    if ics == 0 {
        return Err(Error::DimensionMismatch(
            "the closed-loop experiment needs a nonempty set of initial conditions".into(),
        ));
    }
    let plant_desc = desc::parse_file(plant_file)?;
    let ctrl_desc = desc::parse_file(controller_file)?;
    let (plant, v1) = system_with_storage(&plant_desc)?;
    let (ctrl, v2) = system_with_storage(&ctrl_desc)?;
    println!("loop {} <-> {}", plant_desc.label, ctrl_desc.label);

    let grid = common.linear_grid_or(-16.0, 16.0, 41)?;
    let (t_final, dt) = common.horizon_or(60.0, 2e-3);
    common.prepare_out()?;

    let fb = positive_feedback_loop(plant.clone(), ctrl)?;
    let mut all_ok = true;

    info!("tracing the plant steady-state branch over {} grid points", grid.len());
    let cont = continuation_audit(&plant, &grid)?;
    println!(
        "  steady-state continuation: {}  max jump ratio {:.2}{}",
        status(cont.continuous),
        cont.max_jump,
        match cont.jump_index {
            Some(i) => format!(" at grid index {i}"),
            None => String::new(),
        }
    );
    all_ok &= cont.continuous;

    let sign = steady_state_sign_audit(&fb, &grid)?;
    println!(
        "  output sign chain: {}  worst product {:.3e} at u = {:?}",
        status(sign.nonnegative),
        sign.worst_value,
        sign.worst_u
    );
    all_ok &= sign.nonnegative;

    let sector = sector_scan(&fb, &grid, 0.05)?;
    println!(
        "  sector bound: {}  gain estimate {:.4} (margin {:.2})",
        status(sector.satisfied),
        sector.gamma_hat,
        sector.margin
    );
    save_csv(&common.csv_path("sector_scan.csv"), |w| sector.write_csv(w))?;
    all_ok &= sector.satisfied;

    let probe_ics = sobol::sample_box(plant.state_dim(), 4, -1.0, 1.0, common.seed ^ 0x9e37);
    let obs = observability_spot_check(&plant, &probe_ics, 20.0, dt, 1e-6)?;
    println!(
        "  observability spot check: {}  {} trajectories checked, {} silent-but-moving",
        status(obs.consistent),
        obs.checked,
        obs.quiet_nonzero.len()
    );
    all_ok &= obs.consistent;

    if sector.satisfied && sector.gamma_hat > 0.0 {
        let x1 = vec![0.0; fb.plant().state_dim()];
        let mut x2 = vec![0.0; fb.controller().state_dim()];
        x2[0] = 0.5;
        let gain =
            steady_state_gain_iteration(&fb, &v1, &v2, (&x1, &x2), sector.gamma_hat, 12)?;
        let worst_ratio = gain.ratios.iter().copied().fold(0.0_f64, f64::max);
        println!(
            "  gain iteration: {}  {} stages, worst contraction ratio {:.4} vs sqrt(gamma) {:.4}",
            status(gain.converged),
            gain.u_norm_trace.len(),
            worst_ratio,
            sector.gamma_hat.sqrt()
        );
        all_ok &= gain.converged;
    }

    let w = composite_lyapunov(&fb, &v1, &v2);
    let boxes = sobol::sample_box(fb.state_dim(), ics, -1.0, 1.0, common.seed);
    info!("running the closed loop from {ics} initial conditions");
    let closed = closed_loop_experiment(&fb, &w, &boxes, t_final, dt, 1e-3)?;
    println!(
        "  closed-loop experiment: {}  worst final norm {:.3e}, candidate monotone: {}, worst dW/dt {:.3e}",
        status(closed.all_converged && closed.w_monotone),
        closed.final_norms.iter().copied().fold(0.0_f64, f64::max),
        closed.w_monotone,
        closed.worst_dw
    );
    all_ok &= closed.all_converged && closed.w_monotone;

    println!("verdict: {}", if all_ok { "all audits passed" } else { "audit failed" });
    Ok(if all_ok { 0 } else { 1 })
}

fn cmd_free_motion(file: &Path, common: &Common) -> Result<u8> {
    let d = desc::parse_file(file)?;
    let cascade = d.to_cascade()?;
    let (lo, hi) = common.sample_box_or(-2.0, 2.0)?;
    let tol = common.tol.unwrap_or(1e-5);
    let (t_final, dt) = common.horizon_or(20.0, 1e-3);
    common.prepare_out()?;
    println!("cascade {} ({} inner states + integrator)", d.label, cascade.inner_dim());

    let rep = check_cascade_conditions(&cascade, lo, hi, 10_000, common.seed);
    println!(
        "  condition 1 (rigid channel): {}  value {:.6}, relative deviation {:.3e}",
        status(rep.cond1.holds),
        rep.cond1.constant_value,
        rep.cond1.max_deviation
    );
    println!(
        "  condition 2 (damping coupling): {}  max value {:.6}",
        status(rep.cond2.holds),
        rep.cond2.max_value
    );
    println!(
        "  condition 3 (rate vanishes only at origin): {}  {} off-origin zero(s) found, min |w| {:.3e}",
        status(rep.cond3.holds),
        rep.cond3.zero_locus_samples.len(),
        rep.cond3.min_abs_off_origin
    );
    if !rep.cond3.zero_locus_samples.is_empty() {
        let n = cascade.inner_dim();
        save_csv(&common.csv_path("zero_locus.csv"), |w| {
            for i in 1..=n {
                write!(w, "eta{i},")?;
            }
            writeln!(w, "w")?;
            for p in &rep.cond3.zero_locus_samples {
                for v in p {
                    write!(w, "{v:.16e},")?;
                }
                writeln!(w, "{:.16e}", cascade.rate(p))?;
            }
            Ok(())
        })?;
    }

    let storage = cascade_storage(&cascade)?;
    let signals = Signal::random_batch(common.seed ^ 0x5bf0, 2, 1, 1.0);
    let nni = verify_cascade_nni(
        &cascade, &storage, &signals, t_final, dt, lo, hi, 10_000, common.seed,
    )?;
    let dissipative = nni.max_violation <= tol && nni.residual_max <= 1e-9;
    println!(
        "  dissipation along trajectories: {}  max violation {:.3e}",
        status(nni.max_violation <= tol),
        nni.max_violation
    );
    println!(
        "  drift residual on the box: {}  max {:.3e}, positive fraction {:.4}",
        status(nni.residual_max <= 1e-9),
        nni.residual_max,
        nni.residual_positive_fraction
    );

    let pos = storage_positivity_audit(&cascade, lo, hi, 10_000, common.seed)?;
    println!(
        "  storage positivity: {}  min off-origin {:.3e}, {} zero direction(s)",
        if pos.positive_definite { "definite" } else { "semidefinite" },
        pos.min_off_origin,
        pos.semidefinite_directions.len()
    );
    if !pos.semidefinite_directions.is_empty() {
        let dim = cascade.inner_dim() + 1;
        save_csv(&common.csv_path("storage_zeros.csv"), |w| {
            for i in 1..=dim {
                write!(w, "z{i},")?;
            }
            writeln!(w, "v")?;
            for z in &pos.semidefinite_directions {
                for v in z {
                    write!(w, "{v:.16e},")?;
                }
                writeln!(w, "{:.16e}", storage.eval(z))?;
            }
            Ok(())
        })?;
    }

    let ok = rep.overall && dissipative;
    println!(
        "verdict: {}",
        if ok { "all conditions hold" } else { "conditions refuted" }
    );
    Ok(if ok { 0 } else { 1 })
}

fn cmd_msd_demo(gamma: f64, phi: f64, ics: usize, common: &Common) -> Result<u8> {
    if ics == 0 {
        return Err(Error::DimensionMismatch(
            "the demo needs a nonempty set of initial conditions".into(),
        ));
    }
    common.prepare_out()?;
    let (t_final, dt) = common.horizon_or(60.0, 2e-3);
    println!("oscillator loop with gamma={gamma}, phi={phi}");

    let profile = steady_state_profile(phi, 2.0, -16.0, 16.0, 401)?;
    println!(
        "  steady-state profile: gain estimate {:.4}, small-signal ratio {:.4}",
        profile.gamma_hat, profile.small_signal_ratio
    );
    save_csv(&common.csv_path("steady_state_profile.csv"), |w| profile.write_csv(w))?;

    let boxes = sobol::sample_box(3, ics, -1.0, 1.0, common.seed);
    match msd_closed_loop_demo(gamma, phi, &boxes, t_final, dt) {
        Ok(rep) => {
            println!(
                "  premise audits: sign chain {}, sector {} (gain {:.4})",
                status(rep.sign.nonnegative),
                status(rep.sector.satisfied),
                rep.sector.gamma_hat
            );
            let ok = rep.closed_loop.all_converged && rep.closed_loop.w_monotone;
            println!(
                "  convergence from {ics} initial conditions: {}  worst final norm {:.3e}, candidate monotone: {}",
                status(ok),
                rep.closed_loop.final_norms.iter().copied().fold(0.0_f64, f64::max),
                rep.closed_loop.w_monotone
            );
            println!("verdict: {}", if ok { "demo passed" } else { "demo failed" });
            Ok(if ok { 0 } else { 1 })
        }
        Err(Error::AssumptionFailed { index, evidence }) => {
            println!("  premise audit failed (assumption {index}): {evidence}");
            println!("verdict: premises refuted");
            Ok(1)
        }
        Err(e) => Err(e),
    }
}

fn cmd_sector_scan(phi: f64, k: f64, common: &Common) -> Result<u8> {
    common.prepare_out()?;
    let (lo, hi, n) = match &common.grid {
        Some(s) => parse_grid(s)?,
        None => (-16.0, 16.0, 401),
    };
    let profile = steady_state_profile(phi, k, lo, hi, n)?;
    println!(
        "sector profile over [{lo}, {hi}] ({n} points): gain estimate {:.4}, small-signal ratio {:.4}",
        profile.gamma_hat, profile.small_signal_ratio
    );
    save_csv(&common.csv_path("steady_state_profile.csv"), |w| profile.write_csv(w))?;
    let ok = profile.inside_sector();
    println!(
        "verdict: {}",
        if ok { "inside the unity sector" } else { "sector violated" }
    );
    Ok(if ok { 0 } else { 1 })
}

fn cmd_simulate(
    file: &Path,
    input: InputShape,
    amplitude: f64,
    omega: f64,
    x0: Option<&str>,
    common: &Common,
) -> Result<u8> {
    let d = desc::parse_file(file)?;
    debug!("canonical description:\n{}", d.serialize());
    let (sys, storage) = d.instantiate()?;
    let (t_final, dt) = common.horizon_or(20.0, 1e-3);
    common.prepare_out()?;

    let x0 = match x0 {
        None => vec![0.0; sys.state_dim()],
        Some(list) => {
            let parsed: std::result::Result<Vec<f64>, _> =
                list.split(',').map(|v| v.trim().parse::<f64>()).collect();
            let parsed = parsed.map_err(|_| {
                Error::DimensionMismatch(format!("`--x0 {list}` is not a number list"))
            })?;
            if parsed.len() != sys.state_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "initial state has {} entries, system has {} states",
                    parsed.len(),
                    sys.state_dim()
                )));
            }
            parsed
        }
    };

    let signal = match input {
        InputShape::Zero => Signal::Zero { channels: sys.input_dim() },
        InputShape::Sine => Signal::Sine {
            amplitude: vec![amplitude; sys.input_dim()],
            omega,
            phase: 0.0,
        },
        InputShape::Random => {
            let mut rng = ni_core::signal::seeded_rng(common.seed);
            Signal::random_bounded(&mut rng, sys.input_dim(), amplitude)
        }
    };

    info!("integrating {} for T={t_final} at dt={dt}", d.label);
    let traj = simulate(&sys, &x0, &signal, t_final, dt)?;
    let path = common.csv_path("trajectory.csv");
    traj.save_csv(&path)
        .map_err(|e| Error::DimensionMismatch(format!("cannot write {}: {e}", path.display())))?;
    info!("wrote {}", path.display());
    println!(
        "trajectory: {} samples, final state norm {:.6e}",
        traj.len(),
        ni_core::mat::norm2(traj.states.last().expect("nonempty trajectory"))
    );

    if let Some(v) = storage {
        let rep = dissipativity_check(&sys, &v, &traj);
        println!(
            "dissipation along the run: max violation {:.3e}, integral slack {:.3e}",
            rep.max_violation, rep.integral_slack
        );
    }
    Ok(0)
}

// --------------------------------------------------------------------------

fn dispatch(cmd: &Cmd) -> Result<u8> {
    match cmd {
        Cmd::VerifyLti { file, property, common } => cmd_verify_lti(file, *property, common),
        Cmd::VerifyNni { file, inputs, common } => cmd_verify_nni(file, *inputs, common),
        Cmd::AuditInterconnection { plant, controller, ics, common } => {
            cmd_audit_interconnection(plant, controller, *ics, common)
        }
        Cmd::FreeMotion { file, common } => cmd_free_motion(file, common),
        Cmd::MsdDemo { gamma, phi, ics, common } => cmd_msd_demo(*gamma, *phi, *ics, common),
        Cmd::SectorScan { phi, k, common } => cmd_sector_scan(*phi, *k, common),
        Cmd::Simulate { file, input, amplitude, omega, x0, common } => {
            cmd_simulate(file, *input, *amplitude, *omega, x0.as_deref(), common)
        }
    }
}

fn common_of(cmd: &Cmd) -> &Common {
    match cmd {
        Cmd::VerifyLti { common, .. }
        | Cmd::VerifyNni { common, .. }
        | Cmd::AuditInterconnection { common, .. }
        | Cmd::FreeMotion { common, .. }
        | Cmd::MsdDemo { common, .. }
        | Cmd::SectorScan { common, .. }
        | Cmd::Simulate { common, .. } => common,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = common_of(&cli.command).threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            debug!("thread pool already initialized: {e}");
        }
    }
    match dispatch(&cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(classify(&e))
        }
    }
}

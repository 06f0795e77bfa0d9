//! Plain-text system descriptions.
//!
//! A description file is line oriented: the first whitespace-separated token
//! of each line is the key, the remainder the value. Blank lines and lines
//! starting with `#` are skipped.
//!
//! ```text
//! # a two-state linear system
//! kind lti
//! name msd_linearized
//! A [[0.0, 1.0], [-2.0, -1.0]]
//! B [[0.0], [1.0]]
//! C [[1.0, 0.0]]
//! D [[0.0]]
//! ```
//!
//! Keys:
//!
//! * `kind` — `lti`, `builtin`, or `cascade_integrator` (required, once);
//! * `name` — for `builtin`/`cascade_integrator` this selects the system
//!   (`msd`, `hamiltonian_oscillator`, `hamiltonian_pendulum`, `pendulum2`,
//!   `irc`, `example16`, `example17`, `nl01`); for `lti` it is a free label;
//! * `param <key> <value>` — numeric parameter overrides for builtins;
//! * `A`/`B`/`C`/`D` — state-space matrices as nested bracket arrays
//!   (JSON array syntax), `lti` only.
//!
//! [`SystemDescription::serialize`] followed by [`parse`] is the identity on
//! the description value, which the tests pin down.

use ni_core::error::{Error, Result};
use ni_core::free_motion::{
    cascade_storage, make_example16, make_example17, make_nl01, CascadeIntegratorSystem,
};
use ni_core::lti::StateSpace;
use ni_core::msd::IrcController;
use ni_core::nonlinear::{
    make_euler_lagrange_pendulum2, make_hamiltonian_oscillator, make_hamiltonian_pendulum,
    make_msd, MsdParams, NonlinearSystem, Pendulum2Params, StorageFunction,
};
use ni_core::Matrix;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub enum SystemKind {
    Lti {
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        c: Vec<Vec<f64>>,
        d: Vec<Vec<f64>>,
    },
    Builtin {
        name: String,
        params: BTreeMap<String, f64>,
    },
    CascadeIntegrator {
        name: String,
        params: BTreeMap<String, f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemDescription {
    /// Free label for reports; for builtins this equals the builtin name.
    pub label: String,
    pub kind: SystemKind,
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

pub fn parse(text: &str) -> Result<SystemDescription> {
    let mut kind_token: Option<(usize, String)> = None;
    let mut name: Option<String> = None;
    let mut params: BTreeMap<String, f64> = BTreeMap::new();
    let mut matrices: BTreeMap<&'static str, (usize, Vec<Vec<f64>>)> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, rest) = match line.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (line, ""),
        };
        match key {
            "kind" => {
                if kind_token.is_some() {
                    return Err(perr(lineno, "duplicate `kind`"));
                }
                if rest.is_empty() {
                    return Err(perr(lineno, "`kind` needs a value"));
                }
                kind_token = Some((lineno, rest.to_string()));
            }
            "name" => {
                if name.is_some() {
                    return Err(perr(lineno, "duplicate `name`"));
                }
                if rest.is_empty() {
                    return Err(perr(lineno, "`name` needs a value"));
                }
                name = Some(rest.to_string());
            }
            "param" => {
                let (pkey, pval) = rest
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| perr(lineno, "`param` needs a key and a value"))?;
                let value: f64 = pval.trim().parse().map_err(|_| {
                    perr(lineno, format!("`{}` is not a number", pval.trim()))
                })?;
                if params.insert(pkey.to_string(), value).is_some() {
                    return Err(perr(lineno, format!("duplicate parameter `{pkey}`")));
                }
            }
            "A" | "B" | "C" | "D" => {
                let slot = match key {
                    "A" => "A",
                    "B" => "B",
                    "C" => "C",
                    _ => "D",
                };
                let rows: Vec<Vec<f64>> = serde_json::from_str(rest).map_err(|e| {
                    perr(lineno, format!("matrix {slot} is not a nested array: {e}"))
                })?;
                if matrices.insert(slot, (lineno, rows)).is_some() {
                    return Err(perr(lineno, format!("duplicate matrix {slot}")));
                }
            }
            other => return Err(perr(lineno, format!("unknown key `{other}`"))),
        }
    }

    let (kind_line, kind_token) =
        kind_token.ok_or_else(|| perr(text.lines().count().max(1), "missing `kind`"))?;

    match kind_token.as_str() {
        "lti" => {
            if !params.is_empty() {
                return Err(perr(kind_line, "`param` lines do not apply to kind lti"));
            }
            let mut take = |slot: &str| {
                matrices
                    .remove(slot)
                    .map(|(_, rows)| rows)
                    .ok_or_else(|| perr(kind_line, format!("kind lti requires matrix {slot}")))
            };
            let (a, b, c, d) = (take("A")?, take("B")?, take("C")?, take("D")?);
            validate_lti_shapes(&a, &b, &c, &d, kind_line)?;
            Ok(SystemDescription {
                label: name.unwrap_or_else(|| "lti".to_string()),
                kind: SystemKind::Lti { a, b, c, d },
            })
        }
        "builtin" | "cascade_integrator" => {
            if let Some((line, _)) = matrices.values().next() {
                return Err(perr(*line, "matrix lines apply only to kind lti"));
            }
            let name = name
                .ok_or_else(|| perr(kind_line, format!("kind {kind_token} requires `name`")))?;
            let kind = if kind_token == "builtin" {
                SystemKind::Builtin { name: name.clone(), params }
            } else {
                SystemKind::CascadeIntegrator { name: name.clone(), params }
            };
            Ok(SystemDescription { label: name, kind })
        }
        other => Err(perr(kind_line, format!("unknown kind `{other}`"))),
    }
}

fn validate_lti_shapes(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    c: &[Vec<f64>],
    d: &[Vec<f64>],
    line: usize,
) -> Result<()> {
    let rect = |m: &[Vec<f64>], slot: &str| -> Result<(usize, usize)> {
        if m.is_empty() || m[0].is_empty() {
            return Err(perr(line, format!("matrix {slot} is empty")));
        }
        let cols = m[0].len();
        if m.iter().any(|r| r.len() != cols) {
            return Err(perr(line, format!("matrix {slot} has ragged rows")));
        }
        Ok((m.len(), cols))
    };
    let (an, am) = rect(a, "A")?;
    let (bn, bm) = rect(b, "B")?;
    let (cp, cn) = rect(c, "C")?;
    let (dp, dm) = rect(d, "D")?;
    if an != am {
        return Err(perr(line, format!("A must be square, got {an}x{am}")));
    }
    if bn != an || cn != an || dp != cp || dm != bm {
        return Err(perr(
            line,
            format!(
                "inconsistent dimensions: A {an}x{am}, B {bn}x{bm}, C {cp}x{cn}, D {dp}x{dm}"
            ),
        ));
    }
    Ok(())
}

pub fn parse_file(path: &std::path::Path) -> Result<SystemDescription> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| perr(0, format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

impl SystemDescription {
    /// Canonical text form; [`parse`] of the result reproduces `self` exactly.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        match &self.kind {
            SystemKind::Lti { a, b, c, d } => {
                out.push_str("kind lti\n");
                out.push_str(&format!("name {}\n", self.label));
                for (slot, m) in [("A", a), ("B", b), ("C", c), ("D", d)] {
                    out.push_str(&format!(
                        "{slot} {}\n",
                        serde_json::to_string(m).expect("numeric arrays always serialize")
                    ));
                }
            }
            SystemKind::Builtin { name, params }
            | SystemKind::CascadeIntegrator { name, params } => {
                let kind = match &self.kind {
                    SystemKind::Builtin { .. } => "builtin",
                    _ => "cascade_integrator",
                };
                out.push_str(&format!("kind {kind}\nname {name}\n"));
                for (k, v) in params {
                    out.push_str(&format!(
                        "param {k} {}\n",
                        serde_json::to_string(v).expect("finite floats serialize")
                    ));
                }
            }
        }
        out
    }

    /// State-space form; only `kind lti` descriptions have one.
    pub fn to_state_space(&self) -> Result<StateSpace> {
        match &self.kind {
            SystemKind::Lti { a, b, c, d } => StateSpace::new(
                Matrix::from_rows(a),
                Matrix::from_rows(b),
                Matrix::from_rows(c),
                Matrix::from_rows(d),
            ),
            _ => Err(Error::DimensionMismatch(
                "description is not an LTI system".into(),
            )),
        }
    }

    /// Integrator-cascade form; `kind cascade_integrator` (and the cascade
    /// builtins) only.
    pub fn to_cascade(&self) -> Result<CascadeIntegratorSystem> {
        match &self.kind {
            SystemKind::CascadeIntegrator { name, params }
            | SystemKind::Builtin { name, params } => {
                build_cascade(name, params)
            }
            SystemKind::Lti { .. } => Err(Error::DimensionMismatch(
                "an LTI description has no integrator-cascade form".into(),
            )),
        }
    }

    /// General simulable form plus the storage function that goes with it,
    /// when one is known. LTI descriptions lower directly and leave the
    /// storage to certificate search; cascade kinds attach the constructed
    /// cascade storage when the channel condition admits one.
    pub fn instantiate(&self) -> Result<(NonlinearSystem, Option<StorageFunction>)> {
        match &self.kind {
            SystemKind::Lti { .. } => {
                Ok((self.to_state_space()?.to_nonlinear()?, None))
            }
            SystemKind::Builtin { name, params } => build_builtin(name, params),
            SystemKind::CascadeIntegrator { name, params } => {
                let cascade = build_cascade(name, params)?;
                let storage = cascade_storage(&cascade).ok();
                Ok((cascade.to_system(), storage))
            }
        }
    }
}

fn check_param_keys(
    name: &str,
    params: &BTreeMap<String, f64>,
    allowed: &[&str],
) -> Result<()> {
    for key in params.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::DimensionMismatch(format!(
                "builtin `{name}` has no parameter `{key}` (accepted: {})",
                if allowed.is_empty() { "none".to_string() } else { allowed.join(", ") }
            )));
        }
    }
    Ok(())
}

fn get(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn build_cascade(
    name: &str,
    params: &BTreeMap<String, f64>,
) -> Result<CascadeIntegratorSystem> {
    match name {
        "example16" => {
            check_param_keys(name, params, &[])?;
            Ok(make_example16())
        }
        "example17" => {
            check_param_keys(name, params, &[])?;
            Ok(make_example17())
        }
        "nl01" => {
            check_param_keys(name, params, &["a", "b", "c"])?;
            make_nl01(
                get(params, "a", -1.0),
                get(params, "b", 1.0),
                get(params, "c", 1.0),
            )
        }
        other => Err(Error::DimensionMismatch(format!(
            "`{other}` is not an integrator-cascade builtin \
             (try example16, example17, or nl01)"
        ))),
    }
}

fn build_builtin(
    name: &str,
    params: &BTreeMap<String, f64>,
) -> Result<(NonlinearSystem, Option<StorageFunction>)> {
    match name {
        "msd" => {
            check_param_keys(name, params, &["mass", "beta", "k"])?;
            let defaults = MsdParams::default();
            let (sys, v) = make_msd(MsdParams {
                mass: get(params, "mass", defaults.mass),
                beta: get(params, "beta", defaults.beta),
                k: get(params, "k", defaults.k),
            })?;
            Ok((sys.to_system(), Some(v)))
        }
        "hamiltonian_oscillator" => {
            check_param_keys(name, params, &[])?;
            let (sys, v) = make_hamiltonian_oscillator();
            Ok((sys.to_system(), Some(v)))
        }
        "hamiltonian_pendulum" => {
            check_param_keys(name, params, &[])?;
            let (sys, v) = make_hamiltonian_pendulum();
            Ok((sys.to_system(), Some(v)))
        }
        "pendulum2" => {
            check_param_keys(name, params, &["m1", "m2", "l1", "l2", "gravity"])?;
            let defaults = Pendulum2Params::default();
            let (sys, v) = make_euler_lagrange_pendulum2(Pendulum2Params {
                m1: get(params, "m1", defaults.m1),
                m2: get(params, "m2", defaults.m2),
                l1: get(params, "l1", defaults.l1),
                l2: get(params, "l2", defaults.l2),
                gravity: get(params, "gravity", defaults.gravity),
            })?;
            Ok((sys.to_system(), Some(v)))
        }
        "irc" => {
            check_param_keys(name, params, &["gamma", "phi"])?;
            let irc = IrcController::new(get(params, "gamma", 1.0), get(params, "phi", 2.0))?;
            Ok((irc.system(), Some(irc.storage())))
        }
        "example16" | "example17" | "nl01" => {
            let cascade = build_cascade(name, params)?;
            let storage = cascade_storage(&cascade).ok();
            Ok((cascade.to_system(), storage))
        }
        other => Err(Error::DimensionMismatch(format!(
            "unknown builtin `{other}` (accepted: msd, hamiltonian_oscillator, \
             hamiltonian_pendulum, pendulum2, irc, example16, example17, nl01)"
        ))),
    }
}

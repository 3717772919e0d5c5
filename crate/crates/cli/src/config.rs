//! Experiment configuration: a TOML file with one table per concern.
//!
//! ```toml
//! mode = "sweep"            # optional; must match the subcommand
//! seed = 7
//! output = "runs/quartic"   # overridden by GROUNDLAB_OUT and --out
//!
//! [problem]
//! d = 1
//! p = 2.0
//! potential = { family = "power", center = [0.0], exponent = 4.0 }
//!
//! [soliton]                 # shooting settings
//! tol = 1e-8
//!
//! [grid]                    # omit both keys for the automatic grid
//! half_width = 6.0
//! n = 2001
//!
//! [run]
//! rho = 40.0                # minimize, probe
//! rho_list = [20.0, 40.0]   # sweep, verify
//! init = "predicted"        # or "random"
//! warm = true               # warm-started sweep
//! reference = "grid"        # or "closed_form": what e − ẽ is measured against
//!
//! [tolerances]
//! tol = 1e-8
//! energy_tol = 1e-12
//! window = 10
//! max_iter = 20000
//!
//! [probe]                   # probe mode, optional in verify
//! rho = 80.0
//! n_inits = 10
//! ```

use std::fmt;
use std::path::PathBuf;

use groundlab::potentials::PotentialSpec;
use groundlab::soliton::{check_exponent, check_subcritical};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Soliton,
    Constants,
    Qmin,
    Minimize,
    Sweep,
    Verify,
    Probe,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Soliton => "soliton",
            Mode::Constants => "constants",
            Mode::Qmin => "qmin",
            Mode::Minimize => "minimize",
            Mode::Sweep => "sweep",
            Mode::Verify => "verify",
            Mode::Probe => "probe",
        }
    }

    fn needs_potential(self) -> bool {
        !matches!(self, Mode::Soliton | Mode::Constants)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub seed: u64,
    /// Not part of the configuration hash.
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    pub problem: Problem,
    #[serde(default)]
    pub soliton: SolitonSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub probe: Option<ProbeSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub d: usize,
    pub p: f64,
    #[serde(default)]
    pub potential: Option<PotentialSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolitonSection {
    /// Largest accepted ODE residual.
    pub tol: f64,
    pub step: f64,
    pub r_max: f64,
}

impl Default for SolitonSection {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            step: 1e-3,
            r_max: 25.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default)]
    pub half_width: Option<f64>,
    #[serde(default)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    #[default]
    Predicted,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    #[default]
    Grid,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub rho: Option<f64>,
    pub rho_list: Option<Vec<f64>>,
    pub init: InitKind,
    pub warm: bool,
    pub reference: ReferenceKind,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            rho: None,
            rho_list: None,
            init: InitKind::Predicted,
            warm: true,
            reference: ReferenceKind::Grid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub tol: f64,
    pub energy_tol: f64,
    pub window: usize,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            energy_tol: 1e-12,
            window: 10,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    /// Defaults to `run.rho`, then to the last entry of `run.rho_list`.
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default = "default_inits")]
    pub n_inits: usize,
}

fn default_inits() -> usize {
    10
}

/// A rejected configuration, located at a key and, when found, its line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "config key `{}` (line {line}): {}", self.key, self.message),
            None => write!(f, "config key `{}`: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parses and validates a configuration for the given subcommand.
pub fn parse_config(source: &str, mode: Mode) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = toml::from_str(source).map_err(|e| {
        let line = e.span().map(|s| line_of_offset(source, s.start));
        ConfigError {
            key: key_from_message(e.message()).unwrap_or_else(|| "<document>".into()),
            line,
            message: e.message().trim().to_string(),
        }
    })?;
    cfg.validate(mode, source)?;
    Ok(cfg)
}

fn line_of_offset(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

/// Field name quoted by serde in "unknown field" and "missing field"
/// messages.
fn key_from_message(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let end = start + msg[start..].find('`')?;
    Some(msg[start..end].to_string())
}

/// Line of `key` (a dotted path such as `problem.p`), whether written inside
/// its `[table]` or as a dotted key.
pub fn locate_key(source: &str, path: &str) -> Option<usize> {
    let (table, key) = match path.rsplit_once('.') {
        Some((t, k)) => (t, k),
        None => ("", path),
    };
    let mut current = String::new();
    let mut table_line = None;
    for (i, raw) in source.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == table {
                table_line = Some(i + 1);
            }
            continue;
        }
        let Some((lhs, _)) = line.split_once('=') else {
            continue;
        };
        let lhs = lhs.trim().replace(' ', "");
        let full = if current.is_empty() {
            lhs.clone()
        } else {
            format!("{current}.{lhs}")
        };
        if full == path || (current == table && lhs == key) {
            return Some(i + 1);
        }
    }
    table_line
}

impl ExperimentConfig {
    fn error(&self, source: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            key: key.to_string(),
            line: locate_key(source, key),
            message: message.into(),
        }
    }

    /// Checks the keys the mode needs and the invariants between them.
    pub fn validate(&self, mode: Mode, source: &str) -> Result<(), ConfigError> {
        let err = |key: &str, msg: String| Err(self.error(source, key, msg));
        if let Some(m) = self.mode {
            if m != mode {
                return err(
                    "mode",
                    format!("config is for `{}` but the subcommand is `{}`", m.name(), mode.name()),
                );
            }
        }
        let Problem { d, p, potential } = &self.problem;
        if !(1..=3).contains(d) {
            return err("problem.d", format!("dimension must be 1, 2 or 3, got {d}"));
        }
        let exponent_check = if mode.needs_potential() {
            check_subcritical(*d, *p)
        } else {
            check_exponent(*d, *p)
        };
        if let Err(e) = exponent_check {
            return err("problem.p", e.to_string());
        }
        match potential {
            None if mode.needs_potential() => {
                return err("problem.potential", format!("required by mode `{}`", mode.name()))
            }
            Some(spec) if spec.dim() != *d => {
                return err(
                    "problem.potential",
                    format!("potential is {}-dimensional but problem.d = {d}", spec.dim()),
                )
            }
            _ => {}
        }
        let s = &self.soliton;
        if !(s.tol > 0.0) || !(s.step > 0.0) || !(s.r_max > 32.0 * s.step) {
            return err("soliton", "need tol > 0, step > 0 and r_max > 32 step".into());
        }
        match (self.grid.half_width, self.grid.n) {
            (None, None) => {}
            (Some(l), Some(n)) => {
                if !(l > 0.0) || !l.is_finite() {
                    return err("grid.half_width", format!("must be positive, got {l}"));
                }
                if n < 16 {
                    return err("grid.n", format!("need at least 16 points per axis, got {n}"));
                }
            }
            (Some(_), None) => {
                return err(
                    "grid.n",
                    "give both half_width and n, or neither for the automatic grid".into(),
                )
            }
            (None, Some(_)) => {
                return err(
                    "grid.half_width",
                    "give both half_width and n, or neither for the automatic grid".into(),
                )
            }
        }
        let t = &self.tolerances;
        if !(t.tol > 0.0) || !(t.energy_tol > 0.0) || t.window == 0 || t.max_iter == 0 {
            return err("tolerances", "all tolerances and counts must be positive".into());
        }
        match mode {
            Mode::Minimize => match self.run.rho {
                Some(r) if r >= 0.0 && r.is_finite() => {}
                Some(r) => return err("run.rho", format!("must be nonnegative and finite, got {r}")),
                None => return err("run.rho", "required by mode `minimize`".into()),
            },
            Mode::Sweep | Mode::Verify => {
                let Some(list) = &self.run.rho_list else {
                    return err("run.rho_list", format!("required by mode `{}`", mode.name()));
                };
                let min_len = if mode == Mode::Verify { 4 } else { 1 };
                if list.len() < min_len {
                    return err("run.rho_list", format!("needs at least {min_len} entries"));
                }
                if list.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
                    return err("run.rho_list", "entries must be positive and finite".into());
                }
                if let Some(w) = list.windows(2).find(|w| !(w[1] > w[0])) {
                    return err(
                        "run.rho_list",
                        format!("must be strictly increasing ({} is followed by {})", w[0], w[1]),
                    );
                }
            }
            Mode::Probe if self.probe_rho().is_none() => {
                return err("probe.rho", "required by mode `probe` (or set run.rho)".into());
            }
            _ => {}
        }
        if let Some(pr) = &self.probe {
            if pr.n_inits == 0 {
                return err("probe.n_inits", "must be at least 1".into());
            }
            if let Some(r) = pr.rho {
                if !(r > 0.0) || !r.is_finite() {
                    return err("probe.rho", format!("must be positive and finite, got {r}"));
                }
            }
        }
        Ok(())
    }

    /// `ρ` of the uniqueness probe.
    pub fn probe_rho(&self) -> Option<f64> {
        self.probe
            .as_ref()
            .and_then(|p| p.rho)
            .or(self.run.rho.filter(|r| *r > 0.0))
            .or_else(|| self.run.rho_list.as_ref().and_then(|l| l.last().copied()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_soliton_config_gets_defaults() {
        let cfg = parse_config("mode = \"soliton\"\n[problem]\nd = 1\np = 2.0\n", Mode::Soliton).unwrap();
        assert_eq!(cfg.soliton, SolitonSection::default());
        assert_eq!(cfg.tolerances, Tolerances::default());
        assert_eq!(cfg.grid, GridSection::default());
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn decreasing_rho_list_is_rejected_with_its_line() {
        let src = "[problem]\nd = 1\np = 2.0\npotential = { family = \"power\", center = [0.0], exponent = 2.0 }\n\n[run]\nrho_list = [4.0, 2.0]\n";
        let e = parse_config(src, Mode::Sweep).unwrap_err();
        assert_eq!(e.key, "run.rho_list");
        assert_eq!(e.line, Some(7));
        assert!(e.message.contains("strictly increasing"));
    }

    #[test]
    fn critical_exponent_names_the_bound() {
        let src = "[problem]\nd = 2\np = 3.0\npotential = { family = \"quadratic\", coeffs = [1.0, 1.0] }\n[run]\nrho_list = [1.0, 2.0, 3.0, 4.0]\n";
        let e = parse_config(src, Mode::Verify).unwrap_err();
        assert_eq!((e.key.as_str(), e.line), ("problem.p", Some(3)));
        assert!(e.to_string().contains("1 + 4/d"), "{e}");
    }

    #[test]
    fn unknown_and_missing_keys() {
        let e = parse_config("[problem]\nd = 1\np = 2.0\ntypo = 3\n", Mode::Constants).unwrap_err();
        assert_eq!((e.key.as_str(), e.line), ("typo", Some(4)));
        let e = parse_config("[problem]\nd = 1\n", Mode::Constants).unwrap_err();
        assert_eq!(e.key, "p");
        let e = parse_config("[problem]\nd = 1\np = 2.0\n", Mode::Minimize).unwrap_err();
        assert_eq!(e.key, "problem.potential");
    }

    #[test]
    fn mode_mismatch_and_half_grids() {
        let e = parse_config("mode = \"qmin\"\n[problem]\nd = 1\np = 2.0\n", Mode::Soliton).unwrap_err();
        assert_eq!((e.key.as_str(), e.line), ("mode", Some(1)));
        let src = "[problem]\nd = 1\np = 2.0\npotential = { family = \"power\", center = [0.0], exponent = 2.0 }\n[grid]\nn = 101\n[run]\nrho = 1.0\n";
        let e = parse_config(src, Mode::Minimize).unwrap_err();
        assert_eq!((e.key.as_str(), e.line), ("grid.half_width", Some(5)));
    }

    #[test]
    fn dotted_keys_are_located() {
        assert_eq!(locate_key("problem.p = 2\n", "problem.p"), Some(1));
        assert_eq!(locate_key("[run]\n# rho = 1\nrho = 2\n", "run.rho"), Some(3));
        assert_eq!(locate_key("[run]\nwarm = true\n", "run.rho"), Some(1));
    }
}

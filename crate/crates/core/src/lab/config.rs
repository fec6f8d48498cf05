use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{NoiseModel, DEFAULT_STEPS};
use crate::error::{Error, Result};
use crate::gates::{NamedGate, Rotation};
use crate::paths::Scheme;
use crate::pulses::{GateSpec, DEFAULT_OMEGA_MAX, DEFAULT_SAMPLES};
use crate::rb::{DEFAULT_LENGTHS, DEFAULT_SEQUENCES};
use crate::sideband::SidebandSystem;
use crate::tomo::DEFAULT_SHOTS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Synth,
    Propagate,
    Qpt,
    Rb,
    Sweep,
    Sideband,
    ExportAwg,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Synth,
        ExperimentKind::Propagate,
        ExperimentKind::Qpt,
        ExperimentKind::Rb,
        ExperimentKind::Sweep,
        ExperimentKind::Sideband,
        ExperimentKind::ExportAwg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Synth => "synth",
            ExperimentKind::Propagate => "propagate",
            ExperimentKind::Qpt => "qpt",
            ExperimentKind::Rb => "rb",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Sideband => "sideband",
            ExperimentKind::ExportAwg => "export-awg",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    /// Average gate fidelity of the propagated channel.
    Direct,
    /// 1 − F_gate from interleaved randomized benchmarking.
    Rb,
}

impl FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(SweepMode::Direct),
            "rb" => Ok(SweepMode::Rb),
            other => Err(Error::InvalidArgument(format!(
                "unknown sweep mode `{other}`"
            ))),
        }
    }
}

/// Either a named gate or explicit angles, plus the path family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateConfig {
    pub name: Option<String>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub gamma: Option<f64>,
    pub eta: f64,
    pub scheme: Scheme,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            name: Some("x".into()),
            theta: None,
            phi: None,
            gamma: None,
            eta: 0.2,
            scheme: Scheme::Holonomic,
        }
    }
}

fn config_error(field: impl Into<String>, message: impl ToString) -> Error {
    Error::Config {
        field: field.into(),
        message: message.to_string(),
    }
}

impl GateConfig {
    pub fn rotation(&self) -> Result<Rotation> {
        match (&self.name, self.theta, self.phi, self.gamma) {
            (Some(name), None, None, None) => NamedGate::from_str(name)
                .map(NamedGate::rotation)
                .map_err(|e| config_error("gate.name", e)),
            (None, Some(theta), Some(phi), Some(gamma)) => Ok(Rotation::new(theta, phi, gamma)),
            (Some(_), ..) => Err(config_error(
                "gate",
                "give either `name` or `theta`/`phi`/`gamma`, not both",
            )),
            _ => Err(config_error(
                "gate",
                "`theta`, `phi` and `gamma` are all required",
            )),
        }
    }

    pub fn spec(&self) -> Result<GateSpec> {
        let r = self.rotation()?;
        match self.scheme {
            Scheme::Holonomic => r.holonomic(self.eta),
            Scheme::Dynamical if self.name.is_some() => r.dynamical(),
            Scheme::Dynamical => {
                let spec = GateSpec::dynamical(r.theta, r.phi, self.eta)?;
                if (spec.gamma - r.gamma).abs() > 1e-12 {
                    return Err(config_error(
                        "gate.gamma",
                        format!("dynamical gates have gamma = -2π·eta = {}", spec.gamma),
                    ));
                }
                Ok(spec)
            }
        }
        .map_err(|e| match e {
            Error::Config { .. } => e,
            other => config_error("gate", other),
        })
    }

    pub fn label(&self) -> String {
        match &self.name {
            Some(n) => n.to_ascii_lowercase(),
            None => "custom".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QptConfig {
    pub shots: u64,
    /// Exact probabilities instead of sampled counts.
    pub analytic: bool,
}

impl Default for QptConfig {
    fn default() -> Self {
        Self {
            shots: DEFAULT_SHOTS,
            analytic: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RbModel {
    Pulse,
    Depolarizing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RbSection {
    pub lengths: Vec<usize>,
    pub sequences: usize,
    pub shots: Option<u64>,
    /// Named gate to interleave.
    pub interleaved: Option<String>,
    pub model: RbModel,
    /// Depolarizing probability per gate when `model = "depolarizing"`.
    pub depolarizing: f64,
}

impl Default for RbSection {
    fn default() -> Self {
        Self {
            lengths: DEFAULT_LENGTHS.to_vec(),
            sequences: DEFAULT_SEQUENCES,
            shots: None,
            interleaved: None,
            model: RbModel::Pulse,
            depolarizing: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeEntry {
    pub label: String,
    pub scheme: Scheme,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub epsilon_min: f64,
    pub epsilon_max: f64,
    pub points: usize,
    pub mode: SweepMode,
    /// Random sequences per length in RB mode; ignored in direct mode.
    pub realizations: usize,
    pub gates: Vec<String>,
    pub schemes: Vec<SchemeEntry>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let entry = |label: &str, scheme, eta| SchemeEntry {
            label: label.into(),
            scheme,
            eta,
        };
        Self {
            epsilon_min: -0.2,
            epsilon_max: 0.2,
            points: 41,
            mode: SweepMode::Direct,
            realizations: 2000,
            gates: vec!["x".into(), "h".into()],
            schemes: vec![
                entry("nhqc", Scheme::Holonomic, 0.0),
                entry("rnhqc", Scheme::Holonomic, 1.0),
                entry("holonomic-half", Scheme::Holonomic, 0.5),
                entry("dynamical-half", Scheme::Dynamical, 0.5),
            ],
        }
    }
}

impl SweepConfig {
    /// ε_k = (ε_min(n−1−k) + ε_max·k)/(n−1), exact at symmetric midpoints.
    pub fn epsilon_grid(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.epsilon_min];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| (self.epsilon_min * (n - k as f64) + self.epsilon_max * k as f64) / n)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SidebandConfig {
    pub gamma: f64,
    pub eta: f64,
    pub omega_tilde_max: f64,
    pub system: SidebandSystem,
}

impl Default for SidebandConfig {
    fn default() -> Self {
        Self {
            gamma: PI,
            eta: 0.2,
            omega_tilde_max: DEFAULT_OMEGA_MAX,
            system: SidebandSystem::default(),
        }
    }
}

/// Everything a run needs; read from one TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub kind: Option<ExperimentKind>,
    pub seed: u64,
    pub output: PathBuf,
    pub omega_max: f64,
    pub n_samples: usize,
    pub steps: usize,
    pub gate: GateConfig,
    pub noise: NoiseModel,
    pub qpt: QptConfig,
    pub rb: RbSection,
    pub sweep: SweepConfig,
    pub sideband: SidebandConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: None,
            seed: 0,
            output: PathBuf::from("nhqc-out"),
            omega_max: DEFAULT_OMEGA_MAX,
            n_samples: DEFAULT_SAMPLES,
            steps: DEFAULT_STEPS,
            gate: GateConfig::default(),
            noise: NoiseModel::ideal(),
            qpt: QptConfig::default(),
            rb: RbSection::default(),
            sweep: SweepConfig::default(),
            sideband: SidebandConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| format!("line {}", text[..s.start].matches('\n').count() + 1))
                .unwrap_or_else(|| "config".into());
            config_error(field, e.message())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// The fully resolved configuration, as echoed into output headers.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_max > 0.0 && self.omega_max.is_finite()) {
            return Err(config_error("omega_max", "must be positive"));
        }
        if self.steps == 0 || !self.steps.is_multiple_of(4) || self.steps < self.n_samples {
            return Err(config_error(
                "steps",
                "must be a positive multiple of 4 and at least n_samples",
            ));
        }
        self.noise
            .validate()
            .map_err(|e| config_error("noise", e))?;
        let sweep = &self.sweep;
        for (name, eps) in [
            ("sweep.epsilon_min", sweep.epsilon_min),
            ("sweep.epsilon_max", sweep.epsilon_max),
        ] {
            if !(-0.5..=0.5).contains(&eps) {
                return Err(config_error(name, "must lie in [-0.5, 0.5]"));
            }
        }
        if sweep.epsilon_min > sweep.epsilon_max {
            return Err(config_error("sweep.epsilon_min", "exceeds epsilon_max"));
        }
        if sweep.points == 0 {
            return Err(config_error("sweep.points", "must be at least 1"));
        }
        if sweep.realizations == 0 {
            return Err(config_error("sweep.realizations", "must be at least 1"));
        }
        if sweep.schemes.len() < 2 {
            return Err(config_error("sweep.schemes", "list at least two schemes"));
        }
        for g in &sweep.gates {
            NamedGate::from_str(g).map_err(|e| config_error("sweep.gates", e))?;
        }
        for (i, entry) in sweep.schemes.iter().enumerate() {
            if entry.scheme == Scheme::Dynamical {
                for g in &sweep.gates {
                    let gamma = NamedGate::from_str(g)?.rotation().gamma;
                    let diff = (-2.0 * PI * entry.eta - gamma).rem_euclid(2.0 * PI);
                    if diff.min(2.0 * PI - diff) > 1e-9 {
                        return Err(config_error(
                            format!("sweep.schemes[{i}].eta"),
                            format!(
                                "dynamical angle -2π·{} does not realize gate `{g}`",
                                entry.eta
                            ),
                        ));
                    }
                }
            }
        }
        if let Some(g) = &self.rb.interleaved {
            NamedGate::from_str(g).map_err(|e| config_error("rb.interleaved", e))?;
        }
        if self.qpt.shots == 0 {
            return Err(config_error("qpt.shots", "must be at least 1"));
        }
        self.sideband
            .system
            .validate()
            .map_err(|e| config_error("sideband.system", e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let c = ExperimentConfig::from_toml("seed = 7\n[gate]\nname = \"h\"\neta = 1.0\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.gate.eta, 1.0);
        assert_eq!(c.steps, DEFAULT_STEPS);
        assert_eq!(c.gate.spec().unwrap().eta, 1.0);
    }

    #[test]
    fn unknown_field_reports_line() {
        let err = ExperimentConfig::from_toml("seed = 1\n\n[gate]\nbogus = 3\n").unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "line 4"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validation_names_the_field() {
        let field = |c: ExperimentConfig| match c.validate().unwrap_err() {
            Error::Config { field, .. } => field,
            other => panic!("unexpected {other:?}"),
        };
        let c = ExperimentConfig {
            steps: 4098,
            ..ExperimentConfig::default()
        };
        assert_eq!(field(c), "steps");
        let mut c = ExperimentConfig::default();
        c.sweep.epsilon_max = 0.7;
        assert_eq!(field(c), "sweep.epsilon_max");
        let mut c = ExperimentConfig::default();
        c.sweep.schemes[3].eta = 0.25;
        assert_eq!(field(c), "sweep.schemes[3].eta");
        let mut c = ExperimentConfig::default();
        c.noise.prep_error = 2.0;
        assert_eq!(field(c), "noise");
        let mut c = ExperimentConfig::default();
        c.rb.interleaved = Some("cnot".into());
        assert_eq!(field(c), "rb.interleaved");
    }

    #[test]
    fn gate_needs_name_or_all_angles() {
        let g = GateConfig {
            name: None,
            theta: Some(1.0),
            phi: None,
            gamma: Some(1.0),
            ..GateConfig::default()
        };
        assert!(matches!(g.spec(), Err(Error::Config { .. })));
        let g = GateConfig {
            name: None,
            theta: Some(1.0),
            phi: Some(0.3),
            gamma: Some(-PI),
            eta: 0.5,
            scheme: Scheme::Dynamical,
        };
        assert!((g.spec().unwrap().gamma + PI).abs() < 1e-15);
    }

    #[test]
    fn epsilon_grid_is_symmetric() {
        let grid = SweepConfig::default().epsilon_grid();
        assert_eq!(grid.len(), 41);
        assert_eq!(grid[0], -0.2);
        assert_eq!(grid[20], 0.0);
        assert_eq!(grid[40], 0.2);
        for k in 0..41 {
            assert_eq!(grid[k], -grid[40 - k]);
        }
    }

    #[test]
    fn experiment_names_parse() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.as_str().parse::<ExperimentKind>().unwrap(), k);
        }
        assert!("qst".parse::<ExperimentKind>().is_err());
    }
}

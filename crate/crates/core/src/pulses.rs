//! Two-tone pulse synthesis.
//!
//! A [`GateSpec`] names the target rotation and the path family; [`synthesize`]
//! turns it into sampled amplitudes and phases for the |0⟩↔|a⟩ and |1⟩↔|a⟩
//! tones, with the total Rabi rate bounded by Ω_max.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{out_of_range, Error, Result};
use crate::paths::{self, PathParams, Scheme};

/// Default |0⟩↔|a⟩ tone frequency, Hz.
pub const DEFAULT_TONE0_HZ: f64 = 12.6428e9;
/// |0⟩↔|1⟩ splitting, Hz.
pub const QUBIT_SPLITTING_HZ: f64 = 12.5e6;
/// Default |1⟩↔|a⟩ tone frequency, Hz.
pub const DEFAULT_TONE1_HZ: f64 = DEFAULT_TONE0_HZ - QUBIT_SPLITTING_HZ;
/// Maximum total Rabi rate, (2π)·10 kHz.
pub const DEFAULT_OMEGA_MAX: f64 = 2.0 * PI * 10.0e3;
pub const DEFAULT_SAMPLES: usize = 4096;
pub const MIN_SAMPLES: usize = 256;

/// Target rotation U(θ, φ, γ) plus the path family used to realize it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateSpec {
    pub theta: f64,
    pub phi: f64,
    pub gamma: f64,
    pub eta: f64,
    pub scheme: Scheme,
}

impl GateSpec {
    pub fn holonomic(theta: f64, phi: f64, gamma: f64, eta: f64) -> Result<Self> {
        let spec = Self {
            theta,
            phi,
            gamma,
            eta,
            scheme: Scheme::Holonomic,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Dynamical gate; its rotation angle is γ_D = −2πη_D.
    pub fn dynamical(theta: f64, phi: f64, eta: f64) -> Result<Self> {
        let spec = Self {
            theta,
            phi,
            gamma: -2.0 * PI * eta,
            eta,
            scheme: Scheme::Dynamical,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=PI).contains(&self.theta) {
            return Err(out_of_range("theta", self.theta, "[0, π]"));
        }
        if !(-PI..PI).contains(&self.phi) {
            return Err(out_of_range("phi", self.phi, "[−π, π)"));
        }
        if !(self.gamma > -2.0 * PI && self.gamma <= 2.0 * PI) {
            return Err(out_of_range("gamma", self.gamma, "(−2π, 2π]"));
        }
        if !self.eta.is_finite() {
            return Err(out_of_range("eta", self.eta, "finite"));
        }
        if self.scheme == Scheme::Dynamical && self.gamma != -2.0 * PI * self.eta {
            return Err(Error::InvalidArgument(
                "dynamical gate requires gamma = -2π·eta".into(),
            ));
        }
        Ok(())
    }

    pub fn path(&self, duration: f64) -> Result<PathParams> {
        PathParams::new(duration, self.eta, self.scheme, self.gamma)
    }
}

/// Largest value of the normalized envelope g(s) = Ω(sT)·T/π² over the cycle.
///
/// Dense grid over the first half (the envelope is mirror-symmetric) followed
/// by golden-section refinement around the best grid point.
pub fn envelope_peak(eta: f64) -> f64 {
    const GRID: usize = 4000;
    let g = |s: f64| paths::envelope_shape(s, eta);
    let (mut best_s, mut best) = (0.0, 0.0);
    for k in 0..=GRID {
        let s = 0.5 * k as f64 / GRID as f64;
        let v = g(s);
        if v > best {
            best = v;
            best_s = s;
        }
    }
    let h = 0.5 / GRID as f64;
    let (mut a, mut b) = ((best_s - h).max(0.0), (best_s + h).min(0.5));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (g(x1), g(x2));
    while b - a > 1e-13 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = g(x1);
        }
    }
    best.max(f1).max(f2).max(g(0.5 * (a + b)))
}

/// Shortest cycle time T for which max_t Ω(t) = Ω_max.
pub fn compute_duration(spec: &GateSpec, omega_max: f64) -> Result<f64> {
    if !(omega_max > 0.0 && omega_max.is_finite()) {
        return Err(out_of_range("omega_max", omega_max, "> 0"));
    }
    Ok(PI * PI / omega_max * envelope_peak(spec.eta))
}

/// Sampled two-tone drive over one gate.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    pub spec: GateSpec,
    pub omega_max: f64,
    pub duration: f64,
    pub tone0_hz: f64,
    pub tone1_hz: f64,
    pub times: Vec<f64>,
    pub omega0: Vec<f64>,
    pub phi0: Vec<f64>,
    pub omega1: Vec<f64>,
    pub phi1: Vec<f64>,
}

/// Instantaneous tone amplitudes (rad/s) and phases (rad).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneControls {
    pub omega0: f64,
    pub phi0: f64,
    pub omega1: f64,
    pub phi1: f64,
}

fn tone_split(spec: &GateSpec, omega: f64, phi0: f64) -> ToneControls {
    let (s, c) = (0.5 * spec.theta).sin_cos();
    ToneControls {
        omega0: omega * s,
        phi0,
        omega1: omega * c,
        phi1: phi0 + PI - spec.phi,
    }
}

impl PulseSchedule {
    pub fn path(&self) -> Result<PathParams> {
        self.spec.path(self.duration)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Controls evaluated from the path at any t ∈ [0, T].
    pub fn controls_at(&self, t: f64) -> Result<ToneControls> {
        let path = self.path()?;
        let c = paths::controls_from_path(t, &path)?;
        Ok(tone_split(&self.spec, c.omega, c.phi0))
    }

    /// Like [`Self::controls_at`] but with t = s·T and no range checks.
    pub(crate) fn controls_at_fraction(&self, path: &PathParams, s: f64) -> ToneControls {
        let c = paths::controls_at_fraction(s.clamp(0.0, 1.0), path);
        tone_split(&self.spec, c.omega, c.phi0)
    }

    /// max over samples of √(Ω₀² + Ω₁²).
    pub fn sampled_peak(&self) -> f64 {
        self.omega0
            .iter()
            .zip(&self.omega1)
            .map(|(a, b)| a.hypot(*b))
            .fold(0.0, f64::max)
    }

    /// Check the schedule invariants.
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let n = self.times.len();
        if n < 3 {
            return Err(Error::InvalidState("schedule has too few samples".into()));
        }
        if [&self.omega0, &self.phi0, &self.omega1, &self.phi1]
            .iter()
            .any(|v| v.len() != n)
        {
            return Err(Error::InvalidState(
                "sample columns differ in length".into(),
            ));
        }
        if self.duration.is_nan()
            || self.duration <= 0.0
            || self.omega_max.is_nan()
            || self.omega_max <= 0.0
        {
            return Err(Error::InvalidState("non-positive duration or Ω_max".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidState("sample times not increasing".into()));
        }
        if self.omega0.iter().chain(&self.omega1).any(|&o| o < 0.0) {
            return Err(Error::InvalidState("negative amplitude".into()));
        }
        let all = [
            &self.times,
            &self.omega0,
            &self.phi0,
            &self.omega1,
            &self.phi1,
        ];
        if all.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite);
        }
        let peak = self.sampled_peak();
        if (peak - self.omega_max).abs() > 1e-3 * self.omega_max {
            return Err(Error::InvalidState(format!(
                "peak Rabi rate {peak} differs from Ω_max {}",
                self.omega_max
            )));
        }
        for (p0, p1) in self.phi0.iter().zip(&self.phi1) {
            let phi = p0 - p1 + PI;
            if (phi - self.spec.phi).abs() > 1e-12 * (1.0 + p0.abs()) {
                return Err(Error::InvalidState("tone phase difference drifted".into()));
            }
        }
        Ok(())
    }
}

/// Compile a gate into a sampled two-tone schedule with `n_samples` uniform
/// intervals (n_samples + 1 points, so 0, T/2 and T are all sampled).
pub fn synthesize(spec: &GateSpec, omega_max: f64, n_samples: usize) -> Result<PulseSchedule> {
    spec.validate()?;
    if n_samples < MIN_SAMPLES || !n_samples.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "n_samples must be even and at least {MIN_SAMPLES}, got {n_samples}"
        )));
    }
    let duration = compute_duration(spec, omega_max)?;
    let path = spec.path(duration)?;
    let mut schedule = PulseSchedule {
        spec: *spec,
        omega_max,
        duration,
        tone0_hz: DEFAULT_TONE0_HZ,
        tone1_hz: DEFAULT_TONE1_HZ,
        times: Vec::with_capacity(n_samples + 1),
        omega0: Vec::with_capacity(n_samples + 1),
        phi0: Vec::with_capacity(n_samples + 1),
        omega1: Vec::with_capacity(n_samples + 1),
        phi1: Vec::with_capacity(n_samples + 1),
    };
    for k in 0..=n_samples {
        let s = k as f64 / n_samples as f64;
        let c = schedule.controls_at_fraction(&path, s);
        schedule.times.push(s * duration);
        schedule.omega0.push(c.omega0);
        schedule.phi0.push(c.phi0);
        schedule.omega1.push(c.omega1);
        schedule.phi1.push(c.phi1);
    }
    Ok(schedule)
}

/// In-memory form of the tone descriptor text file.
#[derive(Debug, Clone, PartialEq)]
pub struct ToneDescriptorFile {
    pub omega_max: f64,
    pub duration: f64,
    pub sample_rate_hz: f64,
    pub scheme: Scheme,
    pub eta: f64,
    pub theta: f64,
    pub phi: f64,
    pub gamma: f64,
    pub tone0_hz: f64,
    pub tone1_hz: f64,
    /// (t, Ω₀, φ₀, Ω₁, φ₁)
    pub rows: Vec<[f64; 5]>,
}

const COLUMNS: &str = "t_s,omega0_rad_s,phi0_rad,omega1_rad_s,phi1_rad";
const HEADER_KEYS: [&str; 10] = [
    "omega_max_rad_s",
    "duration_s",
    "sample_rate_hz",
    "scheme",
    "eta",
    "theta_rad",
    "phi_rad",
    "gamma_rad",
    "tone0_hz",
    "tone1_hz",
];

/// 17 significant digits: enough to round-trip any f64.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl ToneDescriptorFile {
    pub fn from_schedule(schedule: &PulseSchedule) -> Result<Self> {
        schedule.validate()?;
        let rows = (0..schedule.len())
            .map(|k| {
                [
                    schedule.times[k],
                    schedule.omega0[k],
                    schedule.phi0[k],
                    schedule.omega1[k],
                    schedule.phi1[k],
                ]
            })
            .collect();
        Ok(Self {
            omega_max: schedule.omega_max,
            duration: schedule.duration,
            sample_rate_hz: (schedule.len() - 1) as f64 / schedule.duration,
            scheme: schedule.spec.scheme,
            eta: schedule.spec.eta,
            theta: schedule.spec.theta,
            phi: schedule.spec.phi,
            gamma: schedule.spec.gamma,
            tone0_hz: schedule.tone0_hz,
            tone1_hz: schedule.tone1_hz,
            rows,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let values = [
            fmt_f64(self.omega_max),
            fmt_f64(self.duration),
            fmt_f64(self.sample_rate_hz),
            self.scheme.as_str().to_string(),
            fmt_f64(self.eta),
            fmt_f64(self.theta),
            fmt_f64(self.phi),
            fmt_f64(self.gamma),
            fmt_f64(self.tone0_hz),
            fmt_f64(self.tone1_hz),
        ];
        for (key, value) in HEADER_KEYS.iter().zip(values) {
            let _ = writeln!(out, "# {key} = {value}");
        }
        out.push_str(COLUMNS);
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut meta = std::collections::BTreeMap::new();
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            // `##` lines carry free-form provenance and are not metadata.
            if line.is_empty() || line.starts_with("##") {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let (key, value) = rest.split_once('=').ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: "header line without `=`".into(),
                })?;
                meta.insert(key.trim().to_string(), value.trim().to_string());
                continue;
            }
            if line == COLUMNS {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected 5 columns, got {}", fields.len()),
                });
            }
            let mut row = [0.0; 5];
            for (slot, field) in row.iter_mut().zip(fields) {
                *slot = field.trim().parse().map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("bad number `{field}`: {e}"),
                })?;
            }
            rows.push(row);
        }
        let get = |key: &str| -> Result<&String> {
            meta.get(key).ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("missing header key `{key}`"),
            })
        };
        let num = |key: &str| -> Result<f64> {
            get(key)?.parse().map_err(|e| Error::Parse {
                line: 0,
                message: format!("bad value for `{key}`: {e}"),
            })
        };
        if let Some(unknown) = meta.keys().find(|k| !HEADER_KEYS.contains(&k.as_str())) {
            return Err(Error::Parse {
                line: 0,
                message: format!("unknown header key `{unknown}`"),
            });
        }
        Ok(Self {
            omega_max: num("omega_max_rad_s")?,
            duration: num("duration_s")?,
            sample_rate_hz: num("sample_rate_hz")?,
            scheme: get("scheme")?.parse()?,
            eta: num("eta")?,
            theta: num("theta_rad")?,
            phi: num("phi_rad")?,
            gamma: num("gamma_rad")?,
            tone0_hz: num("tone0_hz")?,
            tone1_hz: num("tone1_hz")?,
            rows,
        })
    }

    pub fn into_schedule(self) -> Result<PulseSchedule> {
        let spec = GateSpec {
            theta: self.theta,
            phi: self.phi,
            gamma: self.gamma,
            eta: self.eta,
            scheme: self.scheme,
        };
        let column = |i: usize| self.rows.iter().map(|r| r[i]).collect::<Vec<_>>();
        let schedule = PulseSchedule {
            spec,
            omega_max: self.omega_max,
            duration: self.duration,
            tone0_hz: self.tone0_hz,
            tone1_hz: self.tone1_hz,
            times: column(0),
            omega0: column(1),
            phi0: column(2),
            omega1: column(3),
            phi1: column(4),
        };
        schedule.validate()?;
        Ok(schedule)
    }
}

/// Write the tone descriptor file for `schedule` to `path`.
pub fn export_tones(
    schedule: &PulseSchedule,
    path: impl AsRef<Path>,
) -> Result<ToneDescriptorFile> {
    let file = ToneDescriptorFile::from_schedule(schedule)?;
    std::fs::write(path, file.to_text())?;
    Ok(file)
}

pub fn read_tones(path: impl AsRef<Path>) -> Result<PulseSchedule> {
    ToneDescriptorFile::parse(&std::fs::read_to_string(path)?)?.into_schedule()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x_gate(eta: f64) -> GateSpec {
        GateSpec::holonomic(PI / 2.0, 0.0, PI, eta).unwrap()
    }

    /// Brute-force oracle: very fine grid only, no refinement.
    fn brute_peak(eta: f64) -> f64 {
        (0..=2_000_000)
            .map(|k| paths::envelope_shape(0.5 * k as f64 / 2e6, eta))
            .fold(0.0, f64::max)
    }

    #[test]
    fn duration_anchor_for_conventional_path() {
        let t = compute_duration(&x_gate(0.0), DEFAULT_OMEGA_MAX).unwrap();
        assert!((t - 157.08e-6).abs() < 0.01e-6, "{t}");
        assert!((t * DEFAULT_OMEGA_MAX - PI * PI).abs() < 1e-9);
        let half = compute_duration(&x_gate(0.0), 2.0 * DEFAULT_OMEGA_MAX).unwrap();
        assert!((half - t / 2.0).abs() < 1e-18);
    }

    #[test]
    fn duration_for_robust_path_matches_brute_force() {
        // Frozen from the brute-force grid: the peak sits at s = 1/4, where
        // g = √(1 + 16η²); for η = 1 this gives T = 647.66 µs.
        for eta in [0.2, 0.5, 1.0] {
            let oracle = brute_peak(eta);
            assert!(
                (envelope_peak(eta) - oracle).abs() < 1e-10 * oracle,
                "eta {eta}"
            );
        }
        let t = compute_duration(&x_gate(1.0), DEFAULT_OMEGA_MAX).unwrap();
        assert!((t - 647.6559e-6).abs() < 1e-10, "{t}");
    }

    #[test]
    fn x_gate_schedule_shape() {
        let s = synthesize(&x_gate(0.0), DEFAULT_OMEGA_MAX, 1024).unwrap();
        s.validate().unwrap();
        for k in 0..s.len() {
            assert!((s.omega0[k] - s.omega1[k]).abs() < 1e-9);
        }
        // φ₀ is constant on each half and jumps by −γ−π (mod 2π) at T/2.
        let mid = s.len() / 2;
        assert!(s.phi0[..=mid].iter().all(|&p| p == s.phi0[0]));
        assert!(s.phi0[mid + 1..].iter().all(|&p| p == s.phi0[mid + 1]));
        let jump = (s.phi0[mid + 1] - s.phi0[mid]).rem_euclid(2.0 * PI);
        assert!((jump - (PI - s.spec.gamma).rem_euclid(2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn nodes_and_peak() {
        let spec = GateSpec::holonomic(PI / 4.0, 0.0, PI, 0.2).unwrap();
        let s = synthesize(&spec, DEFAULT_OMEGA_MAX, 4096).unwrap();
        let n = s.len() - 1;
        for k in [0, n / 2, n] {
            assert_eq!(s.omega0[k].hypot(s.omega1[k]), 0.0);
        }
        assert!((s.sampled_peak() - DEFAULT_OMEGA_MAX).abs() < 1e-3 * DEFAULT_OMEGA_MAX);
        assert_eq!(
            s.duration,
            compute_duration(&spec, DEFAULT_OMEGA_MAX).unwrap()
        );
        let ratio = (PI / 8.0).tan();
        for k in 0..=n {
            if s.omega1[k] > 1e-12 * DEFAULT_OMEGA_MAX {
                assert!((s.omega0[k] / s.omega1[k] - ratio).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn holonomic_and_dynamical_share_envelopes() {
        let h = GateSpec::holonomic(PI / 4.0, 0.0, PI, 0.5).unwrap();
        let d = GateSpec::dynamical(PI / 4.0, 0.0, 0.5).unwrap();
        let sh = synthesize(&h, DEFAULT_OMEGA_MAX, 512).unwrap();
        let sd = synthesize(&d, DEFAULT_OMEGA_MAX, 512).unwrap();
        assert_eq!(sh.omega0, sd.omega0);
        assert_eq!(sh.omega1, sd.omega1);
        assert_ne!(sh.phi0, sd.phi0);
    }

    #[test]
    fn single_tone_limits_are_uniform() {
        let spec = GateSpec::holonomic(0.0, 0.0, PI / 2.0, 0.2).unwrap();
        let s = synthesize(&spec, DEFAULT_OMEGA_MAX, 256).unwrap();
        assert!(s.omega0.iter().all(|&o| o == 0.0));
        s.validate().unwrap();
    }

    #[test]
    fn synthesis_rejects_bad_input() {
        assert!(synthesize(&x_gate(0.0), DEFAULT_OMEGA_MAX, 255).is_err());
        assert!(synthesize(&x_gate(0.0), DEFAULT_OMEGA_MAX, 258 - 1).is_err());
        assert!(synthesize(&x_gate(0.0), DEFAULT_OMEGA_MAX, 128).is_err());
        assert!(GateSpec::holonomic(4.0, 0.0, PI, 0.0).is_err());
        assert!(GateSpec::holonomic(1.0, PI, PI, 0.0).is_err());
        assert!(GateSpec::holonomic(1.0, 0.0, -2.0 * PI, 0.0).is_err());
        assert!(compute_duration(&x_gate(0.0), 0.0).is_err());
    }

    #[test]
    fn tone_file_round_trip() {
        let spec = GateSpec::holonomic(PI / 3.0, -1.0, 2.0, 0.2).unwrap();
        let s = synthesize(&spec, DEFAULT_OMEGA_MAX, 256).unwrap();
        let text = ToneDescriptorFile::from_schedule(&s).unwrap().to_text();
        let back = ToneDescriptorFile::parse(&text)
            .unwrap()
            .into_schedule()
            .unwrap();
        assert_eq!(back, s);
        // Deterministic bytes.
        assert_eq!(
            text,
            ToneDescriptorFile::from_schedule(&back).unwrap().to_text()
        );
    }

    #[test]
    fn tone_file_metadata_matches_rows() {
        let s = synthesize(&x_gate(0.0), DEFAULT_OMEGA_MAX, 4096).unwrap();
        let text = ToneDescriptorFile::from_schedule(&s).unwrap().to_text();
        assert!(text.starts_with("# omega_max_rad_s = 6.2831853071795864e4\n"));
        let f = ToneDescriptorFile::parse(&text).unwrap();
        let peak = f.rows.iter().map(|r| r[1].hypot(r[3])).fold(0.0, f64::max);
        assert!((peak - f.omega_max).abs() < 1e-3 * f.omega_max);
        assert_eq!(f.tone0_hz, 12.6428e9);
        assert_eq!(f.tone1_hz, 12.6303e9);
    }

    #[test]
    fn empty_schedule_cannot_be_exported() {
        let mut s = synthesize(&x_gate(0.0), DEFAULT_OMEGA_MAX, 256).unwrap();
        for v in [
            &mut s.times,
            &mut s.omega0,
            &mut s.phi0,
            &mut s.omega1,
            &mut s.phi1,
        ] {
            v.clear();
        }
        assert!(ToneDescriptorFile::from_schedule(&s).is_err());
        let dir = tempfile::tempdir().unwrap();
        assert!(export_tones(&s, dir.path().join("x.csv")).is_err());
    }

    #[test]
    fn parse_rejects_unknown_keys_and_bad_rows() {
        let s = synthesize(&x_gate(0.0), DEFAULT_OMEGA_MAX, 256).unwrap();
        let text = ToneDescriptorFile::from_schedule(&s).unwrap().to_text();
        let extra = format!("# color = blue\n{text}");
        assert!(ToneDescriptorFile::parse(&extra).is_err());
        let provenance = format!("## nhqc 0.1.0\n## seed = 3\n{text}");
        assert_eq!(
            ToneDescriptorFile::parse(&provenance)
                .unwrap()
                .into_schedule()
                .unwrap(),
            s
        );
        let broken = format!("{text}1,2,3\n");
        assert!(matches!(
            ToneDescriptorFile::parse(&broken),
            Err(Error::Parse { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]
            #[test]
            fn tone_phase_difference_is_phi(theta in 0.0..PI, phi in -PI..PI, gamma in -6.0f64..6.0, eta in 0.0f64..1.2) {
                let spec = GateSpec::holonomic(theta, phi, gamma, eta).unwrap();
                let s = synthesize(&spec, DEFAULT_OMEGA_MAX, 256).unwrap();
                for k in 0..s.len() {
                    prop_assert!((s.phi0[k] - s.phi1[k] + PI - phi).abs() < 1e-12 * (1.0 + s.phi0[k].abs()));
                }
                prop_assert!((s.sampled_peak() - DEFAULT_OMEGA_MAX).abs() < 1e-3 * DEFAULT_OMEGA_MAX);
            }
        }
    }
}

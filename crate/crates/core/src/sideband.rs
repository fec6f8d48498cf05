//! Spin–phonon controlled-phase gate driven on the blue sideband.
//!
//! Basis ordering: index = spin·(n_max + 1) + n with spin 0, 1, a = 0, 1, 2.
//! The pair {|a,0⟩, |1,1⟩} plays the role of {|a⟩, |1⟩} in the single-qubit
//! drive with θ = 0, so the cycle imprints e^{iγ} on |1,1⟩ only.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::engine::{propagate_interval, propagate_unitary, Drive, Integrator, DEFAULT_STEPS};
use crate::error::{out_of_range, Error, Result};
use crate::linalg::{c, max_abs_diff, ComplexMatrix, C64};
use crate::pulses::{fmt_f64, synthesize, GateSpec, PulseSchedule};

/// Trap frequency, rad/s.
pub const DEFAULT_TRAP_FREQUENCY: f64 = 2.0 * PI * 2.4e6;
pub const DEFAULT_LAMB_DICKE: f64 = 0.1;
pub const DEFAULT_N_MAX: usize = 5;
/// Raman Rabi rate giving an effective coupling 2η_LDΩ_r = 2π·10 kHz.
pub const DEFAULT_RAMAN_RABI: f64 = 2.0 * PI * 50e3;
/// Truncation sensitivity above which a run is flagged as under-truncated.
pub const TRUNCATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SidebandSystem {
    pub n_max: usize,
    pub eta_ld: f64,
    /// Peak Raman Rabi rate, rad/s.
    pub omega_r: f64,
    /// Trap frequency, rad/s. The Raman beat note sits at ω_0a + ω_x.
    pub omega_x: f64,
}

impl Default for SidebandSystem {
    fn default() -> Self {
        Self {
            n_max: DEFAULT_N_MAX,
            eta_ld: DEFAULT_LAMB_DICKE,
            omega_r: DEFAULT_RAMAN_RABI,
            omega_x: DEFAULT_TRAP_FREQUENCY,
        }
    }
}

impl SidebandSystem {
    pub fn validate(&self) -> Result<()> {
        if self.n_max < 3 {
            return Err(Error::InvalidArgument(format!(
                "n_max must be at least 3, got {}",
                self.n_max
            )));
        }
        if !(self.eta_ld > 0.0 && self.eta_ld <= 0.3) {
            return Err(out_of_range("eta_ld", self.eta_ld, "(0, 0.3]"));
        }
        if !(self.omega_r > 0.0 && self.omega_r.is_finite()) {
            return Err(out_of_range("omega_r", self.omega_r, "> 0"));
        }
        if !(self.omega_x > 0.0 && self.omega_x.is_finite()) {
            return Err(out_of_range("omega_x", self.omega_x, "> 0"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        3 * (self.n_max + 1)
    }

    pub fn index(&self, spin: usize, n: usize) -> usize {
        spin * (self.n_max + 1) + n
    }

    /// Effective two-level coupling Ω̃ = 2η_LDΩ_r at the peak Raman rate.
    pub fn omega_tilde_max(&self) -> f64 {
        2.0 * self.eta_ld * self.omega_r
    }

    /// ω_r1 − ω_r2 for a given |0⟩↔|a⟩ splitting.
    pub fn raman_beat(&self, omega_0a: f64) -> f64 {
        omega_0a + self.omega_x
    }

    /// |00⟩, |01⟩, |10⟩, |11⟩ as (spin, phonon) indices.
    pub fn computational_indices(&self) -> [usize; 4] {
        [
            self.index(0, 0),
            self.index(0, 1),
            self.index(1, 0),
            self.index(1, 1),
        ]
    }
}

/// H = iΩ_rη_LD(σ₊a†e^{iφ} − H.c.) with σ₊ = |1⟩⟨a|.
pub fn anti_jc_hamiltonian(sys: &SidebandSystem, omega_r: f64, phi: f64) -> Result<ComplexMatrix> {
    sys.validate()?;
    if !(omega_r >= 0.0 && omega_r.is_finite()) {
        return Err(out_of_range("omega_r", omega_r, "≥ 0"));
    }
    Ok(anti_jc_unchecked(sys, omega_r, phi))
}

fn anti_jc_unchecked(sys: &SidebandSystem, omega_r: f64, phi: f64) -> ComplexMatrix {
    let d = sys.dim();
    let mut h = ComplexMatrix::zeros(d, d);
    let base = c(0.0, omega_r * sys.eta_ld) * C64::from_polar(1.0, phi);
    for n in 0..sys.n_max {
        let up = sys.index(1, n + 1);
        let from = sys.index(2, n);
        let element = base * ((n + 1) as f64).sqrt();
        h[(up, from)] = element;
        h[(from, up)] = element.conj();
    }
    h
}

/// Effective coupling Ω̃(t) and phase φ̃(t) of the two-level model.
#[derive(Debug, Clone, PartialEq)]
pub struct SidebandSchedule {
    pub times: Vec<f64>,
    pub omega_tilde: Vec<f64>,
    pub phi_tilde: Vec<f64>,
    pub duration: f64,
    pub gamma: f64,
    pub eta: f64,
    pub omega_tilde_max: f64,
    /// Underlying single-qubit schedule (θ = 0; tone 1 carries the drive).
    pub pulse: PulseSchedule,
}

pub fn synthesize_cphase(
    gamma: f64,
    omega_tilde_max: f64,
    eta: f64,
    n_samples: usize,
) -> Result<SidebandSchedule> {
    let spec = GateSpec::holonomic(0.0, 0.0, gamma, eta)?;
    let pulse = synthesize(&spec, omega_tilde_max, n_samples)?;
    Ok(SidebandSchedule {
        times: pulse.times.clone(),
        omega_tilde: pulse.omega1.clone(),
        phi_tilde: pulse.phi1.clone(),
        duration: pulse.duration,
        gamma,
        eta,
        omega_tilde_max,
        pulse,
    })
}

/// diag(1, 1, 1, e^{iγ}).
pub fn cphase_target(gamma: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::identity(4, 4);
    m[(3, 3)] = C64::from_polar(1.0, gamma);
    m
}

/// The full anti-JC model driven by a sideband schedule:
/// Ω_r(t) = (1+ε)Ω̃(t)/(2η_LD) and φ(t) = −φ̃(t) − π/2.
pub struct FullModelDrive<'a> {
    pub schedule: &'a SidebandSchedule,
    pub system: SidebandSystem,
}

impl Drive for FullModelDrive<'_> {
    fn dim(&self) -> usize {
        self.system.dim()
    }

    fn duration(&self) -> f64 {
        self.schedule.duration
    }

    fn hamiltonian(&self, t: f64, epsilon: f64) -> ComplexMatrix {
        let pulse = &self.schedule.pulse;
        let path = pulse.path().expect("validated schedule");
        let tones = pulse.controls_at_fraction(&path, t / pulse.duration);
        let omega_r = (1.0 + epsilon) * tones.omega1 / (2.0 * self.system.eta_ld);
        anti_jc_unchecked(&self.system, omega_r, -tones.phi1 - 0.5 * PI)
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![0.5 * self.schedule.duration]
    }
}

/// Computational-subspace propagator of the effective model, with |a,0⟩
/// standing in for the auxiliary level.
pub fn effective_propagator(schedule: &SidebandSchedule, steps: usize) -> Result<ComplexMatrix> {
    let u = propagate_unitary(&schedule.pulse, 0.0, steps)?.propagator;
    let mut m = ComplexMatrix::identity(4, 4);
    m[(3, 3)] = u[(1, 1)];
    Ok(m)
}

/// arg(⟨11|U|11⟩ · conj⟨00|U|00⟩) in (−π, π].
pub fn conditional_phase(block: &ComplexMatrix) -> f64 {
    (block[(3, 3)] * block[(0, 0)].conj()).arg()
}

/// |Tr(V†M)|² / 16.
pub fn subspace_fidelity(block: &ComplexMatrix, target: &ComplexMatrix) -> f64 {
    (target.adjoint() * block).trace().norm_sqr() / 16.0
}

fn computational_block(u: &ComplexMatrix, sys: &SidebandSystem) -> ComplexMatrix {
    let idx = sys.computational_indices();
    ComplexMatrix::from_fn(4, 4, |i, j| u[(idx[i], idx[j])])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SidebandReport {
    pub n_max: usize,
    pub conditional_phase: f64,
    pub subspace_fidelity: f64,
    /// max over computational inputs of the population leaving the subspace.
    pub leakage: f64,
    /// max |ΔU| on the computational block when n_max → n_max + 2.
    pub truncation_change: f64,
    pub under_truncated: bool,
    /// Largest population change of |1,0⟩ and |0,n⟩ inputs.
    pub fixed_point_deviation: f64,
    pub block: ComplexMatrix,
}

fn propagate_full(
    schedule: &SidebandSchedule,
    sys: SidebandSystem,
    steps: usize,
) -> Result<ComplexMatrix> {
    let drive = FullModelDrive {
        schedule,
        system: sys,
    };
    propagate_interval(
        &drive,
        0.0,
        0.0,
        schedule.duration,
        steps,
        Integrator::default(),
    )
}

pub fn verify_full_model(
    schedule: &SidebandSchedule,
    sys: &SidebandSystem,
) -> Result<SidebandReport> {
    verify_full_model_with(schedule, sys, DEFAULT_STEPS)
}

pub fn verify_full_model_with(
    schedule: &SidebandSchedule,
    sys: &SidebandSystem,
    steps: usize,
) -> Result<SidebandReport> {
    sys.validate()?;
    schedule.pulse.validate()?;
    let needed = schedule.omega_tilde_max / (2.0 * sys.eta_ld);
    if needed > sys.omega_r * (1.0 + 1e-3) {
        return Err(Error::InvalidArgument(format!(
            "schedule needs Raman Rabi rate {needed:.6e} rad/s above the available {:.6e}",
            sys.omega_r
        )));
    }
    let u = propagate_full(schedule, *sys, steps)?;
    let block = computational_block(&u, sys);
    let bigger = SidebandSystem {
        n_max: sys.n_max + 2,
        ..*sys
    };
    let u_big = propagate_full(schedule, bigger, steps)?;
    let truncation_change = max_abs_diff(&block, &computational_block(&u_big, &bigger));
    let leakage = (0..4)
        .map(|j| 1.0 - (0..4).map(|i| block[(i, j)].norm_sqr()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut fixed = vec![sys.index(1, 0)];
    fixed.extend((0..=sys.n_max).map(|n| sys.index(0, n)));
    let fixed_point_deviation = fixed
        .iter()
        .map(|&k| (1.0 - u[(k, k)].norm_sqr()).abs())
        .fold(0.0, f64::max);
    Ok(SidebandReport {
        n_max: sys.n_max,
        conditional_phase: conditional_phase(&block),
        subspace_fidelity: subspace_fidelity(&block, &cphase_target(schedule.gamma)),
        leakage,
        truncation_change,
        under_truncated: truncation_change > TRUNCATION_TOL,
        fixed_point_deviation,
        block,
    })
}

impl SidebandReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "n_max,conditional_phase_rad,subspace_fidelity,leakage,truncation_change,fixed_point_deviation\n",
        );
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            self.n_max,
            fmt_f64(self.conditional_phase),
            fmt_f64(self.subspace_fidelity),
            fmt_f64(self.leakage),
            fmt_f64(self.truncation_change),
            fmt_f64(self.fixed_point_deviation)
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulses::{compute_duration, DEFAULT_OMEGA_MAX};

    fn sys() -> SidebandSystem {
        SidebandSystem::default()
    }

    #[test]
    fn hamiltonian_ladder_elements() {
        let s = sys();
        let h = anti_jc_hamiltonian(&s, 1.0e5, 0.3).unwrap();
        let e10 = h[(s.index(1, 1), s.index(2, 0))];
        assert!((e10.norm() - 0.1 * 1.0e5).abs() < 1e-9);
        assert!((e10 - c(0.0, 1.0e4) * C64::from_polar(1.0, 0.3)).norm() < 1e-9);
        let e32 = h[(s.index(1, 3), s.index(2, 2))];
        assert!((e32.norm() / e10.norm() - 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(crate::linalg::hermiticity_deviation(&h), 0.0);
        for row in 0..s.dim() {
            assert_eq!(h[(row, s.index(1, 0))], c(0.0, 0.0));
            for n in 0..=s.n_max {
                assert_eq!(h[(row, s.index(0, n))], c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn system_validation() {
        assert!(SidebandSystem { n_max: 2, ..sys() }.validate().is_err());
        assert!(SidebandSystem {
            eta_ld: 0.5,
            ..sys()
        }
        .validate()
        .is_err());
        assert!(SidebandSystem {
            omega_r: 0.0,
            ..sys()
        }
        .validate()
        .is_err());
        assert!(anti_jc_hamiltonian(&sys(), -1.0, 0.0).is_err());
        assert!((sys().omega_tilde_max() - DEFAULT_OMEGA_MAX).abs() < 1e-9);
    }

    #[test]
    fn schedule_shape() {
        let s = synthesize_cphase(PI, DEFAULT_OMEGA_MAX, 0.2, 4096).unwrap();
        let n = s.omega_tilde.len();
        assert_eq!(s.omega_tilde[0], 0.0);
        assert!(s.omega_tilde[n / 2].abs() < 1e-9 * DEFAULT_OMEGA_MAX);
        assert!(s.omega_tilde[n - 1].abs() < 1e-9 * DEFAULT_OMEGA_MAX);
        let peak = s.omega_tilde.iter().cloned().fold(0.0, f64::max);
        assert!((peak - DEFAULT_OMEGA_MAX).abs() < 1e-3 * DEFAULT_OMEGA_MAX);
        let single = GateSpec::holonomic(PI / 2.0, 0.0, PI, 0.2).unwrap();
        assert_eq!(
            s.duration,
            compute_duration(&single, DEFAULT_OMEGA_MAX).unwrap()
        );
    }

    #[test]
    fn effective_model_targets() {
        for (gamma, eta) in [(PI, 0.2), (0.0, 0.2), (PI / 2.0, 0.2), (PI / 4.0, 1.0)] {
            let s = synthesize_cphase(gamma, DEFAULT_OMEGA_MAX, eta, 4096).unwrap();
            let u = effective_propagator(&s, DEFAULT_STEPS).unwrap();
            assert!(max_abs_diff(&u, &cphase_target(gamma)) < 1e-6, "γ {gamma}");
        }
    }

    #[test]
    fn full_model_matches_effective_model() {
        for gamma in [PI / 4.0, PI / 2.0, PI] {
            let s = synthesize_cphase(gamma, DEFAULT_OMEGA_MAX, 0.2, 4096).unwrap();
            let eff = effective_propagator(&s, DEFAULT_STEPS).unwrap();
            let report = verify_full_model(&s, &sys()).unwrap();
            assert!((conditional_phase(&eff) - report.conditional_phase).abs() < 1e-6);
            assert!(report.subspace_fidelity >= 0.999);
            assert!(report.leakage < 1e-3);
            assert!(report.fixed_point_deviation < 1e-10);
            assert!(!report.under_truncated);
        }
    }

    #[test]
    fn insufficient_raman_rate_is_rejected() {
        let s = synthesize_cphase(PI, DEFAULT_OMEGA_MAX, 0.2, 4096).unwrap();
        let weak = SidebandSystem {
            omega_r: 2.0 * PI * 10e3,
            ..sys()
        };
        assert!(verify_full_model(&s, &weak).is_err());
    }

    #[test]
    fn report_csv() {
        let s = synthesize_cphase(PI, DEFAULT_OMEGA_MAX, 0.2, 1024).unwrap();
        let r = verify_full_model_with(&s, &sys(), 2048).unwrap();
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.lines().nth(1).unwrap().starts_with("5,"));
    }
}

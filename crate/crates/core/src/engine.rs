//! Time propagation of the driven three-level system.
//!
//! Closed-system evolution is a time-ordered product of exponentials, one per
//! step (fourth-order Magnus by default). Open-system evolution integrates the
//! Lindblad master equation with classical RK4 steps. Both split the interval
//! at T/2, where the drive phase jumps.

use crate::error::{out_of_range, Error, Result};
use crate::linalg::{
    c, commutator, embed_qubit, identity, matrix_exponential, max_abs_diff, unitarity_deviation,
    ComplexMatrix, ComplexVector, DensityMatrix, QuantumState, C64, UNITARITY_ACCEPT,
};
use crate::paths::Segment;
use crate::pulses::{GateSpec, PulseSchedule};

pub const DEFAULT_STEPS: usize = 8192;
/// Ramsey coherence times of the |1⟩↔|a⟩ and |0⟩↔|a⟩ transitions, s.
pub const RAMSEY_T2_1A: f64 = 20e-3;
pub const RAMSEY_T2_0A: f64 = 200e-3;
/// Population error of the |0⟩ preparation (99.5% fidelity).
pub const PREP_ERROR: f64 = 0.005;

const CONVERGENCE_LIMIT: f64 = 1e-6;
const TRACE_DRIFT_LIMIT: f64 = 1e-6;

/// Static amplitude error, dephasing rates and SPAM probabilities.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// Relative Rabi-rate error ε: Ω → (1+ε)Ω.
    pub epsilon: f64,
    /// Dephasing rate acting on |1⟩, 1/s. Decays the |1⟩↔|a⟩ coherence at Γ/2.
    pub gamma_1a: f64,
    /// Dephasing rate acting on |0⟩, 1/s.
    pub gamma_0a: f64,
    pub prep_error: f64,
    /// Probability that a bright outcome is recorded as dark.
    pub detection_error_bright: f64,
    /// Probability that a dark outcome is recorded as bright.
    pub detection_error_dark: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl NoiseModel {
    pub fn ideal() -> Self {
        Self {
            epsilon: 0.0,
            gamma_1a: 0.0,
            gamma_0a: 0.0,
            prep_error: 0.0,
            detection_error_bright: 0.0,
            detection_error_dark: 0.0,
        }
    }

    pub fn amplitude_error(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::ideal()
        }
    }

    /// Dephasing calibrated to the measured Ramsey times: with L = √Γ|k⟩⟨k|
    /// a coherence decays at Γ/2, so Γ = 2/T₂.
    pub fn ramsey_dephasing() -> Self {
        Self {
            gamma_1a: 2.0 / RAMSEY_T2_1A,
            gamma_0a: 2.0 / RAMSEY_T2_0A,
            ..Self::ideal()
        }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }

    pub fn is_closed(&self) -> bool {
        self.gamma_1a == 0.0 && self.gamma_0a == 0.0
    }

    /// (level, rate) pairs for the pure-dephasing jump operators.
    pub fn dephasing_channels(&self) -> Vec<(usize, f64)> {
        [(1, self.gamma_1a), (0, self.gamma_0a)]
            .into_iter()
            .filter(|&(_, g)| g > 0.0)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(-0.5..=0.5).contains(&self.epsilon) {
            return Err(out_of_range("epsilon", self.epsilon, "[−0.5, 0.5]"));
        }
        for (name, rate) in [("gamma_1a", self.gamma_1a), ("gamma_0a", self.gamma_0a)] {
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(out_of_range(name, rate, "≥ 0"));
            }
        }
        for (name, p) in [
            ("prep_error", self.prep_error),
            ("detection_error_bright", self.detection_error_bright),
            ("detection_error_dark", self.detection_error_dark),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(out_of_range(name, p, "[0, 1]"));
            }
        }
        Ok(())
    }
}

/// A time-dependent Hamiltonian on [0, T] (ħ = 1, rad/s).
pub trait Drive: Sync {
    fn dim(&self) -> usize;
    fn duration(&self) -> f64;
    /// H(t) with all drive amplitudes scaled by (1+ε). No range checks.
    fn hamiltonian(&self, t: f64, epsilon: f64) -> ComplexMatrix;
    /// Interior times where H may be non-smooth; integration steps align to them.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Two-tone drive in the ordered basis (|0⟩, |1⟩, |a⟩).
pub(crate) fn two_tone_hamiltonian(
    omega0: f64,
    phi0: f64,
    omega1: f64,
    phi1: f64,
    epsilon: f64,
) -> ComplexMatrix {
    let scale = 0.5 * (1.0 + epsilon);
    let h0a = C64::from_polar(scale * omega0, -phi0);
    let h1a = C64::from_polar(scale * omega1, -phi1);
    let mut h = ComplexMatrix::zeros(3, 3);
    h[(0, 2)] = h0a;
    h[(2, 0)] = h0a.conj();
    h[(1, 2)] = h1a;
    h[(2, 1)] = h1a.conj();
    h
}

impl Drive for PulseSchedule {
    fn dim(&self) -> usize {
        3
    }

    fn duration(&self) -> f64 {
        self.duration
    }

    fn hamiltonian(&self, t: f64, epsilon: f64) -> ComplexMatrix {
        let path = self.path().expect("validated schedule");
        let c = self.controls_at_fraction(&path, t / self.duration);
        two_tone_hamiltonian(c.omega0, c.phi0, c.omega1, c.phi1, epsilon)
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![0.5 * self.duration]
    }
}

/// No drive at all; useful for Ramsey-style free evolution.
#[derive(Debug, Clone, Copy)]
pub struct Idle {
    pub dim: usize,
    pub duration: f64,
}

impl Drive for Idle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn duration(&self) -> f64 {
        self.duration
    }

    fn hamiltonian(&self, _t: f64, _epsilon: f64) -> ComplexMatrix {
        ComplexMatrix::zeros(self.dim, self.dim)
    }
}

/// H(t) for a schedule, with the drive error ε.
pub fn hamiltonian_at(schedule: &PulseSchedule, t: f64, epsilon: f64) -> Result<ComplexMatrix> {
    if !(0.0..=schedule.duration).contains(&t) {
        return Err(out_of_range("t", t, "0 ≤ t ≤ T"));
    }
    let c = schedule.controls_at(t)?;
    Ok(two_tone_hamiltonian(
        c.omega0, c.phi0, c.omega1, c.phi1, epsilon,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Fourth-order Magnus: two Gauss–Legendre nodes and one commutator per step.
    #[default]
    Magnus4,
    /// exp(−iH(t_mid)Δt) per step; second order.
    Midpoint,
}

fn step_propagator(
    drive: &dyn Drive,
    epsilon: f64,
    t: f64,
    h: f64,
    integrator: Integrator,
) -> Result<ComplexMatrix> {
    let minus_i = c(0.0, -1.0);
    let generator = match integrator {
        Integrator::Midpoint => drive.hamiltonian(t + 0.5 * h, epsilon) * c(0.0, -h),
        Integrator::Magnus4 => {
            let offset = 3f64.sqrt() / 6.0;
            let a1 = drive.hamiltonian(t + h * (0.5 - offset), epsilon) * minus_i;
            let a2 = drive.hamiltonian(t + h * (0.5 + offset), epsilon) * minus_i;
            (&a1 + &a2) * c(0.5 * h, 0.0)
                + commutator(&a2, &a1) * c(3f64.sqrt() / 12.0 * h * h, 0.0)
        }
    };
    matrix_exponential(&generator, c(1.0, 0.0))
}

/// Split [t0, t1] at the drive's breakpoints and share `steps` among the pieces.
fn pieces(drive: &dyn Drive, t0: f64, t1: f64, steps: usize) -> Vec<(f64, f64, usize)> {
    let mut cuts = vec![t0];
    cuts.extend(
        drive
            .breakpoints()
            .into_iter()
            .filter(|&b| b > t0 && b < t1),
    );
    cuts.push(t1);
    let span = t1 - t0;
    cuts.windows(2)
        .map(|w| {
            let n = ((steps as f64) * (w[1] - w[0]) / span).round().max(1.0) as usize;
            (w[0], w[1], n)
        })
        .collect()
}

/// Time-ordered propagator U(t1, t0).
pub fn propagate_interval(
    drive: &dyn Drive,
    epsilon: f64,
    t0: f64,
    t1: f64,
    steps: usize,
    integrator: Integrator,
) -> Result<ComplexMatrix> {
    if !(t0 >= 0.0 && t1 <= drive.duration() * (1.0 + 1e-15) && t0 <= t1) {
        return Err(Error::InvalidArgument(format!(
            "interval [{t0}, {t1}] outside [0, {}]",
            drive.duration()
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be positive".into()));
    }
    let mut u = identity(drive.dim());
    for (a, b, n) in pieces(drive, t0, t1, steps) {
        let h = (b - a) / n as f64;
        for k in 0..n {
            let step = step_propagator(drive, epsilon, a + k as f64 * h, h, integrator)?;
            u = step * u;
        }
    }
    Ok(u)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub propagator: ComplexMatrix,
    pub steps: usize,
    /// max |U_N − U_{N/2}| over entries.
    pub error_estimate: f64,
}

/// Closed-system propagator U(T, 0) with a step-halving error estimate.
pub fn propagate_unitary(
    schedule: &PulseSchedule,
    epsilon: f64,
    steps: usize,
) -> Result<PropagationResult> {
    propagate_unitary_with(schedule, epsilon, steps, Integrator::default())
}

pub fn propagate_unitary_with(
    schedule: &PulseSchedule,
    epsilon: f64,
    steps: usize,
    integrator: Integrator,
) -> Result<PropagationResult> {
    schedule.validate()?;
    let n_intervals = schedule.len() - 1;
    if steps < n_intervals || !steps.is_multiple_of(4) {
        return Err(Error::InvalidArgument(format!(
            "steps must be a multiple of 4 and at least the sample count {n_intervals}, got {steps}"
        )));
    }
    let fine = propagate_interval(schedule, epsilon, 0.0, schedule.duration, steps, integrator)?;
    let coarse = propagate_interval(
        schedule,
        epsilon,
        0.0,
        schedule.duration,
        steps / 2,
        integrator,
    )?;
    let error_estimate = max_abs_diff(&fine, &coarse);
    if error_estimate > CONVERGENCE_LIMIT {
        return Err(Error::NonConvergent(format!(
            "entries changed by {error_estimate:.3e} on step doubling"
        )));
    }
    let deviation = unitarity_deviation(&fine);
    if deviation > UNITARITY_ACCEPT {
        return Err(Error::NotUnitary {
            what: "propagator",
            deviation,
        });
    }
    Ok(PropagationResult {
        propagator: fine,
        steps,
        error_estimate,
    })
}

/// Propagator over one half of the cycle.
pub fn propagate_segment(
    schedule: &PulseSchedule,
    epsilon: f64,
    segment: Segment,
    steps: usize,
) -> Result<ComplexMatrix> {
    let half = 0.5 * schedule.duration;
    let (t0, t1) = match segment {
        Segment::First => (0.0, half),
        Segment::Second => (half, schedule.duration),
    };
    propagate_interval(schedule, epsilon, t0, t1, steps, Integrator::default())
}

/// |b⟩ = sin(θ/2)|0⟩ − cos(θ/2)e^{iφ}|1⟩.
pub fn bright_state(spec: &GateSpec) -> QuantumState {
    let (s, co) = (0.5 * spec.theta).sin_cos();
    QuantumState::normalized(ComplexVector::from_vec(vec![
        c(s, 0.0),
        -C64::from_polar(co, spec.phi),
        c(0.0, 0.0),
    ]))
    .expect("unit vector")
}

/// |d⟩ = −cos(θ/2)e^{−iφ}|0⟩ − sin(θ/2)|1⟩.
pub fn dark_state(spec: &GateSpec) -> QuantumState {
    let (s, co) = (0.5 * spec.theta).sin_cos();
    QuantumState::normalized(ComplexVector::from_vec(vec![
        -C64::from_polar(co, -spec.phi),
        c(-s, 0.0),
        c(0.0, 0.0),
    ]))
    .expect("unit vector")
}

/// |⟨ψ(T/2)|ψ_ε(T/2)⟩|² for the bright state driven over the first half.
pub fn survival_probability(schedule: &PulseSchedule, epsilon: f64) -> Result<f64> {
    schedule.validate()?;
    let b = bright_state(&schedule.spec);
    let half_steps = DEFAULT_STEPS / 2;
    let ideal = propagate_segment(schedule, 0.0, Segment::First, half_steps)?;
    let perturbed = propagate_segment(schedule, epsilon, Segment::First, half_steps)?;
    let psi = b.evolve(&ideal)?;
    let psi_eps = b.evolve(&perturbed)?;
    Ok(psi.inner(&psi_eps).norm_sqr())
}

/// dρ/dt = −i[H, ρ] + Σ_k Γ_k (P_k ρ P_k − ½{P_k, ρ}).
fn lindblad_rhs(
    h: &ComplexMatrix,
    rho: &ComplexMatrix,
    dephasing: &[(usize, f64)],
) -> ComplexMatrix {
    let mut out = (h * rho - rho * h) * c(0.0, -1.0);
    let n = rho.nrows();
    for &(k, rate) in dephasing {
        for j in 0..n {
            if j != k {
                out[(k, j)] -= rho[(k, j)] * (0.5 * rate);
                out[(j, k)] -= rho[(j, k)] * (0.5 * rate);
            }
        }
    }
    out
}

/// RK4 integration of the master equation for an arbitrary (not necessarily
/// Hermitian) operator; linear, so it also propagates superoperator columns.
pub fn evolve_master_equation(
    drive: &dyn Drive,
    noise: &NoiseModel,
    rho: &ComplexMatrix,
    steps: usize,
) -> Result<ComplexMatrix> {
    if rho.nrows() != drive.dim() || rho.ncols() != drive.dim() {
        return Err(Error::DimensionMismatch {
            expected: drive.dim(),
            got: rho.nrows(),
        });
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be positive".into()));
    }
    let dephasing = noise.dephasing_channels();
    let eps = noise.epsilon;
    let mut state = rho.clone();
    for (a, b, n) in pieces(drive, 0.0, drive.duration(), steps) {
        let h = (b - a) / n as f64;
        for k in 0..n {
            let t = a + k as f64 * h;
            let h_start = drive.hamiltonian(t, eps);
            let h_mid = drive.hamiltonian(t + 0.5 * h, eps);
            let h_end = drive.hamiltonian(t + h, eps);
            let k1 = lindblad_rhs(&h_start, &state, &dephasing);
            let k2 = lindblad_rhs(&h_mid, &(&state + &k1 * c(0.5 * h, 0.0)), &dephasing);
            let k3 = lindblad_rhs(&h_mid, &(&state + &k2 * c(0.5 * h, 0.0)), &dephasing);
            let k4 = lindblad_rhs(&h_end, &(&state + &k3 * c(h, 0.0)), &dephasing);
            state += (k1 + (k2 + k3) * c(2.0, 0.0) + k4) * c(h / 6.0, 0.0);
        }
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpenPropagationResult {
    pub state: DensityMatrix,
    pub steps: usize,
    pub trace_drift: f64,
}

/// Evolve a density matrix under the drive with dephasing.
pub fn propagate_open(
    drive: &dyn Drive,
    noise: &NoiseModel,
    rho: &DensityMatrix,
    steps: usize,
) -> Result<OpenPropagationResult> {
    noise.validate()?;
    let out = evolve_master_equation(drive, noise, rho.entries(), steps)?;
    let trace_drift = (out.trace() - c(1.0, 0.0)).norm();
    if trace_drift > TRACE_DRIFT_LIMIT {
        return Err(Error::TraceDrift(trace_drift));
    }
    let state = DensityMatrix::with_tolerances(out, 1e-9, 1e-8)?;
    Ok(OpenPropagationResult {
        state,
        steps,
        trace_drift,
    })
}

/// Column-stacking vectorization: vec(ρ)[i + d·j] = ρ_ij.
pub fn vectorize(rho: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_column_slice(rho.as_slice())
}

pub fn unvectorize(v: &ComplexVector, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(dim, dim, v.as_slice())
}

/// Superoperator S with vec(E(ρ)) = S·vec(ρ), built column by column.
pub fn superoperator(drive: &dyn Drive, noise: &NoiseModel, steps: usize) -> Result<ComplexMatrix> {
    noise.validate()?;
    let d = drive.dim();
    let mut s = ComplexMatrix::zeros(d * d, d * d);
    for col in 0..d * d {
        let mut basis = ComplexMatrix::zeros(d, d);
        basis[(col % d, col / d)] = c(1.0, 0.0);
        let out = evolve_master_equation(drive, noise, &basis, steps)?;
        s.set_column(col, &vectorize(&out));
    }
    Ok(s)
}

/// The action of one gate on the three-level density matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum GateChannel {
    Unitary(ComplexMatrix),
    Superoperator(ComplexMatrix),
    /// Ideal qubit unitary followed by qubit depolarizing with probability `d`.
    Depolarized {
        unitary: ComplexMatrix,
        d: f64,
    },
}

impl GateChannel {
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        match self {
            GateChannel::Unitary(u) => u * rho * u.adjoint(),
            GateChannel::Superoperator(s) => unvectorize(&(s * vectorize(rho)), rho.nrows()),
            GateChannel::Depolarized { unitary, d } => {
                let mut out = unitary * rho * unitary.adjoint();
                let qubit_pop = out[(0, 0)].re + out[(1, 1)].re;
                for i in 0..2 {
                    for j in 0..2 {
                        out[(i, j)] *= 1.0 - d;
                    }
                    out[(i, i)] += c(0.5 * d * qubit_pop, 0.0);
                }
                out
            }
        }
    }

    pub fn ideal_qubit(v: &ComplexMatrix) -> Self {
        GateChannel::Unitary(embed_qubit(v))
    }
}

/// Average gate fidelity of a channel's qubit block against the qubit unitary `v`:
/// (Σ_ab ⟨a|V†E(|a⟩⟨b|)V|b⟩ + Σ_a Tr_q E(|a⟩⟨a|)) / (d(d+1)), d = 2.
/// Equals [`crate::linalg::average_gate_fidelity`] for unitary channels.
pub fn channel_average_fidelity(channel: &GateChannel, v: &ComplexMatrix) -> f64 {
    let ve = embed_qubit(v);
    let dim = ve.nrows();
    let mut overlap = 0.0;
    let mut norm = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let mut input = ComplexMatrix::zeros(dim, dim);
            input[(a, b)] = c(1.0, 0.0);
            let out = channel.apply(&input);
            overlap += (ve.adjoint() * &out * &ve)[(a, b)].re;
            if a == b {
                norm += out[(0, 0)].re + out[(1, 1)].re;
            }
        }
    }
    (overlap + norm) / 6.0
}

/// Channel realized by propagating `schedule` under `noise`.
pub fn gate_channel(
    schedule: &PulseSchedule,
    noise: &NoiseModel,
    steps: usize,
) -> Result<GateChannel> {
    noise.validate()?;
    if noise.is_closed() {
        Ok(GateChannel::Unitary(
            propagate_unitary(schedule, noise.epsilon, steps)?.propagator,
        ))
    } else {
        schedule.validate()?;
        Ok(GateChannel::Superoperator(superoperator(
            schedule, noise, steps,
        )?))
    }
}

/// Free-evolution coherence e^{−Γt/2} of a single pure-dephasing channel.
pub fn dephasing_coherence(rate: f64, t: f64) -> f64 {
    (-0.5 * rate * t).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fidelity_qubit_subspace, leakage, pauli_x};
    use crate::pulses::{synthesize, DEFAULT_OMEGA_MAX};
    use std::f64::consts::PI;

    fn x_schedule(eta: f64) -> PulseSchedule {
        let spec = GateSpec::holonomic(PI / 2.0, 0.0, PI, eta).unwrap();
        synthesize(&spec, DEFAULT_OMEGA_MAX, 4096).unwrap()
    }

    #[test]
    fn hamiltonian_vanishes_at_start_and_scales_with_error() {
        let s = x_schedule(0.2);
        assert_eq!(
            hamiltonian_at(&s, 0.0, 0.0).unwrap(),
            ComplexMatrix::zeros(3, 3)
        );
        let t = 0.37 * s.duration;
        let h0 = hamiltonian_at(&s, t, 0.0).unwrap();
        let h1 = hamiltonian_at(&s, t, 0.1).unwrap();
        assert!(max_abs_diff(&(h0 * c(1.1, 0.0)), &h1) < 1e-9);
        assert!(hamiltonian_at(&s, 1.5 * s.duration, 0.0).is_err());
    }

    #[test]
    fn quarter_point_coupling_magnitude() {
        let s = x_schedule(0.0);
        let h = hamiltonian_at(&s, s.duration / 4.0, 0.0).unwrap();
        let expected = PI * PI / (2.0 * 2f64.sqrt() * s.duration);
        assert!((h[(0, 2)].norm() - expected).abs() < 1e-9 * expected);
        assert!((h[(1, 2)].norm() - expected).abs() < 1e-9 * expected);
        assert!(crate::linalg::hermiticity_deviation(&h) == 0.0);
    }

    #[test]
    fn ideal_x_gate() {
        let r = propagate_unitary(&x_schedule(0.0), 0.0, DEFAULT_STEPS).unwrap();
        assert!(fidelity_qubit_subspace(&r.propagator, &pauli_x()).unwrap() >= 1.0 - 1e-6);
        assert!(leakage(&r.propagator).unwrap() < 1e-8);
        assert!(r.error_estimate < 1e-9, "{}", r.error_estimate);
    }

    #[test]
    fn midpoint_converges_more_slowly_than_magnus() {
        let s = x_schedule(1.0);
        let t = s.duration;
        let run = |n, integrator| propagate_interval(&s, 0.0, 0.0, t, n, integrator).unwrap();
        let reference = run(4 * DEFAULT_STEPS, Integrator::Magnus4);
        let err = |n, integrator| max_abs_diff(&run(n, integrator), &reference);
        let (m1, m2) = (
            err(1024, Integrator::Midpoint),
            err(2048, Integrator::Midpoint),
        );
        let (g1, g2) = (
            err(1024, Integrator::Magnus4),
            err(2048, Integrator::Magnus4),
        );
        assert!((m1 / m2 - 4.0).abs() < 0.2, "midpoint ratio {}", m1 / m2);
        assert!((g1 / g2 - 16.0).abs() < 1.5, "magnus ratio {}", g1 / g2);
        assert!(matches!(
            propagate_unitary_with(&s, 0.0, DEFAULT_STEPS, Integrator::Midpoint),
            Err(Error::NonConvergent(_))
        ));
    }

    #[test]
    fn propagator_realizes_target_rotation() {
        for &(theta, phi, gamma, eta) in &[
            (0.0, 0.0, PI / 2.0, 0.2),
            (2.0, -1.0, 1.3, 1.0),
            (0.5, 2.5, -0.7, 0.0),
        ] {
            let spec = GateSpec::holonomic(theta, phi, gamma, eta).unwrap();
            let s = synthesize(&spec, DEFAULT_OMEGA_MAX, 4096).unwrap();
            let u = propagate_unitary(&s, 0.0, DEFAULT_STEPS)
                .unwrap()
                .propagator;
            let target = crate::gates::target_unitary(&spec);
            assert!(fidelity_qubit_subspace(&u, &target).unwrap() > 1.0 - 1e-9);
            let dynamical = GateSpec::dynamical(theta, phi, 0.5 * eta + 0.1).unwrap();
            let s = synthesize(&dynamical, DEFAULT_OMEGA_MAX, 4096).unwrap();
            let u = propagate_unitary(&s, 0.0, DEFAULT_STEPS)
                .unwrap()
                .propagator;
            let target = crate::gates::target_unitary(&dynamical);
            assert!(fidelity_qubit_subspace(&u, &target).unwrap() > 1.0 - 1e-9);
        }
    }

    #[test]
    fn dark_state_is_left_alone() {
        for &(theta, phi, gamma, eta) in &[(0.7, 1.3, 2.1, 0.2), (PI / 2.0, -2.0, PI, 1.0)] {
            let spec = GateSpec::holonomic(theta, phi, gamma, eta).unwrap();
            let s = synthesize(&spec, DEFAULT_OMEGA_MAX, 4096).unwrap();
            let u = propagate_unitary(&s, 0.0, DEFAULT_STEPS)
                .unwrap()
                .propagator;
            let d = dark_state(&spec);
            let out = d.evolve(&u).unwrap();
            assert!((out.amplitudes() - d.amplitudes()).norm() < 1e-6);
        }
    }

    #[test]
    fn first_half_transfers_bright_to_auxiliary() {
        let s = x_schedule(0.2);
        let u = propagate_segment(&s, 0.0, Segment::First, 4096).unwrap();
        let out = bright_state(&s.spec).evolve(&u).unwrap();
        assert!((out.amplitudes()[2].norm_sqr() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn survival_is_one_without_error() {
        assert!((survival_probability(&x_schedule(0.5), 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn survival_at_integer_eta_is_flat() {
        let p = survival_probability(&x_schedule(1.0), 0.1).unwrap();
        assert!(1.0 - p < 1e-3, "{p}");
    }

    #[test]
    fn steps_must_cover_samples() {
        let s = x_schedule(0.0);
        assert!(propagate_unitary(&s, 0.0, 2048).is_err());
        assert!(propagate_unitary(&s, 0.0, 8190).is_err());
    }

    #[test]
    fn open_system_without_dephasing_matches_closed() {
        let s = x_schedule(0.2);
        let u = propagate_unitary(&s, 0.05, DEFAULT_STEPS)
            .unwrap()
            .propagator;
        let psi = QuantumState::new(vec![c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)]).unwrap();
        let noise = NoiseModel::amplitude_error(0.05);
        let open = propagate_open(&s, &noise, &psi.to_density(), DEFAULT_STEPS).unwrap();
        let closed = psi.evolve(&u).unwrap().to_density();
        assert!(max_abs_diff(open.state.entries(), closed.entries()) < 1e-9);
    }

    #[test]
    fn ramsey_coherence_decays_with_calibrated_time() {
        let noise = NoiseModel::ramsey_dephasing();
        let plus = QuantumState::new(vec![
            c(0.0, 0.0),
            c(1.0 / 2f64.sqrt(), 0.0),
            c(1.0 / 2f64.sqrt(), 0.0),
        ])
        .unwrap();
        for t in [1e-3, RAMSEY_T2_1A, 50e-3] {
            let idle = Idle {
                dim: 3,
                duration: t,
            };
            let out = propagate_open(&idle, &noise, &plus.to_density(), 512).unwrap();
            let coherence = 2.0 * out.state.entries()[(1, 2)].norm();
            assert!(
                (coherence - (-t / RAMSEY_T2_1A).exp()).abs() < 1e-9,
                "t {t}"
            );
            assert!((coherence - dephasing_coherence(noise.gamma_1a, t)).abs() < 1e-9);
        }
    }

    #[test]
    fn maximally_mixed_is_a_fixed_point() {
        let s = x_schedule(0.2);
        let noise = NoiseModel::ramsey_dephasing().with_epsilon(0.1);
        let mixed = DensityMatrix::maximally_mixed(3);
        let out = propagate_open(&s, &noise, &mixed, 2048).unwrap();
        assert!(max_abs_diff(out.state.entries(), mixed.entries()) < 1e-12);
    }

    #[test]
    fn open_evolution_stays_physical() {
        let s = x_schedule(1.0);
        let noise = NoiseModel {
            gamma_1a: 2e3,
            gamma_0a: 5e2,
            ..NoiseModel::ideal()
        };
        let rho = QuantumState::basis(3, 0).to_density();
        let out = propagate_open(&s, &noise, &rho, 4096).unwrap();
        assert!(out.state.min_eigenvalue() > -1e-8);
        assert!(out.trace_drift < 1e-9);
        assert!(out.state.purity() < 1.0 - 1e-3);
    }

    #[test]
    fn superoperator_agrees_with_direct_evolution() {
        let s = x_schedule(0.2);
        let noise = NoiseModel::ramsey_dephasing();
        let sup = superoperator(&s, &noise, 1024).unwrap();
        let rho = QuantumState::new(vec![c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)])
            .unwrap()
            .to_density();
        let direct = evolve_master_equation(&s, &noise, rho.entries(), 1024).unwrap();
        let via = GateChannel::Superoperator(sup).apply(rho.entries());
        assert!(max_abs_diff(&direct, &via) < 1e-13);
    }

    #[test]
    fn channel_fidelity_matches_unitary_formula() {
        let s = x_schedule(0.2);
        let u = propagate_unitary(&s, 0.15, DEFAULT_STEPS)
            .unwrap()
            .propagator;
        let direct =
            crate::linalg::average_gate_fidelity(&crate::linalg::qubit_block(&u), &pauli_x());
        let via = channel_average_fidelity(&GateChannel::Unitary(u), &pauli_x());
        assert!((direct - via).abs() < 1e-14);
        let dep = GateChannel::Depolarized {
            unitary: embed_qubit(&pauli_x()),
            d: 0.1,
        };
        assert!((channel_average_fidelity(&dep, &pauli_x()) - 0.95).abs() < 1e-14);
    }

    #[test]
    fn depolarized_channel_mixes_qubit_block() {
        let ch = GateChannel::Depolarized {
            unitary: identity(3),
            d: 1.0,
        };
        let rho = QuantumState::basis(3, 0).to_density();
        let out = ch.apply(rho.entries());
        assert!((out[(0, 0)].re - 0.5).abs() < 1e-15 && (out[(1, 1)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn noise_validation() {
        assert!(NoiseModel::amplitude_error(0.6).validate().is_err());
        assert!(NoiseModel {
            gamma_1a: -1.0,
            ..NoiseModel::ideal()
        }
        .validate()
        .is_err());
        assert!(NoiseModel {
            prep_error: 1.5,
            ..NoiseModel::ideal()
        }
        .validate()
        .is_err());
        assert!(NoiseModel::ramsey_dephasing().validate().is_ok());
    }
}

//! Simulated state preparation and readout, state tomography, and
//! maximum-likelihood process tomography of qubit channels.
//!
//! The Choi matrix uses the ordering input ⊗ output:
//! S = Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|), so that p = Tr[S (ρᵀ ⊗ Π)].

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::engine::{GateChannel, NoiseModel};
use crate::error::{Error, Result};
use crate::linalg::{
    c, embed_qubit, hermitian_eigen, hermitian_map, hermiticity_deviation, identity, pauli_basis,
    pauli_x, pauli_y, pauli_z, rotation, Axis, ComplexMatrix, DensityMatrix, QuantumState,
};

pub const N_PREPARATIONS: usize = 6;
pub const DEFAULT_SHOTS: u64 = 10_000;
pub const MAX_ITERATIONS: usize = 10_000;
/// Stop once the per-shot log-likelihood improves by less than this.
pub const LL_TOLERANCE: f64 = 1e-10;
/// Weight of the completely depolarizing channel mixed into the starting point.
const INITIAL_MIXING: f64 = 1e-4;
const PROB_FLOOR: f64 = 1e-300;

/// Rotation taking |0⟩ to the given input state.
pub fn preparation_rotation(label: usize) -> Result<ComplexMatrix> {
    Ok(match label {
        0 => identity(2),
        1 => rotation(Axis::X, PI),
        2 => rotation(Axis::Y, PI / 2.0),
        3 => rotation(Axis::Y, -PI / 2.0),
        4 => rotation(Axis::X, -PI / 2.0),
        5 => rotation(Axis::X, PI / 2.0),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "preparation label {label} is not in 0..6"
            )))
        }
    })
}

/// |0⟩, |1⟩, |+⟩, |−⟩, |+i⟩, |−i⟩ for labels 0..5.
pub fn prepare_input(label: usize) -> Result<QuantumState> {
    QuantumState::basis(2, 0).evolve(&preparation_rotation(label)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MeasurementBasis {
    Z,
    X,
    Y,
}

impl MeasurementBasis {
    pub const ALL: [MeasurementBasis; 3] = [
        MeasurementBasis::Z,
        MeasurementBasis::X,
        MeasurementBasis::Y,
    ];

    /// Rotation applied before the dark/bright readout; the +1 eigenstate ends in |0⟩.
    pub fn pre_rotation(self) -> ComplexMatrix {
        match self {
            MeasurementBasis::Z => identity(2),
            MeasurementBasis::X => rotation(Axis::Y, -PI / 2.0),
            MeasurementBasis::Y => rotation(Axis::X, PI / 2.0),
        }
    }

    pub fn pauli(self) -> ComplexMatrix {
        match self {
            MeasurementBasis::Z => pauli_z(),
            MeasurementBasis::X => pauli_x(),
            MeasurementBasis::Y => pauli_y(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MeasurementBasis::Z => "z",
            MeasurementBasis::X => "x",
            MeasurementBasis::Y => "y",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for MeasurementBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "z" | "Z" => Ok(MeasurementBasis::Z),
            "x" | "X" => Ok(MeasurementBasis::X),
            "y" | "Y" => Ok(MeasurementBasis::Y),
            other => Err(Error::InvalidArgument(format!("unknown basis `{other}`"))),
        }
    }
}

/// Outcome counts for one (preparation, basis) setting. In analytic mode
/// `shots` is 1 and `bright` is the exact bright probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountsRecord {
    pub prep: usize,
    pub basis: MeasurementBasis,
    pub shots: f64,
    pub bright: f64,
}

impl CountsRecord {
    pub fn bright_fraction(&self) -> f64 {
        self.bright / self.shots
    }

    fn validate(&self) -> Result<()> {
        if self.prep >= N_PREPARATIONS {
            return Err(Error::InvalidArgument(format!("preparation {}", self.prep)));
        }
        if !(self.shots > 0.0 && self.bright >= 0.0 && self.bright <= self.shots) {
            return Err(Error::InvalidArgument(format!(
                "counts require 0 ≤ bright ≤ shots and shots > 0, got {}/{}",
                self.bright, self.shots
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    /// Exact probabilities, no sampling.
    Analytic,
    Finite(u64),
}

/// Density matrix actually prepared, including the preparation error.
fn prepared_state(label: usize, noise: &NoiseModel) -> Result<ComplexMatrix> {
    let r = embed_qubit(&preparation_rotation(label)?);
    let zero = QuantumState::basis(3, 0).to_density().into_entries();
    let one = QuantumState::basis(3, 1).to_density().into_entries();
    let mixed = zero * c(1.0 - noise.prep_error, 0.0) + one * c(noise.prep_error, 0.0);
    Ok(&r * mixed * r.adjoint())
}

/// Observed bright probability for an output state measured in `basis`.
fn bright_probability(rho: &ComplexMatrix, basis: MeasurementBasis, noise: &NoiseModel) -> f64 {
    let m = embed_qubit(&basis.pre_rotation());
    let rotated = &m * rho * m.adjoint();
    let p_bright = (1.0 - rotated[(0, 0)].re).clamp(0.0, 1.0);
    let observed = p_bright * (1.0 - noise.detection_error_bright)
        + (1.0 - p_bright) * noise.detection_error_dark;
    observed.clamp(0.0, 1.0)
}

/// Counts for all 18 settings. Each setting samples from its own ChaCha stream.
pub fn simulate_counts(
    channel: &GateChannel,
    noise: &NoiseModel,
    shots: Shots,
    seed: u64,
) -> Result<Vec<CountsRecord>> {
    noise.validate()?;
    if shots == Shots::Finite(0) {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let mut records = Vec::with_capacity(18);
    for prep in 0..N_PREPARATIONS {
        let out = channel.apply(&prepared_state(prep, noise)?);
        for basis in MeasurementBasis::ALL {
            let p = bright_probability(&out, basis, noise);
            let (n, bright) = match shots {
                Shots::Analytic => (1.0, p),
                Shots::Finite(n) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream((prep * 3 + basis.index()) as u64);
                    let dist = Binomial::new(n, p)
                        .map_err(|e| Error::InvalidArgument(format!("binomial: {e}")))?;
                    (n as f64, dist.sample(&mut rng) as f64)
                }
            };
            records.push(CountsRecord {
                prep,
                basis,
                shots: n,
                bright,
            });
        }
    }
    Ok(records)
}

pub fn counts_to_csv(records: &[CountsRecord]) -> String {
    let mut out = String::from("prep,basis,shots,bright\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.prep,
            r.basis.as_str(),
            r.shots,
            r.bright
        );
    }
    out
}

pub fn counts_from_csv(text: &str) -> Result<Vec<CountsRecord>> {
    let mut records = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != "prep,basis,shots,bright" {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected header `prep,basis,shots,bright`, got `{line}`"),
                });
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let err = |message: String| Error::Parse {
            line: i + 1,
            message,
        };
        if fields.len() != 4 {
            return Err(err(format!("expected 4 fields, got {}", fields.len())));
        }
        let record = CountsRecord {
            prep: fields[0].parse().map_err(|e| err(format!("prep: {e}")))?,
            basis: fields[1].parse().map_err(|e: Error| err(e.to_string()))?,
            shots: fields[2].parse().map_err(|e| err(format!("shots: {e}")))?,
            bright: fields[3].parse().map_err(|e| err(format!("bright: {e}")))?,
        };
        record.validate().map_err(|e| err(e.to_string()))?;
        records.push(record);
    }
    Ok(records)
}

/// Linear-inversion state estimate from the three bases of one preparation,
/// projected to the nearest physical state.
pub fn state_tomography(records: &[CountsRecord]) -> Result<DensityMatrix> {
    let mut bloch = [None; 3];
    for r in records {
        r.validate()?;
        let slot = &mut bloch[r.basis.index()];
        if slot.is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate {} record",
                r.basis.as_str()
            )));
        }
        *slot = Some(1.0 - 2.0 * r.bright_fraction());
    }
    let mut rho = identity(2) * c(0.5, 0.0);
    for basis in MeasurementBasis::ALL {
        let v = bloch[basis.index()]
            .ok_or_else(|| Error::InvalidArgument(format!("missing {} record", basis.as_str())))?;
        rho += basis.pauli() * c(0.5 * v, 0.0);
    }
    let clipped = hermitian_map(&rho, |x| x.max(0.0));
    let tr = clipped.trace().re;
    DensityMatrix::with_tolerances(clipped * c(1.0 / tr, 0.0), 1e-10, 1e-10)
}

/// Process matrix χ in the basis (I, X, Y, Z): E(ρ) = Σ χ_mn E_m ρ E_n†.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMatrix {
    chi: ComplexMatrix,
}

/// Σ_i |i⟩ ⊗ E|i⟩ as a 4-vector, index 2·input + output.
fn operator_vector(e: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(4, 1, |k, _| e[(k % 2, k / 2)])
}

impl ProcessMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-8;
    pub const POSITIVITY_TOL: f64 = 1e-8;
    pub const TP_TOL: f64 = 1e-6;

    pub fn new(chi: ComplexMatrix) -> Result<Self> {
        if chi.nrows() != 4 || chi.ncols() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                got: chi.nrows(),
            });
        }
        let h = hermiticity_deviation(&chi);
        if h > Self::HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("χ not Hermitian ({h:.3e})")));
        }
        let chi = (&chi + chi.adjoint()) * c(0.5, 0.0);
        let tr = chi.trace().re;
        if (tr - 1.0).abs() > Self::TRACE_TOL {
            return Err(Error::InvalidState(format!("χ trace {tr}")));
        }
        let min = hermitian_eigen(&chi).0[0];
        if min < -Self::POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("χ eigenvalue {min:.3e}")));
        }
        Ok(Self { chi })
    }

    /// χ from a Choi matrix (input ⊗ output), trace-normalized.
    pub fn from_choi(choi: &ComplexMatrix) -> Result<Self> {
        let basis = pauli_basis();
        let vecs: Vec<ComplexMatrix> = basis.iter().map(operator_vector).collect();
        let mut chi = ComplexMatrix::from_fn(4, 4, |m, n| {
            (vecs[m].adjoint() * choi * &vecs[n])[(0, 0)] * 0.25
        });
        let tr = chi.trace().re;
        if tr <= 0.0 {
            return Err(Error::InvalidState("zero process".into()));
        }
        chi *= c(1.0 / tr, 0.0);
        Self::new(chi)
    }

    pub fn from_unitary(v: &ComplexMatrix) -> Result<Self> {
        Self::from_choi(&choi_of_unitary(v))
    }

    /// Qubit-block process of a three-level channel, renormalized if leaky.
    pub fn from_channel(channel: &GateChannel) -> Result<Self> {
        let mut choi = ComplexMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                let mut input = ComplexMatrix::zeros(3, 3);
                input[(i, j)] = c(1.0, 0.0);
                let out = channel.apply(&input);
                for o in 0..2 {
                    for p in 0..2 {
                        choi[(2 * i + o, 2 * j + p)] = out[(o, p)];
                    }
                }
            }
        }
        Self::from_choi(&choi)
    }

    pub fn chi(&self) -> &ComplexMatrix {
        &self.chi
    }

    /// ‖Σ χ_mn E_n†E_m − I‖_F (times 1 for the unnormalized Pauli basis ×2).
    pub fn trace_preservation_deviation(&self) -> f64 {
        let basis = pauli_basis();
        let mut sum = ComplexMatrix::zeros(2, 2);
        for m in 0..4 {
            for n in 0..4 {
                sum += basis[n].adjoint() * &basis[m] * self.chi[(m, n)];
            }
        }
        (sum - identity(2)).norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(&self.chi).0[0]
    }
}

/// |Tr(χ_a χ_b†)|.
pub fn process_fidelity(a: &ProcessMatrix, b: &ProcessMatrix) -> f64 {
    (&a.chi * b.chi.adjoint()).trace().norm()
}

fn choi_of_unitary(v: &ComplexMatrix) -> ComplexMatrix {
    let vec = operator_vector(v);
    &vec * vec.adjoint()
}

fn partial_trace_output(s: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(2, 2, |i, j| s[(2 * i, 2 * j)] + s[(2 * i + 1, 2 * j + 1)])
}

/// Rescale so that Tr_out S = I, keeping S positive.
fn normalize_trace_preserving(s: &ComplexMatrix) -> ComplexMatrix {
    let lambda = partial_trace_output(s);
    let inv_sqrt = hermitian_map(&lambda, |x| 1.0 / x.max(1e-300).sqrt());
    let left = inv_sqrt.kronecker(&identity(2));
    &left * s * &left
}

struct Outcome {
    operator: ComplexMatrix,
    count: f64,
}

/// One term per (record, outcome) with a nonzero count: ρᵀ ⊗ Π and its frequency.
fn outcomes(records: &[CountsRecord]) -> Result<(Vec<Outcome>, f64)> {
    let mut seen = [[false; 3]; N_PREPARATIONS];
    let mut terms = Vec::with_capacity(36);
    let mut total = 0.0;
    for r in records {
        r.validate()?;
        let cell = &mut seen[r.prep][r.basis.index()];
        if *cell {
            return Err(Error::InvalidArgument(format!(
                "duplicate record for preparation {} basis {}",
                r.prep,
                r.basis.as_str()
            )));
        }
        *cell = true;
        let rho = prepare_input(r.prep)?.to_density().into_entries();
        let m = r.basis.pre_rotation();
        let dark = m.adjoint() * QuantumState::basis(2, 0).to_density().entries() * &m;
        let bright = identity(2) - &dark;
        for (projector, count) in [(dark, r.shots - r.bright), (bright, r.bright)] {
            total += count;
            if count > 0.0 {
                terms.push(Outcome {
                    operator: rho.transpose().kronecker(&projector),
                    count,
                });
            }
        }
    }
    if seen.iter().flatten().any(|&s| !s) {
        return Err(Error::InvalidArgument(
            "all 18 preparation/basis settings are required".into(),
        ));
    }
    Ok((terms, total))
}

fn mean_log_likelihood(s: &ComplexMatrix, terms: &[Outcome], total: f64) -> f64 {
    terms
        .iter()
        .map(|o| o.count * (s * &o.operator).trace().re.max(PROB_FLOOR).ln())
        .sum::<f64>()
        / total
}

/// Linear inversion through the Pauli transfer matrix, as a Choi matrix.
fn linear_inversion(records: &[CountsRecord]) -> ComplexMatrix {
    let mut bloch = [[0.0; 3]; N_PREPARATIONS];
    for r in records {
        bloch[r.prep][r.basis.index()] = 1.0 - 2.0 * r.bright_fraction();
    }
    // Input Bloch vectors: ±z (0, 1), ±x (2, 3), ±y (4, 5); components ordered (z, x, y).
    let pairs = [(2, 3), (4, 5), (0, 1)];
    let mut offset = [0.0; 3];
    for v in &bloch {
        for k in 0..3 {
            offset[k] += v[k] / N_PREPARATIONS as f64;
        }
    }
    // transfer[out][in] with out ordered (z, x, y) and in ordered (x, y, z).
    let mut transfer = [[0.0; 3]; 3];
    for (col, &(plus, minus)) in pairs.iter().enumerate() {
        for row in 0..3 {
            transfer[row][col] = 0.5 * (bloch[plus][row] - bloch[minus][row]);
        }
    }
    let out_pauli = [pauli_z(), pauli_x(), pauli_y()];
    let image = |coeffs: [f64; 3]| -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(2, 2);
        for (row, p) in out_pauli.iter().enumerate() {
            m += p * c(coeffs[row], 0.0);
        }
        m
    };
    let e_i = identity(2) + image(offset);
    let column = |k: usize| image([transfer[0][k], transfer[1][k], transfer[2][k]]);
    let (e_x, e_y, e_z) = (column(0), column(1), column(2));
    let half = c(0.5, 0.0);
    // |0⟩⟨0| = (I + Z)/2, |1⟩⟨1| = (I − Z)/2, |0⟩⟨1| = (X + iY)/2, |1⟩⟨0| = (X − iY)/2.
    let e00 = (&e_i + &e_z) * half;
    let e11 = (&e_i - &e_z) * half;
    let e01 = (&e_x + &e_y * c(0.0, 1.0)) * half;
    let e10 = (&e_x - &e_y * c(0.0, 1.0)) * half;
    let blocks = [[e00, e01], [e10, e11]];
    ComplexMatrix::from_fn(4, 4, |r, col| blocks[r / 2][col / 2][(r % 2, col % 2)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleResult {
    pub process: ProcessMatrix,
    pub choi: ComplexMatrix,
    /// Log-likelihood per shot at the returned estimate.
    pub log_likelihood: f64,
    /// Log-likelihood per shot at the projected linear-inversion start.
    pub initial_log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Fixed-point maximum-likelihood ascent on the Choi matrix, projected back to
/// trace preservation every iteration.
pub fn mle_process(records: &[CountsRecord]) -> Result<MleResult> {
    let (terms, total) = outcomes(records)?;
    let start = {
        let lin = linear_inversion(records);
        let psd = hermitian_map(&lin, |x| x.max(0.0));
        let mixed = psd * c(1.0 - INITIAL_MIXING, 0.0) + identity(4) * c(0.5 * INITIAL_MIXING, 0.0);
        normalize_trace_preserving(&mixed)
    };
    let initial_log_likelihood = mean_log_likelihood(&start, &terms, total);
    let mut s = start.clone();
    let mut ll = initial_log_likelihood;
    let mut best = (s.clone(), ll);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut k = ComplexMatrix::zeros(4, 4);
        for o in &terms {
            let p = (&s * &o.operator).trace().re.max(PROB_FLOOR);
            k += &o.operator * c(o.count / p, 0.0);
        }
        let next = normalize_trace_preserving(&(&k * &s * &k));
        let next = (&next + next.adjoint()) * c(0.5, 0.0);
        let next_ll = mean_log_likelihood(&next, &terms, total);
        let improvement = next_ll - ll;
        s = next;
        ll = next_ll;
        if ll > best.1 {
            best = (s.clone(), ll);
        }
        if improvement.abs() < LL_TOLERANCE {
            converged = true;
            break;
        }
    }
    let (choi, log_likelihood) = best;
    Ok(MleResult {
        process: ProcessMatrix::from_choi(&choi)?,
        choi,
        log_likelihood,
        initial_log_likelihood,
        iterations,
        converged,
    })
}

//! Reference and interleaved randomized benchmarking.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{gate_channel, GateChannel, NoiseModel, DEFAULT_STEPS};
use crate::error::{Error, Result};
use crate::gates::{axis_angle, clifford_table, find_clifford, Rotation};
use crate::linalg::{c, embed_qubit, identity, ComplexMatrix, QuantumState};
use crate::paths::Scheme;
use crate::pulses::{synthesize, DEFAULT_OMEGA_MAX, DEFAULT_SAMPLES};

pub const DEFAULT_LENGTHS: [usize; 8] = [1, 2, 4, 8, 12, 16, 24, 32];
pub const DEFAULT_SEQUENCES: usize = 20;
const FIT_MAX_ITERATIONS: usize = 1000;

/// How each gate of a sequence acts on the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum GateModel {
    /// Synthesize the pulse and propagate it under the noise model.
    Pulse,
    /// Exact target followed by qubit depolarizing with probability `d`.
    Depolarizing { d: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbConfig {
    pub lengths: Vec<usize>,
    pub sequences: usize,
    /// `None` uses the exact survival probability of each sequence.
    pub shots: Option<u64>,
    pub seed: u64,
    pub interleaved: Option<Rotation>,
    pub noise: NoiseModel,
    pub eta: f64,
    pub scheme: Scheme,
    pub omega_max: f64,
    pub n_samples: usize,
    pub steps: usize,
    pub model: GateModel,
}

impl Default for RbConfig {
    fn default() -> Self {
        Self {
            lengths: DEFAULT_LENGTHS.to_vec(),
            sequences: DEFAULT_SEQUENCES,
            shots: None,
            seed: 0,
            interleaved: None,
            noise: NoiseModel::ideal(),
            eta: 0.0,
            scheme: Scheme::Holonomic,
            omega_max: DEFAULT_OMEGA_MAX,
            n_samples: DEFAULT_SAMPLES,
            steps: DEFAULT_STEPS,
            model: GateModel::Pulse,
        }
    }
}

impl RbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() || self.lengths.contains(&0) {
            return Err(Error::InvalidArgument(
                "lengths must be nonempty and ≥ 1".into(),
            ));
        }
        if self.lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("lengths must be increasing".into()));
        }
        if self.lengths.len() < 3 {
            return Err(Error::InvalidArgument(
                "at least 3 lengths are needed for the fit".into(),
            ));
        }
        if self.sequences < 2 {
            return Err(Error::InvalidArgument("sequences must be ≥ 2".into()));
        }
        if self.shots == Some(0) {
            return Err(Error::InvalidArgument("shots must be ≥ 1".into()));
        }
        if let GateModel::Depolarizing { d } = self.model {
            if !(0.0..=1.0).contains(&d) {
                return Err(crate::error::out_of_range("d", d, "[0, 1]"));
            }
        }
        self.noise.validate()
    }
}

/// Random Clifford indices, the gates actually applied (with interleaves),
/// and the recovery rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct RbSequence {
    pub cliffords: Vec<usize>,
    pub gates: Vec<Rotation>,
    pub recovery: Rotation,
}

/// Independent stream for sequence `index` of length `m`.
pub fn sequence_rng(seed: u64, m: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((m as u64) << 32) | index as u64);
    rng
}

pub fn build_sequence(
    m: usize,
    rng: &mut impl Rng,
    interleaved: Option<Rotation>,
) -> Result<RbSequence> {
    if m == 0 {
        return Err(Error::InvalidArgument("sequence length must be ≥ 1".into()));
    }
    let table = clifford_table();
    let cliffords: Vec<usize> = (0..m).map(|_| rng.random_range(0..table.len())).collect();
    let gates = sequence_gates(&cliffords, interleaved);
    let recovery = recovery_for(&gates)?;
    Ok(RbSequence {
        cliffords,
        gates,
        recovery,
    })
}

/// Sequence with explicit Clifford choices.
pub fn sequence_from_cliffords(
    cliffords: &[usize],
    interleaved: Option<Rotation>,
) -> Result<RbSequence> {
    if cliffords.iter().any(|&i| i >= clifford_table().len()) {
        return Err(Error::InvalidArgument("Clifford index out of range".into()));
    }
    let gates = sequence_gates(cliffords, interleaved);
    let recovery = recovery_for(&gates)?;
    Ok(RbSequence {
        cliffords: cliffords.to_vec(),
        gates,
        recovery,
    })
}

fn sequence_gates(cliffords: &[usize], interleaved: Option<Rotation>) -> Vec<Rotation> {
    let table = clifford_table();
    let mut gates = Vec::with_capacity(cliffords.len() * 2);
    for &i in cliffords {
        gates.push(table[i].rotation);
        if let Some(g) = interleaved {
            gates.push(g);
        }
    }
    gates
}

fn recovery_for(gates: &[Rotation]) -> Result<Rotation> {
    let mut total = identity(2);
    for g in gates {
        total = g.unitary() * total;
    }
    axis_angle(&total.adjoint())
}

/// Net ideal action of a sequence including recovery.
pub fn ideal_product(seq: &RbSequence) -> ComplexMatrix {
    let mut total = identity(2);
    for g in seq.gates.iter().chain(std::iter::once(&seq.recovery)) {
        total = g.unitary() * total;
    }
    total
}

/// Key for caching channels of rotations that are not in the Clifford table.
fn rotation_key(r: &Rotation) -> [u64; 3] {
    [r.theta.to_bits(), r.phi.to_bits(), r.gamma.to_bits()]
}

struct ChannelCache<'a> {
    config: &'a RbConfig,
    cliffords: Vec<GateChannel>,
    interleaved: Option<GateChannel>,
}

impl<'a> ChannelCache<'a> {
    fn build(config: &'a RbConfig) -> Result<Self> {
        let cliffords = clifford_table()
            .par_iter()
            .map(|e| channel_for(config, &e.rotation))
            .collect::<Result<Vec<_>>>()?;
        let interleaved = config
            .interleaved
            .map(|r| channel_for(config, &r))
            .transpose()?;
        Ok(Self {
            config,
            cliffords,
            interleaved,
        })
    }

    fn lookup(
        &self,
        r: &Rotation,
        extra: &mut HashMap<[u64; 3], GateChannel>,
    ) -> Result<GateChannel> {
        if let Some(i) = find_clifford(&r.unitary()) {
            return Ok(self.cliffords[i].clone());
        }
        if let (Some(g), Some(ch)) = (self.config.interleaved, &self.interleaved) {
            if rotation_key(&g) == rotation_key(r) {
                return Ok(ch.clone());
            }
        }
        if let Some(ch) = extra.get(&rotation_key(r)) {
            return Ok(ch.clone());
        }
        let ch = channel_for(self.config, r)?;
        extra.insert(rotation_key(r), ch.clone());
        Ok(ch)
    }
}

fn channel_for(config: &RbConfig, r: &Rotation) -> Result<GateChannel> {
    match config.model {
        GateModel::Depolarizing { d } => Ok(GateChannel::Depolarized {
            unitary: embed_qubit(&r.unitary()),
            d,
        }),
        GateModel::Pulse => {
            let spec = r.spec(config.scheme, config.eta)?;
            let schedule = synthesize(&spec, config.omega_max, config.n_samples)?;
            gate_channel(&schedule, &config.noise, config.steps)
        }
    }
}

fn initial_state(noise: &NoiseModel) -> ComplexMatrix {
    let zero = QuantumState::basis(3, 0).to_density().into_entries();
    let one = QuantumState::basis(3, 1).to_density().into_entries();
    zero * c(1.0 - noise.prep_error, 0.0) + one * c(noise.prep_error, 0.0)
}

fn sequence_survival(cache: &ChannelCache, seq: &RbSequence, rng: &mut impl Rng) -> Result<f64> {
    let config = cache.config;
    let mut extra = HashMap::new();
    let mut rho = initial_state(&config.noise);
    let mut k = 0;
    for &i in &seq.cliffords {
        rho = cache.cliffords[i].apply(&rho);
        k += 1;
        if config.interleaved.is_some() {
            rho = cache
                .interleaved
                .as_ref()
                .expect("built with config")
                .apply(&rho);
            k += 1;
        }
    }
    debug_assert_eq!(k, seq.gates.len());
    rho = cache.lookup(&seq.recovery, &mut extra)?.apply(&rho);
    let p0 = rho[(0, 0)].re.clamp(0.0, 1.0);
    let noise = &config.noise;
    let p = (p0 * (1.0 - noise.detection_error_dark) + (1.0 - p0) * noise.detection_error_bright)
        .clamp(0.0, 1.0);
    match config.shots {
        None => Ok(p),
        Some(n) => {
            let dist = Binomial::new(n, p)
                .map_err(|e| Error::InvalidArgument(format!("binomial: {e}")))?;
            Ok(dist.sample(rng) as f64 / n as f64)
        }
    }
}

/// Parameters of F = A·pᵐ + B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub a: f64,
    pub p: f64,
    pub b: f64,
    /// Covariance of (A, p, B); `None` when the normal matrix is singular.
    pub covariance: Option<[[f64; 3]; 3]>,
    pub iterations: usize,
}

fn residuals(params: &Vector3<f64>, m: &[f64], y: &[f64]) -> Vec<f64> {
    m.iter()
        .zip(y)
        .map(|(&mi, &yi)| params[0] * params[1].powf(mi) + params[2] - yi)
        .collect()
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn clamp_params(v: Vector3<f64>) -> Vector3<f64> {
    Vector3::new(
        v[0],
        v[1].clamp(f64::MIN_POSITIVE, 1.0),
        v[2].clamp(0.0, 1.0),
    )
}

/// Levenberg–Marquardt fit of F = A·pᵐ + B, started from a log-linear estimate
/// with the asymptote B fixed at 1/2.
pub fn fit_decay(lengths: &[usize], survival: &[f64]) -> Result<DecayFit> {
    if lengths.len() != survival.len() || lengths.len() < 3 {
        return Err(Error::FitFailed("need at least 3 points".into()));
    }
    let m: Vec<f64> = lengths.iter().map(|&x| x as f64).collect();
    let b0 = 0.5_f64.clamp(0.0, 1.0);
    let (mut sx, mut sy, mut sxx, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in m.iter().zip(survival) {
        let d = y - b0;
        if d > 1e-12 {
            let ly = d.ln();
            sx += x;
            sy += ly;
            sxx += x * x;
            sxy += x * ly;
            n += 1.0;
        }
    }
    let (a0, p0) = if n >= 2.0 && (n * sxx - sx * sx).abs() > 0.0 {
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;
        (intercept.exp(), slope.exp().min(1.0))
    } else {
        (0.5, 0.9)
    };
    let mut params = clamp_params(Vector3::new(a0, p0, b0));
    let mut r = residuals(&params, &m, survival);
    let mut cost = sum_sq(&r);
    let mut lambda: f64 = 1e-3;
    let mut iterations = 0;
    let jacobian = |p: &Vector3<f64>| -> Vec<[f64; 3]> {
        m.iter()
            .map(|&mi| {
                let pm = p[1].powf(mi);
                let dp = if mi == 0.0 {
                    0.0
                } else {
                    p[0] * mi * p[1].powf(mi - 1.0)
                };
                [pm, dp, 1.0]
            })
            .collect()
    };
    while iterations < FIT_MAX_ITERATIONS {
        iterations += 1;
        let j = jacobian(&params);
        let mut jtj = Matrix3::<f64>::zeros();
        let mut jtr = Vector3::<f64>::zeros();
        for (row, &ri) in j.iter().zip(&r) {
            for a in 0..3 {
                jtr[a] += row[a] * ri;
                for b in 0..3 {
                    jtj[(a, b)] += row[a] * row[b];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut damped = jtj;
            for a in 0..3 {
                damped[(a, a)] += lambda * jtj[(a, a)].max(1e-12);
            }
            let step = match damped.lu().solve(&(-jtr)) {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial = clamp_params(params + step);
            let trial_r = residuals(&trial, &m, survival);
            let trial_cost = sum_sq(&trial_r);
            if trial_cost <= cost {
                let change = (trial - params).norm();
                params = trial;
                r = trial_r;
                let old = cost;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-15);
                improved = true;
                if change <= 1e-12 * (params.norm() + 1e-12) || old - cost <= 1e-14 * old {
                    return finish(params, &jacobian, cost, m.len(), iterations);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            return finish(params, &jacobian, cost, m.len(), iterations);
        }
    }
    Err(Error::FitFailed(format!(
        "no convergence after {FIT_MAX_ITERATIONS} iterations"
    )))
}

fn finish(
    params: Vector3<f64>,
    jacobian: &dyn Fn(&Vector3<f64>) -> Vec<[f64; 3]>,
    cost: f64,
    n_points: usize,
    iterations: usize,
) -> Result<DecayFit> {
    if !params.iter().all(|x| x.is_finite()) {
        return Err(Error::FitFailed("non-finite parameters".into()));
    }
    if !(params[1] > 0.0 && params[1] <= 1.0) {
        return Err(Error::FitFailed(format!(
            "p = {} outside (0, 1]",
            params[1]
        )));
    }
    let j = jacobian(&params);
    let mut jtj = Matrix3::<f64>::zeros();
    for row in &j {
        for a in 0..3 {
            for b in 0..3 {
                jtj[(a, b)] += row[a] * row[b];
            }
        }
    }
    let dof = n_points.saturating_sub(3).max(1) as f64;
    let covariance = jtj
        .try_inverse()
        .filter(|inv| inv.iter().all(|x| x.is_finite()) && (0..3).all(|a| inv[(a, a)] >= 0.0))
        .map(|inv| {
            let s2 = cost / dof;
            let mut out = [[0.0; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    out[a][b] = inv[(a, b)] * s2;
                }
            }
            out
        });
    Ok(DecayFit {
        a: params[0],
        p: params[1],
        b: params[2],
        covariance,
        iterations,
    })
}

/// F_ave = 1 − (1 − p)/2.
pub fn average_fidelity(p: f64) -> f64 {
    1.0 - (1.0 - p) / 2.0
}

/// F_gate = 1 − (1 − p_gate/p_ref)/2.
pub fn interleaved_gate_fidelity(p_ref: f64, p_gate: f64) -> f64 {
    1.0 - (1.0 - p_gate / p_ref) / 2.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbCurve {
    pub lengths: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub n_sequences: usize,
    pub fit: DecayFit,
    /// 1 − (1 − p)/2 of this curve.
    pub fidelity: f64,
    pub interleaved: Option<Rotation>,
}

/// Mean survival over random sequences for every length, then the decay fit.
pub fn run_rb(config: &RbConfig) -> Result<RbCurve> {
    config.validate()?;
    let cache = ChannelCache::build(config)?;
    let jobs: Vec<(usize, usize)> = config
        .lengths
        .iter()
        .flat_map(|&m| (0..config.sequences).map(move |i| (m, i)))
        .collect();
    let survival = jobs
        .par_iter()
        .map(|&(m, i)| {
            let mut rng = sequence_rng(config.seed, m, i);
            let seq = build_sequence(m, &mut rng, config.interleaved)?;
            sequence_survival(&cache, &seq, &mut rng)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = config.sequences;
    let mut mean = Vec::with_capacity(config.lengths.len());
    let mut std = Vec::with_capacity(config.lengths.len());
    for chunk in survival.chunks(n) {
        let mu = chunk.iter().sum::<f64>() / n as f64;
        let var = chunk.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1) as f64;
        mean.push(mu);
        std.push(var.sqrt());
    }
    let fit = fit_decay(&config.lengths, &mean)?;
    Ok(RbCurve {
        lengths: config.lengths.clone(),
        mean,
        std,
        n_sequences: n,
        fidelity: average_fidelity(fit.p),
        fit,
        interleaved: config.interleaved,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterleavedResult {
    pub reference: RbCurve,
    pub interleaved: RbCurve,
    pub gate_fidelity: f64,
    /// The interleaved gate is not a Clifford, so the decay model is approximate.
    pub approximate: bool,
}

/// Reference and interleaved runs with the same seed and noise.
pub fn run_interleaved(config: &RbConfig, gate: Rotation) -> Result<InterleavedResult> {
    let reference = run_rb(&RbConfig {
        interleaved: None,
        ..config.clone()
    })?;
    let interleaved = run_rb(&RbConfig {
        interleaved: Some(gate),
        ..config.clone()
    })?;
    Ok(InterleavedResult {
        gate_fidelity: interleaved_gate_fidelity(reference.fit.p, interleaved.fit.p),
        approximate: find_clifford(&gate.unitary()).is_none(),
        reference,
        interleaved,
    })
}

impl RbCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,mean_fidelity,std,n_sequences\n");
        for ((m, mu), s) in self.lengths.iter().zip(&self.mean).zip(&self.std) {
            let _ = writeln!(out, "{m},{mu:.12e},{s:.12e},{}", self.n_sequences);
        }
        out
    }

    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            #[serde(rename = "A")]
            a: f64,
            p: f64,
            #[serde(rename = "B")]
            b: f64,
            covariance: &'a Option<[[f64; 3]; 3]>,
            #[serde(rename = "F_ave")]
            f_ave: f64,
        }
        serde_json::to_string_pretty(&Summary {
            a: self.fit.a,
            p: self.fit.p,
            b: self.fit.b,
            covariance: &self.fit.covariance,
            f_ave: self.fidelity,
        })
        .expect("plain numbers serialize")
    }
}

impl InterleavedResult {
    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary {
            p_ref: f64,
            p_gate: f64,
            #[serde(rename = "F_ave")]
            f_ave: f64,
            #[serde(rename = "F_gate")]
            f_gate: f64,
            approximate: bool,
        }
        serde_json::to_string_pretty(&Summary {
            p_ref: self.reference.fit.p,
            p_gate: self.interleaved.fit.p,
            f_ave: self.reference.fidelity,
            f_gate: self.gate_fidelity,
            approximate: self.approximate,
        })
        .expect("plain numbers serialize")
    }
}

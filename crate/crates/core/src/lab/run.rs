use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind, RbModel, SchemeEntry, SweepMode};
use crate::engine::{channel_average_fidelity, gate_channel, propagate_unitary, NoiseModel};
use crate::error::{Error, Result};
use crate::gates::{target_unitary, NamedGate, Rotation};
use crate::linalg::{fidelity_qubit_subspace, leakage};
use crate::paths::Scheme;
use crate::pulses::{fmt_f64, synthesize, GateSpec, ToneDescriptorFile};
use crate::rb::{run_interleaved, run_rb, GateModel, RbConfig};
use crate::sideband::{synthesize_cphase, verify_full_model_with};
use crate::tomo::{
    counts_to_csv, mle_process, process_fidelity, simulate_counts, ProcessMatrix, Shots,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Files written by a run, and any flagged non-convergence.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub flagged: Vec<String>,
}

/// `## `-prefixed provenance block: artifact version, experiment and the resolved config.
pub fn provenance_header(kind: ExperimentKind, config: &ExperimentConfig) -> String {
    let mut out = format!("## nhqc {VERSION}\n## experiment = {}\n", kind.as_str());
    for line in config.to_toml().lines() {
        if line.is_empty() {
            out.push_str("##\n");
        } else {
            let _ = writeln!(out, "## {line}");
        }
    }
    out
}

struct Writer<'a> {
    dir: &'a Path,
    header: String,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn write(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, format!("{}{body}", self.header))?;
        self.files.push(path);
        Ok(())
    }
}

/// Dispatch one experiment and write its outputs plus `manifest.txt`.
pub fn run_named_experiment(kind: ExperimentKind, config: &ExperimentConfig) -> Result<RunOutput> {
    if let Some(k) = config.kind {
        if k != kind {
            return Err(Error::Config {
                field: "kind".into(),
                message: format!("config is for `{}`, not `{}`", k.as_str(), kind.as_str()),
            });
        }
    }
    config.validate()?;
    std::fs::create_dir_all(&config.output)?;
    let mut w = Writer {
        dir: &config.output,
        header: provenance_header(kind, config),
        files: Vec::new(),
    };
    let mut flagged = Vec::new();
    match kind {
        ExperimentKind::Synth => run_synth(config, &mut w)?,
        ExperimentKind::Propagate => run_propagate(config, &mut w)?,
        ExperimentKind::Qpt => run_qpt(config, &mut w, &mut flagged)?,
        ExperimentKind::Rb => run_rb_experiment(config, &mut w)?,
        ExperimentKind::Sweep => {
            for table in run_sweep(config)? {
                w.write(&format!("sweep_{}.csv", table.gate), &table.to_csv())?;
            }
        }
        ExperimentKind::Sideband => run_sideband(config, &mut w, &mut flagged)?,
        ExperimentKind::ExportAwg => {
            let schedule = synthesize(&config.gate.spec()?, config.omega_max, config.n_samples)?;
            let text = ToneDescriptorFile::from_schedule(&schedule)?.to_text();
            w.write("tones.csv", &text)?;
        }
    }
    let mut manifest = String::from("file\n");
    for f in &w.files {
        let name = f.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let _ = writeln!(manifest, "{name}");
    }
    for note in &flagged {
        let _ = writeln!(manifest, "## flagged: {note}");
    }
    w.write("manifest.txt", &manifest)?;
    Ok(RunOutput {
        files: w.files,
        flagged,
    })
}

fn run_synth(config: &ExperimentConfig, w: &mut Writer) -> Result<()> {
    let spec = config.gate.spec()?;
    let s = synthesize(&spec, config.omega_max, config.n_samples)?;
    let body = format!(
        "theta_rad,phi_rad,gamma_rad,eta,scheme,omega_max_rad_s,duration_s,n_samples,sampled_peak_rad_s\n{},{},{},{},{},{},{},{},{}\n",
        fmt_f64(spec.theta),
        fmt_f64(spec.phi),
        fmt_f64(spec.gamma),
        fmt_f64(spec.eta),
        spec.scheme.as_str(),
        fmt_f64(s.omega_max),
        fmt_f64(s.duration),
        config.n_samples,
        fmt_f64(s.sampled_peak()),
    );
    w.write("synth.csv", &body)
}

fn run_propagate(config: &ExperimentConfig, w: &mut Writer) -> Result<()> {
    let spec = config.gate.spec()?;
    let s = synthesize(&spec, config.omega_max, config.n_samples)?;
    let target = target_unitary(&spec);
    let mut summary =
        String::from("epsilon,average_fidelity,subspace_fidelity,leakage,error_estimate\n");
    if config.noise.is_closed() {
        let r = propagate_unitary(&s, config.noise.epsilon, config.steps)?;
        let u = &r.propagator;
        let mut body = String::from("row,col,re,im\n");
        for i in 0..3 {
            for j in 0..3 {
                let _ = writeln!(
                    body,
                    "{i},{j},{},{}",
                    fmt_f64(u[(i, j)].re),
                    fmt_f64(u[(i, j)].im)
                );
            }
        }
        w.write("propagator.csv", &body)?;
        let avg =
            channel_average_fidelity(&crate::engine::GateChannel::Unitary(u.clone()), &target);
        let _ = writeln!(
            summary,
            "{},{},{},{},{}",
            fmt_f64(config.noise.epsilon),
            fmt_f64(avg),
            fmt_f64(fidelity_qubit_subspace(u, &target)?),
            fmt_f64(leakage(u)?),
            fmt_f64(r.error_estimate)
        );
    } else {
        let ch = gate_channel(&s, &config.noise, config.steps)?;
        let _ = writeln!(
            summary,
            "{},{},,,",
            fmt_f64(config.noise.epsilon),
            fmt_f64(channel_average_fidelity(&ch, &target))
        );
    }
    w.write("propagate_summary.csv", &summary)
}

fn run_qpt(config: &ExperimentConfig, w: &mut Writer, flagged: &mut Vec<String>) -> Result<()> {
    let spec = config.gate.spec()?;
    let s = synthesize(&spec, config.omega_max, config.n_samples)?;
    let channel = gate_channel(&s, &config.noise, config.steps)?;
    let shots = if config.qpt.analytic {
        Shots::Analytic
    } else {
        Shots::Finite(config.qpt.shots)
    };
    let records = simulate_counts(&channel, &config.noise, shots, config.seed)?;
    w.write("counts.csv", &counts_to_csv(&records))?;
    let est = mle_process(&records)?;
    let ideal = ProcessMatrix::from_unitary(&target_unitary(&spec))?;
    let mut chi = String::from("m,n,re,im\n");
    for m in 0..4 {
        for n in 0..4 {
            let z = est.process.chi()[(m, n)];
            let _ = writeln!(chi, "{m},{n},{},{}", fmt_f64(z.re), fmt_f64(z.im));
        }
    }
    w.write("chi.csv", &chi)?;
    if !est.converged {
        flagged.push(format!(
            "qpt MLE stopped after {} iterations",
            est.iterations
        ));
    }
    let summary = format!(
        "gate,f_att,log_likelihood,iterations,converged\n{},{},{},{},{}\n",
        config.gate.label(),
        fmt_f64(process_fidelity(&est.process, &ideal)),
        fmt_f64(est.log_likelihood),
        est.iterations,
        est.converged
    );
    w.write("qpt_summary.csv", &summary)
}

fn rb_config(
    config: &ExperimentConfig,
    noise: NoiseModel,
    scheme: Scheme,
    eta: f64,
    sequences: usize,
) -> RbConfig {
    RbConfig {
        lengths: config.rb.lengths.clone(),
        sequences,
        shots: config.rb.shots,
        seed: config.seed,
        interleaved: None,
        noise,
        eta,
        scheme,
        omega_max: config.omega_max,
        n_samples: config.n_samples,
        steps: config.steps,
        model: match config.rb.model {
            RbModel::Pulse => GateModel::Pulse,
            RbModel::Depolarizing => GateModel::Depolarizing {
                d: config.rb.depolarizing,
            },
        },
    }
}

fn run_rb_experiment(config: &ExperimentConfig, w: &mut Writer) -> Result<()> {
    let rb = rb_config(
        config,
        config.noise,
        config.gate.scheme,
        config.gate.eta,
        config.rb.sequences,
    );
    match &config.rb.interleaved {
        None => {
            let curve = run_rb(&rb)?;
            w.write("rb.csv", &curve.to_csv())?;
            w.write("rb_fit.txt", &format!("{}\n", curve.summary_json()))
        }
        Some(name) => {
            let gate = NamedGate::from_str(name)?.rotation();
            let r = run_interleaved(&rb, gate)?;
            w.write("rb_reference.csv", &r.reference.to_csv())?;
            w.write("rb_interleaved.csv", &r.interleaved.to_csv())?;
            w.write("rb_fit.txt", &format!("{}\n", r.summary_json()))
        }
    }
}

fn run_sideband(
    config: &ExperimentConfig,
    w: &mut Writer,
    flagged: &mut Vec<String>,
) -> Result<()> {
    let sb = &config.sideband;
    let schedule = synthesize_cphase(sb.gamma, sb.omega_tilde_max, sb.eta, config.n_samples)?;
    let report = verify_full_model_with(&schedule, &sb.system, config.steps)?;
    if report.under_truncated {
        flagged.push(format!(
            "sideband truncation change {:.3e} at n_max = {}",
            report.truncation_change, report.n_max
        ));
    }
    let body = format!(
        "## coupling: omega_tilde = 2*eta_ld*omega_r, drive phase = -phi_tilde - pi/2\n{}",
        report.to_csv()
    );
    w.write("sideband.csv", &body)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub scheme: String,
    pub infidelity_mean: f64,
    pub infidelity_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub gate: String,
    pub mode: SweepMode,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mode = match self.mode {
            SweepMode::Direct => "direct",
            SweepMode::Rb => "rb",
        };
        let mut out = format!(
            "## gate = {}\n## mode = {mode}\nepsilon,scheme,infidelity_mean,infidelity_std\n",
            self.gate
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(r.epsilon),
                r.scheme,
                fmt_f64(r.infidelity_mean),
                fmt_f64(r.infidelity_std)
            );
        }
        out
    }

    pub fn infidelity(&self, epsilon: f64, scheme: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && (r.epsilon - epsilon).abs() < 1e-12)
            .map(|r| r.infidelity_mean)
    }
}

fn scheme_spec(rotation: &Rotation, entry: &SchemeEntry) -> Result<GateSpec> {
    rotation.spec(entry.scheme, entry.eta)
}

fn direct_infidelity(
    config: &ExperimentConfig,
    rotation: &Rotation,
    entry: &SchemeEntry,
    eps: f64,
) -> Result<(f64, f64)> {
    let spec = scheme_spec(rotation, entry)?;
    let s = synthesize(&spec, config.omega_max, config.n_samples)?;
    let ch = gate_channel(&s, &config.noise.with_epsilon(eps), config.steps)?;
    Ok((
        1.0 - channel_average_fidelity(&ch, &rotation.unitary()),
        0.0,
    ))
}

fn rb_infidelity(
    config: &ExperimentConfig,
    rotation: &Rotation,
    entry: &SchemeEntry,
    eps: f64,
) -> Result<(f64, f64)> {
    let rb = rb_config(
        config,
        config.noise.with_epsilon(eps),
        entry.scheme,
        entry.eta,
        config.sweep.realizations,
    );
    let r = run_interleaved(&rb, *rotation)?;
    let (p_r, p_g) = (r.reference.fit.p, r.interleaved.fit.p);
    let var = |c: &Option<[[f64; 3]; 3]>| c.map(|m| m[1][1]).unwrap_or(0.0);
    let sigma = 0.5
        * (var(&r.interleaved.fit.covariance) / (p_r * p_r)
            + p_g * p_g * var(&r.reference.fit.covariance) / p_r.powi(4))
        .sqrt();
    Ok((1.0 - r.gate_fidelity, sigma))
}

/// Gate infidelity for every (ε, scheme) pair, one table per gate.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepTable>> {
    config.validate()?;
    let grid = config.sweep.epsilon_grid();
    config
        .sweep
        .gates
        .iter()
        .map(|name| {
            let rotation = NamedGate::from_str(name)?.rotation();
            let jobs: Vec<(f64, &SchemeEntry)> = grid
                .iter()
                .flat_map(|&eps| config.sweep.schemes.iter().map(move |s| (eps, s)))
                .collect();
            let rows = jobs
                .par_iter()
                .map(|&(eps, entry)| {
                    let (mean, std) = match config.sweep.mode {
                        SweepMode::Direct => direct_infidelity(config, &rotation, entry, eps)?,
                        SweepMode::Rb => rb_infidelity(config, &rotation, entry, eps)?,
                    };
                    Ok(SweepRow {
                        epsilon: eps,
                        scheme: entry.label.clone(),
                        infidelity_mean: mean,
                        infidelity_std: std,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepTable {
                gate: name.to_ascii_lowercase(),
                mode: config.sweep.mode,
                rows,
            })
        })
        .collect()
}

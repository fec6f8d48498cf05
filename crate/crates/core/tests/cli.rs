use std::fs;
use std::path::Path;
use std::process::Command;

use nhqc::lab::{run_named_experiment, run_sweep, ExperimentConfig, ExperimentKind, SweepMode};
use nhqc::pulses::ToneDescriptorFile;

const SMALL: &str = "n_samples = 512\nsteps = 1024\n";

fn nhqc(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nhqc"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, format!("{SMALL}{body}")).unwrap();
    path.to_string_lossy().into_owned()
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn qpt_is_byte_identical_for_a_fixed_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[qpt]\nshots = 2000\n");
    let out = tmp.path().join("out");
    let out_s = out.to_str().unwrap();
    let run = || {
        let o = nhqc(
            &["qpt", "--config", &cfg, "--seed", "11", "--out", out_s],
            tmp.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        read_all(&out)
    };
    let first = run();
    assert_eq!(first, run());
    let names: Vec<_> = first.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        ["chi.csv", "counts.csv", "manifest.txt", "qpt_summary.csv"]
    );
    for (_, bytes) in &first {
        let text = String::from_utf8_lossy(bytes);
        assert!(text.starts_with("## nhqc "));
        for key in [
            "## seed = 11",
            "## omega_max = ",
            "## steps = 1024",
            "## eta = ",
        ] {
            assert!(text.contains(key), "missing {key}");
        }
    }
}

#[test]
fn rb_output_does_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[noise]\nepsilon = 0.05\n[rb]\nlengths = [1, 2, 4, 8]\nsequences = 4\nshots = 200\n",
    );
    let out = tmp.path().join("out");
    let run = |threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_nhqc"))
            .args(["rb", "--config", &cfg, "--out", out.to_str().unwrap()])
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        read_all(&out)
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn errors_exit_with_status_one() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "[gate]\nname = \"x\"\nwidth = 3\n");
    let o = nhqc(&["synth", "--config", &bad], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 5"));

    let mismatch = write_config(tmp.path(), "kind = \"rb\"\n");
    let o = nhqc(&["synth", "--config", &mismatch], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kind"));

    let o = nhqc(&["teleport"], tmp.path());
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn exported_tones_parse_back() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::from_toml(SMALL).unwrap();
    config.output = tmp.path().to_path_buf();
    config.gate.name = Some("h".into());
    config.gate.eta = 1.0;
    let out = run_named_experiment(ExperimentKind::ExportAwg, &config).unwrap();
    assert!(out.flagged.is_empty());
    let text = fs::read_to_string(tmp.path().join("tones.csv")).unwrap();
    let parsed = ToneDescriptorFile::parse(&text).unwrap();
    assert_eq!(
        parsed.to_text(),
        text.lines()
            .filter(|l| !l.starts_with("##"))
            .map(|l| format!("{l}\n"))
            .collect::<String>()
    );
}

#[test]
fn direct_sweep_orders_schemes_away_from_zero() {
    let mut config = ExperimentConfig::from_toml(SMALL).unwrap();
    config.sweep.points = 5;
    config.sweep.gates = vec!["x".into()];
    let tables = run_sweep(&config).unwrap();
    assert_eq!(tables.len(), 1);
    let t = &tables[0];
    assert_eq!(t.mode, SweepMode::Direct);
    assert_eq!(t.rows.len(), 5 * 4);
    for eps in [-0.2, -0.1, 0.1, 0.2] {
        let robust = t.infidelity(eps, "rnhqc").unwrap();
        let plain = t.infidelity(eps, "nhqc").unwrap();
        assert!(robust < plain, "ε = {eps}: {robust} vs {plain}");
    }
    for row in t.rows.iter().filter(|r| r.epsilon == 0.0) {
        assert!(row.infidelity_mean.abs() < 1e-8, "{row:?}");
    }
    assert!(t
        .to_csv()
        .contains("epsilon,scheme,infidelity_mean,infidelity_std\n"));
}

#[test]
fn sideband_run_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::from_toml("n_samples = 512\nsteps = 2048\n").unwrap();
    config.output = tmp.path().to_path_buf();
    config.sideband.system.n_max = 3;
    let out = run_named_experiment(ExperimentKind::Sideband, &config).unwrap();
    assert!(out.flagged.is_empty());
    let text = fs::read_to_string(tmp.path().join("sideband.csv")).unwrap();
    assert!(text.contains("n_max,conditional_phase_rad"));
}

use std::path::Path;
use std::process::Command;

const PROGRAM: &str = r#"
#include "nhqc.h"
int main(void) {
    NhqcGateSpec spec = {1.5707963267948966, 0.0, 3.141592653589793, 1.0, NHQC_SCHEME_HOLONOMIC};
    NhqcSchedule *s = NULL;
    NhqcStatus st = nhqc_schedule_synthesize(&spec, 62831.85, 512, &s);
    double f, l;
    if (st == NHQC_STATUS_OK) st = nhqc_gate_fidelity(s, 0.0, 1024, &f, &l);
    nhqc_schedule_free(s);
    return st == NHQC_STATUS_OK ? 0 : (int)st;
}
"#;

#[test]
fn header_declares_the_api() {
    let header =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/nhqc.h"))
            .unwrap();
    for name in [
        "nhqc_version",
        "nhqc_last_error",
        "nhqc_compute_duration",
        "nhqc_schedule_synthesize",
        "nhqc_schedule_read",
        "nhqc_schedule_free",
        "nhqc_schedule_len",
        "nhqc_schedule_duration",
        "nhqc_schedule_copy_samples",
        "nhqc_schedule_export",
        "nhqc_propagate",
        "nhqc_gate_fidelity",
        "nhqc_survival_probability",
        "typedef struct NhqcSchedule NhqcSchedule;",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

#[test]
fn header_compiles_as_c_and_cxx() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = std::env::temp_dir().join(format!("nhqc-header-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let Ok(status) = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg("-I")
            .arg(&include)
            .arg(&src)
            .status()
        else {
            eprintln!("{compiler} not available; skipped");
            continue;
        };
        assert!(status.success(), "{compiler} rejected the header");
    }
    std::fs::remove_dir_all(dir).unwrap();
}

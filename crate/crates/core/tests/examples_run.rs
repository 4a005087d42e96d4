//! Runs every example binary that `cargo test` builds alongside the tests.

use std::path::PathBuf;
use std::process::Command;

const EXAMPLES: [&str; 8] = [
    "steane_code",
    "honest_protocol",
    "anticommutation_values",
    "energy_test",
    "linearity_extraction",
    "swap_isometry",
    "gap_amplification",
    "monte_carlo",
];

fn example_path(name: &str) -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    profile_dir.join("examples").join(format!("{name}{}", std::env::consts::EXE_SUFFIX))
}

#[test]
fn examples_exit_cleanly() {
    for name in EXAMPLES {
        let path = example_path(name);
        assert!(path.exists(), "{} not built", path.display());
        let out = Command::new(&path).output().unwrap();
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stdout.is_empty(), "{name} printed nothing");
    }
}

#[test]
fn swap_example_reports_zero_deviation() {
    let out = Command::new(example_path("swap_isometry")).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("n = 1: pre-normalization norm 1.000000000000"));
    assert!(text.contains("n = 2: pre-normalization norm 1.000000000000"));
}

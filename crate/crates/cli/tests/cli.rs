use std::path::{Path, PathBuf};
use std::process::Command;

use pseudomode_cli::commands::{
    cmd_evolve, cmd_map, cmd_trajectories, cmd_validate, Status, EVOLVE_FILE, EVOLVE_PLOT, MAP_FILE, VALIDATE_FILE,
};
use pseudomode_cli::config::{FockCfg, GeneratorChoice, RunConfig};
use pseudomode_cli::CliError;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn load(name: &str) -> RunConfig {
    RunConfig::load(&config_path(name)).unwrap()
}

fn run_bin(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_pseudomode")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

/// Column `name` of a CSV body, skipping `#` lines.
fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

// Resonant two-level system and one Lorentzian mode, written out directly:
// c(t) = e^{−λt/2}[cosh(dt/2) + (λ/d) sinh(dt/2)], d = √(λ² − 4Ω²), real here.
fn excited_population(omega: f64, lambda: f64, t: f64) -> f64 {
    let d = (lambda * lambda - 4.0 * omega * omega).sqrt();
    let c = (-0.5 * lambda * t).exp() * ((0.5 * d * t).cosh() + lambda / d * (0.5 * d * t).sinh());
    c * c
}

#[test]
fn band_gap_map_reports_the_rotated_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let report = cmd_map(&load("band_gap.toml"), dir.path()).unwrap();
    let reg = report.regularized.as_ref().expect("complex couplings get a rotation section");
    // Γ₁ = W₁λ₂ − W₂λ₁ = 2·1 − 1·2 and Γ₁ + Γ₂ = λ₁ + λ₂.
    assert!(reg.rates[0].abs() <= 1e-12);
    assert!((reg.rates[1] - 3.0).abs() <= 1e-12);
    assert!(reg.couplings[0][0].abs() <= 1e-12);
    assert!((reg.couplings[0][1] - 1.0).abs() <= 1e-12);
    assert!((reg.intermode - 2f64.sqrt()).abs() <= 1e-12);
    assert!(report.positivity.passed());

    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(MAP_FILE)).unwrap()).unwrap();
    assert_eq!(json["classification"], "complex");
    assert_eq!(json["regularized"]["rates"][1].as_f64().unwrap(), reg.rates[1]);
}

#[test]
fn single_lorentzian_map_has_no_rotation_section() {
    let dir = tempfile::tempdir().unwrap();
    let report = cmd_map(&load("lorentzian.toml"), dir.path()).unwrap();
    assert!(report.regularized.is_none());
    let text = report.render();
    assert!(text.contains("classification: all_real"));
    assert!(!text.contains("regularized"));
}

#[test]
fn three_complex_modes_exit_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_path("three_mode.toml");
    let (code, _, stderr) = run_bin(&["map", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(stderr.contains("unsupported-regularization"), "{stderr}");
}

#[test]
fn malformed_config_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[spectral]\ntype = \"lorentzian_sum\"\nterms = []\n[system]\nenergies = [0.0, 1.0]\nomega = 1.0\n").unwrap();
    let (code, _, stderr) = run_bin(&["map", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2, "{stderr}");

    let missing = dir.path().join("absent.toml");
    let (code, _, _) = run_bin(&["evolve", missing.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn unknown_keys_are_rejected() {
    let mut text = std::fs::read_to_string(config_path("lorentzian.toml")).unwrap();
    text = text.replace("omega = 1.0", "omega = 1.0\nomgea = 2.0");
    assert!(matches!(RunConfig::from_toml(&text), Err(CliError::Config(_))));
}

#[test]
fn evolve_matches_the_damped_rabi_population() {
    let dir = tempfile::tempdir().unwrap();
    let summary = cmd_evolve(&load("lorentzian.toml"), dir.path()).unwrap();
    assert_eq!(summary.rows, 101);
    let csv = std::fs::read_to_string(dir.path().join(EVOLVE_FILE)).unwrap();
    assert!(csv.starts_with("t,pe_re,pe_im,sx_re,sx_im,top_fock_pop,trace_err\n"));
    assert!(!csv.contains('\r'));
    let t = column(&csv, "t");
    let pe = column(&csv, "pe_re");
    let worst = t.iter().zip(&pe).map(|(&t, &p)| (p - excited_population(1.0, 4.0, t)).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-6, "max deviation {worst:e}");
    assert!(column(&csv, "trace_err").iter().all(|&e| e < 1e-12));
    assert!(dir.path().join(EVOLVE_PLOT).exists());
}

#[test]
fn values_carry_seventeen_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    cmd_evolve(&load("lorentzian.toml"), dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join(EVOLVE_FILE)).unwrap();
    let row = csv.lines().nth(2).unwrap();
    for field in row.split(',') {
        let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{field}");
    }
}

#[test]
fn zero_final_time_gives_one_row_with_the_initial_values() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = load("lorentzian.toml");
    cfg.run.t_max = 0.0;
    cmd_evolve(&cfg, dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join(EVOLVE_FILE)).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert_eq!(column(&csv, "t"), vec![0.0]);
    assert_eq!(column(&csv, "pe_re"), vec![1.0]);
    assert_eq!(column(&csv, "sx_re"), vec![0.0]);
}

#[test]
fn band_gap_evolve_is_byte_identical_across_runs() {
    let mut cfg = load("band_gap.toml");
    cfg.run.t_max = 5.0;
    cfg.run.n_steps = 50;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    cmd_evolve(&cfg, a.path()).unwrap();
    cmd_evolve(&cfg, b.path()).unwrap();
    let fa = std::fs::read(a.path().join(EVOLVE_FILE)).unwrap();
    let fb = std::fs::read(b.path().join(EVOLVE_FILE)).unwrap();
    assert_eq!(fa, fb);
}

#[test]
fn config_round_trip_reproduces_outputs() {
    let cfg = load("band_gap.toml");
    let reloaded = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
    assert_eq!(cfg, reloaded);

    let mut short = cfg.clone();
    short.run.t_max = 2.0;
    short.run.n_steps = 20;
    let mut short_reloaded = RunConfig::from_toml(&short.to_toml().unwrap()).unwrap();
    short_reloaded.output.path = short.output.path.clone();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    cmd_evolve(&short, a.path()).unwrap();
    cmd_evolve(&short_reloaded, b.path()).unwrap();
    assert_eq!(
        std::fs::read(a.path().join(EVOLVE_FILE)).unwrap(),
        std::fs::read(b.path().join(EVOLVE_FILE)).unwrap()
    );
}

#[test]
fn truncation_abort_keeps_a_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = load("lorentzian.toml");
    cfg.run.fock = FockCfg::Uniform(1);
    let err = cmd_evolve(&cfg, dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 4);
    let csv = std::fs::read_to_string(dir.path().join(EVOLVE_FILE)).unwrap();
    let last = csv.lines().last().unwrap();
    assert!(last.starts_with("# ABORTED"), "{last}");
    assert!(csv.lines().filter(|l| !l.starts_with('#')).count() >= 2);
}

#[test]
fn trajectories_with_the_pathological_generator_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let err = cmd_trajectories(&load("raw_poles.toml"), dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn trajectories_csv_reports_the_seed_and_is_reproducible() {
    let mut cfg = load("lorentzian.toml");
    cfg.run.n_traj = 200;
    cfg.run.n_steps = 20;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let sa = cmd_trajectories(&cfg, a.path()).unwrap();
    cmd_trajectories(&cfg, b.path()).unwrap();
    let fa = std::fs::read_to_string(&sa.csv).unwrap();
    assert_eq!(fa, std::fs::read_to_string(b.path().join("trajectories.csv")).unwrap());
    assert!(fa.starts_with(&format!("# seed = {}\n# n_traj = 200\n", cfg.run.seed)));
    assert!(fa.contains("pe_se_re"));
}

#[test]
fn seed_override_changes_the_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_path("lorentzian.toml");
    let out = dir.path().to_str().unwrap();
    let (code, stdout, stderr) = run_bin(&["trajectories", cfg.to_str().unwrap(), "--seed", "99", "--out", out]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("seed 99"));
    let csv = std::fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
    assert!(csv.starts_with("# seed = 99\n"));
}

#[test]
fn band_gap_validation_passes_every_applicable_check() {
    let dir = tempfile::tempdir().unwrap();
    let report = cmd_validate(&load("band_gap.toml"), dir.path()).unwrap();
    assert!(report.passed, "{}", report.render());
    for name in ["positivity", "correlation", "rotation", "rotated_correlation", "generator_equivalence", "oracle"] {
        let c = report.check(name).unwrap();
        assert_eq!(c.status, Status::Pass, "{name}");
        assert!(c.residual.is_some());
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(VALIDATE_FILE)).unwrap()).unwrap();
    assert_eq!(json["passed"], true);
}

#[test]
fn negative_density_fails_the_positivity_check() {
    let dir = tempfile::tempdir().unwrap();
    let report = cmd_validate(&load("negative_gap.toml"), dir.path()).unwrap();
    assert!(!report.passed);
    let p = report.check("positivity").unwrap();
    assert_eq!(p.status, Status::Fail);
    // D(ξ) = 2(W₁/λ₁ + W₂/λ₂) = 2(1 − 1.25)
    assert!((p.residual.unwrap() - 0.5).abs() < 1e-9);

    let cfg = config_path("negative_gap.toml");
    let (code, stdout, _) = run_bin(&["validate", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stdout.contains("positivity") && stdout.contains("FAIL"));
}

#[test]
fn single_lorentzian_validation_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_path("lorentzian.toml");
    let (code, stdout, stderr) = run_bin(&["validate", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}{stderr}");
    assert!(stdout.contains("overall: PASS"));
}

#[test]
fn direct_lindblad_on_complex_couplings_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = load("band_gap.toml");
    cfg.run.generator = GeneratorChoice::LindbladDirect;
    let err = cmd_evolve(&cfg, dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

//! The four subcommands.
//!
//! Every command takes a loaded [`RunConfig`] and an output directory and
//! returns a report. Printing is left to the caller; file outputs are
//! written here.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use pseudomode::dynamics::{
    build, equivalence_check, evolve, pure_state, EvolutionResult, EvolveOptions, Generator, GeneratorKind,
    GeneratorSpec, ModeModel,
};
use pseudomode::hilbert::{eigenoperator, SpaceLayout};
use pseudomode::linalg::CVector;
use pseudomode::mapping::{
    build_discrete_modes, two_mode_regularize, verify_rotation_numeric, Classification, RegularizedModeSet,
    TwoModeRotation,
};
use pseudomode::oracle::{auxiliary_correlation_check, single_excitation_solve};
use pseudomode::spectral::{check_positivity_grid, default_positivity_grid, CorrelationSpec, PositivityReport};
use pseudomode::trajectories::{mcwf_run, EnsembleResult, TrajectoryConfig};
use pseudomode::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{GeneratorChoice, Model, RunConfig};
use crate::{CliError, Result};

pub const MAP_FILE: &str = "map.json";
pub const EVOLVE_FILE: &str = "evolve.csv";
pub const EVOLVE_PLOT: &str = "plot_evolve.py";
pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const TRAJECTORIES_PLOT: &str = "plot_trajectories.py";
pub const VALIDATE_FILE: &str = "validate.json";

// ---------------------------------------------------------------------------
// map
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ModeEntry {
    pub frequency: f64,
    pub width: f64,
    /// One coupling per transition.
    pub couplings: Vec<Complex64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularizedEntry {
    pub frequencies: [f64; 2],
    pub rates: [f64; 2],
    pub intermode: f64,
    /// `couplings[j] = [g̃_j1, g̃_j2]`
    pub couplings: Vec<[f64; 2]>,
    pub rotation: TwoModeRotation,
}

impl From<&RegularizedModeSet> for RegularizedEntry {
    fn from(r: &RegularizedModeSet) -> Self {
        Self {
            frequencies: r.frequencies(),
            rates: r.rates(),
            intermode: r.intermode(),
            couplings: r.couplings().to_vec(),
            rotation: *r.rotation(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MapReport {
    pub classification: Classification,
    pub omegas: Vec<f64>,
    pub modes: Vec<ModeEntry>,
    pub positivity: PositivityReport,
    /// Present only for complex couplings.
    pub regularized: Option<RegularizedEntry>,
}

impl MapReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let class = match self.classification {
            Classification::AllReal => "all_real",
            Classification::Complex => "complex",
        };
        let _ = writeln!(s, "classification: {class}");
        let _ = writeln!(s, "transition strengths: {:?}", self.omegas);
        let _ = writeln!(s, "discrete modes:");
        for (l, m) in self.modes.iter().enumerate() {
            let g: Vec<String> = m.couplings.iter().map(|c| format!("{:+.12}{:+.12}i", c.re, c.im)).collect();
            let _ = writeln!(s, "  [{l}] xi = {:+.12}  lambda = {:.12}  g' = [{}]", m.frequency, m.width, g.join(", "));
        }
        let p = &self.positivity;
        let verdict = if p.passed() { "ok" } else { "VIOLATED" };
        let _ = writeln!(
            s,
            "positivity: {verdict} (min D = {:.6e} at omega = {:.6}, {} violations on {} points)",
            p.min_value,
            p.min_at,
            p.violations.len(),
            p.grid_points
        );
        if let Some(r) = &self.regularized {
            let _ = writeln!(s, "regularized modes:");
            for m in 0..2 {
                let g: Vec<String> = r.couplings.iter().map(|c| format!("{:.12}", c[m])).collect();
                let _ = writeln!(
                    s,
                    "  [{m}] xi = {:+.12}  Gamma = {:.12}  g~' = [{}]",
                    r.frequencies[m],
                    r.rates[m],
                    g.join(", ")
                );
            }
            let _ = writeln!(s, "  V12 = {:+.12}", r.intermode);
            let mu = r.rotation.mu;
            let t0 = r.rotation.theta0;
            let _ = writeln!(s, "  mu = {:+.12}{:+.12}i  theta0 = {:+.12}{:+.12}i", mu.re, mu.im, t0.re, t0.im);
        }
        s
    }
}

fn map_report(model: &Model) -> Result<MapReport> {
    let modes = model
        .modes
        .modes()
        .iter()
        .map(|m| ModeEntry { frequency: m.frequency, width: m.width, couplings: m.couplings.clone() })
        .collect();
    let positivity = check_positivity_grid(&model.poles, &default_positivity_grid(&model.poles));
    let regularized = match model.modes.classification() {
        Classification::AllReal => None,
        Classification::Complex => {
            let reg = two_mode_regularize(&model.modes).map_err(CliError::from_regularization)?;
            Some(RegularizedEntry::from(&reg))
        }
    };
    Ok(MapReport {
        classification: model.modes.classification(),
        omegas: model.modes.omegas().to_vec(),
        modes,
        positivity,
        regularized,
    })
}

pub fn cmd_map(config: &RunConfig, out: &Path) -> Result<MapReport> {
    let model = Model::from_config(config)?;
    let report = map_report(&model)?;
    fs::create_dir_all(out)?;
    write_json(&out.join(MAP_FILE), &report)?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// shared run plumbing
// ---------------------------------------------------------------------------

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn mode_model(model: &Model, choice: GeneratorChoice) -> Result<(GeneratorKind, ModeModel)> {
    let discrete = || ModeModel::Discrete(model.modes.clone());
    let regularized = || {
        two_mode_regularize(&model.modes)
            .map(ModeModel::Regularized)
            .map_err(CliError::from_regularization)
    };
    Ok(match choice {
        GeneratorChoice::Auto => match model.modes.classification() {
            Classification::AllReal => (GeneratorKind::LindbladDirect, discrete()),
            Classification::Complex => (GeneratorKind::LindbladRegularized, regularized()?),
        },
        GeneratorChoice::LindbladDirect => (GeneratorKind::LindbladDirect, discrete()),
        GeneratorChoice::Pathological => (GeneratorKind::Pathological, discrete()),
        GeneratorChoice::LindbladRegularized => (GeneratorKind::LindbladRegularized, regularized()?),
    })
}

fn generator(model: &Model, kind: GeneratorKind, modes: ModeModel, fock: &[usize]) -> Result<Generator> {
    let layout = SpaceLayout::new(model.system.dim(), fock.to_vec()).map_err(CliError::from_engine)?;
    build(&GeneratorSpec { kind, system: model.system.clone(), modes, layout, frame: model.config.run.frame })
        .map_err(CliError::from_engine)
}

/// System amplitudes tensored with the mode vacuum.
fn initial_state(layout: &SpaceLayout, amplitudes: &CVector) -> CVector {
    let vacuum = vec![0; layout.n_modes()];
    amplitudes
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > 0.0)
        .fold(CVector::zeros(layout.dim()), |acc, (s, &a)| acc + layout.basis_state(s, &vacuum) * a)
}

fn evolve_options(model: &Model) -> EvolveOptions {
    EvolveOptions {
        max_step: model.config.run.max_step,
        observables: model.observables.clone(),
        ..EvolveOptions::default()
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

const PLOT_TEMPLATE: &str = r##"#!/usr/bin/env python3
"""Plot the columns of __CSV__ against t. Usage: python3 __SCRIPT__ [csv]"""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "__CSV__"
with open(path, newline="") as fh:
    rows = list(csv.reader(line for line in fh if not line.startswith("#")))
header, data = rows[0], [[float(x) for x in row] for row in rows[1:]]
t = [row[0] for row in data]
fig, ax = plt.subplots()
for k, name in enumerate(header[1:], start=1):
    if name.endswith("_im") or "_se_" in name or name in ("top_fock_pop", "trace_err"):
        continue
    ax.plot(t, [row[k] for row in data], label=name)
ax.set_xlabel("t")
ax.legend()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
"##;

fn write_plot_script(dir: &Path, script: &str, csv: &str) -> Result<PathBuf> {
    let path = dir.join(script);
    fs::write(&path, PLOT_TEMPLATE.replace("__CSV__", csv).replace("__SCRIPT__", script))?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct EvolveSummary {
    pub kind: GeneratorKind,
    pub rows: usize,
    pub step: f64,
    pub csv: PathBuf,
    pub plot: PathBuf,
}

fn evolve_csv(res: &EvolutionResult) -> String {
    let mut s = String::from("t");
    for o in &res.observables {
        let _ = write!(s, ",{0}_re,{0}_im", o.name);
    }
    s.push_str(",top_fock_pop,trace_err\n");
    for (i, t) in res.times.iter().enumerate() {
        s.push_str(&fmt(*t));
        for o in &res.observables {
            let v = o.values[i];
            let _ = write!(s, ",{},{}", fmt(v.re), fmt(v.im));
        }
        let _ = writeln!(s, ",{},{}", fmt(res.top_fock[i]), fmt(res.trace_error[i]));
    }
    s
}

pub fn cmd_evolve(config: &RunConfig, out: &Path) -> Result<EvolveSummary> {
    let model = Model::from_config(config)?;
    let (kind, modes) = mode_model(&model, config.run.generator)?;
    let gen = generator(&model, kind, modes, &model.fock)?;
    let rho0 = pure_state(&initial_state(gen.layout(), &model.initial));

    fs::create_dir_all(out)?;
    let csv = out.join(EVOLVE_FILE);
    let plot = write_plot_script(out, EVOLVE_PLOT, EVOLVE_FILE)?;
    match evolve(&gen, &rho0, &model.grid, &evolve_options(&model)) {
        Ok(res) => {
            fs::write(&csv, evolve_csv(&res))?;
            Ok(EvolveSummary { kind, rows: res.times.len(), step: res.step, csv, plot })
        }
        Err(e @ Error::TruncationGuard { .. }) => {
            if let Error::TruncationGuard { partial, .. } = &e {
                let mut body = evolve_csv(partial);
                let _ = writeln!(body, "# ABORTED: {e}");
                fs::write(&csv, body)?;
            }
            Err(CliError::from_engine(e))
        }
        Err(e) => Err(CliError::from_engine(e)),
    }
}

// ---------------------------------------------------------------------------
// trajectories
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoriesSummary {
    pub kind: GeneratorKind,
    pub n_traj: usize,
    pub seed: u64,
    pub jump_counts: Vec<u64>,
    pub csv: PathBuf,
    pub plot: PathBuf,
}

fn trajectories_csv(res: &EnsembleResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# seed = {}", res.seed);
    let _ = writeln!(s, "# n_traj = {}", res.n_traj());
    for (k, n) in res.jump_counts.iter().enumerate() {
        let _ = writeln!(s, "# jumps[{k}] = {n}");
    }
    s.push('t');
    for o in &res.observables {
        let _ = write!(s, ",{0}_re,{0}_im,{0}_se_re,{0}_se_im", o.name);
    }
    s.push('\n');
    for (i, t) in res.times.iter().enumerate() {
        s.push_str(&fmt(*t));
        for o in &res.observables {
            let (m, e) = (o.mean[i], o.stderr[i]);
            let _ = write!(s, ",{},{},{},{}", fmt(m.re), fmt(m.im), fmt(e.re), fmt(e.im));
        }
        s.push('\n');
    }
    s
}

pub fn cmd_trajectories(config: &RunConfig, out: &Path) -> Result<TrajectoriesSummary> {
    let model = Model::from_config(config)?;
    let (kind, modes) = mode_model(&model, config.run.generator)?;
    let gen = generator(&model, kind, modes, &model.fock)?;
    let psi0 = initial_state(gen.layout(), &model.initial);
    let mut cfg = TrajectoryConfig::new(config.run.n_traj, config.run.seed, model.grid.clone());
    cfg.observables = model.observables.clone();
    cfg.max_step = config.run.max_step;
    let res = mcwf_run(&gen, &psi0, &cfg).map_err(CliError::from_engine)?;

    fs::create_dir_all(out)?;
    let csv = out.join(TRAJECTORIES_FILE);
    fs::write(&csv, trajectories_csv(&res))?;
    let plot = write_plot_script(out, TRAJECTORIES_PLOT, TRAJECTORIES_FILE)?;
    Ok(TrajectoriesSummary {
        kind,
        n_traj: res.n_traj(),
        seed: res.seed,
        jump_counts: res.jump_counts.clone(),
        csv,
        plot,
    })
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

pub const CORRELATION_TOL: f64 = 1e-12;
pub const ROTATION_TOL: f64 = 1e-8;
pub const EQUIVALENCE_TOL: f64 = 1e-8;
pub const ORACLE_TOL: f64 = 1e-6;
const CORRELATION_PAIRS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub status: Status,
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

impl CheckResult {
    fn measured(name: &'static str, residual: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        let status = if residual <= tolerance && residual.is_finite() { Status::Pass } else { Status::Fail };
        Self { name, status, residual: Some(residual), tolerance: Some(tolerance), detail: detail.into() }
    }

    fn failed(name: &'static str, detail: impl Into<String>) -> Self {
        Self { name, status: Status::Fail, residual: None, tolerance: None, detail: detail.into() }
    }

    fn skipped(name: &'static str, detail: impl Into<String>) -> Self {
        Self { name, status: Status::Skip, residual: None, tolerance: None, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidateReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl ValidateReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render(&self) -> String {
        let mut s = format!("{:<24} {:<5} {:>12} {:>10}  detail\n", "check", "", "residual", "tol");
        for c in &self.checks {
            let status = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skip => "skip",
            };
            let num = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.3e}"));
            let _ = writeln!(
                s,
                "{:<24} {:<5} {:>12} {:>10}  {}",
                c.name,
                status,
                num(c.residual),
                num(c.tolerance),
                c.detail
            );
        }
        let _ = writeln!(s, "overall: {}", if self.passed { "PASS" } else { "FAIL" });
        s
    }
}

/// `(t, s)` pairs with `0 ≤ s ≤ t ≤ horizon`.
fn sample_pairs(seed: u64, horizon: f64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..CORRELATION_PAIRS)
        .map(|_| {
            let a = rng.random::<f64>() * horizon;
            let b = rng.random::<f64>() * horizon;
            (a.max(b), a.min(b))
        })
        .collect()
}

fn relative(reference: Complex64, value: Complex64) -> f64 {
    let diff = (reference - value).norm();
    if reference.norm() > 0.0 {
        diff / reference.norm()
    } else {
        diff
    }
}

// Real `g'²` means the pathological generator describes the same reduced
// dynamics as the regularized one; otherwise there is no reference to
// compare it against.
fn squares_are_real(model: &Model) -> bool {
    model.modes.modes().iter().all(|m| {
        m.couplings.iter().all(|g| {
            let g2 = g * g;
            g2.im.abs() <= 1e-12 * g2.norm().max(f64::MIN_POSITIVE)
        })
    })
}

pub fn cmd_validate(config: &RunConfig, out: &Path) -> Result<ValidateReport> {
    let model = Model::from_config(config)?;
    let mut checks = Vec::new();

    let positivity = check_positivity_grid(&model.poles, &default_positivity_grid(&model.poles));
    checks.push(CheckResult::measured(
        "positivity",
        (-positivity.min_value).max(0.0),
        pseudomode::spectral::POSITIVITY_TOL,
        format!("min D = {:.6e} at omega = {:.6}", positivity.min_value, positivity.min_at),
    ));

    let horizon = if model.grid.t_max() > 0.0 { model.grid.t_max() } else { 10.0 / model.poles.min_width() };
    let pairs = sample_pairs(config.run.seed, horizon);
    let spec = CorrelationSpec::new(model.poles.clone(), model.modes.omegas().to_vec()).map_err(CliError::config)?;
    let n = model.modes.n_transitions();
    let mut worst = 0.0_f64;
    for &(t, s) in &pairs {
        for j in 0..n {
            for k in 0..n {
                let (a, r) = auxiliary_correlation_check(&model.modes, &spec, j, k, t, s).map_err(CliError::config)?;
                worst = worst.max(relative(a, r));
            }
        }
    }
    checks.push(CheckResult::measured(
        "correlation",
        worst,
        CORRELATION_TOL,
        format!("{} pairs on [0, {horizon:.4}], relative", pairs.len()),
    ));

    let reg = match model.modes.classification() {
        Classification::AllReal => {
            checks.push(CheckResult::skipped("rotation", "couplings are real"));
            checks.push(CheckResult::skipped("rotated_correlation", "couplings are real"));
            None
        }
        Classification::Complex => match two_mode_regularize(&model.modes) {
            Ok(reg) => {
                match verify_rotation_numeric(&model.modes, &reg) {
                    Ok(r) => checks.push(CheckResult::measured(
                        "rotation",
                        r.max_deviation,
                        ROTATION_TOL,
                        format!("{} feasible branches", r.feasible_branches),
                    )),
                    Err(e) => checks.push(CheckResult::failed("rotation", e.to_string())),
                }
                let worst = pairs
                    .iter()
                    .flat_map(|&(t, s)| {
                        let reg = &reg;
                        let spec = &spec;
                        (0..n).flat_map(move |j| {
                            (0..n).map(move |k| {
                                let a = pseudomode::spectral::correlation(spec, j, k, t - s).unwrap_or_default();
                                relative(a, reg.correlation(j, k, t - s))
                            })
                        })
                    })
                    .fold(0.0, f64::max);
                checks.push(CheckResult::measured("rotated_correlation", worst, ROTATION_TOL, "relative"));
                Some(reg)
            }
            Err(e) => {
                checks.push(CheckResult::failed("rotation", e.to_string()));
                checks.push(CheckResult::skipped("rotated_correlation", "no rotated model"));
                None
            }
        },
    };

    let fock: Vec<usize> = model.fock.iter().map(|&k| k.max(2)).collect();
    let opts = evolve_options(&model);
    let run_pair = |a: Result<Generator>, b: Result<Generator>, label: &str| -> CheckResult {
        match (a, b) {
            (Ok(a), Ok(b)) => {
                let rho0 = pure_state(&initial_state(a.layout(), &model.initial));
                match equivalence_check(&a, &b, &rho0, &model.grid, &opts) {
                    Ok(dev) => CheckResult::measured("generator_equivalence", dev, EQUIVALENCE_TOL, label),
                    Err(e) => CheckResult::failed("generator_equivalence", e.to_string()),
                }
            }
            (Err(e), _) | (_, Err(e)) => CheckResult::failed("generator_equivalence", e.to_string()),
        }
    };
    let discrete = || ModeModel::Discrete(model.modes.clone());
    checks.push(match (&reg, model.modes.classification()) {
        (_, Classification::AllReal) => run_pair(
            generator(&model, GeneratorKind::LindbladDirect, discrete(), &fock),
            generator(&model, GeneratorKind::Pathological, discrete(), &fock),
            "lindblad_direct vs pathological",
        ),
        (Some(reg), Classification::Complex) if squares_are_real(&model) => run_pair(
            generator(&model, GeneratorKind::Pathological, discrete(), &fock),
            generator(&model, GeneratorKind::LindbladRegularized, ModeModel::Regularized(reg.clone()), &fock),
            "pathological vs lindblad_regularized",
        ),
        (Some(_), Classification::Complex) => {
            CheckResult::skipped("generator_equivalence", "squared couplings are not real")
        }
        (None, Classification::Complex) => CheckResult::skipped("generator_equivalence", "no rotated model"),
    });

    checks.push(oracle_check(&model, &reg, &fock, &opts));

    let passed = checks.iter().all(|c| c.status != Status::Fail);
    let report = ValidateReport { passed, checks };
    fs::create_dir_all(out)?;
    write_json(&out.join(VALIDATE_FILE), &report)?;
    Ok(report)
}

/// Excited population from the configured Lindblad generator against the
/// amplitude solver, both from `|e, vacuum⟩`. Applies to an undriven
/// two-level system.
fn oracle_check(model: &Model, reg: &Option<RegularizedModeSet>, fock: &[usize], opts: &EvolveOptions) -> CheckResult {
    const NAME: &str = "oracle";
    let sys = &model.system;
    if sys.dim() != 2 || sys.transitions().len() != 1 || !sys.drives().is_empty() {
        return CheckResult::skipped(NAME, "needs an undriven two-level system");
    }
    let omega0 = sys.energies()[1] - sys.energies()[0];
    // The amplitude solver couples through |0⟩⟨1| with unit weight; fold the
    // magnitude of the actual matrix element into the strength.
    let jump = match eigenoperator(sys, 0) {
        Ok(c) => c.matrix[(0, 1)].norm(),
        Err(e) => return CheckResult::failed(NAME, e.to_string()),
    };
    let oracle_modes = match build_discrete_modes(&model.poles, &[model.modes.omegas()[0] * jump]) {
        Ok(m) => m,
        Err(e) => return CheckResult::failed(NAME, e.to_string()),
    };
    let exact = match single_excitation_solve(&oracle_modes, omega0, &model.grid) {
        Ok(tr) => tr.population(),
        Err(e) => return CheckResult::failed(NAME, e.to_string()),
    };
    let (kind, modes) = match (model.modes.classification(), reg) {
        (Classification::AllReal, _) => (GeneratorKind::LindbladDirect, ModeModel::Discrete(model.modes.clone())),
        (Classification::Complex, Some(r)) => (GeneratorKind::LindbladRegularized, ModeModel::Regularized(r.clone())),
        (Classification::Complex, None) => return CheckResult::skipped(NAME, "no Lindblad generator available"),
    };
    let gen = match generator(model, kind, modes, fock) {
        Ok(g) => g,
        Err(e) => return CheckResult::failed(NAME, e.to_string()),
    };
    let mut excited = CVector::zeros(2);
    excited[1] = Complex64::new(1.0, 0.0);
    let rho0 = pure_state(&initial_state(gen.layout(), &excited));
    let opts = EvolveOptions { observables: Vec::new(), ..opts.clone() };
    match evolve(&gen, &rho0, &model.grid, &opts) {
        Ok(res) => {
            let dev = res.population(1).iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            CheckResult::measured(NAME, dev, ORACLE_TOL, "excited population vs amplitude solver")
        }
        Err(e) => CheckResult::failed(NAME, e.to_string()),
    }
}

/// Applies the `--seed` and `--out` overrides.
pub fn apply_overrides(config: &mut RunConfig, seed: Option<u64>, out: Option<PathBuf>) {
    if let Some(s) = seed {
        config.run.seed = s;
    }
    if let Some(p) = out {
        config.output.path = p;
    }
}

/// Writes `text` to stdout, ignoring a closed pipe.
pub fn print(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

//! TOML run configuration and its translation into engine types.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use pseudomode::dynamics::{Frame, Observable, ObservableKind, TimeGrid};
use pseudomode::hilbert::{Drive, SystemSpec, Transition};
use pseudomode::linalg::{CMatrix, CVector};
use pseudomode::mapping::{build_discrete_modes, DiscreteModeSet};
use pseudomode::spectral::{LorentzianSum, LorentzianTerm, Pole, PoleSet};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A complex number written as `[re, im]`.
pub type ComplexCfg = [f64; 2];
/// A complex matrix written row by row.
pub type MatrixCfg = Vec<Vec<ComplexCfg>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spectral: SpectralBlock,
    pub system: SystemBlock,
    #[serde(default)]
    pub run: RunBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectralBlock {
    LorentzianSum { terms: Vec<TermCfg> },
    RawPoles { poles: Vec<PoleCfg> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermCfg {
    pub weight: f64,
    pub center: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleCfg {
    pub z: ComplexCfg,
    pub residue: ComplexCfg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub energies: Vec<f64>,
    /// Shorthand for a two-level system: one `σ_x` transition of this
    /// strength. Ignored when `couplings` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub couplings: Vec<CouplingCfg>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub drives: Vec<DriveCfg>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingCfg {
    pub frequency: f64,
    pub strength: f64,
    pub observable: MatrixCfg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveCfg {
    pub amplitude: MatrixCfg,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Map,
    Evolve,
    Trajectories,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorChoice {
    /// Direct Lindblad for real couplings, the two-mode rotation otherwise.
    #[default]
    Auto,
    LindbladDirect,
    Pathological,
    LindbladRegularized,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FockCfg {
    Uniform(usize),
    PerMode(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCfg {
    /// Start in this system level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    /// Or in this normalized superposition of system levels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<ComplexCfg>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    /// Informational; the subcommand decides what runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub generator: GeneratorChoice,
    #[serde(default)]
    pub frame: Frame,
    pub t_max: f64,
    pub n_steps: usize,
    pub fock: FockCfg,
    pub n_traj: usize,
    pub seed: u64,
    #[serde(default)]
    pub initial: InitialCfg,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
}

impl Default for RunBlock {
    fn default() -> Self {
        Self {
            mode: None,
            generator: GeneratorChoice::Auto,
            frame: Frame::Schrodinger,
            t_max: 10.0,
            n_steps: 100,
            fock: FockCfg::Uniform(2),
            n_traj: 1000,
            seed: 0,
            initial: InitialCfg::default(),
            max_step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// Output directory.
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observables: Vec<ObservableCfg>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { path: PathBuf::from("out"), observables: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableCfg {
    LevelPopulation { name: String, level: usize },
    ModeNumber { name: String, mode: usize },
    System { name: String, matrix: MatrixCfg },
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("cannot parse config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))
    }
}

fn complex(c: ComplexCfg) -> Complex64 {
    Complex64::new(c[0], c[1])
}

fn matrix(m: &MatrixCfg, d: usize, what: &str) -> Result<CMatrix, CliError> {
    if m.len() != d || m.iter().any(|row| row.len() != d) {
        return Err(CliError::Config(format!("{what} must be a {d}x{d} matrix")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| complex(m[i][j])))
}

/// A validated configuration: every engine type built and checked.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: RunConfig,
    pub poles: PoleSet,
    pub system: SystemSpec,
    pub modes: DiscreteModeSet,
    pub grid: TimeGrid,
    pub fock: Vec<usize>,
    pub observables: Vec<Observable>,
    /// Initial system amplitudes; the modes start in vacuum.
    pub initial: CVector,
}

impl Model {
    pub fn from_config(config: &RunConfig) -> Result<Self, CliError> {
        let poles = match &config.spectral {
            SpectralBlock::LorentzianSum { terms } => LorentzianSum::new(
                terms
                    .iter()
                    .map(|t| LorentzianTerm { weight: t.weight, center: t.center, width: t.width })
                    .collect(),
            )
            .and_then(|s| s.to_poles()),
            SpectralBlock::RawPoles { poles } => PoleSet::new(
                poles.iter().map(|p| Pole { z: complex(p.z), residue: complex(p.residue) }).collect(),
            ),
        }
        .map_err(CliError::config)?;

        let sys = &config.system;
        let d = sys.energies.len();
        let transitions = if sys.couplings.is_empty() {
            let omega = sys.omega.ok_or_else(|| {
                CliError::Config("system needs either `omega` (two-level shorthand) or `couplings`".into())
            })?;
            if d != 2 {
                return Err(CliError::Config("`omega` shorthand needs exactly two energies".into()));
            }
            let one = Complex64::new(1.0, 0.0);
            let zero = Complex64::new(0.0, 0.0);
            vec![Transition {
                observable: DMatrix::from_row_slice(2, 2, &[zero, one, one, zero]),
                frequency: sys.energies[1] - sys.energies[0],
                strength: omega,
            }]
        } else {
            sys.couplings
                .iter()
                .map(|c| {
                    Ok(Transition {
                        observable: matrix(&c.observable, d, "coupling observable")?,
                        frequency: c.frequency,
                        strength: c.strength,
                    })
                })
                .collect::<Result<_, CliError>>()?
        };
        let drives = sys
            .drives
            .iter()
            .map(|dr| {
                Ok(Drive { amplitude: matrix(&dr.amplitude, d, "drive amplitude")?, frequency: dr.frequency, phase: dr.phase })
            })
            .collect::<Result<_, CliError>>()?;
        let system = SystemSpec::new(sys.energies.clone(), transitions, drives).map_err(CliError::config)?;
        let modes = build_discrete_modes(&poles, &system.strengths()).map_err(CliError::config)?;

        let run = &config.run;
        let grid = TimeGrid::uniform(run.t_max, run.n_steps).map_err(CliError::config)?;
        let fock = match &run.fock {
            FockCfg::Uniform(n) => vec![*n; modes.len()],
            FockCfg::PerMode(v) => {
                if v.len() != modes.len() {
                    return Err(CliError::Config(format!(
                        "fock lists {} cutoffs for {} modes",
                        v.len(),
                        modes.len()
                    )));
                }
                v.clone()
            }
        };
        if fock.iter().any(|&n| n < 1) {
            return Err(CliError::Config("Fock cutoffs must be >= 1".into()));
        }
        if run.n_traj == 0 {
            return Err(CliError::Config("n_traj must be >= 1".into()));
        }
        if let Some(h) = run.max_step {
            if !(h > 0.0) {
                return Err(CliError::Config("max_step must be > 0".into()));
            }
        }

        let initial = match (&run.initial.level, &run.initial.amplitudes) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("give either initial.level or initial.amplitudes, not both".into()))
            }
            (&Some(l), None) => {
                if l >= d {
                    return Err(CliError::Config(format!("initial level {l} out of range")));
                }
                let mut v = CVector::zeros(d);
                v[l] = Complex64::new(1.0, 0.0);
                v
            }
            (None, Some(a)) => {
                if a.len() != d {
                    return Err(CliError::Config(format!("initial amplitudes need {d} entries")));
                }
                let v = CVector::from_iterator(d, a.iter().map(|&c| complex(c)));
                if (v.norm() - 1.0).abs() > 1e-10 {
                    return Err(CliError::Config(format!("initial amplitudes have norm {}", v.norm())));
                }
                v
            }
            (None, None) => {
                let mut v = CVector::zeros(d);
                v[d - 1] = Complex64::new(1.0, 0.0);
                v
            }
        };

        let observables = if config.output.observables.is_empty() {
            (0..d).map(|n| Observable::population(format!("p{n}"), n)).collect()
        } else {
            let mut names = std::collections::BTreeSet::new();
            config
                .output
                .observables
                .iter()
                .map(|o| {
                    let (name, kind) = match o {
                        ObservableCfg::LevelPopulation { name, level } => {
                            if *level >= d {
                                return Err(CliError::Config(format!("observable {name}: level out of range")));
                            }
                            (name, ObservableKind::LevelPopulation(*level))
                        }
                        ObservableCfg::ModeNumber { name, mode } => {
                            if *mode >= modes.len() {
                                return Err(CliError::Config(format!("observable {name}: mode out of range")));
                            }
                            (name, ObservableKind::ModeNumber(*mode))
                        }
                        ObservableCfg::System { name, matrix: m } => {
                            (name, ObservableKind::System(matrix(m, d, "observable")?))
                        }
                    };
                    if name.is_empty() || name.contains(',') || !names.insert(name.clone()) {
                        return Err(CliError::Config(format!("observable name {name:?} is empty, repeated or contains a comma")));
                    }
                    Ok(Observable::new(name.clone(), kind))
                })
                .collect::<Result<_, CliError>>()?
        };

        Ok(Self { config: config.clone(), poles, system, modes, grid, fock, observables, initial })
    }
}

#![allow(dead_code)]

use num_complex::Complex64;
use pseudomode::dynamics::{build, Frame, Generator, GeneratorKind, GeneratorSpec, ModeModel};
use pseudomode::hilbert::{SpaceLayout, SystemSpec};
use pseudomode::mapping::{build_discrete_modes, two_mode_regularize, DiscreteModeSet, RegularizedModeSet};
use pseudomode::spectral::{LorentzianSum, Pole, PoleSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const OMEGA0: f64 = 1.0;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn lorentzian_poles(lambda: f64) -> PoleSet {
    LorentzianSum::single(OMEGA0, lambda).unwrap().to_poles().unwrap()
}

/// Band gap `W₁ = 2, W₂ = 1, λ₁ = 2, λ₂ = 1` centred on the transition.
pub fn band_gap_poles() -> PoleSet {
    LorentzianSum::band_gap(2.0, 1.0, 2.0, 1.0, OMEGA0).unwrap().to_poles().unwrap()
}

pub fn modes(poles: &PoleSet, omega: f64) -> DiscreteModeSet {
    build_discrete_modes(poles, &[omega]).unwrap()
}

pub fn generator(kind: GeneratorKind, modes: ModeModel, n_max: usize, frame: Frame, omega: f64) -> Generator {
    let n_modes = match &modes {
        ModeModel::Discrete(m) => m.len(),
        ModeModel::Regularized(_) => 2,
    };
    build(&GeneratorSpec {
        kind,
        system: SystemSpec::two_level(OMEGA0, omega).unwrap(),
        modes,
        layout: SpaceLayout::uniform(2, n_modes, n_max).unwrap(),
        frame,
    })
    .unwrap()
}

pub fn tls_lorentzian_generator(omega: f64, lambda: f64, n_max: usize) -> Generator {
    let m = modes(&lorentzian_poles(lambda), omega);
    generator(GeneratorKind::LindbladDirect, ModeModel::Discrete(m), n_max, Frame::Schrodinger, omega)
}

pub fn band_gap_pair(n_max: usize) -> (Generator, Generator) {
    let m = modes(&band_gap_poles(), 1.0);
    let reg = two_mode_regularize(&m).unwrap();
    (
        generator(GeneratorKind::Pathological, ModeModel::Discrete(m), n_max, Frame::Schrodinger, 1.0),
        generator(GeneratorKind::LindbladRegularized, ModeModel::Regularized(reg), n_max, Frame::Schrodinger, 1.0),
    )
}

/// Two-mode models with complex residues `r_l = i ĝ_l²`, `ĝ₁² + ĝ₂² = 1`,
/// kept only when the rotation yields non-negative decay rates.
pub fn random_feasible_models(count: usize, seed: u64) -> Vec<(PoleSet, DiscreteModeSet, RegularizedModeSet)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        assert!(attempts < 100_000, "rejection sampling did not find enough feasible models");
        let g1 = c(rng.random_range(0.3..1.5), rng.random_range(-0.6..0.6));
        let g2 = (Complex64::new(1.0, 0.0) - g1 * g1).sqrt();
        let z1 = c(rng.random_range(-1.0..1.0), -rng.random_range(0.3..3.0));
        let z2 = c(rng.random_range(-1.0..1.0), -rng.random_range(0.3..3.0));
        let Ok(poles) = PoleSet::new(vec![
            Pole { z: z1, residue: Complex64::i() * g1 * g1 },
            Pole { z: z2, residue: Complex64::i() * g2 * g2 },
        ]) else {
            continue;
        };
        let omega = rng.random_range(0.5..2.0);
        let Ok(m) = build_discrete_modes(&poles, &[omega]) else { continue };
        if let Ok(reg) = two_mode_regularize(&m) {
            if m.coupling(0, 1).im.abs() > 1e-3 {
                out.push((poles, m, reg));
            }
        }
    }
    out
}

//! Spectral densities, their lower-half-plane poles, and the bath
//! correlation function built from the pole/residue data.
//!
//! A spectral density `D(ω)` normalized to `∫D dω = 2π` that is meromorphic
//! in the lower half plane is fully described by its poles `z_l = ξ_l − iλ_l`
//! and residues `r_l`. The vacuum correlation function of the bath then reads
//!
//! ```text
//! f_jk(τ) = −i Ω_j Ω_k Σ_l r_l exp(−i z_l τ),   τ ≥ 0
//! ```
//!
//! and the density itself is recovered as
//! `D(ω) = 2 Σ_l (Re r_l (ω − ξ_l) + λ_l Im r_l) / ((ω − ξ_l)² + λ_l²)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, I};

/// Tolerance on `Σ W_i = 1` for Lorentzian sums.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Tolerance on `Σ (−i r_l) = 1` for pole sets.
pub const RESIDUE_SUM_TOL: f64 = 1e-10;
/// Grid points with `D(ω)` below `−POSITIVITY_TOL` are reported.
pub const POSITIVITY_TOL: f64 = 1e-12;

/// One term `W · 2λ / ((ω − ξ)² + λ²)` of a Lorentzian sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianTerm {
    pub weight: f64,
    pub center: f64,
    pub width: f64,
}

/// `D(ω) = Σ_i W_i · 2λ_i / ((ω − ξ_i)² + λ_i²)`; weights may be negative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LorentzianSum {
    terms: Vec<LorentzianTerm>,
}

impl LorentzianSum {
    pub fn new(terms: Vec<LorentzianTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Domain("a Lorentzian sum needs at least one term".into()));
        }
        for (i, t) in terms.iter().enumerate() {
            if !(t.width > 0.0) || !t.width.is_finite() {
                return Err(Error::Domain(format!(
                    "term {i} has width {} (must be > 0)",
                    t.width
                )));
            }
            if !t.weight.is_finite() || !t.center.is_finite() {
                return Err(Error::Domain(format!("term {i} is not finite")));
            }
        }
        let sum: f64 = terms.iter().map(|t| t.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Normalization { sum });
        }
        Ok(Self { terms })
    }

    /// Unit-weight Lorentzian centered at `center` with half-width `width`.
    pub fn single(center: f64, width: f64) -> Result<Self> {
        Self::new(vec![LorentzianTerm { weight: 1.0, center, width }])
    }

    /// Photonic band-gap density `2[W₁λ₁/((ω−ξ)²+λ₁²) − W₂λ₂/((ω−ξ)²+λ₂²)]`.
    ///
    /// Requires `W₁ − W₂ = 1`.
    pub fn band_gap(w1: f64, w2: f64, width1: f64, width2: f64, center: f64) -> Result<Self> {
        Self::new(vec![
            LorentzianTerm { weight: w1, center, width: width1 },
            LorentzianTerm { weight: -w2, center, width: width2 },
        ])
    }

    pub fn terms(&self) -> &[LorentzianTerm] {
        &self.terms
    }

    /// Direct evaluation of the sum at real frequency `omega`.
    pub fn density(&self, omega: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let x = omega - t.center;
                2.0 * t.weight * t.width / (x * x + t.width * t.width)
            })
            .sum()
    }

    pub fn to_poles(&self) -> Result<PoleSet> {
        lorentzian_to_poles(self)
    }
}

/// A simple lower-half-plane pole of `D(ω)` with its residue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub z: Complex64,
    pub residue: Complex64,
}

impl Pole {
    pub fn center(&self) -> f64 {
        self.z.re
    }

    pub fn width(&self) -> f64 {
        -self.z.im
    }

    /// `−i r`, the pole's share of the total spectral weight.
    pub fn weight(&self) -> Complex64 {
        -I * self.residue
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoleSet {
    poles: Vec<Pole>,
}

impl PoleSet {
    /// Validates lower-half-plane placement, non-vanishing residues,
    /// simplicity of the poles and `Σ(−i r_l) = 1`.
    pub fn new(poles: Vec<Pole>) -> Result<Self> {
        if poles.is_empty() {
            return Err(Error::Domain("a pole set needs at least one pole".into()));
        }
        for (i, p) in poles.iter().enumerate() {
            if !(p.z.im < 0.0) {
                return Err(Error::Domain(format!(
                    "pole {i} at {} is not in the lower half plane",
                    p.z
                )));
            }
            if p.residue.norm() == 0.0 {
                return Err(Error::ZeroResidue { index: i });
            }
        }
        for i in 0..poles.len() {
            for j in (i + 1)..poles.len() {
                let scale = poles[i].z.norm().max(poles[j].z.norm()).max(1.0);
                if (poles[i].z - poles[j].z).norm() <= 1e-12 * scale {
                    return Err(Error::DegeneratePoles { first: i, second: j });
                }
            }
        }
        let total: Complex64 = poles.iter().map(Pole::weight).sum();
        if (total - 1.0).norm() > RESIDUE_SUM_TOL {
            return Err(Error::Normalization { sum: total.re });
        }
        Ok(Self { poles })
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn max_width(&self) -> f64 {
        self.poles.iter().map(Pole::width).fold(0.0, f64::max)
    }

    pub fn min_width(&self) -> f64 {
        self.poles.iter().map(Pole::width).fold(f64::INFINITY, f64::min)
    }

    pub fn mean_center(&self) -> f64 {
        self.poles.iter().map(Pole::center).sum::<f64>() / self.poles.len() as f64
    }

    /// Normalized kernel `−i Σ_l r_l e^{−i z_l τ}`; equals `f_jk(τ)/(Ω_jΩ_k)`.
    pub fn kernel(&self, tau: f64) -> Complex64 {
        self.poles
            .iter()
            .map(|p| -I * p.residue * (-I * p.z * tau).exp())
            .sum()
    }

    pub fn density(&self, omega: f64) -> f64 {
        eval_density(self, omega)
    }
}

/// One pole per term at `z = ξ − iλ`, residue `r = iW`.
pub fn lorentzian_to_poles(spec: &LorentzianSum) -> Result<PoleSet> {
    let poles = spec
        .terms
        .iter()
        .map(|t| Pole { z: c64(t.center, -t.width), residue: c64(0.0, t.weight) })
        .collect();
    PoleSet::new(poles)
}

/// Reconstructs `D(ω)` from poles and residues.
///
/// Each pole is paired with its mirror image `z*` so the sum is real by
/// construction; the imaginary remainder is pure rounding.
pub fn eval_density(poles: &PoleSet, omega: f64) -> f64 {
    let w = c64(omega, 0.0);
    let sum: Complex64 = poles
        .poles
        .iter()
        .map(|p| p.residue / (w - p.z) + p.residue.conj() / (w - p.z.conj()))
        .sum();
    sum.re
}

/// Couplings of the system transitions to the bath, together with the
/// bath's pole data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationSpec {
    poles: PoleSet,
    omegas: Vec<f64>,
}

impl CorrelationSpec {
    pub fn new(poles: PoleSet, omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::Domain("at least one coupling strength is required".into()));
        }
        if let Some(bad) = omegas.iter().find(|&&o| !(o > 0.0)) {
            return Err(Error::Domain(format!("coupling strength {bad} must be > 0")));
        }
        Ok(Self { poles, omegas })
    }

    pub fn poles(&self) -> &PoleSet {
        &self.poles
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }
}

/// `f_jk(τ) = −iΩ_jΩ_k Σ_l r_l e^{−i z_l τ}` for `τ ≥ 0`.
pub fn correlation(spec: &CorrelationSpec, j: usize, k: usize, tau: f64) -> Result<Complex64> {
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!(
            "correlation requires tau >= 0 (got {tau}); use f(-tau) = conj(f(tau))"
        )));
    }
    let n = spec.omegas.len();
    if j >= n || k >= n {
        return Err(Error::DimensionMismatch { expected: n, found: j.max(k) + 1 });
    }
    Ok(spec.omegas[j] * spec.omegas[k] * spec.poles.kernel(tau))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    /// `(ω, D(ω))` for every grid point with `D(ω) < −1e-12`.
    pub violations: Vec<(f64, f64)>,
    pub min_value: f64,
    pub min_at: f64,
    pub grid_points: usize,
}

impl PositivityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_positivity_grid(poles: &PoleSet, grid: &[f64]) -> PositivityReport {
    let mut violations = Vec::new();
    let mut min_value = f64::INFINITY;
    let mut min_at = f64::NAN;
    for &w in grid {
        let d = eval_density(poles, w);
        if d < min_value {
            min_value = d;
            min_at = w;
        }
        if d < -POSITIVITY_TOL {
            violations.push((w, d));
        }
    }
    PositivityReport { violations, min_value, min_at, grid_points: grid.len() }
}

/// Uniform grid over `mean center ± 20·max width` with every pole center
/// inserted exactly.
pub fn default_positivity_grid(poles: &PoleSet) -> Vec<f64> {
    const POINTS: usize = 4001;
    let c = poles.mean_center();
    let half = 20.0 * poles.max_width()
        + poles.poles.iter().map(|p| (p.center() - c).abs()).fold(0.0, f64::max);
    let mut grid: Vec<f64> = (0..POINTS)
        .map(|i| c - half + 2.0 * half * i as f64 / (POINTS - 1) as f64)
        .collect();
    grid.extend(poles.poles.iter().map(Pole::center));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

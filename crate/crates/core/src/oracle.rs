//! Independent reference solvers in the single-excitation sector.
//!
//! With one excitation and a vacuum environment the state is
//! `c_e |e,0⟩ + Σ_l a_l |g,1_l⟩`, so the dynamics reduce to a small linear
//! system. In a frame rotating at the transition frequency `ω₀`,
//! `i dc_e/dt = Σ g_l a_l` and `i da_l/dt = (z_l − ω₀) a_l + g_l c_e`.
//! The couplings enter unconjugated. This reproduces the memory kernel
//! `Σ g_l² e^{−i z_l τ}`, which is the physical correlation even when the
//! `g_l` are complex.

use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::TimeGrid;
use crate::error::{Error, Result};
use crate::linalg::{c64, I, ONE, ZERO};
use crate::mapping::{DiscreteModeSet, RegularizedModeSet};
use crate::spectral::{correlation, eval_density, CorrelationSpec, PoleSet};

/// Excited-state amplitude `c_e(t)` in the frame rotating at `ω₀`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplitudeTrace {
    pub times: Vec<f64>,
    pub excited: Vec<Complex64>,
    /// Largest `|Σ|c|² − 1|` seen at the grid times, for unitary solvers.
    pub norm_drift: Option<f64>,
}

impl AmplitudeTrace {
    pub fn population(&self) -> Vec<f64> {
        self.excited.iter().map(|c| c.norm_sqr()).collect()
    }
}

/// Single-excitation generator `[[0, gᵀ], [g, Z − ω₀]]` with `Z` the mode
/// matrix, applied as `dψ/dt = −i M ψ`.
struct ArrowSystem {
    couplings: Vec<Complex64>,
    block: Block,
}

enum Block {
    Diagonal(Vec<Complex64>),
    /// Row-major `n × n`.
    Dense(Vec<Complex64>),
}

impl ArrowSystem {
    fn n(&self) -> usize {
        self.couplings.len()
    }

    fn apply(&self, psi: &[Complex64], out: &mut [Complex64]) {
        let n = self.n();
        let ce = psi[0];
        let mut acc = ZERO;
        for l in 0..n {
            acc += self.couplings[l] * psi[1 + l];
        }
        out[0] = -I * acc;
        match &self.block {
            Block::Diagonal(d) => {
                for l in 0..n {
                    out[1 + l] = -I * (d[l] * psi[1 + l] + self.couplings[l] * ce);
                }
            }
            Block::Dense(z) => {
                for l in 0..n {
                    let mut row = self.couplings[l] * ce;
                    for m in 0..n {
                        row += z[l * n + m] * psi[1 + m];
                    }
                    out[1 + l] = -I * row;
                }
            }
        }
    }

    fn solve(&self, grid: &TimeGrid, h_cap: f64, track_norm: bool) -> AmplitudeTrace {
        let dim = self.n() + 1;
        let mut psi = vec![ZERO; dim];
        psi[0] = ONE;
        let mut k: [Vec<Complex64>; 4] = std::array::from_fn(|_| vec![ZERO; dim]);
        let mut tmp = vec![ZERO; dim];
        let times = grid.times();
        let mut excited = vec![psi[0]];
        let mut drift = 0.0_f64;
        for w in times.windows(2) {
            let steps = ((w[1] - w[0]) / h_cap).ceil().max(1.0) as usize;
            let h = (w[1] - w[0]) / steps as f64;
            for _ in 0..steps {
                self.apply(&psi, &mut k[0]);
                for i in 0..dim {
                    tmp[i] = psi[i] + k[0][i] * (0.5 * h);
                }
                self.apply(&tmp, &mut k[1]);
                for i in 0..dim {
                    tmp[i] = psi[i] + k[1][i] * (0.5 * h);
                }
                self.apply(&tmp, &mut k[2]);
                for i in 0..dim {
                    tmp[i] = psi[i] + k[2][i] * h;
                }
                self.apply(&tmp, &mut k[3]);
                for i in 0..dim {
                    psi[i] += (k[0][i] + k[1][i] * 2.0 + k[2][i] * 2.0 + k[3][i]) * (h / 6.0);
                }
            }
            excited.push(psi[0]);
            if track_norm {
                let n2: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
                drift = drift.max((n2 - 1.0).abs());
            }
        }
        AmplitudeTrace { times: times.to_vec(), excited, norm_drift: track_norm.then_some(drift) }
    }
}

fn require_single_transition(n: usize) -> Result<()> {
    if n != 1 {
        return Err(Error::Refused(format!(
            "single-excitation oracle needs a two-level system with one transition, got {n} transitions"
        )));
    }
    Ok(())
}

/// Amplitude dynamics of a two-level system coupled to the discrete modes,
/// starting from `|e, vacuum⟩`.
pub fn single_excitation_solve(modes: &DiscreteModeSet, omega0: f64, grid: &TimeGrid) -> Result<AmplitudeTrace> {
    require_single_transition(modes.n_transitions())?;
    let sys = ArrowSystem {
        couplings: (0..modes.len()).map(|l| modes.coupling(0, l)).collect(),
        block: Block::Diagonal(modes.modes().iter().map(|m| m.pole() - omega0).collect()),
    };
    let rate = modes.max_width().max(modes.omegas()[0]);
    Ok(sys.solve(grid, 1e-3 / rate, false))
}

/// Same as [`single_excitation_solve`] for the rotated two-mode model.
pub fn single_excitation_solve_regularized(
    reg: &RegularizedModeSet,
    omega0: f64,
    grid: &TimeGrid,
) -> Result<AmplitudeTrace> {
    require_single_transition(reg.n_transitions())?;
    let z = reg.z_matrix();
    let sys = ArrowSystem {
        couplings: reg.couplings()[0].iter().map(|&g| c64(g, 0.0)).collect(),
        block: Block::Dense(vec![z[(0, 0)] - omega0, z[(0, 1)], z[(1, 0)], z[(1, 1)] - omega0]),
    };
    let rate = reg.rates()[0].max(reg.rates()[1]).max(reg.omegas()[0]);
    Ok(sys.solve(grid, 1e-3 / rate, false))
}

/// `c_e(t) = e^{−λt/2}[cosh(dt/2) + (λ/d) sinh(dt/2)]`, `d = √(λ² − 4Ω²)`:
/// a two-level system resonant with one Lorentzian mode of width `λ`.
pub fn damped_rabi(omega: f64, lambda: f64, t: f64) -> Complex64 {
    let d = c64(lambda * lambda - 4.0 * omega * omega, 0.0).sqrt();
    let x = d * (0.5 * t);
    let ratio = if d.norm() < 1e-8 {
        c64(0.5 * lambda * t, 0.0)
    } else {
        x.sinh() * lambda / d
    };
    (x.cosh() + ratio) * (-0.5 * lambda * t).exp()
}

/// A finite set of bath oscillators sampling `D(ω)` on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretizedBath {
    pub frequencies: Vec<f64>,
    pub couplings: Vec<f64>,
    pub spacing: f64,
    pub window: (f64, f64),
}

/// Mean pole center `± 20 · max λ`.
pub fn default_window(poles: &PoleSet) -> (f64, f64) {
    let c = poles.mean_center();
    let half = 20.0 * poles.max_width();
    (c - half, c + half)
}

impl DiscretizedBath {
    pub const MAX_OSCILLATORS: usize = 4000;

    /// Midpoint sampling: `ω_k = ω_min + (k + ½)Δω`,
    /// `g_k = Ω √(D(ω_k) Δω / 2π)`.
    pub fn from_poles(poles: &PoleSet, omega: f64, n_b: usize, window: (f64, f64)) -> Result<Self> {
        if n_b == 0 || n_b > Self::MAX_OSCILLATORS {
            return Err(Error::Domain(format!("bath size {n_b} must be in 1..={}", Self::MAX_OSCILLATORS)));
        }
        let (lo, hi) = window;
        if !(hi > lo) {
            return Err(Error::Domain(format!("empty window [{lo}, {hi}]")));
        }
        let dw = (hi - lo) / n_b as f64;
        let mut frequencies = Vec::with_capacity(n_b);
        let mut couplings = Vec::with_capacity(n_b);
        for k in 0..n_b {
            let w = lo + (k as f64 + 0.5) * dw;
            let mut dens = eval_density(poles, w);
            if dens < 0.0 {
                if dens < -1e-12 {
                    return Err(Error::Domain(format!("spectral density is negative ({dens:e}) at {w}")));
                }
                dens = 0.0;
            }
            frequencies.push(w);
            couplings.push(omega * (dens * dw / (2.0 * std::f64::consts::PI)).sqrt());
        }
        Ok(Self { frequencies, couplings, spacing: dw, window })
    }

    /// A single oscillator at `frequency` with coupling `g`.
    pub fn single(frequency: f64, g: f64) -> Self {
        Self { frequencies: vec![frequency], couplings: vec![g], spacing: 0.0, window: (frequency, frequency) }
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// `2π / Δω`; infinite for a single oscillator.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.spacing
    }

    /// `Σ_k g_k²`
    pub fn total_weight(&self) -> f64 {
        self.couplings.iter().map(|g| g * g).sum()
    }
}

/// Unitary single-excitation evolution against the discretized bath.
pub fn discretized_bath_solve(bath: &DiscretizedBath, omega0: f64, grid: &TimeGrid) -> Result<AmplitudeTrace> {
    let t_max = grid.t_max();
    let rec = bath.recurrence_time();
    if rec <= 2.0 * t_max {
        return Err(Error::Recurrence { recurrence: rec, t_max });
    }
    let detunings: Vec<Complex64> = bath.frequencies.iter().map(|&w| c64(w - omega0, 0.0)).collect();
    let max_rate = detunings
        .iter()
        .map(|d| d.re.abs())
        .fold(bath.total_weight().sqrt(), f64::max);
    let sys = ArrowSystem {
        couplings: bath.couplings.iter().map(|&g| c64(g, 0.0)).collect(),
        block: Block::Diagonal(detunings),
    };
    let h = if max_rate > 0.0 { 0.005 / max_rate } else { f64::INFINITY };
    Ok(sys.solve(grid, h, true))
}

/// The auxiliary-mode correlation `Σ_l g'_jl g'_kl e^{−i z_l (t−s)}`
/// reconstructed from the mode parameters, paired with the pole-residue
/// correlation at `τ = t − s`. Returns `(analytic, reconstructed)`.
pub fn auxiliary_correlation_check(
    modes: &DiscreteModeSet,
    spec: &CorrelationSpec,
    j: usize,
    k: usize,
    t: f64,
    s: f64,
) -> Result<(Complex64, Complex64)> {
    if t < s || s < 0.0 {
        return Err(Error::Domain(format!("need t >= s >= 0, got t = {t}, s = {s}")));
    }
    let n = modes.n_transitions();
    if j >= n || k >= n {
        return Err(Error::DimensionMismatch { expected: n, found: j.max(k) });
    }
    let tau = t - s;
    let reconstructed = modes
        .modes()
        .iter()
        .map(|m| m.couplings[j] * m.couplings[k] * (c64(-m.width, -m.frequency) * tau).exp())
        .sum();
    Ok((correlation(spec, j, k, tau)?, reconstructed))
}

//! Auxiliary discrete-mode model built from the pole data, and the
//! two-mode basis rotation that brings complex couplings into Lindblad
//! form.
//!
//! Each pole `z_l = ξ_l − iλ_l` becomes a bosonic mode of frequency `ξ_l`
//! damped at rate `λ_l`, coupled to transition `j` with
//! `g'_jl = Ω_j √(−i r_l)`. With negative spectral weights some `g'_jl` are
//! complex. For exactly two modes a complex orthogonal rotation
//! `b_l = Σ_m U_ml b̃_m` makes every coupling real while keeping the decay
//! matrix diagonal and non-negative, at the price of a real intermode
//! hopping `V₁₂`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix, I, ONE, ZERO};
use crate::spectral::PoleSet;

/// `|Im g'| / Ω` below this counts as real.
pub const REAL_COUPLING_TOL: f64 = 1e-12;
/// Relative tolerance on `Σ_l (g'_jl)² = Ω_j²`.
pub const NORMALIZATION_TOL: f64 = 1e-10;
/// Rotated decay rates in `[−GAMMA_CLAMP, 0)` are set to zero.
pub const GAMMA_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMode {
    /// `ξ_l`
    pub frequency: f64,
    /// `λ_l > 0`
    pub width: f64,
    /// `g'_jl`, one entry per system transition `j`.
    pub couplings: Vec<Complex64>,
}

impl DiscreteMode {
    pub fn pole(&self) -> Complex64 {
        c64(self.frequency, -self.width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    AllReal,
    Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteModeSet {
    modes: Vec<DiscreteMode>,
    omegas: Vec<f64>,
    classification: Classification,
}

impl DiscreteModeSet {
    pub fn from_parts(modes: Vec<DiscreteMode>, omegas: Vec<f64>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Structural("at least one discrete mode is required".into()));
        }
        for (l, m) in modes.iter().enumerate() {
            if !(m.width > 0.0) {
                return Err(Error::Domain(format!("mode {l} has width {} (must be > 0)", m.width)));
            }
            if m.couplings.len() != omegas.len() {
                return Err(Error::DimensionMismatch {
                    expected: omegas.len(),
                    found: m.couplings.len(),
                });
            }
        }
        for (j, &om) in omegas.iter().enumerate() {
            if !(om >= 0.0) {
                return Err(Error::Domain(format!("coupling strength {om} must be >= 0")));
            }
            let sum: Complex64 = modes.iter().map(|m| m.couplings[j] * m.couplings[j]).sum();
            if (sum - om * om).norm() > NORMALIZATION_TOL * om * om {
                return Err(Error::Structural(format!(
                    "couplings of transition {j} square-sum to {sum}, expected {}",
                    om * om
                )));
            }
        }
        let complex = omegas.iter().enumerate().any(|(j, &om)| {
            modes
                .iter()
                .any(|m| m.couplings[j].im != 0.0 && m.couplings[j].im.abs() >= REAL_COUPLING_TOL * om)
        });
        let classification = if complex { Classification::Complex } else { Classification::AllReal };
        Ok(Self { modes, omegas, classification })
    }

    pub fn modes(&self) -> &[DiscreteMode] {
        &self.modes
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn classification(&self) -> Classification {
        self.classification
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn n_transitions(&self) -> usize {
        self.omegas.len()
    }

    pub fn coupling(&self, j: usize, l: usize) -> Complex64 {
        self.modes[l].couplings[j]
    }

    pub fn min_width(&self) -> f64 {
        self.modes.iter().map(|m| m.width).fold(f64::INFINITY, f64::min)
    }

    pub fn max_width(&self) -> f64 {
        self.modes.iter().map(|m| m.width).fold(0.0, f64::max)
    }

    /// `f_jk(τ) = Σ_l g'_jl g'_kl e^{−i z_l τ}`, the correlation carried by
    /// the auxiliary modes.
    pub fn correlation(&self, j: usize, k: usize, tau: f64) -> Complex64 {
        self.modes
            .iter()
            .map(|m| m.couplings[j] * m.couplings[k] * (-I * m.pole() * tau).exp())
            .sum()
    }
}

/// Principal square root with the mode gauge `Re g ≥ 0`, ties broken by
/// `Im g ≥ 0`.
fn gauge_sqrt(w: Complex64) -> Complex64 {
    let g = w.sqrt();
    let flip = if g.re.abs() <= 1e-14 * g.norm() { g.im < 0.0 } else { g.re < 0.0 };
    if flip {
        -g
    } else {
        g
    }
}

pub fn build_discrete_modes(poles: &PoleSet, omegas: &[f64]) -> Result<DiscreteModeSet> {
    let modes = poles
        .poles()
        .iter()
        .map(|p| {
            if !(p.width() > 0.0) {
                return Err(Error::Domain(format!("pole {} has non-positive width", p.z)));
            }
            // −i r built componentwise so that an exactly real weight keeps a
            // +0 imaginary part.
            let w = c64(p.residue.im, -p.residue.re);
            let root = gauge_sqrt(w);
            Ok(DiscreteMode {
                frequency: p.center(),
                width: p.width(),
                couplings: omegas.iter().map(|&om| om * root).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DiscreteModeSet::from_parts(modes, omegas.to_vec())
}

/// Parameters of the complex rotation `U(θ₀)` taking the two original modes
/// to the regularized ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoModeRotation {
    /// `μ = g'_j2 / g'_j1 = tan θ₁`
    pub mu: Complex64,
    /// Phase of `Δz`.
    pub theta_z: f64,
    /// `Δz = z₂ − z₁`
    pub delta_z: Complex64,
    pub theta0: Complex64,
    pub theta1: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularizedModeSet {
    /// `ξ̃_m`
    frequencies: [f64; 2],
    /// `Γ_m ≥ 0`
    rates: [f64; 2],
    /// `V₁₂`, real.
    intermode: f64,
    /// `g̃'_jm`, real and non-negative.
    couplings: Vec<[f64; 2]>,
    omegas: Vec<f64>,
    rotation: TwoModeRotation,
}

impl RegularizedModeSet {
    /// Validates and assembles a regularized set. `width_sum` is `λ₁ + λ₂` of
    /// the original model, which the rotation must preserve.
    pub fn from_parts(
        frequencies: [f64; 2],
        rates: [f64; 2],
        intermode: f64,
        couplings: Vec<[f64; 2]>,
        omegas: Vec<f64>,
        rotation: TwoModeRotation,
        width_sum: f64,
    ) -> Result<Self> {
        let mut rates = rates;
        if rates.iter().any(|&g| g < -GAMMA_CLAMP || !g.is_finite()) {
            return Err(Error::PositivityViolation { gamma1: rates[0], gamma2: rates[1] });
        }
        for g in &mut rates {
            if *g < 0.0 {
                *g = 0.0;
            }
        }
        if couplings.len() != omegas.len() {
            return Err(Error::DimensionMismatch { expected: omegas.len(), found: couplings.len() });
        }
        for (j, (g, &om)) in couplings.iter().zip(&omegas).enumerate() {
            let sum = g[0] * g[0] + g[1] * g[1];
            if (sum - om * om).abs() > NORMALIZATION_TOL * om * om {
                return Err(Error::Structural(format!(
                    "rotated couplings of transition {j} square-sum to {sum}, expected {}",
                    om * om
                )));
            }
        }
        let trace = rates[0] + rates[1];
        if (trace - width_sum).abs() > 1e-10 * width_sum.abs().max(1e-300) + GAMMA_CLAMP {
            return Err(Error::Structural(format!(
                "rotated decay rates sum to {trace}, expected {width_sum}"
            )));
        }
        Ok(Self { frequencies, rates, intermode, couplings, omegas, rotation })
    }

    pub fn frequencies(&self) -> [f64; 2] {
        self.frequencies
    }

    pub fn rates(&self) -> [f64; 2] {
        self.rates
    }

    pub fn intermode(&self) -> f64 {
        self.intermode
    }

    pub fn couplings(&self) -> &[[f64; 2]] {
        &self.couplings
    }

    pub fn coupling(&self, j: usize, m: usize) -> f64 {
        self.couplings[j][m]
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn n_transitions(&self) -> usize {
        self.omegas.len()
    }

    pub fn rotation(&self) -> &TwoModeRotation {
        &self.rotation
    }

    /// `z̃ = diag(ξ̃_m − iΓ_m) + V₁₂ σ_x`
    pub fn z_matrix(&self) -> CMatrix {
        let v = c64(self.intermode, 0.0);
        CMatrix::from_row_slice(
            2,
            2,
            &[
                c64(self.frequencies[0], -self.rates[0]),
                v,
                v,
                c64(self.frequencies[1], -self.rates[1]),
            ],
        )
    }

    /// `f_jk(τ) = Σ_{m,m'} g̃'_jm [e^{−i z̃ τ}]_{mm'} g̃'_km'`
    pub fn correlation(&self, j: usize, k: usize, tau: f64) -> Complex64 {
        let e = expm2(&(self.z_matrix() * (-I * tau)));
        let gj = self.couplings[j];
        let gk = self.couplings[k];
        let mut acc = ZERO;
        for m in 0..2 {
            for n in 0..2 {
                acc += gj[m] * e[(m, n)] * gk[n];
            }
        }
        acc
    }
}

/// Exponential of a 2×2 complex matrix via
/// `e^A = e^{tr/2} [cosh δ · 1 + sinh(δ)/δ · (A − tr/2)]`,
/// `δ² = ((a−d)/2)² + bc`.
pub fn expm2(a: &CMatrix) -> CMatrix {
    assert_eq!(a.shape(), (2, 2));
    let half_tr = (a[(0, 0)] + a[(1, 1)]) * 0.5;
    let hd = (a[(0, 0)] - a[(1, 1)]) * 0.5;
    let delta = (hd * hd + a[(0, 1)] * a[(1, 0)]).sqrt();
    let ch = delta.cosh();
    let shc = if delta.norm() < 1e-8 {
        ONE + delta * delta / 6.0
    } else {
        delta.sinh() / delta
    };
    let pref = half_tr.exp();
    CMatrix::from_row_slice(
        2,
        2,
        &[
            pref * (ch + shc * hd),
            pref * shc * a[(0, 1)],
            pref * shc * a[(1, 0)],
            pref * (ch - shc * hd),
        ],
    )
}

/// Eigenvalues of a 2×2 complex matrix.
pub fn eigenvalues2(a: &CMatrix) -> [Complex64; 2] {
    let half_tr = (a[(0, 0)] + a[(1, 1)]) * 0.5;
    let hd = (a[(0, 0)] - a[(1, 1)]) * 0.5;
    let delta = (hd * hd + a[(0, 1)] * a[(1, 0)]).sqrt();
    [half_tr - delta, half_tr + delta]
}

fn uniform_ratio(modes: &DiscreteModeSet) -> Result<Complex64> {
    let mut mu0 = None;
    for j in 0..modes.n_transitions() {
        let g1 = modes.coupling(j, 0);
        if g1.norm() == 0.0 {
            return Err(Error::Structural(format!("transition {j} does not couple to mode 1")));
        }
        let mu = modes.coupling(j, 1) / g1;
        match mu0 {
            None => mu0 = Some(mu),
            Some(m) => {
                if (mu - m).norm() > 1e-10 * m.norm().max(1.0) {
                    return Err(Error::Structural(format!(
                        "coupling ratio differs between transitions ({m} vs {mu})"
                    )));
                }
            }
        }
    }
    mu0.ok_or_else(|| Error::Structural("no transitions".into()))
}

/// Rotates a complex-coupled two-mode model into Lindblad form using the
/// closed-form solution of the realness and positivity constraints.
///
/// The invariant `gᵀ z g = g̃ᵀ z̃ g̃` fixes the sign of `V₁₂` relative to the
/// non-negative rotated couplings; when one rotated coupling vanishes the
/// sign is a free mode gauge and `V₁₂ ≥ 0` is chosen.
pub fn two_mode_regularize(modes: &DiscreteModeSet) -> Result<RegularizedModeSet> {
    if modes.len() != 2 {
        return Err(match modes.classification() {
            Classification::Complex if modes.len() > 2 => {
                Error::UnsupportedRegularization { modes: modes.len() }
            }
            _ => Error::Structural(format!(
                "two-mode regularization needs exactly 2 modes, got {}",
                modes.len()
            )),
        });
    }
    let mu = uniform_ratio(modes)?;
    let one_plus_mu2 = (ONE + mu * mu).norm();
    if one_plus_mu2 <= 1e-12 {
        return Err(Error::SingularRotation { value: one_plus_mu2 });
    }
    let m1 = &modes.modes()[0];
    let m2 = &modes.modes()[1];
    let (z1, z2) = (m1.pole(), m2.pole());
    let delta_z = z2 - z1;
    let theta_z = delta_z.arg();
    let theta1 = mu.atan();
    let width_sum = m1.width + m2.width;
    let omegas = modes.omegas().to_vec();

    if mu.im.abs() <= REAL_COUPLING_TOL * mu.norm().max(1.0) {
        let couplings = (0..modes.n_transitions())
            .map(|j| [modes.coupling(j, 0).re.abs(), modes.coupling(j, 1).re.abs()])
            .collect();
        let rotation = TwoModeRotation { mu, theta_z, delta_z, theta0: ZERO, theta1 };
        return RegularizedModeSet::from_parts(
            [m1.frequency, m2.frequency],
            [m1.width, m2.width],
            0.0,
            couplings,
            omegas,
            rotation,
            width_sum,
        );
    }

    let abs_dz = delta_z.norm();
    let (s, c) = theta_z.sin_cos();
    let m2n = mu.norm_sqr();
    let (x, y) = (mu.re, mu.im);
    let root = ((1.0 + m2n).powi(2) * s * s + (2.0 * y * c).powi(2)).sqrt();

    let v_abs = (abs_dz / one_plus_mu2 * y * (1.0 + m2n) / root).abs();
    // Δz cos 2θ₀
    let dz_cos = -delta_z / one_plus_mu2 * c64((1.0 + m2n).powi(2) * s, (2.0 * y).powi(2) * c) / root;

    let xi_mean = 0.5 * (m1.frequency + m2.frequency);
    let frequencies = [xi_mean - 0.5 * dz_cos.re, xi_mean + 0.5 * dz_cos.re];
    let rates = [0.5 * (width_sum + dz_cos.im), 0.5 * (width_sum - dz_cos.im)];

    // Normalized couplings ĝ_m = g̃'_jm / Ω_j. The smaller one comes from the
    // product ĝ₁ĝ₂ = |R| / (|1+μ²| root), which avoids the cancellation in
    // (1 − q)/2 near a vanishing coupling.
    let q = ((1.0 - m2n * m2n) * s - 4.0 * x * y * c) / (one_plus_mu2 * root);
    let r = x * (1.0 + m2n) * s + y * (1.0 - m2n) * c;
    let product = r.abs() / (one_plus_mu2 * root);
    let (g1, g2) = if q >= 0.0 {
        let g2 = (0.5 * (1.0 + q)).sqrt();
        (product / g2, g2)
    } else {
        let g1 = (0.5 * (1.0 - q)).sqrt();
        (g1, product / g1)
    };

    let om0 = modes.omegas()[0];
    let moment: Complex64 = modes
        .modes()
        .iter()
        .map(|m| {
            let g = m.couplings[0] / om0;
            m.pole() * g * g
        })
        .sum();
    let hopping_moment = moment.re - (frequencies[0] * g1 * g1 + frequencies[1] * g2 * g2);
    let intermode = if v_abs * product > 1e-10 * abs_dz.max(f64::MIN_POSITIVE) {
        v_abs.copysign(hopping_moment)
    } else {
        v_abs
    };

    // θ₀ from cos 2θ₀ and sin 2θ₀ = ±2V/Δz; the realness constraint
    // Im θ₀ = Im θ₁ selects the branch.
    let cos2 = dz_cos / delta_z;
    let theta0 = [1.0, -1.0]
        .iter()
        .map(|&sign| {
            let sin2 = 2.0 * sign * v_abs / delta_z;
            -0.5 * I * (cos2 + I * sin2).ln()
        })
        .min_by(|a, b| (a.im - theta1.im).abs().total_cmp(&(b.im - theta1.im).abs()))
        .unwrap_or(ZERO);

    let couplings = omegas.iter().map(|&om| [om * g1, om * g2]).collect();
    let rotation = TwoModeRotation { mu, theta_z, delta_z, theta0, theta1 };
    RegularizedModeSet::from_parts(frequencies, rates, intermode, couplings, omegas, rotation, width_sum)
}

/// Outcome of the numeric rotation search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationResidual {
    /// Largest elementwise deviation between the numerically rotated model
    /// and the closed-form one.
    pub max_deviation: f64,
    /// The numerically found `θ₀` of the best-matching branch.
    pub theta0: Complex64,
    /// Number of feasible branches found on `Re θ₀ ∈ [0, π)`.
    pub feasible_branches: usize,
}

fn rotation_matrix(theta: Complex64) -> CMatrix {
    let (s, c) = (theta.sin(), theta.cos());
    CMatrix::from_row_slice(2, 2, &[c, s, -s, c])
}

/// Independent check of [`two_mode_regularize`]: scans `Re θ₀` with
/// `Im θ₀ = Im θ₁` fixed for zeros of `Im z̃₁₂`, keeps branches with
/// non-negative `Γ_m`, rotates `diag(z)` and `g'` directly and reports the
/// best match to `reg` after fixing the mode gauge.
pub fn verify_rotation_numeric(
    modes: &DiscreteModeSet,
    reg: &RegularizedModeSet,
) -> Result<RotationResidual> {
    if modes.len() != 2 {
        return Err(Error::Structural("rotation check needs exactly two modes".into()));
    }
    if reg.n_transitions() != modes.n_transitions() {
        return Err(Error::DimensionMismatch {
            expected: modes.n_transitions(),
            found: reg.n_transitions(),
        });
    }
    let mu = uniform_ratio(modes)?;
    let y = mu.atan().im;
    let z = [modes.modes()[0].pole(), modes.modes()[1].pole()];
    let dz = z[1] - z[0];
    let offdiag_im = |x: f64| (dz * (c64(2.0 * x, 2.0 * y)).sin()).im;

    const SCAN: usize = 1440;
    let xs: Vec<f64> = (0..=SCAN).map(|k| PI * k as f64 / SCAN as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| offdiag_im(x)).collect();
    let scale = dz.norm() * (2.0 * y).cosh();
    let mut roots = Vec::new();
    if fs.iter().all(|f| f.abs() <= 1e-14 * scale) {
        roots.extend([0.0, 0.5 * PI]);
    } else {
        for k in 0..SCAN {
            let (mut a, mut b) = (xs[k], xs[k + 1]);
            let (fa, fb) = (fs[k], fs[k + 1]);
            if fa == 0.0 {
                roots.push(a);
                continue;
            }
            if fa * fb > 0.0 || fb == 0.0 {
                continue;
            }
            let mut fa = fa;
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                let fm = offdiag_im(mid);
                if fm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if fa * fm < 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            roots.push(0.5 * (a + b));
        }
    }

    let zdiag = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(z.to_vec()));
    let reg_freq = reg.frequencies();
    let reg_rates = reg.rates();
    let mut best: Option<(f64, Complex64)> = None;
    let mut feasible = 0;
    for &x in &roots {
        let theta0 = c64(x, y);
        let u = rotation_matrix(theta0);
        let zt = &u * &zdiag * u.transpose();
        let gamma = [-zt[(0, 0)].im, -zt[(1, 1)].im];
        if gamma.iter().any(|&g| g < -1e-10) {
            continue;
        }
        feasible += 1;
        let gt: Vec<[Complex64; 2]> = (0..modes.n_transitions())
            .map(|j| {
                let g = nalgebra::DVector::from_vec(vec![modes.coupling(j, 0), modes.coupling(j, 1)]);
                let r = &u * g;
                [r[0], r[1]]
            })
            .collect();
        // Mode gauge: reflect each mode so its coupling is non-negative; a
        // mode with vanishing coupling is reflected to make V ≥ 0.
        let om0 = modes.omegas()[0];
        let mut sign = [1.0, 1.0];
        let mut free = [false, false];
        for m in 0..2 {
            if gt[0][m].norm() > 1e-9 * om0 {
                sign[m] = if gt[0][m].re < 0.0 { -1.0 } else { 1.0 };
            } else {
                free[m] = true;
            }
        }
        let v_num = zt[(0, 1)];
        for m in 0..2 {
            if free[m] && sign[0] * sign[1] * v_num.re < 0.0 {
                sign[m] = -sign[m];
            }
        }
        let v = v_num * (sign[0] * sign[1]);
        let mut dev = (v - reg.intermode()).norm();
        for m in 0..2 {
            dev = dev.max((zt[(m, m)].re - reg_freq[m]).abs());
            dev = dev.max((gamma[m] - reg_rates[m]).abs());
            for (j, g) in gt.iter().enumerate() {
                dev = dev.max((g[m] * sign[m] - reg.coupling(j, m)).norm());
            }
        }
        if best.is_none_or(|(d, _)| dev < d) {
            best = Some((dev, theta0));
        }
    }
    match best {
        Some((max_deviation, theta0)) => {
            Ok(RotationResidual { max_deviation, theta0, feasible_branches: feasible })
        }
        None => Err(Error::Infeasible(format!(
            "no rotation angle with real off-diagonal and non-negative decay rates ({} candidate roots)",
            roots.len()
        ))),
    }
}

//! Master-equation generators for the enlarged system and a fixed-step RK4
//! integrator.
//!
//! All three generator kinds share one shape,
//!
//! `L[ρ] = −i(K_L(t) ρ − ρ K_R(t)) + Σ_k J_k ρ J_k†`,
//!
//! with `K_L = H_c − (i/2) Σ J†J` and `K_R = H_c + (i/2) Σ J†J`. For the
//! Lindblad kinds `H_c` is Hermitian. For the pathological kind the mode
//! couplings enter `H_c` without conjugation, so `H_c` is non-Hermitian and
//! acts identically on both sides of `ρ`. This keeps the trace conserved and
//! reduces to the direct Lindblad generator when the couplings are real.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    eigenoperator, embed_system, mode_ops, number_op, partial_trace_modes, top_fock_populations,
    SpaceLayout, SystemSpec,
};
use crate::linalg::{
    c64, hermiticity_deviation, max_abs_diff, min_eigenvalue_hermitian, norm_bound, trace, CMatrix,
    CVector, SparseOp, I, ZERO,
};
use crate::mapping::{Classification, DiscreteModeSet, RegularizedModeSet};

/// Default limit on the population of any mode's highest Fock level.
pub const TRUNCATION_LIMIT: f64 = 1e-6;
/// Tolerance for trace, Hermiticity and positivity along Lindblad evolutions.
pub const INVARIANT_TOL: f64 = 1e-8;
/// RK4 step cap as a fraction of `1/‖L‖`.
pub const STEP_FACTOR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    LindbladDirect,
    Pathological,
    LindbladRegularized,
}

impl GeneratorKind {
    pub fn is_lindblad(self) -> bool {
        !matches!(self, GeneratorKind::Pathological)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    #[default]
    Schrodinger,
    Interaction,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModeModel {
    Discrete(DiscreteModeSet),
    Regularized(RegularizedModeSet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub system: SystemSpec,
    pub modes: ModeModel,
    pub layout: SpaceLayout,
    pub frame: Frame,
}

#[derive(Debug, Clone)]
struct Oscillating {
    /// The term is `e^{iνt} op`.
    frequency: f64,
    op: SparseOp,
}

/// A Liouvillian on the truncated enlarged space, applied matrix-free.
#[derive(Debug, Clone)]
pub struct Generator {
    kind: GeneratorKind,
    frame: Frame,
    layout: SpaceLayout,
    left: SparseOp,
    right: SparseOp,
    oscillating: Vec<Oscillating>,
    jumps: Vec<SparseOp>,
    /// Diagonal of `H₀ = H_{S,0} + Σ ξ b†b`, used for frame changes.
    free_energies: Vec<f64>,
    norm_estimate: f64,
}

struct Parts<'a> {
    frequencies: &'a [f64],
    rates: &'a [f64],
    /// `couplings[j][l]`
    couplings: Vec<Vec<Complex64>>,
    intermode: f64,
}

fn assemble(kind: GeneratorKind, frame: Frame, system: &SystemSpec, layout: &SpaceLayout, p: Parts) -> Result<Generator> {
    let n_modes = p.frequencies.len();
    if layout.system_dim() != system.dim() {
        return Err(Error::DimensionMismatch { expected: system.dim(), found: layout.system_dim() });
    }
    if layout.n_modes() != n_modes {
        return Err(Error::DimensionMismatch { expected: n_modes, found: layout.n_modes() });
    }
    if p.couplings.len() != system.transitions().len() {
        return Err(Error::DimensionMismatch {
            expected: system.transitions().len(),
            found: p.couplings.len(),
        });
    }
    let d = layout.dim();
    let ops: Vec<(CMatrix, CMatrix)> = (0..n_modes)
        .map(|l| {
            let (b, bd) = mode_ops(layout, l);
            (b.matrix, bd.matrix)
        })
        .collect();

    let mut hc = embed_system(layout, &system.h0());
    for (l, &xi) in p.frequencies.iter().enumerate() {
        hc += number_op(layout, l).matrix * c64(xi, 0.0);
    }
    if p.intermode != 0.0 {
        hc += (&ops[0].1 * &ops[1].0 + &ops[1].1 * &ops[0].0) * c64(p.intermode, 0.0);
    }
    for (j, row) in p.couplings.iter().enumerate() {
        let c = embed_system(layout, &eigenoperator(system, j)?.matrix);
        let cd = c.adjoint();
        for (l, &g) in row.iter().enumerate() {
            if g != ZERO {
                hc += (&cd * &ops[l].0 + &ops[l].1 * &c) * g;
            }
        }
    }

    let mut anti = CMatrix::zeros(d, d);
    let mut jumps = Vec::with_capacity(n_modes);
    for (l, &rate) in p.rates.iter().enumerate() {
        if rate < 0.0 {
            return Err(Error::Refused(format!("mode {l} has negative decay rate {rate}")));
        }
        let j = &ops[l].0 * c64((2.0 * rate).sqrt(), 0.0);
        anti += j.adjoint() * &j * c64(0.5, 0.0);
        jumps.push(j);
    }

    let free_energies: Vec<f64> = (0..d)
        .map(|i| {
            let (s, occ) = layout.decompose(i);
            system.energies()[s] + occ.iter().zip(p.frequencies).map(|(&n, xi)| n as f64 * xi).sum::<f64>()
        })
        .collect();

    // Drives A cos(νt + φ) split into e^{±iνt} components.
    let mut drive_terms: Vec<(f64, CMatrix)> = Vec::new();
    for dr in system.drives() {
        let a = embed_system(layout, &dr.amplitude);
        if dr.frequency == 0.0 {
            drive_terms.push((0.0, a * c64(dr.phase.cos(), 0.0)));
        } else {
            let e = Complex64::from_polar(0.5, dr.phase);
            drive_terms.push((dr.frequency, &a * e));
            drive_terms.push((-dr.frequency, a * e.conj()));
        }
    }

    let mut entries: Vec<(f64, usize, usize, Complex64)> = Vec::new();
    let push = |freq: f64, m: &CMatrix, entries: &mut Vec<_>| {
        for jj in 0..d {
            for ii in 0..d {
                let v = m[(ii, jj)];
                if v != ZERO {
                    let shift = match frame {
                        Frame::Schrodinger => 0.0,
                        Frame::Interaction => free_energies[ii] - free_energies[jj],
                    };
                    entries.push((freq + shift, ii, jj, v));
                }
            }
        }
    };
    let mut coherent = hc;
    if frame == Frame::Interaction {
        for i in 0..d {
            coherent[(i, i)] -= free_energies[i];
        }
    }
    push(0.0, &coherent, &mut entries);
    for (f, m) in &drive_terms {
        push(*f, m, &mut entries);
    }
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut static_part = CMatrix::zeros(d, d);
    let mut oscillating: Vec<Oscillating> = Vec::new();
    let mut k = 0;
    while k < entries.len() {
        let f0 = entries[k].0;
        let tol = 1e-12 * f0.abs().max(1.0);
        let mut end = k;
        while end < entries.len() && entries[end].0 - f0 <= tol {
            end += 1;
        }
        let group = entries[k..end].iter().map(|&(_, i, j, v)| (i, j, v));
        if f0.abs() <= 1e-12 {
            for (i, j, v) in group {
                static_part[(i, j)] += v;
            }
        } else {
            let op = SparseOp::from_entries(d, group);
            if !op.is_empty() {
                oscillating.push(Oscillating { frequency: f0, op });
            }
        }
        k = end;
    }

    let left = &static_part - &anti * I;
    let right = &static_part + &anti * I;
    let mut norm_estimate = norm_bound(&left) + norm_bound(&right);
    norm_estimate += jumps.iter().map(|j| norm_bound(j).powi(2)).sum::<f64>();
    norm_estimate += oscillating.iter().map(|o| 2.0 * norm_bound(&o.op.to_dense())).sum::<f64>();

    Ok(Generator {
        kind,
        frame,
        layout: layout.clone(),
        left: SparseOp::from_dense(&left),
        right: SparseOp::from_dense(&right),
        oscillating,
        jumps: jumps.iter().map(SparseOp::from_dense).collect(),
        free_energies,
        norm_estimate,
    })
}

fn discrete_parts(modes: &DiscreteModeSet, conj_free_complex: bool) -> (Vec<f64>, Vec<f64>, Vec<Vec<Complex64>>) {
    let freqs = modes.modes().iter().map(|m| m.frequency).collect();
    let rates = modes.modes().iter().map(|m| m.width).collect();
    let couplings = (0..modes.n_transitions())
        .map(|j| {
            (0..modes.len())
                .map(|l| {
                    let g = modes.coupling(j, l);
                    if conj_free_complex {
                        g
                    } else {
                        c64(g.re, 0.0)
                    }
                })
                .collect()
        })
        .collect();
    (freqs, rates, couplings)
}

fn expect_discrete(spec: &GeneratorSpec) -> Result<&DiscreteModeSet> {
    match &spec.modes {
        ModeModel::Discrete(m) => Ok(m),
        ModeModel::Regularized(_) => Err(Error::Structural(
            "this generator kind takes the unrotated discrete-mode model".into(),
        )),
    }
}

/// `H = H_S + Σ ξ_l b†b + Σ g'_jl (c†_j b_l + b†_l c_j)` with damping
/// `√(2λ_l) b_l`. Requires real couplings.
pub fn build_lindblad_direct(spec: &GeneratorSpec) -> Result<Generator> {
    let modes = expect_discrete(spec)?;
    if modes.classification() != Classification::AllReal {
        return Err(Error::ComplexCouplings);
    }
    let (freqs, rates, couplings) = discrete_parts(modes, false);
    let parts = Parts { frequencies: &freqs, rates: &rates, couplings, intermode: 0.0 };
    assemble(GeneratorKind::LindbladDirect, spec.frame, &spec.system, &spec.layout, parts)
}

/// Non-Hermitian generator with complex couplings entering unconjugated.
pub fn build_pathological(spec: &GeneratorSpec) -> Result<Generator> {
    let modes = expect_discrete(spec)?;
    let (freqs, rates, couplings) = discrete_parts(modes, true);
    let parts = Parts { frequencies: &freqs, rates: &rates, couplings, intermode: 0.0 };
    assemble(GeneratorKind::Pathological, spec.frame, &spec.system, &spec.layout, parts)
}

/// Lindblad generator of the rotated two-mode model, including the
/// intermode hopping `V₁₂(b̃†₁b̃₂ + b̃†₂b̃₁)`.
pub fn build_lindblad_regularized(spec: &GeneratorSpec) -> Result<Generator> {
    let reg = match &spec.modes {
        ModeModel::Regularized(r) => r,
        ModeModel::Discrete(_) => {
            return Err(Error::Structural("regularized generator needs a rotated mode set".into()))
        }
    };
    let rates = reg.rates();
    if rates.iter().any(|&g| g < 0.0) {
        return Err(Error::Refused(format!("negative decay rates {rates:?}")));
    }
    let freqs = reg.frequencies();
    let couplings = reg
        .couplings()
        .iter()
        .map(|g| g.iter().map(|&x| c64(x, 0.0)).collect())
        .collect();
    let parts = Parts { frequencies: &freqs, rates: &rates, couplings, intermode: reg.intermode() };
    assemble(GeneratorKind::LindbladRegularized, spec.frame, &spec.system, &spec.layout, parts)
}

/// Dispatches on `spec.kind`.
pub fn build(spec: &GeneratorSpec) -> Result<Generator> {
    match spec.kind {
        GeneratorKind::LindbladDirect => build_lindblad_direct(spec),
        GeneratorKind::Pathological => build_pathological(spec),
        GeneratorKind::LindbladRegularized => build_lindblad_regularized(spec),
    }
}

impl Generator {
    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn n_jumps(&self) -> usize {
        self.jumps.len()
    }

    pub fn jump(&self, k: usize) -> &SparseOp {
        &self.jumps[k]
    }

    pub fn is_time_dependent(&self) -> bool {
        !self.oscillating.is_empty()
    }

    /// Upper bound on `‖L‖` used for the step-size cap.
    pub fn norm_estimate(&self) -> f64 {
        self.norm_estimate
    }

    pub fn free_energies(&self) -> &[f64] {
        &self.free_energies
    }

    /// `out = L(t)[ρ]`
    pub fn apply_into(&self, t: f64, rho: &CMatrix, out: &mut CMatrix) {
        out.fill(ZERO);
        self.left.mul_left_acc(rho, -I, out);
        self.right.mul_right_acc(rho, I, out);
        for o in &self.oscillating {
            let phase = Complex64::from_polar(1.0, o.frequency * t);
            o.op.mul_left_acc(rho, -I * phase, out);
            o.op.mul_right_acc(rho, I * phase, out);
        }
        for j in &self.jumps {
            j.sandwich_acc(rho, c64(1.0, 0.0), out);
        }
    }

    pub fn apply(&self, t: f64, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
        self.apply_into(t, rho, &mut out);
        out
    }

    /// `out = K_L(t) ψ`, the non-Hermitian drift of the no-jump evolution.
    pub fn apply_effective_into(&self, t: f64, psi: &CVector, out: &mut CVector) {
        out.fill(ZERO);
        self.left.mul_vec_acc(psi, c64(1.0, 0.0), out);
        for o in &self.oscillating {
            o.op.mul_vec_acc(psi, Complex64::from_polar(1.0, o.frequency * t), out);
        }
    }

    /// Dense `d² × d²` matrix of `L(t)` acting on column-stacked `ρ`.
    pub fn superoperator_matrix(&self, t: f64) -> CMatrix {
        let d = self.dim();
        let mut sup = CMatrix::zeros(d * d, d * d);
        let mut basis = CMatrix::zeros(d, d);
        let mut out = CMatrix::zeros(d, d);
        for j in 0..d {
            for i in 0..d {
                basis[(i, j)] = c64(1.0, 0.0);
                self.apply_into(t, &basis, &mut out);
                basis[(i, j)] = ZERO;
                let col = i + j * d;
                for q in 0..d {
                    for p in 0..d {
                        sup[(p + q * d, col)] = out[(p, q)];
                    }
                }
            }
        }
        sup
    }

    /// Maps a Schrödinger-frame state to this generator's frame at time `t`.
    pub fn to_native(&self, rho: &CMatrix, t: f64) -> CMatrix {
        match self.frame {
            Frame::Schrodinger => rho.clone(),
            Frame::Interaction => rotate(rho, &self.free_energies, t),
        }
    }

    /// Maps a state in this generator's frame back to the Schrödinger frame.
    pub fn to_schrodinger(&self, rho: &CMatrix, t: f64) -> CMatrix {
        match self.frame {
            Frame::Schrodinger => rho.clone(),
            Frame::Interaction => rotate(rho, &self.free_energies, -t),
        }
    }

    /// Vector version of [`to_schrodinger`](Self::to_schrodinger).
    pub fn state_to_schrodinger(&self, psi: &CVector, t: f64) -> CVector {
        match self.frame {
            Frame::Schrodinger => psi.clone(),
            Frame::Interaction => {
                CVector::from_iterator(psi.len(), psi.iter().zip(&self.free_energies).map(|(&a, &e)| a * Complex64::from_polar(1.0, -e * t)))
            }
        }
    }
}

/// `ρ_mn ↦ ρ_mn e^{i(E_m − E_n)t}`, i.e. `e^{iH₀t} ρ e^{−iH₀t}`.
fn rotate(rho: &CMatrix, energies: &[f64], t: f64) -> CMatrix {
    CMatrix::from_fn(rho.nrows(), rho.ncols(), |m, n| {
        rho[(m, n)] * Complex64::from_polar(1.0, (energies[m] - energies[n]) * t)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.first() != Some(&0.0) {
            return Err(Error::Domain("time grid must start at 0".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("time grid must be finite and strictly increasing".into()));
        }
        Ok(Self { times })
    }

    /// `n_steps + 1` equally spaced points on `[0, t_max]`; `t_max = 0` gives
    /// the single point 0.
    pub fn uniform(t_max: f64, n_steps: usize) -> Result<Self> {
        if !(t_max >= 0.0) || !t_max.is_finite() {
            return Err(Error::Domain(format!("t_max = {t_max} must be finite and >= 0")));
        }
        if t_max == 0.0 {
            return Ok(Self { times: vec![0.0] });
        }
        if n_steps == 0 {
            return Err(Error::Domain("n_steps must be >= 1 when t_max > 0".into()));
        }
        Self::new((0..=n_steps).map(|k| t_max * k as f64 / n_steps as f64).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObservableKind {
    /// `A_S ⊗ 1`
    System(CMatrix),
    /// `|n⟩⟨n| ⊗ 1`
    LevelPopulation(usize),
    /// `b†_l b_l`
    ModeNumber(usize),
    /// Operator on the full space.
    Full(CMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub name: String,
    pub kind: ObservableKind,
}

impl Observable {
    pub fn new(name: impl Into<String>, kind: ObservableKind) -> Self {
        Self { name: name.into(), kind }
    }

    pub fn population(name: impl Into<String>, level: usize) -> Self {
        Self::new(name, ObservableKind::LevelPopulation(level))
    }

    /// Dense operator on the full space.
    pub fn matrix(&self, layout: &SpaceLayout) -> Result<CMatrix> {
        let d = layout.dim();
        let ds = layout.system_dim();
        let m = match &self.kind {
            ObservableKind::System(a) => {
                if a.shape() != (ds, ds) {
                    return Err(Error::DimensionMismatch { expected: ds, found: a.nrows() });
                }
                embed_system(layout, a)
            }
            ObservableKind::LevelPopulation(n) => {
                if *n >= ds {
                    return Err(Error::DimensionMismatch { expected: ds, found: *n });
                }
                let mut p = CMatrix::zeros(ds, ds);
                p[(*n, *n)] = c64(1.0, 0.0);
                embed_system(layout, &p)
            }
            ObservableKind::ModeNumber(l) => {
                if *l >= layout.n_modes() {
                    return Err(Error::DimensionMismatch { expected: layout.n_modes(), found: *l });
                }
                number_op(layout, *l).matrix
            }
            ObservableKind::Full(a) => {
                if a.shape() != (d, d) {
                    return Err(Error::DimensionMismatch { expected: d, found: a.nrows() });
                }
                a.clone()
            }
        };
        Ok(m)
    }
}

/// `Tr(A ρ)`
pub fn expectation(a: &CMatrix, rho: &CMatrix) -> Complex64 {
    let d = a.nrows();
    let mut acc = ZERO;
    for j in 0..d {
        for i in 0..d {
            acc += a[(i, j)] * rho[(j, i)];
        }
    }
    acc
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    /// Extra cap on the RK4 step.
    pub max_step: Option<f64>,
    /// Step cap as a fraction of `1/‖L‖`; must not exceed [`STEP_FACTOR`].
    pub step_factor: f64,
    /// Top-Fock population limit; `None` disables the guard.
    pub guard: Option<f64>,
    pub check_invariants: bool,
    pub store_states: bool,
    pub observables: Vec<Observable>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            max_step: None,
            step_factor: STEP_FACTOR,
            guard: Some(TRUNCATION_LIMIT),
            check_invariants: true,
            store_states: false,
            observables: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableSeries {
    pub name: String,
    pub values: Vec<Complex64>,
}

/// Snapshots in the Schrödinger frame, whatever frame was integrated in.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    /// Full states, filled only when requested.
    pub states: Vec<CMatrix>,
    pub reduced: Vec<CMatrix>,
    pub observables: Vec<ObservableSeries>,
    /// Largest top-Fock population over modes.
    pub top_fock: Vec<f64>,
    /// `|Tr ρ − 1|`
    pub trace_error: Vec<f64>,
    /// Max-abs entry of `ρ − ρ†`.
    pub hermiticity: Vec<f64>,
    pub kind: GeneratorKind,
    pub frame: Frame,
    pub step: f64,
}

impl EvolutionResult {
    pub fn observable(&self, name: &str) -> Option<&[Complex64]> {
        self.observables.iter().find(|o| o.name == name).map(|o| o.values.as_slice())
    }

    /// `⟨n|ρ_S|n⟩` over time.
    pub fn population(&self, level: usize) -> Vec<f64> {
        self.reduced.iter().map(|r| r[(level, level)].re).collect()
    }
}

/// Step size used by [`evolve`] for a given generator and options.
pub fn step_cap(gen: &Generator, opts: &EvolveOptions) -> f64 {
    let factor = opts.step_factor.min(STEP_FACTOR);
    let mut h = if gen.norm_estimate() > 0.0 { factor / gen.norm_estimate() } else { f64::INFINITY };
    if let Some(m) = opts.max_step {
        h = h.min(m);
    }
    h
}

fn validate_initial(rho0: &CMatrix, d: usize) -> Result<()> {
    if rho0.shape() != (d, d) {
        return Err(Error::DimensionMismatch { expected: d, found: rho0.nrows() });
    }
    let tr = trace(rho0);
    if (tr - 1.0).norm() > 1e-10 {
        return Err(Error::Domain(format!("initial state has trace {tr}")));
    }
    let dev = hermiticity_deviation(rho0);
    if dev > 1e-10 {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(())
}

/// `y += a x`
fn axpy(y: &mut CMatrix, a: Complex64, x: &CMatrix) {
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += a * xi;
    }
}

fn rk4_step(gen: &Generator, t: f64, h: f64, rho: &mut CMatrix, k: &mut [CMatrix; 4], tmp: &mut CMatrix) {
    let hc = c64(h, 0.0);
    let half = c64(0.5 * h, 0.0);
    gen.apply_into(t, rho, &mut k[0]);
    tmp.copy_from(rho);
    axpy(tmp, half, &k[0]);
    gen.apply_into(t + 0.5 * h, tmp, &mut k[1]);
    tmp.copy_from(rho);
    axpy(tmp, half, &k[1]);
    gen.apply_into(t + 0.5 * h, tmp, &mut k[2]);
    tmp.copy_from(rho);
    axpy(tmp, hc, &k[2]);
    gen.apply_into(t + h, tmp, &mut k[3]);
    let sixth = c64(h / 6.0, 0.0);
    let third = c64(h / 3.0, 0.0);
    axpy(rho, sixth, &k[0]);
    axpy(rho, third, &k[1]);
    axpy(rho, third, &k[2]);
    axpy(rho, sixth, &k[3]);
}

/// Integrates `dρ/dt = L(t)[ρ]` from a Schrödinger-frame `rho0` with
/// fixed-step RK4, recording snapshots at every grid time.
pub fn evolve(gen: &Generator, rho0: &CMatrix, grid: &TimeGrid, opts: &EvolveOptions) -> Result<EvolutionResult> {
    let d = gen.dim();
    validate_initial(rho0, d)?;
    let obs: Vec<CMatrix> = opts
        .observables
        .iter()
        .map(|o| o.matrix(gen.layout()))
        .collect::<Result<_>>()?;
    let h_cap = step_cap(gen, opts);
    let mut res = EvolutionResult {
        times: Vec::with_capacity(grid.len()),
        states: Vec::new(),
        reduced: Vec::with_capacity(grid.len()),
        observables: opts
            .observables
            .iter()
            .map(|o| ObservableSeries { name: o.name.clone(), values: Vec::with_capacity(grid.len()) })
            .collect(),
        top_fock: Vec::with_capacity(grid.len()),
        trace_error: Vec::with_capacity(grid.len()),
        hermiticity: Vec::with_capacity(grid.len()),
        kind: gen.kind(),
        frame: gen.frame(),
        step: 0.0,
    };

    let mut rho = gen.to_native(rho0, 0.0);
    let mut k = [
        CMatrix::zeros(d, d),
        CMatrix::zeros(d, d),
        CMatrix::zeros(d, d),
        CMatrix::zeros(d, d),
    ];
    let mut tmp = CMatrix::zeros(d, d);
    let times = grid.times();
    record(gen, &rho, times[0], &obs, opts, &mut res)?;
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let interval = t1 - t0;
        let n = (interval / h_cap).ceil().max(1.0);
        if !n.is_finite() || n > 1e9 {
            return Err(Error::StepUnderflow { step: h_cap, interval });
        }
        let n = n as usize;
        let h = interval / n as f64;
        res.step = res.step.max(h);
        for s in 0..n {
            rk4_step(gen, t0 + s as f64 * h, h, &mut rho, &mut k, &mut tmp);
        }
        record(gen, &rho, t1, &obs, opts, &mut res)?;
    }
    Ok(res)
}

fn record(
    gen: &Generator,
    native: &CMatrix,
    t: f64,
    obs: &[CMatrix],
    opts: &EvolveOptions,
    res: &mut EvolutionResult,
) -> Result<()> {
    let rho = gen.to_schrodinger(native, t);
    let layout = gen.layout();
    let tops = top_fock_populations(&rho, layout)?;
    let (top_mode, top) = tops
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (l, p)| if p > acc.1 { (l, p) } else { acc });
    let trace_err = (trace(&rho) - 1.0).norm();
    let herm = hermiticity_deviation(&rho);

    res.times.push(t);
    res.reduced.push(partial_trace_modes(&rho, layout)?);
    for (series, a) in res.observables.iter_mut().zip(obs) {
        series.values.push(expectation(a, &rho));
    }
    res.top_fock.push(top.max(0.0));
    res.trace_error.push(trace_err);
    res.hermiticity.push(herm);
    if opts.store_states {
        res.states.push(rho.clone());
    }

    if let Some(limit) = opts.guard {
        if top > limit {
            return Err(Error::TruncationGuard {
                time: t,
                mode: top_mode,
                population: top,
                limit,
                partial: Box::new(res.clone()),
            });
        }
    }
    if opts.check_invariants && gen.kind().is_lindblad() {
        if trace_err > INVARIANT_TOL {
            return Err(Error::InvariantViolation { time: t, what: "trace error".into(), value: trace_err });
        }
        if herm > INVARIANT_TOL {
            return Err(Error::InvariantViolation { time: t, what: "hermiticity deviation".into(), value: herm });
        }
        let min_eig = min_eigenvalue_hermitian(&rho);
        if min_eig < -INVARIANT_TOL {
            return Err(Error::InvariantViolation { time: t, what: "minimum eigenvalue".into(), value: min_eig });
        }
    }
    Ok(())
}

/// Largest entrywise deviation between the reduced states produced by two
/// generators from the same initial state.
pub fn equivalence_check(
    a: &Generator,
    b: &Generator,
    rho0: &CMatrix,
    grid: &TimeGrid,
    opts: &EvolveOptions,
) -> Result<f64> {
    if a.layout().system_dim() != b.layout().system_dim() {
        return Err(Error::DimensionMismatch {
            expected: a.layout().system_dim(),
            found: b.layout().system_dim(),
        });
    }
    let ra = evolve(a, rho0, grid, opts)?;
    let rb = evolve(b, rho0, grid, opts)?;
    Ok(ra
        .reduced
        .iter()
        .zip(&rb.reduced)
        .map(|(x, y)| max_abs_diff(x, y))
        .fold(0.0, f64::max))
}

/// `|ψ⟩⟨ψ|` from a state vector.
pub fn pure_state(psi: &CVector) -> CMatrix {
    psi * psi.adjoint()
}

/// Time-independent `H_{S,0}` diagonal on the full space, in the order of
/// the layout's basis.
pub fn free_hamiltonian(gen: &Generator) -> CMatrix {
    let diag: Vec<Complex64> = gen.free_energies().iter().map(|&e| c64(e, 0.0)).collect();
    CMatrix::from_diagonal(&DVector::from_vec(diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::mapping::build_discrete_modes;
    use crate::spectral::LorentzianSum;
    use proptest::prelude::*;

    fn tls_lorentzian(omega: f64, lambda: f64, n_max: usize, frame: Frame) -> GeneratorSpec {
        let poles = LorentzianSum::single(1.0, lambda).unwrap().to_poles().unwrap();
        let modes = build_discrete_modes(&poles, &[omega]).unwrap();
        GeneratorSpec {
            kind: GeneratorKind::LindbladDirect,
            system: SystemSpec::two_level(1.0, omega).unwrap(),
            modes: ModeModel::Discrete(modes),
            layout: SpaceLayout::uniform(2, 1, n_max).unwrap(),
            frame,
        }
    }

    fn random_matrix(d: usize, vals: &[(f64, f64)]) -> CMatrix {
        CMatrix::from_fn(d, d, |i, j| {
            let (a, b) = vals[(i * d + j) % vals.len()];
            c64(a, b)
        })
    }

    #[test]
    fn direct_rejects_complex_couplings() {
        let poles = LorentzianSum::band_gap(2.0, 1.0, 2.0, 1.0, 0.0).unwrap().to_poles().unwrap();
        let modes = build_discrete_modes(&poles, &[1.0]).unwrap();
        let spec = GeneratorSpec {
            kind: GeneratorKind::LindbladDirect,
            system: SystemSpec::two_level(1.0, 1.0).unwrap(),
            modes: ModeModel::Discrete(modes),
            layout: SpaceLayout::uniform(2, 2, 1).unwrap(),
            frame: Frame::Schrodinger,
        };
        assert!(matches!(build_lindblad_direct(&spec), Err(Error::ComplexCouplings)));
    }

    #[test]
    fn vacuum_is_stationary() {
        let gen = build(&tls_lorentzian(1.0, 4.0, 2, Frame::Schrodinger)).unwrap();
        let rho0 = gen.layout().basis_projector(0, &[0]);
        assert_eq!(max_abs(&gen.apply(0.0, &rho0)), 0.0);
        let res = evolve(&gen, &rho0, &TimeGrid::uniform(2.0, 4).unwrap(), &EvolveOptions::default()).unwrap();
        for r in &res.reduced {
            assert!((r[(0, 0)].re - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_generator_leaves_state() {
        // No transitions and zero mode frequency: L = 0 except damping of an
        // empty mode.
        let system = SystemSpec::new(vec![0.0, 0.0], vec![], vec![]).unwrap();
        let poles = LorentzianSum::single(0.0, 1.0).unwrap().to_poles().unwrap();
        let modes = build_discrete_modes(&poles, &[]).unwrap();
        let spec = GeneratorSpec {
            kind: GeneratorKind::LindbladDirect,
            system,
            modes: ModeModel::Discrete(modes),
            layout: SpaceLayout::uniform(2, 1, 1).unwrap(),
            frame: Frame::Schrodinger,
        };
        let gen = build(&spec).unwrap();
        let layout = gen.layout().clone();
        let rho0 = (layout.basis_projector(0, &[0]) + layout.basis_projector(1, &[0])) * c64(0.5, 0.0);
        let res = evolve(&gen, &rho0, &TimeGrid::uniform(3.0, 3).unwrap(), &EvolveOptions { store_states: true, ..Default::default() }).unwrap();
        for s in &res.states {
            assert_eq!(max_abs_diff(s, &rho0), 0.0);
        }
    }

    #[test]
    fn pathological_reduces_to_direct_for_real_couplings() {
        let spec = tls_lorentzian(1.0, 4.0, 2, Frame::Schrodinger);
        let direct = build_lindblad_direct(&spec).unwrap();
        let path = build_pathological(&spec).unwrap();
        let diff = max_abs_diff(&direct.superoperator_matrix(0.0), &path.superoperator_matrix(0.0));
        assert!(diff <= 1e-12, "{diff}");
    }

    #[test]
    fn interaction_frame_matches_schrodinger() {
        let s = build(&tls_lorentzian(1.0, 4.0, 2, Frame::Schrodinger)).unwrap();
        let i = build(&tls_lorentzian(1.0, 4.0, 2, Frame::Interaction)).unwrap();
        assert!(i.is_time_dependent() || i.norm_estimate() > 0.0);
        let rho0 = s.layout().basis_projector(1, &[0]);
        let grid = TimeGrid::uniform(2.5, 25).unwrap();
        let dev = equivalence_check(&s, &i, &rho0, &grid, &EvolveOptions::default()).unwrap();
        assert!(dev < 1e-8, "{dev}");
    }

    #[test]
    fn guard_trips_on_small_cutoff() {
        let gen = build(&tls_lorentzian(1.0, 4.0, 1, Frame::Schrodinger)).unwrap();
        let rho0 = gen.layout().basis_projector(1, &[0]);
        match evolve(&gen, &rho0, &TimeGrid::uniform(1.0, 10).unwrap(), &EvolveOptions::default()) {
            Err(Error::TruncationGuard { partial, mode, .. }) => {
                assert_eq!(mode, 0);
                assert!(partial.times.len() >= 2);
            }
            other => panic!("expected guard trip, got {:?}", other.map(|r| r.times.len())),
        }
    }

    #[test]
    fn drive_produces_rabi_flopping() {
        // Resonant σ_x drive on an uncoupled TLS, in both frames.
        let sx = CMatrix::from_row_slice(2, 2, &[ZERO, c64(1.0, 0.0), c64(1.0, 0.0), ZERO]);
        let drive = crate::hilbert::Drive { amplitude: sx * c64(0.2, 0.0), frequency: 1.0, phase: 0.0 };
        let system = SystemSpec::new(vec![0.0, 1.0], vec![], vec![drive]).unwrap();
        let poles = LorentzianSum::single(0.0, 1.0).unwrap().to_poles().unwrap();
        let modes = build_discrete_modes(&poles, &[]).unwrap();
        let mk = |frame| {
            build(&GeneratorSpec {
                kind: GeneratorKind::LindbladDirect,
                system: system.clone(),
                modes: ModeModel::Discrete(modes.clone()),
                layout: SpaceLayout::uniform(2, 1, 1).unwrap(),
                frame,
            })
            .unwrap()
        };
        let (s, i) = (mk(Frame::Schrodinger), mk(Frame::Interaction));
        let rho0 = s.layout().basis_projector(0, &[0]);
        let grid = TimeGrid::uniform(10.0, 20).unwrap();
        let dev = equivalence_check(&s, &i, &rho0, &grid, &EvolveOptions::default()).unwrap();
        assert!(dev < 1e-8, "{dev}");
        let res = evolve(&s, &rho0, &grid, &EvolveOptions::default()).unwrap();
        assert!(res.population(1).iter().cloned().fold(0.0, f64::max) > 0.5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn trace_and_hermiticity_of_generator(vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 36)) {
            let poles = LorentzianSum::band_gap(2.0, 1.0, 2.0, 1.0, 0.0).unwrap().to_poles().unwrap();
            let modes = build_discrete_modes(&poles, &[1.0]).unwrap();
            let reg = crate::mapping::two_mode_regularize(&modes).unwrap();
            let system = SystemSpec::two_level(0.5, 1.0).unwrap();
            let layout = SpaceLayout::uniform(2, 2, 2).unwrap();
            let gens = [
                build_pathological(&GeneratorSpec { kind: GeneratorKind::Pathological, system: system.clone(), modes: ModeModel::Discrete(modes.clone()), layout: layout.clone(), frame: Frame::Schrodinger }).unwrap(),
                build_lindblad_regularized(&GeneratorSpec { kind: GeneratorKind::LindbladRegularized, system: system.clone(), modes: ModeModel::Regularized(reg), layout: layout.clone(), frame: Frame::Schrodinger }).unwrap(),
                build(&tls_lorentzian(1.0, 4.0, 2, Frame::Schrodinger)).unwrap(),
            ];
            for g in &gens {
                let rho = random_matrix(g.dim(), &vals);
                let l = g.apply(0.3, &rho);
                let scale = rho.norm();
                prop_assert!(trace(&l).norm() < 1e-12 * scale);
                if g.kind().is_lindblad() {
                    let lhs = l.adjoint();
                    let rhs = g.apply(0.3, &rho.adjoint());
                    prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-12 * scale);
                }
            }
        }
    }
}

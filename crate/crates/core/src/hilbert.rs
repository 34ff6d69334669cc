//! Operators on the truncated system ⊗ modes space.
//!
//! Basis ordering is system first, then modes in index order, with the last
//! mode varying fastest. A basis index is therefore
//! `s · Π_l (n_l+1) + n_1 · Π_{l>1}(n_l+1) + … + n_L`.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c64, hermiticity_deviation, kron, CMatrix, CVector, ONE, ZERO};

/// Tolerance used when matching a transition frequency to level gaps.
pub const GAP_TOL: f64 = 1e-9;
pub const HERMITIAN_TOL: f64 = 1e-12;

/// One system-bath coupling channel: observable `O_j`, transition frequency
/// `ω_j` and global strength `Ω_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observable: CMatrix,
    pub frequency: f64,
    pub strength: f64,
}

/// A Hermitian drive `A cos(νt + φ)` added to the system Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct Drive {
    pub amplitude: CMatrix,
    pub frequency: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    energies: Vec<f64>,
    transitions: Vec<Transition>,
    drives: Vec<Drive>,
}

impl SystemSpec {
    pub fn new(energies: Vec<f64>, transitions: Vec<Transition>, drives: Vec<Drive>) -> Result<Self> {
        let d = energies.len();
        if d == 0 {
            return Err(Error::Structural("system needs at least one level".into()));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::Domain("level energies must be finite".into()));
        }
        for t in &transitions {
            if t.observable.shape() != (d, d) {
                return Err(Error::DimensionMismatch { expected: d, found: t.observable.nrows() });
            }
            let dev = hermiticity_deviation(&t.observable);
            if dev > HERMITIAN_TOL {
                return Err(Error::NotHermitian { deviation: dev });
            }
            if !(t.strength > 0.0) {
                return Err(Error::Domain(format!("coupling strength {} must be > 0", t.strength)));
            }
            if !(t.frequency > 0.0) {
                return Err(Error::Domain(format!("transition frequency {} must be > 0", t.frequency)));
            }
        }
        for dr in &drives {
            if dr.amplitude.shape() != (d, d) {
                return Err(Error::DimensionMismatch { expected: d, found: dr.amplitude.nrows() });
            }
            let dev = hermiticity_deviation(&dr.amplitude);
            if dev > HERMITIAN_TOL {
                return Err(Error::NotHermitian { deviation: dev });
            }
            if !dr.frequency.is_finite() || dr.frequency < 0.0 {
                return Err(Error::Domain(format!("drive frequency {} must be >= 0", dr.frequency)));
            }
        }
        let spec = Self { energies, transitions, drives };
        for j in 0..spec.transitions.len() {
            eigenoperator(&spec, j)?;
        }
        Ok(spec)
    }

    /// Two-level system with `ε = {0, ω₀}` (index 0 = ground, 1 = excited)
    /// coupled through `σ_x` at frequency `ω₀`.
    pub fn two_level(omega0: f64, strength: f64) -> Result<Self> {
        let sx = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        Self::new(
            vec![0.0, omega0],
            vec![Transition { observable: sx, frequency: omega0, strength }],
            Vec::new(),
        )
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn drives(&self) -> &[Drive] {
        &self.drives
    }

    pub fn strengths(&self) -> Vec<f64> {
        self.transitions.iter().map(|t| t.strength).collect()
    }

    /// `H_{S,0} = Σ ε_n |n⟩⟨n|`
    pub fn h0(&self) -> CMatrix {
        let diag: Vec<Complex64> = self.energies.iter().map(|&e| c64(e, 0.0)).collect();
        CMatrix::from_diagonal(&DVector::from_vec(diag))
    }

    /// Drive Hamiltonian evaluated at time `t`.
    pub fn drive_at(&self, t: f64) -> CMatrix {
        let d = self.dim();
        self.drives.iter().fold(CMatrix::zeros(d, d), |acc, dr| {
            acc + &dr.amplitude * c64((dr.frequency * t + dr.phase).cos(), 0.0)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorTag {
    Hermitian,
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub matrix: CMatrix,
    pub tag: OperatorTag,
}

impl OperatorMatrix {
    pub fn general(matrix: CMatrix) -> Self {
        Self { matrix, tag: OperatorTag::General }
    }

    pub fn hermitian(matrix: CMatrix) -> Self {
        Self { matrix, tag: OperatorTag::Hermitian }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Jump operator `c_j = Σ_{ε_m − ε_n = ω_j} Π_n O_j Π_m`, which lowers the
/// system energy by `ω_j`.
pub fn eigenoperator(spec: &SystemSpec, j: usize) -> Result<OperatorMatrix> {
    let t = spec
        .transitions
        .get(j)
        .ok_or(Error::DimensionMismatch { expected: spec.transitions.len(), found: j })?;
    let e = &spec.energies;
    let d = e.len();
    let scale = t.frequency.abs().max(1.0);
    let mut c = CMatrix::zeros(d, d);
    let mut matched = false;
    for n in 0..d {
        for m in 0..d {
            if (e[m] - e[n] - t.frequency).abs() <= GAP_TOL * scale {
                c[(n, m)] = t.observable[(n, m)];
                matched = true;
            }
        }
    }
    if !matched {
        return Err(Error::EmptyOperator { frequency: t.frequency });
    }
    Ok(OperatorMatrix::general(c))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpaceLayout {
    d_s: usize,
    n_max: Vec<usize>,
}

impl SpaceLayout {
    pub fn new(d_s: usize, n_max: Vec<usize>) -> Result<Self> {
        if d_s == 0 {
            return Err(Error::Structural("system dimension must be >= 1".into()));
        }
        if let Some(l) = n_max.iter().position(|&n| n < 1) {
            return Err(Error::Structural(format!("mode {l} needs a Fock cutoff >= 1")));
        }
        Ok(Self { d_s, n_max })
    }

    /// Same cutoff for every mode.
    pub fn uniform(d_s: usize, n_modes: usize, n_max: usize) -> Result<Self> {
        Self::new(d_s, vec![n_max; n_modes])
    }

    pub fn system_dim(&self) -> usize {
        self.d_s
    }

    pub fn n_modes(&self) -> usize {
        self.n_max.len()
    }

    pub fn cutoff(&self, l: usize) -> usize {
        self.n_max[l]
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.n_max
    }

    pub fn modes_dim(&self) -> usize {
        self.n_max.iter().map(|n| n + 1).product()
    }

    pub fn dim(&self) -> usize {
        self.d_s * self.modes_dim()
    }

    /// Basis index of `|s⟩ ⊗ |n_1 … n_L⟩`.
    pub fn index(&self, s: usize, occupations: &[usize]) -> usize {
        assert_eq!(occupations.len(), self.n_modes());
        occupations
            .iter()
            .zip(&self.n_max)
            .fold(s, |acc, (&n, &cap)| {
                assert!(n <= cap, "occupation {n} exceeds cutoff {cap}");
                acc * (cap + 1) + n
            })
    }

    /// Inverse of [`index`](Self::index).
    pub fn decompose(&self, mut index: usize) -> (usize, Vec<usize>) {
        let mut occ = vec![0; self.n_modes()];
        for l in (0..self.n_modes()).rev() {
            let base = self.n_max[l] + 1;
            occ[l] = index % base;
            index /= base;
        }
        (index, occ)
    }

    pub fn basis_state(&self, s: usize, occupations: &[usize]) -> CVector {
        let mut v = CVector::zeros(self.dim());
        v[self.index(s, occupations)] = ONE;
        v
    }

    /// `|ψ⟩⟨ψ|` for a basis state.
    pub fn basis_projector(&self, s: usize, occupations: &[usize]) -> CMatrix {
        let v = self.basis_state(s, occupations);
        &v * v.adjoint()
    }

    fn check(&self, m: &CMatrix) -> Result<()> {
        if m.shape() != (self.dim(), self.dim()) {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: m.nrows() });
        }
        Ok(())
    }
}

fn ladder(n_max: usize) -> CMatrix {
    let mut a = CMatrix::zeros(n_max + 1, n_max + 1);
    for n in 1..=n_max {
        a[(n - 1, n)] = c64((n as f64).sqrt(), 0.0);
    }
    a
}

/// Annihilation and creation operators of mode `l` on the full space.
pub fn mode_ops(layout: &SpaceLayout, l: usize) -> (OperatorMatrix, OperatorMatrix) {
    assert!(l < layout.n_modes(), "mode index {l} out of range");
    let mut b = CMatrix::identity(layout.system_dim(), layout.system_dim());
    for (k, &cap) in layout.cutoffs().iter().enumerate() {
        let factor = if k == l { ladder(cap) } else { CMatrix::identity(cap + 1, cap + 1) };
        b = kron(&b, &factor);
    }
    let bd = b.adjoint();
    (OperatorMatrix::general(b), OperatorMatrix::general(bd))
}

/// `b†_l b_l` on the full space.
pub fn number_op(layout: &SpaceLayout, l: usize) -> OperatorMatrix {
    let (b, bd) = mode_ops(layout, l);
    OperatorMatrix::hermitian(bd.matrix * b.matrix)
}

/// `A_S ⊗ 1_M`
pub fn embed_system(layout: &SpaceLayout, a: &CMatrix) -> CMatrix {
    assert_eq!(a.shape(), (layout.system_dim(), layout.system_dim()));
    let m = layout.modes_dim();
    kron(a, &CMatrix::identity(m, m))
}

/// `Tr_M[ρ]`
pub fn partial_trace_modes(rho: &CMatrix, layout: &SpaceLayout) -> Result<CMatrix> {
    layout.check(rho)?;
    let ds = layout.system_dim();
    let dm = layout.modes_dim();
    Ok(CMatrix::from_fn(ds, ds, |a, b| (0..dm).map(|k| rho[(a * dm + k, b * dm + k)]).sum()))
}

/// Population of the highest Fock level of each mode.
pub fn top_fock_populations(rho: &CMatrix, layout: &SpaceLayout) -> Result<Vec<f64>> {
    layout.check(rho)?;
    let mut pops = vec![0.0; layout.n_modes()];
    for i in 0..layout.dim() {
        let (_, occ) = layout.decompose(i);
        let p = rho[(i, i)].re;
        for (l, &n) in occ.iter().enumerate() {
            if n == layout.cutoff(l) {
                pops[l] += p;
            }
        }
    }
    Ok(pops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, max_abs, max_abs_diff, trace};
    use proptest::prelude::*;

    fn ones(d: usize) -> CMatrix {
        CMatrix::from_element(d, d, ONE)
    }

    #[test]
    fn two_level_jump_is_lowering() {
        let spec = SystemSpec::two_level(1.5, 1.0).unwrap();
        let c = eigenoperator(&spec, 0).unwrap().matrix;
        let sm = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert_eq!(c, sm);
    }

    #[test]
    fn ladder_and_degenerate_gaps() {
        let ladder3 = SystemSpec::new(
            vec![0.0, 1.0, 2.0],
            vec![Transition { observable: ones(3), frequency: 1.0, strength: 1.0 }],
            vec![],
        )
        .unwrap();
        let c = eigenoperator(&ladder3, 0).unwrap().matrix;
        let mut want = CMatrix::zeros(3, 3);
        want[(0, 1)] = ONE;
        want[(1, 2)] = ONE;
        assert_eq!(c, want);

        let degen = SystemSpec::new(
            vec![0.0, 1.0, 1.0],
            vec![Transition { observable: ones(3), frequency: 1.0, strength: 1.0 }],
            vec![],
        )
        .unwrap();
        let c = eigenoperator(&degen, 0).unwrap().matrix;
        let mut want = CMatrix::zeros(3, 3);
        want[(0, 1)] = ONE;
        want[(0, 2)] = ONE;
        assert_eq!(c, want);
    }

    #[test]
    fn unmatched_frequency_is_rejected() {
        let err = SystemSpec::new(
            vec![0.0, 1.0],
            vec![Transition { observable: ones(2), frequency: 0.7, strength: 1.0 }],
            vec![],
        );
        assert!(matches!(err, Err(Error::EmptyOperator { .. })));
        let mut o = ones(2);
        o[(0, 1)] = c64(1.0, 0.5);
        let err = SystemSpec::new(
            vec![0.0, 1.0],
            vec![Transition { observable: o, frequency: 1.0, strength: 1.0 }],
            vec![],
        );
        assert!(matches!(err, Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn single_mode_ladder() {
        let layout = SpaceLayout::new(1, vec![1]).unwrap();
        let (b, bd) = mode_ops(&layout, 0);
        assert_eq!(b.matrix, CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]));
        assert_eq!(bd.matrix, b.matrix.adjoint());
    }

    #[test]
    fn mode_commutators() {
        let layout = SpaceLayout::new(2, vec![3, 2]).unwrap();
        let (b0, bd0) = mode_ops(&layout, 0);
        let (b1, bd1) = mode_ops(&layout, 1);
        assert_eq!(max_abs(&commutator(&b0.matrix, &bd1.matrix)), 0.0);
        assert_eq!(max_abs(&commutator(&b0.matrix, &b1.matrix)), 0.0);
        // [b, b†] = 1 away from the top Fock level.
        let comm = commutator(&b0.matrix, &bd0.matrix);
        for i in 0..layout.dim() {
            let (_, occ) = layout.decompose(i);
            let want = if occ[0] == 3 { -3.0 } else { 1.0 };
            assert!((comm[(i, i)] - c64(want, 0.0)).norm() < 1e-14);
        }
        let n = number_op(&layout, 1).matrix;
        for i in 0..layout.dim() {
            let (_, occ) = layout.decompose(i);
            assert!((n[(i, i)].re - occ[1] as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn index_round_trip() {
        let layout = SpaceLayout::new(3, vec![2, 1, 3]).unwrap();
        for i in 0..layout.dim() {
            let (s, occ) = layout.decompose(i);
            assert_eq!(layout.index(s, &occ), i);
        }
        assert_eq!(layout.index(1, &[0, 0, 0]), 24);
        assert_eq!(layout.index(0, &[0, 0, 1]), 1);
    }

    #[test]
    fn partial_trace_examples() {
        let layout = SpaceLayout::new(2, vec![2, 1]).unwrap();
        let rho_s = CMatrix::from_row_slice(2, 2, &[c64(0.7, 0.0), c64(0.1, 0.2), c64(0.1, -0.2), c64(0.3, 0.0)]);
        let vac = layout.basis_projector(0, &[0, 0]);
        let vac_m = partial_trace_modes(&vac, &layout).unwrap();
        assert_eq!(vac_m[(0, 0)], ONE);
        let dm = layout.modes_dim();
        let mut m_vac = CMatrix::zeros(dm, dm);
        m_vac[(0, 0)] = ONE;
        let product = kron(&rho_s, &m_vac);
        assert_eq!(partial_trace_modes(&product, &layout).unwrap(), rho_s);

        let d = layout.dim();
        let mixed = CMatrix::identity(d, d) / c64(d as f64, 0.0);
        let reduced = partial_trace_modes(&mixed, &layout).unwrap();
        assert!(max_abs_diff(&reduced, &(CMatrix::identity(2, 2) * c64(0.5, 0.0))) < 1e-15);
        assert!(partial_trace_modes(&CMatrix::zeros(3, 3), &layout).is_err());
    }

    fn random_state(d: usize, entries: &[(f64, f64)]) -> CMatrix {
        let a = CMatrix::from_fn(d, d, |i, j| {
            let (re, im) = entries[(i * d + j) % entries.len()];
            c64(re, im)
        });
        let rho = &a * a.adjoint();
        let tr = trace(&rho);
        rho / tr
    }

    /// Partial trace by explicit multi-index contraction.
    fn trace_out_by_loops(rho: &CMatrix, layout: &SpaceLayout) -> CMatrix {
        let ds = layout.system_dim();
        let mut out = CMatrix::zeros(ds, ds);
        for i in 0..layout.dim() {
            for k in 0..layout.dim() {
                let (a, occ_i) = layout.decompose(i);
                let (b, occ_k) = layout.decompose(k);
                if occ_i == occ_k {
                    out[(a, b)] += rho[(i, k)];
                }
            }
        }
        out
    }

    proptest! {
        #[test]
        fn partial_trace_matches_contraction(entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8..40)) {
            let layout = SpaceLayout::new(2, vec![2, 1]).unwrap();
            let rho = random_state(layout.dim(), &entries);
            let reduced = partial_trace_modes(&rho, &layout).unwrap();
            prop_assert!(max_abs_diff(&reduced, &trace_out_by_loops(&rho, &layout)) < 1e-14);
            prop_assert!((trace(&reduced) - ONE).norm() < 1e-12);
        }

        #[test]
        fn embedding_commutes_with_partial_trace(
            entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8..40),
            a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9),
        ) {
            let layout = SpaceLayout::new(3, vec![1, 2]).unwrap();
            let rho = random_state(layout.dim(), &entries);
            let a_s = CMatrix::from_fn(3, 3, |i, j| c64(a[3 * i + j].0, a[3 * i + j].1));
            let lhs = partial_trace_modes(&(embed_system(&layout, &a_s) * &rho), &layout).unwrap();
            let rhs = &a_s * partial_trace_modes(&rho, &layout).unwrap();
            prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
        }

        #[test]
        fn eigenoperator_relation(
            levels in prop::collection::vec(0usize..4, 2..5),
            obs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 25),
        ) {
            // Integer energy ladders guarantee coincident gaps.
            let mut energies: Vec<f64> = levels.iter().map(|&n| n as f64 * 0.75).collect();
            energies.sort_by(f64::total_cmp);
            let d = energies.len();
            let Some(gap) = (0..d).flat_map(|m| (0..d).map(move |n| (m, n)))
                .map(|(m, n)| energies[m] - energies[n])
                .find(|&g| g > 0.0) else { return Ok(()); };
            let raw = CMatrix::from_fn(d, d, |i, j| c64(obs[5 * i + j].0, obs[5 * i + j].1));
            let o = (&raw + raw.adjoint()) * c64(0.5, 0.0);
            let spec = SystemSpec::new(
                energies,
                vec![Transition { observable: o, frequency: gap, strength: 1.0 }],
                vec![],
            ).unwrap();
            let c = eigenoperator(&spec, 0).unwrap().matrix;
            let resid = commutator(&spec.h0(), &c) + &c * c64(gap, 0.0);
            prop_assert!(max_abs(&resid) <= 1e-12 * max_abs(&c).max(1e-300));
        }
    }
}

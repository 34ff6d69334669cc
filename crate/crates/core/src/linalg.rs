//! Dense and sparse complex matrix helpers shared by the operator and
//! integration code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Kronecker product `a ⊗ b` with `a` as the slow (outer) index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for q in 0..bc {
                for p in 0..br {
                    out[(i * br + p, j * bc + q)] = aij * b[(p, q)];
                }
            }
        }
    }
    out
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Max-abs entry of `m − m†`.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for j in 0..n {
        for i in 0..=j {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue_hermitian(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()) * c64(0.5, 0.0);
    h.symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |acc, &x| acc.min(x))
}

/// Upper bound on the spectral norm, `sqrt(‖A‖₁‖A‖∞)`.
pub fn norm_bound(m: &CMatrix) -> f64 {
    let col = (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let row = (0..m.nrows())
        .map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    (col * row).sqrt()
}

/// Coordinate-list sparse operator used for matrix-free superoperator
/// application. Entries are stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOp {
    pub fn from_dense(m: &CMatrix) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "sparse operators are square");
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v != ZERO {
                    entries.push((i, j, v));
                }
            }
        }
        Self { dim: m.nrows(), entries }
    }

    /// Builds an operator from `(row, col, value)` triples; duplicates add.
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        for (i, j, v) in entries {
            m[(i, j)] += v;
        }
        Self::from_dense(&m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `out += scale · self · rho`
    pub fn mul_left_acc(&self, rho: &CMatrix, scale: Complex64, out: &mut CMatrix) {
        let n = rho.ncols();
        for &(i, j, v) in &self.entries {
            let w = scale * v;
            for k in 0..n {
                out[(i, k)] += w * rho[(j, k)];
            }
        }
    }

    /// `out += scale · rho · self`
    pub fn mul_right_acc(&self, rho: &CMatrix, scale: Complex64, out: &mut CMatrix) {
        let n = rho.nrows();
        for &(j, k, v) in &self.entries {
            let w = scale * v;
            for i in 0..n {
                out[(i, k)] += w * rho[(i, j)];
            }
        }
    }

    /// `out += scale · self · rho · self†`
    pub fn sandwich_acc(&self, rho: &CMatrix, scale: Complex64, out: &mut CMatrix) {
        for &(i, j, v) in &self.entries {
            for &(k, l, w) in &self.entries {
                // (A ρ A†)_{ik} = Σ_{j,l} A_ij ρ_jl conj(A_kl)
                out[(i, k)] += scale * v * rho[(j, l)] * w.conj();
            }
        }
    }

    /// `out += scale · self · psi`
    pub fn mul_vec_acc(&self, psi: &CVector, scale: Complex64, out: &mut CVector) {
        for &(i, j, v) in &self.entries {
            out[i] += scale * v * psi[j];
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }
}

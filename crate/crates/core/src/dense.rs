//! Dense complex matrices on small qubit registers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::pauli::{BitString, PauliWord, Sign};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix whose dimension is a power of two.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    m: DMatrix<C64>,
}

impl DenseOperator {
    pub fn new(m: DMatrix<C64>) -> Self {
        assert!(m.is_square(), "operator must be square");
        assert!(m.nrows().is_power_of_two(), "dimension must be a power of two");
        Self { m }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(DMatrix::zeros(dim, dim))
    }

    pub fn from_real(rows: usize, data: &[f64]) -> Self {
        Self::new(DMatrix::from_row_iterator(
            rows,
            rows,
            data.iter().map(|&v| C64::new(v, 0.0)),
        ))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn num_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.m.adjoint())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.m.map(|v| v * s))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(&self.m + &other.m)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(&self.m - &other.m)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(&self.m * &other.m)
    }

    /// `self ⊗ other`, with `self` on the more significant qubits.
    pub fn kron(&self, other: &Self) -> Self {
        Self::new(self.m.kronecker(&other.m))
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let out = &self.m * DVector::from_column_slice(v);
        out.as_slice().to_vec()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m.norm()
    }

    /// Spectral norm via the singular values.
    pub fn operator_norm(&self) -> f64 {
        self.m
            .clone()
            .singular_values()
            .iter()
            .fold(0.0f64, |a, &s| a.max(s))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.m - self.m.adjoint()).camax() <= tol
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// Max-entry distance to the identity of `self²`.
    pub fn square_defect(&self) -> f64 {
        let sq = &self.m * &self.m;
        (sq - DMatrix::identity(self.dim(), self.dim())).camax()
    }

    /// Eigenvalues in ascending order with matching eigenvector columns.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, DMatrix<C64>)> {
        if !self.is_hermitian(1e-9) {
            return Err(Error::Invalid("operator is not Hermitian".into()));
        }
        let sym = (&self.m + self.m.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        Ok((values, vectors))
    }

    /// `f(self)` for Hermitian `self`, applied through the eigendecomposition.
    pub fn hermitian_map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let (values, vecs) = self.hermitian_eigen()?;
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            values.len(),
            values.iter().map(|&v| C64::new(f(v), 0.0)),
        ));
        Ok(Self::new(&vecs * d * vecs.adjoint()))
    }

    /// Square root of a positive semidefinite operator, with eigenvalues
    /// below zero (round-off) clamped to zero.
    pub fn psd_sqrt(&self) -> Result<Self> {
        let (values, _) = self.hermitian_eigen()?;
        if let Some(&min) = values.first() {
            if min < -1e-9 {
                return Err(Error::Invalid(format!(
                    "operator has negative eigenvalue {min}"
                )));
            }
        }
        self.hermitian_map(|v| if v <= 1e-12 { 0.0 } else { v.sqrt() })
    }

    /// Haar-random unitary on `num_qubits` qubits (QR of a Gaussian matrix
    /// with the phases of `R`'s diagonal absorbed).
    pub fn random_unitary<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Self {
        let d = 1usize << num_qubits;
        let g = DMatrix::<C64>::from_fn(d, d, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let qr = g.qr();
        let (mut q, r) = (qr.q(), qr.r());
        for c in 0..d {
            let diag = r[(c, c)];
            let phase = if diag.norm() > 0.0 { diag / diag.norm() } else { ONE };
            for row in 0..d {
                q[(row, c)] *= phase;
            }
        }
        Self::new(q)
    }

    /// Random observable `U D U†` with a random ±1 diagonal `D`.
    pub fn random_observable<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Self {
        let u = Self::random_unitary(num_qubits, rng);
        let d = 1usize << num_qubits;
        let diag = DMatrix::from_diagonal(&DVector::from_fn(d, |_, _| {
            if rng.gen::<bool>() {
                ONE
            } else {
                -ONE
            }
        }));
        Self::new(u.matrix() * diag * u.matrix().adjoint())
    }

    /// Coefficients `c` with `self = Σ c · X(x)Z(z)`, keyed by `(x, z)` masks.
    /// Entries below `tol` in magnitude are dropped.
    pub fn pauli_decompose(&self, tol: f64) -> Vec<(C64, PauliWord)> {
        let n = self.num_qubits();
        let dim = self.dim();
        let mut out = Vec::new();
        for x in 0..dim {
            for z in 0..dim {
                // Tr((X(x)Z(z))† M) = Σ_j conj(sign_j) M[j^x, j]
                let mut acc = ZERO;
                for j in 0..dim {
                    let s = if (j & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    acc += self.m[(j ^ x, j)] * s;
                }
                let c = acc / dim as f64;
                if c.norm() > tol {
                    let w = PauliWord::new(
                        BitString::new(n.max(1), x as u64).expect("fits"),
                        BitString::new(n.max(1), z as u64).expect("fits"),
                        Sign::Plus,
                    )
                    .expect("same length");
                    out.push((c, w));
                }
            }
        }
        out
    }
}

/// Precomputed index offsets for applying a `2^k`-dimensional operator to
/// `k` chosen qubits of an `N`-qubit state.
///
/// Qubit `q` is bit `N - 1 - q` of the amplitude index; the first target is
/// the most significant qubit of the local operator.
#[derive(Clone, Debug)]
pub struct LocalEmbedding {
    num_qubits: usize,
    offsets: Vec<usize>,
    target_mask: usize,
}

impl LocalEmbedding {
    pub fn new(num_qubits: usize, targets: &[usize]) -> Result<Self> {
        let mut seen = 0usize;
        for &t in targets {
            if t >= num_qubits {
                return Err(Error::Invalid(format!(
                    "target qubit {t} out of range for {num_qubits} qubits"
                )));
            }
            let bit = 1usize << (num_qubits - 1 - t);
            if seen & bit != 0 {
                return Err(Error::Invalid(format!("target qubit {t} repeated")));
            }
            seen |= bit;
        }
        let k = targets.len();
        let offsets = (0..1usize << k)
            .map(|local| {
                let mut off = 0usize;
                for (p, &t) in targets.iter().enumerate() {
                    if (local >> (k - 1 - p)) & 1 == 1 {
                        off |= 1usize << (num_qubits - 1 - t);
                    }
                }
                off
            })
            .collect();
        Ok(Self {
            num_qubits,
            offsets,
            target_mask: seen,
        })
    }

    pub fn local_dim(&self) -> usize {
        self.offsets.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Base indices with every target bit cleared, in increasing order.
    pub fn bases(&self) -> impl Iterator<Item = usize> + '_ {
        let dim = 1usize << self.num_qubits;
        (0..dim).filter(move |i| i & self.target_mask == 0)
    }

    /// `op` applied to `state` on the embedded qubits.
    pub fn apply(&self, op: &DenseOperator, state: &[C64]) -> Result<Vec<C64>> {
        if op.dim() != self.local_dim() {
            return Err(Error::LengthMismatch {
                left: op.dim(),
                right: self.local_dim(),
            });
        }
        if state.len() != 1usize << self.num_qubits {
            return Err(Error::LengthMismatch {
                left: state.len(),
                right: 1usize << self.num_qubits,
            });
        }
        let m = op.matrix();
        let d = self.local_dim();
        let mut out = vec![ZERO; state.len()];
        let mut local = vec![ZERO; d];
        for base in self.bases() {
            for (l, &off) in self.offsets.iter().enumerate() {
                local[l] = state[base | off];
            }
            for (row, &off) in self.offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (col, &v) in local.iter().enumerate() {
                    if v != ZERO {
                        acc += m[(row, col)] * v;
                    }
                }
                out[base | off] = acc;
            }
        }
        Ok(out)
    }
}

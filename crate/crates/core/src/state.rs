//! Dense statevectors with implicit Pauli action.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dense::{DenseOperator, LocalEmbedding, C64, ONE, ZERO};
use crate::error::{Error, Result};
use crate::pauli::{PauliWord, Sign};

/// Default ceiling on simulated qubits.
pub const SIM_LIMIT: usize = 21;

/// Normalized amplitude vector over `num_qubits` qubits.
///
/// Qubit `q` corresponds to bit `num_qubits - 1 - q` of the amplitude index,
/// so qubit 0 is the most significant tensor factor.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<C64>,
}

/// A Pauli word lifted to global index masks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlobalPauli {
    pub x: u64,
    pub z: u64,
    pub negative: bool,
}

impl GlobalPauli {
    /// Lift `word` acting on `targets` of an `num_qubits`-qubit system.
    pub fn lift(word: &PauliWord, targets: &[usize], num_qubits: usize) -> Result<Self> {
        if targets.len() != word.num_qubits() {
            return Err(Error::LengthMismatch {
                left: targets.len(),
                right: word.num_qubits(),
            });
        }
        let mut x = 0u64;
        let mut z = 0u64;
        let mut used = 0u64;
        for (p, &t) in targets.iter().enumerate() {
            if t >= num_qubits {
                return Err(Error::Invalid(format!("target qubit {t} out of range")));
            }
            let bit = 1u64 << (num_qubits - 1 - t);
            if used & bit != 0 {
                return Err(Error::Invalid(format!("target qubit {t} repeated")));
            }
            used |= bit;
            if word.x_mask().bit(p) {
                x |= bit;
            }
            if word.z_mask().bit(p) {
                z |= bit;
            }
        }
        Ok(Self {
            x,
            z,
            negative: word.sign() == Sign::Minus,
        })
    }

    /// Product `self · other` in the `X(x)Z(z)` normal form.
    pub fn mul(&self, other: &GlobalPauli) -> GlobalPauli {
        let swap = (self.z & other.x).count_ones() & 1 == 1;
        GlobalPauli {
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            negative: self.negative ^ other.negative ^ swap,
        }
    }

    pub fn sign_value(&self) -> f64 {
        if self.negative {
            -1.0
        } else {
            1.0
        }
    }
}

impl StateVector {
    /// Wraps amplitudes that must already have unit norm (within 1e-10).
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let num_qubits = dim_qubits(amps.len())?;
        let norm = norm_sqr(&amps).sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Invalid(format!("state norm {norm} is not 1")));
        }
        Ok(Self { num_qubits, amps })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(mut amps: Vec<C64>) -> Result<Self> {
        let num_qubits = dim_qubits(amps.len())?;
        let norm = norm_sqr(&amps).sqrt();
        if norm < 1e-300 {
            return Err(Error::Invalid("cannot normalize the zero vector".into()));
        }
        for a in amps.iter_mut() {
            *a /= norm;
        }
        Ok(Self { num_qubits, amps })
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_limit(num_qubits, SIM_LIMIT)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::Invalid(format!("basis index {index} >= {dim}")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { num_qubits, amps })
    }

    /// Haar-distributed random state.
    pub fn random<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Result<Self> {
        check_limit(num_qubits, SIM_LIMIT)?;
        let amps = (0..1usize << num_qubits)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::normalized(amps)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amps).sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        inner(&self.amps, &other.amps)
    }

    /// `self ⊗ other`.
    pub fn kron(&self, other: &StateVector) -> Result<StateVector> {
        check_limit(self.num_qubits + other.num_qubits, SIM_LIMIT)?;
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector {
            num_qubits: self.num_qubits + other.num_qubits,
            amps,
        })
    }

    /// Indices of the nonzero amplitudes.
    pub fn support(&self) -> Vec<usize> {
        self.amps
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != ZERO)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn apply_pauli(&self, word: &PauliWord, targets: &[usize]) -> Result<StateVector> {
        let g = GlobalPauli::lift(word, targets, self.num_qubits)?;
        Ok(StateVector {
            num_qubits: self.num_qubits,
            amps: apply_global_pauli(&g, &self.amps),
        })
    }

    /// `⟨ψ|P|ψ⟩` for a word on `targets`; complex when `P` is not Hermitian.
    pub fn pauli_expectation(&self, word: &PauliWord, targets: &[usize]) -> Result<C64> {
        let g = GlobalPauli::lift(word, targets, self.num_qubits)?;
        Ok(global_pauli_expectation(&g, &self.amps, None))
    }

    /// Raw (unnormalized) result of a dense operator on `targets`.
    pub fn apply_local(&self, op: &DenseOperator, targets: &[usize]) -> Result<Vec<C64>> {
        LocalEmbedding::new(self.num_qubits, targets)?.apply(op, &self.amps)
    }

    pub fn expectation(&self, obs: &BinaryObservable) -> Result<f64> {
        let v = match obs {
            BinaryObservable::Pauli { word, targets } => {
                if !word.is_hermitian() {
                    return Err(Error::Invalid(format!("{word} is not Hermitian")));
                }
                self.pauli_expectation(word, targets)?
            }
            BinaryObservable::Dense { op, targets } => {
                if !op.is_hermitian(1e-9) {
                    return Err(Error::Invalid("dense observable is not Hermitian".into()));
                }
                inner(&self.amps, &self.apply_local(op, targets)?)?
            }
        };
        if v.im.abs() > 1e-9 {
            return Err(Error::Invariant(format!(
                "expectation has imaginary part {}",
                v.im
            )));
        }
        Ok(v.re)
    }

    /// Reduced density matrix on `targets` (first target most significant).
    pub fn reduced_density(&self, targets: &[usize]) -> Result<DenseOperator> {
        let emb = LocalEmbedding::new(self.num_qubits, targets)?;
        let d = emb.local_dim();
        let mut rho = DMatrix::<C64>::zeros(d, d);
        for base in emb.bases() {
            for (i, &oi) in emb.offsets().iter().enumerate() {
                let a = self.amps[base | oi];
                if a == ZERO {
                    continue;
                }
                for (j, &oj) in emb.offsets().iter().enumerate() {
                    rho[(i, j)] += a * self.amps[base | oj].conj();
                }
            }
        }
        Ok(DenseOperator::new(rho))
    }

    /// A purification of `rho` on `2k` qubits: system first, environment second.
    pub fn purify(rho: &DenseOperator) -> Result<StateVector> {
        let (values, vecs) = rho.hermitian_eigen()?;
        let d = rho.dim();
        let mut amps = vec![ZERO; d * d];
        for (k, &lam) in values.iter().enumerate() {
            if lam <= 0.0 {
                continue;
            }
            let s = lam.sqrt();
            for sys in 0..d {
                amps[sys * d + k] = vecs[(sys, k)] * s;
            }
        }
        StateVector::normalized(amps)
    }

    /// JSON diagnostic dump: an array of `[re, im]` pairs.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.amps
                .iter()
                .map(|a| serde_json::json!([a.re, a.im]))
                .collect(),
        )
    }
}

/// Observable with ±1 outcomes realized on a qubit subset.
#[derive(Clone, Debug)]
pub enum BinaryObservable {
    Pauli { word: PauliWord, targets: Vec<usize> },
    Dense { op: DenseOperator, targets: Vec<usize> },
}

pub(crate) fn dim_qubits(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::Invalid(format!("dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

pub(crate) fn check_limit(num_qubits: usize, limit: usize) -> Result<()> {
    if num_qubits > limit {
        return Err(Error::OverLimit {
            what: "simulated qubits",
            size: num_qubits,
            limit,
        });
    }
    Ok(())
}

pub(crate) fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

pub(crate) fn inner(a: &[C64], b: &[C64]) -> Result<C64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x.conj() * y).sum())
}

#[inline]
fn parity_sign(v: u64) -> f64 {
    if v.count_ones() & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `sign · X(x)Z(z)` applied to raw amplitudes.
pub fn apply_global_pauli(g: &GlobalPauli, amps: &[C64]) -> Vec<C64> {
    let x = g.x as usize;
    let s = g.sign_value();
    let mut out = vec![ZERO; amps.len()];
    for (k, a) in amps.iter().enumerate() {
        if *a != ZERO {
            out[k ^ x] = a * (s * parity_sign(k as u64 & g.z));
        }
    }
    out
}

/// `⟨ψ|sign · X(x)Z(z)|ψ⟩`, iterating only over `support` when given.
pub fn global_pauli_expectation(g: &GlobalPauli, amps: &[C64], support: Option<&[usize]>) -> C64 {
    let x = g.x as usize;
    let z = g.z;
    let term = |k: usize| -> C64 {
        let src = amps[k ^ x];
        if src == ZERO {
            return ZERO;
        }
        amps[k].conj() * src * parity_sign((k ^ x) as u64 & z)
    };
    let acc: C64 = match support {
        Some(idx) => idx.iter().map(|&k| term(k)).sum(),
        None => (0..amps.len()).map(term).sum(),
    };
    acc * g.sign_value()
}

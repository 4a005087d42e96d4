//! Measurements on qubit subsets: POVMs, projective measurements, joint
//! outcome statistics and the state-dependent distance and consistency.

use nalgebra::DMatrix;
use rand::Rng;

use crate::dense::{DenseOperator, LocalEmbedding, C64};
use crate::error::{Error, Result};
use crate::state::{inner, norm_sqr, StateVector};

const TOL: f64 = 1e-9;

/// Outcome-indexed positive operators on `targets`, summing to identity.
#[derive(Clone, Debug)]
pub struct Povm {
    elements: Vec<DenseOperator>,
    targets: Vec<usize>,
}

impl Povm {
    pub fn new(elements: Vec<DenseOperator>, targets: Vec<usize>) -> Result<Self> {
        let dim = 1usize << targets.len();
        if elements.is_empty() {
            return Err(Error::Invalid("POVM needs at least one outcome".into()));
        }
        let mut sum = DMatrix::<C64>::zeros(dim, dim);
        for e in &elements {
            if e.dim() != dim {
                return Err(Error::LengthMismatch { left: e.dim(), right: dim });
            }
            let (values, _) = e.hermitian_eigen()?;
            if values[0] < -TOL {
                return Err(Error::Invalid(format!(
                    "POVM element has negative eigenvalue {}",
                    values[0]
                )));
            }
            sum += e.matrix();
        }
        if (sum - DMatrix::identity(dim, dim)).camax() > TOL {
            return Err(Error::Invalid("POVM elements do not sum to identity".into()));
        }
        Ok(Self { elements, targets })
    }

    /// `{(I + A)/2, (I - A)/2}` for an observable `A`; outcome 0 is `+1`.
    pub fn from_observable(a: &DenseOperator, targets: Vec<usize>) -> Result<Self> {
        let id = DenseOperator::identity(a.dim());
        Self::new(
            vec![id.add(a).scale(0.5), id.sub(a).scale(0.5)],
            targets,
        )
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[DenseOperator] {
        &self.elements
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// `Σ_o f(o) M^o`.
    pub fn weighted_sum(&self, f: impl Fn(usize) -> f64) -> DenseOperator {
        let dim = self.elements[0].dim();
        let mut acc = DMatrix::<C64>::zeros(dim, dim);
        for (o, e) in self.elements.iter().enumerate() {
            let w = f(o);
            if w != 0.0 {
                acc += e.matrix() * C64::new(w, 0.0);
            }
        }
        DenseOperator::new(acc)
    }
}

/// A POVM whose elements are orthogonal projectors.
#[derive(Clone, Debug)]
pub struct ProjectiveMeasurement {
    povm: Povm,
    /// True when construction consumed randomness.
    pub randomized: bool,
}

impl ProjectiveMeasurement {
    pub fn new(projectors: Vec<DenseOperator>, targets: Vec<usize>) -> Result<Self> {
        let povm = Povm::new(projectors, targets)?;
        for (i, p) in povm.elements.iter().enumerate() {
            for (j, q) in povm.elements.iter().enumerate() {
                let prod = p.mul(q);
                let want = if i == j { p.matrix().clone() } else { DMatrix::zeros(p.dim(), p.dim()) };
                if (prod.matrix() - want).camax() > TOL {
                    return Err(Error::Invalid(format!(
                        "elements {i} and {j} are not orthogonal projectors"
                    )));
                }
            }
        }
        Ok(Self { povm, randomized: false })
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    pub fn projectors(&self) -> &[DenseOperator] {
        self.povm.elements()
    }

    pub fn targets(&self) -> &[usize] {
        self.povm.targets()
    }

    pub fn outcomes(&self) -> usize {
        self.povm.outcomes()
    }
}

/// Two-outcome measurement onto the positive (outcome 0) and negative
/// (outcome 1) eigenspaces of a Hermitian `a`. Each zero-eigenvalue
/// eigenvector is assigned to either side with probability ½.
pub fn eigsign_observable<R: Rng + ?Sized>(
    a: &DenseOperator,
    targets: Vec<usize>,
    rng: &mut R,
) -> Result<ProjectiveMeasurement> {
    let (values, vecs) = a.hermitian_eigen()?;
    let dim = a.dim();
    let mut plus = DMatrix::<C64>::zeros(dim, dim);
    let mut minus = DMatrix::<C64>::zeros(dim, dim);
    let mut randomized = false;
    for (k, &lam) in values.iter().enumerate() {
        let positive = if lam.abs() <= TOL {
            randomized = true;
            rng.gen::<bool>()
        } else {
            lam > 0.0
        };
        let col = vecs.column(k);
        let proj = &col * col.adjoint();
        if positive {
            plus += proj;
        } else {
            minus += proj;
        }
    }
    let mut m = ProjectiveMeasurement::new(
        vec![DenseOperator::new(plus), DenseOperator::new(minus)],
        targets,
    )?;
    m.randomized = randomized;
    Ok(m)
}

/// Born probabilities of simultaneous measurements on disjoint subsets.
/// The outcome tuple is flattened with the first part most significant.
pub fn joint_distribution(state: &StateVector, parts: &[ProjectiveMeasurement]) -> Result<Vec<f64>> {
    let mut used = vec![false; state.num_qubits()];
    for p in parts {
        for &t in p.targets() {
            if t >= used.len() {
                return Err(Error::Invalid(format!("target qubit {t} out of range")));
            }
            if used[t] {
                return Err(Error::Invalid(format!(
                    "measurements overlap on qubit {t}"
                )));
            }
            used[t] = true;
        }
    }
    let total: usize = parts.iter().map(|p| p.outcomes()).product();
    let mut probs = Vec::with_capacity(total);
    collect(state, state.amplitudes().to_vec(), parts, &mut probs)?;
    Ok(probs)
}

fn collect(
    state: &StateVector,
    v: Vec<C64>,
    parts: &[ProjectiveMeasurement],
    out: &mut Vec<f64>,
) -> Result<()> {
    let Some((first, rest)) = parts.split_first() else {
        out.push(norm_sqr(&v));
        return Ok(());
    };
    let rest_count: usize = rest.iter().map(|p| p.outcomes()).product();
    for proj in first.projectors() {
        let w = LocalEmbedding::new(state.num_qubits(), first.targets())?.apply(proj, &v)?;
        if norm_sqr(&w) < 1e-30 {
            out.extend(std::iter::repeat(0.0).take(rest_count));
        } else {
            collect(state, w, rest, out)?;
        }
    }
    Ok(())
}

fn check_arity(m: &Povm, n: &Povm) -> Result<()> {
    if m.outcomes() != n.outcomes() {
        return Err(Error::LengthMismatch {
            left: m.outcomes(),
            right: n.outcomes(),
        });
    }
    Ok(())
}

/// `(Σ_o ‖(√M^o − √N^o)ψ‖²)^{1/2}`.
pub fn distance(psi: &StateVector, m: &Povm, n: &Povm) -> Result<f64> {
    check_arity(m, n)?;
    let mut total = 0.0;
    for (a, b) in m.elements().iter().zip(n.elements()) {
        let va = psi.apply_local(&a.psd_sqrt()?, m.targets())?;
        let vb = psi.apply_local(&b.psd_sqrt()?, n.targets())?;
        total += va.iter().zip(&vb).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>();
    }
    Ok(total.sqrt())
}

/// `Re Σ_o ⟨ψ|M^o N^o|ψ⟩`.
pub fn consistency(psi: &StateVector, m: &Povm, n: &Povm) -> Result<f64> {
    check_arity(m, n)?;
    let mut total = 0.0;
    for (a, b) in m.elements().iter().zip(n.elements()) {
        let va = psi.apply_local(a, m.targets())?;
        let vb = psi.apply_local(b, n.targets())?;
        total += inner(&va, &vb)?.re;
    }
    Ok(total)
}

//! Hamiltonians of the form `(1/m) Σ α_ℓ P_ℓ` with I/X/Z Pauli terms, their
//! ground energy, the energy-test values and tensor-power gap amplification.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::code::ValidationReport;
use crate::dense::{DenseOperator, C64};
use crate::error::{Error, Result};
use crate::pauli::{BitString, PauliWord, Sign};
use crate::report::ser_f17;
use crate::state::StateVector;

/// Largest qubit count for exact diagonalization.
pub const GROUND_LIMIT: usize = 12;
/// Largest number of terms produced by [`expand_amplified`].
pub const TERM_BUDGET: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub alpha: f64,
    pub word: PauliWord,
}

/// `H = (1/m) Σ_ℓ α_ℓ P_ℓ` on `n` qubits, `m` being the number of terms.
#[derive(Clone, Debug, PartialEq)]
pub struct XZHamiltonian {
    n: usize,
    terms: Vec<Term>,
}

#[derive(Serialize, Deserialize)]
struct TermFile {
    #[serde(serialize_with = "ser_f17")]
    alpha: f64,
    x: BitString,
    z: BitString,
}

#[derive(Serialize, Deserialize)]
struct HamiltonianFile {
    n: usize,
    terms: Vec<TermFile>,
}

impl XZHamiltonian {
    pub fn new(n: usize, terms: Vec<Term>) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::Invalid(format!("qubit count {n} out of range")));
        }
        if terms.is_empty() {
            return Err(Error::Invalid("a Hamiltonian needs at least one term".into()));
        }
        for t in &terms {
            if t.word.num_qubits() != n {
                return Err(Error::LengthMismatch {
                    left: t.word.num_qubits(),
                    right: n,
                });
            }
        }
        Ok(Self { n, terms })
    }

    /// Parses `"alpha word"` pairs, e.g. `[(1.0, "XX"), (1.0, "ZZ")]`.
    pub fn from_words(terms: &[(f64, &str)]) -> Result<Self> {
        let parsed: Vec<Term> = terms
            .iter()
            .map(|&(alpha, w)| Ok(Term { alpha, word: w.parse()? }))
            .collect::<Result<_>>()?;
        let n = parsed.first().map(|t| t.word.num_qubits()).unwrap_or(0);
        Self::new(n, parsed)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: HamiltonianFile = serde_json::from_str(s)?;
        let terms = f
            .terms
            .into_iter()
            .map(|t| {
                Ok(Term {
                    alpha: t.alpha,
                    word: PauliWord::new(t.x, t.z, Sign::Plus)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(f.n, terms)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// JSON form; a negative word sign is folded into `alpha`.
    pub fn to_json_string(&self) -> String {
        let f = HamiltonianFile {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|t| TermFile {
                    alpha: t.alpha * t.word.sign().value(),
                    x: t.word.x_mask(),
                    z: t.word.z_mask(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&f).expect("hamiltonian serializes")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// `Σ |α_ℓ|`.
    pub fn alpha_l1(&self) -> f64 {
        self.terms.iter().map(|t| t.alpha.abs()).sum()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport { checks: Vec::new() };
        let big: Vec<String> = self
            .terms
            .iter()
            .enumerate()
            .filter(|(_, t)| !(t.alpha.abs() <= 1.0))
            .map(|(i, t)| format!("term {i}: alpha = {}", t.alpha))
            .collect();
        rep.push("alpha_magnitude", big.is_empty(), big.join(", "));
        let overlap: Vec<String> = self
            .terms
            .iter()
            .enumerate()
            .filter(|(_, t)| t.word.x_mask().mask() & t.word.z_mask().mask() != 0)
            .map(|(i, t)| format!("term {i}: {}", t.word))
            .collect();
        rep.push("xz_disjoint", overlap.is_empty(), overlap.join(", "));
        rep.push("nonempty", self.m() >= 1, format!("m = {}", self.m()));
        rep
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        let dim = 1usize << self.n;
        let mut acc = DMatrix::<C64>::zeros(dim, dim);
        let m = self.m() as f64;
        for t in &self.terms {
            acc += t.word.to_matrix()?.matrix() * C64::new(t.alpha / m, 0.0);
        }
        Ok(DenseOperator::new(acc))
    }

    /// Real symmetric matrix of `H` (every I/X/Z word is real).
    fn to_real_dense(&self) -> Result<DMatrix<f64>> {
        if self.n > GROUND_LIMIT {
            return Err(Error::OverLimit {
                what: "Hamiltonian qubits for exact diagonalization",
                size: self.n,
                limit: GROUND_LIMIT,
            });
        }
        let dim = 1usize << self.n;
        let m = self.m() as f64;
        let mut acc = DMatrix::<f64>::zeros(dim, dim);
        for t in &self.terms {
            let (x, z) = (t.word.x_mask().mask() as usize, t.word.z_mask().mask() as usize);
            if x & z != 0 {
                return Err(Error::Invalid(format!(
                    "term {} has a Y-like position; not real",
                    t.word
                )));
            }
            let s = t.word.sign().value() * t.alpha / m;
            for col in 0..dim {
                let par = if (col & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                acc[(col ^ x, col)] += s * par;
            }
        }
        Ok(acc)
    }

    /// Full spectrum in ascending order.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let mut v: Vec<f64> = SymmetricEigen::new(self.to_real_dense()?)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        v.sort_by(f64::total_cmp);
        Ok(v)
    }

    /// Smallest eigenvalue and a unit eigenvector, whose first nonzero
    /// component is made positive.
    pub fn ground(&self) -> Result<(f64, StateVector)> {
        let h = self.to_real_dense()?;
        let eig = SymmetricEigen::new(h.clone());
        let (k, lambda) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty spectrum");
        let mut v = eig.eigenvectors.column(k).into_owned();
        if let Some(first) = v.iter().find(|a| a.abs() > 1e-12) {
            if *first < 0.0 {
                v = -v;
            }
        }
        v /= v.norm();
        let residual = (&h * &v - &v * lambda).norm();
        if residual > 1e-9 {
            return Err(Error::Invariant(format!("eigen residual {residual}")));
        }
        let state = StateVector::new(v.iter().map(|&a| C64::new(a, 0.0)).collect())?;
        Ok((lambda, state))
    }

    /// `⟨ψ|H|ψ⟩`.
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        if psi.num_qubits() != self.n {
            return Err(Error::LengthMismatch {
                left: psi.num_qubits(),
                right: self.n,
            });
        }
        let targets: Vec<usize> = (0..self.n).collect();
        let mut acc = 0.0;
        for t in &self.terms {
            acc += t.alpha * psi.pauli_expectation(&t.word, &targets)?.re;
        }
        Ok(acc / self.m() as f64)
    }

    /// Closed-form energy-measurement value `1 − (¼⟨H⟩ + (1/2m) Σ|α|)`.
    pub fn energy_value(&self, psi: &StateVector) -> Result<f64> {
        Ok(energy_formula(self.expectation(psi)?, self.m(), self.alpha_l1()))
    }

    /// Acceptance of the energy-measurement rule "accept on sign
    /// disagreement, else reject with probability |α|" applied to exact
    /// Pauli measurements: `1 − ½⟨H⟩ − (1/2m) Σ|α|`.
    pub fn measured_energy_acceptance(&self, psi: &StateVector) -> Result<f64> {
        Ok(measured_energy_formula(
            self.expectation(psi)?,
            self.m(),
            self.alpha_l1(),
        ))
    }
}

pub fn energy_formula(energy: f64, m: usize, alpha_l1: f64) -> f64 {
    1.0 - (0.25 * energy + alpha_l1 / (2.0 * m as f64))
}

pub fn measured_energy_formula(energy: f64, m: usize, alpha_l1: f64) -> f64 {
    1.0 - 0.5 * energy - alpha_l1 / (2.0 * m as f64)
}

/// Amplification parameters `p > q > 0`, with tensor power
/// `a = (1/q − 1/p)^{-1}` rounded up to an integer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AmplificationSpec {
    pub p: f64,
    pub q: f64,
}

impl AmplificationSpec {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(q > 0.0 && p > q && p.is_finite()) {
            return Err(Error::Invalid(format!(
                "amplification needs p > q > 0, got p = {p}, q = {q}"
            )));
        }
        Ok(Self { p, q })
    }

    pub fn a_exact(&self) -> f64 {
        1.0 / (1.0 / self.q - 1.0 / self.p)
    }

    /// `a_exact` rounded up; values within 1e-9 of an integer round to it.
    pub fn a(&self) -> usize {
        let e = self.a_exact();
        let r = e.round();
        if (e - r).abs() <= 1e-9 {
            r.max(1.0) as usize
        } else {
            e.ceil().max(1.0) as usize
        }
    }
}

/// `λ ↦ 1 − (1 + 1/a − λ)^a`.
pub fn amplify_map(lambda: f64, a: usize) -> f64 {
    1.0 - (1.0 + 1.0 / a as f64 - lambda).powi(a as i32)
}

/// Smallest eigenvalue of the amplified Hamiltonian given that of `H`.
pub fn amplified_min(lambda: f64, spec: &AmplificationSpec) -> f64 {
    amplify_map(lambda, spec.a())
}

#[derive(Clone, Debug)]
pub struct Amplified {
    /// `H′ / scale`, with every `|α′| ≤ 1`.
    pub hamiltonian: XZHamiltonian,
    pub scale: f64,
    pub a: usize,
    pub a_exact: f64,
}

/// Pauli expansion of `H′ = I − ((1 + 1/a) I − H)^{⊗a}` on `n·a` qubits.
pub fn expand_amplified(h: &XZHamiltonian, spec: &AmplificationSpec) -> Result<Amplified> {
    let a = spec.a();
    let mut out = expand_power(h, a)?;
    out.a_exact = spec.a_exact();
    Ok(out)
}

/// [`expand_amplified`] for an explicit integer power `a ≤ 3`.
pub fn expand_power(h: &XZHamiltonian, a: usize) -> Result<Amplified> {
    if a == 0 || a > 3 {
        return Err(Error::Budget(format!("tensor power {a} outside 1..=3")));
    }
    let factor_terms = h.m() + 1;
    if factor_terms.pow(a as u32) > TERM_BUDGET {
        return Err(Error::Budget(format!(
            "{factor_terms}^{a} terms exceed the budget of {TERM_BUDGET}"
        )));
    }
    let total_qubits = h.n() * a;
    if total_qubits > 64 {
        return Err(Error::OverLimit {
            what: "amplified qubits",
            size: total_qubits,
            limit: 64,
        });
    }
    let n = h.n();
    let m = h.m() as f64;
    // (1 + 1/a) I − H as (coefficient, x, z) with sign folded in
    let mut factor: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    *factor.entry((0, 0)).or_default() += 1.0 + 1.0 / a as f64;
    for t in h.terms() {
        let key = (t.word.x_mask().mask(), t.word.z_mask().mask());
        *factor.entry(key).or_default() -= t.alpha * t.word.sign().value() / m;
    }
    let factor: Vec<((u64, u64), f64)> = factor.into_iter().collect();

    let mut power: Vec<((u64, u64), f64)> = vec![((0, 0), 1.0)];
    for _ in 0..a {
        let mut next = BTreeMap::new();
        for &((x, z), c) in &power {
            for &((fx, fz), fc) in &factor {
                *next.entry(((x << n) | fx, (z << n) | fz)).or_insert(0.0) += c * fc;
            }
        }
        power = next.into_iter().collect();
    }

    let mut result: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    result.insert((0, 0), 1.0);
    for ((x, z), c) in power {
        *result.entry((x, z)).or_insert(0.0) -= c;
    }
    let kept: Vec<((u64, u64), f64)> = result
        .into_iter()
        .filter(|(_, c)| c.abs() > 1e-15)
        .collect();
    if kept.is_empty() {
        return Err(Error::Invalid("amplified Hamiltonian vanishes".into()));
    }
    let m_new = kept.len() as f64;
    let max_alpha = kept
        .iter()
        .map(|(_, c)| (c * m_new).abs())
        .fold(0.0f64, f64::max);
    let scale = max_alpha.max(1.0);
    let terms = kept
        .into_iter()
        .map(|((x, z), c)| {
            Ok(Term {
                alpha: c * m_new / scale,
                word: PauliWord::new(
                    BitString::new(total_qubits, x)?,
                    BitString::new(total_qubits, z)?,
                    Sign::Plus,
                )?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Amplified {
        hamiltonian: XZHamiltonian::new(total_qubits, terms)?,
        scale,
        a,
        a_exact: a as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z1() -> XZHamiltonian {
        XZHamiltonian::from_words(&[(1.0, "Z")]).unwrap()
    }

    fn xxzz() -> XZHamiltonian {
        XZHamiltonian::from_words(&[(1.0, "XX"), (1.0, "ZZ")]).unwrap()
    }

    #[test]
    fn ground_of_z() {
        let (l, v) = z1().ground().unwrap();
        assert!((l + 1.0).abs() < 1e-12);
        assert!((v.amplitudes()[1].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ground_of_xx_plus_zz_is_singlet() {
        let (l, v) = xxzz().ground().unwrap();
        assert!((l + 1.0).abs() < 1e-12);
        // 4x4 by hand: singlet (|01> - |10>)/sqrt2, first nonzero positive
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want = [0.0, h, -h, 0.0];
        for (a, b) in v.amplitudes().iter().zip(want) {
            assert!((a.re - b).abs() < 1e-12 && a.im == 0.0);
        }
    }

    #[test]
    fn ground_of_identity() {
        let (l, v) = XZHamiltonian::from_words(&[(1.0, "II")]).unwrap().ground().unwrap();
        assert!((l - 1.0).abs() < 1e-12);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ground_limit() {
        let big = XZHamiltonian::from_words(&[(1.0, "ZZZZZZZZZZZZZ")]).unwrap();
        assert!(matches!(big.ground(), Err(Error::OverLimit { .. })));
    }

    #[test]
    fn energy_formula_values() {
        let (_, g) = z1().ground().unwrap();
        assert!((z1().energy_value(&g).unwrap() - 0.75).abs() < 1e-12);
        let (_, s) = xxzz().ground().unwrap();
        assert!((xxzz().energy_value(&s).unwrap() - 0.75).abs() < 1e-12);
        let zero = XZHamiltonian::from_words(&[(0.0, "Z"), (0.0, "X")]).unwrap();
        let any = StateVector::basis(1, 0).unwrap();
        assert_eq!(zero.energy_value(&any).unwrap(), 1.0);
        assert!(z1().energy_value(&StateVector::basis(2, 0).unwrap()).is_err());
        // the measurement rule itself accepts the ground state of Z always
        assert!((z1().measured_energy_acceptance(&g).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validation_examples() {
        assert!(z1().validate().all_passed());
        let w = XZHamiltonian::from_words(&[(1.0, "W")]).unwrap();
        assert!(w.validate().failures().any(|c| c.name == "xz_disjoint"));
        let big = XZHamiltonian::from_words(&[(1.5, "Z")]).unwrap();
        assert!(big.validate().failures().any(|c| c.name == "alpha_magnitude"));
    }

    #[test]
    fn json_round_trip() {
        let h = XZHamiltonian::from_words(&[(0.1, "XIZ"), (-1.0 / 3.0, "ZZI")]).unwrap();
        let back = XZHamiltonian::from_json_str(&h.to_json_string()).unwrap();
        assert_eq!(back, h);
        let shipped = XZHamiltonian::from_json_str(include_str!("../data/z1.json")).unwrap();
        assert_eq!(shipped, z1());
        let shipped = XZHamiltonian::from_json_str(include_str!("../data/xxzz2.json")).unwrap();
        assert_eq!(shipped, xxzz());
    }

    #[test]
    fn amplification_map_values() {
        let s = AmplificationSpec::new(4.0, 2.0).unwrap();
        assert_eq!(s.a(), 4);
        assert_eq!(amplified_min(0.25, &s), 0.0);
        assert_eq!(amplified_min(0.5, &s), 175.0 / 256.0);
        for a in 1..6 {
            assert_eq!(amplify_map(1.0 / a as f64, a), 0.0);
        }
        assert!(AmplificationSpec::new(1.0, 2.0).is_err());
        let odd = AmplificationSpec::new(5.0, 2.0).unwrap();
        assert!((odd.a_exact() - 10.0 / 3.0).abs() < 1e-12);
        assert_eq!(odd.a(), 4);
    }

    #[test]
    fn expansion_budget() {
        let s = AmplificationSpec::new(4.0, 2.0).unwrap();
        assert!(matches!(expand_amplified(&z1(), &s), Err(Error::Budget(_))));
    }

    #[test]
    fn power_one_is_affine_shift() {
        // a = 1: H′ = H − I
        let h = xxzz();
        let s = AmplificationSpec::new(1.0, 0.5).unwrap();
        assert_eq!(s.a(), 1);
        let amp = expand_amplified(&h, &s).unwrap();
        let want = h.to_dense().unwrap().sub(&DenseOperator::identity(4));
        let got = amp.hamiltonian.to_dense().unwrap().scale(amp.scale);
        assert!((got.matrix() - want.matrix()).norm() < 1e-12);
    }

    #[test]
    fn power_two_of_z() {
        let s = AmplificationSpec::new(2.0, 1.0).unwrap();
        assert_eq!(s.a(), 2);
        let amp = expand_amplified(&z1(), &s).unwrap();
        let lmin = amp.hamiltonian.spectrum().unwrap()[0] * amp.scale;
        // 1 − (1 + ½ + 1)^2 for λ_min(Z) = −1
        assert!((lmin - amplified_min(-1.0, &s)).abs() < 1e-9);
        assert!((lmin - (1.0 - 6.25)).abs() < 1e-9);
        assert!(amp.hamiltonian.terms().iter().all(|t| t.alpha.abs() <= 1.0 + 1e-15));
    }

    fn random_hamiltonian(rng: &mut ChaCha8Rng, n: usize, m: usize) -> XZHamiltonian {
        let terms = (0..m)
            .map(|_| {
                let x = rng.gen_range(0..1u64 << n);
                let z = rng.gen_range(0..1u64 << n) & !x;
                Term {
                    alpha: rng.gen_range(-1.0..=1.0),
                    word: PauliWord::new(
                        BitString::new(n, x).unwrap(),
                        BitString::new(n, z).unwrap(),
                        Sign::Plus,
                    )
                    .unwrap(),
                }
            })
            .collect();
        XZHamiltonian::new(n, terms).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn ground_is_variational(seed in any::<u64>(), n in 1usize..=3, m in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_hamiltonian(&mut rng, n, m);
            let (l, g) = h.ground().unwrap();
            prop_assert!((h.expectation(&g).unwrap() - l).abs() < 1e-9);
            for _ in 0..100 {
                let v = StateVector::random(n, &mut rng).unwrap();
                prop_assert!(h.expectation(&v).unwrap() >= l - 1e-9);
            }
            let direct = 1.0 - (0.25 * l + h.alpha_l1() / (2.0 * m as f64));
            prop_assert!((h.energy_value(&g).unwrap() - direct).abs() < 1e-12);
        }

        #[test]
        fn amplified_spectrum_is_mapped_spectrum(
            seed in any::<u64>(), n in 1usize..=2, m in 1usize..=3, a in 1usize..=3
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_hamiltonian(&mut rng, n, m);
            let amp = expand_power(&h, a).unwrap();
            let got: Vec<f64> = amp.hamiltonian.spectrum().unwrap().iter().map(|v| v * amp.scale).collect();
            // oracle: 1 − Π_k (1 + 1/a − λ_{i_k}) over all a-tuples of eigenvalues
            let spec = h.spectrum().unwrap();
            let mut want = vec![1.0f64];
            for _ in 0..a {
                want = want.iter().flat_map(|p| spec.iter().map(move |l| p * (1.0 + 1.0 / a as f64 - l))).collect();
            }
            let mut want: Vec<f64> = want.into_iter().map(|p| 1.0 - p).collect();
            want.sort_by(f64::total_cmp);
            prop_assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g - w).abs() < 1e-9, "{} vs {}", g, w);
            }
            prop_assert!((got[0] - amplify_map(spec[0], a)).abs() < 1e-9);
            prop_assert!(amp.hamiltonian.terms().iter().all(|t| t.alpha.abs() <= 1.0 + 1e-12));
        }
    }
}

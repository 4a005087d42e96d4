//! Prover strategies: a shared state over `r` registers plus per-query
//! measurements. Honest, classical and corrupted variants.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::code::{Basis, StabilizerCode};
use crate::dense::{DenseOperator, LocalEmbedding, C64, ZERO};
use crate::error::{Error, Result};
use crate::hamiltonian::XZHamiltonian;
use crate::measure::{eigsign_observable, ProjectiveMeasurement};
use crate::pauli::{BitString, PauliWord, Sign};
use crate::protocol::{Character, Query, Question, WBasis};
use crate::state::{global_pauli_expectation, GlobalPauli, StateVector};

/// Largest Pauli expansion of one answer product before falling back to
/// dense application.
const EXPANSION_LIMIT: usize = 256;

/// A ±1-valued observable on one prover's `n`-qubit register.
#[derive(Clone, Debug)]
pub enum LocalObservable {
    /// Real combination of Pauli words.
    Paulis(Vec<(f64, PauliWord)>),
    Dense(DenseOperator),
}

impl LocalObservable {
    pub fn scalar(value: f64, n: usize) -> Self {
        LocalObservable::Paulis(vec![(value, PauliWord::identity(n))])
    }

    pub fn word(coef: f64, w: PauliWord) -> Self {
        LocalObservable::Paulis(vec![(coef, w)])
    }

    pub fn to_dense(&self, n: usize) -> Result<DenseOperator> {
        match self {
            LocalObservable::Dense(d) => Ok(d.clone()),
            LocalObservable::Paulis(terms) => {
                let mut acc = DenseOperator::zeros(1 << n);
                for (c, w) in terms {
                    acc = acc.add(&w.to_matrix()?.scale(*c));
                }
                Ok(acc)
            }
        }
    }
}

/// Answers of the provers: for a query and a subset of its answer slots,
/// the observable whose outcome is the product of those answers.
pub trait ProverBehavior: Send + Sync + fmt::Debug {
    /// `mask` bit `k` selects answer slot `k`; `mask` is never zero.
    fn parity_observable(
        &self,
        prover: usize,
        query: &Query,
        mask: u8,
        rng: &mut dyn RngCore,
    ) -> Result<LocalObservable>;

    /// Joint projective measurement on local qubits `0..n`. Outcome index
    /// `o` has answer bits `o >> (arity − 1 − k) & 1` (bit 0 is `+1`).
    fn measurement(
        &self,
        prover: usize,
        query: &Query,
        rng: &mut dyn RngCore,
    ) -> Result<ProjectiveMeasurement> {
        let n = query.n();
        let id = DenseOperator::identity(1 << n);
        let targets: Vec<usize> = (0..n).collect();
        if query.arity() == 1 {
            let o = self.parity_observable(prover, query, 1, rng)?.to_dense(n)?;
            return ProjectiveMeasurement::new(
                vec![id.add(&o).scale(0.5), id.sub(&o).scale(0.5)],
                targets,
            );
        }
        let o0 = self.parity_observable(prover, query, 1, rng)?.to_dense(n)?;
        let o1 = self.parity_observable(prover, query, 2, rng)?.to_dense(n)?;
        let o01 = self.parity_observable(prover, query, 3, rng)?.to_dense(n)?;
        let mut projectors = Vec::with_capacity(4);
        for o in 0..4 {
            let s0 = if o >> 1 & 1 == 0 { 1.0 } else { -1.0 };
            let s1 = if o & 1 == 0 { 1.0 } else { -1.0 };
            projectors.push(
                id.add(&o0.scale(s0))
                    .add(&o1.scale(s1))
                    .add(&o01.scale(s0 * s1))
                    .scale(0.25),
            );
        }
        ProjectiveMeasurement::new(projectors, targets)
    }

    /// The same behavior with one prover's X- or Z-observables negated.
    fn sign_flipped(&self, _prover: usize, _basis: Basis) -> Option<Arc<dyn ProverBehavior>> {
        None
    }
}

/// Each prover measures the Pauli operators named by its query, with an
/// optional sign per prover and basis.
#[derive(Clone, Debug)]
pub struct PauliBehavior {
    x_sign: Vec<f64>,
    z_sign: Vec<f64>,
}

impl PauliBehavior {
    pub fn honest(r: usize) -> Self {
        Self { x_sign: vec![1.0; r], z_sign: vec![1.0; r] }
    }
}

fn w_sum(basis: WBasis, xs: f64, zs: f64, a: BitString, b: BitString) -> Vec<(f64, PauliWord)> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let zc = match basis {
        WBasis::XPrime => zs * h,
        WBasis::ZPrime => -zs * h,
    };
    vec![(xs * h, PauliWord::x_type(a)), (zc, PauliWord::z_type(b))]
}

/// `(X(a) ± Z(b))/√2` as an observable: the Pauli sum itself when the two
/// words anticommute, otherwise its eigenvalue-sign measurement.
pub fn w_observable(
    terms: Vec<(f64, PauliWord)>,
    a: BitString,
    b: BitString,
    rng: &mut dyn RngCore,
) -> Result<LocalObservable> {
    if a.dot_parity(&b)? == 1 {
        return Ok(LocalObservable::Paulis(terms));
    }
    let n = a.len();
    let sum = LocalObservable::Paulis(terms).to_dense(n)?;
    let m = eigsign_observable(&sum, (0..n).collect(), rng)?;
    Ok(LocalObservable::Dense(m.projectors()[0].sub(&m.projectors()[1])))
}

impl ProverBehavior for PauliBehavior {
    fn parity_observable(
        &self,
        prover: usize,
        query: &Query,
        mask: u8,
        rng: &mut dyn RngCore,
    ) -> Result<LocalObservable> {
        let (xs, zs) = (self.x_sign[prover], self.z_sign[prover]);
        Ok(match query {
            Query::Pair { basis, s, t } => {
                let sign = match basis {
                    Basis::X => xs,
                    Basis::Z => zs,
                };
                match mask {
                    1 => LocalObservable::word(sign, basis.word(*s)),
                    2 => LocalObservable::word(sign, basis.word(*t)),
                    _ => LocalObservable::word(1.0, basis.word(s.xor(t)?)),
                }
            }
            Query::Xz { a, b } => match mask {
                1 => LocalObservable::word(xs, PauliWord::x_type(*a)),
                2 => LocalObservable::word(zs, PauliWord::z_type(*b)),
                _ => LocalObservable::word(xs * zs, PauliWord::new(*a, *b, Sign::Plus)?),
            },
            Query::W { basis, a, b } => w_observable(w_sum(*basis, xs, zs, *a, *b), *a, *b, rng)?,
        })
    }

    fn sign_flipped(&self, prover: usize, basis: Basis) -> Option<Arc<dyn ProverBehavior>> {
        let mut out = self.clone();
        match basis {
            Basis::X => *out.x_sign.get_mut(prover)? *= -1.0,
            Basis::Z => *out.z_sign.get_mut(prover)? *= -1.0,
        }
        Some(Arc::new(out))
    }
}

/// Reply rule of the classical strategy on W-queries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WRule {
    /// Answer as for `X(a)`.
    FollowX,
    /// Answer as for `Z(b)`.
    FollowZ,
    Constant(i8),
}

/// Unentangled provers replying with linear functions of the strings.
#[derive(Clone, Debug)]
pub struct ClassicalBehavior {
    pub seed_x: BitString,
    pub seed_z: BitString,
    pub w_rule: WRule,
}

impl ClassicalBehavior {
    fn chi(seed: &BitString, s: &BitString) -> Result<f64> {
        Ok(if seed.dot_parity(s)? == 0 { 1.0 } else { -1.0 })
    }

    fn slot_values(&self, query: &Query) -> Result<Vec<f64>> {
        Ok(match query {
            Query::Pair { basis: Basis::X, s, t } => {
                vec![Self::chi(&self.seed_x, s)?, Self::chi(&self.seed_x, t)?]
            }
            Query::Pair { basis: Basis::Z, s, t } => {
                vec![Self::chi(&self.seed_z, s)?, Self::chi(&self.seed_z, t)?]
            }
            Query::Xz { a, b } => vec![Self::chi(&self.seed_x, a)?, Self::chi(&self.seed_z, b)?],
            Query::W { a, b, .. } => vec![match self.w_rule {
                WRule::FollowX => Self::chi(&self.seed_x, a)?,
                WRule::FollowZ => Self::chi(&self.seed_z, b)?,
                WRule::Constant(v) => {
                    if v < 0 {
                        -1.0
                    } else {
                        1.0
                    }
                }
            }],
        })
    }
}

impl ProverBehavior for ClassicalBehavior {
    fn parity_observable(
        &self,
        _prover: usize,
        query: &Query,
        mask: u8,
        _rng: &mut dyn RngCore,
    ) -> Result<LocalObservable> {
        let vals = self.slot_values(query)?;
        let v: f64 = vals
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, v)| v)
            .product();
        Ok(LocalObservable::scalar(v, query.n()))
    }
}

/// Provers measuring each query in a Haar-random basis of their register,
/// reading answer bits off the first and last qubit of the outcome.
#[derive(Clone, Debug)]
pub struct RandomBehavior {
    pub seed: u64,
}

impl ProverBehavior for RandomBehavior {
    fn parity_observable(
        &self,
        prover: usize,
        query: &Query,
        mask: u8,
        _rng: &mut dyn RngCore,
    ) -> Result<LocalObservable> {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        std::hash::Hash::hash(&(self.seed, prover, query), &mut h);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(std::hash::Hasher::finish(&h));
        let n = query.n();
        let u = DenseOperator::random_unitary(n, &mut rng);
        let dim = 1usize << n;
        let diag = nalgebra::DVector::from_fn(dim, |x, _| {
            let b0 = (x >> (n - 1)) & 1;
            let b1 = x & 1;
            let bits = (mask & 1) as usize * b0 + (mask >> 1 & 1) as usize * b1;
            if bits % 2 == 0 { C64::new(1.0, 0.0) } else { C64::new(-1.0, 0.0) }
        });
        let m = u.matrix() * nalgebra::DMatrix::from_diagonal(&diag) * u.matrix().adjoint();
        Ok(LocalObservable::Dense(DenseOperator::new(m)))
    }
}

/// Memoized `⟨ψ|X(x)Z(z)|ψ⟩` over the nonzero amplitudes of a state.
#[derive(Debug)]
struct ExpectationCache {
    support: Vec<usize>,
    dense: bool,
    map: RwLock<HashMap<(u64, u64), C64>>,
}

impl ExpectationCache {
    fn new(state: &StateVector) -> Self {
        let support = state.support();
        let dense = support.len() * 2 > state.dim();
        Self { support, dense, map: RwLock::new(HashMap::new()) }
    }

    fn get(&self, state: &StateVector, x: u64, z: u64) -> C64 {
        if let Some(v) = self.map.read().expect("cache lock").get(&(x, z)) {
            return *v;
        }
        let g = GlobalPauli { x, z, negative: false };
        let sup = if self.dense { None } else { Some(self.support.as_slice()) };
        let v = global_pauli_expectation(&g, state.amplitudes(), sup);
        self.map.write().expect("cache lock").insert((x, z), v);
        v
    }
}

/// Available corruptions of a strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Corruption {
    SignFlip { prover: usize, basis: Basis },
    /// Encode with the bit-flip repetition code instead.
    WrongCode,
    /// Unencoded ground state, one copy per prover.
    ProductGround,
}

/// Shared state over `r` registers of `n` qubits and the provers' behavior.
/// Qubit `j·r + i` is position `j` of prover `i`'s register.
#[derive(Clone)]
pub struct Strategy {
    pub label: String,
    state: Arc<StateVector>,
    logical: Option<Arc<StateVector>>,
    n: usize,
    r: usize,
    behavior: Arc<dyn ProverBehavior>,
    cache: Arc<ExpectationCache>,
}

impl fmt::Debug for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Strategy")
            .field("label", &self.label)
            .field("n", &self.n)
            .field("r", &self.r)
            .field("behavior", &self.behavior)
            .finish()
    }
}

impl Strategy {
    pub fn new(
        label: impl Into<String>,
        state: StateVector,
        n: usize,
        r: usize,
        behavior: Arc<dyn ProverBehavior>,
    ) -> Result<Self> {
        if state.num_qubits() != n * r {
            return Err(Error::LengthMismatch { left: state.num_qubits(), right: n * r });
        }
        let cache = Arc::new(ExpectationCache::new(&state));
        Ok(Self {
            label: label.into(),
            state: Arc::new(state),
            logical: None,
            n,
            r,
            behavior,
            cache,
        })
    }

    /// The code-encoded ground state of `h`, measured with true Paulis.
    pub fn honest(h: &XZHamiltonian, code: &StabilizerCode) -> Result<Self> {
        let (_, ground) = h.ground()?;
        Self::honest_with_state(ground, code)
    }

    /// True-Pauli provers sharing the encoding of an arbitrary logical state.
    pub fn honest_with_state(logical: StateVector, code: &StabilizerCode) -> Result<Self> {
        let report = code.validate();
        if let Some(f) = report.failures().next() {
            return Err(Error::Invalid(format!("code check {} failed: {}", f.name, f.detail)));
        }
        let n = logical.num_qubits();
        let encoded = code.encode(&logical)?;
        let mut s = Self::new("honest", encoded, n, code.r, Arc::new(PauliBehavior::honest(code.r)))?;
        s.logical = Some(Arc::new(logical));
        Ok(s)
    }

    /// Unentangled provers on `|0…0⟩` answering with linear functions.
    pub fn classical_linear(
        seed_x: BitString,
        seed_z: BitString,
        w_rule: WRule,
        r: usize,
    ) -> Result<Self> {
        let n = seed_x.len();
        if seed_z.len() != n {
            return Err(Error::LengthMismatch { left: seed_z.len(), right: n });
        }
        let state = StateVector::basis(n * r, 0)?;
        Self::new(
            "classical_linear",
            state,
            n,
            r,
            Arc::new(ClassicalBehavior { seed_x, seed_z, w_rule }),
        )
    }

    /// A Haar-random shared state with [`RandomBehavior`] provers.
    pub fn random(n: usize, r: usize, seed: u64) -> Result<Self> {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let state = StateVector::random(n * r, &mut rng)?;
        Self::new("random", state, n, r, Arc::new(RandomBehavior { seed }))
    }

    /// Applies corruptions in order; an empty list returns a copy.
    pub fn corrupted(&self, kinds: &[Corruption]) -> Result<Self> {
        let mut out = self.clone();
        for kind in kinds {
            out = match *kind {
                Corruption::SignFlip { prover, basis } => {
                    if prover >= out.r {
                        return Err(Error::Invalid(format!("prover {prover} out of range")));
                    }
                    let behavior = out.behavior.sign_flipped(prover, basis).ok_or_else(|| {
                        Error::Invalid("sign_flip needs a Pauli-measuring strategy".into())
                    })?;
                    Self { behavior, ..out }
                }
                Corruption::WrongCode => {
                    let logical = out.logical_state()?;
                    let enc = crate::code::repetition7().encode_with_limit(&logical, crate::state::SIM_LIMIT)?;
                    if enc.num_qubits() != out.n * out.r {
                        return Err(Error::LengthMismatch { left: enc.num_qubits(), right: out.n * out.r });
                    }
                    out.with_state(enc, logical)?
                }
                Corruption::ProductGround => {
                    let logical = out.logical_state()?;
                    let st = copies_per_prover(&logical, out.r)?;
                    out.with_state(st, logical)?
                }
            };
        }
        if !kinds.is_empty() {
            let names: Vec<String> = kinds.iter().map(|k| format!("{k:?}")).collect();
            out.label = format!("{}+{}", self.label, names.join("+"));
        }
        Ok(out)
    }

    fn logical_state(&self) -> Result<StateVector> {
        self.logical
            .as_deref()
            .cloned()
            .ok_or_else(|| Error::Invalid("corruption needs a strategy built from a logical state".into()))
    }

    fn with_state(self, state: StateVector, logical: StateVector) -> Result<Self> {
        let mut s = Self::new(self.label, state, self.n, self.r, self.behavior)?;
        s.logical = Some(Arc::new(logical));
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn logical(&self) -> Option<&StateVector> {
        self.logical.as_deref()
    }

    pub fn behavior(&self) -> &dyn ProverBehavior {
        self.behavior.as_ref()
    }

    /// Global qubits of prover `i`'s register, in word-position order.
    pub fn register(&self, i: usize) -> Vec<usize> {
        (0..self.n).map(|j| j * self.r + i).collect()
    }

    /// The measurement prover `i` applies to `query`, on its register.
    pub fn measurement_for(&self, i: usize, query: &Query, rng: &mut dyn RngCore) -> Result<ProjectiveMeasurement> {
        let local = self.behavior.measurement(i, query, rng)?;
        let mut m = ProjectiveMeasurement::new(local.projectors().to_vec(), self.register(i))?;
        m.randomized = local.randomized;
        Ok(m)
    }

    /// `E[χ]` for the product of answers named by `ch` on `question`.
    pub fn character_expectation(
        &self,
        question: &Question,
        ch: &Character,
        rng: &mut dyn RngCore,
    ) -> Result<f64> {
        if ch.is_empty() {
            return Ok(1.0);
        }
        let mut factors = Vec::with_capacity(ch.len());
        for &(prover, mask) in ch {
            let query = question
                .queries
                .get(prover)
                .and_then(|q| q.as_ref())
                .ok_or_else(|| Error::Invalid(format!("no query for prover {prover}")))?;
            factors.push((prover, self.behavior.parity_observable(prover, query, mask, rng)?));
        }
        self.product_expectation(&factors)
    }

    /// `⟨ψ|⊗_i O_i|ψ⟩` for observables on distinct registers.
    pub fn product_expectation(&self, factors: &[(usize, LocalObservable)]) -> Result<f64> {
        let nq = self.state.num_qubits();
        let mut size = 1usize;
        let mut all_pauli = true;
        for (_, o) in factors {
            match o {
                LocalObservable::Paulis(t) => size = size.saturating_mul(t.len()),
                LocalObservable::Dense(_) => all_pauli = false,
            }
        }
        if all_pauli && size <= EXPANSION_LIMIT {
            let mut terms: Vec<(f64, GlobalPauli)> = vec![(1.0, GlobalPauli { x: 0, z: 0, negative: false })];
            for (prover, o) in factors {
                let LocalObservable::Paulis(t) = o else { unreachable!() };
                let reg = self.register(*prover);
                let mut next = Vec::with_capacity(terms.len() * t.len());
                for (c, g) in &terms {
                    for (d, w) in t {
                        next.push((c * d, g.mul(&GlobalPauli::lift(w, &reg, nq)?)));
                    }
                }
                terms = next;
            }
            let mut acc = 0.0;
            for (c, g) in terms {
                if c != 0.0 {
                    acc += c * g.sign_value() * self.cache.get(&self.state, g.x, g.z).re;
                }
            }
            return Ok(acc);
        }
        let mut v = self.state.amplitudes().to_vec();
        for (prover, o) in factors {
            let op = o.clone().to_dense(self.n)?;
            v = LocalEmbedding::new(nq, &self.register(*prover))?.apply(&op, &v)?;
        }
        let e: C64 = self
            .state
            .amplitudes()
            .iter()
            .zip(&v)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(e.re)
    }

    /// Genuine sequential measurement of every prover that has a query.
    /// Answers are ±1 per slot.
    pub fn sample_answers<R: Rng>(&self, question: &Question, rng: &mut R) -> Result<Vec<Option<Vec<i8>>>> {
        let nq = self.state.num_qubits();
        let mut v = self.state.amplitudes().to_vec();
        let mut out = vec![None; question.queries.len()];
        for (i, q) in question.queries.iter().enumerate() {
            let Some(q) = q else { continue };
            let m = self.behavior.measurement(i, q, rng)?;
            let emb = LocalEmbedding::new(nq, &self.register(i))?;
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = None;
            let mut last = None;
            for (o, p) in m.projectors().iter().enumerate() {
                let w = emb.apply(p, &v)?;
                let prob: f64 = w.iter().map(|a| a.norm_sqr()).sum();
                if prob > 0.0 {
                    last = Some((o, prob, w.clone()));
                }
                acc += prob;
                if u < acc && prob > 0.0 {
                    chosen = Some((o, prob, w));
                    break;
                }
            }
            let (o, prob, w) = chosen
                .or(last)
                .ok_or_else(|| Error::Invariant("measurement with no outcome".into()))?;
            let s = 1.0 / prob.sqrt();
            v = w.into_iter().map(|a| a * s).collect();
            let arity = q.arity();
            out[i] = Some(
                (0..arity)
                    .map(|k| if o >> (arity - 1 - k) & 1 == 0 { 1 } else { -1 })
                    .collect(),
            );
        }
        Ok(out)
    }
}

/// `logical` copied onto every prover register of the block-major layout.
pub fn copies_per_prover(logical: &StateVector, r: usize) -> Result<StateVector> {
    let n = logical.num_qubits();
    let total = n * r;
    crate::state::check_limit(total, crate::state::SIM_LIMIT)?;
    let g = logical.amplitudes();
    let mut amps = vec![ZERO; 1usize << total];
    for (k, a) in amps.iter_mut().enumerate() {
        let mut v = C64::new(1.0, 0.0);
        for i in 0..r {
            let mut idx = 0usize;
            for j in 0..n {
                let q = j * r + i;
                idx = (idx << 1) | (k >> (total - 1 - q) & 1);
            }
            v *= g[idx];
            if v == ZERO {
                break;
            }
        }
        *a = v;
    }
    StateVector::new(amps)
}

//! The verifier: query types, question sampling, complementary queries,
//! acceptance predicates and exhaustive question enumeration.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::code::{Basis, Complement, StabilizerCode};
use crate::error::{Error, Result};
use crate::hamiltonian::XZHamiltonian;
use crate::pauli::{low_bits, BitString, Sign};

/// Largest `n` accepted by [`ProtocolParams::enumerate_questions`].
pub const ENUMERATION_LIMIT: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WBasis {
    #[serde(rename = "X'")]
    XPrime,
    #[serde(rename = "Z'")]
    ZPrime,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Query {
    /// Two strings of one basis, stored with `s <= t`.
    Pair { basis: Basis, s: BitString, t: BitString },
    /// `X(a)` and `Z(b)` with disjoint supports.
    Xz { a: BitString, b: BitString },
    /// One bit: `(X(a) ± Z(b))/√2`.
    W { basis: WBasis, a: BitString, b: BitString },
}

impl Query {
    /// Sorted pair plus the answer slots of `u` and `v`. Equal strings get
    /// slots 0 and 1.
    pub fn pair(basis: Basis, u: BitString, v: BitString) -> (Query, u8, u8) {
        if u <= v {
            (Query::Pair { basis, s: u, t: v }, 0, 1)
        } else {
            (Query::Pair { basis, s: v, t: u }, 1, 0)
        }
    }

    pub fn xz(a: BitString, b: BitString) -> Result<Query> {
        if !a.and(&b)?.is_zero() {
            return Err(Error::Invalid(format!("XZ-query strings overlap: {a} {b}")));
        }
        Ok(Query::Xz { a, b })
    }

    pub fn arity(&self) -> usize {
        match self {
            Query::W { .. } => 1,
            _ => 2,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Query::Pair { s, .. } => s.len(),
            Query::Xz { a, .. } | Query::W { a, .. } => a.len(),
        }
    }

    pub fn slot_of(&self, string: &BitString) -> Option<u8> {
        match self {
            Query::Pair { s, t, .. } if s == string => Some(0),
            Query::Pair { t, .. } if t == string => Some(1),
            _ => None,
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Pair { basis, s, t } => write!(f, "({basis:?},{s},{t})"),
            Query::Xz { a, b } => write!(f, "(X,{a},Z,{b})"),
            Query::W { basis, a, b } => {
                let l = match basis {
                    WBasis::XPrime => "X'",
                    WBasis::ZPrime => "Z'",
                };
                write!(f, "({l},{a},{b})")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Linearity,
    Anticommutation,
    Stabilizer,
    EnergyMeasurement,
    EnergyConsistency,
}

impl TestKind {
    pub const ALL: [TestKind; 5] = [
        TestKind::Linearity,
        TestKind::Anticommutation,
        TestKind::Stabilizer,
        TestKind::EnergyMeasurement,
        TestKind::EnergyConsistency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::Linearity => "linearity",
            TestKind::Anticommutation => "anticommutation",
            TestKind::Stabilizer => "stabilizer",
            TestKind::EnergyMeasurement => "energy_measurement",
            TestKind::EnergyConsistency => "energy_consistency",
        }
    }

    /// Probability of this test in the mixture with energy probability `p`.
    pub fn weight(self, p: f64) -> f64 {
        match self {
            TestKind::EnergyMeasurement | TestKind::EnergyConsistency => p / 2.0,
            _ => (1.0 - p) / 3.0,
        }
    }

    pub fn from_name(s: &str) -> Option<TestKind> {
        TestKind::ALL.into_iter().find(|t| t.name() == s)
    }
}

/// One answer bit of one prover.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Slot {
    pub prover: usize,
    pub slot: u8,
}

/// Requires the product of the listed answers to equal `target`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParityCheck {
    pub slots: Vec<Slot>,
    pub target: i8,
}

/// Per-prover slot subsets (bit `k` of the mask is slot `k`), sorted by
/// prover, empty masks omitted. Names the product of those answers.
pub type Character = Vec<(usize, u8)>;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Verdict {
    AlwaysAccept,
    /// Accept iff every check holds.
    Parities { checks: Vec<ParityCheck> },
    /// Accept if the product of `slots` differs from `sign`; otherwise
    /// reject with probability `weight`.
    EnergyPenalty { slots: Vec<Slot>, sign: i8, weight: f64 },
}

pub fn character_of(slots: &[Slot]) -> Character {
    let mut m: BTreeMap<usize, u8> = BTreeMap::new();
    for s in slots {
        *m.entry(s.prover).or_default() ^= 1 << s.slot;
    }
    m.into_iter().filter(|&(_, v)| v != 0).collect()
}

pub fn xor_characters(a: &Character, b: &Character) -> Character {
    let mut m: BTreeMap<usize, u8> = a.iter().copied().collect();
    for &(p, v) in b {
        *m.entry(p).or_default() ^= v;
    }
    m.into_iter().filter(|&(_, v)| v != 0).collect()
}

impl Verdict {
    /// Acceptance probability as `Σ coef · χ`, a combination of answer
    /// products.
    pub fn characters(&self) -> Vec<(f64, Character)> {
        match self {
            Verdict::AlwaysAccept => vec![(1.0, Vec::new())],
            Verdict::Parities { checks } => {
                let k = checks.len();
                let chars: Vec<Character> = checks.iter().map(|c| character_of(&c.slots)).collect();
                let mut acc: BTreeMap<Character, f64> = BTreeMap::new();
                let scale = 0.5f64.powi(k as i32);
                for subset in 0usize..(1 << k) {
                    let mut ch = Vec::new();
                    let mut coef = scale;
                    for (c, check) in checks.iter().enumerate() {
                        if subset >> c & 1 == 1 {
                            ch = xor_characters(&ch, &chars[c]);
                            coef *= check.target as f64;
                        }
                    }
                    *acc.entry(ch).or_default() += coef;
                }
                acc.into_iter()
                    .filter(|(_, c)| *c != 0.0)
                    .map(|(ch, c)| (c, ch))
                    .collect()
            }
            Verdict::EnergyPenalty { slots, sign, weight } => {
                let ch = character_of(slots);
                if ch.is_empty() {
                    let agree = *sign == 1;
                    return vec![(if agree { 1.0 - weight } else { 1.0 }, Vec::new())];
                }
                vec![
                    (1.0 - weight / 2.0, Vec::new()),
                    (-weight * *sign as f64 / 2.0, ch),
                ]
            }
        }
    }

    /// The characters whose joint statistics decide the verdict.
    pub fn decision_characters(&self) -> Vec<Character> {
        match self {
            Verdict::AlwaysAccept => Vec::new(),
            Verdict::Parities { checks } => checks.iter().map(|c| character_of(&c.slots)).collect(),
            Verdict::EnergyPenalty { slots, .. } => vec![character_of(slots)],
        }
    }

    /// Applies the rule to the decision-character values (each ±1).
    pub fn decide<R: Rng + ?Sized>(&self, values: &[i8], rng: &mut R) -> bool {
        match self {
            Verdict::AlwaysAccept => true,
            Verdict::Parities { checks } => checks.iter().zip(values).all(|(c, v)| c.target == *v),
            Verdict::EnergyPenalty { sign, weight, .. } => {
                if values[0] != *sign {
                    true
                } else {
                    rng.gen::<f64>() >= *weight
                }
            }
        }
    }
}

/// One verifier round.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Question {
    pub test: TestKind,
    pub special: usize,
    /// `None` for padded provers whose strings were not drawn.
    pub queries: Vec<Option<Query>>,
    pub padded: Vec<bool>,
    pub verdict: Verdict,
}

/// Product of answer values over a character.
pub fn character_value(ch: &Character, answers: &[Option<Vec<i8>>]) -> Result<i8> {
    let mut v = 1i8;
    for &(p, mask) in ch {
        let a = answers
            .get(p)
            .and_then(|a| a.as_ref())
            .ok_or_else(|| Error::Invalid(format!("missing answer of prover {p}")))?;
        for (k, bit) in a.iter().enumerate() {
            if mask >> k & 1 == 1 {
                v *= bit;
            }
        }
        if (mask as usize) >> a.len() != 0 {
            return Err(Error::LengthMismatch { left: a.len(), right: 8 - mask.leading_zeros() as usize });
        }
    }
    Ok(v)
}

/// Decides a round from full answers. Answers are ±1 values, one per slot.
pub fn accept<R: Rng + ?Sized>(q: &Question, answers: &[Option<Vec<i8>>], rng: &mut R) -> Result<bool> {
    if answers.len() != q.queries.len() {
        return Err(Error::LengthMismatch { left: answers.len(), right: q.queries.len() });
    }
    for (query, ans) in q.queries.iter().zip(answers) {
        if let (Some(query), Some(ans)) = (query, ans) {
            if ans.len() != query.arity() {
                return Err(Error::LengthMismatch { left: ans.len(), right: query.arity() });
            }
            if ans.iter().any(|&v| v != 1 && v != -1) {
                return Err(Error::Invalid(format!("answer values must be ±1, got {ans:?}")));
            }
        }
    }
    let values = q
        .verdict
        .decision_characters()
        .iter()
        .map(|ch| character_value(ch, answers))
        .collect::<Result<Vec<_>>>()?;
    Ok(q.verdict.decide(&values, rng))
}

/// Share of one Hamiltonian term held by each prover.
#[derive(Clone, Debug, PartialEq)]
pub struct TermShares {
    pub shares: Vec<(BitString, BitString)>,
    pub sign: i8,
    pub weight: f64,
}

/// Verifier configuration with precomputed complements and term shares.
#[derive(Clone, Debug)]
pub struct ProtocolParams {
    p: f64,
    code: StabilizerCode,
    h: XZHamiltonian,
    focus: Option<TestKind>,
    complements: Vec<[Complement; 2]>,
    terms: Vec<TermShares>,
}

fn basis_index(b: Basis) -> usize {
    match b {
        Basis::X => 0,
        Basis::Z => 1,
    }
}

/// Rng placeholder for building questions without padding strings.
pub fn no_padding() -> Option<&'static mut rand_chacha::ChaCha8Rng> {
    None
}

fn random_string<R: Rng + ?Sized>(n: usize, rng: &mut R) -> BitString {
    BitString::new(n, rng.gen::<u64>() & low_bits(n)).expect("masked")
}

impl ProtocolParams {
    pub fn new(p: f64, code: StabilizerCode, h: XZHamiltonian) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("p = {p} outside [0, 1]")));
        }
        let report = code.validate();
        if let Some(f) = report.failures().next() {
            return Err(Error::Invalid(format!("code check {} failed: {}", f.name, f.detail)));
        }
        if !code.logical_x.is_x_type() || !code.logical_z.is_z_type() {
            return Err(Error::Invalid("logical operators must be X-type and Z-type".into()));
        }
        let complements = (0..code.r)
            .map(|i| Ok([code.complementary(i, Basis::X)?, code.complementary(i, Basis::Z)?]))
            .collect::<Result<Vec<_>>>()?;
        let n = h.n();
        let lsign = |w: &crate::pauli::PauliWord, k: u32| -> i8 {
            if w.sign() == Sign::Minus && k % 2 == 1 {
                -1
            } else {
                1
            }
        };
        let terms = h
            .terms()
            .iter()
            .map(|t| {
                let (x, z) = (t.word.x_mask(), t.word.z_mask());
                if !x.and(&z)?.is_zero() {
                    return Err(Error::Invalid(format!("term {} is not an XZ term", t.word)));
                }
                let shares = (0..code.r)
                    .map(|i| {
                        let a = if code.logical_x.x_mask().bit(i) { x } else { BitString::zeros(n) };
                        let b = if code.logical_z.z_mask().bit(i) { z } else { BitString::zeros(n) };
                        (a, b)
                    })
                    .collect();
                let mut sign: i8 = if t.alpha < 0.0 { -1 } else { 1 };
                sign *= t.word.sign().as_i8();
                sign *= lsign(&code.logical_x, x.weight()) * lsign(&code.logical_z, z.weight());
                Ok(TermShares { shares, sign, weight: t.alpha.abs().min(1.0) })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { p, code, h, focus: None, complements, terms })
    }

    /// Restricts sampling and enumeration to one test, with its
    /// conditional distribution.
    pub fn with_focus(mut self, focus: Option<TestKind>) -> Self {
        self.focus = focus;
        self
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.h.n()
    }

    pub fn r(&self) -> usize {
        self.code.r
    }

    pub fn code(&self) -> &StabilizerCode {
        &self.code
    }

    pub fn hamiltonian(&self) -> &XZHamiltonian {
        &self.h
    }

    pub fn focus(&self) -> Option<TestKind> {
        self.focus
    }

    pub fn term_shares(&self) -> &[TermShares] {
        &self.terms
    }

    pub fn complement(&self, i: usize, basis: Basis) -> &Complement {
        &self.complements[i][basis_index(basis)]
    }

    /// Queries for every prover but the special one, given the
    /// special-position query `q` of the composite prover. Partners of the
    /// canonical complement receive `q`; everyone else is padded, with a
    /// random same-type query when `rng` is given.
    pub fn complementary_query<R: Rng + ?Sized>(
        &self,
        i: usize,
        q: &Query,
        rng: Option<&mut R>,
    ) -> Result<(Vec<Option<Query>>, Vec<bool>)> {
        let Query::Pair { basis, .. } = q else {
            return Err(Error::Invalid(format!("complementary query needs an X- or Z-query, got {q}")));
        };
        let comp = self.complement(i, *basis);
        let r = self.r();
        let mut queries = vec![None; r];
        let mut padded = vec![false; r];
        for &j in &comp.partners {
            queries[j] = Some(q.clone());
        }
        let mut rng = rng;
        for j in 0..r {
            if j != i && !comp.partners.contains(&j) {
                padded[j] = true;
                if let Some(rng) = rng.as_deref_mut() {
                    let (c, d) = (random_string(self.n(), rng), random_string(self.n(), rng));
                    queries[j] = Some(Query::pair(*basis, c, d).0);
                }
            }
        }
        Ok((queries, padded))
    }

    fn comp_slots(&self, i: usize, basis: Basis, slot: u8) -> Vec<Slot> {
        self.complement(i, basis)
            .partners
            .iter()
            .map(|&prover| Slot { prover, slot })
            .collect()
    }

    fn assemble<R: Rng + ?Sized>(
        &self,
        test: TestKind,
        i: usize,
        special: Query,
        composite: &Query,
        verdict: Verdict,
        rng: Option<&mut R>,
    ) -> Result<Question> {
        let (mut queries, padded) = self.complementary_query(i, composite, rng)?;
        queries[i] = Some(special);
        Ok(Question { test, special: i, queries, padded, verdict })
    }

    /// Linearity round; `choice` 0, 1, 2 sends the composite `a`, `b` or
    /// `a+b` paired with `c`.
    #[allow(clippy::too_many_arguments)]
    pub fn linearity_question<R: Rng + ?Sized>(
        &self,
        i: usize,
        basis: Basis,
        a: BitString,
        b: BitString,
        c: BitString,
        choice: u8,
        rng: Option<&mut R>,
    ) -> Result<Question> {
        let ab = a.xor(&b)?;
        let x = match choice {
            0 => a,
            1 => b,
            _ => ab,
        };
        let (sq, sa, sb) = Query::pair(basis, a, b);
        let (cq, sx, sc) = Query::pair(basis, x, c);
        let special = [(a, sa), (b, sb)];
        let composite = [(x, sx), (c, sc)];
        let mut checks = Vec::new();
        for (s, ss) in special {
            for (t, ts) in composite {
                if s == t {
                    let mut slots = vec![Slot { prover: i, slot: ss }];
                    slots.extend(self.comp_slots(i, basis, ts));
                    checks.push(ParityCheck { slots, target: 1 });
                }
            }
        }
        for (t, ts) in composite {
            if t == ab {
                let mut slots = vec![Slot { prover: i, slot: sa }, Slot { prover: i, slot: sb }];
                slots.extend(self.comp_slots(i, basis, ts));
                checks.push(ParityCheck { slots, target: 1 });
            }
        }
        self.assemble(TestKind::Linearity, i, sq, &cq, Verdict::Parities { checks }, rng)
    }

    /// Anticommutation round: `(N′, a, b)` to the special prover, the
    /// complement of `(X, a, c)` or `(Z, b, c)` to the composite prover.
    #[allow(clippy::too_many_arguments)]
    pub fn anticommutation_question<R: Rng + ?Sized>(
        &self,
        i: usize,
        basis: Basis,
        w: WBasis,
        a: BitString,
        b: BitString,
        c: BitString,
        rng: Option<&mut R>,
    ) -> Result<Question> {
        let shared = match basis {
            Basis::X => a,
            Basis::Z => b,
        };
        let (cq, sx, _) = Query::pair(basis, shared, c);
        let verdict = if a.dot_parity(&b)? == 0 {
            Verdict::AlwaysAccept
        } else {
            let mut slots = vec![Slot { prover: i, slot: 0 }];
            slots.extend(self.comp_slots(i, basis, sx));
            let target = if w == WBasis::ZPrime && basis == Basis::Z { -1 } else { 1 };
            Verdict::Parities { checks: vec![ParityCheck { slots, target }] }
        };
        self.assemble(TestKind::Anticommutation, i, Query::W { basis: w, a, b }, &cq, verdict, rng)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn stabilizer_question<R: Rng + ?Sized>(
        &self,
        i: usize,
        basis: Basis,
        a: BitString,
        b: BitString,
        c: BitString,
        rng: Option<&mut R>,
    ) -> Result<Question> {
        let (sq, sa, _) = Query::pair(basis, a, b);
        let (cq, ca, _) = Query::pair(basis, a, c);
        let mut slots = vec![Slot { prover: i, slot: sa }];
        slots.extend(self.comp_slots(i, basis, ca));
        let verdict = Verdict::Parities { checks: vec![ParityCheck { slots, target: 1 }] };
        self.assemble(TestKind::Stabilizer, i, sq, &cq, verdict, rng)
    }

    pub fn energy_measurement_question(&self, i: usize, l: usize) -> Result<Question> {
        let t = self
            .terms
            .get(l)
            .ok_or_else(|| Error::Invalid(format!("term index {l} out of range")))?;
        let r = self.r();
        let queries = t
            .shares
            .iter()
            .map(|(a, b)| Query::xz(*a, *b).map(Some))
            .collect::<Result<Vec<_>>>()?;
        let slots = (0..r)
            .flat_map(|prover| [Slot { prover, slot: 0 }, Slot { prover, slot: 1 }])
            .collect();
        Ok(Question {
            test: TestKind::EnergyMeasurement,
            special: i,
            queries,
            padded: vec![false; r],
            verdict: Verdict::EnergyPenalty { slots, sign: t.sign, weight: t.weight },
        })
    }

    /// Consistency round for term `l`. `variant` 0 sends `(X,a,Z,b)`, 1
    /// sends `(N,c,d)`, 2 sends `(N,c+s,d)` to the special prover, with
    /// `s` its share of the chosen basis.
    #[allow(clippy::too_many_arguments)]
    pub fn energy_consistency_question<R: Rng + ?Sized>(
        &self,
        i: usize,
        l: usize,
        basis: Basis,
        variant: u8,
        c: BitString,
        d: BitString,
        rng: Option<&mut R>,
    ) -> Result<Question> {
        let t = self
            .terms
            .get(l)
            .ok_or_else(|| Error::Invalid(format!("term index {l} out of range")))?;
        let (a, b) = t.shares[i];
        let s = match basis {
            Basis::X => a,
            Basis::Z => b,
        };
        let cs = c.xor(&s)?;
        let (cq, slot_c, slot_cs) = Query::pair(basis, c, cs);
        let (special, slots) = match variant {
            0 => {
                let own = match basis {
                    Basis::X => 0,
                    Basis::Z => 1,
                };
                let mut slots = vec![Slot { prover: i, slot: own }];
                slots.extend(self.comp_slots(i, basis, slot_c));
                slots.extend(self.comp_slots(i, basis, slot_cs));
                (Query::xz(a, b)?, slots)
            }
            1 => {
                let (q, sc, _) = Query::pair(basis, c, d);
                let mut slots = vec![Slot { prover: i, slot: sc }];
                slots.extend(self.comp_slots(i, basis, slot_c));
                (q, slots)
            }
            _ => {
                let (q, sc, _) = Query::pair(basis, cs, d);
                let mut slots = vec![Slot { prover: i, slot: sc }];
                slots.extend(self.comp_slots(i, basis, slot_cs));
                (q, slots)
            }
        };
        let verdict = Verdict::Parities { checks: vec![ParityCheck { slots, target: 1 }] };
        self.assemble(TestKind::EnergyConsistency, i, special, &cq, verdict, rng)
    }

    fn draw_test<R: Rng + ?Sized>(&self, rng: &mut R) -> TestKind {
        if let Some(f) = self.focus {
            return f;
        }
        if rng.gen::<f64>() < self.p {
            if rng.gen_bool(0.5) {
                TestKind::EnergyMeasurement
            } else {
                TestKind::EnergyConsistency
            }
        } else {
            [TestKind::Linearity, TestKind::Anticommutation, TestKind::Stabilizer][rng.gen_range(0..3)]
        }
    }

    /// Draws one round, padding included.
    pub fn sample_question<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Question> {
        let test = self.draw_test(rng);
        let n = self.n();
        let i = rng.gen_range(0..self.r());
        let basis = if rng.gen_bool(0.5) { Basis::X } else { Basis::Z };
        match test {
            TestKind::Linearity => {
                let (a, b, c) = (random_string(n, rng), random_string(n, rng), random_string(n, rng));
                let choice = rng.gen_range(0..3u8);
                self.linearity_question(i, basis, a, b, c, choice, Some(rng))
            }
            TestKind::Anticommutation => {
                let w = if rng.gen_bool(0.5) { WBasis::XPrime } else { WBasis::ZPrime };
                let (a, b, c) = (random_string(n, rng), random_string(n, rng), random_string(n, rng));
                self.anticommutation_question(i, basis, w, a, b, c, Some(rng))
            }
            TestKind::Stabilizer => {
                let (a, b, c) = (random_string(n, rng), random_string(n, rng), random_string(n, rng));
                self.stabilizer_question(i, basis, a, b, c, Some(rng))
            }
            TestKind::EnergyMeasurement => {
                let l = rng.gen_range(0..self.terms.len());
                self.energy_measurement_question(i, l)
            }
            TestKind::EnergyConsistency => {
                let l = rng.gen_range(0..self.terms.len());
                let u = rng.gen::<f64>();
                let variant = if u < 0.5 { 0 } else if u < 0.75 { 1 } else { 2 };
                let (c, d) = (random_string(n, rng), random_string(n, rng));
                self.energy_consistency_question(i, l, basis, variant, c, d, Some(rng))
            }
        }
    }

    /// Every round of one test with its conditional probability. Padded
    /// provers carry no query.
    pub fn enumerate_test(&self, test: TestKind) -> Result<Vec<(Question, f64)>> {
        let n = self.n();
        if n > ENUMERATION_LIMIT {
            return Err(Error::Budget(format!(
                "enumeration needs n <= {ENUMERATION_LIMIT}, got {n}"
            )));
        }
        let strings: Vec<BitString> = BitString::all(n).collect();
        let r = self.r();
        let m = self.terms.len();
        let cube = 1.0 / (1u64 << (3 * n)) as f64;
        let mut out = Vec::new();
        let bases = [Basis::X, Basis::Z];
        match test {
            TestKind::Linearity | TestKind::Anticommutation | TestKind::Stabilizer => {
                for i in 0..r {
                    for basis in bases {
                        for &a in &strings {
                            for &b in &strings {
                                for &c in &strings {
                                    let base = cube / (2 * r) as f64;
                                    match test {
                                        TestKind::Linearity => {
                                            for choice in 0..3 {
                                                let q = self.linearity_question(i, basis, a, b, c, choice, no_padding())?;
                                                out.push((q, base / 3.0));
                                            }
                                        }
                                        TestKind::Anticommutation => {
                                            for w in [WBasis::XPrime, WBasis::ZPrime] {
                                                let q = self.anticommutation_question(i, basis, w, a, b, c, no_padding())?;
                                                out.push((q, base / 2.0));
                                            }
                                        }
                                        _ => {
                                            let q = self.stabilizer_question(i, basis, a, b, c, no_padding())?;
                                            out.push((q, base));
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            TestKind::EnergyMeasurement => {
                for i in 0..r {
                    for l in 0..m {
                        out.push((self.energy_measurement_question(i, l)?, 1.0 / (r * m) as f64));
                    }
                }
            }
            TestKind::EnergyConsistency => {
                let base = 1.0 / (r * m * 2) as f64;
                let single = 1.0 / (1u64 << n) as f64;
                let double = single * single;
                for i in 0..r {
                    for l in 0..m {
                        for basis in bases {
                            for &c in &strings {
                                let q = self.energy_consistency_question(i, l, basis, 0, c, c, no_padding())?;
                                out.push((q, base * 0.5 * single));
                                for &d in &strings {
                                    for variant in [1, 2] {
                                        let q = self.energy_consistency_question(i, l, basis, variant, c, d, no_padding())?;
                                        out.push((q, base * 0.25 * double));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// The full question distribution (or the focused test's), weights
    /// summing to 1. Zero-weight tests are left out.
    pub fn enumerate_questions(&self) -> Result<Vec<(Question, f64)>> {
        if let Some(f) = self.focus {
            return self.enumerate_test(f);
        }
        let mut out = Vec::new();
        for test in TestKind::ALL {
            let w = test.weight(self.p);
            if w == 0.0 {
                continue;
            }
            out.extend(self.enumerate_test(test)?.into_iter().map(|(q, v)| (q, v * w)));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::steane;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn params(p: f64) -> ProtocolParams {
        let h = XZHamiltonian::from_words(&[(1.0, "Z")]).unwrap();
        ProtocolParams::new(p, steane(), h).unwrap()
    }

    #[test]
    fn complementary_query_examples() {
        let pr = params(0.5);
        let q = Query::pair(Basis::X, bs("0"), bs("1")).0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (qs, pad) = pr.complementary_query(3, &q, Some(&mut rng)).unwrap();
        assert_eq!(pad, vec![true, true, true, false, false, false, false]);
        for j in 4..7 {
            assert_eq!(qs[j].as_ref(), Some(&q));
        }
        assert!(qs[3].is_none());
        assert!(qs[..3].iter().all(|q| matches!(q, Some(Query::Pair { basis: Basis::X, .. }))));

        let qz = Query::pair(Basis::Z, bs("1"), bs("1")).0;
        let (qs, pad) = pr.complementary_query(0, &qz, no_padding()).unwrap();
        assert_eq!(pad, vec![false, true, false, true, false, true, false]);
        assert!(qs[1].is_none() && qs[2].is_some());
        let w = Query::W { basis: WBasis::XPrime, a: bs("1"), b: bs("1") };
        assert!(pr.complementary_query(0, &w, no_padding()).is_err());
    }

    #[test]
    fn pair_sorting() {
        let (q, su, sv) = Query::pair(Basis::X, bs("11"), bs("01"));
        assert_eq!(q, Query::Pair { basis: Basis::X, s: bs("01"), t: bs("11") });
        assert_eq!((su, sv), (1, 0));
        assert_eq!(Query::pair(Basis::Z, bs("10"), bs("10")).1, 0);
        assert!(Query::xz(bs("11"), bs("01")).is_err());
    }

    #[test]
    fn mixture_degenerate_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p0 = params(0.0);
        let p1 = params(1.0);
        for _ in 0..10_000 {
            let t = p0.sample_question(&mut rng).unwrap().test;
            assert!(!matches!(t, TestKind::EnergyMeasurement | TestKind::EnergyConsistency));
            let t = p1.sample_question(&mut rng).unwrap().test;
            assert!(matches!(t, TestKind::EnergyMeasurement | TestKind::EnergyConsistency));
        }
        assert!(ProtocolParams::new(1.5, steane(), p0.hamiltonian().clone()).is_err());
    }

    #[test]
    fn enumeration_weights() {
        let pr = params(0.0);
        let qs = pr.enumerate_questions().unwrap();
        let total: f64 = qs.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(qs.iter().all(|(_, w)| *w > 0.0));
        let lin: f64 = qs.iter().filter(|(q, _)| q.test == TestKind::Linearity).map(|(_, w)| w).sum();
        assert!((lin - 1.0 / 3.0).abs() < 1e-12);
        let pr = params(0.25);
        let total: f64 = pr.enumerate_questions().unwrap().iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for test in TestKind::ALL {
            let t: f64 = pr.enumerate_test(test).unwrap().iter().map(|(_, w)| w).sum();
            assert!((t - 1.0).abs() < 1e-12, "{test:?}");
        }
    }

    #[test]
    fn padding_is_outside_stabilizer_support() {
        let pr = params(0.5);
        for (q, _) in pr.enumerate_questions().unwrap() {
            assert!(!q.padded[q.special]);
            if q.test == TestKind::EnergyMeasurement {
                assert!(q.padded.iter().all(|p| !p));
                continue;
            }
            let basis = match q.queries.iter().flatten().find(|x| matches!(x, Query::Pair { .. })) {
                Some(Query::Pair { basis, .. }) => *basis,
                _ => unreachable!(),
            };
            let comp = pr.complement(q.special, basis);
            for j in 0..pr.r() {
                assert_eq!(q.padded[j], j != q.special && !comp.stabilizer.support().bit(j));
                assert_eq!(q.queries[j].is_none(), q.padded[j]);
            }
        }
    }

    #[test]
    fn acceptance_examples() {
        let pr = params(0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let q = pr.stabilizer_question(3, Basis::X, bs("1"), bs("0"), bs("1"), no_padding()).unwrap();
        let plus: Vec<Option<Vec<i8>>> = q.queries.iter().map(|x| x.as_ref().map(|q| vec![1; q.arity()])).collect();
        assert!(accept(&q, &plus, &mut rng).unwrap());
        let mut bad = plus.clone();
        bad[4] = Some(vec![-1, -1]);
        assert!(!accept(&q, &bad, &mut rng).unwrap());
        bad[4] = Some(vec![1]);
        assert!(accept(&q, &bad, &mut rng).is_err());

        let q = pr
            .anticommutation_question(0, Basis::Z, WBasis::ZPrime, bs("0"), bs("1"), bs("1"), no_padding())
            .unwrap();
        assert_eq!(q.verdict, Verdict::AlwaysAccept);
        let q = pr
            .anticommutation_question(0, Basis::Z, WBasis::ZPrime, bs("1"), bs("1"), bs("0"), no_padding())
            .unwrap();
        let ans: Vec<Option<Vec<i8>>> = q.queries.iter().map(|x| x.as_ref().map(|q| vec![1; q.arity()])).collect();
        assert!(!accept(&q, &ans, &mut rng).unwrap());

        // energy: product +1 agrees with sign(α) = +1 and |α| = 1
        let q = pr.energy_measurement_question(0, 0).unwrap();
        let ans: Vec<Option<Vec<i8>>> = (0..7).map(|_| Some(vec![1, 1])).collect();
        for _ in 0..100 {
            assert!(!accept(&q, &ans, &mut rng).unwrap());
        }
        let mut ans = ans;
        ans[2] = Some(vec![1, -1]);
        assert!(accept(&q, &ans, &mut rng).unwrap());
    }

    #[test]
    fn energy_shares_follow_logicals() {
        let h = XZHamiltonian::from_words(&[(-0.5, "XZ")]).unwrap();
        let pr = ProtocolParams::new(1.0, steane(), h).unwrap();
        let t = &pr.term_shares()[0];
        assert_eq!(t.sign, -1);
        assert_eq!(t.weight, 0.5);
        for (a, b) in &t.shares {
            assert_eq!((*a, *b), (bs("10"), bs("01")));
        }
    }

    #[test]
    fn characters_match_rule() {
        let pr = params(0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let strings: Vec<BitString> = BitString::all(1).collect();
        let mut questions = Vec::new();
        for &a in &strings {
            for &b in &strings {
                for &c in &strings {
                    for choice in 0..3 {
                        questions.push(pr.linearity_question(2, Basis::Z, a, b, c, choice, no_padding()).unwrap());
                    }
                }
            }
        }
        questions.push(pr.energy_measurement_question(0, 0).unwrap());
        for q in &questions {
            let chars = q.verdict.characters();
            for _ in 0..20 {
                let ans: Vec<Option<Vec<i8>>> = q
                    .queries
                    .iter()
                    .map(|x| x.as_ref().map(|q| (0..q.arity()).map(|_| if rng.gen() { 1 } else { -1 }).collect()))
                    .collect();
                let expansion: f64 = chars
                    .iter()
                    .map(|(c, ch)| c * character_value(ch, &ans).unwrap() as f64)
                    .sum();
                if let Verdict::Parities { .. } = q.verdict {
                    let a = accept(q, &ans, &mut rng).unwrap();
                    assert!((expansion - if a { 1.0 } else { 0.0 }).abs() < 1e-12);
                } else {
                    let vals: f64 = (0..2000).filter(|_| accept(q, &ans, &mut rng).unwrap()).count() as f64 / 2000.0;
                    assert!((vals - expansion).abs() < 0.05);
                }
            }
        }
    }

    #[test]
    fn acceptance_ignores_draw_order() {
        let pr = params(0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = XZHamiltonian::from_words(&[(1.0, "ZI"), (1.0, "XX")]).unwrap();
        let pr2 = ProtocolParams::new(0.5, steane(), h).unwrap();
        for _ in 0..200 {
            // random answer tables keyed by (prover, basis, string)
            let mut table: HashMap<(usize, u64), i8> = HashMap::new();
            let n = 2;
            let (a, b, c) = (random_string(n, &mut rng), random_string(n, &mut rng), random_string(n, &mut rng));
            for j in 0..7 {
                for s in 0..4 {
                    table.insert((j, s), if rng.gen() { 1 } else { -1 });
                }
            }
            let answer = |q: &Question| -> Vec<Option<Vec<i8>>> {
                q.queries
                    .iter()
                    .enumerate()
                    .map(|(j, x)| match x {
                        Some(Query::Pair { s, t, .. }) => Some(vec![table[&(j, s.mask())], table[&(j, t.mask())]]),
                        _ => None,
                    })
                    .collect()
            };
            let choice = rng.gen_range(0..3);
            let q1 = pr2.linearity_question(1, Basis::X, a, b, c, choice, no_padding()).unwrap();
            let q2 = pr2.linearity_question(1, Basis::X, b, a, c, choice ^ (choice < 2) as u8, no_padding()).unwrap();
            assert_eq!(q1.queries, q2.queries);
            assert_eq!(accept(&q1, &answer(&q1), &mut rng).unwrap(), accept(&q2, &answer(&q2), &mut rng).unwrap());
            let s1 = pr2.stabilizer_question(4, Basis::Z, a, b, c, no_padding()).unwrap();
            let s2 = pr2.stabilizer_question(4, Basis::Z, a, b, c, no_padding()).unwrap();
            assert_eq!(accept(&s1, &answer(&s1), &mut rng).unwrap(), accept(&s2, &answer(&s2), &mut rng).unwrap());
        }
        let _ = pr;
    }

    #[test]
    fn query_marginals_do_not_reveal_role() {
        let h = XZHamiltonian::from_words(&[(1.0, "Z")]).unwrap();
        let pr = ProtocolParams::new(0.0, steane(), h).unwrap().with_focus(Some(TestKind::Stabilizer));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let prover = 6;
        let mut special: HashMap<Query, f64> = HashMap::new();
        let mut other: HashMap<Query, f64> = HashMap::new();
        let (mut ns, mut no) = (0.0, 0.0);
        for _ in 0..60_000 {
            let q = pr.sample_question(&mut rng).unwrap();
            let key = q.queries[prover].clone().unwrap();
            if q.special == prover {
                *special.entry(key).or_default() += 1.0;
                ns += 1.0;
            } else {
                *other.entry(key).or_default() += 1.0;
                no += 1.0;
            }
        }
        assert_eq!(special.len(), 6);
        for (k, v) in &special {
            let f1 = v / ns;
            let f2 = other.get(k).copied().unwrap_or(0.0) / no;
            assert!((f1 - f2).abs() < 0.025, "{k}: {f1} vs {f2}");
        }
    }
}

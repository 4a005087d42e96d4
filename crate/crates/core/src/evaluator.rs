//! Acceptance probabilities of a strategy: exact enumeration and seeded
//! Monte Carlo, plus the closed-form completeness value.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{energy_formula, measured_energy_formula, XZHamiltonian};
use crate::protocol::{accept, xor_characters, Character, ProtocolParams, Query, Question, TestKind, Verdict};
use crate::report::{ser_f17, ser_opt_f17};
use crate::strategy::Strategy;

/// Environment variable holding the worker-thread budget.
pub const THREADS_ENV: &str = "XZMIP_THREADS";
/// Largest state for genuine full-answer sampling.
pub const FULL_ANSWER_LIMIT: usize = 14;
const CHUNK: u64 = 2048;

/// `3/4 + √2/8`.
pub fn omega_ac_limit() -> f64 {
    0.75 + std::f64::consts::SQRT_2 / 8.0
}

/// Honest anticommutation value at finite `n`:
/// `1 − ((1 − 2⁻ⁿ)/2)(½ − √2/4)`.
pub fn omega_ac(n: usize) -> f64 {
    let odd = (1.0 - 0.5f64.powi(n as i32)) / 2.0;
    1.0 - odd * (0.5 - std::f64::consts::SQRT_2 / 4.0)
}

pub fn omega_encode(omega_ac: f64) -> f64 {
    2.0 / 3.0 + omega_ac / 3.0
}

/// `β = 16·p − 12`.
pub fn bias(p_anticommutation: f64) -> f64 {
    16.0 * p_anticommutation - 12.0
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestEntry {
    #[serde(serialize_with = "ser_f17")]
    pub weight: f64,
    #[serde(serialize_with = "ser_f17")]
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_f17")]
    pub stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Constants {
    #[serde(serialize_with = "ser_f17")]
    pub omega_ac_limit: f64,
    #[serde(serialize_with = "ser_f17")]
    pub omega_ac_finite_n: f64,
    #[serde(serialize_with = "ser_f17")]
    pub omega_encode_limit: f64,
    #[serde(serialize_with = "ser_f17")]
    pub omega_encode_finite_n: f64,
}

impl Constants {
    pub fn at(n: usize) -> Self {
        Self {
            omega_ac_limit: omega_ac_limit(),
            omega_ac_finite_n: omega_ac(n),
            omega_encode_limit: omega_encode(omega_ac_limit()),
            omega_encode_finite_n: omega_encode(omega_ac(n)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub mode: String,
    pub strategy: String,
    pub n: usize,
    #[serde(serialize_with = "ser_f17")]
    pub p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(serialize_with = "ser_f17")]
    pub total: f64,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_f17")]
    pub total_stderr: Option<f64>,
    pub per_test: BTreeMap<String, TestEntry>,
    #[serde(serialize_with = "ser_opt_f17")]
    pub beta: Option<f64>,
    pub constants: Constants,
}

impl EvaluationReport {
    pub fn test(&self, t: TestKind) -> Option<&TestEntry> {
        self.per_test.get(t.name())
    }

    pub fn value(&self, t: TestKind) -> Option<f64> {
        self.test(t).map(|e| e.value)
    }

    pub fn to_json(&self) -> Result<String> {
        crate::report::to_json_pretty(self)
    }
}

/// Runs `f` on a pool of `threads` workers (all cores when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::Config("thread budget must be positive".into()));
        }
        b = b.num_threads(t);
    }
    let pool = b
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Thread budget from the environment, if set.
pub fn env_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::Config(format!("{THREADS_ENV}={v} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

/// Sum in a fixed binary tree, independent of how values were produced.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n if n <= 8 => v.iter().sum(),
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

fn question_rng(q: &Question) -> ChaCha8Rng {
    let mut h = DefaultHasher::new();
    q.special.hash(&mut h);
    q.queries.hash(&mut h);
    ChaCha8Rng::seed_from_u64(h.finish())
}

/// Exact acceptance probability of one round.
pub fn question_value(strategy: &Strategy, q: &Question) -> Result<f64> {
    let mut rng = question_rng(q);
    let mut acc = 0.0;
    for (c, ch) in q.verdict.characters() {
        acc += c * strategy.character_expectation(q, &ch, &mut rng)?;
    }
    Ok(acc)
}

fn check_unit(test: TestKind, v: f64) -> Result<f64> {
    if !(-1e-9..=1.0 + 1e-9).contains(&v) {
        return Err(Error::Invariant(format!("{} acceptance {v} outside [0, 1]", test.name())));
    }
    Ok(v.clamp(0.0, 1.0))
}

/// Conditional acceptance of one test, by exhaustive enumeration.
pub fn exact_test_value(strategy: &Strategy, params: &ProtocolParams, test: TestKind) -> Result<f64> {
    check_compatible(strategy, params)?;
    let qs = params.enumerate_test(test)?;
    let terms = qs
        .par_iter()
        .map(|(q, w)| question_value(strategy, q).map(|v| v * w))
        .collect::<Result<Vec<f64>>>()?;
    check_unit(test, pairwise_sum(&terms))
}

fn check_compatible(strategy: &Strategy, params: &ProtocolParams) -> Result<()> {
    if strategy.n() != params.n() || strategy.r() != params.r() {
        return Err(Error::LengthMismatch {
            left: strategy.n() * strategy.r(),
            right: params.n() * params.r(),
        });
    }
    Ok(())
}

fn tests_of(params: &ProtocolParams) -> Vec<(TestKind, f64)> {
    match params.focus() {
        Some(f) => vec![(f, 1.0)],
        None => TestKind::ALL.iter().map(|&t| (t, t.weight(params.p()))).collect(),
    }
}

/// Exact acceptance: every test's conditional value, weighted by the
/// mixture. Deterministic for any thread count.
pub fn exact_value(strategy: &Strategy, params: &ProtocolParams) -> Result<EvaluationReport> {
    let mut per_test = BTreeMap::new();
    let mut total = 0.0;
    for (test, weight) in tests_of(params) {
        let value = exact_test_value(strategy, params, test)?;
        total += weight * value;
        per_test.insert(
            test.name().to_string(),
            TestEntry { weight, value, stderr: None, count: None },
        );
    }
    let beta = per_test.get(TestKind::Anticommutation.name()).map(|e| bias(e.value));
    Ok(EvaluationReport {
        mode: "exact".into(),
        strategy: strategy.label.clone(),
        n: params.n(),
        p: params.p(),
        seed: None,
        samples: None,
        total,
        total_stderr: None,
        per_test,
        beta,
        constants: Constants::at(params.n()),
    })
}

#[derive(Clone, Debug)]
pub struct McOptions {
    pub samples: u64,
    pub seed: u64,
    /// Measure every prover genuinely instead of sampling check parities.
    pub full_answers: bool,
    pub transcript: bool,
}

impl McOptions {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self { samples, seed, full_answers: false, transcript: false }
    }
}

/// One line of a JSONL transcript.
#[derive(Clone, Debug, Serialize)]
pub struct TranscriptRecord {
    pub seed: u64,
    pub stream: u64,
    pub test: TestKind,
    pub special: usize,
    pub queries: Vec<Option<Query>>,
    pub padded: Vec<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub answers: Option<Vec<Option<Vec<i8>>>>,
    /// Values of the deciding answer products, when answers are not sampled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parities: Option<Vec<i8>>,
    pub accepted: bool,
}

pub fn write_transcript<W: Write>(out: &mut W, records: &[TranscriptRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// The RNG of sample `index` under `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws the deciding answer products of `q` from their exact joint law.
fn sample_parities<R: Rng>(strategy: &Strategy, q: &Question, rng: &mut R) -> Result<Vec<i8>> {
    let chars = q.verdict.decision_characters();
    let k = chars.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut moments = vec![0.0; 1 << k];
    for (subset, m) in moments.iter_mut().enumerate() {
        let mut ch: Character = Vec::new();
        for (c, x) in chars.iter().enumerate() {
            if subset >> c & 1 == 1 {
                ch = xor_characters(&ch, x);
            }
        }
        *m = strategy.character_expectation(q, &ch, rng)?;
    }
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for outcome in 0..(1usize << k) {
        // bit c of `outcome` set means value −1 for decision character c
        let mut p = 0.0;
        for (subset, m) in moments.iter().enumerate() {
            let sign = if (subset & outcome).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            p += sign * m;
        }
        p /= (1 << k) as f64;
        if p > 0.0 {
            last = outcome;
        }
        acc += p;
        if u < acc && p > 0.0 {
            last = outcome;
            break;
        }
    }
    Ok((0..k).map(|c| if last >> c & 1 == 0 { 1 } else { -1 }).collect())
}

struct SampleOutcome {
    test: TestKind,
    accepted: bool,
    record: Option<TranscriptRecord>,
}

fn run_sample(strategy: &Strategy, params: &ProtocolParams, opts: &McOptions, index: u64) -> Result<SampleOutcome> {
    let mut rng = sample_rng(opts.seed, index);
    let q = params.sample_question(&mut rng)?;
    let (accepted, answers, parities) = if opts.full_answers {
        let answers = strategy.sample_answers(&q, &mut rng)?;
        let a = accept(&q, &answers, &mut rng)?;
        (a, Some(answers), None)
    } else {
        let values = sample_parities(strategy, &q, &mut rng)?;
        let a = q.verdict.decide(&values, &mut rng);
        (a, None, Some(values))
    };
    let record = opts.transcript.then(|| TranscriptRecord {
        seed: opts.seed,
        stream: index,
        test: q.test,
        special: q.special,
        queries: q.queries.clone(),
        padded: q.padded.clone(),
        answers,
        parities,
        accepted,
    });
    Ok(SampleOutcome { test: q.test, accepted, record })
}

/// Monte Carlo estimate with per-sample RNG streams; counts are integers,
/// so the report does not depend on the worker count.
pub fn mc_estimate(strategy: &Strategy, params: &ProtocolParams, samples: u64, seed: u64) -> Result<EvaluationReport> {
    Ok(mc_estimate_with(strategy, params, &McOptions::new(samples, seed))?.0)
}

pub fn mc_estimate_with(
    strategy: &Strategy,
    params: &ProtocolParams,
    opts: &McOptions,
) -> Result<(EvaluationReport, Vec<TranscriptRecord>)> {
    check_compatible(strategy, params)?;
    if opts.samples == 0 {
        return Err(Error::Config("samples must be at least 1".into()));
    }
    if opts.full_answers && strategy.state().num_qubits() > FULL_ANSWER_LIMIT {
        return Err(Error::Budget(format!(
            "full-answer sampling needs at most {FULL_ANSWER_LIMIT} qubits, state has {}",
            strategy.state().num_qubits()
        )));
    }
    let chunks = opts.samples.div_ceil(CHUNK);
    type Tally = (BTreeMap<TestKind, (u64, u64)>, Vec<TranscriptRecord>);
    let results: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut tally: BTreeMap<TestKind, (u64, u64)> = BTreeMap::new();
            let mut records = Vec::new();
            let end = ((c + 1) * CHUNK).min(opts.samples);
            for idx in c * CHUNK..end {
                let s = run_sample(strategy, params, opts, idx)?;
                let e = tally.entry(s.test).or_default();
                e.0 += 1;
                e.1 += s.accepted as u64;
                records.extend(s.record);
            }
            Ok((tally, records))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tally: BTreeMap<TestKind, (u64, u64)> = BTreeMap::new();
    let mut records = Vec::new();
    for (t, r) in results {
        for (k, (n, a)) in t {
            let e = tally.entry(k).or_default();
            e.0 += n;
            e.1 += a;
        }
        records.extend(r);
    }
    let binom = |a: u64, n: u64| {
        let v = a as f64 / n as f64;
        (v, (v * (1.0 - v) / n as f64).sqrt())
    };
    let mut per_test = BTreeMap::new();
    let mut accepted = 0;
    for (test, weight) in tests_of(params) {
        if let Some(&(n, a)) = tally.get(&test) {
            accepted += a;
            let (value, stderr) = binom(a, n);
            per_test.insert(
                test.name().to_string(),
                TestEntry { weight, value, stderr: Some(stderr), count: Some(n) },
            );
        }
    }
    let (total, total_stderr) = binom(accepted, opts.samples);
    let beta = per_test.get(TestKind::Anticommutation.name()).map(|e| bias(e.value));
    let report = EvaluationReport {
        mode: "mc".into(),
        strategy: strategy.label.clone(),
        n: params.n(),
        p: params.p(),
        seed: Some(opts.seed),
        samples: Some(opts.samples),
        total,
        total_stderr: Some(total_stderr),
        per_test,
        beta,
        constants: Constants::at(params.n()),
    };
    Ok((report, records))
}

/// Closed-form honest value with the large-`n` limit and the finite-`n`
/// anticommutation constants.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Completeness {
    #[serde(serialize_with = "ser_f17")]
    pub lambda_min: f64,
    #[serde(serialize_with = "ser_f17")]
    pub omega_energy: f64,
    #[serde(serialize_with = "ser_f17")]
    pub limit: f64,
    #[serde(serialize_with = "ser_f17")]
    pub finite_n: f64,
    /// Finite-`n` value with the energy term evaluated for the literal
    /// accept/reject rule of the measurement test.
    #[serde(serialize_with = "ser_f17")]
    pub finite_n_measured_rule: f64,
}

pub fn completeness_formula(h: &XZHamiltonian, p: f64, at_n: usize) -> Result<Completeness> {
    let (lambda, _) = h.ground()?;
    let (m, l1) = (h.m(), h.alpha_l1());
    let omega_energy = 0.5 + 0.5 * energy_formula(lambda, m, l1);
    let measured = 0.5 + 0.5 * measured_energy_formula(lambda, m, l1);
    let enc_limit = omega_encode(omega_ac_limit());
    let enc_n = omega_encode(omega_ac(at_n));
    Ok(Completeness {
        lambda_min: lambda,
        omega_energy,
        limit: (1.0 - p) * enc_limit + p * omega_energy,
        finite_n: (1.0 - p) * enc_n + p * omega_energy,
        finite_n_measured_rule: (1.0 - p) * enc_n + p * measured,
    })
}

/// Whether a verdict can reject at all; used by callers filtering rounds.
pub fn can_reject(v: &Verdict) -> bool {
    !matches!(v, Verdict::AlwaysAccept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{steane, Basis};
    use crate::pauli::BitString;
    use crate::strategy::{Corruption, WRule};

    fn z1() -> XZHamiltonian {
        XZHamiltonian::from_words(&[(1.0, "Z")]).unwrap()
    }

    #[test]
    fn closed_forms() {
        assert!((omega_ac(1) - 0.9633883476).abs() < 1e-10);
        assert!((omega_ac(2) - 0.9450825214724776).abs() < 1e-12);
        assert!((omega_ac(3) - 0.9359296083845573).abs() < 1e-12);
        assert!((omega_ac(3) - 0.9359302).abs() < 1e-6);
        assert!((omega_ac_limit() - 0.9267766953).abs() < 1e-10);
        assert!((omega_encode(omega_ac(1)) - 0.9877961159).abs() < 1e-10);
        let c = completeness_formula(&z1(), 0.5, 1).unwrap();
        assert!((c.finite_n - 0.9313980580).abs() < 1e-10);
        assert!((c.omega_energy - 0.875).abs() < 1e-12);
        let c0 = completeness_formula(&z1(), 0.0, 1).unwrap();
        assert!((c0.finite_n - omega_encode(omega_ac(1))).abs() < 1e-15);
        assert!((c0.limit - omega_encode(omega_ac_limit())).abs() < 1e-15);
    }

    #[test]
    fn honest_exact_n1() {
        let s = Strategy::honest(&z1(), &steane()).unwrap();
        let pr = ProtocolParams::new(0.0, steane(), z1()).unwrap();
        let rep = exact_value(&s, &pr).unwrap();
        for t in [TestKind::Linearity, TestKind::Stabilizer, TestKind::EnergyConsistency] {
            assert!((rep.value(t).unwrap() - 1.0).abs() < 1e-9, "{t:?}");
        }
        assert!((rep.value(TestKind::Anticommutation).unwrap() - omega_ac(1)).abs() < 1e-9);
        assert!((rep.total - 0.9877961159).abs() < 1e-9);
        // the literal measurement rule accepts the ground state of Z always
        assert!((rep.value(TestKind::EnergyMeasurement).unwrap() - 1.0).abs() < 1e-9);
        let b = rep.beta.unwrap();
        assert!((b - bias(omega_ac(1))).abs() < 1e-8);
    }

    #[test]
    fn energy_measurement_matches_rule_formula() {
        let h = XZHamiltonian::from_words(&[(0.7, "XZ"), (-0.4, "ZZ"), (0.2, "XI")]).unwrap();
        let s = Strategy::honest(&h, &steane()).unwrap();
        let pr = ProtocolParams::new(1.0, steane(), h.clone()).unwrap();
        let v = exact_test_value(&s, &pr, TestKind::EnergyMeasurement).unwrap();
        let (_, g) = h.ground().unwrap();
        assert!((v - h.measured_energy_acceptance(&g).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn mixture_is_linear_in_p() {
        let s = Strategy::honest(&z1(), &steane()).unwrap();
        let v = |p: f64| exact_value(&s, &ProtocolParams::new(p, steane(), z1()).unwrap()).unwrap().total;
        let (v0, v1) = (v(0.0), v(1.0));
        for p in [0.25, 0.5, 0.9] {
            assert!((v(p) - ((1.0 - p) * v0 + p * v1)).abs() < 1e-12);
        }
    }

    #[test]
    fn classical_and_corrupted_values() {
        let pr = ProtocolParams::new(0.0, steane(), z1()).unwrap();
        let c = Strategy::classical_linear(BitString::zeros(1), BitString::zeros(1), WRule::FollowX, 7).unwrap();
        let rep = exact_value(&c, &pr).unwrap();
        assert!((rep.value(TestKind::Linearity).unwrap() - 1.0).abs() < 1e-12);
        assert!((rep.value(TestKind::Stabilizer).unwrap() - 1.0).abs() < 1e-12);
        assert!((rep.value(TestKind::Anticommutation).unwrap() - 0.9375).abs() < 1e-12);

        let honest = Strategy::honest(&z1(), &steane()).unwrap();
        let flipped = honest.corrupted(&[Corruption::SignFlip { prover: 0, basis: Basis::X }]).unwrap();
        let stab = exact_test_value(&flipped, &pr, TestKind::Stabilizer).unwrap();
        assert!(stab < 1.0 - 0.01);
        let prod = honest.corrupted(&[Corruption::ProductGround]).unwrap();
        let ac = exact_test_value(&prod, &pr, TestKind::Anticommutation).unwrap();
        assert!(ac < omega_ac(1) - 0.01);
    }

    #[test]
    fn mc_is_deterministic_and_close() {
        let s = Strategy::honest(&z1(), &steane()).unwrap();
        let pr = ProtocolParams::new(0.0, steane(), z1()).unwrap();
        let a = mc_estimate(&s, &pr, 20_000, 7).unwrap();
        let b = with_threads(Some(1), || mc_estimate(&s, &pr, 20_000, 7)).unwrap().unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let exact = 0.9877961159;
        assert!((a.total - exact).abs() <= 4.0 * a.total_stderr.unwrap());
        let one = mc_estimate(&s, &pr, 1, 3).unwrap();
        assert!(one.total == 0.0 || one.total == 1.0);
        assert!(mc_estimate(&s, &pr, 0, 3).is_err());
    }

    #[test]
    fn full_answer_mode_agrees() {
        let s = Strategy::honest(&z1(), &steane()).unwrap();
        let pr = ProtocolParams::new(0.5, steane(), z1()).unwrap();
        let mut opts = McOptions::new(6000, 5);
        opts.full_answers = true;
        opts.transcript = true;
        let (rep, recs) = mc_estimate_with(&s, &pr, &opts).unwrap();
        let exact = exact_value(&s, &pr).unwrap();
        assert!((rep.total - exact.total).abs() <= 4.0 * rep.total_stderr.unwrap());
        assert_eq!(recs.len(), 6000);
        assert!(recs[0].answers.is_some());
        // replay of one record
        let r = &recs[17];
        let mut rng = sample_rng(5, 17);
        let q = pr.sample_question(&mut rng).unwrap();
        assert_eq!(q.queries, r.queries);
    }

    #[test]
    fn pairwise_sum_matches_sum() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64 * 0.001).collect();
        assert!((pairwise_sum(&v) - v.iter().sum::<f64>()).abs() < 1e-9);
    }
}

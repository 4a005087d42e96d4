//! Marginal observables, exactly linear extraction, commutation residuals
//! and the swap isometry.
//!
//! Families are operators on a fixed register of a host space of
//! `num_qubits` qubits. Extraction appends `1 + n` ancilla qubits to the host:
//! one for the dilation of each member to an observable and `n` indexing the
//! Fourier outcome `u`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;

use crate::code::Basis;
use crate::dense::{DenseOperator, LocalEmbedding, C64, ONE, ZERO};
use crate::error::{Error, Result};
use crate::pauli::{BitString, PauliWord, Sign};
use crate::protocol::Query;
use crate::report::{ser_f17, ser_opt_f17};
use crate::state::{check_limit, global_pauli_expectation, GlobalPauli, StateVector};
use crate::strategy::Strategy;

/// Largest register (in qubits) a family may act on.
pub const FAMILY_LIMIT: usize = 8;
/// Largest state fed to the swap isometry, ancillas included.
pub const SWAP_LIMIT: usize = 21;

const PARSEVAL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FamilyLabel {
    Xhat,
    Zhat,
    Xlin,
    Zlin,
}

/// Operators `a ↦ O(a)` for all `a ∈ {0,1}ⁿ`, indexed by `a.mask()`, acting
/// on `targets` of a `num_qubits`-qubit host.
#[derive(Clone, Debug)]
pub struct ObservableFamily {
    pub label: FamilyLabel,
    n: usize,
    num_qubits: usize,
    targets: Vec<usize>,
    members: Vec<DenseOperator>,
}

impl ObservableFamily {
    pub fn new(
        label: FamilyLabel,
        n: usize,
        num_qubits: usize,
        targets: Vec<usize>,
        members: Vec<DenseOperator>,
    ) -> Result<Self> {
        if members.len() != 1 << n {
            return Err(Error::Invalid(format!(
                "family over {n}-bit strings needs {} members, got {}",
                1usize << n,
                members.len()
            )));
        }
        if targets.len() > FAMILY_LIMIT + 1 + n {
            return Err(Error::OverLimit {
                what: "family register qubits",
                size: targets.len(),
                limit: FAMILY_LIMIT,
            });
        }
        LocalEmbedding::new(num_qubits, &targets)?;
        for m in &members {
            if m.dim() != 1 << targets.len() {
                return Err(Error::LengthMismatch { left: m.dim(), right: 1 << targets.len() });
            }
            if !m.is_hermitian(1e-9) {
                return Err(Error::Invalid("family member is not Hermitian".into()));
            }
        }
        Ok(Self { label, n, num_qubits, targets, members })
    }

    /// `X(a)` or `Z(a)` on `targets`.
    pub fn paulis(label: FamilyLabel, basis: Basis, targets: Vec<usize>, num_qubits: usize) -> Result<Self> {
        let n = targets.len();
        let members = BitString::all(n)
            .map(|a| basis.word(a).to_matrix())
            .collect::<Result<Vec<_>>>()?;
        Self::new(label, n, num_qubits, targets, members)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn members(&self) -> &[DenseOperator] {
        &self.members
    }

    pub fn member(&self, a: &BitString) -> &DenseOperator {
        &self.members[a.mask() as usize]
    }

    /// The same family in a larger host whose extra qubits come last.
    pub fn in_host(&self, num_qubits: usize) -> Result<Self> {
        if num_qubits < self.num_qubits {
            return Err(Error::Invalid("host cannot shrink".into()));
        }
        Ok(Self { num_qubits, ..self.clone() })
    }

    /// The same operators on other qubits.
    pub fn retargeted(&self, targets: Vec<usize>, num_qubits: usize) -> Result<Self> {
        Self::new(self.label, self.n, num_qubits, targets, self.members.clone())
    }

    /// `O(a)` applied to host amplitudes.
    pub fn apply(&self, a: usize, amps: &[C64]) -> Result<Vec<C64>> {
        LocalEmbedding::new(self.num_qubits, &self.targets)?.apply(&self.members[a], amps)
    }

    pub fn max_square_defect(&self) -> f64 {
        self.members.iter().map(|m| m.square_defect()).fold(0.0, f64::max)
    }

    pub fn max_operator_norm(&self) -> f64 {
        self.members.iter().map(|m| m.operator_norm()).fold(0.0, f64::max)
    }

    pub fn is_observable_family(&self, tol: f64) -> bool {
        self.max_square_defect() <= tol
    }

    /// `max_{a,b} ‖O(a)O(b) − O(a+b)‖` in Frobenius norm.
    pub fn linearity_residual(&self) -> f64 {
        let d = 1usize << self.n;
        (0..d * d)
            .into_par_iter()
            .map(|k| {
                let (a, b) = (k / d, k % d);
                self.members[a].mul(&self.members[b]).sub(&self.members[a ^ b]).norm()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// `X̂(a) = 2⁻ⁿ Σ_b O(a)` where `O(a)` is prover `i`'s answer to `a` in the
/// pair query `(basis, a, b)`. Acts on the prover's register in the
/// strategy's state.
pub fn marginal_observables(strategy: &Strategy, prover: usize, basis: Basis) -> Result<ObservableFamily> {
    if prover >= strategy.r() {
        return Err(Error::Invalid(format!("prover {prover} out of range")));
    }
    let n = strategy.n();
    check_limit(n, FAMILY_LIMIT)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut members = Vec::with_capacity(1 << n);
    for a in BitString::all(n) {
        let mut acc = DenseOperator::zeros(1 << n);
        for b in BitString::all(n) {
            let (query, slot, _) = Query::pair(basis, a, b);
            let o = strategy
                .behavior()
                .parity_observable(prover, &query, 1 << slot, &mut rng)?
                .to_dense(n)?;
            acc = acc.add(&o);
        }
        members.push(acc.scale(1.0 / (1usize << n) as f64));
    }
    let label = match basis {
        Basis::X => FamilyLabel::Xhat,
        Basis::Z => FamilyLabel::Zhat,
    };
    ObservableFamily::new(label, n, strategy.state().num_qubits(), strategy.register(prover), members)
}

/// Intermediate objects of [`extract_linear`].
#[derive(Clone, Debug)]
pub struct Extraction {
    /// `Y_a`: each input member dilated to an observable on `[anc][register]`.
    pub dilated: ObservableFamily,
    /// `Ŷ_u = 2⁻ⁿ Σ_a (−1)^{a·u} Y_a`.
    pub fourier: Vec<DenseOperator>,
    /// `max |Σ_u Ŷ_u² − I|`.
    pub parseval_defect: f64,
    /// `C_a` on `[anc][register][outcome ancilla]`.
    pub linear: ObservableFamily,
}

fn sign(parity: u32) -> f64 {
    if parity & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

const DILATION_SNAP: f64 = 1e-12;

/// `[[T, S], [S, −T]]` with `S = √(I − T²)`, ancilla most significant.
fn halmos(t: &DenseOperator) -> Result<DenseOperator> {
    // Rounding leaves 1 - v^2 near 1e-16 for observables; its square root would be 1e-8.
    let s = t.hermitian_map(|v| {
        let gap = 1.0 - v * v;
        if gap < DILATION_SNAP {
            0.0
        } else {
            gap.sqrt()
        }
    })?;
    let d = t.dim();
    let (tm, sm) = (t.matrix(), s.matrix());
    Ok(DenseOperator::new(DMatrix::from_fn(2 * d, 2 * d, |r, c| {
        let (br, bc) = (r / d, c / d);
        let (i, j) = (r % d, c % d);
        match (br, bc) {
            (0, 0) => tm[(i, j)],
            (1, 1) => -tm[(i, j)],
            _ => sm[(i, j)],
        }
    })))
}

/// Unitary whose columns `h·L` are given (orthonormal), completed by
/// Gram–Schmidt over standard basis vectors.
fn complete_unitary(dim: usize, l: usize, fixed: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let total = dim * l;
    let mut cols: Vec<DVector<C64>> = Vec::with_capacity(total);
    let mut slot = vec![usize::MAX; total];
    for h in 0..dim {
        slot[h * l] = cols.len();
        cols.push(fixed.column(h).into_owned());
    }
    let mut free: Vec<usize> = (0..total).filter(|c| c % l != 0).collect();
    free.reverse();
    for e in 0..total {
        if free.is_empty() {
            break;
        }
        let mut v = DVector::<C64>::zeros(total);
        v[e] = ONE;
        for _ in 0..2 {
            for c in &cols {
                let p = c.dotc(&v);
                v -= c * p;
            }
        }
        let nv = v.norm();
        if nv > 1e-6 {
            let idx = free.pop().expect("non-empty");
            slot[idx] = cols.len();
            cols.push(v / C64::new(nv, 0.0));
        }
    }
    if cols.len() != total {
        return Err(Error::Invariant("Naimark completion is rank deficient".into()));
    }
    Ok(DMatrix::from_fn(total, total, |r, c| cols[slot[c]][r]))
}

/// Fourier extraction of an exactly linear family `C_a` with
/// `C_aC_b = C_{a+b}`.
///
/// Each member `T` is dilated to the observable `[[T, √(I−T²)], [√(I−T²), −T]]`
/// on a fresh ancilla. The POVM `B^u = Ŷ_u²` is realized projectively by the
/// unitary `U` with `U(h ⊗ |0⟩) = Σ_u √B^u h ⊗ |u⟩`, and
/// `C_a = U† (I ⊗ Z(a)) U`.
pub fn extract(family: &ObservableFamily) -> Result<Extraction> {
    let n = family.n;
    let k = family.targets.len();
    check_limit(k + 1 + n, 2 * FAMILY_LIMIT + 1)?;
    for m in &family.members {
        if m.operator_norm() > 1.0 + 1e-9 {
            return Err(Error::Invalid(format!(
                "family member has operator norm {} > 1",
                m.operator_norm()
            )));
        }
    }
    let nq = family.num_qubits;
    let anc = nq;
    let outcome: Vec<usize> = (nq + 1..nq + 1 + n).collect();
    let host = nq + 1 + n;

    let ys = family.members.iter().map(halmos).collect::<Result<Vec<_>>>()?;
    let d = 1usize << (k + 1);
    let l = 1usize << n;
    let fourier: Vec<DenseOperator> = (0..l)
        .map(|u| {
            let mut acc = DenseOperator::zeros(d);
            for (a, y) in ys.iter().enumerate() {
                acc = acc.add(&y.scale(sign((a & u).count_ones())));
            }
            acc.scale(1.0 / l as f64)
        })
        .collect();
    let mut parseval = DenseOperator::zeros(d);
    for y in &fourier {
        parseval = parseval.add(&y.mul(y));
    }
    let parseval_defect = parseval.sub(&DenseOperator::identity(d)).matrix().camax();
    if parseval_defect > PARSEVAL_TOL {
        return Err(Error::Invariant(format!(
            "Fourier weights do not sum to the identity (defect {parseval_defect:.3e})"
        )));
    }

    let roots = fourier
        .iter()
        .map(|y| y.hermitian_map(f64::abs))
        .collect::<Result<Vec<_>>>()?;
    let v = DMatrix::from_fn(d * l, d, |row, h| {
        let (hp, u) = (row / l, row % l);
        roots[u].matrix()[(hp, h)]
    });
    let u = complete_unitary(d, l, &v)?;
    let u_adj = u.adjoint();
    let members: Vec<DenseOperator> = (0..l)
        .map(|a| {
            let z = DVector::from_fn(d * l, |row, _| C64::new(sign(((row % l) & a).count_ones()), 0.0));
            DenseOperator::new(&u_adj * DMatrix::from_diagonal(&z) * &u)
        })
        .collect();

    let mut dil_targets = vec![anc];
    dil_targets.extend_from_slice(&family.targets);
    let mut lin_targets = dil_targets.clone();
    lin_targets.extend_from_slice(&outcome);
    let (dlabel, llabel) = match family.label {
        FamilyLabel::Zhat | FamilyLabel::Zlin => (FamilyLabel::Zhat, FamilyLabel::Zlin),
        _ => (FamilyLabel::Xhat, FamilyLabel::Xlin),
    };
    Ok(Extraction {
        dilated: ObservableFamily::new(dlabel, n, host, dil_targets, ys)?,
        fourier,
        parseval_defect,
        linear: ObservableFamily::new(llabel, n, host, lin_targets, members)?,
    })
}

/// The exactly linear family `C_a` extracted from `family`.
pub fn extract_linear(family: &ObservableFamily) -> Result<ObservableFamily> {
    Ok(extract(family)?.linear)
}

/// `ψ ⊗ |0…0⟩` on `num_qubits` qubits.
pub fn with_ancillas(psi: &StateVector, num_qubits: usize) -> Result<StateVector> {
    let extra = num_qubits
        .checked_sub(psi.num_qubits())
        .ok_or_else(|| Error::Invalid("ancilla padding cannot shrink a state".into()))?;
    check_limit(num_qubits, SWAP_LIMIT)?;
    let mut amps = vec![ZERO; 1 << num_qubits];
    for (i, &v) in psi.amplitudes().iter().enumerate() {
        amps[i << extra] = v;
    }
    StateVector::new(amps)
}

/// One named residual with its averaging distribution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualEntry {
    #[serde(serialize_with = "ser_f17")]
    pub value: f64,
    /// `uniform(a,b)`, `uniform(a)`, `max(a,b)`, … .
    pub averaging: String,
    /// Number of strings or pairs averaged over.
    pub count: usize,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_f17")]
    pub stderr: Option<f64>,
}

impl ResidualEntry {
    fn exact(value: f64, averaging: &str, count: usize) -> Self {
        Self { value: value.max(0.0), averaging: averaging.into(), count, stderr: None }
    }
}

/// Deviation of one `(a, b)` pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairDeviation {
    pub a: BitString,
    pub b: BitString,
    #[serde(serialize_with = "ser_f17")]
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub kind: String,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prover: Option<usize>,
    pub residuals: BTreeMap<String, ResidualEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<PairDeviation>,
}

impl ResidualReport {
    fn new(kind: &str, n: usize) -> Self {
        Self {
            kind: kind.into(),
            n,
            strategy: None,
            prover: None,
            residuals: BTreeMap::new(),
            pairs: Vec::new(),
        }
    }

    fn put(&mut self, name: &str, entry: ResidualEntry) {
        self.residuals.insert(name.into(), entry);
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.residuals.get(name).map(|e| e.value)
    }

    pub fn to_json(&self) -> Result<String> {
        crate::report::to_json_pretty(self)
    }
}

fn dist_sqr(u: &[C64], v: &[C64], s: f64) -> f64 {
    u.iter().zip(v).map(|(x, y)| (x - y * s).norm_sqr()).sum()
}

fn dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(x, y)| x.conj() * y).sum()
}

/// Everything the linearity report computes, kept for reuse by the
/// isometry step.
#[derive(Clone, Debug)]
pub struct LinearityAnalysis {
    pub report: ResidualReport,
    /// Purified reduced state of the prover's register with all ancillas.
    pub state: StateVector,
    pub xhat: ObservableFamily,
    pub zhat: ObservableFamily,
    pub x: Extraction,
    pub z: Extraction,
}

/// Residuals of prover `i`'s extracted linear observables; see
/// [`analyze_linearity`].
pub fn quantum_linearity_report(strategy: &Strategy, prover: usize) -> Result<ResidualReport> {
    Ok(analyze_linearity(strategy, prover)?.report)
}

/// Extracts `Xlin` and `Zlin` for prover `i` and evaluates, on the dilated
/// state, `E‖(Xlin(a)Zlin(b) − (−1)^{a·b} Zlin(b)Xlin(a))ψ‖²` (all pairs and
/// restricted to `a·b = 1` and `a·b = 0`), the closeness sums
/// `E_a‖(Xlin(a) − X̂(a))ψ‖²` and `E_b‖(Zlin(b) − Ẑ(b))ψ‖²`, and the
/// consistency `E_a ½(1 + ⟨Y_a C_a⟩)` of each extraction.
///
/// The state is the purification of the prover's reduced density matrix,
/// ordered `[register][environment][X ancillas][Z ancillas]`; every operator
/// involved acts on the register and ancillas only.
pub fn analyze_linearity(strategy: &Strategy, prover: usize) -> Result<LinearityAnalysis> {
    let n = strategy.n();
    let xhat0 = marginal_observables(strategy, prover, Basis::X)?;
    let zhat0 = marginal_observables(strategy, prover, Basis::Z)?;
    let rho = strategy.state().reduced_density(&strategy.register(prover))?;
    let psi = StateVector::purify(&rho)?;
    let reg: Vec<usize> = (0..n).collect();
    let base = 2 * n;
    let xhat = xhat0.retargeted(reg.clone(), base)?;
    let x = extract(&xhat)?;
    let zhat = zhat0.retargeted(reg, x.linear.num_qubits())?;
    let z = extract(&zhat)?;
    let total = z.linear.num_qubits();
    let state = with_ancillas(&psi, total)?;
    let xl = x.linear.in_host(total)?;
    let zl = z.linear.in_host(total)?;
    let xd = x.dilated.in_host(total)?;
    let zd = z.dilated.in_host(total)?;
    let xh = xhat.in_host(total)?;
    let zh = zhat.in_host(total)?;

    let l = 1usize << n;
    let amps = state.amplitudes();
    let xs: Vec<Vec<C64>> = (0..l).into_par_iter().map(|a| xl.apply(a, amps)).collect::<Result<_>>()?;
    let zs: Vec<Vec<C64>> = (0..l).into_par_iter().map(|b| zl.apply(b, amps)).collect::<Result<_>>()?;
    let pairs: Vec<(f64, u32)> = (0..l * l)
        .into_par_iter()
        .map(|k| {
            let (a, b) = (k / l, k % l);
            let parity = (a & b).count_ones() & 1;
            let xz = xl.apply(a, &zs[b])?;
            let zx = zl.apply(b, &xs[a])?;
            Ok((dist_sqr(&xz, &zx, sign(parity)), parity))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = ResidualReport::new("quantum_linearity", n);
    report.strategy = Some(strategy.label.clone());
    report.prover = Some(prover);
    let mean = |it: &mut dyn Iterator<Item = f64>| {
        let (s, c) = it.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
        (if c == 0 { 0.0 } else { s / c as f64 }, c)
    };
    let (all, c) = mean(&mut pairs.iter().map(|p| p.0));
    report.put("anticommutation", ResidualEntry::exact(all, "uniform(a,b)", c));
    let (odd, c) = mean(&mut pairs.iter().filter(|p| p.1 == 1).map(|p| p.0));
    report.put("anticommutation_odd", ResidualEntry::exact(odd, "uniform(a,b | a.b=1)", c));
    let (even, c) = mean(&mut pairs.iter().filter(|p| p.1 == 0).map(|p| p.0));
    report.put("commutation_even", ResidualEntry::exact(even, "uniform(a,b | a.b=0)", c));

    for (name, hat, dil, images) in [("x", &xh, &xd, &xs), ("z", &zh, &zd, &zs)] {
        let mut close = 0.0;
        let mut con = 0.0;
        for a in 0..l {
            let h = hat.apply(a, amps)?;
            close += dist_sqr(&images[a], &h, 1.0);
            let y = dil.apply(a, amps)?;
            con += 0.5 * (1.0 + dot(&y, &images[a]).re);
        }
        report.put(
            &format!("closeness_{name}"),
            ResidualEntry::exact(close / l as f64, "uniform(a)", l),
        );
        report.put(
            &format!("consistency_{name}"),
            ResidualEntry::exact(con / l as f64, "uniform(a)", l),
        );
    }
    report.put("linearity_x", ResidualEntry::exact(x.linear.linearity_residual(), "max(a,b)", l * l));
    report.put("linearity_z", ResidualEntry::exact(z.linear.linearity_residual(), "max(a,b)", l * l));
    report.put("parseval_x", ResidualEntry::exact(x.parseval_defect, "max entry", 1));
    report.put("parseval_z", ResidualEntry::exact(z.parseval_defect, "max entry", 1));
    report.put("marginal_square_defect_x", ResidualEntry::exact(xhat.max_square_defect(), "max(a)", l));
    report.put("marginal_square_defect_z", ResidualEntry::exact(zhat.max_square_defect(), "max(a)", l));
    report.put("marginal_norm_x", ResidualEntry::exact(xhat.max_operator_norm(), "max(a)", l));
    report.put("marginal_norm_z", ResidualEntry::exact(zhat.max_operator_norm(), "max(a)", l));
    Ok(LinearityAnalysis { report, state, xhat, zhat, x, z })
}

/// Output of [`swap_isometry`].
#[derive(Clone, Debug)]
pub struct SwapOutput {
    /// Normalized `φ₀` on the input qubits followed by the `w` and `z`
    /// registers.
    pub phi0: StateVector,
    /// `‖φ₀‖` before normalization.
    pub pre_norm: f64,
    pub n: usize,
}

impl SwapOutput {
    /// Qubits of the `w` register, which carries the extracted qubits.
    pub fn w_register(&self) -> Vec<usize> {
        let base = self.phi0.num_qubits() - 2 * self.n;
        (base..base + self.n).collect()
    }
}

/// `φ₀ = 2^{−3n/2} Σ_{w,y,z} (−1)^{y·(z+w)} Xlin(w)Zlin(y)Xlin(z)ψ ⊗ |w z⟩`.
pub fn swap_isometry(xlin: &ObservableFamily, zlin: &ObservableFamily, psi: &StateVector) -> Result<SwapOutput> {
    let n = xlin.n;
    if zlin.n != n {
        return Err(Error::LengthMismatch { left: n, right: zlin.n });
    }
    let nq = psi.num_qubits();
    if xlin.num_qubits != nq || zlin.num_qubits != nq {
        return Err(Error::Invalid("families and state live on different hosts".into()));
    }
    check_limit(nq + 2 * n, SWAP_LIMIT)?;
    let l = 1usize << n;
    let amps = psi.amplitudes();
    let xz: Vec<Vec<C64>> = (0..l).into_par_iter().map(|z| xlin.apply(z, amps)).collect::<Result<_>>()?;
    let zxz: Vec<Vec<C64>> = (0..l * l)
        .into_par_iter()
        .map(|k| zlin.apply(k / l, &xz[k % l]))
        .collect::<Result<_>>()?;
    let scale = (l as f64).powi(3).sqrt().recip();
    let pieces: Vec<Vec<C64>> = (0..l * l)
        .into_par_iter()
        .map(|k| {
            let (w, z) = (k / l, k % l);
            let mut f = vec![ZERO; amps.len()];
            for y in 0..l {
                let s = sign((y & (z ^ w)).count_ones());
                for (acc, v) in f.iter_mut().zip(&zxz[y * l + z]) {
                    *acc += v * s;
                }
            }
            xlin.apply(w, &f)
        })
        .collect::<Result<_>>()?;
    let mut out = vec![ZERO; amps.len() * l * l];
    for (k, piece) in pieces.iter().enumerate() {
        for (i, v) in piece.iter().enumerate() {
            out[i * l * l + k] = v * scale;
        }
    }
    let pre_norm = out.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    Ok(SwapOutput { phi0: StateVector::normalized(out)?, pre_norm, n })
}

/// `|⟨φ₀|X(a)Z(b)|φ₀⟩ − ⟨ψ|Xlin(a)Zlin(b)|ψ⟩|` for every `(a, b)`, with
/// `X(a)Z(b)` acting on the `w` register.
pub fn isometry_deviation(
    phi0: &SwapOutput,
    psi: &StateVector,
    xlin: &ObservableFamily,
    zlin: &ObservableFamily,
) -> Result<ResidualReport> {
    let n = phi0.n;
    let l = 1usize << n;
    let w = phi0.w_register();
    let amps = psi.amplitudes();
    let pairs: Vec<PairDeviation> = (0..l * l)
        .into_par_iter()
        .map(|k| {
            let (a, b) = (k / l, k % l);
            let (sa, sb) = (BitString::new(n, a as u64)?, BitString::new(n, b as u64)?);
            let g = GlobalPauli::lift(&PauliWord::new(sa, sb, Sign::Plus)?, &w, phi0.phi0.num_qubits())?;
            let lhs = global_pauli_expectation(&g, phi0.phi0.amplitudes(), None);
            let rhs = dot(amps, &xlin.apply(a, &zlin.apply(b, amps)?)?);
            Ok(PairDeviation { a: sa, b: sb, deviation: (lhs - rhs).norm() })
        })
        .collect::<Result<_>>()?;
    let max = pairs.iter().map(|p| p.deviation).fold(0.0, f64::max);
    let mean = pairs.iter().map(|p| p.deviation).sum::<f64>() / pairs.len() as f64;
    let mut report = ResidualReport::new("isometry_deviation", n);
    report.put("deviation_max", ResidualEntry::exact(max, "max(a,b)", pairs.len()));
    report.put("deviation_mean", ResidualEntry::exact(mean, "uniform(a,b)", pairs.len()));
    report.put("pre_norm_defect", ResidualEntry::exact((phi0.pre_norm - 1.0).abs(), "single", 1));
    report.pairs = pairs;
    Ok(report)
}

/// Linearity residuals and the swap-isometry deviation of one prover.
pub fn diagnose(strategy: &Strategy, prover: usize) -> Result<(ResidualReport, ResidualReport)> {
    let analysis = analyze_linearity(strategy, prover)?;
    let xl = analysis.x.linear.in_host(analysis.state.num_qubits())?;
    let zl = analysis.z.linear.in_host(analysis.state.num_qubits())?;
    let swap = swap_isometry(&xl, &zl, &analysis.state)?;
    let mut iso = isometry_deviation(&swap, &analysis.state, &xl, &zl)?;
    iso.strategy = Some(strategy.label.clone());
    iso.prover = Some(prover);
    Ok((analysis.report, iso))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::steane;
    use crate::hamiltonian::XZHamiltonian;
    use crate::strategy::{Corruption, WRule};
    use rand::Rng;

    fn z1() -> XZHamiltonian {
        XZHamiltonian::from_words(&[(1.0, "Z")]).unwrap()
    }

    fn random_family(n: usize, k: usize, rng: &mut ChaCha8Rng, observables: bool) -> ObservableFamily {
        let members = (0..1 << n)
            .map(|_| {
                let o = DenseOperator::random_observable(k, rng);
                if observables {
                    o
                } else {
                    o.scale(rng.gen_range(-1.0..1.0))
                }
            })
            .collect();
        ObservableFamily::new(FamilyLabel::Xhat, n, k, (0..k).collect(), members).unwrap()
    }

    #[test]
    fn extraction_is_exactly_linear_for_arbitrary_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=2 {
            for k in 1..=2 {
                for obs in [true, false] {
                    let f = random_family(n, k, &mut rng, obs);
                    let e = extract(&f).unwrap();
                    assert!(e.parseval_defect <= 1e-9);
                    assert!(e.linear.linearity_residual() <= 1e-9, "n={n} k={k}");
                    assert!(e.linear.is_observable_family(1e-9));
                    assert!(e.dilated.is_observable_family(1e-9));
                }
            }
        }
    }

    #[test]
    fn trivial_family_gives_identity_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = DenseOperator::random_observable(1, &mut rng);
        let f = ObservableFamily::new(FamilyLabel::Xhat, 1, 1, vec![0], vec![DenseOperator::identity(2), a]).unwrap();
        let c = extract_linear(&f).unwrap();
        assert!(c.members()[0].sub(&DenseOperator::identity(8)).norm() < 1e-9);
        assert!(c.members()[1].square_defect() < 1e-9);
    }

    #[test]
    fn true_paulis_reproduce_expectations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=2 {
            for basis in [Basis::X, Basis::Z] {
                let f = ObservableFamily::paulis(FamilyLabel::Xhat, basis, (0..n).collect(), n).unwrap();
                let c = extract_linear(&f).unwrap();
                let psi = StateVector::random(n, &mut rng).unwrap();
                let phi = with_ancillas(&psi, c.num_qubits()).unwrap();
                for a in 0..1 << n {
                    let lhs = dot(phi.amplitudes(), &c.apply(a, phi.amplitudes()).unwrap());
                    let rhs = dot(psi.amplitudes(), &f.apply(a, psi.amplitudes()).unwrap());
                    assert!((lhs - rhs).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn parseval_failure_is_reported() {
        let f = ObservableFamily::new(
            FamilyLabel::Xhat,
            1,
            1,
            vec![0],
            vec![DenseOperator::identity(2).scale(1.5), DenseOperator::identity(2)],
        )
        .unwrap();
        assert!(extract(&f).is_err());
    }

    #[test]
    fn honest_marginals_are_paulis() {
        let s = Strategy::honest(&z1(), &steane()).unwrap();
        for basis in [Basis::X, Basis::Z] {
            let f = marginal_observables(&s, 3, basis).unwrap();
            for a in BitString::all(1) {
                let want = basis.word(a).to_matrix().unwrap();
                assert!(f.member(&a).sub(&want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_strategy_marginal_is_identity() {
        let s = Strategy::classical_linear(BitString::zeros(1), BitString::zeros(1), WRule::FollowX, 7).unwrap();
        let f = marginal_observables(&s, 0, Basis::X).unwrap();
        for m in f.members() {
            assert!(m.sub(&DenseOperator::identity(2)).norm() < 1e-12);
        }
    }

    #[test]
    fn random_marginals_are_contractions() {
        let s = Strategy::random(2, 3, 9).unwrap();
        for basis in [Basis::X, Basis::Z] {
            let f = marginal_observables(&s, 1, basis).unwrap();
            assert!(f.max_operator_norm() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn honest_residuals_vanish() {
        let s = Strategy::honest(&z1(), &steane()).unwrap();
        let (lin, iso) = diagnose(&s, 0).unwrap();
        for key in ["anticommutation", "anticommutation_odd", "commutation_even", "closeness_x", "closeness_z"] {
            assert!(lin.value(key).unwrap() <= 1e-9, "{key}");
        }
        assert!((lin.value("consistency_x").unwrap() - 1.0).abs() < 1e-9);
        assert!((lin.value("consistency_z").unwrap() - 1.0).abs() < 1e-9);
        assert!(iso.value("deviation_max").unwrap() <= 1e-9);
        assert!(iso.value("pre_norm_defect").unwrap() <= 1e-9);
    }

    #[test]
    fn sign_flip_moves_marginals_away() {
        let s = Strategy::honest(&z1(), &steane())
            .unwrap()
            .corrupted(&[Corruption::SignFlip { prover: 0, basis: Basis::X }])
            .unwrap();
        let r = quantum_linearity_report(&s, 0).unwrap();
        assert!((r.value("closeness_x").unwrap() - 4.0).abs() < 1e-9);
        assert!(r.value("closeness_z").unwrap() < 1e-9);
    }

    #[test]
    fn classical_strategy_cannot_anticommute() {
        let s = Strategy::classical_linear(BitString::zeros(1), BitString::zeros(1), WRule::FollowX, 7).unwrap();
        let r = quantum_linearity_report(&s, 0).unwrap();
        assert!((r.value("anticommutation").unwrap() - 1.0).abs() < 1e-9);
        assert!((r.value("anticommutation_odd").unwrap() - 4.0).abs() < 1e-9);
        assert!(r.value("commutation_even").unwrap() < 1e-9);
    }

    #[test]
    fn swap_isometry_at_zero_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=2 {
            let psi = StateVector::random(n + 1, &mut rng).unwrap();
            let x = ObservableFamily::paulis(FamilyLabel::Xlin, Basis::X, (0..n).collect(), n + 1).unwrap();
            let z = ObservableFamily::paulis(FamilyLabel::Zlin, Basis::Z, (0..n).collect(), n + 1).unwrap();
            let out = swap_isometry(&x, &z, &psi).unwrap();
            assert!((out.pre_norm - 1.0).abs() < 1e-9);
            let r = isometry_deviation(&out, &psi, &x, &z).unwrap();
            assert!(r.value("deviation_max").unwrap() <= 1e-9);
            assert!(r.pairs[0].deviation < 1e-12);
        }
    }

    #[test]
    fn swap_on_zero_state() {
        let psi = StateVector::basis(1, 0).unwrap();
        let x = ObservableFamily::paulis(FamilyLabel::Xlin, Basis::X, vec![0], 1).unwrap();
        let z = ObservableFamily::paulis(FamilyLabel::Zlin, Basis::Z, vec![0], 1).unwrap();
        let out = swap_isometry(&x, &z, &psi).unwrap();
        let g = GlobalPauli::lift(&PauliWord::z_type(BitString::ones(1)), &out.w_register(), 3).unwrap();
        let v = global_pauli_expectation(&g, out.phi0.amplitudes(), None);
        assert!((v.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deviation_grows_with_anticommutation_defect() {
        let psi = StateVector::normalized(vec![C64::new(0.8, 0.0), C64::new(0.36, 0.48)]).unwrap();
        let x = ObservableFamily::paulis(FamilyLabel::Xlin, Basis::X, vec![0], 1).unwrap();
        let mut last = -1.0;
        for step in 0..=8 {
            let t = step as f64 * std::f64::consts::FRAC_PI_4 / 8.0;
            let zt = DenseOperator::from_real(2, &[t.cos(), t.sin(), t.sin(), -t.cos()]);
            let z = ObservableFamily::new(FamilyLabel::Zlin, 1, 1, vec![0], vec![DenseOperator::identity(2), zt]).unwrap();
            let out = swap_isometry(&x, &z, &psi).unwrap();
            let d = isometry_deviation(&out, &psi, &x, &z).unwrap().value("deviation_max").unwrap();
            assert!(d >= last - 1e-12, "step {step}: {d} < {last}");
            last = d;
        }
        assert!(last > 0.1);
    }

    #[test]
    fn report_serializes_with_full_precision() {
        let s = Strategy::honest(&z1(), &steane()).unwrap();
        let r = quantum_linearity_report(&s, 0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["kind"], "quantum_linearity");
        assert!(v["residuals"]["anticommutation"]["value"].is_number());
    }
}

//! CSS stabilizer codes, complementary operators and block encoding.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dense::{C64, ZERO};
use crate::error::{Error, Result};
use crate::pauli::{BitString, PauliWord, Sign, DENSE_LIMIT};
use crate::state::{apply_global_pauli, check_limit, GlobalPauli, StateVector, SIM_LIMIT};

/// Pauli basis label of a query or stabilizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    X,
    Z,
}

impl Basis {
    pub fn other(self) -> Basis {
        match self {
            Basis::X => Basis::Z,
            Basis::Z => Basis::X,
        }
    }

    /// The pure word of this type with support `s`.
    pub fn word(self, s: BitString) -> PauliWord {
        match self {
            Basis::X => PauliWord::x_type(s),
            Basis::Z => PauliWord::z_type(s),
        }
    }
}

/// An `r`-qubit stabilizer code given by generators and one logical pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizerCode {
    pub r: usize,
    pub generators: Vec<PauliWord>,
    pub logical_x: PauliWord,
    pub logical_z: PauliWord,
}

/// Same-type group element with a letter at the special position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Complement {
    /// The full `r`-qubit stabilizer.
    pub stabilizer: PauliWord,
    /// Its restriction to the other `r - 1` positions.
    pub restricted: PauliWord,
    /// Positions other than the special one where the stabilizer acts.
    pub partners: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub(crate) fn push(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }
}

const GROUP_GENERATOR_LIMIT: usize = 20;

/// The seven-qubit Steane code.
pub fn steane() -> StabilizerCode {
    let p = |s: &str| s.parse::<PauliWord>().expect("static word");
    StabilizerCode {
        r: 7,
        generators: ["IIIXXXX", "IXXIIXX", "XIXIXIX", "IIIZZZZ", "IZZIIZZ", "ZIZIZIZ"]
            .iter()
            .map(|s| p(s))
            .collect(),
        logical_x: p("XXXXXXX"),
        logical_z: p("ZZZZZZZ"),
    }
}

/// Seven-qubit bit-flip repetition code. Not a valid CSS code for the protocol
/// (no X-type stabilizers); used to build deliberately wrong encodings.
pub fn repetition7() -> StabilizerCode {
    let generators = (0..6)
        .map(|i| {
            let mut s = String::new();
            for j in 0..7 {
                s.push(if j == i || j == i + 1 { 'Z' } else { 'I' });
            }
            s.parse().expect("static word")
        })
        .collect();
    StabilizerCode {
        r: 7,
        generators,
        logical_x: "XXXXXXX".parse().expect("static word"),
        logical_z: "ZZZZZZZ".parse().expect("static word"),
    }
}

impl StabilizerCode {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let code: StabilizerCode = serde_json::from_str(s)?;
        code.check_shape()?;
        Ok(code)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("code serializes")
    }

    fn check_shape(&self) -> Result<()> {
        if self.r == 0 || self.r > 64 {
            return Err(Error::Invalid(format!("block size {} out of range", self.r)));
        }
        for w in self
            .generators
            .iter()
            .chain([&self.logical_x, &self.logical_z])
        {
            if w.num_qubits() != self.r {
                return Err(Error::LengthMismatch {
                    left: w.num_qubits(),
                    right: self.r,
                });
            }
        }
        Ok(())
    }

    /// All products of generator subsets, deduplicated and sorted.
    pub fn stabilizer_group(&self) -> Result<Vec<PauliWord>> {
        if self.generators.len() > GROUP_GENERATOR_LIMIT {
            return Err(Error::OverLimit {
                what: "stabilizer generators",
                size: self.generators.len(),
                limit: GROUP_GENERATOR_LIMIT,
            });
        }
        let mut group = BTreeSet::new();
        for subset in 0u32..(1u32 << self.generators.len()) {
            let mut acc = PauliWord::identity(self.r);
            for (k, g) in self.generators.iter().enumerate() {
                if subset >> k & 1 == 1 {
                    acc = acc.multiply(g)?;
                }
            }
            group.insert(acc);
        }
        Ok(group.into_iter().collect())
    }

    /// Pure-type group elements of the given basis.
    pub fn typed_subgroup(&self, basis: Basis) -> Result<Vec<PauliWord>> {
        Ok(self
            .stabilizer_group()?
            .into_iter()
            .filter(|w| match basis {
                Basis::X => w.is_x_type() && w.sign() == Sign::Plus,
                Basis::Z => w.is_z_type() && w.sign() == Sign::Plus,
            })
            .collect())
    }

    /// Canonical complementary operator for the letter `basis` at 0-based
    /// position `i`: the same-type group element with that letter whose
    /// support mask is smallest.
    pub fn complementary(&self, i: usize, basis: Basis) -> Result<Complement> {
        if i >= self.r {
            return Err(Error::Invalid(format!("position {i} out of range for r = {}", self.r)));
        }
        let best = self
            .typed_subgroup(basis)?
            .into_iter()
            .filter(|w| w.support().bit(i))
            .min_by_key(|w| w.support().mask())
            .ok_or_else(|| {
                Error::Invariant(format!(
                    "no {basis:?}-type stabilizer acts on position {i}"
                ))
            })?;
        let keep: Vec<usize> = (0..self.r).filter(|&j| j != i).collect();
        let partners = keep
            .iter()
            .copied()
            .filter(|&j| best.support().bit(j))
            .collect();
        Ok(Complement {
            restricted: best.restrict(&keep)?,
            stabilizer: best,
            partners,
        })
    }

    /// `(|0_L⟩, |1_L⟩)` as amplitude vectors over the `r` block qubits.
    pub fn codewords(&self) -> Result<(Vec<C64>, Vec<C64>)> {
        if self.r > DENSE_LIMIT {
            return Err(Error::OverLimit {
                what: "code block qubits",
                size: self.r,
                limit: DENSE_LIMIT,
            });
        }
        let targets: Vec<usize> = (0..self.r).collect();
        let mut v = vec![ZERO; 1 << self.r];
        v[0] = C64::new(1.0, 0.0);
        for w in self.generators.iter().chain([&self.logical_z]) {
            let g = GlobalPauli::lift(w, &targets, self.r)?;
            let gv = apply_global_pauli(&g, &v);
            for (a, b) in v.iter_mut().zip(gv) {
                *a = (*a + b) * 0.5;
            }
        }
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-9 {
            return Err(Error::Invalid(
                "projection of |0...0> onto the code space vanishes".into(),
            ));
        }
        // global phase: make the |0...0> amplitude real positive
        let phase = if v[0].norm() > 1e-12 {
            v[0].conj() / v[0].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for a in v.iter_mut() {
            *a = *a * phase / norm;
        }
        let lx = GlobalPauli::lift(&self.logical_x, &targets, self.r)?;
        let one = apply_global_pauli(&lx, &v);
        Ok((v, one))
    }

    /// Qubit-by-qubit encoding of an `n`-qubit logical state into `n` blocks.
    pub fn encode(&self, logical: &StateVector) -> Result<StateVector> {
        self.encode_with_limit(logical, SIM_LIMIT)
    }

    pub fn encode_with_limit(&self, logical: &StateVector, limit: usize) -> Result<StateVector> {
        let n = logical.num_qubits();
        check_limit(n * self.r, limit)?;
        let (zero, one) = self.codewords()?;
        let words = [sparse(&zero), sparse(&one)];
        let block = 1usize << self.r;
        let mut out = vec![ZERO; 1usize << (n * self.r)];
        for (k, &amp) in logical.amplitudes().iter().enumerate() {
            if amp == ZERO {
                continue;
            }
            // block 0 carries logical qubit 0 (most significant)
            let mut partial: Vec<(usize, C64)> = vec![(0, amp)];
            for j in 0..n {
                let bit = (k >> (n - 1 - j)) & 1;
                let mut next = Vec::with_capacity(partial.len() * words[bit].len());
                for &(idx, a) in &partial {
                    for &(w, c) in &words[bit] {
                        next.push((idx * block + w, a * c));
                    }
                }
                partial = next;
            }
            for (idx, a) in partial {
                out[idx] += a;
            }
        }
        StateVector::normalized(out)
    }

    /// Runs every structural check and lists the outcome of each.
    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport { checks: Vec::new() };
        let shape = self.check_shape();
        rep.push("shape", shape.is_ok(), shape.err().map(|e| e.to_string()).unwrap_or_default());
        if !rep.all_passed() {
            return rep;
        }

        let impure: Vec<String> = self
            .generators
            .iter()
            .filter(|g| !g.is_x_type() && !g.is_z_type())
            .map(|g| g.to_string())
            .collect();
        rep.push("css_type", impure.is_empty(), impure.join(", "));

        let mut bad = Vec::new();
        for (a, g) in self.generators.iter().enumerate() {
            for h in &self.generators[a + 1..] {
                if !g.commutes_with(h).unwrap_or(false) {
                    bad.push(format!("{g}/{h}"));
                }
            }
        }
        rep.push("generators_commute", bad.is_empty(), bad.join(", "));

        let bad: Vec<String> = self
            .generators
            .iter()
            .filter(|g| {
                !g.commutes_with(&self.logical_x).unwrap_or(false)
                    || !g.commutes_with(&self.logical_z).unwrap_or(false)
            })
            .map(|g| g.to_string())
            .collect();
        rep.push("logicals_commute_with_generators", bad.is_empty(), bad.join(", "));

        let anti = self.logical_x.commute_sign(&self.logical_z).ok() == Some(Sign::Minus);
        rep.push(
            "logicals_anticommute",
            anti,
            format!("{} vs {}", self.logical_x, self.logical_z),
        );

        match (self.typed_subgroup(Basis::X), self.typed_subgroup(Basis::Z)) {
            (Ok(xs), Ok(zs)) => {
                let missing: Vec<String> = (0..self.r)
                    .filter(|&i| {
                        !xs.iter()
                            .any(|s| s.support().bit(i) && zs.contains(&s.mirrored()))
                    })
                    .map(|i| i.to_string())
                    .collect();
                rep.push("css_symmetry", missing.is_empty(), missing.join(", "));
            }
            (Err(e), _) | (_, Err(e)) => rep.push("css_symmetry", false, e.to_string()),
        }
        rep
    }
}

fn sparse(v: &[C64]) -> Vec<(usize, C64)> {
    v.iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > 1e-15)
        .map(|(i, a)| (i, *a))
        .collect()
}

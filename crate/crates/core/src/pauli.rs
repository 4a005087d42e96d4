//! F2 bitstrings and signed I/X/Z Pauli words.
//!
//! Position 1 of a string is its leftmost character and the most significant
//! tensor factor. Internally a string of length `n` is a `u64` mask in which
//! position `p` lives at bit `n - p`, so the mask read as a binary integer is
//! the string itself and lexicographic order coincides with integer order.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dense::DenseOperator;
use crate::error::{check_len, Error, Result};

/// Largest number of qubits for which operators are materialized densely.
pub const DENSE_LIMIT: usize = 14;

/// A fixed-length string over F2.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitString {
    len: usize,
    mask: u64,
}

impl BitString {
    pub const MAX_LEN: usize = 64;

    pub fn new(len: usize, mask: u64) -> Result<Self> {
        if len == 0 || len > Self::MAX_LEN {
            return Err(Error::Invalid(format!(
                "bitstring length {len} outside 1..={}",
                Self::MAX_LEN
            )));
        }
        if len < 64 && mask >> len != 0 {
            return Err(Error::Invalid(format!(
                "mask {mask:#x} does not fit in {len} bits"
            )));
        }
        Ok(Self { len, mask })
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(len, 0).expect("valid length")
    }

    pub fn ones(len: usize) -> Self {
        Self::new(len, low_bits(len)).expect("valid length")
    }

    /// All `2^len` strings in increasing (lexicographic) order.
    pub fn all(len: usize) -> impl Iterator<Item = BitString> {
        assert!(len >= 1 && len < 64, "enumeration length out of range");
        (0..(1u64 << len)).map(move |mask| BitString { len, mask })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    /// Bit at 0-based index `i` counted from the left.
    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len);
        (self.mask >> (self.len - 1 - i)) & 1 == 1
    }

    pub fn with_bit(mut self, i: usize, value: bool) -> Self {
        assert!(i < self.len);
        let m = 1u64 << (self.len - 1 - i);
        if value {
            self.mask |= m;
        } else {
            self.mask &= !m;
        }
        self
    }

    pub fn weight(&self) -> u32 {
        self.mask.count_ones()
    }

    pub fn is_zero(&self) -> bool {
        self.mask == 0
    }

    /// 0-based indices (from the left) of the set bits.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.bit(i)).collect()
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        check_len(self.len, other.len)?;
        Ok(BitString {
            len: self.len,
            mask: self.mask ^ other.mask,
        })
    }

    pub fn and(&self, other: &BitString) -> Result<BitString> {
        check_len(self.len, other.len)?;
        Ok(BitString {
            len: self.len,
            mask: self.mask & other.mask,
        })
    }

    /// Inner product over F2.
    pub fn dot_parity(&self, other: &BitString) -> Result<u8> {
        check_len(self.len, other.len)?;
        Ok(((self.mask & other.mask).count_ones() & 1) as u8)
    }
}

pub(crate) fn low_bits(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len.cmp(&other.len).then(self.mask.cmp(&other.mask))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut mask = 0u64;
        let mut len = 0usize;
        for c in s.chars() {
            let bit = match c {
                '0' => 0,
                '1' => 1,
                _ => return Err(Error::Parse(format!("invalid bit {c:?} in {s:?}"))),
            };
            if len == 64 {
                return Err(Error::Parse(format!("bitstring {s:?} longer than 64")));
            }
            mask = (mask << 1) | bit;
            len += 1;
        }
        BitString::new(len, mask).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl serde::Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Overall sign of a Pauli word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_parity(parity: u32) -> Sign {
        if parity & 1 == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// `sign · X(x) · Z(z)` on `n` qubits.
///
/// A position present in both masks carries the factor `XZ`, written `W` in
/// the text form. Such words are anti-Hermitian at that site; they appear as
/// intermediate products but never as observables in the protocol.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliWord {
    x: BitString,
    z: BitString,
    sign: Sign,
}

impl PauliWord {
    pub fn new(x: BitString, z: BitString, sign: Sign) -> Result<Self> {
        check_len(x.len(), z.len())?;
        Ok(Self { x, z, sign })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            x: BitString::zeros(n),
            z: BitString::zeros(n),
            sign: Sign::Plus,
        }
    }

    /// `X(a)`.
    pub fn x_type(a: BitString) -> Self {
        Self {
            x: a,
            z: BitString::zeros(a.len()),
            sign: Sign::Plus,
        }
    }

    /// `Z(b)`.
    pub fn z_type(b: BitString) -> Self {
        Self {
            x: BitString::zeros(b.len()),
            z: b,
            sign: Sign::Plus,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.x.len()
    }

    pub fn x_mask(&self) -> BitString {
        self.x
    }

    pub fn z_mask(&self) -> BitString {
        self.z
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn negate(mut self) -> Self {
        self.sign = self.sign * Sign::Minus;
        self
    }

    pub fn is_x_type(&self) -> bool {
        self.z.is_zero()
    }

    pub fn is_z_type(&self) -> bool {
        self.x.is_zero()
    }

    /// True when the matrix is Hermitian: `x ∧ z` has even weight.
    pub fn is_hermitian(&self) -> bool {
        (self.x.mask() & self.z.mask()).count_ones() % 2 == 0
    }

    /// Support of the word (positions with a non-identity factor).
    pub fn support(&self) -> BitString {
        BitString::new(self.x.len(), self.x.mask() | self.z.mask()).expect("same length")
    }

    pub fn multiply(&self, other: &PauliWord) -> Result<PauliWord> {
        check_len(self.num_qubits(), other.num_qubits())?;
        let swap = self.z.dot_parity(&other.x)? as u32;
        Ok(PauliWord {
            x: self.x.xor(&other.x)?,
            z: self.z.xor(&other.z)?,
            sign: self.sign * other.sign * Sign::from_parity(swap),
        })
    }

    /// `PQ = commute_sign(P, Q) · QP`.
    pub fn commute_sign(&self, other: &PauliWord) -> Result<Sign> {
        check_len(self.num_qubits(), other.num_qubits())?;
        let p = self.x.dot_parity(&other.z)? + self.z.dot_parity(&other.x)?;
        Ok(Sign::from_parity(p as u32))
    }

    pub fn commutes_with(&self, other: &PauliWord) -> Result<bool> {
        Ok(self.commute_sign(other)? == Sign::Plus)
    }

    /// The word with its X and Z masks exchanged (X-type ↔ Z-type mirror).
    pub fn mirrored(&self) -> PauliWord {
        PauliWord {
            x: self.z,
            z: self.x,
            sign: self.sign,
        }
    }

    /// Restriction to the positions listed in `keep` (0-based, in order).
    pub fn restrict(&self, keep: &[usize]) -> Result<PauliWord> {
        let mut x = 0u64;
        let mut z = 0u64;
        for &p in keep {
            if p >= self.num_qubits() {
                return Err(Error::Invalid(format!("position {p} out of range")));
            }
            x = (x << 1) | self.x.bit(p) as u64;
            z = (z << 1) | self.z.bit(p) as u64;
        }
        Ok(PauliWord {
            x: BitString::new(keep.len(), x)?,
            z: BitString::new(keep.len(), z)?,
            sign: self.sign,
        })
    }

    pub fn to_matrix(&self) -> Result<DenseOperator> {
        let n = self.num_qubits();
        if n > DENSE_LIMIT {
            return Err(Error::OverLimit {
                what: "dense Pauli matrix qubits",
                size: n,
                limit: DENSE_LIMIT,
            });
        }
        let dim = 1usize << n;
        let (x, z) = (self.x.mask() as usize, self.z.mask() as usize);
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for col in 0..dim {
            let phase = ((col & z).count_ones() & 1) as i32;
            let v = self.sign.value() * if phase == 0 { 1.0 } else { -1.0 };
            m[(col ^ x, col)] = Complex64::new(v, 0.0);
        }
        Ok(DenseOperator::new(m))
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sign == Sign::Minus {
            f.write_str("-")?;
        }
        for i in 0..self.num_qubits() {
            let c = match (self.x.bit(i), self.z.bit(i)) {
                (false, false) => 'I',
                (true, false) => 'X',
                (false, true) => 'Z',
                (true, true) => 'W',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliWord({self})")
    }
}

impl FromStr for PauliWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (sign, body) = match s.strip_prefix('-') {
            Some(rest) => (Sign::Minus, rest),
            None => (Sign::Plus, s),
        };
        let mut x = 0u64;
        let mut z = 0u64;
        let mut len = 0usize;
        for c in body.chars() {
            let (bx, bz) = match c {
                'I' => (0, 0),
                'X' => (1, 0),
                'Z' => (0, 1),
                'W' => (1, 1),
                _ => return Err(Error::Parse(format!("invalid Pauli letter {c:?} in {s:?}"))),
            };
            if len == 64 {
                return Err(Error::Parse(format!("Pauli word {s:?} longer than 64")));
            }
            x = (x << 1) | bx;
            z = (z << 1) | bz;
            len += 1;
        }
        let x = BitString::new(len, x).map_err(|e| Error::Parse(e.to_string()))?;
        let z = BitString::new(len, z).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(PauliWord { x, z, sign })
    }
}

impl serde::Serialize for PauliWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for PauliWord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn pw(s: &str) -> PauliWord {
        s.parse().unwrap()
    }

    #[test]
    fn xor_examples() {
        assert_eq!(bs("101").xor(&bs("011")).unwrap(), bs("110"));
        assert_eq!(bs("000").xor(&bs("000")).unwrap(), bs("000"));
        assert_eq!(bs("1111").xor(&bs("1111")).unwrap(), bs("0000"));
        assert!(matches!(
            bs("10").xor(&bs("101")),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn dot_parity_examples() {
        assert_eq!(bs("101").dot_parity(&bs("011")).unwrap(), 1);
        assert_eq!(bs("1101").dot_parity(&bs("0000")).unwrap(), 0);
        assert_eq!(bs("11").dot_parity(&bs("11")).unwrap(), 0);
        assert!(bs("1").dot_parity(&bs("11")).is_err());
    }

    #[test]
    fn text_forms() {
        for s in ["0", "1", "0110", "1000000000000000000000000000000000000000000000000000000000000001"] {
            assert_eq!(bs(s).to_string(), s);
        }
        for s in ["I", "-XZ", "WIXZ", "-IIIXXXX"] {
            assert_eq!(pw(s).to_string(), s);
        }
        assert!("10a".parse::<BitString>().is_err());
        assert!("".parse::<BitString>().is_err());
        assert!("XY".parse::<PauliWord>().is_err());
    }

    #[test]
    fn lexicographic_order_matches_strings() {
        assert!(bs("011") < bs("100"));
        assert!(bs("001") < bs("010"));
    }

    #[test]
    fn multiply_example() {
        // X(10)Z(01) · X(01) = -X(11)Z(01)
        let p = PauliWord::new(bs("10"), bs("01"), Sign::Plus).unwrap();
        let q = PauliWord::x_type(bs("01"));
        let r = p.multiply(&q).unwrap();
        assert_eq!(r, PauliWord::new(bs("11"), bs("01"), Sign::Minus).unwrap());
        assert_eq!(p.multiply(&PauliWord::identity(2)).unwrap(), p);
    }

    #[test]
    fn single_qubit_xz_order() {
        let x = pw("X");
        let z = pw("Z");
        let xz = x.multiply(&z).unwrap();
        let zx = z.multiply(&x).unwrap();
        assert_eq!(xz.sign() * zx.sign(), Sign::Minus);
        // 2x2 matrix product check
        let mx = x.to_matrix().unwrap();
        let mz = z.to_matrix().unwrap();
        let prod = mx.matrix() * mz.matrix();
        assert!((prod - xz.to_matrix().unwrap().matrix()).norm() < 1e-12);
    }

    #[test]
    fn commute_sign_examples() {
        let xa = PauliWord::x_type(bs("101"));
        let zb = PauliWord::z_type(bs("011"));
        assert_eq!(xa.commute_sign(&zb).unwrap(), Sign::Minus);
        assert_eq!(xa.commute_sign(&xa).unwrap(), Sign::Plus);
        let a = xa.to_matrix().unwrap();
        let b = zb.to_matrix().unwrap();
        let lhs = a.matrix() * b.matrix();
        let rhs = -(b.matrix() * a.matrix());
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn to_matrix_examples() {
        let x = pw("X").to_matrix().unwrap();
        assert_eq!(x.matrix()[(0, 1)].re, 1.0);
        assert_eq!(x.matrix()[(1, 0)].re, 1.0);
        assert_eq!(x.matrix()[(0, 0)].re, 0.0);
        let z = pw("Z").to_matrix().unwrap();
        assert_eq!(z.matrix()[(0, 0)].re, 1.0);
        assert_eq!(z.matrix()[(1, 1)].re, -1.0);
        let id = pw("II").to_matrix().unwrap();
        assert!((id.matrix() - DMatrix::<Complex64>::identity(4, 4)).norm() == 0.0);
        assert!(PauliWord::identity(DENSE_LIMIT + 1).to_matrix().is_err());
    }

    #[test]
    fn hermiticity_follows_overlap_parity() {
        for s in ["W", "WW", "XZ", "WX", "-WIW"] {
            let w = pw(s);
            assert_eq!(w.to_matrix().unwrap().is_hermitian(1e-12), w.is_hermitian(), "{s}");
        }
    }

    #[test]
    fn restrict_drops_positions() {
        let s = pw("IIIXXXX");
        assert_eq!(s.restrict(&[0, 1, 2, 4, 5, 6]).unwrap(), pw("IIIXXX"));
    }

    fn word(n: usize) -> impl Strategy<Value = PauliWord> {
        let max = 1u64 << n;
        (0..max, 0..max, any::<bool>()).prop_map(move |(x, z, neg)| {
            PauliWord::new(
                BitString::new(n, x).unwrap(),
                BitString::new(n, z).unwrap(),
                if neg { Sign::Minus } else { Sign::Plus },
            )
            .unwrap()
        })
    }

    fn word_pair() -> impl Strategy<Value = (PauliWord, PauliWord)> {
        (1usize..=4).prop_flat_map(|n| (word(n), word(n)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn multiply_matches_matrices((p, q) in word_pair()) {
            let lhs = p.multiply(&q).unwrap().to_matrix().unwrap();
            let rhs = p.to_matrix().unwrap().matrix() * q.to_matrix().unwrap().matrix();
            prop_assert!((lhs.matrix() - rhs).norm() < 1e-12);
        }

        #[test]
        fn commute_sign_matches_matrices((p, q) in word_pair()) {
            let a = p.to_matrix().unwrap();
            let b = q.to_matrix().unwrap();
            let s = p.commute_sign(&q).unwrap().value();
            let lhs = a.matrix() * b.matrix();
            let rhs = (b.matrix() * a.matrix()) * Complex64::new(s, 0.0);
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn multiply_is_associative(
            (p, q, r) in (1usize..=4).prop_flat_map(|n| (word(n), word(n), word(n)))
        ) {
            let left = p.multiply(&q).unwrap().multiply(&r).unwrap();
            let right = p.multiply(&q.multiply(&r).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn linearity_of_pure_words(n in 1usize..=6, a in any::<u64>(), b in any::<u64>()) {
            let m = low_bits(n);
            let a = BitString::new(n, a & m).unwrap();
            let b = BitString::new(n, b & m).unwrap();
            let ab = a.xor(&b).unwrap();
            prop_assert_eq!(
                PauliWord::x_type(a).multiply(&PauliWord::x_type(b)).unwrap(),
                PauliWord::x_type(ab)
            );
            prop_assert_eq!(
                PauliWord::z_type(a).multiply(&PauliWord::z_type(b)).unwrap(),
                PauliWord::z_type(ab)
            );
        }

        #[test]
        fn text_round_trip(p in (1usize..=8).prop_flat_map(word)) {
            let back: PauliWord = p.to_string().parse().unwrap();
            prop_assert_eq!(back, p);
        }
    }
}

//! Bit-packed Pauli operators.
//!
//! A Pauli operator on `n` qubits is stored as two bit vectors (X support and
//! Z support) plus a sign. A qubit with both bits set carries `Y`. Only the
//! signs `+1` and `-1` are representable; products that would produce `±i`
//! are reported as [`PauliError::ImaginaryPhase`].

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PauliError {
    #[error("operator length mismatch: {left} vs {right} qubits")]
    LengthMismatch { left: usize, right: usize },
    #[error("product has an imaginary phase")]
    ImaginaryPhase,
    #[error("cannot parse Pauli string {0:?}")]
    Parse(String),
}

/// Fixed-length bit vector packed into `u64` words (bit `i` lives in word `i / 64`).
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Bits {
    len: usize,
    words: Vec<u64>,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(len: usize, indices: I) -> Self {
        let mut b = Bits::zeros(len);
        for i in indices {
            b.set(i, true);
        }
        b
    }

    pub fn from_bools(bools: &[bool]) -> Self {
        Bits::from_indices(bools.len(), bools.iter().enumerate().filter(|(_, &v)| v).map(|(i, _)| i))
    }

    /// Parses a string of `0`/`1` characters.
    pub fn from_bit_str(s: &str) -> Option<Self> {
        let mut bools = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bools.push(false),
                '1' => bools.push(true),
                _ => return None,
            }
        }
        Some(Bits::from_bools(&bools))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i & 63);
        if v {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn toggle(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    pub fn xor_assign(&mut self, other: &Bits) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Parity of the bitwise AND, i.e. the GF(2) inner product.
    pub fn dot(&self, other: &Bits) -> bool {
        assert_eq!(self.len, other.len);
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones()).sum::<u32>() & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + tz)
            })
        })
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    pub fn to_bit_string(&self) -> String {
        (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({})", self.to_bit_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Single-qubit Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PauliKind {
    I,
    X,
    Y,
    Z,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    x: Bits,
    z: Bits,
    sign: Sign,
}

impl PauliOperator {
    pub fn identity(num_qubits: usize) -> Self {
        PauliOperator { x: Bits::zeros(num_qubits), z: Bits::zeros(num_qubits), sign: Sign::Plus }
    }

    pub fn from_parts(x: Bits, z: Bits, sign: Sign) -> Result<Self, PauliError> {
        if x.len() != z.len() {
            return Err(PauliError::LengthMismatch { left: x.len(), right: z.len() });
        }
        Ok(PauliOperator { x, z, sign })
    }

    /// `Z` on every listed qubit.
    pub fn z_on(num_qubits: usize, support: &[usize]) -> Self {
        PauliOperator {
            x: Bits::zeros(num_qubits),
            z: Bits::from_indices(num_qubits, support.iter().copied()),
            sign: Sign::Plus,
        }
    }

    /// `X` on every listed qubit.
    pub fn x_on(num_qubits: usize, support: &[usize]) -> Self {
        PauliOperator {
            x: Bits::from_indices(num_qubits, support.iter().copied()),
            z: Bits::zeros(num_qubits),
            sign: Sign::Plus,
        }
    }

    pub fn single(num_qubits: usize, qubit: usize, kind: PauliKind) -> Self {
        let mut p = PauliOperator::identity(num_qubits);
        p.set(qubit, kind);
        p
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.x.len()
    }

    pub fn x_bits(&self) -> &Bits {
        &self.x
    }

    pub fn z_bits(&self) -> &Bits {
        &self.z
    }

    pub fn x_bits_mut(&mut self) -> &mut Bits {
        &mut self.x
    }

    pub fn z_bits_mut(&mut self) -> &mut Bits {
        &mut self.z
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn with_sign(mut self, sign: Sign) -> Self {
        self.sign = sign;
        self
    }

    pub fn get(&self, qubit: usize) -> PauliKind {
        match (self.x.get(qubit), self.z.get(qubit)) {
            (false, false) => PauliKind::I,
            (true, false) => PauliKind::X,
            (true, true) => PauliKind::Y,
            (false, true) => PauliKind::Z,
        }
    }

    pub fn set(&mut self, qubit: usize, kind: PauliKind) {
        let (x, z) = match kind {
            PauliKind::I => (false, false),
            PauliKind::X => (true, false),
            PauliKind::Y => (true, true),
            PauliKind::Z => (false, true),
        };
        self.x.set(qubit, x);
        self.z.set(qubit, z);
    }

    /// Number of qubits acted on non-trivially.
    pub fn weight(&self) -> usize {
        self.x.words().iter().zip(self.z.words()).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    /// Indices where the operator acts non-trivially.
    pub fn support(&self) -> Vec<usize> {
        (0..self.num_qubits()).filter(|&q| self.x.get(q) || self.z.get(q)).collect()
    }

    pub fn commutes(&self, other: &PauliOperator) -> Result<bool, PauliError> {
        self.check_len(other)?;
        Ok(!(self.x.dot(&other.z) ^ self.z.dot(&other.x)))
    }

    /// Group product `self · other`.
    pub fn multiply(&self, other: &PauliOperator) -> Result<PauliOperator, PauliError> {
        self.check_len(other)?;
        let phase = product_phase(self.x.words(), self.z.words(), other.x.words(), other.z.words());
        if phase % 2 == 1 {
            return Err(PauliError::ImaginaryPhase);
        }
        let mut sign = if self.sign == other.sign { Sign::Plus } else { Sign::Minus };
        if phase == 2 {
            sign = sign.flip();
        }
        let mut x = self.x.clone();
        x.xor_assign(&other.x);
        let mut z = self.z.clone();
        z.xor_assign(&other.z);
        Ok(PauliOperator { x, z, sign })
    }

    /// Restriction to a subset of qubits, re-indexed in the given order.
    pub fn restrict(&self, qubits: &[usize]) -> PauliOperator {
        let mut out = PauliOperator::identity(qubits.len());
        for (i, &q) in qubits.iter().enumerate() {
            out.set(i, self.get(q));
        }
        out.sign = self.sign;
        out
    }

    fn check_len(&self, other: &PauliOperator) -> Result<(), PauliError> {
        if self.num_qubits() != other.num_qubits() {
            return Err(PauliError::LengthMismatch { left: self.num_qubits(), right: other.num_qubits() });
        }
        Ok(())
    }
}

/// Exponent `k` (mod 4) such that the unsigned product `P1 P2` equals
/// `i^k` times the Pauli with bits `(x1 ^ x2, z1 ^ z2)`.
pub(crate) fn product_phase(x1: &[u64], z1: &[u64], x2: &[u64], z2: &[u64]) -> u8 {
    let mut plus = 0u32;
    let mut minus = 0u32;
    for w in 0..x1.len() {
        let (ax, ay, az) = (x1[w] & !z1[w], x1[w] & z1[w], !x1[w] & z1[w]);
        let (bx, by, bz) = (x2[w] & !z2[w], x2[w] & z2[w], !x2[w] & z2[w]);
        plus += ((ax & by) | (ay & bz) | (az & bx)).count_ones();
        minus += ((ax & bz) | (ay & bx) | (az & by)).count_ones();
    }
    ((plus + 3 * minus) % 4) as u8
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.sign == Sign::Plus { "+" } else { "-" })?;
        for q in 0..self.num_qubits() {
            let c = match self.get(q) {
                PauliKind::I => '_',
                PauliKind::X => 'X',
                PauliKind::Y => 'Y',
                PauliKind::Z => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pauli({self})")
    }
}

impl FromStr for PauliOperator {
    type Err = PauliError;

    /// Accepts the rendering produced by `Display`, e.g. `+_XX_Z_`. The
    /// leading sign is optional; `I` is accepted as a synonym for `_`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (sign, body) = match s.chars().next() {
            Some('+') => (Sign::Plus, &s[1..]),
            Some('-') => (Sign::Minus, &s[1..]),
            _ => (Sign::Plus, s),
        };
        let n = body.chars().count();
        let mut p = PauliOperator::identity(n);
        for (q, c) in body.chars().enumerate() {
            let kind = match c {
                '_' | 'I' => PauliKind::I,
                'X' => PauliKind::X,
                'Y' => PauliKind::Y,
                'Z' => PauliKind::Z,
                _ => return Err(PauliError::Parse(s.to_string())),
            };
            p.set(q, kind);
        }
        p.sign = sign;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> PauliOperator {
        s.parse().unwrap()
    }

    #[test]
    fn involution() {
        let x1 = p("+X___");
        let prod = x1.multiply(&x1).unwrap();
        assert!(prod.is_identity());
        assert_eq!(prod.sign(), Sign::Plus);
    }

    #[test]
    fn adjacent_z_pairs_compose() {
        // Z1Z2 · Z2Z3 = Z1Z3
        let prod = p("ZZ__").multiply(&p("_ZZ_")).unwrap();
        assert_eq!(prod.to_string(), "+Z_Z_");
    }

    #[test]
    fn xz_product_is_imaginary_and_its_square_is_plus_identity() {
        let x = p("X");
        let z = p("Z");
        assert_eq!(x.multiply(&z), Err(PauliError::ImaginaryPhase));
        // On two qubits X⊗Z times Z⊗X is real: (XZ)⊗(ZX) = (-iY)⊗(iY) = Y⊗Y.
        let prod = p("XZ").multiply(&p("ZX")).unwrap();
        assert_eq!(prod.to_string(), "+YY");
        let sq = prod.multiply(&prod).unwrap();
        assert!(sq.is_identity());
        assert_eq!(sq.sign(), Sign::Plus);
    }

    #[test]
    fn anticommuting_product_signs() {
        // XX·ZZ = (XZ)⊗(XZ) = (-iY)(-iY) = -YY ; ZZ·XX = (iY)(iY) = -YY as well.
        let a = p("XX").multiply(&p("ZZ")).unwrap();
        let b = p("ZZ").multiply(&p("XX")).unwrap();
        assert_eq!(a.to_string(), "-YY");
        assert_eq!(b.to_string(), "-YY");
        // XY·ZZ: XZ = -iY, YZ = iX → (-iY)(iX) = YX with sign +1.
        let c = p("XY").multiply(&p("ZZ")).unwrap();
        assert_eq!(c.to_string(), "+YX");
    }

    #[test]
    fn commutation_examples() {
        assert!(p("ZZ__").commutes(&p("XX__")).unwrap());
        assert!(!p("ZZ__").commutes(&p("_XX_")).unwrap());
        assert!(!p("_ZZ_").commutes(&p("__XX")).unwrap());
        assert!(!p("_ZZ_").commutes(&p("XX__")).unwrap());
        assert!(p("Y_Z").commutes(&PauliOperator::identity(3)).unwrap());
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(p("XX").multiply(&p("X")), Err(PauliError::LengthMismatch { .. })));
        assert!(p("XX").commutes(&p("X")).is_err());
    }

    #[test]
    fn render_and_parse() {
        let op = p("-_XX_Z_");
        assert_eq!(op.to_string(), "-_XX_Z_");
        assert_eq!(op.weight(), 3);
        assert_eq!(op.support(), vec![1, 2, 4]);
        assert!("+AB".parse::<PauliOperator>().is_err());
    }

    #[test]
    fn bits_iteration_spans_words() {
        let b = Bits::from_indices(200, [0, 63, 64, 130, 199]);
        assert_eq!(b.iter_ones().collect::<Vec<_>>(), vec![0, 63, 64, 130, 199]);
        assert_eq!(b.count_ones(), 5);
    }

    fn arb_pauli(n: usize) -> impl Strategy<Value = PauliOperator> {
        (proptest::collection::vec(0u8..4, n), any::<bool>()).prop_map(move |(letters, neg)| {
            let mut op = PauliOperator::identity(n);
            for (q, l) in letters.into_iter().enumerate() {
                op.set(q, [PauliKind::I, PauliKind::X, PauliKind::Y, PauliKind::Z][l as usize]);
            }
            op.with_sign(if neg { Sign::Minus } else { Sign::Plus })
        })
    }

    proptest! {
        #[test]
        fn square_is_identity(a in arb_pauli(70)) {
            let sq = a.multiply(&a).unwrap();
            prop_assert_eq!(sq.weight(), 0);
            prop_assert_eq!(sq.sign(), Sign::Plus);
        }

        #[test]
        fn commutation_matches_sign_agreement(a in arb_pauli(9), b in arb_pauli(9)) {
            match (a.multiply(&b), b.multiply(&a)) {
                (Ok(ab), Ok(ba)) => {
                    prop_assert_eq!(ab.x_bits(), ba.x_bits());
                    prop_assert_eq!(a.commutes(&b).unwrap(), ab.sign() == ba.sign());
                }
                (Err(PauliError::ImaginaryPhase), Err(PauliError::ImaginaryPhase)) => {}
                other => prop_assert!(false, "asymmetric phase behaviour: {:?}", other),
            }
        }

        #[test]
        fn parse_round_trip(a in arb_pauli(13)) {
            prop_assert_eq!(a.to_string().parse::<PauliOperator>().unwrap(), a);
        }
    }
}

//! Signed n-qubit Pauli operators in the binary parameterization
//! `i^δ (-1)^ε τ_a`.
//!
//! The F₂ vector `a = (v | w)` is stored bit-packed: the Z-part `v` occupies
//! the first half of the word buffer and the X-part `w` the second half. On a
//! single qubit `τ_00 = I`, `τ_10 = Z`, `τ_01 = X` and `τ_11 = ZX = iY`, and
//! `τ_a` is the tensor product of the per-qubit factors `Z^{v_q} X^{w_q}`.
//!
//! Global phases are always tracked exactly.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_dims, Error, Result};

#[inline]
pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

#[inline]
pub(crate) fn parity(x: u64) -> bool {
    x.count_ones() & 1 == 1
}

/// Parity of the popcount of `a & b`, i.e. the F₂ inner product.
#[inline]
pub(crate) fn dot(a: &[u64], b: &[u64]) -> bool {
    let mut acc = 0u64;
    for (x, y) in a.iter().zip(b) {
        acc ^= x & y;
    }
    parity(acc)
}

/// Single-qubit Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

impl PauliLetter {
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Self::I),
            'X' => Some(Self::X),
            'Y' => Some(Self::Y),
            'Z' => Some(Self::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Self::I => 'I',
            Self::X => 'X',
            Self::Y => 'Y',
            Self::Z => 'Z',
        }
    }

    /// `(v, w)` bits of the letter.
    fn bits(self) -> (bool, bool) {
        match self {
            Self::I => (false, false),
            Self::X => (false, true),
            Self::Y => (true, true),
            Self::Z => (true, false),
        }
    }

    fn from_bits(v: bool, w: bool) -> Self {
        match (v, w) {
            (false, false) => Self::I,
            (false, true) => Self::X,
            (true, true) => Self::Y,
            (true, false) => Self::Z,
        }
    }
}

/// An element `i^δ (-1)^ε τ_a` of the n-qubit Pauli group.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliElement {
    n: usize,
    delta: bool,
    epsilon: bool,
    /// `[v words | w words]`, each half `words_for(n)` long; padding bits are zero.
    bits: Vec<u64>,
}

impl PauliElement {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            delta: false,
            epsilon: false,
            bits: vec![0; 2 * words_for(n)],
        }
    }

    /// Hermitian generator `τ_{e_k}`: `Z_k` for `k < n`, `X_{k-n}` for `n <= k < 2n`.
    pub fn generator(n: usize, k: usize) -> Self {
        assert!(k < 2 * n, "generator index {k} out of range for {n} qubits");
        let mut p = Self::identity(n);
        p.set_a_bit(k, true);
        p
    }

    /// Builds `i^δ (-1)^ε τ_a` from explicit per-qubit Z and X bits.
    pub fn from_bits(delta: bool, epsilon: bool, z: &[bool], x: &[bool]) -> Result<Self> {
        check_dims(z.len(), x.len())?;
        let mut p = Self::identity(z.len());
        p.delta = delta;
        p.epsilon = epsilon;
        for q in 0..z.len() {
            p.set_z(q, z[q]);
            p.set_x(q, x[q]);
        }
        Ok(p)
    }

    pub(crate) fn from_words(n: usize, delta: bool, epsilon: bool, bits: Vec<u64>) -> Self {
        debug_assert_eq!(bits.len(), 2 * words_for(n));
        Self {
            n,
            delta,
            epsilon,
            bits,
        }
    }

    /// The hermitian element `±σ` acting as `letter` on qubit `q` and identity elsewhere.
    pub fn single(n: usize, q: usize, letter: PauliLetter) -> Result<Self> {
        if q >= n {
            return Err(Error::QubitOutOfRange { index: q, n });
        }
        let (v, w) = letter.bits();
        let mut p = Self::identity(n);
        p.set_z(q, v);
        p.set_x(q, w);
        p.delta = v && w;
        p.epsilon = v && w;
        Ok(p)
    }

    /// Parses a letter string such as `"XIZY"` into `sign · i^imaginary · σ_s`,
    /// where `Y` denotes the hermitian matrix `σ₂`.
    pub fn from_pauli_string(s: &str, sign: i8, imaginary: bool) -> Result<Self> {
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidArgument(format!("sign must be ±1, got {sign}")));
        }
        if s.is_empty() {
            return Err(Error::InvalidArgument("empty Pauli string".into()));
        }
        let letters = s
            .chars()
            .enumerate()
            .map(|(i, c)| {
                PauliLetter::from_char(c).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "illegal character {c:?} at position {i} in Pauli string {s:?}"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut p = Self::identity(letters.len());
        let mut ys = 0usize;
        for (q, l) in letters.iter().enumerate() {
            let (v, w) = l.bits();
            p.set_z(q, v);
            p.set_x(q, w);
            ys += usize::from(v && w);
        }
        // σ₂ = -i τ_11, so σ_s = (-i)^{#Y} τ_a = i^{3·#Y} τ_a.
        let exponent = 2 * usize::from(sign < 0) + usize::from(imaginary) + 3 * (ys % 4);
        p.set_phase_exponent(exponent);
        Ok(p)
    }

    /// Text form `[-][i]LETTERS` with `Y` meaning `σ₂`. Returns the sign, the
    /// imaginary flag and the letters.
    pub fn to_signed_letters(&self) -> (i8, bool, String) {
        let mut letters = String::with_capacity(self.n);
        let mut ys = 0usize;
        for q in 0..self.n {
            let l = self.letter(q);
            ys += usize::from(l == PauliLetter::Y);
            letters.push(l.as_char());
        }
        let f = (self.phase_exponent() + ys) % 4;
        let sign = if f >= 2 { -1 } else { 1 };
        (sign, f % 2 == 1, letters)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> bool {
        self.delta
    }

    pub fn epsilon(&self) -> bool {
        self.epsilon
    }

    pub fn z(&self, q: usize) -> bool {
        (self.bits[q / 64] >> (q % 64)) & 1 == 1
    }

    pub fn x(&self, q: usize) -> bool {
        let off = words_for(self.n);
        (self.bits[off + q / 64] >> (q % 64)) & 1 == 1
    }

    /// Component `k` of `a`, with `k < n` the Z-part.
    pub fn a_bit(&self, k: usize) -> bool {
        if k < self.n {
            self.z(k)
        } else {
            self.x(k - self.n)
        }
    }

    pub fn letter(&self, q: usize) -> PauliLetter {
        PauliLetter::from_bits(self.z(q), self.x(q))
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.bits
    }

    pub(crate) fn z_words(&self) -> &[u64] {
        &self.bits[..words_for(self.n)]
    }

    pub(crate) fn x_words(&self) -> &[u64] {
        &self.bits[words_for(self.n)..]
    }

    pub(crate) fn set_phase(&mut self, delta: bool, epsilon: bool) {
        self.delta = delta;
        self.epsilon = epsilon;
    }

    /// Exponent `e` in `i^e τ_a`, in `0..4`.
    pub(crate) fn phase_exponent(&self) -> usize {
        usize::from(self.delta) + 2 * usize::from(self.epsilon)
    }

    fn set_phase_exponent(&mut self, e: usize) {
        let e = e % 4;
        self.delta = e & 1 == 1;
        self.epsilon = e & 2 == 2;
    }

    fn set_z(&mut self, q: usize, value: bool) {
        let (w, b) = (q / 64, q % 64);
        self.bits[w] = (self.bits[w] & !(1 << b)) | (u64::from(value) << b);
    }

    fn set_x(&mut self, q: usize, value: bool) {
        let (w, b) = (words_for(self.n) + q / 64, q % 64);
        self.bits[w] = (self.bits[w] & !(1 << b)) | (u64::from(value) << b);
    }

    pub(crate) fn set_a_bit(&mut self, k: usize, value: bool) {
        if k < self.n {
            self.set_z(k, value)
        } else {
            self.set_x(k - self.n, value)
        }
    }

    /// Number of qubits on which the operator acts non-trivially.
    pub fn weight(&self) -> usize {
        let (z, x) = self.bits.split_at(words_for(self.n));
        z.iter().zip(x).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    /// `aᵀUa = v·w (mod 2)`: parity of the number of `τ_11` factors.
    pub fn y_parity(&self) -> bool {
        dot(self.z_words(), self.x_words())
    }

    /// Hermitian iff `δ ≡ aᵀUa (mod 2)`.
    pub fn is_hermitian(&self) -> bool {
        self.delta == self.y_parity()
    }

    pub(crate) fn require_hermitian(&self, what: &str) -> Result<()> {
        if self.is_hermitian() {
            Ok(())
        } else {
            Err(Error::NonHermitian(format!("{what} {self}")))
        }
    }

    /// Whether the X-part `w` vanishes, i.e. the operator is diagonal.
    pub fn is_diagonal(&self) -> bool {
        self.x_words().iter().all(|&w| w == 0)
    }

    /// Group product `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        check_dims(self.n, rhs.n)?;
        let mut out = self.clone();
        out.mul_assign_unchecked(rhs);
        Ok(out)
    }

    /// `self ← self · rhs`. Callers guarantee equal qubit counts.
    pub(crate) fn mul_assign_unchecked(&mut self, rhs: &Self) {
        // ε12 = ε1 + ε2 + δ1δ2 + a2ᵀUa1 with a2ᵀUa1 = v2·w1
        let sign = dot(rhs.z_words(), self.x_words());
        self.epsilon ^= rhs.epsilon ^ (self.delta & rhs.delta) ^ sign;
        self.delta ^= rhs.delta;
        for (a, b) in self.bits.iter_mut().zip(&rhs.bits) {
            *a ^= b;
        }
    }

    /// `i · self`.
    pub fn times_i(&self) -> Self {
        let mut out = self.clone();
        out.set_phase_exponent(self.phase_exponent() + 1);
        out
    }

    /// `-self`.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        out.epsilon ^= true;
        out
    }

    /// Symplectic form `a_pᵀ J a_q (mod 2)` vanishes.
    pub fn commutes(&self, other: &Self) -> Result<bool> {
        check_dims(self.n, other.n)?;
        Ok(self.commutes_unchecked(other))
    }

    pub(crate) fn commutes_unchecked(&self, other: &Self) -> bool {
        !(dot(self.z_words(), other.x_words()) ^ dot(self.x_words(), other.z_words()))
    }

    /// `⟨0ⁿ| self |0ⁿ⟩` for a hermitian element.
    pub fn expectation_zero_state(&self) -> Result<i8> {
        self.require_hermitian("expectation requested for")?;
        if !self.is_diagonal() {
            return Ok(0);
        }
        // hermitian and diagonal forces δ = 0
        Ok(if self.epsilon { -1 } else { 1 })
    }
}

impl fmt::Display for PauliElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (sign, imaginary, letters) = self.to_signed_letters();
        if sign < 0 {
            f.write_str("-")?;
        }
        if imaginary {
            f.write_str("i")?;
        }
        f.write_str(&letters)
    }
}

impl fmt::Debug for PauliElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "PauliElement({self}; δ={}, ε={})",
            u8::from(self.delta),
            u8::from(self.epsilon)
        )
    }
}

impl FromStr for PauliElement {
    type Err = Error;

    /// Accepts an optional sign (`+`, `-` or `−`) followed by an optional `i`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (sign, rest) = if let Some(r) = s.strip_prefix('+') {
            (1, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (-1, r)
        } else if let Some(r) = s.strip_prefix('−') {
            (-1, r)
        } else {
            (1, s)
        };
        let (imaginary, rest) = match rest.strip_prefix('i') {
            Some(r) => (true, r),
            None => (false, rest),
        };
        Self::from_pauli_string(rest, sign, imaginary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliElement {
        s.parse().unwrap()
    }

    #[test]
    fn x_times_z_is_minus_tau11() {
        let prod = p("X").mul(&p("Z")).unwrap();
        assert!(!prod.delta());
        assert!(prod.epsilon());
        assert!(prod.z(0) && prod.x(0));
        // -τ_11 = -iY
        assert_eq!(prod.to_string(), "-iY");
    }

    #[test]
    fn z_encoding() {
        let z = p("Z");
        assert!(!z.delta() && !z.epsilon());
        assert!(z.z(0) && !z.x(0));
    }

    #[test]
    fn y_parses_hermitian() {
        let y = p("Y");
        assert!(y.is_hermitian());
        assert!(y.delta());
        assert_eq!(y.to_string(), "Y");
        assert!(y.mul(&y).unwrap() == PauliElement::identity(1));
    }

    #[test]
    fn identity_is_neutral() {
        let q = p("-XYZI");
        let id = PauliElement::identity(4);
        assert_eq!(id.mul(&q).unwrap(), q);
        assert_eq!(q.mul(&id).unwrap(), q);
    }

    #[test]
    fn commutation_examples() {
        assert!(p("X").commutes(&p("X")).unwrap());
        assert!(!p("X").commutes(&p("Z")).unwrap());
        assert!(p("XZ").commutes(&p("ZX")).unwrap());
    }

    #[test]
    fn expectation_examples() {
        assert_eq!(p("ZZ").expectation_zero_state().unwrap(), 1);
        assert_eq!(p("XI").expectation_zero_state().unwrap(), 0);
        assert_eq!(p("-ZI").expectation_zero_state().unwrap(), -1);
        assert!(matches!(
            p("iZ").expectation_zero_state(),
            Err(Error::NonHermitian(_))
        ));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            p("X").mul(&p("XX")),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(p("X").commutes(&p("XX")).is_err());
    }

    #[test]
    fn parse_errors() {
        assert!("".parse::<PauliElement>().is_err());
        assert!("XQZ".parse::<PauliElement>().is_err());
        assert!(PauliElement::from_pauli_string("X", 2, false).is_err());
    }

    #[test]
    fn sign_prefixes() {
        assert_eq!(p("−X"), p("-X"));
        assert_eq!(p("+iX").to_string(), "iX");
        assert_eq!(p("-iXY").to_string(), "-iXY");
        assert!(!p("iX").is_hermitian());
    }

    #[test]
    fn wide_elements_use_multiple_words() {
        let mut s = "I".repeat(130);
        s.replace_range(0..1, "X");
        s.replace_range(129..130, "Y");
        let a = p(&s);
        assert_eq!(a.weight(), 2);
        assert!(a.x(0) && a.z(129) && a.x(129));
        assert_eq!(a.to_string(), s);
    }
}

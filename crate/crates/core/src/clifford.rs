//! Clifford unitaries, up to global phase, as binary tableaux `(C, d, h)`.
//!
//! Column `k` of `C` together with `d_k` and `h_k` is the image
//! `Q τ_{e_k} Q† = i^{d_k} (-1)^{h_k} τ_{c_k}` of the hermitian generator
//! `τ_{e_k}` (`Z_k` for `k < n`, `X_{k-n}` otherwise). The image of an
//! arbitrary element follows from
//!
//! ```text
//! b2 = C b1
//! δ2 = δ1 + dᵀb1
//! ε2 = ε1 + hᵀb1 + b1ᵀ lows(CᵀUC + ddᵀ) b1 + δ1 dᵀb1
//! ```
//!
//! with `lows` the strictly lower triangular part.

use std::fmt;

use crate::error::{check_dims, Error, Result};
use crate::pauli::{dot, words_for, PauliElement, PauliLetter};

/// Rotation angle restricted to `{0, π/2, π, 3π/2}`, stored as the multiple of `π/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiscreteAngle(u8);

impl DiscreteAngle {
    pub const ZERO: Self = Self(0);
    pub const HALF_PI: Self = Self(1);
    pub const PI: Self = Self(2);
    pub const THREE_HALVES_PI: Self = Self(3);

    pub const ALL: [Self; 4] = [Self::ZERO, Self::HALF_PI, Self::PI, Self::THREE_HALVES_PI];

    /// Angle `k·π/2`, reduced mod 2π.
    pub fn from_quarter_turns(k: i64) -> Self {
        Self(k.rem_euclid(4) as u8)
    }

    pub fn quarter_turns(self) -> u8 {
        self.0
    }

    pub fn shifted(self, quarter_turns: i64) -> Self {
        Self::from_quarter_turns(i64::from(self.0) + quarter_turns)
    }

    pub fn radians(self) -> f64 {
        f64::from(self.0) * std::f64::consts::FRAC_PI_2
    }
}

/// Offset of the word holding component `k` of a 2n-bit vector, and the bit within it.
#[inline]
fn locate(n: usize, k: usize) -> (usize, usize) {
    if k < n {
        (k / 64, k % 64)
    } else {
        (words_for(n) + (k - n) / 64, (k - n) % 64)
    }
}

/// Calls `f(k)` for every set component `k` of a packed 2n-bit vector, in increasing order.
#[inline]
fn for_each_set(n: usize, words: &[u64], mut f: impl FnMut(usize)) {
    let half = words_for(n);
    for (wi, &word) in words.iter().enumerate() {
        let base = if wi < half { wi * 64 } else { n + (wi - half) * 64 };
        let mut w = word;
        while w != 0 {
            let tz = w.trailing_zeros() as usize;
            f(base + tz);
            w &= w - 1;
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct CliffordTableau {
    n: usize,
    /// Row stride in words, `2 * words_for(n)`.
    stride: usize,
    /// Column `k` of `C` at `c[k*stride..(k+1)*stride]`.
    c: Vec<u64>,
    d: Vec<u64>,
    h: Vec<u64>,
    /// Row `k` of `lows(CᵀUC + ddᵀ)` at `lows[k*stride..]`: bit `j < k` set iff
    /// `c_kᵀUc_j + d_k d_j = 1`.
    lows: Vec<u64>,
}

impl CliffordTableau {
    pub fn identity(n: usize) -> Self {
        Self::from_images_unchecked(n, (0..2 * n).map(|k| PauliElement::generator(n, k)).collect())
    }

    /// Builds the tableau of the Clifford that maps `τ_{e_k}` to `images[k]`.
    ///
    /// The images must be hermitian and satisfy the canonical commutation
    /// relations of the generators (`Z_i`, `X_j` anticommute iff `i == j`).
    pub fn from_images(n: usize, images: Vec<PauliElement>) -> Result<Self> {
        if images.len() != 2 * n {
            return Err(Error::InvalidArgument(format!(
                "a Clifford on {n} qubits needs {} generator images, got {}",
                2 * n,
                images.len()
            )));
        }
        for img in &images {
            check_dims(n, img.num_qubits())?;
            img.require_hermitian("generator image")?;
        }
        for i in 0..2 * n {
            for j in i + 1..2 * n {
                let anticommute = j == i + n;
                if images[i].commutes_unchecked(&images[j]) == anticommute {
                    return Err(Error::InvalidArgument(format!(
                        "generator images {} and {} violate the symplectic condition",
                        images[i], images[j]
                    )));
                }
            }
        }
        Ok(Self::from_images_unchecked(n, images))
    }

    pub(crate) fn from_images_unchecked(n: usize, images: Vec<PauliElement>) -> Self {
        let stride = 2 * words_for(n);
        let mut c = vec![0u64; 2 * n * stride];
        let mut d = vec![0u64; stride];
        let mut h = vec![0u64; stride];
        for (k, img) in images.iter().enumerate() {
            c[k * stride..(k + 1) * stride].copy_from_slice(img.words());
            let (w, b) = locate(n, k);
            d[w] |= u64::from(img.delta()) << b;
            h[w] |= u64::from(img.epsilon()) << b;
        }
        let mut lows = vec![0u64; 2 * n * stride];
        for k in 0..2 * n {
            let dk = images[k].delta();
            for j in 0..k {
                // c_kᵀ U c_j = v(c_k) · w(c_j)
                let bit = dot(images[k].z_words(), images[j].x_words()) ^ (dk & images[j].delta());
                if bit {
                    let (w, b) = locate(n, j);
                    lows[k * stride + w] |= 1 << b;
                }
            }
        }
        Self {
            n,
            stride,
            c,
            d,
            h,
            lows,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Copy with the sign of image `k` flipped. Only used to inject faults.
    pub(crate) fn with_flipped_sign(&self, k: usize) -> Self {
        let images = (0..2 * self.n)
            .map(|j| if j == k { self.image(j).negated() } else { self.image(j) })
            .collect();
        Self::from_images_unchecked(self.n, images)
    }

    fn column_words(&self, k: usize) -> &[u64] {
        &self.c[k * self.stride..(k + 1) * self.stride]
    }

    /// Image `Q τ_{e_k} Q†` of generator `k`.
    pub fn image(&self, k: usize) -> PauliElement {
        let (w, b) = locate(self.n, k);
        PauliElement::from_words(
            self.n,
            (self.d[w] >> b) & 1 == 1,
            (self.h[w] >> b) & 1 == 1,
            self.column_words(k).to_vec(),
        )
    }

    /// Entry `C[i][j]`, i.e. component `i` of column `j`.
    pub fn matrix_entry(&self, i: usize, j: usize) -> bool {
        let (w, b) = locate(self.n, i);
        (self.column_words(j)[w] >> b) & 1 == 1
    }

    /// `Q p Q†`.
    pub fn conjugate(&self, p: &PauliElement) -> Result<PauliElement> {
        check_dims(self.n, p.num_qubits())?;
        let mut out = p.clone();
        self.conjugate_in_place(&mut out);
        Ok(out)
    }

    /// `p ← Q p Q†`; callers guarantee matching dimensions.
    pub(crate) fn conjugate_in_place(&self, p: &mut PauliElement) {
        let b1 = p.words();
        let mut b2 = vec![0u64; self.stride];
        let mut quad = false;
        for_each_set(self.n, b1, |k| {
            for (o, c) in b2.iter_mut().zip(self.column_words(k)) {
                *o ^= c;
            }
            quad ^= dot(&self.lows[k * self.stride..(k + 1) * self.stride], b1);
        });
        let dtb = dot(&self.d, b1);
        let htb = dot(&self.h, b1);
        let delta1 = p.delta();
        let epsilon2 = p.epsilon() ^ htb ^ quad ^ (delta1 & dtb);
        *p = PauliElement::from_words(self.n, delta1 ^ dtb, epsilon2, b2);
    }

    /// The Clifford `outer · inner`: conjugating by it equals conjugating by
    /// `inner` first and `outer` second.
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self> {
        check_dims(outer.n, inner.n)?;
        let images = (0..2 * inner.n)
            .map(|k| {
                let mut img = inner.image(k);
                outer.conjugate_in_place(&mut img);
                img
            })
            .collect();
        Ok(Self::from_images_unchecked(inner.n, images))
    }

    /// The tableau of `Q†`. Uses the symplectic inverse `C⁻¹ = J Cᵀ J`.
    pub fn inverse(&self) -> Self {
        let n = self.n;
        let swap = |k: usize| if k < n { k + n } else { k - n };
        let images = (0..2 * n)
            .map(|k| {
                // (J Cᵀ J)[i][k] = C[swap(k)][swap(i)]
                let mut b = PauliElement::identity(n);
                for i in 0..2 * n {
                    if self.matrix_entry(swap(k), swap(i)) {
                        b.set_a_bit(i, true);
                    }
                }
                let delta = b.y_parity();
                b.set_phase(delta, false);
                // Q b Q† = (-1)^s τ_{e_k}  ⇒  Q† τ_{e_k} Q = (-1)^s b
                let mut image = b.clone();
                self.conjugate_in_place(&mut image);
                debug_assert_eq!(image.words(), PauliElement::generator(n, k).words());
                b.set_phase(delta, image.epsilon());
                b
            })
            .collect();
        Self::from_images_unchecked(n, images)
    }

    /// `CᵀJC = J (mod 2)`.
    pub fn is_symplectic(&self) -> bool {
        let images: Vec<_> = (0..2 * self.n).map(|k| self.image(k)).collect();
        (0..2 * self.n).all(|i| {
            (i + 1..2 * self.n).all(|j| {
                let anticommute = j == i + self.n;
                images[i].commutes_unchecked(&images[j]) != anticommute
            })
        })
    }

    /// `d = diag(CᵀUC)`, i.e. every generator image is hermitian.
    pub fn preserves_hermiticity(&self) -> bool {
        (0..2 * self.n).all(|k| self.image(k).is_hermitian())
    }

    fn check_qubit(n: usize, q: usize) -> Result<()> {
        if q < n {
            Ok(())
        } else {
            Err(Error::QubitOutOfRange { index: q, n })
        }
    }

    fn check_pair(n: usize, a: usize, b: usize) -> Result<()> {
        Self::check_qubit(n, a)?;
        Self::check_qubit(n, b)?;
        if a == b {
            return Err(Error::InvalidArgument(format!(
                "two-qubit gate needs distinct qubits, got {a} twice"
            )));
        }
        Ok(())
    }

    fn z(n: usize, q: usize) -> PauliElement {
        PauliElement::generator(n, q)
    }

    fn x(n: usize, q: usize) -> PauliElement {
        PauliElement::generator(n, n + q)
    }

    fn with_images(
        n: usize,
        mut edit: impl FnMut(&mut Vec<PauliElement>) -> Result<()>,
    ) -> Result<Self> {
        let mut images: Vec<_> = (0..2 * n).map(|k| PauliElement::generator(n, k)).collect();
        edit(&mut images)?;
        Ok(Self::from_images_unchecked(n, images))
    }

    /// Hadamard: `X ↔ Z`.
    pub fn hadamard(n: usize, q: usize) -> Result<Self> {
        Self::check_qubit(n, q)?;
        Self::with_images(n, |im| {
            im.swap(q, n + q);
            Ok(())
        })
    }

    /// Phase gate `S`: `X ↦ Y`, `Z ↦ Z`.
    pub fn phase_s(n: usize, q: usize) -> Result<Self> {
        Self::check_qubit(n, q)?;
        Self::with_images(n, |im| {
            im[n + q] = PauliElement::single(n, q, PauliLetter::Y)?;
            Ok(())
        })
    }

    /// CNOT: `X_c ↦ X_c X_t`, `Z_t ↦ Z_c Z_t`.
    pub fn cnot(n: usize, control: usize, target: usize) -> Result<Self> {
        Self::check_pair(n, control, target)?;
        Self::with_images(n, |im| {
            im[n + control] = Self::x(n, control).mul(&Self::x(n, target))?;
            im[target] = Self::z(n, control).mul(&Self::z(n, target))?;
            Ok(())
        })
    }

    /// CZ: `X_a ↦ X_a Z_b`, `X_b ↦ Z_a X_b`.
    pub fn cz(n: usize, a: usize, b: usize) -> Result<Self> {
        Self::check_pair(n, a, b)?;
        Self::with_images(n, |im| {
            im[n + a] = Self::x(n, a).mul(&Self::z(n, b))?;
            im[n + b] = Self::z(n, a).mul(&Self::x(n, b))?;
            Ok(())
        })
    }

    pub fn swap(n: usize, a: usize, b: usize) -> Result<Self> {
        Self::check_pair(n, a, b)?;
        Self::with_images(n, |im| {
            im.swap(a, b);
            im.swap(n + a, n + b);
            Ok(())
        })
    }

    /// Conjugation by a Pauli operator: every generator that anticommutes with
    /// `p` picks up a sign.
    pub fn pauli_gate(p: &PauliElement) -> Self {
        let n = p.num_qubits();
        let images = (0..2 * n)
            .map(|k| {
                let g = PauliElement::generator(n, k);
                if p.commutes_unchecked(&g) {
                    g
                } else {
                    g.negated()
                }
            })
            .collect();
        Self::from_images_unchecked(n, images)
    }
}

impl fmt::Debug for CliffordTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for k in 0..2 * self.n {
            list.entry(&format_args!("{}", self.image(k)));
        }
        list.finish()
    }
}

/// `e^{iθ/2 P} Q e^{-iθ/2 P}` for hermitian `P` and a discrete angle.
///
/// Equals `Q` when `P` and `Q` commute; otherwise `Q, iPQ, -Q, -iPQ` for
/// `θ = 0, π/2, π, 3π/2`.
pub fn rotation_conjugate(
    generator: &PauliElement,
    theta: DiscreteAngle,
    q: &PauliElement,
) -> Result<PauliElement> {
    check_dims(generator.num_qubits(), q.num_qubits())?;
    generator.require_hermitian("rotation generator")?;
    let mut out = q.clone();
    rotate_in_place(generator, theta, &mut out);
    Ok(out)
}

/// In-place form of [`rotation_conjugate`]; callers have validated the generator.
#[inline]
pub(crate) fn rotate_in_place(generator: &PauliElement, theta: DiscreteAngle, q: &mut PauliElement) {
    if theta == DiscreteAngle::ZERO || generator.commutes_unchecked(q) {
        return;
    }
    match theta.quarter_turns() {
        2 => *q = q.negated(),
        t => {
            let mut pq = generator.clone();
            pq.mul_assign_unchecked(q);
            let ipq = pq.times_i();
            *q = if t == 1 { ipq } else { ipq.negated() };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliElement {
        s.parse().unwrap()
    }

    #[test]
    fn identity_conjugation() {
        let t = CliffordTableau::identity(3);
        for s in ["XYZ", "-iZZI", "IYI"] {
            assert_eq!(t.conjugate(&p(s)).unwrap(), p(s));
        }
    }

    #[test]
    fn hadamard_swaps_x_and_z() {
        let h = CliffordTableau::hadamard(1, 0).unwrap();
        assert_eq!(h.conjugate(&p("X")).unwrap(), p("Z"));
        assert_eq!(h.conjugate(&p("Z")).unwrap(), p("X"));
        assert_eq!(h.conjugate(&p("Y")).unwrap(), p("-Y"));
    }

    #[test]
    fn phase_gate_images() {
        let s = CliffordTableau::phase_s(1, 0).unwrap();
        assert_eq!(s.conjugate(&p("X")).unwrap(), p("Y"));
        assert_eq!(s.conjugate(&p("Z")).unwrap(), p("Z"));
        assert_eq!(s.conjugate(&p("Y")).unwrap(), p("-X"));
    }

    #[test]
    fn cnot_spreads_x() {
        let t = CliffordTableau::cnot(2, 0, 1).unwrap();
        assert_eq!(t.conjugate(&p("XI")).unwrap(), p("XX"));
        assert_eq!(t.conjugate(&p("IZ")).unwrap(), p("ZZ"));
    }

    #[test]
    fn swap_relabels() {
        let t = CliffordTableau::swap(2, 0, 1).unwrap();
        assert_eq!(t.conjugate(&p("XI")).unwrap(), p("IX"));
    }

    #[test]
    fn s_squared_acts_like_z() {
        let s = CliffordTableau::phase_s(1, 0).unwrap();
        let s2 = CliffordTableau::compose(&s, &s).unwrap();
        assert_eq!(s2.conjugate(&p("X")).unwrap(), p("-X"));
        assert_eq!(s2, CliffordTableau::pauli_gate(&p("Z")));
    }

    #[test]
    fn hadamard_is_an_involution() {
        let h = CliffordTableau::hadamard(2, 1).unwrap();
        assert_eq!(CliffordTableau::compose(&h, &h).unwrap(), CliffordTableau::identity(2));
        assert_eq!(h.inverse(), h);
        assert_eq!(CliffordTableau::identity(2).inverse(), CliffordTableau::identity(2));
    }

    #[test]
    fn constructor_errors() {
        assert!(matches!(
            CliffordTableau::hadamard(2, 2),
            Err(Error::QubitOutOfRange { index: 2, n: 2 })
        ));
        assert!(CliffordTableau::cnot(2, 1, 1).is_err());
        assert!(CliffordTableau::cz(2, 0, 5).is_err());
        assert!(CliffordTableau::identity(2).conjugate(&p("X")).is_err());
        // X and Z images must anticommute.
        assert!(CliffordTableau::from_images(1, vec![p("Z"), p("Z")]).is_err());
        assert!(CliffordTableau::from_images(1, vec![p("iZ"), p("X")]).is_err());
    }

    #[test]
    fn rotation_cases() {
        let z = p("Z");
        let x = p("X");
        assert_eq!(rotation_conjugate(&z, DiscreteAngle::ZERO, &x).unwrap(), x);
        assert_eq!(rotation_conjugate(&z, DiscreteAngle::PI, &x).unwrap(), p("-X"));
        // iZX = i·iY = -Y
        assert_eq!(rotation_conjugate(&z, DiscreteAngle::HALF_PI, &x).unwrap(), p("-Y"));
        assert_eq!(rotation_conjugate(&z, DiscreteAngle::THREE_HALVES_PI, &x).unwrap(), p("Y"));
        assert_eq!(rotation_conjugate(&z, DiscreteAngle::HALF_PI, &z).unwrap(), z);
        assert!(rotation_conjugate(&p("iZ"), DiscreteAngle::PI, &x).is_err());
    }

    #[test]
    fn angles_wrap() {
        assert_eq!(DiscreteAngle::from_quarter_turns(-1), DiscreteAngle::THREE_HALVES_PI);
        assert_eq!(DiscreteAngle::PI.shifted(3), DiscreteAngle::HALF_PI);
    }
}

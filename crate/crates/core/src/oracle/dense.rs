//! Dense statevector simulation for small qubit counts.
//!
//! Qubit `q` corresponds to bit `q` of the basis-state index. Pauli operators
//! are applied from their definition `τ_a = ⊗_q Z^{v_q} X^{w_q}` directly, so
//! nothing here depends on the binary product rules being verified.

use num_complex::Complex64;

use crate::circuit::Gate;
use crate::clifford::CliffordTableau;
use crate::error::{Error, Result};
use crate::pauli::PauliElement;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

fn z_mask(p: &PauliElement) -> usize {
    (0..p.num_qubits()).filter(|&q| p.z(q)).map(|q| 1 << q).sum()
}

fn x_mask(p: &PauliElement) -> usize {
    (0..p.num_qubits()).filter(|&q| p.x(q)).map(|q| 1 << q).sum()
}

/// `i^δ (-1)^ε`.
fn phase(p: &PauliElement) -> Complex64 {
    let mut c = if p.delta() { I } else { ONE };
    if p.epsilon() {
        c = -c;
    }
    c
}

/// Matrix element `⟨row| p |col⟩`.
pub fn pauli_entry(p: &PauliElement, row: usize, col: usize) -> Complex64 {
    if row != col ^ x_mask(p) {
        return ZERO;
    }
    let sign = if (z_mask(p) & row).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
    phase(p) * sign
}

/// Row-major `2ⁿ × 2ⁿ` matrix of `p`.
pub fn pauli_matrix(p: &PauliElement) -> Vec<Complex64> {
    let dim = 1usize << p.num_qubits();
    let mut m = vec![ZERO; dim * dim];
    for col in 0..dim {
        let row = col ^ x_mask(p);
        m[row * dim + col] = pauli_entry(p, row, col);
    }
    m
}

pub fn matmul(a: &[Complex64], b: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i * dim + k];
            if aik == ZERO {
                continue;
            }
            for j in 0..dim {
                out[i * dim + j] += aik * b[k * dim + j];
            }
        }
    }
    out
}

pub fn adjoint(a: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            out[j * dim + i] = a[i * dim + j].conj();
        }
    }
    out
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    n: usize,
    amps: Vec<Complex64>,
}

impl DenseState {
    /// `|0ⁿ⟩`.
    pub fn zero(n: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        Self { n, amps }
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n];
        amps[index] = ONE;
        Self { n, amps }
    }

    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Self {
        assert_eq!(amps.len(), 1 << n);
        Self { n, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn apply_h(&mut self, q: usize) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bit = 1 << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a, b) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = (a + b) * s;
                self.amps[i | bit] = (a - b) * s;
            }
        }
    }

    pub fn apply_s(&mut self, q: usize) {
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i >> q) & 1 == 1 {
                *a *= I;
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let (c, t) = (1 << control, 1 << target);
        for i in 0..self.amps.len() {
            if i & c != 0 && i & t == 0 {
                self.amps.swap(i, i | t);
            }
        }
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) {
        let mask = (1 << a) | (1 << b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
    }

    pub fn apply_swap(&mut self, a: usize, b: usize) {
        let (ba, bb) = (1 << a, 1 << b);
        for i in 0..self.amps.len() {
            if i & ba != 0 && i & bb == 0 {
                self.amps.swap(i, (i & !ba) | bb);
            }
        }
    }

    /// `|ψ⟩ ← p|ψ⟩`.
    pub fn apply_pauli(&mut self, p: &PauliElement) {
        let (xm, zm, ph) = (x_mask(p), z_mask(p), phase(p));
        let mut out = vec![ZERO; self.amps.len()];
        for (col, &a) in self.amps.iter().enumerate() {
            let row = col ^ xm;
            let sign = if (zm & row).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            out[row] = ph * sign * a;
        }
        self.amps = out;
    }

    /// `|ψ⟩ ← e^{-iθ/2 P}|ψ⟩ = (cos(θ/2) I − i sin(θ/2) P)|ψ⟩` for hermitian `P`.
    pub fn apply_rotation(&mut self, p: &PauliElement, theta: f64) {
        let mut rotated = self.clone();
        rotated.apply_pauli(p);
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        for (a, pa) in self.amps.iter_mut().zip(&rotated.amps) {
            *a = *a * c - I * s * pa;
        }
    }

    pub fn apply_matrix(&mut self, m: &[Complex64]) {
        let dim = self.amps.len();
        let out = (0..dim)
            .map(|i| (0..dim).map(|j| m[i * dim + j] * self.amps[j]).sum())
            .collect();
        self.amps = out;
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        match gate {
            Gate::H(q) => self.apply_h(*q),
            Gate::S(q) => self.apply_s(*q),
            Gate::Cnot { control, target } => self.apply_cnot(*control, *target),
            Gate::Cz(a, b) => self.apply_cz(*a, *b),
            Gate::Swap(a, b) => self.apply_swap(*a, *b),
            Gate::X(q) => self.apply_pauli(&PauliElement::single(self.n, *q, crate::PauliLetter::X)?),
            Gate::Y(q) => self.apply_pauli(&PauliElement::single(self.n, *q, crate::PauliLetter::Y)?),
            Gate::Z(q) => self.apply_pauli(&PauliElement::single(self.n, *q, crate::PauliLetter::Z)?),
            Gate::Pauli(p) => self.apply_pauli(p),
            Gate::Tableau(t) => self.apply_matrix(&clifford_matrix(t)?),
        }
        Ok(())
    }

    /// `⟨ψ| p |ψ⟩`.
    pub fn expectation(&self, p: &PauliElement) -> Complex64 {
        let mut image = self.clone();
        image.apply_pauli(p);
        self.inner(&image)
    }
}

/// A dense unitary `Q` (up to global phase) with `Q τ_{e_k} Q† = image(k)`.
///
/// `Q|b⟩ = Π_k X'_k^{b_k} |ψ₀⟩` where `X'_k` are the images of the `X_k` and
/// `|ψ₀⟩` is the joint +1 eigenvector of the images of the `Z_k`.
pub fn clifford_matrix(t: &CliffordTableau) -> Result<Vec<Complex64>> {
    let n = t.num_qubits();
    if n > 12 {
        return Err(Error::CapExceeded(format!(
            "dense Clifford synthesis limited to 12 qubits, got {n}"
        )));
    }
    let dim = 1usize << n;
    let project = |mut psi: DenseState| {
        for k in 0..n {
            let mut s = psi.clone();
            s.apply_pauli(&t.image(k));
            for (a, b) in psi.amps.iter_mut().zip(&s.amps) {
                *a = (*a + b) * 0.5;
            }
        }
        psi
    };
    let psi0 = (0..dim)
        .map(|j| project(DenseState::basis(n, j)))
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("dimension is positive");
    let norm = psi0.norm();
    if norm < 1e-6 {
        return Err(Error::Internal("stabilizer images have no common eigenvector".into()));
    }
    let psi0 = DenseState::from_amplitudes(n, psi0.amps.iter().map(|a| a / norm).collect());
    let mut m = vec![ZERO; dim * dim];
    for b in 0..dim {
        let mut col = psi0.clone();
        for k in 0..n {
            if (b >> k) & 1 == 1 {
                col.apply_pauli(&t.image(n + k));
            }
        }
        for (row, a) in col.amps.iter().enumerate() {
            m[row * dim + b] = *a;
        }
    }
    Ok(m)
}

/// `Q p Q†` as a dense matrix, for a Clifford given by its dense unitary.
pub fn conjugate_dense(q: &[Complex64], p: &[Complex64], dim: usize) -> Vec<Complex64> {
    matmul(&matmul(q, p, dim), &adjoint(q, dim), dim)
}

/// Dense unitary of a named gate on `n` qubits (tableau gates via [`clifford_matrix`]).
pub fn gate_matrix(gate: &Gate, n: usize) -> Result<Vec<Complex64>> {
    let dim = 1usize << n;
    let mut m = vec![ZERO; dim * dim];
    for col in 0..dim {
        let mut s = DenseState::basis(n, col);
        s.apply_gate(gate)?;
        for (row, a) in s.amps.iter().enumerate() {
            m[row * dim + col] = *a;
        }
    }
    Ok(m)
}

//! Seed-deterministic random templates, Pauli elements and Cliffords shared by
//! the verification suite and the tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{
    CircuitTemplate, CliffordLayerSpec, Condition, Gate, GateApplication, InputPoint, Observable,
    ObservableTerm, ParameterVector,
};
use crate::clifford::{CliffordTableau, DiscreteAngle};
use crate::pauli::{PauliElement, PauliLetter};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomTemplateSpec {
    pub qubits: usize,
    pub params: usize,
    pub terms: usize,
    pub layer_width: usize,
    /// When positive, each gate is guarded by a random input bit with probability ½.
    pub input_bits: usize,
}

impl RandomTemplateSpec {
    pub fn new(qubits: usize, params: usize, terms: usize) -> Self {
        Self {
            qubits,
            params,
            terms,
            layer_width: 3,
            input_bits: 0,
        }
    }

    pub fn with_inputs(mut self, bits: usize) -> Self {
        self.input_bits = bits;
        self
    }

    pub fn with_layer_width(mut self, width: usize) -> Self {
        self.layer_width = width;
        self
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const LETTERS: [PauliLetter; 4] = [PauliLetter::I, PauliLetter::X, PauliLetter::Y, PauliLetter::Z];

/// Uniform over all `4^{n+1}` elements `i^δ (-1)^ε τ_a`.
pub fn random_pauli<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PauliElement {
    let z: Vec<bool> = (0..n).map(|_| rng.random()).collect();
    let x: Vec<bool> = (0..n).map(|_| rng.random()).collect();
    PauliElement::from_bits(rng.random(), rng.random(), &z, &x).expect("equal lengths")
}

/// A random hermitian Pauli string with a random sign.
pub fn random_hermitian_pauli<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PauliElement {
    let letters: String = (0..n)
        .map(|_| LETTERS[rng.random_range(0..4)].as_char())
        .collect();
    let sign = if rng.random() { 1 } else { -1 };
    PauliElement::from_pauli_string(&letters, sign, false).expect("valid letters")
}

fn random_nonidentity_string<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PauliElement {
    loop {
        let p = random_hermitian_pauli(n, rng);
        if p.weight() > 0 {
            let (_, _, letters) = p.to_signed_letters();
            return letters.parse().expect("valid letters");
        }
    }
}

/// A gate drawn uniformly from `{H, S, CNOT, CZ, SWAP, X, Y, Z}` (single-qubit
/// gates only when `n == 1`).
pub fn random_gate<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Gate {
    let pick = if n == 1 {
        [0, 1, 5, 6, 7][rng.random_range(0..5)]
    } else {
        rng.random_range(0..8)
    };
    let q = rng.random_range(0..n);
    let mut other = || {
        let r = rng.random_range(0..n - 1);
        if r >= q {
            r + 1
        } else {
            r
        }
    };
    match pick {
        0 => Gate::H(q),
        1 => Gate::S(q),
        2 => Gate::Cnot {
            control: q,
            target: other(),
        },
        3 => Gate::Cz(q, other()),
        4 => Gate::Swap(q, other()),
        5 => Gate::X(q),
        6 => Gate::Y(q),
        _ => Gate::Z(q),
    }
}

/// Composition of `gates` random generating-set gates.
pub fn random_tableau<R: Rng + ?Sized>(n: usize, gates: usize, rng: &mut R) -> CliffordTableau {
    let mut t = CliffordTableau::identity(n);
    for _ in 0..gates {
        let g = random_gate(n, rng).tableau(n).expect("gate indices in range");
        t = CliffordTableau::compose(&g, &t).expect("equal dimensions");
    }
    t
}

pub fn random_theta<R: Rng + ?Sized>(len: usize, rng: &mut R) -> ParameterVector {
    ParameterVector::new(
        (0..len)
            .map(|_| DiscreteAngle::from_quarter_turns(rng.random_range(0..4)))
            .collect(),
    )
}

pub fn random_continuous_theta<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect()
}

pub fn random_input<R: Rng + ?Sized>(bits: usize, rng: &mut R) -> InputPoint {
    InputPoint::new((0..bits).map(|_| rng.random()).collect())
}

pub fn random_template_with<R: Rng + ?Sized>(spec: &RandomTemplateSpec, rng: &mut R) -> CircuitTemplate {
    let n = spec.qubits;
    let layers = (0..=spec.params)
        .map(|_| {
            CliffordLayerSpec::new(
                (0..spec.layer_width)
                    .map(|_| {
                        let gate = random_gate(n, rng);
                        let condition = (spec.input_bits > 0 && rng.random::<bool>())
                            .then(|| Condition::Bit(rng.random_range(0..spec.input_bits)));
                        GateApplication { gate, condition }
                    })
                    .collect(),
            )
        })
        .collect();
    let generators = (0..spec.params)
        .map(|_| random_nonidentity_string(n, rng))
        .collect();
    let terms = (0..spec.terms)
        .map(|_| ObservableTerm {
            coeff: rng.random_range(-1.0..=1.0),
            pauli: random_nonidentity_string(n, rng),
        })
        .collect();
    CircuitTemplate::new(
        n,
        Some(spec.input_bits),
        layers,
        generators,
        Observable::new(terms).expect("coefficients are bounded"),
    )
    .expect("random template is well formed")
}

pub fn random_template(spec: &RandomTemplateSpec, seed: u64) -> CircuitTemplate {
    random_template_with(spec, &mut rng_from_seed(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_follow_the_spec_and_the_seed() {
        let spec = RandomTemplateSpec::new(3, 4, 2).with_inputs(2).with_layer_width(5);
        let t = random_template(&spec, 17);
        assert_eq!(t.num_qubits(), 3);
        assert_eq!(t.num_params(), 4);
        assert_eq!(t.observable().num_terms(), 2);
        assert_eq!(t.input_width(), 2);
        assert_eq!(t.layers().len(), 5);
        assert!(t.layers().iter().all(|l| l.gates.len() == 5));
        assert!(t.generators().iter().all(PauliElement::is_hermitian));
        assert_eq!(random_template(&spec, 17), t);
        assert_ne!(random_template(&spec, 18), t);
    }

    #[test]
    fn samplers_stay_in_range() {
        let mut rng = rng_from_seed(5);
        for _ in 0..200 {
            let p = random_hermitian_pauli(4, &mut rng);
            assert!(p.is_hermitian());
            assert!(random_tableau(3, 6, &mut rng).is_symplectic());
            let theta = random_continuous_theta(3, &mut rng);
            assert!(theta.iter().all(|t| (0.0..std::f64::consts::TAU).contains(t)));
            assert_eq!(random_input(3, &mut rng).len(), 3);
        }
    }
}

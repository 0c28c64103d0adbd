//! The parameterized circuit
//! `U_{x,θ} = U_x^{(L)} e^{-iθ_L/2 P_L} ⋯ U_x^{(1)} e^{-iθ_1/2 P_1} U_x^{(0)}`,
//! the observable `O = Σ_k c_k P_k`, and the model function
//! `f_θ(x) = ⟨0ⁿ| U†_{x,θ} O U_{x,θ} |0ⁿ⟩` evaluated in the Heisenberg picture.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use crate::clifford::{rotate_in_place, CliffordTableau, DiscreteAngle};
use crate::error::{check_dims, Error, Result};
use crate::pauli::{PauliElement, PauliLetter};

/// A classical input `x`, a fixed-length bit string.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InputPoint(Vec<bool>);

impl InputPoint {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// All `2^bits` inputs of the given width, in lexicographic order.
    pub fn all(bits: usize) -> Vec<Self> {
        (0..1usize << bits)
            .map(|v| Self((0..bits).map(|i| (v >> (bits - 1 - i)) & 1 == 1).collect()))
            .collect()
    }
}

impl fmt::Display for InputPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for InputPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "InputPoint({self})")
    }
}

impl FromStr for InputPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::InvalidArgument(format!(
                    "input bit strings may only contain 0 and 1, got {s:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

/// One parameter vector `θ ∈ {0, π/2, π, 3π/2}^L`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ParameterVector(Vec<DiscreteAngle>);

impl ParameterVector {
    pub fn new(angles: Vec<DiscreteAngle>) -> Self {
        Self(angles)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![DiscreteAngle::ZERO; len])
    }

    pub fn from_quarter_turns(turns: &[i64]) -> Self {
        Self(turns.iter().map(|&t| DiscreteAngle::from_quarter_turns(t)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn angles(&self) -> &[DiscreteAngle] {
        &self.0
    }

    /// `θ + k·π/2·e_i`.
    pub fn shifted(&self, i: usize, quarter_turns: i64) -> Self {
        let mut out = self.clone();
        out.0[i] = out.0[i].shifted(quarter_turns);
        out
    }

    pub fn radians(&self) -> Vec<f64> {
        self.0.iter().map(|a| a.radians()).collect()
    }
}

/// Clifford gates available inside a layer.
#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    S(usize),
    Cnot { control: usize, target: usize },
    Cz(usize, usize),
    Swap(usize, usize),
    X(usize),
    Y(usize),
    Z(usize),
    /// Conjugation by an arbitrary Pauli string.
    Pauli(PauliElement),
    /// An arbitrary Clifford given by its generator images.
    Tableau(CliffordTableau),
}

impl Gate {
    pub fn tableau(&self, n: usize) -> Result<CliffordTableau> {
        let single = |q: usize, l: PauliLetter| -> Result<CliffordTableau> {
            Ok(CliffordTableau::pauli_gate(&PauliElement::single(n, q, l)?))
        };
        match self {
            Gate::H(q) => CliffordTableau::hadamard(n, *q),
            Gate::S(q) => CliffordTableau::phase_s(n, *q),
            Gate::Cnot { control, target } => CliffordTableau::cnot(n, *control, *target),
            Gate::Cz(a, b) => CliffordTableau::cz(n, *a, *b),
            Gate::Swap(a, b) => CliffordTableau::swap(n, *a, *b),
            Gate::X(q) => single(*q, PauliLetter::X),
            Gate::Y(q) => single(*q, PauliLetter::Y),
            Gate::Z(q) => single(*q, PauliLetter::Z),
            Gate::Pauli(p) => {
                check_dims(n, p.num_qubits())?;
                Ok(CliffordTableau::pauli_gate(p))
            }
            Gate::Tableau(t) => {
                check_dims(n, t.num_qubits())?;
                Ok(t.clone())
            }
        }
    }
}

/// Input dependence of a gate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Condition {
    /// Applied iff input bit `b` is 1 (basis encoding).
    Bit(usize),
    /// Applied iff the input equals this exact bit string.
    Input(InputPoint),
}

impl Condition {
    fn holds(&self, x: &InputPoint) -> bool {
        match self {
            Condition::Bit(b) => x.bit(*b),
            Condition::Input(y) => x == y,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateApplication {
    pub gate: Gate,
    pub condition: Option<Condition>,
}

impl GateApplication {
    pub fn always(gate: Gate) -> Self {
        Self {
            gate,
            condition: None,
        }
    }

    pub fn if_bit(gate: Gate, bit: usize) -> Self {
        Self {
            gate,
            condition: Some(Condition::Bit(bit)),
        }
    }
}

/// An ordered gate list; the first gate acts first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CliffordLayerSpec {
    pub gates: Vec<GateApplication>,
}

impl CliffordLayerSpec {
    pub fn new(gates: Vec<GateApplication>) -> Self {
        Self { gates }
    }

    pub fn empty() -> Self {
        Self::default()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservableTerm {
    pub coeff: f64,
    pub pauli: PauliElement,
}

/// `O = Σ_k c_k P_k` with hermitian `P_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    terms: Vec<ObservableTerm>,
}

impl Observable {
    /// Requires at least one term, hermitian terms of equal width and `|c_k| <= 1`.
    pub fn new(terms: Vec<ObservableTerm>) -> Result<Self> {
        Self::build(terms, true)
    }

    /// As [`Observable::new`] but accepts coefficients outside `[-1, 1]`.
    /// The sample-size constants assume bounded coefficients.
    pub fn new_unbounded(terms: Vec<ObservableTerm>) -> Result<Self> {
        Self::build(terms, false)
    }

    fn build(terms: Vec<ObservableTerm>, strict: bool) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("observable needs at least one term".into()))?;
        let n = first.pauli.num_qubits();
        for t in &terms {
            check_dims(n, t.pauli.num_qubits())?;
            t.pauli.require_hermitian("observable term")?;
            if !t.coeff.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "observable coefficient {} is not finite",
                    t.coeff
                )));
            }
            if strict && t.coeff.abs() > 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "observable coefficient {} outside [-1, 1]",
                    t.coeff
                )));
            }
        }
        Ok(Self { terms })
    }

    /// Single-term observable `1 · P`.
    pub fn single(pauli: PauliElement) -> Result<Self> {
        Self::new(vec![ObservableTerm { coeff: 1.0, pauli }])
    }

    pub fn terms(&self) -> &[ObservableTerm] {
        &self.terms
    }

    /// `m`, the number of terms.
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.terms[0].pauli.num_qubits()
    }

    /// `Σ_k |c_k|`, the tight bound on `|f|`.
    pub fn coefficient_l1(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    pub fn is_bounded(&self) -> bool {
        self.terms.iter().all(|t| t.coeff.abs() <= 1.0)
    }
}

/// The ansatz: `L + 1` Clifford layers interleaved with `L` Pauli rotations.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitTemplate {
    n: usize,
    input_bits: Option<usize>,
    layers: Vec<CliffordLayerSpec>,
    generators: Vec<PauliElement>,
    observable: Observable,
    /// Tableau of every gate, same shape as `layers`.
    gate_tableaux: Vec<Vec<CliffordTableau>>,
}

impl CircuitTemplate {
    /// `input_bits` fixes the input width; when `None` it is inferred from the
    /// gate conditions.
    pub fn new(
        n: usize,
        input_bits: Option<usize>,
        layers: Vec<CliffordLayerSpec>,
        generators: Vec<PauliElement>,
        observable: Observable,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("circuit needs at least one qubit".into()));
        }
        if generators.is_empty() {
            return Err(Error::InvalidArgument(
                "circuit needs at least one rotation generator".into(),
            ));
        }
        if layers.len() != generators.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "{} generators need {} Clifford layers, got {}",
                generators.len(),
                generators.len() + 1,
                layers.len()
            )));
        }
        for g in &generators {
            check_dims(n, g.num_qubits())?;
            g.require_hermitian("rotation generator")?;
        }
        check_dims(n, observable.num_qubits())?;
        let gate_tableaux = layers
            .iter()
            .map(|layer| layer.gates.iter().map(|g| g.gate.tableau(n)).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        let template = Self {
            n,
            input_bits,
            layers,
            generators,
            observable,
            gate_tableaux,
        };
        template.check_conditions()?;
        Ok(template)
    }

    fn conditions(&self) -> impl Iterator<Item = &Condition> {
        self.layers
            .iter()
            .flat_map(|l| l.gates.iter())
            .filter_map(|g| g.condition.as_ref())
    }

    fn check_conditions(&self) -> Result<()> {
        let width = self.input_width();
        for c in self.conditions() {
            match c {
                Condition::Bit(b) if *b >= width => {
                    return Err(Error::InvalidArgument(format!(
                        "gate condition references input bit {b} but inputs have {width} bits"
                    )))
                }
                Condition::Input(x) if x.len() != width => {
                    return Err(Error::InputLength {
                        expected: width,
                        found: x.len(),
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// `L`, the number of rotation parameters.
    pub fn num_params(&self) -> usize {
        self.generators.len()
    }

    pub fn layers(&self) -> &[CliffordLayerSpec] {
        &self.layers
    }

    pub fn generators(&self) -> &[PauliElement] {
        &self.generators
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    pub fn declared_input_bits(&self) -> Option<usize> {
        self.input_bits
    }

    /// Bit length of every input accepted by this template.
    pub fn input_width(&self) -> usize {
        self.input_bits.unwrap_or_else(|| {
            self.conditions()
                .map(|c| match c {
                    Condition::Bit(b) => b + 1,
                    Condition::Input(x) => x.len(),
                })
                .max()
                .unwrap_or(0)
        })
    }

    pub fn check_input(&self, x: &InputPoint) -> Result<()> {
        let width = self.input_width();
        if x.len() != width {
            return Err(Error::InputLength {
                expected: width,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Resolves the input-conditioned gates into the concrete layers
    /// `U_x^{(0)}, …, U_x^{(L)}`.
    pub fn instantiate(&self, x: &InputPoint) -> Result<InstantiatedCircuit> {
        self.check_input(x)?;
        let layers: Vec<CliffordTableau> = self
            .layers
            .iter()
            .zip(&self.gate_tableaux)
            .map(|(spec, tabs)| {
                let mut acc = CliffordTableau::identity(self.n);
                for (g, t) in spec.gates.iter().zip(tabs) {
                    if g.condition.as_ref().is_none_or(|c| c.holds(x)) {
                        acc = CliffordTableau::compose(t, &acc)?;
                    }
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        let inverse_layers = layers.iter().map(CliffordTableau::inverse).collect();
        Ok(InstantiatedCircuit {
            layers,
            inverse_layers,
            generators: self.generators.clone(),
            observable: self.observable.clone(),
        })
    }
}

/// Layer tableaux `U_x^{(ℓ)}`, one per Clifford layer.
pub fn instantiate(template: &CircuitTemplate, x: &InputPoint) -> Result<Vec<CliffordTableau>> {
    Ok(template.instantiate(x)?.layers)
}

/// A template bound to one input: concrete layer tableaux plus their inverses.
#[derive(Clone, Debug)]
pub struct InstantiatedCircuit {
    layers: Vec<CliffordTableau>,
    inverse_layers: Vec<CliffordTableau>,
    generators: Vec<PauliElement>,
    observable: Observable,
}

impl InstantiatedCircuit {
    pub fn layers(&self) -> &[CliffordTableau] {
        &self.layers
    }

    pub fn num_params(&self) -> usize {
        self.generators.len()
    }

    /// Copy whose last inverse layer maps `Z_0` to minus its true image.
    pub(crate) fn with_phase_fault(&self) -> Self {
        let mut faulty = self.clone();
        let last = faulty.inverse_layers.len() - 1;
        faulty.inverse_layers[last] = faulty.inverse_layers[last].with_flipped_sign(0);
        faulty
    }

    /// `U†_{x,θ} P U_{x,θ}`, conjugating backward through the circuit.
    pub fn heisenberg(&self, p: &PauliElement, theta: &ParameterVector) -> Result<PauliElement> {
        check_dims(self.generators.len(), theta.len())?;
        check_dims(self.layers[0].num_qubits(), p.num_qubits())?;
        let mut q = p.clone();
        self.heisenberg_in_place(&mut q, theta);
        Ok(q)
    }

    fn heisenberg_in_place(&self, q: &mut PauliElement, theta: &ParameterVector) {
        let angles = theta.angles();
        for l in (0..self.layers.len()).rev() {
            self.inverse_layers[l].conjugate_in_place(q);
            if l > 0 {
                // e^{iθ/2 P} q e^{-iθ/2 P}
                rotate_in_place(&self.generators[l - 1], angles[l - 1], q);
            }
        }
    }

    /// `f_θ(x)`.
    pub fn evaluate(&self, theta: &ParameterVector) -> Result<f64> {
        check_dims(self.generators.len(), theta.len())?;
        let mut total = 0.0;
        for term in self.observable.terms() {
            let mut q = term.pauli.clone();
            self.heisenberg_in_place(&mut q, theta);
            let e = q.expectation_zero_state().map_err(|e| {
                Error::Internal(format!("phase tracking produced a non-hermitian image: {e}"))
            })?;
            total += term.coeff * f64::from(e);
        }
        Ok(total)
    }

    /// The parameter-shift difference `f_{θ+π/2·e_i} - f_{θ-π/2·e_i}`.
    pub fn shift_difference(&self, theta: &ParameterVector, i: usize) -> Result<f64> {
        Ok(self.evaluate(&theta.shifted(i, 1))? - self.evaluate(&theta.shifted(i, -1))?)
    }

    /// `∇_θ f_θ(x)` by the parameter-shift rule.
    pub fn gradient(&self, theta: &ParameterVector) -> Result<Vec<f64>> {
        (0..self.num_params())
            .map(|i| Ok(0.5 * self.shift_difference(theta, i)?))
            .collect()
    }
}

/// `f_θ(x) = ⟨0ⁿ| U†_{x,θ} O U_{x,θ} |0ⁿ⟩`.
pub fn evaluate_model(
    template: &CircuitTemplate,
    x: &InputPoint,
    theta: &ParameterVector,
) -> Result<f64> {
    template.instantiate(x)?.evaluate(theta)
}

/// Component `i` is `½ (f_{θ+π/2·e_i}(x) − f_{θ−π/2·e_i}(x))`.
pub fn gradient(
    template: &CircuitTemplate,
    x: &InputPoint,
    theta: &ParameterVector,
) -> Result<Vec<f64>> {
    template.instantiate(x)?.gradient(theta)
}

/// Per-input cache of instantiated circuits, safe for concurrent readers.
pub struct CircuitCache<'t> {
    template: &'t CircuitTemplate,
    entries: RwLock<HashMap<InputPoint, Arc<InstantiatedCircuit>>>,
}

impl<'t> CircuitCache<'t> {
    pub fn new(template: &'t CircuitTemplate) -> Self {
        Self {
            template,
            entries: RwLock::new(HashMap::new()),
        }
    }

    pub fn template(&self) -> &'t CircuitTemplate {
        self.template
    }

    pub fn get(&self, x: &InputPoint) -> Result<Arc<InstantiatedCircuit>> {
        if let Some(hit) = self.entries.read().expect("cache lock poisoned").get(x) {
            return Ok(Arc::clone(hit));
        }
        let built = Arc::new(self.template.instantiate(x)?);
        let mut entries = self.entries.write().expect("cache lock poisoned");
        Ok(Arc::clone(entries.entry(x.clone()).or_insert(built)))
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn invalidate(&self) {
        self.entries.write().expect("cache lock poisoned").clear();
    }
}

//! Brute-force ground truth: dense-statevector evaluation at arbitrary angles,
//! exact kernels by full enumeration of the discrete angle set, and
//! continuous-uniform expectations by equispaced quadrature.
//!
//! A `P`-point equispaced grid integrates trigonometric polynomials of degree
//! `< P` exactly. The model function has degree 1 per parameter and the kernel
//! integrands degree 2, so any `P >= 5` gives the continuous-uniform
//! expectation without relying on the 4-point discrete set.

pub mod dense;
pub mod random;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::circuit::{CircuitTemplate, Gate, InputPoint, InstantiatedCircuit, ParameterVector};
use crate::clifford::DiscreteAngle;
use crate::error::{check_dims, Error, Result};
use crate::summation::CompensatedSum;
use crate::trained_mean::TrainingSet;

use dense::DenseState;

/// Environment variable overriding [`OracleCaps::max_qubits`].
pub const CAP_ENV: &str = "QNTK_ORACLE_CAP_N";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleCaps {
    pub max_qubits: usize,
    /// Upper bound on `4^L` for enumeration.
    pub max_enumeration: usize,
    /// Upper bound on `P^L` for quadrature grids.
    pub max_grid: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        Self {
            max_qubits: 10,
            max_enumeration: 1 << 16,
            max_grid: 1 << 20,
        }
    }
}

impl OracleCaps {
    /// Defaults, with the qubit cap taken from `QNTK_ORACLE_CAP_N` when set.
    pub fn from_env() -> Self {
        let mut caps = Self::default();
        if let Some(n) = std::env::var(CAP_ENV).ok().and_then(|v| v.trim().parse().ok()) {
            caps.max_qubits = n;
        }
        caps
    }
}

enum DenseOp {
    Gate(Gate),
    Matrix(Vec<Complex64>),
}

/// A template bound to one input, evaluated on dense statevectors.
pub struct DenseCircuit {
    n: usize,
    layers: Vec<Vec<DenseOp>>,
    template: CircuitTemplate,
}

impl DenseCircuit {
    pub fn new(template: &CircuitTemplate, x: &InputPoint, caps: &OracleCaps) -> Result<Self> {
        let n = template.num_qubits();
        if n > caps.max_qubits {
            return Err(Error::CapExceeded(format!(
                "dense oracle limited to {} qubits, circuit has {n} (override with {CAP_ENV})",
                caps.max_qubits
            )));
        }
        template.check_input(x)?;
        let layers = template
            .layers()
            .iter()
            .map(|layer| {
                layer
                    .gates
                    .iter()
                    .filter(|g| match &g.condition {
                        None => true,
                        Some(crate::circuit::Condition::Bit(b)) => x.bit(*b),
                        Some(crate::circuit::Condition::Input(y)) => x == y,
                    })
                    .map(|g| match &g.gate {
                        Gate::Tableau(t) => dense::clifford_matrix(t).map(DenseOp::Matrix),
                        other => Ok(DenseOp::Gate(other.clone())),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            layers,
            template: template.clone(),
        })
    }

    fn apply_layer(&self, state: &mut DenseState, l: usize) -> Result<()> {
        for op in &self.layers[l] {
            match op {
                DenseOp::Gate(g) => state.apply_gate(g)?,
                DenseOp::Matrix(m) => state.apply_matrix(m),
            }
        }
        Ok(())
    }

    /// `U_{x,θ}|0ⁿ⟩`.
    pub fn state(&self, theta: &[f64]) -> Result<DenseState> {
        check_dims(self.template.num_params(), theta.len())?;
        let mut psi = DenseState::zero(self.n);
        self.apply_layer(&mut psi, 0)?;
        for (l, (p, &angle)) in self.template.generators().iter().zip(theta).enumerate() {
            psi.apply_rotation(p, angle);
            self.apply_layer(&mut psi, l + 1)?;
        }
        Ok(psi)
    }

    /// `⟨ψ|O|ψ⟩`, asserting the imaginary part is negligible.
    pub fn evaluate(&self, theta: &[f64]) -> Result<f64> {
        let psi = self.state(theta)?;
        let mut total = Complex64::new(0.0, 0.0);
        for term in self.template.observable().terms() {
            total += psi.expectation(&term.pauli) * term.coeff;
        }
        if total.im.abs() >= 1e-10 {
            return Err(Error::Internal(format!(
                "expectation of a hermitian observable has imaginary part {}",
                total.im
            )));
        }
        Ok(total.re)
    }

    /// Parameter-shift gradient at arbitrary angles.
    pub fn shift_rule_gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let shift = std::f64::consts::FRAC_PI_2;
        (0..theta.len())
            .map(|i| {
                let mut plus = theta.to_vec();
                let mut minus = theta.to_vec();
                plus[i] += shift;
                minus[i] -= shift;
                Ok(0.5 * (self.evaluate(&plus)? - self.evaluate(&minus)?))
            })
            .collect()
    }

    /// Central differences with step `h`.
    pub fn finite_difference_gradient(&self, theta: &[f64], h: f64) -> Result<Vec<f64>> {
        (0..theta.len())
            .map(|i| {
                let mut plus = theta.to_vec();
                let mut minus = theta.to_vec();
                plus[i] += h;
                minus[i] -= h;
                Ok((self.evaluate(&plus)? - self.evaluate(&minus)?) / (2.0 * h))
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Base-`radix` digits of `index`, least significant first.
fn digits(mut index: usize, radix: usize, len: usize) -> impl Iterator<Item = usize> {
    (0..len).map(move |_| {
        let d = index % radix;
        index /= radix;
        d
    })
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Oracle {
    caps: OracleCaps,
}

impl Oracle {
    pub fn new(caps: OracleCaps) -> Self {
        Self { caps }
    }

    pub fn from_env() -> Self {
        Self::new(OracleCaps::from_env())
    }

    pub fn caps(&self) -> &OracleCaps {
        &self.caps
    }

    pub fn dense_circuit(&self, template: &CircuitTemplate, x: &InputPoint) -> Result<DenseCircuit> {
        DenseCircuit::new(template, x, &self.caps)
    }

    pub fn statevector_model(
        &self,
        template: &CircuitTemplate,
        x: &InputPoint,
        theta: &[f64],
    ) -> Result<f64> {
        self.dense_circuit(template, x)?.evaluate(theta)
    }

    fn enumeration_size(&self, l: usize) -> Result<usize> {
        let size = 4usize
            .checked_pow(l as u32)
            .filter(|&s| s <= self.caps.max_enumeration)
            .ok_or_else(|| {
                Error::CapExceeded(format!(
                    "4^{l} exceeds the enumeration cap {}",
                    self.caps.max_enumeration
                ))
            })?;
        Ok(size)
    }

    fn grid_size(&self, l: usize, points: usize) -> Result<usize> {
        if points < 5 {
            return Err(Error::InvalidArgument(format!(
                "quadrature needs at least 5 points per dimension, got {points}"
            )));
        }
        points
            .checked_pow(l as u32)
            .filter(|&s| s <= self.caps.max_grid)
            .ok_or_else(|| {
                Error::CapExceeded(format!(
                    "{points}^{l} exceeds the quadrature cap {}",
                    self.caps.max_grid
                ))
            })
    }

    /// Mean of `g(θ)` over all of `{0, π/2, π, 3π/2}^L`.
    fn enumerate(
        &self,
        l: usize,
        mut g: impl FnMut(&ParameterVector) -> Result<f64>,
    ) -> Result<f64> {
        let size = self.enumeration_size(l)?;
        let mut acc = CompensatedSum::new();
        for j in 0..size {
            let theta = ParameterVector::new(
                digits(j, 4, l)
                    .map(|d| DiscreteAngle::from_quarter_turns(d as i64))
                    .collect(),
            );
            acc.add(g(&theta)?);
        }
        Ok(acc.value() / size as f64)
    }

    /// Mean of `g(θ)` over the grid `{2πk/P}^L`.
    fn quadrature(
        &self,
        l: usize,
        points: usize,
        mut g: impl FnMut(&[f64]) -> Result<f64>,
    ) -> Result<f64> {
        let size = self.grid_size(l, points)?;
        let step = std::f64::consts::TAU / points as f64;
        let mut acc = CompensatedSum::new();
        let mut theta = vec![0.0; l];
        for j in 0..size {
            for (t, d) in theta.iter_mut().zip(digits(j, points, l)) {
                *t = step * d as f64;
            }
            acc.add(g(&theta)?);
        }
        Ok(acc.value() / size as f64)
    }

    fn stabilizer_pair(
        template: &CircuitTemplate,
        x: &InputPoint,
        x2: &InputPoint,
    ) -> Result<(InstantiatedCircuit, InstantiatedCircuit)> {
        Ok((template.instantiate(x)?, template.instantiate(x2)?))
    }

    /// Analytic NTK as the exact mean of the empirical NTK over all discrete angles.
    pub fn exact_ntk_enumeration(
        &self,
        template: &CircuitTemplate,
        x: &InputPoint,
        x2: &InputPoint,
    ) -> Result<f64> {
        let (a, b) = Self::stabilizer_pair(template, x, x2)?;
        self.enumerate(template.num_params(), |theta| {
            Ok(dot(&a.gradient(theta)?, &b.gradient(theta)?))
        })
    }

    /// `E_θ[f_θ(x) f_θ(x')]` by enumeration.
    pub fn exact_k0_enumeration(
        &self,
        template: &CircuitTemplate,
        x: &InputPoint,
        x2: &InputPoint,
    ) -> Result<f64> {
        let (a, b) = Self::stabilizer_pair(template, x, x2)?;
        self.enumerate(template.num_params(), |theta| {
            Ok(a.evaluate(theta)? * b.evaluate(theta)?)
        })
    }

    /// `E_θ f_θ(x)` by enumeration.
    pub fn exact_mean_enumeration(&self, template: &CircuitTemplate, x: &InputPoint) -> Result<f64> {
        let a = template.instantiate(x)?;
        self.enumerate(template.num_params(), |theta| a.evaluate(theta))
    }

    /// Continuous-uniform NTK by `P`-point quadrature on the dense path.
    pub fn exact_ntk_quadrature(
        &self,
        template: &CircuitTemplate,
        x: &InputPoint,
        x2: &InputPoint,
        points: usize,
    ) -> Result<f64> {
        let a = self.dense_circuit(template, x)?;
        let b = self.dense_circuit(template, x2)?;
        let same = x == x2;
        self.quadrature(template.num_params(), points, |theta| {
            let ga = a.shift_rule_gradient(theta)?;
            if same {
                Ok(dot(&ga, &ga))
            } else {
                Ok(dot(&ga, &b.shift_rule_gradient(theta)?))
            }
        })
    }

    pub fn exact_mean_quadrature(
        &self,
        template: &CircuitTemplate,
        x: &InputPoint,
        points: usize,
    ) -> Result<f64> {
        let a = self.dense_circuit(template, x)?;
        self.quadrature(template.num_params(), points, |theta| a.evaluate(theta))
    }

    pub fn exact_k0_quadrature(
        &self,
        template: &CircuitTemplate,
        x: &InputPoint,
        x2: &InputPoint,
        points: usize,
    ) -> Result<f64> {
        let a = self.dense_circuit(template, x)?;
        let b = self.dense_circuit(template, x2)?;
        self.quadrature(template.num_params(), points, |theta| {
            Ok(a.evaluate(theta)? * b.evaluate(theta)?)
        })
    }

    /// Exact analytic NTK on every pair of `inputs`.
    pub fn exact_gram_enumeration(
        &self,
        template: &CircuitTemplate,
        inputs: &[InputPoint],
    ) -> Result<DMatrix<f64>> {
        let circuits = inputs
            .iter()
            .map(|x| template.instantiate(x))
            .collect::<Result<Vec<_>>>()?;
        let d = inputs.len();
        let size = self.enumeration_size(template.num_params())?;
        let mut sums = vec![CompensatedSum::new(); d * d];
        for j in 0..size {
            let theta = ParameterVector::new(
                digits(j, 4, template.num_params())
                    .map(|k| DiscreteAngle::from_quarter_turns(k as i64))
                    .collect(),
            );
            let grads = circuits
                .iter()
                .map(|c| c.gradient(&theta))
                .collect::<Result<Vec<_>>>()?;
            for r in 0..d {
                for c in r..d {
                    sums[r * d + c].add(dot(&grads[r], &grads[c]));
                }
            }
        }
        Ok(DMatrix::from_fn(d, d, |r, c| {
            let (r, c) = if r <= c { (r, c) } else { (c, r) };
            sums[r * d + c].value() / size as f64
        }))
    }

    /// `μ∞(x) = K(x, X_train) K_train⁻¹ Y` with enumerated kernels, solved by LU.
    pub fn exact_mu_infinity(
        &self,
        template: &CircuitTemplate,
        x: &InputPoint,
        training: &TrainingSet,
    ) -> Result<f64> {
        let mut inputs = training.inputs().to_vec();
        inputs.push(x.clone());
        let full = self.exact_gram_enumeration(template, &inputs)?;
        let d = training.len();
        let k_train = full.view((0, 0), (d, d)).into_owned();
        let k_query = full.view((d, 0), (1, d)).into_owned();
        let svd = k_train.clone().svd(false, false);
        let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
        if smax == 0.0 || smin <= smax * 1e-12 {
            return Err(Error::NotInvertible(format!(
                "exact training kernel has singular values in [{smin:e}, {smax:e}]"
            )));
        }
        let y = DVector::from_column_slice(training.labels());
        let alpha = k_train
            .lu()
            .solve(&y)
            .ok_or_else(|| Error::NotInvertible("LU solve failed".into()))?;
        Ok((k_query * alpha)[(0, 0)])
    }
}

pub fn statevector_model(template: &CircuitTemplate, x: &InputPoint, theta: &[f64]) -> Result<f64> {
    Oracle::from_env().statevector_model(template, x, theta)
}

pub fn exact_ntk_enumeration(
    template: &CircuitTemplate,
    x: &InputPoint,
    x2: &InputPoint,
) -> Result<f64> {
    Oracle::from_env().exact_ntk_enumeration(template, x, x2)
}

pub fn exact_ntk_quadrature(
    template: &CircuitTemplate,
    x: &InputPoint,
    x2: &InputPoint,
    points: usize,
) -> Result<f64> {
    Oracle::from_env().exact_ntk_quadrature(template, x, x2, points)
}

pub fn exact_mu_infinity(
    template: &CircuitTemplate,
    x: &InputPoint,
    training: &TrainingSet,
) -> Result<f64> {
    Oracle::from_env().exact_mu_infinity(template, x, training)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CliffordLayerSpec, GateApplication, Observable};
    use crate::pauli::PauliElement;

    fn cos_circuit() -> CircuitTemplate {
        let z: PauliElement = "Z".parse().unwrap();
        CircuitTemplate::new(
            1,
            None,
            vec![
                CliffordLayerSpec::new(vec![GateApplication::always(Gate::H(0))]),
                CliffordLayerSpec::new(vec![GateApplication::always(Gate::H(0))]),
            ],
            vec![z.clone()],
            Observable::single(z).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn cos_circuit_closed_forms() {
        let t = cos_circuit();
        let x = InputPoint::empty();
        let o = Oracle::default();
        for theta in [0.0, 0.3, 1.0, 2.5, -4.0] {
            let f = o.statevector_model(&t, &x, &[theta]).unwrap();
            assert!((f - f64::cos(theta)).abs() < 1e-12);
            let g = o.dense_circuit(&t, &x).unwrap().shift_rule_gradient(&[theta]).unwrap();
            assert!((g[0] + f64::sin(theta)).abs() < 1e-12);
        }
        assert!((o.exact_ntk_enumeration(&t, &x, &x).unwrap() - 0.5).abs() < 1e-15);
        assert!((o.exact_ntk_quadrature(&t, &x, &x, 8).unwrap() - 0.5).abs() < 1e-14);
        assert!((o.exact_k0_enumeration(&t, &x, &x).unwrap() - 0.5).abs() < 1e-15);
        assert!(o.exact_mean_enumeration(&t, &x).unwrap().abs() < 1e-15);
    }

    #[test]
    fn caps_are_enforced() {
        let t = cos_circuit();
        let x = InputPoint::empty();
        let tight = Oracle::new(OracleCaps {
            max_qubits: 0,
            ..OracleCaps::default()
        });
        assert!(matches!(tight.statevector_model(&t, &x, &[0.0]), Err(Error::CapExceeded(_))));
        let small_grid = Oracle::new(OracleCaps {
            max_grid: 4,
            ..OracleCaps::default()
        });
        assert!(matches!(
            small_grid.exact_ntk_quadrature(&t, &x, &x, 8),
            Err(Error::CapExceeded(_))
        ));
    }

    #[test]
    fn mu_infinity_reproduces_training_labels() {
        let t = random::random_template(&random::RandomTemplateSpec::new(2, 3, 2).with_inputs(2), 3);
        let o = Oracle::default();
        let inputs = InputPoint::all(2);
        let gram = o.exact_gram_enumeration(&t, &inputs).unwrap();
        assert_eq!(gram, gram.transpose());
        let training = TrainingSet::new(vec![inputs[0].clone()], vec![0.7]).unwrap();
        if gram[(0, 0)] > 1e-9 {
            assert!((o.exact_mu_infinity(&t, &inputs[0], &training).unwrap() - 0.7).abs() < 1e-12);
        } else {
            assert!(matches!(o.exact_mu_infinity(&t, &inputs[0], &training), Err(Error::NotInvertible(_))));
        }
    }
}

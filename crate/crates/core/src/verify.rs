//! Cross-checks of the stabilizer engine against the dense oracle.
//!
//! Each check draws seed-pinned random cases, compares the fast path with an
//! independent computation and records failures and the worst discrepancy.

use std::fmt::{self, Write as _};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::circuit::{CircuitTemplate, InputPoint};
use crate::clifford::{rotation_conjugate, CliffordTableau, DiscreteAngle};
use crate::error::Result;
use crate::estimator::{Estimator, SampleSet};
use crate::oracle::dense::{self, DenseState};
use crate::oracle::random::{
    random_continuous_theta, random_gate, random_hermitian_pauli, random_input, random_pauli, random_tableau,
    random_template_with, random_theta, rng_from_seed, RandomTemplateSpec,
};
use crate::oracle::{Oracle, OracleCaps};
use crate::pauli::PauliElement;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Cases per algebraic check.
    pub cases: usize,
    /// Random templates per circuit-level check.
    pub templates: usize,
    pub caps: OracleCaps,
    #[doc(hidden)]
    pub inject_phase_fault: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            cases: 2000,
            templates: 200,
            caps: OracleCaps::from_env(),
            inject_phase_fault: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub first_failure: Option<String>,
    pub elapsed: Duration,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} {:<40} {:>7} cases {:>5} failures  max err {:.2e} (tol {:.0e})  {:>8.2?}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.failures,
            self.max_error,
            self.tolerance,
            self.elapsed
        )?;
        if let Some(msg) = &self.first_failure {
            write!(f, "\n     first failure: {msg}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed)
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            writeln!(out, "{c}").expect("writing to a string");
        }
        out
    }
}

struct Recorder {
    outcome: CheckOutcome,
    start: Instant,
}

impl Recorder {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            outcome: CheckOutcome {
                name,
                cases: 0,
                failures: 0,
                max_error: 0.0,
                tolerance,
                first_failure: None,
                elapsed: Duration::ZERO,
            },
            start: Instant::now(),
        }
    }

    fn fail(&mut self, detail: impl FnOnce() -> String) {
        self.outcome.failures += 1;
        if self.outcome.first_failure.is_none() {
            self.outcome.first_failure = Some(detail());
        }
    }

    /// Records a numeric comparison against the tolerance.
    fn compare(&mut self, error: f64, detail: impl FnOnce() -> String) {
        self.outcome.cases += 1;
        if error.is_nan() || error > self.outcome.tolerance {
            self.fail(|| format!("{} (error {error:e})", detail()));
        }
        if !error.is_nan() {
            self.outcome.max_error = self.outcome.max_error.max(error);
        }
    }

    /// Records a boolean property.
    fn holds(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.outcome.cases += 1;
        if !ok {
            self.fail(detail);
        }
    }

    fn result<T>(&mut self, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.outcome.cases += 1;
                self.fail(|| format!("error: {e}"));
                None
            }
        }
    }

    fn finish(mut self) -> CheckOutcome {
        self.outcome.elapsed = self.start.elapsed();
        self.outcome
    }
}

fn check_rng(config: &VerifyConfig, stream: u64) -> ChaCha8Rng {
    let mut rng = rng_from_seed(config.seed);
    rng.set_stream(stream);
    rng
}

fn identity_matrix(dim: usize) -> Vec<Complex64> {
    let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        m[i * dim + i] = Complex64::new(1.0, 0.0);
    }
    m
}

fn maybe_fault(t: &CliffordTableau, config: &VerifyConfig) -> CliffordTableau {
    if config.inject_phase_fault {
        t.with_flipped_sign(0)
    } else {
        t.clone()
    }
}

/// A random Clifford and its dense unitary, both built from the same gate list.
fn random_clifford_pair(n: usize, gates: usize, rng: &mut ChaCha8Rng) -> (CliffordTableau, Vec<Complex64>) {
    let dim = 1 << n;
    let mut t = CliffordTableau::identity(n);
    let mut q = identity_matrix(dim);
    for _ in 0..gates {
        let g = random_gate(n, rng);
        let gt = g.tableau(n).expect("gate indices in range");
        t = CliffordTableau::compose(&gt, &t).expect("equal dimensions");
        q = dense::matmul(&dense::gate_matrix(&g, n).expect("gate indices in range"), &q, dim);
    }
    (t, q)
}

pub fn check_pauli_associativity(config: &VerifyConfig) -> CheckOutcome {
    let mut rec = Recorder::new("pauli product associativity", 0.0);
    let mut rng = check_rng(config, 1);
    for _ in 0..config.cases {
        let n = rng.random_range(1..=80);
        let (a, b, c) = (random_pauli(n, &mut rng), random_pauli(n, &mut rng), random_pauli(n, &mut rng));
        let left = a.mul(&b).and_then(|ab| ab.mul(&c));
        let right = b.mul(&c).and_then(|bc| a.mul(&bc));
        rec.holds(left.is_ok() && left == right, || format!("({a}·{b})·{c} != {a}·({b}·{c})"));
    }
    rec.finish()
}

pub fn check_pauli_product_dense(config: &VerifyConfig) -> CheckOutcome {
    let mut rec = Recorder::new("pauli product vs dense", 1e-12);
    let mut rng = check_rng(config, 2);
    for _ in 0..config.cases {
        let n = rng.random_range(1..=4);
        let (a, b) = (random_pauli(n, &mut rng), random_pauli(n, &mut rng));
        let Some(ab) = rec.result(a.mul(&b)) else { continue };
        let dim = 1 << n;
        let expected = dense::matmul(&dense::pauli_matrix(&a), &dense::pauli_matrix(&b), dim);
        rec.compare(dense::max_abs_diff(&dense::pauli_matrix(&ab), &expected), || {
            format!("{a} · {b} gave {ab}")
        });
    }
    rec.finish()
}

pub fn check_commutation_dense(config: &VerifyConfig) -> CheckOutcome {
    let mut rec = Recorder::new("commutation vs dense", 0.0);
    let mut rng = check_rng(config, 3);
    for _ in 0..config.cases {
        let n = rng.random_range(1..=4);
        let (a, b) = (random_pauli(n, &mut rng), random_pauli(n, &mut rng));
        let Some(c) = rec.result(a.commutes(&b)) else { continue };
        let dim = 1 << n;
        let (ma, mb) = (dense::pauli_matrix(&a), dense::pauli_matrix(&b));
        let dense_commutes = dense::max_abs_diff(&dense::matmul(&ma, &mb, dim), &dense::matmul(&mb, &ma, dim)) < 1e-12;
        rec.holds(c == dense_commutes, || format!("commutes({a}, {b}) = {c}"));
    }
    rec.finish()
}

pub fn check_expectation_zero_state(config: &VerifyConfig) -> CheckOutcome {
    let mut rec = Recorder::new("zero-state expectation vs dense", 1e-12);
    let mut rng = check_rng(config, 4);
    for _ in 0..config.cases {
        let n = rng.random_range(1..=6);
        let mut p = random_hermitian_pauli(n, &mut rng);
        if rng.random_bool(0.5) {
            // bias towards diagonal strings so nonzero expectations are common
            let letters: String = (0..n).map(|_| if rng.random() { 'Z' } else { 'I' }).collect();
            let sign = if rng.random() { 1 } else { -1 };
            p = PauliElement::from_pauli_string(&letters, sign, false).expect("valid letters");
        }
        let Some(e) = rec.result(p.expectation_zero_state()) else { continue };
        let dense = DenseState::zero(n).expectation(&p);
        rec.compare((Complex64::new(f64::from(e), 0.0) - dense).norm(), || {
            format!("<0|{p}|0> = {e}, dense {dense}")
        });
    }
    rec.finish()
}

pub fn check_tableau_structure(config: &VerifyConfig) -> CheckOutcome {
    let mut rec = Recorder::new("symplectic and hermiticity-preserving", 0.0);
    let mut rng = check_rng(config, 5);
    for _ in 0..config.cases {
        let n = rng.random_range(1..=12);
        let gates = rng.random_range(0..=3 * n);
        let t = random_tableau(n, gates, &mut rng);
        let p = random_hermitian_pauli(n, &mut rng);
        let image = t.conjugate(&p).expect("matching dimensions");
        rec.holds(
            t.is_symplectic() && t.preserves_hermiticity() && image.is_hermitian(),
            || format!("tableau {t:?} broke the symplectic or hermiticity invariant"),
        );
        let inv = t.inverse();
        let round = CliffordTableau::compose(&inv, &t).expect("matching dimensions");
        rec.holds(round == CliffordTableau::identity(n), || format!("Q†Q != I for {t:?}"));
    }
    rec.finish()
}

pub fn check_commutation_preservation(config: &VerifyConfig) -> CheckOutcome {
    let mut rec = Recorder::new("commutation preserved by Cliffords", 0.0);
    let mut rng = check_rng(config, 6);
    for _ in 0..config.cases {
        let n = rng.random_range(1..=12);
        let gates = rng.random_range(0..=3 * n);
        let t = random_tableau(n, gates, &mut rng);
        let (a, b) = (random_hermitian_pauli(n, &mut rng), random_hermitian_pauli(n, &mut rng));
        let before = a.commutes(&b).expect("matching dimensions");
        let after = t
            .conjugate(&a)
            .and_then(|ca| ca.commutes(&t.conjugate(&b)?))
            .expect("matching dimensions");
        rec.holds(before == after, || format!("commutation of {a}, {b} changed under {t:?}"));
    }
    rec.finish()
}

pub fn check_tableau_conjugation_dense(config: &VerifyConfig) -> CheckOutcome {
    let mut rec = Recorder::new("tableau conjugation vs dense", 1e-12);
    let mut rng = check_rng(config, 7);
    for _ in 0..config.cases {
        let n = rng.random_range(1..=4);
        let gates = rng.random_range(1..=4 * n);
        let (t, q) = random_clifford_pair(n, gates, &mut rng);
        let t = maybe_fault(&t, config);
        let p = random_pauli(n, &mut rng);
        let Some(image) = rec.result(t.conjugate(&p)) else { continue };
        let expected = dense::conjugate_dense(&q, &dense::pauli_matrix(&p), 1 << n);
        rec.compare(dense::max_abs_diff(&dense::pauli_matrix(&image), &expected), || {
            format!("Q {p} Q† gave {image}")
        });
    }
    rec.finish()
}

pub fn check_rotation_dense(config: &VerifyConfig) -> CheckOutcome {
    let mut rec = Recorder::new("rotation conjugation vs dense", 1e-12);
    let mut rng = check_rng(config, 8);
    for _ in 0..config.cases {
        let n = rng.random_range(1..=4);
        let g = random_hermitian_pauli(n, &mut rng);
        let q = random_hermitian_pauli(n, &mut rng);
        let theta = DiscreteAngle::from_quarter_turns(rng.random_range(0..4));
        let Some(image) = rec.result(rotation_conjugate(&g, theta, &q)) else { continue };
        let dim = 1 << n;
        let (c, s) = ((theta.radians() / 2.0).cos(), (theta.radians() / 2.0).sin());
        let gm = dense::pauli_matrix(&g);
        // R = e^{-iθ/2 G}, expected R† Q R
        let r: Vec<Complex64> = identity_matrix(dim)
            .iter()
            .zip(&gm)
            .map(|(i, gv)| i * c - Complex64::new(0.0, s) * gv)
            .collect();
        let expected = dense::matmul(
            &dense::matmul(&dense::adjoint(&r, dim), &dense::pauli_matrix(&q), dim),
            &r,
            dim,
        );
        rec.compare(dense::max_abs_diff(&dense::pauli_matrix(&image), &expected), || {
            format!("rotation by {g} at {theta:?} of {q} gave {image}")
        });
    }
    rec.finish()
}

pub fn check_state_norm(config: &VerifyConfig) -> CheckOutcome {
    let mut rec = Recorder::new("dense state norm preserved", 1e-12);
    let mut rng = check_rng(config, 9);
    for _ in 0..config.cases / 10 {
        let n = rng.random_range(1..=6);
        let mut psi = DenseState::zero(n);
        for _ in 0..10 {
            if rng.random_bool(0.3) {
                let p = random_hermitian_pauli(n, &mut rng);
                psi.apply_rotation(&p, rng.random_range(0.0..std::f64::consts::TAU));
            } else if rec.result(psi.apply_gate(&random_gate(n, &mut rng))).is_none() {
                continue;
            }
            rec.compare((psi.norm() - 1.0).abs(), || format!("norm drifted to {}", psi.norm()));
        }
    }
    rec.finish()
}

/// A random template with `n <= max_n`, `L <= max_l`, `m <= max_m`, up to 3 input bits.
pub fn random_small_template(
    rng: &mut ChaCha8Rng,
    max_n: usize,
    max_l: usize,
    max_m: usize,
) -> (CircuitTemplate, usize) {
    let n = rng.random_range(1..=max_n);
    let l = rng.random_range(1..=max_l);
    let m = rng.random_range(1..=max_m);
    let bits = rng.random_range(0..=3);
    let spec = RandomTemplateSpec::new(n, l, m)
        .with_inputs(bits)
        .with_layer_width(rng.random_range(1..=4));
    (random_template_with(&spec, rng), bits)
}

pub fn check_model_vs_statevector(config: &VerifyConfig) -> CheckOutcome {
    let mut rec = Recorder::new("stabilizer model vs statevector", 1e-12);
    let mut rng = check_rng(config, 10);
    let oracle = Oracle::new(config.caps);
    for _ in 0..config.templates {
        let (t, bits) = random_small_template(&mut rng, 5, 6, 4);
        let x = random_input(bits, &mut rng);
        let Some(mut circuit) = rec.result(t.instantiate(&x)) else { continue };
        if config.inject_phase_fault {
            circuit = circuit.with_phase_fault();
        }
        let Some(dense) = rec.result(oracle.dense_circuit(&t, &x)) else { continue };
        for _ in 0..2 {
            let theta = random_theta(t.num_params(), &mut rng);
            let (Some(fast), Some(slow)) = (rec.result(circuit.evaluate(&theta)), rec.result(dense.evaluate(&theta.radians())))
            else {
                continue;
            };
            rec.compare((fast - slow).abs(), || format!("f = {fast} but dense gives {slow}"));
        }
    }
    rec.finish()
}

pub fn check_enumeration_vs_quadrature(config: &VerifyConfig) -> CheckOutcome {
    let mut rec = Recorder::new("enumeration vs quadrature (P=8)", 1e-9);
    let mut rng = check_rng(config, 11);
    let oracle = Oracle::new(config.caps);
    for _ in 0..config.templates.div_ceil(4) {
        let (t, bits) = random_small_template(&mut rng, 3, 4, 3);
        let (x, x2) = (random_input(bits, &mut rng), random_input(bits, &mut rng));
        let (Some(e), Some(q)) = (
            rec.result(oracle.exact_ntk_enumeration(&t, &x, &x2)),
            rec.result(oracle.exact_ntk_quadrature(&t, &x, &x2, 8)),
        ) else {
            continue;
        };
        rec.compare((e - q).abs(), || format!("enumeration {e} vs quadrature {q}"));
    }
    rec.finish()
}

pub fn check_quadrature_bandlimit(config: &VerifyConfig) -> CheckOutcome {
    let mut rec = Recorder::new("quadrature bandlimit (P=5,8,16)", 1e-10);
    let mut rng = check_rng(config, 12);
    let oracle = Oracle::new(config.caps);
    for _ in 0..config.templates.div_ceil(10) {
        let (t, bits) = random_small_template(&mut rng, 3, 3, 2);
        let (x, x2) = (random_input(bits, &mut rng), random_input(bits, &mut rng));
        let values: Vec<_> = [5, 8, 16]
            .iter()
            .filter_map(|&p| rec.result(oracle.exact_ntk_quadrature(&t, &x, &x2, p)))
            .collect();
        if values.len() == 3 {
            let spread = values.iter().copied().fold(f64::MIN, f64::max) - values.iter().copied().fold(f64::MAX, f64::min);
            rec.compare(spread, || format!("quadrature values {values:?}"));
        }
    }
    rec.finish()
}

pub fn check_parameter_shift(config: &VerifyConfig) -> CheckOutcome {
    let mut rec = Recorder::new("parameter shift vs central difference", 1e-6);
    let mut rng = check_rng(config, 13);
    let oracle = Oracle::new(config.caps);
    for _ in 0..config.templates {
        let (t, bits) = random_small_template(&mut rng, 4, 4, 3);
        let x = random_input(bits, &mut rng);
        let Some(dense) = rec.result(oracle.dense_circuit(&t, &x)) else { continue };
        let theta = random_continuous_theta(t.num_params(), &mut rng);
        let (Some(shift), Some(fd)) = (
            rec.result(dense.shift_rule_gradient(&theta)),
            rec.result(dense.finite_difference_gradient(&theta, 1e-5)),
        ) else {
            continue;
        };
        for (i, (a, b)) in shift.iter().zip(&fd).enumerate() {
            rec.compare((a - b).abs(), || format!("component {i}: shift {a}, difference {b}"));
        }
    }
    rec.finish()
}

pub fn check_estimator_unbiased(config: &VerifyConfig) -> CheckOutcome {
    let mut rec = Recorder::new("full-enumeration estimator vs exact", 1e-12);
    let mut rng = check_rng(config, 14);
    let oracle = Oracle::new(config.caps);
    for _ in 0..config.templates.div_ceil(4) {
        let (t, bits) = random_small_template(&mut rng, 4, 4, 3);
        let (x, x2) = (random_input(bits, &mut rng), random_input(bits, &mut rng));
        let Some(samples) = rec.result(SampleSet::full_enumeration(t.num_params())) else { continue };
        let est = Estimator::with_workers(&t, 1);
        let (Some(a), Some(b)) = (
            rec.result(est.estimate_ntk(&x, &x2, &samples)),
            rec.result(oracle.exact_ntk_enumeration(&t, &x, &x2)),
        ) else {
            continue;
        };
        rec.compare((a.value - b).abs(), || format!("estimator {} vs exact {b}", a.value));
    }
    rec.finish()
}

/// Known closed forms on the single-qubit `cos θ` circuit.
pub fn check_reference_circuit(config: &VerifyConfig) -> CheckOutcome {
    use crate::circuit::{CliffordLayerSpec, Gate, GateApplication, Observable};
    let mut rec = Recorder::new("cos(theta) reference circuit", 1e-12);
    let p = |s: &str| s.parse::<PauliElement>().expect("valid literal");
    let t = CircuitTemplate::new(
        1,
        None,
        vec![
            CliffordLayerSpec::new(vec![GateApplication::always(Gate::H(0))]),
            CliffordLayerSpec::new(vec![GateApplication::always(Gate::H(0))]),
        ],
        vec![p("Z")],
        Observable::single(p("Z")).expect("hermitian"),
    )
    .expect("valid template");
    let x = InputPoint::empty();
    let oracle = Oracle::new(config.caps);
    let Some(mut c) = rec.result(t.instantiate(&x)) else { return rec.finish() };
    if config.inject_phase_fault {
        c = c.with_phase_fault();
    }
    for k in 0..4 {
        let theta = crate::circuit::ParameterVector::from_quarter_turns(&[k]);
        if let Some(f) = rec.result(c.evaluate(&theta)) {
            let expected = theta.radians()[0].cos();
            rec.compare((f - expected).abs(), || format!("f({k}·π/2) = {f}, expected {expected}"));
        }
    }
    if let Some(k) = rec.result(oracle.exact_ntk_enumeration(&t, &x, &x)) {
        rec.compare((k - 0.5).abs(), || format!("K = {k}, expected 0.5"));
    }
    if let Some(f) = rec.result(oracle.statevector_model(&t, &x, &[1.234])) {
        rec.compare((f - 1.234f64.cos()).abs(), || format!("dense f(1.234) = {f}"));
    }
    rec.finish()
}

pub fn run_all(config: &VerifyConfig) -> VerifyReport {
    let checks: [fn(&VerifyConfig) -> CheckOutcome; 15] = [
        check_pauli_associativity,
        check_pauli_product_dense,
        check_commutation_dense,
        check_expectation_zero_state,
        check_tableau_structure,
        check_commutation_preservation,
        check_tableau_conjugation_dense,
        check_rotation_dense,
        check_state_norm,
        check_reference_circuit,
        check_model_vs_statevector,
        check_parameter_shift,
        check_enumeration_vs_quadrature,
        check_quadrature_bandlimit,
        check_estimator_unbiased,
    ];
    VerifyReport {
        checks: checks.iter().map(|check| check(config)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifyConfig {
        VerifyConfig {
            cases: 200,
            templates: 20,
            ..Default::default()
        }
    }

    #[test]
    fn small_suite_passes() {
        let report = run_all(&small());
        assert!(report.passed(), "{}", report.table());
    }

    #[test]
    fn phase_fault_is_detected() {
        let config = VerifyConfig {
            inject_phase_fault: true,
            ..small()
        };
        assert!(!check_tableau_conjugation_dense(&config).passed());
        assert!(!check_model_vs_statevector(&config).passed());
        assert!(!check_reference_circuit(&config).passed());
        assert!(!run_all(&config).passed());
    }
}

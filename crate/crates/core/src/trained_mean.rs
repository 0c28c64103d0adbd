//! Kernel regression with the analytic NTK: the infinite-time trained mean
//! `μ∞(x) = K(x, X) K⁻¹ Y`, the finite-time mean `μ_t` and covariance `𝒦_t`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::circuit::InputPoint;
use crate::error::{check_dims, Error, Result};
use crate::estimator::{Estimator, GramEstimate, SampleSet};

pub const DEFAULT_CONDITION_WARNING: f64 = 1e10;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    inputs: Vec<InputPoint>,
    labels: Vec<f64>,
}

impl TrainingSet {
    pub fn new(inputs: Vec<InputPoint>, labels: Vec<f64>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::InvalidArgument("training set is empty".into()));
        }
        if inputs.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} training inputs but {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        let width = inputs[0].len();
        let mut seen = HashMap::new();
        for (i, x) in inputs.iter().enumerate() {
            if x.len() != width {
                return Err(Error::InputLength {
                    expected: width,
                    found: x.len(),
                });
            }
            if let Some(j) = seen.insert(x, i) {
                return Err(Error::InvalidArgument(format!(
                    "training inputs {j} and {i} are both {x}; duplicates make the training kernel singular"
                )));
            }
        }
        if let Some(i) = labels.iter().position(|y| !y.is_finite()) {
            return Err(Error::InvalidArgument(format!("label {i} is not finite")));
        }
        Ok(Self { inputs, labels })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (InputPoint, f64)>) -> Result<Self> {
        let (inputs, labels) = pairs.into_iter().unzip();
        Self::new(inputs, labels)
    }

    pub fn inputs(&self) -> &[InputPoint] {
        &self.inputs
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn labels_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.labels)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn position(&self, x: &InputPoint) -> Option<usize> {
        self.inputs.iter().position(|t| t == x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseOptions {
    /// Adds `ridge · I` before inverting. Results become regularized and no
    /// longer follow plain kernel regression.
    pub ridge: Option<f64>,
    pub condition_warning: f64,
}

impl Default for InverseOptions {
    fn default() -> Self {
        Self {
            ridge: None,
            condition_warning: DEFAULT_CONDITION_WARNING,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InversionMethod {
    Cholesky,
    Eigen,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GramInverse {
    pub inverse: DMatrix<f64>,
    /// `‖G · G⁻¹ − I‖_op` for the matrix actually inverted.
    pub residual: f64,
    pub condition_number: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub method: InversionMethod,
    pub ridge: Option<f64>,
    pub warning: Option<String>,
}

impl GramInverse {
    pub fn is_regularized(&self) -> bool {
        self.ridge.is_some()
    }

    /// `‖G⁻¹‖_op = 1/λ_min`.
    pub fn inverse_norm(&self) -> f64 {
        1.0 / self.lambda_min
    }
}

fn operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() || m.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "expected a nonempty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    check_square(m)?;
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asym = (m - m.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(Error::InvalidArgument(format!(
            "Gram matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }
    Ok(())
}

pub fn invert_gram(gram: &DMatrix<f64>) -> Result<GramInverse> {
    invert_gram_with(gram, &InverseOptions::default())
}

/// Inverts a symmetric positive-definite Gram matrix by Cholesky, falling back
/// to the symmetric eigendecomposition when the factorization breaks down.
pub fn invert_gram_with(gram: &DMatrix<f64>, options: &InverseOptions) -> Result<GramInverse> {
    check_symmetric(gram)?;
    let d = gram.nrows();
    let mut g = gram.clone();
    if let Some(r) = options.ridge {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("ridge must be positive, got {r}")));
        }
        for i in 0..d {
            g[(i, i)] += r;
        }
    }
    let g = (&g + g.transpose()) * 0.5;
    let eigen = g.clone().symmetric_eigen();
    let lambda_min = eigen.eigenvalues.min();
    let lambda_max = eigen.eigenvalues.max();
    if lambda_max <= 0.0 || lambda_min < 0.0 && -lambda_min > lambda_max * 1e-12 {
        return Err(Error::NotInvertible(format!(
            "matrix is indefinite or zero (eigenvalues in [{lambda_min:e}, {lambda_max:e}])"
        )));
    }
    if lambda_min <= lambda_max * d as f64 * f64::EPSILON {
        return Err(Error::NotInvertible(format!(
            "matrix is numerically singular (lambda_min = {lambda_min:e}, lambda_max = {lambda_max:e})"
        )));
    }
    let (inverse, method) = match g.clone().cholesky() {
        Some(chol) => (chol.inverse(), InversionMethod::Cholesky),
        None => {
            let w = eigen.eigenvalues.map(|l| 1.0 / l);
            let v = &eigen.eigenvectors;
            (v * DMatrix::from_diagonal(&w) * v.transpose(), InversionMethod::Eigen)
        }
    };
    let residual = operator_norm(&(&g * &inverse - DMatrix::identity(d, d)));
    let condition_number = lambda_max / lambda_min;
    let warning = (condition_number > options.condition_warning).then(|| {
        format!(
            "condition number {condition_number:.3e} exceeds {:.1e}; the required sample count grows with ||K^-1||^4",
            options.condition_warning
        )
    });
    Ok(GramInverse {
        inverse,
        residual,
        condition_number,
        lambda_min,
        lambda_max,
        method,
        ridge: options.ridge,
        warning,
    })
}

/// Kernel values on a list of inputs whose first `d_train` entries are the
/// training inputs, in order.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelTable {
    inputs: Vec<InputPoint>,
    ntk: DMatrix<f64>,
    k0: Option<DMatrix<f64>>,
}

impl KernelTable {
    pub fn new(inputs: Vec<InputPoint>, ntk: DMatrix<f64>, k0: Option<DMatrix<f64>>) -> Result<Self> {
        let n = inputs.len();
        check_symmetric(&ntk)?;
        check_dims(n, ntk.nrows())?;
        if let Some(k0) = &k0 {
            check_symmetric(k0)?;
            check_dims(n, k0.nrows())?;
        }
        Ok(Self { inputs, ntk, k0 })
    }

    /// Training inputs followed by the queries not already among them.
    pub fn layout(training: &TrainingSet, queries: &[InputPoint]) -> Vec<InputPoint> {
        let mut inputs = training.inputs().to_vec();
        for q in queries {
            if !inputs.contains(q) {
                inputs.push(q.clone());
            }
        }
        inputs
    }

    /// Estimates the NTK (and optionally `𝒦₀`) on the training inputs and
    /// queries from one shared sample set.
    pub fn estimate(
        estimator: &Estimator<'_>,
        training: &TrainingSet,
        queries: &[InputPoint],
        samples: &SampleSet,
        with_k0: bool,
    ) -> Result<Self> {
        let inputs = Self::layout(training, queries);
        let ntk = estimator.estimate_gram(&inputs, samples)?.matrix;
        let k0 = if with_k0 {
            Some(estimator.estimate_k0_gram(&inputs, samples)?.matrix)
        } else {
            None
        };
        Self::new(inputs, ntk, k0)
    }

    pub fn inputs(&self) -> &[InputPoint] {
        &self.inputs
    }

    pub fn ntk(&self) -> &DMatrix<f64> {
        &self.ntk
    }

    pub fn k0(&self) -> Option<&DMatrix<f64>> {
        self.k0.as_ref()
    }

    pub fn index(&self, x: &InputPoint) -> Result<usize> {
        self.inputs
            .iter()
            .position(|t| t == x)
            .ok_or_else(|| Error::InvalidArgument(format!("input {x} is not in the kernel table")))
    }

    fn check_training(&self, training: &TrainingSet) -> Result<()> {
        let d = training.len();
        if self.inputs.len() < d || self.inputs[..d] != *training.inputs() {
            return Err(Error::InvalidArgument(
                "kernel table does not start with the training inputs".into(),
            ));
        }
        Ok(())
    }

    fn train_block(&self, m: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
        m.view((0, 0), (d, d)).into_owned()
    }

    fn train_column(&self, m: &DMatrix<f64>, d: usize, x: usize) -> DVector<f64> {
        m.view((0, x), (d, 1)).column(0).into_owned()
    }

    fn k0_matrix(&self) -> Result<&DMatrix<f64>> {
        self.k0
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("covariance needs K0 values in the kernel table".into()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressionResult {
    /// Kernel estimate on the training inputs.
    pub gram: GramEstimate,
    pub inverse: GramInverse,
    /// `K⁻¹ Y`.
    pub alpha: DVector<f64>,
    pub queries: Vec<InputPoint>,
    /// `K(X, x_q)`, one column per query.
    pub query_kernels: DMatrix<f64>,
    pub mu_values: Vec<f64>,
    pub n_samples: usize,
    pub seed: Option<u64>,
}

impl RegressionResult {
    pub fn mu(&self, x: &InputPoint) -> Option<f64> {
        self.queries.iter().position(|q| q == x).map(|i| self.mu_values[i])
    }

    pub fn condition_number(&self) -> f64 {
        self.inverse.condition_number
    }
}

/// Kernel regression `μ(x_q) = K(x_q, X) K⁻¹ Y` for every query, with the
/// training Gram and the query kernels estimated from the same samples.
pub fn regress(
    estimator: &Estimator<'_>,
    training: &TrainingSet,
    queries: &[InputPoint],
    samples: &SampleSet,
    options: &InverseOptions,
) -> Result<RegressionResult> {
    let inputs = KernelTable::layout(training, queries);
    let full = estimator.estimate_gram(&inputs, samples)?;
    let d = training.len();
    let inverse = invert_gram_with(&full.matrix.view((0, 0), (d, d)).into_owned(), options)?;
    let alpha = &inverse.inverse * training.labels_vector();
    let mut query_kernels = DMatrix::zeros(d, queries.len());
    for (c, q) in queries.iter().enumerate() {
        let i = inputs.iter().position(|t| t == q).expect("query is in the layout");
        query_kernels.set_column(c, &full.matrix.column(i).rows(0, d));
    }
    let mu_values = (query_kernels.transpose() * &alpha).iter().copied().collect();
    let gram = GramEstimate {
        matrix: full.matrix.view((0, 0), (d, d)).into_owned(),
        std_errors: full.std_errors.view((0, 0), (d, d)).into_owned(),
        n_samples: full.n_samples,
        max_std_error: full.std_errors.view((0, 0), (d, d)).amax(),
    };
    Ok(RegressionResult {
        gram,
        inverse,
        alpha,
        queries: queries.to_vec(),
        query_kernels,
        mu_values,
        n_samples: samples.len(),
        seed: samples.seed(),
    })
}

/// First-order standard errors of the regression outputs. Linearizing
/// `k_qᵀ K⁻¹ Y` around the estimates gives the per-sample contribution
/// `(∇f(x_q) − Σ_a β_a ∇f(x_a)) · (Σ_b α_b ∇f(x_b))` with `β = K⁻¹ k_q`.
pub fn mu_std_errors(
    estimator: &Estimator<'_>,
    training: &TrainingSet,
    result: &RegressionResult,
    samples: &SampleSet,
) -> Result<Vec<f64>> {
    let inputs = KernelTable::layout(training, &result.queries);
    let d = training.len();
    let mut w = vec![0.0; inputs.len()];
    w[..d].copy_from_slice(result.alpha.as_slice());
    let mut out = Vec::with_capacity(result.queries.len());
    for (c, q) in result.queries.iter().enumerate() {
        let i = inputs.iter().position(|t| t == q).expect("query is in the layout");
        let beta = &result.inverse.inverse * result.query_kernels.column(c);
        let mut u = vec![0.0; inputs.len()];
        for a in 0..d {
            u[a] = -beta[a];
        }
        u[i] += 1.0;
        out.push(estimator.estimate_bilinear(&inputs, &u, &w, samples)?.std_error);
    }
    Ok(out)
}

/// `μ̃∞(x)` from one shared sample set.
pub fn mu_infinity(
    estimator: &Estimator<'_>,
    x: &InputPoint,
    training: &TrainingSet,
    samples: &SampleSet,
) -> Result<f64> {
    let r = regress(estimator, training, std::slice::from_ref(x), samples, &InverseOptions::default())?;
    Ok(r.mu_values[0])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrainingTime {
    Finite(f64),
    Infinity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainingDynamicsConfig {
    eta: f64,
    t: TrainingTime,
}

impl TrainingDynamicsConfig {
    pub fn new(eta: f64, t: TrainingTime) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate must be positive, got {eta}")));
        }
        if let TrainingTime::Finite(t) = t {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "training time must be finite and nonnegative, got {t}"
                )));
            }
        }
        Ok(Self { eta, t })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn t(&self) -> TrainingTime {
        self.t
    }
}

/// `A = K⁻¹ (1 − e^{−tηK})`, or `K⁻¹` at `t = ∞`.
pub fn flow_operator(k_train: &DMatrix<f64>, config: &TrainingDynamicsConfig) -> Result<DMatrix<f64>> {
    check_symmetric(k_train)?;
    let t = match config.t {
        TrainingTime::Infinity => return Ok(invert_gram(k_train)?.inverse),
        TrainingTime::Finite(t) => t,
    };
    let eigen = ((k_train + k_train.transpose()) * 0.5).symmetric_eigen();
    let scale = t * config.eta;
    // (1 − e^{−sλ})/λ, which tends to s as λ → 0
    let w = eigen.eigenvalues.map(|l| if l == 0.0 { scale } else { -(-scale * l).exp_m1() / l });
    let v = &eigen.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&w) * v.transpose())
}

/// `μ_t(x) = K(x, X) K⁻¹ (1 − e^{−tηK}) Y`.
pub fn mu_t(
    table: &KernelTable,
    training: &TrainingSet,
    config: &TrainingDynamicsConfig,
    x: &InputPoint,
) -> Result<f64> {
    table.check_training(training)?;
    let d = training.len();
    let a = flow_operator(&table.train_block(&table.ntk, d), config)?;
    let kx = table.train_column(&table.ntk, d, table.index(x)?);
    Ok(kx.dot(&(a * training.labels_vector())))
}

/// `𝒦_t(x,x') = 𝒦₀(x,x') − K(x,X)A 𝒦₀(X,x') − K(x',X)A 𝒦₀(X,x) + K(x,X)A 𝒦₀(X,X)A K(X,x')`
/// with `A = K⁻¹(1 − e^{−tηK})`.
pub fn covariance_t(
    table: &KernelTable,
    training: &TrainingSet,
    config: &TrainingDynamicsConfig,
    x: &InputPoint,
    x2: &InputPoint,
) -> Result<f64> {
    table.check_training(training)?;
    let k0 = table.k0_matrix()?;
    let d = training.len();
    let a = flow_operator(&table.train_block(&table.ntk, d), config)?;
    let (i, j) = (table.index(x)?, table.index(x2)?);
    let ax = &a * table.train_column(&table.ntk, d, i);
    let ax2 = &a * table.train_column(&table.ntk, d, j);
    let k0x = table.train_column(k0, d, i);
    let k0x2 = table.train_column(k0, d, j);
    let k0_train = table.train_block(k0, d);
    Ok(k0[(i, j)] - ax.dot(&k0x2) - ax2.dot(&k0x) + ax.dot(&(k0_train * ax2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn x(s: &str) -> InputPoint {
        s.parse().unwrap()
    }

    fn random_spd(d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        &b * b.transpose() + DMatrix::identity(d, d) * 0.1
    }

    #[test]
    fn training_set_validation() {
        assert!(TrainingSet::new(vec![], vec![]).is_err());
        assert!(TrainingSet::new(vec![x("01")], vec![1.0, 2.0]).is_err());
        assert!(TrainingSet::new(vec![x("01"), x("01")], vec![1.0, 2.0]).is_err());
        assert!(TrainingSet::new(vec![x("01"), x("1")], vec![1.0, 2.0]).is_err());
        assert!(TrainingSet::new(vec![x("01")], vec![f64::NAN]).is_err());
        let t = TrainingSet::from_pairs([(x("01"), 1.0), (x("10"), -1.0)]).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.position(&x("10")), Some(1));
    }

    #[test]
    fn identity_and_diagonal_inverses() {
        let id = invert_gram(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(id.inverse, DMatrix::identity(3, 3));
        assert_eq!(id.condition_number, 1.0);
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let inv = invert_gram(&g).unwrap();
        assert!((inv.inverse[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((inv.inverse[(1, 1)] - 1.0).abs() < 1e-15);
        assert!((inv.condition_number - 2.0).abs() < 1e-12);
        assert!(inv.warning.is_none());
    }

    #[test]
    fn random_spd_inverse_matches_column_solves() {
        let g = random_spd(5, 11);
        let inv = invert_gram(&g).unwrap();
        let lu = g.clone().lu();
        for k in 0..5 {
            let mut e = DVector::zeros(5);
            e[k] = 1.0;
            let col = lu.solve(&e).unwrap();
            assert!((inv.inverse.column(k) - col).amax() < 1e-10);
        }
        assert!(inv.residual < 1e-10);
    }

    #[test]
    fn singular_and_indefinite_are_rejected() {
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let err = invert_gram(&singular).unwrap_err();
        assert!(matches!(err, Error::NotInvertible(_)));
        assert!(err.to_string().contains("invertible"));
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(invert_gram(&indefinite), Err(Error::NotInvertible(_))));
        assert!(invert_gram(&DMatrix::zeros(2, 2)).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(invert_gram(&asym), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn ridge_rescues_singular_and_is_flagged() {
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let opts = InverseOptions {
            ridge: Some(0.1),
            ..Default::default()
        };
        let inv = invert_gram_with(&singular, &opts).unwrap();
        assert!(inv.is_regularized());
        assert!((inv.lambda_min - 0.1).abs() < 1e-12);
    }

    #[test]
    fn ill_conditioning_warns() {
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-11]));
        let inv = invert_gram(&g).unwrap();
        assert!(inv.warning.is_some());
    }

    fn scalar_table(k: f64, kx: f64, kxx: f64) -> (KernelTable, TrainingSet) {
        let training = TrainingSet::new(vec![x("0")], vec![2.0]).unwrap();
        let ntk = DMatrix::from_row_slice(2, 2, &[k, kx, kx, kxx]);
        let k0 = DMatrix::from_row_slice(2, 2, &[0.7, 0.2, 0.2, 0.5]);
        (KernelTable::new(vec![x("0"), x("1")], ntk, Some(k0)).unwrap(), training)
    }

    #[test]
    fn scalar_mu_t_closed_form() {
        let (table, training) = scalar_table(0.8, 0.3, 1.0);
        for t in [0.0, 0.5, 3.0] {
            let cfg = TrainingDynamicsConfig::new(0.7, TrainingTime::Finite(t)).unwrap();
            let expected = 0.3 * (1.0 - (-t * 0.7 * 0.8f64).exp()) * 2.0 / 0.8;
            assert!((mu_t(&table, &training, &cfg, &x("1")).unwrap() - expected).abs() < 1e-14);
        }
        let inf = TrainingDynamicsConfig::new(0.7, TrainingTime::Infinity).unwrap();
        assert!((mu_t(&table, &training, &inf, &x("1")).unwrap() - 0.3 * 2.0 / 0.8).abs() < 1e-14);
        assert!((mu_t(&table, &training, &inf, &x("0")).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn scalar_mu_t_is_monotone_towards_label() {
        let (table, training) = scalar_table(0.8, 0.3, 1.0);
        let mut last = 0.0;
        for step in 0..60 {
            let cfg = TrainingDynamicsConfig::new(1.0, TrainingTime::Finite(step as f64 * 0.5)).unwrap();
            let v = mu_t(&table, &training, &cfg, &x("0")).unwrap();
            assert!(v >= last);
            last = v;
        }
        assert!((last - 2.0).abs() < 1e-9);
    }

    #[test]
    fn scalar_covariance_closed_form() {
        let (table, training) = scalar_table(0.8, 0.3, 1.0);
        let (eta, t) = (0.5, 2.0);
        let cfg = TrainingDynamicsConfig::new(eta, TrainingTime::Finite(t)).unwrap();
        let a = (1.0 - (-t * eta * 0.8f64).exp()) / 0.8;
        // x = x' = "1": K0 = 0.5, K(x,X) = 0.3, K0(X,x) = 0.2, K0(X,X) = 0.7
        let expected = 0.5 - 2.0 * 0.3 * a * 0.2 + 0.3 * a * 0.7 * a * 0.3;
        let got = covariance_t(&table, &training, &cfg, &x("1"), &x("1")).unwrap();
        assert!((got - expected).abs() < 1e-14);
        let zero = TrainingDynamicsConfig::new(eta, TrainingTime::Finite(0.0)).unwrap();
        assert_eq!(covariance_t(&table, &training, &zero, &x("0"), &x("1")).unwrap(), 0.2);
    }

    #[test]
    fn covariance_is_symmetric() {
        let d = 3;
        let inputs: Vec<_> = ["00", "01", "10", "11"].iter().map(|s| x(s)).collect();
        let training = TrainingSet::new(inputs[..d].to_vec(), vec![1.0, -0.5, 0.25]).unwrap();
        let table = KernelTable::new(inputs.clone(), random_spd(4, 3), Some(random_spd(4, 4))).unwrap();
        let cfg = TrainingDynamicsConfig::new(0.3, TrainingTime::Finite(1.7)).unwrap();
        let a = covariance_t(&table, &training, &cfg, &inputs[0], &inputs[3]).unwrap();
        let b = covariance_t(&table, &training, &cfg, &inputs[3], &inputs[0]).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn regression_interpolates_and_reports_errors() {
        use crate::oracle::random::{random_template, RandomTemplateSpec};
        let training = TrainingSet::from_pairs([(x("00"), 1.0), (x("11"), -0.5)]).unwrap();
        let queries = [x("00"), x("01")];
        let samples = SampleSet::full_enumeration(3).unwrap();
        let (template, r) = (0..200)
            .find_map(|seed| {
                let t = random_template(&RandomTemplateSpec::new(2, 3, 2).with_inputs(2), seed);
                let r = regress(&Estimator::with_workers(&t, 1), &training, &queries, &samples, &InverseOptions::default()).ok()?;
                (r.inverse.condition_number < 100.0).then_some((t, r))
            })
            .expect("a well-conditioned instance");
        assert!((r.mu_values[0] - 1.0).abs() < 1e-9);
        let est = Estimator::with_workers(&template, 1);
        let se = mu_std_errors(&est, &training, &r, &samples).unwrap();
        assert!(se[0] < 1e-9, "{se:?}");
        assert!(se[1].is_finite() && se[1] >= 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(TrainingDynamicsConfig::new(0.0, TrainingTime::Infinity).is_err());
        assert!(TrainingDynamicsConfig::new(1.0, TrainingTime::Finite(-1.0)).is_err());
        assert!(TrainingDynamicsConfig::new(1.0, TrainingTime::Finite(f64::INFINITY)).is_err());
    }
}

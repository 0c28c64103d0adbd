//! Monte-Carlo estimation of the analytic NTK from discrete-angle samples.
//!
//! Every estimate is a mean of per-sample contributions. Samples are split
//! into fixed blocks of [`BLOCK_SIZE`]; each block is summed with compensated
//! arithmetic and the block partials are merged in index order, so results are
//! bit-identical for any worker count.

use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{CircuitCache, CircuitTemplate, InputPoint, ParameterVector};
use crate::clifford::DiscreteAngle;
use crate::error::{check_dims, Error, Result};
use crate::summation::CompensatedSum;

pub const BLOCK_SIZE: usize = 256;

/// Largest `L` accepted by [`SampleSet::full_enumeration`].
pub const MAX_ENUMERATION_PARAMS: usize = 16;

/// The parameter samples `θ^{(1)}, …, θ^{(N)}`.
///
/// Random sample `j` depends only on `(seed, j)`: it is drawn from the ChaCha8
/// stream `j` of the generator seeded with `seed`, two bits per angle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleSet {
    Random { seed: u64, len: usize, params: usize },
    /// Every point of `{0, π/2, π, 3π/2}^L` exactly once (`N = 4^L`).
    Enumeration { params: usize },
}

impl SampleSet {
    pub fn random(params: usize, len: usize, seed: u64) -> Result<Self> {
        if params == 0 {
            return Err(Error::InvalidArgument("need at least one parameter (L >= 1)".into()));
        }
        if len == 0 {
            return Err(Error::InvalidArgument("need at least one sample (N >= 1)".into()));
        }
        Ok(Self::Random { seed, len, params })
    }

    pub fn full_enumeration(params: usize) -> Result<Self> {
        if params == 0 || params > MAX_ENUMERATION_PARAMS {
            return Err(Error::InvalidArgument(format!(
                "full enumeration supports 1 <= L <= {MAX_ENUMERATION_PARAMS}, got {params}"
            )));
        }
        Ok(Self::Enumeration { params })
    }

    pub fn len(&self) -> usize {
        match *self {
            Self::Random { len, .. } => len,
            Self::Enumeration { params } => 1 << (2 * params),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_params(&self) -> usize {
        match *self {
            Self::Random { params, .. } | Self::Enumeration { params } => params,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match *self {
            Self::Random { seed, .. } => Some(seed),
            Self::Enumeration { .. } => None,
        }
    }

    pub fn sample(&self, j: usize) -> ParameterVector {
        match *self {
            Self::Random { seed, params, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(j as u64);
                let mut angles = Vec::with_capacity(params);
                let mut word = 0u64;
                for i in 0..params {
                    if i % 32 == 0 {
                        word = rng.next_u64();
                    }
                    angles.push(DiscreteAngle::from_quarter_turns((word & 3) as i64));
                    word >>= 2;
                }
                ParameterVector::new(angles)
            }
            Self::Enumeration { params } => ParameterVector::new(
                (0..params)
                    .map(|i| DiscreteAngle::from_quarter_turns(((j >> (2 * i)) & 3) as i64))
                    .collect(),
            ),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = ParameterVector> + '_ {
        (0..self.len()).map(move |j| self.sample(j))
    }
}

/// `N` i.i.d. samples from the uniform distribution on `{0, π/2, π, 3π/2}^L`.
pub fn sample_parameters(params: usize, len: usize, seed: u64) -> Result<SampleSet> {
    SampleSet::random(params, len, seed)
}

/// A scalar Monte-Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelEstimate {
    pub value: f64,
    pub n_samples: usize,
    /// Unbiased sample variance of the per-sample contributions.
    pub variance: f64,
    /// `sqrt(variance / N)`.
    pub std_error: f64,
}

impl KernelEstimate {
    fn from_moments(sum: &Moments, n: usize) -> Self {
        let (value, variance) = sum.mean_and_variance(n);
        Self {
            value,
            n_samples: n,
            variance,
            std_error: (variance / n as f64).sqrt(),
        }
    }

    /// Whether the estimate differs from zero by more than three standard
    /// errors (any nonzero value when the contributions are constant).
    pub fn significantly_nonzero(&self) -> bool {
        self.value.abs() > 3.0 * self.std_error + 1e-12
    }
}

/// An estimated kernel matrix on a list of inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct GramEstimate {
    pub matrix: DMatrix<f64>,
    pub std_errors: DMatrix<f64>,
    pub n_samples: usize,
    pub max_std_error: f64,
}

impl GramEstimate {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix.clone().symmetric_eigenvalues().min()
    }

    pub fn entry(&self, i: usize, j: usize) -> KernelEstimate {
        let se = self.std_errors[(i, j)];
        let n = self.n_samples;
        KernelEstimate {
            value: self.matrix[(i, j)],
            n_samples: n,
            variance: se * se * n as f64,
            std_error: se,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    sum: CompensatedSum,
    squares: CompensatedSum,
}

impl Moments {
    fn add(&mut self, v: f64) {
        self.sum.add(v);
        self.squares.add(v * v);
    }

    fn merge(&mut self, other: &Self) {
        self.sum.merge(&other.sum);
        self.squares.merge(&other.squares);
    }

    fn mean_and_variance(&self, n: usize) -> (f64, f64) {
        let nf = n as f64;
        let mean = self.sum.value() / nf;
        let variance = if n > 1 {
            ((self.squares.value() - nf * mean * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        (mean, variance)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Estimators bound to one template, with a per-input instantiation cache and
/// a fixed worker count.
pub struct Estimator<'t> {
    cache: CircuitCache<'t>,
    pool: Option<rayon::ThreadPool>,
}

impl<'t> Estimator<'t> {
    /// Uses all available cores.
    pub fn new(template: &'t CircuitTemplate) -> Self {
        Self::with_workers(template, 0)
    }

    /// `workers == 1` runs serially; `0` means available parallelism.
    pub fn with_workers(template: &'t CircuitTemplate, workers: usize) -> Self {
        let pool = (workers != 1).then(|| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .expect("failed to start worker pool")
        });
        Self {
            cache: CircuitCache::new(template),
            pool,
        }
    }

    pub fn template(&self) -> &'t CircuitTemplate {
        self.cache.template()
    }

    fn check_samples(&self, samples: &SampleSet) -> Result<()> {
        check_dims(self.template().num_params(), samples.num_params())
    }

    /// Folds `per_sample` over all samples block by block and merges the blocks in order.
    fn reduce<A, F, M>(&self, samples: &SampleSet, init: A, per_sample: F, merge: M) -> Result<A>
    where
        A: Clone + Send + Sync,
        F: Fn(&mut A, &ParameterVector) -> Result<()> + Sync,
        M: Fn(&mut A, &A),
    {
        let n = samples.len();
        let blocks = n.div_ceil(BLOCK_SIZE);
        let run_block = |b: usize| -> Result<A> {
            let mut acc = init.clone();
            for j in b * BLOCK_SIZE..((b + 1) * BLOCK_SIZE).min(n) {
                per_sample(&mut acc, &samples.sample(j))?;
            }
            Ok(acc)
        };
        let partials: Vec<A> = match &self.pool {
            Some(pool) => pool.install(|| (0..blocks).into_par_iter().map(run_block).collect::<Result<_>>())?,
            None => (0..blocks).map(run_block).collect::<Result<_>>()?,
        };
        let mut total = init.clone();
        for p in &partials {
            merge(&mut total, p);
        }
        Ok(total)
    }

    fn scalar(
        &self,
        samples: &SampleSet,
        contribution: impl Fn(&ParameterVector) -> Result<f64> + Sync,
    ) -> Result<KernelEstimate> {
        self.check_samples(samples)?;
        let total = self.reduce(
            samples,
            Moments::default(),
            |acc, theta| {
                acc.add(contribution(theta)?);
                Ok(())
            },
            Moments::merge,
        )?;
        Ok(KernelEstimate::from_moments(&total, samples.len()))
    }

    /// `K̂_θ(x, x') = ∇f_θ(x)ᵀ ∇f_θ(x')`.
    pub fn empirical_ntk(&self, x: &InputPoint, x2: &InputPoint, theta: &ParameterVector) -> Result<f64> {
        let a = self.cache.get(x)?;
        let ga = a.gradient(theta)?;
        if x == x2 {
            return Ok(dot(&ga, &ga));
        }
        Ok(dot(&ga, &self.cache.get(x2)?.gradient(theta)?))
    }

    /// `K̃(x, x') = (1/N) Σ_j K̂_{θ^{(j)}}(x, x')`.
    pub fn estimate_ntk(&self, x: &InputPoint, x2: &InputPoint, samples: &SampleSet) -> Result<KernelEstimate> {
        let a = self.cache.get(x)?;
        let b = self.cache.get(x2)?;
        let same = x == x2;
        self.scalar(samples, |theta| {
            let ga = a.gradient(theta)?;
            Ok(if same { dot(&ga, &ga) } else { dot(&ga, &b.gradient(theta)?) })
        })
    }

    /// Unbiased estimate of `E_θ f_θ(x)`.
    pub fn estimate_mean_f(&self, x: &InputPoint, samples: &SampleSet) -> Result<KernelEstimate> {
        let a = self.cache.get(x)?;
        self.scalar(samples, |theta| a.evaluate(theta))
    }

    /// Unbiased estimate of `K₀(x, x') = E_θ[f_θ(x) f_θ(x')]`.
    pub fn estimate_k0(&self, x: &InputPoint, x2: &InputPoint, samples: &SampleSet) -> Result<KernelEstimate> {
        let a = self.cache.get(x)?;
        let b = self.cache.get(x2)?;
        self.scalar(samples, |theta| Ok(a.evaluate(theta)? * b.evaluate(theta)?))
    }

    /// Accumulates the symmetric matrix of `v_r(θ)·v_c(θ)` products where
    /// `vectors(θ)` yields one vector per input.
    fn gram_of(
        &self,
        inputs: &[InputPoint],
        samples: &SampleSet,
        vectors: impl Fn(&crate::circuit::InstantiatedCircuit, &ParameterVector) -> Result<Vec<f64>> + Sync,
    ) -> Result<GramEstimate> {
        self.check_samples(samples)?;
        if inputs.is_empty() {
            return Err(Error::InvalidArgument("Gram estimate needs at least one input".into()));
        }
        let circuits = inputs
            .iter()
            .map(|x| self.cache.get(x))
            .collect::<Result<Vec<_>>>()?;
        let d = inputs.len();
        let total = self.reduce(
            samples,
            vec![Moments::default(); d * (d + 1) / 2],
            |acc, theta| {
                let vs = circuits
                    .iter()
                    .map(|c| vectors(c, theta))
                    .collect::<Result<Vec<_>>>()?;
                let mut k = 0;
                for r in 0..d {
                    for c in r..d {
                        acc[k].add(dot(&vs[r], &vs[c]));
                        k += 1;
                    }
                }
                Ok(())
            },
            |acc, other| {
                for (a, b) in acc.iter_mut().zip(other) {
                    a.merge(b);
                }
            },
        )?;
        let n = samples.len();
        let mut matrix = DMatrix::zeros(d, d);
        let mut std_errors = DMatrix::zeros(d, d);
        let mut k = 0;
        for r in 0..d {
            for c in r..d {
                let e = KernelEstimate::from_moments(&total[k], n);
                matrix[(r, c)] = e.value;
                matrix[(c, r)] = e.value;
                std_errors[(r, c)] = e.std_error;
                std_errors[(c, r)] = e.std_error;
                k += 1;
            }
        }
        let max_std_error = std_errors.iter().copied().fold(0.0, f64::max);
        Ok(GramEstimate {
            matrix,
            std_errors,
            n_samples: n,
            max_std_error,
        })
    }

    /// NTK on all pairs of `inputs`; gradients are computed once per input and sample.
    pub fn estimate_gram(&self, inputs: &[InputPoint], samples: &SampleSet) -> Result<GramEstimate> {
        self.gram_of(inputs, samples, |c, theta| c.gradient(theta))
    }

    /// Estimates `uᵀ K w` through the per-sample contributions
    /// `(Σ_a u_a ∇f_θ(x_a)) · (Σ_b w_b ∇f_θ(x_b))`.
    pub fn estimate_bilinear(
        &self,
        inputs: &[InputPoint],
        u: &[f64],
        w: &[f64],
        samples: &SampleSet,
    ) -> Result<KernelEstimate> {
        check_dims(inputs.len(), u.len())?;
        check_dims(inputs.len(), w.len())?;
        let circuits = inputs
            .iter()
            .map(|x| self.cache.get(x))
            .collect::<Result<Vec<_>>>()?;
        let l = self.template().num_params();
        self.scalar(samples, |theta| {
            let mut left = vec![0.0; l];
            let mut right = vec![0.0; l];
            for ((c, &ua), &wa) in circuits.iter().zip(u).zip(w) {
                if ua == 0.0 && wa == 0.0 {
                    continue;
                }
                let g = c.gradient(theta)?;
                for k in 0..l {
                    left[k] += ua * g[k];
                    right[k] += wa * g[k];
                }
            }
            Ok(dot(&left, &right))
        })
    }

    /// `K₀` on all pairs of `inputs`.
    pub fn estimate_k0_gram(&self, inputs: &[InputPoint], samples: &SampleSet) -> Result<GramEstimate> {
        self.gram_of(inputs, samples, |c, theta| Ok(vec![c.evaluate(theta)?]))
    }
}

pub fn empirical_ntk(
    template: &CircuitTemplate,
    x: &InputPoint,
    x2: &InputPoint,
    theta: &ParameterVector,
) -> Result<f64> {
    Estimator::with_workers(template, 1).empirical_ntk(x, x2, theta)
}

pub fn estimate_ntk(
    template: &CircuitTemplate,
    x: &InputPoint,
    x2: &InputPoint,
    samples: &SampleSet,
) -> Result<KernelEstimate> {
    Estimator::new(template).estimate_ntk(x, x2, samples)
}

pub fn estimate_gram(
    template: &CircuitTemplate,
    inputs: &[InputPoint],
    samples: &SampleSet,
) -> Result<GramEstimate> {
    Estimator::new(template).estimate_gram(inputs, samples)
}

pub fn estimate_mean_f(template: &CircuitTemplate, x: &InputPoint, samples: &SampleSet) -> Result<KernelEstimate> {
    Estimator::new(template).estimate_mean_f(x, samples)
}

pub fn estimate_k0(
    template: &CircuitTemplate,
    x: &InputPoint,
    x2: &InputPoint,
    samples: &SampleSet,
) -> Result<KernelEstimate> {
    Estimator::new(template).estimate_k0(x, x2, samples)
}

fn check_epsilon_delta(epsilon: f64, delta: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Precondition {
            bound: "epsilon > 0",
            detail: format!("got epsilon = {epsilon}"),
        });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Precondition {
            bound: "0 < delta < 1",
            detail: format!("got delta = {delta}"),
        });
    }
    Ok(())
}

fn check_positive_count(name: &'static str, value: usize) -> Result<()> {
    if value == 0 {
        return Err(Error::Precondition {
            bound: name,
            detail: "must be at least 1".into(),
        });
    }
    Ok(())
}

fn ceil_count(value: f64) -> Result<u64> {
    if !value.is_finite() || value >= u64::MAX as f64 {
        return Err(Error::Precondition {
            bound: "N representable",
            detail: format!("required sample count {value:e} overflows"),
        });
    }
    Ok(value.ceil().max(1.0) as u64)
}

/// `N = ⌈8 L² m² / (3 ε²) · ln(2/δ)⌉` samples for `|K̃ − K| < ε` with
/// probability at least `1 − δ`.
pub fn sample_size_ntk(epsilon: f64, delta: f64, num_params: usize, num_terms: usize) -> Result<u64> {
    check_epsilon_delta(epsilon, delta)?;
    check_positive_count("L >= 1", num_params)?;
    check_positive_count("m >= 1", num_terms)?;
    sample_size_ntk_with_bound(epsilon, delta, num_params, num_terms as f64)
}

/// The same count with `m` replaced by any bound `f_sup ≥ ‖f‖∞`, such as the
/// coefficient sum `Σ_k |c_k|`.
pub fn sample_size_ntk_with_bound(epsilon: f64, delta: f64, num_params: usize, f_sup: f64) -> Result<u64> {
    check_epsilon_delta(epsilon, delta)?;
    check_positive_count("L >= 1", num_params)?;
    if !(f_sup > 0.0 && f_sup.is_finite()) {
        return Err(Error::Precondition {
            bound: "sup |f| > 0",
            detail: format!("got {f_sup}"),
        });
    }
    let l = num_params as f64;
    ceil_count(8.0 * l * l * f_sup * f_sup / (3.0 * epsilon * epsilon) * (2.0 / delta).ln())
}

/// Inputs of the `μ∞` sample-size formula.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuSampleSizeInputs {
    pub epsilon: f64,
    pub delta: f64,
    pub num_params: usize,
    pub num_terms: usize,
    pub d_train: usize,
    /// `‖K_train⁻¹‖_op`.
    pub norm_k_inv: f64,
    /// `‖Y‖₂`.
    pub norm_y: f64,
    /// `‖K_train⁻¹ Y‖₂`.
    pub norm_k_inv_y: f64,
    /// `|𝒳|`; values above 1 give a bound uniform over the whole feature space.
    pub feature_space_size: u64,
}

impl MuSampleSizeInputs {
    /// Upper limit on `ε`: `(L/2) √d_train m² ‖Y‖₂ ‖K_train⁻¹‖_op`.
    pub fn epsilon_limit(&self) -> f64 {
        let m = self.num_terms as f64;
        0.5 * self.num_params as f64 * (self.d_train as f64).sqrt() * m * m * self.norm_y * self.norm_k_inv
    }

    /// `R = 2 L √d_train m² ‖K_train⁻¹ Y‖₂`.
    pub fn r(&self) -> f64 {
        let m = self.num_terms as f64;
        2.0 * self.num_params as f64 * (self.d_train as f64).sqrt() * m * m * self.norm_k_inv_y
    }
}

/// Samples for `|μ̃∞(x) − μ∞(x)| < ε` with probability at least `1 − δ`:
///
/// ```text
/// N = (24R² + 4Rε)/(3ε²) · ln(2|𝒳|(1+d)/δ)
///   + 2(1+√2)⁴ L⁴ d³ m⁸ ‖K⁻¹‖⁴ ‖Y‖² / (3ε²) · ln(4|𝒳|d/δ)
/// ```
pub fn sample_size_mu(inputs: &MuSampleSizeInputs) -> Result<u64> {
    let MuSampleSizeInputs {
        epsilon,
        delta,
        num_params,
        num_terms,
        d_train,
        norm_k_inv,
        norm_y,
        norm_k_inv_y,
        feature_space_size,
    } = *inputs;
    check_epsilon_delta(epsilon, delta)?;
    check_positive_count("L >= 1", num_params)?;
    check_positive_count("m >= 1", num_terms)?;
    check_positive_count("d_train >= 1", d_train)?;
    if feature_space_size == 0 {
        return Err(Error::Precondition {
            bound: "|X| >= 1",
            detail: "feature space size must be at least 1".into(),
        });
    }
    for (name, v) in [
        ("||K_train^-1||_op > 0", norm_k_inv),
        ("||Y||_2 > 0", norm_y),
        ("||K_train^-1 Y||_2 > 0", norm_k_inv_y),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Precondition {
                bound: name,
                detail: format!("got {v}"),
            });
        }
    }
    let limit = inputs.epsilon_limit();
    if epsilon >= limit {
        return Err(Error::Precondition {
            bound: "0 < epsilon < (L/2) sqrt(d_train) m^2 ||Y||_2 ||K_train^-1||_op",
            detail: format!("epsilon = {epsilon} but the bound is {limit}"),
        });
    }
    let (l, m, d, x) = (
        num_params as f64,
        num_terms as f64,
        d_train as f64,
        feature_space_size as f64,
    );
    let r = inputs.r();
    let eps2 = epsilon * epsilon;
    let first = (24.0 * r * r + 4.0 * r * epsilon) / (3.0 * eps2) * (2.0 * x * (1.0 + d) / delta).ln();
    let second = 2.0 * (1.0 + std::f64::consts::SQRT_2).powi(4) * l.powi(4) * d.powi(3) * m.powi(8)
        * norm_k_inv.powi(4)
        * norm_y
        * norm_y
        / (3.0 * eps2)
        * (4.0 * x * d / delta).ln();
    ceil_count(first + second)
}

/// Matrix Bernstein tail for the mean of `N` i.i.d. centred `d₁ × d₂` matrices
/// bounded by `R` with variance statistic `ν`:
/// `(d₁ + d₂) · exp(−(N t²/2) / (ν + R t/3))`, clamped to `[0, 1]`.
pub fn bernstein_tail(t: f64, n_samples: u64, r: f64, nu: f64, d1: usize, d2: usize) -> Result<f64> {
    if t.is_nan() || t < 0.0 || r.is_nan() || r <= 0.0 || nu.is_nan() || nu < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "Bernstein bound needs t >= 0, R > 0, nu >= 0; got t = {t}, R = {r}, nu = {nu}"
        )));
    }
    let dims = (d1 + d2) as f64;
    if t == 0.0 {
        return Ok(dims.min(1.0));
    }
    let exponent = -(n_samples as f64 * t * t / 2.0) / (nu + r * t / 3.0);
    Ok((dims * exponent.exp()).clamp(0.0, 1.0))
}

/// `(R, ν) = (L d ‖f‖∞², L² d² ‖f‖∞⁴)` for the per-sample Gram deviations.
pub fn gram_bernstein_parameters(num_params: usize, d_train: usize, f_sup: f64) -> (f64, f64) {
    let r = num_params as f64 * d_train as f64 * f_sup * f_sup;
    (r, r * r)
}

/// `P(‖K̃_train − K_train‖_op ≥ t) ≤ 2 d exp(−3 N t² / (8 L² d² ‖f‖∞⁴))`, valid for
/// `0 < t ≤ ‖f‖∞²`.
pub fn gram_deviation_tail(t: f64, n_samples: u64, num_params: usize, d_train: usize, f_sup: f64) -> Result<f64> {
    let f2 = f_sup * f_sup;
    if !(t > 0.0 && t <= f2) {
        return Err(Error::Precondition {
            bound: "0 < t <= ||f||_inf^2",
            detail: format!("t = {t}, ||f||_inf^2 = {f2}"),
        });
    }
    let (l, d) = (num_params as f64, d_train as f64);
    let bound = 2.0 * d * (-3.0 * n_samples as f64 * t * t / (8.0 * l * l * d * d * f2 * f2)).exp();
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CliffordLayerSpec, Gate, GateApplication, Observable};
    use crate::PauliElement;

    fn p(s: &str) -> PauliElement {
        s.parse().unwrap()
    }

    fn cos_circuit() -> CircuitTemplate {
        CircuitTemplate::new(
            1,
            None,
            vec![
                CliffordLayerSpec::new(vec![GateApplication::always(Gate::H(0))]),
                CliffordLayerSpec::new(vec![GateApplication::always(Gate::H(0))]),
            ],
            vec![p("Z")],
            Observable::single(p("Z")).unwrap(),
        )
        .unwrap()
    }

    fn constant_circuit() -> CircuitTemplate {
        CircuitTemplate::new(
            1,
            None,
            vec![CliffordLayerSpec::empty(), CliffordLayerSpec::empty()],
            vec![p("Z")],
            Observable::single(p("Z")).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn samples_are_reproducible() {
        let a = sample_parameters(3, 2, 42).unwrap();
        let b = sample_parameters(3, 2, 42).unwrap();
        let c = sample_parameters(3, 2, 43).unwrap();
        let va: Vec<_> = a.iter().collect();
        assert_eq!(va, b.iter().collect::<Vec<_>>());
        assert_ne!(va, c.iter().collect::<Vec<_>>());
        assert!(sample_parameters(0, 2, 1).is_err());
        assert!(sample_parameters(2, 0, 1).is_err());
    }

    #[test]
    fn enumeration_visits_every_point_once() {
        let s = SampleSet::full_enumeration(3).unwrap();
        let mut seen: Vec<_> = s.iter().map(|t| t.angles().to_vec()).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 64);
    }

    #[test]
    fn cos_circuit_kernels() {
        let t = cos_circuit();
        let x = InputPoint::empty();
        let half_pi = ParameterVector::from_quarter_turns(&[1]);
        assert_eq!(empirical_ntk(&t, &x, &x, &half_pi).unwrap(), 1.0);
        assert_eq!(empirical_ntk(&t, &x, &x, &ParameterVector::zeros(1)).unwrap(), 0.0);
        let all = SampleSet::full_enumeration(1).unwrap();
        assert_eq!(estimate_ntk(&t, &x, &x, &all).unwrap().value, 0.5);
        assert_eq!(estimate_mean_f(&t, &x, &all).unwrap().value, 0.0);
        assert_eq!(estimate_k0(&t, &x, &x, &all).unwrap().value, 0.5);
    }

    #[test]
    fn constant_model_flags_nonzero_mean() {
        let t = constant_circuit();
        let x = InputPoint::empty();
        let s = sample_parameters(1, 100, 5).unwrap();
        assert_eq!(estimate_ntk(&t, &x, &x, &s).unwrap().value, 0.0);
        let mean = estimate_mean_f(&t, &x, &s).unwrap();
        assert_eq!(mean.value, 1.0);
        assert!(mean.significantly_nonzero());
    }

    #[test]
    fn standard_error_relation() {
        let t = cos_circuit();
        let x = InputPoint::empty();
        let e = estimate_ntk(&t, &x, &x, &sample_parameters(1, 1000, 3).unwrap()).unwrap();
        assert!((e.std_error - (e.variance / 1000.0).sqrt()).abs() < 1e-15);
        assert!(e.variance > 0.0);
    }

    #[test]
    fn bilinear_matches_gram_contraction() {
        let t = crate::oracle::random::random_template(
            &crate::oracle::random::RandomTemplateSpec::new(2, 3, 2).with_inputs(2),
            9,
        );
        let inputs = InputPoint::all(2);
        let est = Estimator::with_workers(&t, 1);
        let s = sample_parameters(3, 300, 4).unwrap();
        let gram = est.estimate_gram(&inputs, &s).unwrap();
        let u = [0.5, -1.0, 0.0, 2.0];
        let w = [1.0, 0.25, -0.5, 0.0];
        let b = est.estimate_bilinear(&inputs, &u, &w, &s).unwrap();
        let direct = (nalgebra::DVector::from_row_slice(&u).transpose() * &gram.matrix * nalgebra::DVector::from_row_slice(&w))[0];
        assert!((b.value - direct).abs() < 1e-12, "{} vs {direct}", b.value);
        assert!(est.estimate_bilinear(&inputs, &u[..3], &w, &s).is_err());
    }

    #[test]
    fn mismatched_sample_width_is_rejected() {
        let t = cos_circuit();
        let x = InputPoint::empty();
        assert!(estimate_ntk(&t, &x, &x, &sample_parameters(2, 10, 1).unwrap()).is_err());
    }

    #[test]
    fn sample_size_ntk_reference_value() {
        assert_eq!(sample_size_ntk(0.1, 0.01, 10, 1).unwrap(), 141289);
        assert!(matches!(
            sample_size_ntk(0.1, 1.5, 10, 1),
            Err(Error::Precondition { bound: "0 < delta < 1", .. })
        ));
        assert!(sample_size_ntk(0.0, 0.1, 10, 1).is_err());
        assert!(sample_size_ntk(-1.0, 0.1, 10, 1).is_err());
    }

    #[test]
    fn coefficient_bound_never_exceeds_term_count() {
        assert_eq!(
            sample_size_ntk_with_bound(0.1, 0.01, 10, 1.0).unwrap(),
            sample_size_ntk(0.1, 0.01, 10, 1).unwrap()
        );
        assert!(sample_size_ntk_with_bound(0.1, 0.01, 10, 0.75).unwrap() < sample_size_ntk(0.1, 0.01, 10, 1).unwrap());
        assert!(sample_size_ntk_with_bound(0.1, 0.01, 10, 0.0).is_err());
    }

    #[test]
    fn sample_size_ntk_scaling() {
        let base = sample_size_ntk(0.2, 0.05, 5, 2).unwrap() as f64;
        let double_l = sample_size_ntk(0.2, 0.05, 10, 2).unwrap() as f64;
        let double_eps = sample_size_ntk(0.4, 0.05, 5, 2).unwrap() as f64;
        assert!((double_l / base - 4.0).abs() < 4.0 / base + 1e-9);
        assert!((base / double_eps - 4.0).abs() < 4.0 / double_eps + 1e-9);
    }

    fn mu_inputs() -> MuSampleSizeInputs {
        MuSampleSizeInputs {
            epsilon: 1.0,
            delta: 0.1,
            num_params: 2,
            num_terms: 1,
            d_train: 2,
            norm_k_inv: 1.0,
            norm_y: 2f64.sqrt(),
            norm_k_inv_y: 2f64.sqrt(),
            feature_space_size: 1,
        }
    }

    #[test]
    fn sample_size_mu_shape() {
        let base = mu_inputs();
        let n = sample_size_mu(&base).unwrap();
        let looser = sample_size_mu(&MuSampleSizeInputs { epsilon: 1.5, ..base }).unwrap();
        assert!(looser <= n);
        let wider = sample_size_mu(&MuSampleSizeInputs { d_train: 3, ..base }).unwrap();
        assert!(wider >= n);
        let uniform = sample_size_mu(&MuSampleSizeInputs {
            feature_space_size: 16,
            ..base
        })
        .unwrap();
        assert!(uniform > n);
    }

    #[test]
    fn sample_size_mu_rejects_large_epsilon() {
        // limit = (2/2)·√2·1·√2·1 = 2
        let err = sample_size_mu(&MuSampleSizeInputs {
            epsilon: 2.5,
            ..mu_inputs()
        })
        .unwrap_err();
        assert!(matches!(err, Error::Precondition { .. }));
        assert!(err.to_string().contains("epsilon <"));
        assert!(sample_size_mu(&MuSampleSizeInputs {
            epsilon: 1.99,
            ..mu_inputs()
        })
        .is_ok());
    }

    #[test]
    fn bernstein_basics() {
        assert_eq!(bernstein_tail(0.0, 100, 1.0, 1.0, 2, 2).unwrap(), 1.0);
        let a = bernstein_tail(0.5, 100, 1.0, 1.0, 2, 2).unwrap();
        let b = bernstein_tail(0.5, 1000, 1.0, 1.0, 2, 2).unwrap();
        assert!(b < a);
        assert!(bernstein_tail(-1.0, 10, 1.0, 1.0, 1, 1).is_err());
        assert!(bernstein_tail(1.0, 10, 0.0, 1.0, 1, 1).is_err());
    }
}

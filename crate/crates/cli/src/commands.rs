use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use qntk_core::bench::{self, BenchConfig};
use qntk_core::estimator::{sample_size_mu, sample_size_ntk, sample_size_ntk_with_bound, MuSampleSizeInputs};
use qntk_core::io::{read_circuit, read_training, to_json_string};
use qntk_core::trained_mean::{mu_std_errors, regress, InverseOptions, KernelTable, RegressionResult};
use qntk_core::verify::{run_all, VerifyConfig};
use qntk_core::{CircuitTemplate, Estimator, GramEstimate, InputPoint, SampleSet, TrainingSet};
use serde_json::{json, Value};

use crate::failure::{Failure, BAD_INPUT, PRECONDITION, VERIFY_FAILED};
use crate::{BenchArgs, GramArgs, MuArgs, NtkArgs, SampleSizeArgs, Sampling, Target, VerifyArgs};

/// Pilot samples are drawn from a seed derived from the run seed so they do
/// not coincide with the first samples of the main estimate.
const PILOT_SEED_MIX: u64 = 0x9e37_79b9_7f4a_7c15;

fn load_circuit(path: &Path) -> Result<CircuitTemplate, Failure> {
    read_circuit(path).map_err(|e| Failure::new(BAD_INPUT, format!("{}: {e}", path.display())))
}

fn load_training(path: &Path, template: &CircuitTemplate) -> Result<TrainingSet, Failure> {
    let training = read_training(path).map_err(|e| Failure::new(BAD_INPUT, format!("{}: {e}", path.display())))?;
    for x in training.inputs() {
        template
            .check_input(x)
            .map_err(|e| Failure::new(BAD_INPUT, format!("{}: training input {x}: {e}", path.display())))?;
    }
    Ok(training)
}

fn parse_query(template: &CircuitTemplate, s: &str) -> Result<InputPoint, Failure> {
    let x: InputPoint = s.parse().map_err(Failure::input)?;
    template
        .check_input(&x)
        .map_err(|e| Failure::new(BAD_INPUT, format!("query {s:?}: {e}")))?;
    Ok(x)
}

fn parse_queries(template: &CircuitTemplate, raw: &[String]) -> Result<Vec<InputPoint>, Failure> {
    raw.iter().map(|s| parse_query(template, s)).collect()
}

fn precondition(msg: impl Into<String>) -> Failure {
    Failure::new(PRECONDITION, msg)
}

/// Range checks on whichever of ε and δ were given.
fn check_targets(s: &Sampling, template: &CircuitTemplate) -> Result<(), Failure> {
    if let (Some(e), Some(d)) = (s.epsilon, s.delta) {
        sample_size_ntk(e, d, template.num_params(), template.observable().num_terms())?;
    } else if let Some(e) = s.epsilon {
        if !(e > 0.0 && e.is_finite()) {
            return Err(precondition(format!("epsilon must be positive, got {e}")));
        }
    } else if let Some(d) = s.delta {
        if !(d > 0.0 && d < 1.0) {
            return Err(precondition(format!("delta must lie in (0, 1), got {d}")));
        }
    }
    if s.samples == Some(0) {
        return Err(precondition("N >= 1 is required for --samples"));
    }
    Ok(())
}

/// Picks explicit `--samples`, full enumeration, or `calculated()` in that order.
fn choose_samples(
    s: &Sampling,
    params: usize,
    calculated: impl FnOnce(f64, f64) -> Result<u64, Failure>,
) -> Result<SampleSet, Failure> {
    if s.enumerate {
        return Ok(SampleSet::full_enumeration(params)?);
    }
    let n = match (s.samples, s.epsilon, s.delta) {
        (Some(n), _, _) => n,
        (None, Some(e), Some(d)) => {
            let n = calculated(e, d)?;
            if n > s.max_samples {
                return Err(precondition(format!(
                    "the accuracy target needs N = {n} samples, above --max-samples {}",
                    s.max_samples
                )));
            }
            n
        }
        _ => return Err(precondition("give --epsilon and --delta, or --samples, or --enumerate")),
    };
    let n = usize::try_from(n).map_err(|_| precondition(format!("N = {n} does not fit in memory indices")))?;
    Ok(SampleSet::random(params, n, s.seed)?)
}

fn sampling_mode(set: &SampleSet) -> &'static str {
    match set.seed() {
        Some(_) => "random",
        None => "enumeration",
    }
}

fn emit(value: &Value, out: Option<&Path>) -> Result<(), Failure> {
    let text = to_json_string(value);
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::new(VERIFY_FAILED, format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn matrix_json(m: &DMatrix<f64>) -> Value {
    Value::Array(
        m.row_iter()
            .map(|r| Value::Array(r.iter().map(|&v| json!(v)).collect()))
            .collect(),
    )
}

/// Mean-of-f diagnostics for `inputs`; warns on stderr for every input whose
/// estimated mean is clearly nonzero, since the sample-size guarantee assumes
/// a zero-mean model.
fn mean_checks(
    estimator: &Estimator<'_>,
    inputs: &[InputPoint],
    samples: &SampleSet,
    warnings: &mut Vec<String>,
) -> Result<Value, Failure> {
    let mut out = Vec::new();
    for x in inputs {
        let m = estimator.estimate_mean_f(x, samples)?;
        if m.significantly_nonzero() {
            let w = format!(
                "estimated mean of f at x = \"{x}\" is {:.4e} (std error {:.1e}); the sample-size guarantee assumes mean zero",
                m.value, m.std_error
            );
            eprintln!("warning: {w}");
            warnings.push(w);
        }
        out.push(json!({ "x": x.to_string(), "value": m.value, "std_error": m.std_error }));
    }
    Ok(Value::Array(out))
}

fn dedup(inputs: &mut Vec<InputPoint>) {
    let mut seen = Vec::new();
    inputs.retain(|x| {
        if seen.contains(x) {
            false
        } else {
            seen.push(x.clone());
            true
        }
    });
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub fn estimate_ntk(a: &NtkArgs) -> Result<(), Failure> {
    let template = load_circuit(&a.circuit)?;
    let (x, x2) = match parse_queries(&template, &a.query)?.as_slice() {
        [] if template.input_width() == 0 => (InputPoint::empty(), InputPoint::empty()),
        [] => return Err(Failure::new(BAD_INPUT, "--query is required for circuits with inputs")),
        [x] => (x.clone(), x.clone()),
        [x, x2] => (x.clone(), x2.clone()),
        _ => return Err(Failure::new(BAD_INPUT, "estimate-ntk takes at most two --query values")),
    };
    check_targets(&a.sampling, &template)?;
    let (l, m) = (template.num_params(), template.observable().num_terms());
    let samples = choose_samples(&a.sampling, l, |e, d| Ok(sample_size_ntk(e, d, l, m)?))?;

    let start = Instant::now();
    let estimator = Estimator::with_workers(&template, a.sampling.workers);
    let k = estimator.estimate_ntk(&x, &x2, &samples)?;
    let mut warnings = Vec::new();
    let mut points = vec![x.clone(), x2.clone()];
    dedup(&mut points);
    let means = mean_checks(&estimator, &points, &samples, &mut warnings)?;
    let out = json!({
        "x": x.to_string(),
        "x2": x2.to_string(),
        "value": k.value,
        "std_error": k.std_error,
        "variance": k.variance,
        "N": samples.len(),
        "sampling": sampling_mode(&samples),
        "seed": samples.seed(),
        "epsilon": a.sampling.epsilon,
        "delta": a.sampling.delta,
        "mean_f": means,
        "warnings": warnings,
        "elapsed_ms": elapsed_ms(start),
    });
    emit(&out, a.out.as_deref())
}

fn gram_json(g: &GramEstimate) -> Value {
    json!({
        "matrix": matrix_json(&g.matrix),
        "std_errors": matrix_json(&g.std_errors),
        "max_std_error": g.max_std_error,
        "min_eigenvalue": g.min_eigenvalue(),
    })
}

pub fn estimate_gram(a: &GramArgs) -> Result<(), Failure> {
    let template = load_circuit(&a.circuit)?;
    let mut inputs = match &a.data {
        Some(path) => load_training(path, &template)?.inputs().to_vec(),
        None => Vec::new(),
    };
    inputs.extend(parse_queries(&template, &a.query)?);
    dedup(&mut inputs);
    if inputs.is_empty() {
        if template.input_width() == 0 {
            inputs.push(InputPoint::empty());
        } else {
            return Err(Failure::new(BAD_INPUT, "give inputs with --data or --query"));
        }
    }
    check_targets(&a.sampling, &template)?;
    let (l, m) = (template.num_params(), template.observable().num_terms());
    let d = inputs.len();
    let pairs = (d * (d + 1) / 2) as f64;
    // Entrywise guarantee: a union bound spreads δ over the distinct entries.
    let samples = choose_samples(&a.sampling, l, |e, delta| Ok(sample_size_ntk(e, delta / pairs, l, m)?))?;

    let start = Instant::now();
    let estimator = Estimator::with_workers(&template, a.sampling.workers);
    let gram = estimator.estimate_gram(&inputs, &samples)?;
    let mut warnings = Vec::new();
    let means = mean_checks(&estimator, &inputs, &samples, &mut warnings)?;
    let out = json!({
        "inputs": inputs.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "gram": gram_json(&gram),
        "N": samples.len(),
        "sampling": sampling_mode(&samples),
        "seed": samples.seed(),
        "epsilon": a.sampling.epsilon,
        "delta": a.sampling.delta,
        "guarantee": "entrywise",
        "mean_f": means,
        "warnings": warnings,
        "elapsed_ms": elapsed_ms(start),
    });
    emit(&out, a.out.as_deref())
}

struct PilotNorms {
    n_samples: usize,
    seed: u64,
    norm_k_inv: f64,
    norm_y: f64,
    norm_k_inv_y: f64,
    condition_number: f64,
}

impl PilotNorms {
    fn json(&self) -> Value {
        json!({
            "N": self.n_samples,
            "seed": self.seed,
            "norm_k_inv": self.norm_k_inv,
            "norm_y": self.norm_y,
            "norm_k_inv_y": self.norm_k_inv_y,
            "condition_number": self.condition_number,
        })
    }
}

fn pilot_norms(
    estimator: &Estimator<'_>,
    training: &TrainingSet,
    n: u64,
    seed: u64,
    options: &InverseOptions,
) -> Result<PilotNorms, Failure> {
    if n == 0 {
        return Err(precondition("the pilot needs at least one sample"));
    }
    let pilot_seed = seed ^ PILOT_SEED_MIX;
    let set = SampleSet::random(estimator.template().num_params(), n as usize, pilot_seed)?;
    let r = regress(estimator, training, &[], &set, options)?;
    Ok(PilotNorms {
        n_samples: set.len(),
        seed: pilot_seed,
        norm_k_inv: r.inverse.inverse_norm(),
        norm_y: training.labels_vector().norm(),
        norm_k_inv_y: r.alpha.norm(),
        condition_number: r.condition_number(),
    })
}

fn feature_space_size(uniform: bool, bits: usize) -> Result<u64, Failure> {
    if !uniform {
        return Ok(1);
    }
    1u64
        .checked_shl(bits as u32)
        .filter(|_| bits < 64)
        .ok_or_else(|| precondition(format!("|X| = 2^{bits} is too large for the uniform bound")))
}

fn regression_json(r: &RegressionResult, std_errors: &[f64], training: &TrainingSet) -> Value {
    let queries: Vec<Value> = r
        .queries
        .iter()
        .zip(&r.mu_values)
        .zip(std_errors)
        .map(|((q, mu), se)| {
            json!({
                "x": q.to_string(),
                "mu": mu,
                "std_error": se,
                "training_label": training.position(q).map(|i| training.labels()[i]),
            })
        })
        .collect();
    json!({
        "queries": queries,
        "training_inputs": training.inputs().iter().map(ToString::to_string).collect::<Vec<_>>(),
        "gram": gram_json(&r.gram),
        "alpha": r.alpha.as_slice(),
        "inverse": {
            "method": format!("{:?}", r.inverse.method).to_lowercase(),
            "residual": r.inverse.residual,
            "condition_number": r.inverse.condition_number,
            "lambda_min": r.inverse.lambda_min,
            "lambda_max": r.inverse.lambda_max,
        },
    })
}

pub fn estimate_mu(a: &MuArgs) -> Result<(), Failure> {
    let template = load_circuit(&a.circuit)?;
    let training = load_training(&a.data, &template)?;
    let mut queries = parse_queries(&template, &a.query)?;
    dedup(&mut queries);
    check_targets(&a.sampling, &template)?;
    let options = InverseOptions {
        ridge: a.ridge,
        ..InverseOptions::default()
    };
    let (l, m) = (template.num_params(), template.observable().num_terms());
    let size = feature_space_size(a.uniform, template.input_width())?;

    let start = Instant::now();
    let estimator = Estimator::with_workers(&template, a.sampling.workers);
    let mut pilot = None;
    let samples = choose_samples(&a.sampling, l, |epsilon, delta| {
        let p = pilot_norms(&estimator, &training, a.pilot, a.sampling.seed, &options)?;
        let n = sample_size_mu(&MuSampleSizeInputs {
            epsilon,
            delta,
            num_params: l,
            num_terms: m,
            d_train: training.len(),
            norm_k_inv: p.norm_k_inv,
            norm_y: p.norm_y,
            norm_k_inv_y: p.norm_k_inv_y,
            feature_space_size: size,
        })?;
        pilot = Some(p);
        Ok(n)
    })?;
    let r = regress(&estimator, &training, &queries, &samples, &options)?;
    let std_errors = mu_std_errors(&estimator, &training, &r, &samples)?;
    let mut warnings: Vec<String> = r.inverse.warning.iter().cloned().collect();
    if let Some(w) = &r.inverse.warning {
        eprintln!("warning: {w}");
    }
    if a.ridge.is_some() {
        let w = "ridge regularization is on; results are regularized regression, not the plain kernel limit";
        eprintln!("warning: {w}");
        warnings.push(w.into());
    }
    let means = mean_checks(&estimator, &KernelTable::layout(&training, &queries), &samples, &mut warnings)?;

    let mut out = regression_json(&r, &std_errors, &training);
    let obj = out.as_object_mut().expect("regression output is an object");
    obj.insert("N".into(), json!(samples.len()));
    obj.insert("sampling".into(), json!(sampling_mode(&samples)));
    obj.insert("seed".into(), json!(samples.seed()));
    obj.insert("epsilon".into(), json!(a.sampling.epsilon));
    obj.insert("delta".into(), json!(a.sampling.delta));
    obj.insert("uniform_over_inputs".into(), json!(a.uniform));
    obj.insert("feature_space_size".into(), json!(size));
    obj.insert("regularized".into(), json!(a.ridge.is_some()));
    obj.insert("ridge".into(), json!(a.ridge));
    obj.insert("pilot".into(), pilot.as_ref().map_or(Value::Null, PilotNorms::json));
    obj.insert("mean_f".into(), means);
    obj.insert("warnings".into(), json!(warnings));
    obj.insert("elapsed_ms".into(), json!(elapsed_ms(start)));
    emit(&out, a.out.as_deref())
}

pub fn sample_size(a: &SampleSizeArgs) -> Result<(), Failure> {
    let template = a.circuit.as_deref().map(load_circuit).transpose()?;
    let num_params = a
        .num_params
        .or(template.as_ref().map(CircuitTemplate::num_params))
        .ok_or_else(|| precondition("L is unknown: give --params or --circuit"))?;
    let num_terms = a
        .num_terms
        .or(template.as_ref().map(|t| t.observable().num_terms()))
        .ok_or_else(|| precondition("m is unknown: give --terms or --circuit"))?;

    let out = match a.target {
        Target::Ntk => {
            let n = sample_size_ntk(a.epsilon, a.delta, num_params, num_terms)?;
            let l1 = template.as_ref().map(|t| t.observable().coefficient_l1());
            let n_l1 = l1
                .map(|c| sample_size_ntk_with_bound(a.epsilon, a.delta, num_params, c))
                .transpose()?;
            json!({
                "target": "ntk",
                "N": n,
                "coefficient_l1": l1,
                "N_coefficient_l1": n_l1,
                "epsilon": a.epsilon,
                "delta": a.delta,
                "L": num_params,
                "m": num_terms,
            })
        }
        Target::Mu => {
            let bits = match (&template, a.input_bits) {
                (_, Some(b)) => b as usize,
                (Some(t), None) => t.input_width(),
                (None, None) if a.uniform => {
                    return Err(precondition("the uniform bound needs --input-bits or --circuit"));
                }
                (None, None) => 0,
            };
            let size = feature_space_size(a.uniform, bits)?;
            let (pilot, d_train, norm_k_inv, norm_y, norm_k_inv_y) = match a.pilot {
                Some(n) => {
                    let template = template
                        .as_ref()
                        .ok_or_else(|| precondition("pilot mode needs --circuit"))?;
                    let data = a.data.as_deref().ok_or_else(|| precondition("pilot mode needs --data"))?;
                    let training = load_training(data, template)?;
                    let estimator = Estimator::with_workers(template, a.workers);
                    let p = pilot_norms(&estimator, &training, n, a.seed, &InverseOptions::default())?;
                    let (k, y, ky) = (p.norm_k_inv, p.norm_y, p.norm_k_inv_y);
                    (Some(p), training.len(), k, y, ky)
                }
                None => match (a.d_train, a.norm_k_inv, a.norm_y, a.norm_k_inv_y) {
                    (Some(d), Some(k), Some(y), Some(ky)) => (None, d, k, y, ky),
                    _ => {
                        return Err(precondition(
                            "the mu sample size needs --d-train, --norm-k-inv, --norm-y and --norm-k-inv-y, or --pilot",
                        ))
                    }
                },
            };
            let inputs = MuSampleSizeInputs {
                epsilon: a.epsilon,
                delta: a.delta,
                num_params,
                num_terms,
                d_train,
                norm_k_inv,
                norm_y,
                norm_k_inv_y,
                feature_space_size: size,
            };
            let n = sample_size_mu(&inputs)?;
            json!({
                "target": "mu",
                "N": n,
                "epsilon": a.epsilon,
                "delta": a.delta,
                "L": num_params,
                "m": num_terms,
                "d_train": d_train,
                "norm_k_inv": norm_k_inv,
                "norm_y": norm_y,
                "norm_k_inv_y": norm_k_inv_y,
                "R": inputs.r(),
                "epsilon_limit": inputs.epsilon_limit(),
                "feature_space_size": size,
                "pilot": pilot.as_ref().map_or(Value::Null, PilotNorms::json),
            })
        }
    };
    emit(&out, a.out.as_deref())
}

pub fn verify(a: &VerifyArgs) -> Result<(), Failure> {
    let mut config = VerifyConfig::default();
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(c) = a.cases {
        config.cases = c;
    }
    if let Some(t) = a.templates {
        config.templates = t;
    }
    config.inject_phase_fault = a.inject_phase_fault;
    let report = run_all(&config);
    print!("{}", report.table());
    if report.passed() {
        println!("all {} checks passed", report.checks.len());
        return Ok(());
    }
    let failed: Vec<String> = report
        .checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| match &c.first_failure {
            Some(f) => format!("{}: {} of {} cases failed, max error {:.3e}; first: {f}", c.name, c.failures, c.cases, c.max_error),
            None => format!("{}: {} of {} cases failed, max error {:.3e}", c.name, c.failures, c.cases, c.max_error),
        })
        .collect();
    Err(Failure::new(VERIFY_FAILED, format!("verification failed\n  {}", failed.join("\n  "))))
}

pub fn bench(a: &BenchArgs) -> Result<(), Failure> {
    let mut config = if a.quick { BenchConfig::quick() } else { BenchConfig::default() };
    if let Some(s) = a.seed {
        config.seed = s;
    }
    let report = bench::run(&config)?;
    match &a.out {
        Some(path) => std::fs::write(path, report.to_csv())
            .map_err(|e| Failure::new(VERIFY_FAILED, format!("cannot write {}: {e}", path.display())))?,
        None => print!("{}", report.to_csv()),
    }
    print!("{}", report.summary());
    Ok(())
}

//! Wall-clock scaling sweeps for model evaluation and NTK estimation.
//!
//! Every point is timed serially. A measurement repeats the workload until a
//! minimum duration has elapsed and reports the time per unit of work; the
//! minimum over several such measurements is kept to suppress scheduler noise.

use std::fmt::Write as _;
use std::hint::black_box;
use std::time::{Duration, Instant};

use crate::circuit::{InputPoint, ParameterVector};
use crate::error::Result;
use crate::estimator::{Estimator, SampleSet};
use crate::oracle::random::{random_template, random_theta, rng_from_seed, RandomTemplateSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sweep {
    Qubits,
    Params,
    Terms,
    Samples,
}

impl Sweep {
    pub fn name(self) -> &'static str {
        match self {
            Sweep::Qubits => "n",
            Sweep::Params => "L",
            Sweep::Terms => "m",
            Sweep::Samples => "N",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub qubits: Vec<usize>,
    pub params: Vec<usize>,
    pub terms: Vec<usize>,
    pub samples: Vec<usize>,
    /// Values held fixed while another axis is swept.
    pub base_qubits: usize,
    pub base_params: usize,
    pub base_terms: usize,
    pub repeats: usize,
    pub min_duration: Duration,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            qubits: vec![8, 16, 32, 64, 128],
            params: vec![8, 16, 32, 64, 128],
            terms: vec![2, 4, 8, 16, 32],
            samples: vec![250, 500, 1000, 2000, 4000],
            base_qubits: 16,
            base_params: 16,
            base_terms: 4,
            repeats: 5,
            min_duration: Duration::from_millis(20),
            seed: 2024,
        }
    }
}

impl BenchConfig {
    /// A much shorter sweep for smoke tests.
    pub fn quick() -> Self {
        Self {
            qubits: vec![8, 16, 32],
            params: vec![4, 8, 16],
            terms: vec![1, 2, 4],
            samples: vec![50, 100, 200],
            base_qubits: 8,
            base_params: 4,
            base_terms: 2,
            repeats: 1,
            min_duration: Duration::from_millis(1),
            seed: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchRow {
    pub sweep: Sweep,
    pub qubits: usize,
    pub params: usize,
    pub terms: usize,
    pub samples: usize,
    /// Seconds per model evaluation, or per complete estimate for the `N` sweep.
    pub seconds: f64,
}

impl BenchRow {
    fn x(&self) -> f64 {
        (match self.sweep {
            Sweep::Qubits => self.qubits,
            Sweep::Params => self.params,
            Sweep::Terms => self.terms,
            Sweep::Samples => self.samples,
        }) as f64
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

impl BenchReport {
    pub fn rows_for(&self, sweep: Sweep) -> impl Iterator<Item = &BenchRow> {
        self.rows.iter().filter(move |r| r.sweep == sweep)
    }

    /// Fitted log-log exponent of one sweep, `None` with fewer than two points.
    pub fn exponent(&self, sweep: Sweep) -> Option<f64> {
        let pts: Vec<_> = self.rows_for(sweep).map(|r| (r.x(), r.seconds)).collect();
        (pts.len() >= 2).then(|| loglog_slope(&pts))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("sweep,n,L,m,N,seconds\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{:.16e}",
                r.sweep.name(),
                r.qubits,
                r.params,
                r.terms,
                r.samples,
                r.seconds
            )
            .expect("writing to a string");
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for s in [Sweep::Qubits, Sweep::Params, Sweep::Terms, Sweep::Samples] {
            if let Some(e) = self.exponent(s) {
                writeln!(out, "exponent in {}: {e:.3}", s.name()).expect("writing to a string");
            }
        }
        out
    }
}

/// Seconds per call of `work`, minimum over `repeats` measurements.
fn time_per_call(repeats: usize, min_duration: Duration, mut work: impl FnMut() -> Result<()>) -> Result<f64> {
    work()?;
    let mut best = f64::INFINITY;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let mut calls = 0u64;
        while calls == 0 || start.elapsed() < min_duration {
            work()?;
            calls += 1;
        }
        best = best.min(start.elapsed().as_secs_f64() / calls as f64);
    }
    Ok(best)
}

fn time_evaluation(config: &BenchConfig, n: usize, l: usize, m: usize) -> Result<f64> {
    let template = random_template(&RandomTemplateSpec::new(n, l, m), config.seed ^ (n * 1_000_003 + l * 1009 + m) as u64);
    let circuit = template.instantiate(&InputPoint::empty())?;
    let mut rng = rng_from_seed(config.seed);
    let thetas: Vec<ParameterVector> = (0..64).map(|_| random_theta(l, &mut rng)).collect();
    let mut i = 0;
    time_per_call(config.repeats, config.min_duration, || {
        black_box(circuit.evaluate(&thetas[i % thetas.len()])?);
        i += 1;
        Ok(())
    })
}

fn time_estimate(config: &BenchConfig, samples: usize) -> Result<f64> {
    let (n, l, m) = (config.base_qubits, config.base_params, config.base_terms);
    let template = random_template(&RandomTemplateSpec::new(n, l, m), config.seed);
    let estimator = Estimator::with_workers(&template, 1);
    let set = SampleSet::random(l, samples, config.seed)?;
    let x = InputPoint::empty();
    time_per_call(config.repeats, config.min_duration, || {
        black_box(estimator.estimate_ntk(&x, &x, &set)?);
        Ok(())
    })
}

pub fn run(config: &BenchConfig) -> Result<BenchReport> {
    let (bn, bl, bm) = (config.base_qubits, config.base_params, config.base_terms);
    let mut rows = Vec::new();
    let mut push = |sweep, qubits, params, terms, samples, seconds| {
        rows.push(BenchRow {
            sweep,
            qubits,
            params,
            terms,
            samples,
            seconds,
        })
    };
    for &n in &config.qubits {
        push(Sweep::Qubits, n, bl, bm, 1, time_evaluation(config, n, bl, bm)?);
    }
    for &l in &config.params {
        push(Sweep::Params, bn, l, bm, 1, time_evaluation(config, bn, l, bm)?);
    }
    for &m in &config.terms {
        push(Sweep::Terms, bn, bl, m, 1, time_evaluation(config, bn, bl, m)?);
    }
    for &s in &config.samples {
        push(Sweep::Samples, bn, bl, bm, s, time_estimate(config, s)?);
    }
    Ok(BenchReport { rows })
}

//! Scalar Gaussian mixtures fitted by expectation-maximization, used as
//! point forecasters for solar arrivals and channel gains.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gmm {
    pub components: Vec<Component>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub gmm: Gmm,
    /// Mean per-sample log-likelihood after initialization and after each
    /// EM iteration.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
}

fn log_normal_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * ((2.0 * std::f64::consts::PI * variance).ln() + d * d / variance)
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

impl Gmm {
    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::Fit("mixture has no components".into()));
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 || self.components.iter().any(|c| c.weight < 0.0) {
            return Err(Error::Fit(format!("weights sum to {total}")));
        }
        if self.components.iter().any(|c| !(c.variance > 0.0)) {
            return Err(Error::Fit("non-positive variance".into()));
        }
        Ok(())
    }

    pub fn predict_mean(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.mean).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * (c.variance + c.mean * c.mean))
            .sum()
    }

    /// Constant point forecast over `k` slots, clamped at zero.
    pub fn predict_window(&self, k: usize) -> Vec<f64> {
        vec![self.predict_mean().max(0.0); k]
    }

    pub fn mean_log_likelihood(&self, samples: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.components.len()];
        let total: f64 = samples
            .iter()
            .map(|&x| {
                for (b, c) in buf.iter_mut().zip(&self.components) {
                    *b = c.weight.ln() + log_normal_pdf(x, c.mean, c.variance);
                }
                log_sum_exp(&buf)
            })
            .sum();
        total / samples.len() as f64
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.components.last().expect("non-empty mixture");
        for c in &self.components {
            acc += c.weight;
            if u < acc {
                chosen = c;
                break;
            }
        }
        Normal::new(chosen.mean, chosen.variance.sqrt())
            .expect("finite parameters")
            .sample(rng)
    }

    /// One `weight mean variance` line per component.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.components {
            writeln!(s, "{} {} {}", c.weight, c.mean, c.variance).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut components = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let fields: Vec<&str> = raw.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line: n + 1,
                    message: format!("bad number {s:?}"),
                })
            };
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: n + 1,
                    message: "expected `weight mean variance`".into(),
                });
            }
            components.push(Component {
                weight: parse(fields[0])?,
                mean: parse(fields[1])?,
                variance: parse(fields[2])?,
            });
        }
        let gmm = Gmm { components };
        gmm.validate()?;
        Ok(gmm)
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

pub fn fit_gmm(samples: &[f64], n_components: usize, max_iterations: usize, tolerance: f64) -> Result<Gmm> {
    fit_gmm_traced(samples, n_components, max_iterations, tolerance).map(|r| r.gmm)
}

pub fn fit_gmm_traced(
    samples: &[f64],
    n_components: usize,
    max_iterations: usize,
    tolerance: f64,
) -> Result<FitReport> {
    if n_components == 0 {
        return Err(Error::Fit("need at least one component".into()));
    }
    if samples.len() < n_components {
        return Err(Error::Fit(format!(
            "{} samples cannot fit {n_components} components",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Fit("samples must be finite".into()));
    }
    let n = samples.len();
    let k = n_components;
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mean = samples.iter().sum::<f64>() / n as f64;
    let pooled = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).max(VARIANCE_FLOOR);
    let mut gmm = Gmm {
        components: (1..=k)
            .map(|j| Component {
                weight: 1.0 / k as f64,
                mean: quantile(&sorted, j as f64 / (k + 1) as f64),
                variance: pooled,
            })
            .collect(),
    };

    let mut history = vec![gmm.mean_log_likelihood(samples)];
    let mut resp = vec![0.0; n * k];
    let mut logs = vec![0.0; k];
    let mut iterations = 0;
    for _ in 0..max_iterations {
        // E step
        for (x_idx, &x) in samples.iter().enumerate() {
            for (l, c) in logs.iter_mut().zip(&gmm.components) {
                *l = c.weight.ln() + log_normal_pdf(x, c.mean, c.variance);
            }
            let norm = log_sum_exp(&logs);
            for j in 0..k {
                resp[x_idx * k + j] = (logs[j] - norm).exp();
            }
        }
        // M step
        let mut next = Vec::with_capacity(k);
        for j in 0..k {
            let nk: f64 = (0..n).map(|i| resp[i * k + j]).sum();
            if nk <= f64::MIN_POSITIVE {
                // starved component keeps its parameters with zero weight
                next.push(Component {
                    weight: 0.0,
                    ..gmm.components[j]
                });
                continue;
            }
            let mu = (0..n).map(|i| resp[i * k + j] * samples[i]).sum::<f64>() / nk;
            let var = (0..n)
                .map(|i| resp[i * k + j] * (samples[i] - mu).powi(2))
                .sum::<f64>()
                / nk;
            next.push(Component {
                weight: nk / n as f64,
                mean: mu,
                variance: var.max(VARIANCE_FLOOR),
            });
        }
        let total: f64 = next.iter().map(|c| c.weight).sum();
        for c in &mut next {
            c.weight /= total;
        }
        gmm = Gmm { components: next };
        iterations += 1;
        let ll = gmm.mean_log_likelihood(samples);
        let prev = *history.last().expect("initial entry");
        history.push(ll);
        if ll - prev < tolerance {
            break;
        }
    }
    Ok(FitReport {
        gmm,
        log_likelihood: history,
        iterations,
    })
}

//! Sample summaries and goodness-of-fit distances.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStat {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
    pub ci95: (f64, f64),
}

impl SummaryStat {
    /// `|mean - target| / se`; zero-variance samples give 0 on target and
    /// infinity otherwise.
    pub fn z_against(&self, target: f64) -> f64 {
        let gap = (self.mean - target).abs();
        if self.se > 0.0 {
            gap / self.se
        } else if gap == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Mean, unbiased standard deviation, standard error and 95% interval.
pub fn summarize(samples: &[f64]) -> Result<SummaryStat> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    let sd = (ss / (nf - 1.0)).sqrt();
    let se = sd / nf.sqrt();
    Ok(SummaryStat {
        n,
        mean,
        sd,
        se,
        ci95: (mean - 1.96 * se, mean + 1.96 * se),
    })
}

/// Two-sided Kolmogorov–Smirnov distance between the empirical distribution
/// of `samples` and a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Standard error of a difference of two independent estimates.
pub fn pooled_se(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

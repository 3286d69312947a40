//! Small empirical-distribution helpers used by the simulation studies.

use std::io::Write;

use serde::Serialize;

/// Kolmogorov-Smirnov distance sup |F_n(x) - F(x)| between the empirical
/// distribution of `samples` and a continuous reference CDF.
///
/// NaN samples sort last and count as lying beyond every finite point.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        if x.is_nan() {
            d = d.max(1.0 - i as f64 / n);
            break;
        }
        let f = cdf(x).clamp(0.0, 1.0);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

pub fn ks_uniform(samples: &[f64]) -> f64 {
    ks_distance(samples, |x| x.clamp(0.0, 1.0))
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Fraction of `values` strictly below `threshold`.
pub fn fraction_below(values: &[f64], threshold: f64) -> f64 {
    values.iter().filter(|&&v| v < threshold).count() as f64 / values.len() as f64
}

/// Equal-width histogram on `[lo, hi)`; values outside are tallied
/// separately so that densities stay normalised by the full sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub below: u64,
    pub above: u64,
}

impl Histogram {
    pub fn new(values: &[f64], lo: f64, hi: f64, bins: usize) -> Histogram {
        assert!(bins > 0 && hi > lo, "histogram needs bins > 0 and hi > lo");
        let mut h = Histogram {
            lo,
            hi,
            counts: vec![0; bins],
            below: 0,
            above: 0,
        };
        let width = (hi - lo) / bins as f64;
        for &v in values {
            if v < lo {
                h.below += 1;
            } else if v >= hi || v.is_nan() {
                h.above += 1;
            } else {
                let k = (((v - lo) / width) as usize).min(bins - 1);
                h.counts[k] += 1;
            }
        }
        h
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins() as f64
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.below + self.above
    }

    pub fn edges(&self, k: usize) -> (f64, f64) {
        let w = self.width();
        (self.lo + k as f64 * w, self.lo + (k + 1) as f64 * w)
    }

    /// Count divided by total and bin width.
    pub fn density(&self, k: usize) -> f64 {
        self.counts[k] as f64 / (self.total() as f64 * self.width())
    }

    /// `bin_lo,bin_hi,count,density,reference` where the reference column
    /// holds `reference` evaluated at the bin centre.
    pub fn write_csv<W: Write, F: Fn(f64) -> f64>(&self, reference: F, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_lo,bin_hi,count,density,reference")?;
        for k in 0..self.bins() {
            let (a, b) = self.edges(k);
            writeln!(
                out,
                "{a},{b},{},{},{}",
                self.counts[k],
                self.density(k),
                reference(0.5 * (a + b))
            )?;
        }
        Ok(())
    }
}

//! Streaming moments, histograms and comparison against theory.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Divisor used when turning `m2` into a variance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceMode {
    /// `m2 / (count - 1)`, for random samples.
    Sample,
    /// `m2 / count`, when the whole ensemble has been observed.
    Population,
}

/// One-pass central moments up to fourth order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantSummary {
    pub count: u64,
    pub mean: f64,
    /// Sum of squared deviations from the mean.
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for CumulantSummary {
    fn default() -> Self {
        Self {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            m3: 0.0,
            m4: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl CumulantSummary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_values<I: IntoIterator<Item = f64>>(values: I) -> Result<Self> {
        let mut s = Self::new();
        for x in values {
            s.push(x)?;
        }
        Ok(s)
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn push(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        let n1 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        let dn = delta / n;
        let dn2 = dn * dn;
        let term1 = delta * dn * n1;
        self.mean += dn;
        self.m4 += term1 * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * self.m2 - 4.0 * dn * self.m3;
        self.m3 += term1 * dn * (n - 2.0) - 3.0 * dn * self.m2;
        self.m2 += term1;
        self.min = self.min.min(x);
        self.max = self.max.max(x);
        Ok(())
    }

    /// Summary of the concatenation of both streams.
    pub fn merge(&self, other: &Self) -> Self {
        if other.count == 0 {
            return *self;
        }
        if self.count == 0 {
            return *other;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let d = other.mean - self.mean;
        let d2 = d * d;
        let mean = self.mean + d * nb / n;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 = self.m3
            + other.m3
            + d2 * d * na * nb * (na - nb) / (n * n)
            + 3.0 * d * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * d * (na * other.m3 - nb * self.m3) / n;
        Self {
            count: self.count + other.count,
            mean,
            m2,
            m3,
            m4,
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    pub fn variance(&self, mode: VarianceMode) -> f64 {
        match mode {
            VarianceMode::Sample if self.count >= 2 => self.m2 / (self.count - 1) as f64,
            VarianceMode::Population if self.count >= 1 => self.m2 / self.count as f64,
            _ => f64::NAN,
        }
    }

    pub fn sample_variance(&self) -> f64 {
        self.variance(VarianceMode::Sample)
    }

    pub fn population_variance(&self) -> f64 {
        self.variance(VarianceMode::Population)
    }

    /// Standard error of the mean from the sample variance.
    pub fn stderr(&self) -> f64 {
        (self.sample_variance() / self.count as f64).sqrt()
    }

    /// Moment skewness `sqrt(count) m3 / m2^{3/2}`.
    pub fn skewness(&self) -> f64 {
        (self.count as f64).sqrt() * self.m3 / self.m2.powf(1.5)
    }

    /// Moment excess kurtosis `count m4 / m2^2 - 3`.
    pub fn excess_kurtosis(&self) -> f64 {
        self.count as f64 * self.m4 / (self.m2 * self.m2) - 3.0
    }
}

/// Comparison of an empirical summary with predicted mean and variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZReport {
    pub count: u64,
    pub mean: f64,
    pub theory_mean: f64,
    pub stderr: f64,
    /// `(mean - theory_mean) / stderr`.
    pub z: f64,
    pub variance: f64,
    pub theory_variance: f64,
    pub variance_ratio: f64,
    pub variance_mode: VarianceMode,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl ZReport {
    /// `|z| < z_max` and `|variance_ratio - 1| <= var_tol`.
    pub fn passes(&self, z_max: f64, var_tol: f64) -> bool {
        self.z.abs() < z_max && (self.variance_ratio - 1.0).abs() <= var_tol
    }
}

pub fn zscore_report(
    summary: &CumulantSummary,
    theory_mean: f64,
    theory_var: f64,
    mode: VarianceMode,
) -> Result<ZReport> {
    if summary.count < 2 {
        return Err(Error::TooFewObservations {
            need: 2,
            have: summary.count,
        });
    }
    let stderr = summary.stderr();
    let diff = summary.mean - theory_mean;
    let z = if diff == 0.0 { 0.0 } else { diff / stderr };
    let variance = summary.variance(mode);
    Ok(ZReport {
        count: summary.count,
        mean: summary.mean,
        theory_mean,
        stderr,
        z,
        variance,
        theory_variance: theory_var,
        variance_ratio: variance / theory_var,
        variance_mode: mode,
        skewness: summary.skewness(),
        excess_kurtosis: summary.excess_kurtosis(),
    })
}

/// Fixed-width histogram over `[lo, hi)` with out-of-range tallies.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi && bins >= 1) {
            return Err(Error::HistogramRange { lo, hi, bins });
        }
        Ok(Self {
            lo,
            hi,
            bins,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        })
    }

    pub fn push(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        if x < self.lo {
            self.underflow += 1;
        } else if x >= self.hi {
            self.overflow += 1;
        } else {
            let pos = (x - self.lo) / (self.hi - self.lo) * self.bins as f64;
            let bin = (pos as usize).min(self.bins - 1);
            self.counts[bin] += 1;
        }
        Ok(())
    }

    /// Adds another histogram with the same geometry.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if (self.lo, self.hi, self.bins) != (other.lo, other.hi, other.bins) {
            return Err(Error::HistogramRange {
                lo: other.lo,
                hi: other.hi,
                bins: other.bins,
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    pub fn bin_left(&self, i: usize) -> f64 {
        self.lo + (self.hi - self.lo) * i as f64 / self.bins as f64
    }

    pub fn occupied_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

pub fn histogram_build<I: IntoIterator<Item = f64>>(
    values: I,
    lo: f64,
    hi: f64,
    bins: usize,
) -> Result<Histogram> {
    let mut h = Histogram::new(lo, hi, bins)?;
    for x in values {
        h.push(x)?;
    }
    Ok(h)
}

/// Descriptive fields written into the histogram CSV preamble.
#[derive(Clone, Debug, PartialEq)]
pub struct HistogramMeta {
    pub n: u32,
    pub ensemble: String,
    pub statistic: String,
    pub seed: u64,
    pub stream: u64,
    pub samples: u64,
    pub version: String,
}

/// Writes a two-line preamble (`lo,hi,bins,n,ensemble,statistic,...` and
/// its values) followed by a `bin_left,count` table.
pub fn write_histogram_csv<W: Write>(out: W, hist: &Histogram, meta: &HistogramMeta) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    w.write_record([
        "lo",
        "hi",
        "bins",
        "n",
        "ensemble",
        "statistic",
        "underflow",
        "overflow",
        "seed",
        "stream",
        "samples",
        "version",
    ])?;
    w.write_record([
        hist.lo.to_string(),
        hist.hi.to_string(),
        hist.bins.to_string(),
        meta.n.to_string(),
        meta.ensemble.clone(),
        meta.statistic.clone(),
        hist.underflow.to_string(),
        hist.overflow.to_string(),
        meta.seed.to_string(),
        meta.stream.to_string(),
        meta.samples.to_string(),
        meta.version.clone(),
    ])?;
    w.write_record(["bin_left", "count"])?;
    for (i, c) in hist.counts.iter().enumerate() {
        w.write_record([hist.bin_left(i).to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Serialises `value` as one JSON line.
pub fn write_jsonl<W: Write, T: Serialize>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

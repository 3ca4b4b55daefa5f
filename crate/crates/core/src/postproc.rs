//! Moments and output distributions from a fitted PCE, plus the robust spread
//! measure used to compare against Monte Carlo.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::eval_multivariate;
use crate::design::mcs_design;
use crate::error::{Error, Result};
use crate::regression::PceModel;
use crate::rng::derive_seed;

/// Normal-consistency factor of the median absolute deviation.
pub const MAD_SCALE: f64 = 1.4826;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentSource {
    PceAnalytic,
    McsEmpirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub mean: f64,
    pub std: f64,
    pub three_sigma_lower: f64,
    pub source: MomentSource,
}

impl MomentReport {
    pub fn new(mean: f64, std: f64, source: MomentSource) -> Self {
        let std = std.max(0.0);
        MomentReport { mean, std, three_sigma_lower: mean - 3.0 * std, source }
    }

    /// Analytic moments of a PCE.
    pub fn from_pce(m: &PceModel) -> Self {
        Self::new(pce_mean(m), pce_variance(m).sqrt(), MomentSource::PceAnalytic)
    }

    /// Sample mean and robust spread of Monte Carlo outputs.
    pub fn from_samples(data: &[f64], scaled: bool) -> Result<Self> {
        let std = robust_std(data, scaled)?;
        let mean = data.iter().sum::<f64>() / data.len() as f64;
        Ok(Self::new(mean, std, MomentSource::McsEmpirical))
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["mean", "std", "three_sigma_lower", "source"])?;
        let source = match self.source {
            MomentSource::PceAnalytic => "pce",
            MomentSource::McsEmpirical => "mcs",
        };
        wr.write_record([self.mean.to_string(), self.std.to_string(), self.three_sigma_lower.to_string(), source.to_string()])?;
        wr.flush()?;
        Ok(())
    }
}

/// Coefficient of the zero multi-index.
pub fn pce_mean(m: &PceModel) -> f64 {
    m.basis.indices.iter().zip(&m.coefficients).find(|(a, _)| a.is_zero()).map_or(0.0, |(_, c)| *c)
}

/// Sum of squared coefficients over all non-constant terms.
pub fn pce_variance(m: &PceModel) -> f64 {
    m.basis.indices.iter().zip(&m.coefficients).filter(|(a, _)| !a.is_zero()).map(|(_, c)| c * c).sum()
}

const BATCH: usize = 4096;

/// Evaluates the expansion on `n` Monte Carlo draws from its input law.
/// Batches use derived seeds so the result does not depend on thread count.
pub fn surrogate_sample(m: &PceModel, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Size { needed: 1, got: 0 });
    }
    let n_batches = n.div_ceil(BATCH);
    let batches: Result<Vec<Vec<f64>>> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let len = BATCH.min(n - b * BATCH);
            let d = mcs_design(&m.joint, len, derive_seed(&[seed, b as u64]))?;
            d.samples
                .iter()
                .map(|x| {
                    let psi = eval_multivariate(&m.basis, &m.recurrences, x)?;
                    Ok(psi.iter().zip(&m.coefficients).map(|(p, c)| p * c).sum())
                })
                .collect()
        })
        .collect();
    Ok(batches?.concat())
}

fn median_of(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn median(data: &[f64]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Size { needed: 1, got: 0 });
    }
    Ok(median_of(&mut data.to_vec()))
}

/// Median absolute deviation about the median, multiplied by [`MAD_SCALE`]
/// when `scaled` is set.
pub fn robust_std(data: &[f64], scaled: bool) -> Result<f64> {
    if data.len() < 2 {
        return Err(Error::Size { needed: 2, got: data.len() });
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("non-finite value in sample".into()));
    }
    let med = median_of(&mut data.to_vec());
    let mut dev: Vec<f64> = data.iter().map(|x| (x - med).abs()).collect();
    let mad = median_of(&mut dev);
    Ok(if scaled { MAD_SCALE * mad } else { mad })
}

/// Writes a single-column CSV of output samples.
pub fn write_samples_csv<W: Write>(w: W, column: &str, data: &[f64]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([column])?;
    for x in data {
        wr.write_record([x.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

use super::quadrature::composite_gauss_legendre;

/// Gauss-Legendre nodes per panel in the discretization of continuous marginals.
const PANEL_ORDER: usize = 16;
/// Panels per unit of polynomial degree (so N_q = 256 * p_max nodes).
const PANELS_PER_DEGREE: usize = 16;
/// Half-width of the truncated Gaussian discretization, in standard deviations.
const GAUSSIAN_SPAN: f64 = 12.0;

/// Marginal distribution of one input (a component failure time, in hours).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MarginalRepr", into = "MarginalRepr")]
pub enum Marginal {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Gaussian {
        mean: f64,
        std: f64,
    },
    /// Atoms on whole hours. Probabilities sum to one.
    DiscreteHourly {
        hours: Vec<u32>,
        probs: Vec<f64>,
    },
    /// Weighted atoms on arbitrary sorted support values. Weights sum to one.
    Empirical {
        values: Vec<f64>,
        weights: Vec<f64>,
    },
}

impl Marginal {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!("uniform needs finite lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Marginal::Uniform { lo, hi })
    }

    pub fn gaussian(mean: f64, std: f64) -> Result<Self> {
        if !(mean.is_finite() && std.is_finite() && std > 0.0) {
            return Err(Error::InvalidParameter(format!("gaussian needs finite mean and std > 0, got ({mean}, {std})")));
        }
        Ok(Marginal::Gaussian { mean, std })
    }

    /// Discrete measure on whole hours. `hours` must be strictly increasing;
    /// `probs` are renormalized to sum to one.
    pub fn discrete_hourly(hours: Vec<u32>, probs: Vec<f64>) -> Result<Self> {
        if hours.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("discrete hours must be strictly increasing".into()));
        }
        let probs = normalize_weights(probs, hours.len())?;
        Ok(Marginal::DiscreteHourly { hours, probs })
    }

    /// Discrete measure on arbitrary support values, sorted ascending.
    pub fn empirical(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("empirical support must be finite and strictly increasing".into()));
        }
        let weights = normalize_weights(weights, values.len())?;
        Ok(Marginal::Empirical { values, weights })
    }

    /// Equally weighted empirical marginal built from raw data.
    pub fn from_samples(data: &[f64]) -> Result<Self> {
        let mut sorted: Vec<f64> = data.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut values: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for v in sorted {
            match values.last() {
                Some(&last) if last == v => *weights.last_mut().unwrap() += 1.0,
                _ => {
                    values.push(v);
                    weights.push(1.0);
                }
            }
        }
        Self::empirical(values, weights)
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, Marginal::Uniform { .. } | Marginal::Gaussian { .. })
    }

    /// Closed support interval; unbounded for Gaussian.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Marginal::Uniform { lo, hi } => (*lo, *hi),
            Marginal::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Marginal::DiscreteHourly { hours, .. } => (hours[0] as f64, *hours.last().unwrap() as f64),
            Marginal::Empirical { values, .. } => (values[0], *values.last().unwrap()),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = self.support();
        x >= lo && x <= hi
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Marginal::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Marginal::Gaussian { mean, std } => normal(*mean, *std).cdf(x),
            Marginal::DiscreteHourly { .. } | Marginal::Empirical { .. } => {
                self.atoms().filter(|(v, _)| *v <= x).map(|(_, p)| p).sum::<f64>().min(1.0)
            }
        }
    }

    /// Inverse CDF. For discrete kinds, the smallest atom whose cumulative
    /// mass reaches `u` (atoms without mass are skipped).
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain(format!("quantile probability {u} outside [0, 1]")));
        }
        Ok(match self {
            Marginal::Uniform { lo, hi } => lo + u * (hi - lo),
            Marginal::Gaussian { mean, std } => {
                if u == 0.0 {
                    f64::NEG_INFINITY
                } else if u == 1.0 {
                    f64::INFINITY
                } else {
                    normal(*mean, *std).inverse_cdf(u)
                }
            }
            Marginal::DiscreteHourly { .. } | Marginal::Empirical { .. } => {
                let mut cum = 0.0;
                let mut last = f64::NAN;
                for (v, p) in self.atoms().filter(|(_, p)| *p > 0.0) {
                    cum += p;
                    last = v;
                    if cum >= u {
                        return Ok(v);
                    }
                }
                // cumulative rounding fell just short of u = 1
                last
            }
        })
    }

    pub fn mean(&self) -> f64 {
        match self {
            Marginal::Uniform { lo, hi } => 0.5 * (lo + hi),
            Marginal::Gaussian { mean, .. } => *mean,
            _ => self.atoms().map(|(v, p)| v * p).sum(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Marginal::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            Marginal::Gaussian { std, .. } => std * std,
            _ => {
                let m = self.mean();
                self.atoms().map(|(v, p)| p * (v - m).powi(2)).sum()
            }
        }
    }

    /// Number of atoms with positive mass (`None` for continuous kinds).
    pub fn n_atoms(&self) -> Option<usize> {
        match self {
            Marginal::DiscreteHourly { probs, .. } => Some(probs.iter().filter(|p| **p > 0.0).count()),
            Marginal::Empirical { weights, .. } => Some(weights.iter().filter(|p| **p > 0.0).count()),
            _ => None,
        }
    }

    /// Discrete probability measure (nodes, weights summing to one) that
    /// integrates polynomials of degree <= 2 * p_max + 1 against this marginal
    /// to near machine precision (exactly, for discrete kinds).
    pub fn discretize(&self, p_max: usize) -> (Vec<f64>, Vec<f64>) {
        let panels = PANELS_PER_DEGREE * p_max.max(1);
        match self {
            Marginal::Uniform { lo, hi } => {
                let (x, w) = composite_gauss_legendre(*lo, *hi, panels, PANEL_ORDER);
                let len = hi - lo;
                (x, w.into_iter().map(|w| w / len).collect())
            }
            Marginal::Gaussian { mean, std } => {
                let (z, w) = composite_gauss_legendre(-GAUSSIAN_SPAN, GAUSSIAN_SPAN, panels, PANEL_ORDER);
                let dens = normal(0.0, 1.0);
                let mut w: Vec<f64> = z.iter().zip(&w).map(|(z, w)| w * dens.pdf(*z)).collect();
                let total: f64 = w.iter().sum();
                w.iter_mut().for_each(|w| *w /= total);
                (z.iter().map(|z| mean + std * z).collect(), w)
            }
            _ => self.atoms().filter(|(_, p)| *p > 0.0).unzip(),
        }
    }

    fn atoms(&self) -> Box<dyn Iterator<Item = (f64, f64)> + '_> {
        match self {
            Marginal::DiscreteHourly { hours, probs } => Box::new(hours.iter().map(|h| *h as f64).zip(probs.iter().copied())),
            Marginal::Empirical { values, weights } => Box::new(values.iter().copied().zip(weights.iter().copied())),
            _ => Box::new(std::iter::empty()),
        }
    }
}

fn normal(mean: f64, std: f64) -> Normal {
    Normal::new(mean, std).expect("validated at construction")
}

fn normalize_weights(weights: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    if weights.len() != n || n == 0 {
        return Err(Error::InvalidParameter(format!("need {n} > 0 weights, got {}", weights.len())));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidParameter("weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidParameter("weights sum to zero".into()));
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Independent inputs; the joint density is the product of the marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointInput {
    marginals: Vec<Marginal>,
}

impl JointInput {
    pub fn new(marginals: Vec<Marginal>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::InvalidParameter("joint input needs at least one marginal".into()));
        }
        Ok(JointInput { marginals })
    }

    /// `dim` copies of the same marginal.
    pub fn iid(marginal: Marginal, dim: usize) -> Result<Self> {
        Self::new(vec![marginal; dim])
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn marginal(&self, i: usize) -> &Marginal {
        &self.marginals[i]
    }
}

// --- JSON form: {kind, params, support} ---

#[derive(Serialize, Deserialize)]
struct MarginalRepr {
    kind: String,
    params: serde_json::Map<String, serde_json::Value>,
    #[serde(default, skip_deserializing)]
    support: Option<[Option<f64>; 2]>,
}

impl From<Marginal> for MarginalRepr {
    fn from(m: Marginal) -> Self {
        let (lo, hi) = m.support();
        let finite = |v: f64| v.is_finite().then_some(v);
        let support = Some([finite(lo), finite(hi)]);
        let mut params = serde_json::Map::new();
        let kind = match m {
            Marginal::Uniform { lo, hi } => {
                params.insert("lo".into(), lo.into());
                params.insert("hi".into(), hi.into());
                "uniform"
            }
            Marginal::Gaussian { mean, std } => {
                params.insert("mean".into(), mean.into());
                params.insert("std".into(), std.into());
                "gaussian"
            }
            Marginal::DiscreteHourly { hours, probs } => {
                params.insert("hours".into(), hours.into());
                params.insert("probs".into(), probs.into());
                "discrete_hourly"
            }
            Marginal::Empirical { values, weights } => {
                params.insert("values".into(), values.into());
                params.insert("weights".into(), weights.into());
                "empirical"
            }
        };
        MarginalRepr { kind: kind.into(), params, support }
    }
}

impl TryFrom<MarginalRepr> for Marginal {
    type Error = String;

    fn try_from(r: MarginalRepr) -> std::result::Result<Self, String> {
        fn get<T: serde::de::DeserializeOwned>(r: &MarginalRepr, key: &str) -> std::result::Result<T, String> {
            let v = r.params.get(key).ok_or_else(|| format!("{} marginal is missing param `{key}`", r.kind))?;
            serde_json::from_value(v.clone()).map_err(|e| format!("param `{key}`: {e}"))
        }
        let m = match r.kind.as_str() {
            "uniform" => Marginal::uniform(get(&r, "lo")?, get(&r, "hi")?),
            "gaussian" => Marginal::gaussian(get(&r, "mean")?, get(&r, "std")?),
            "discrete_hourly" => Marginal::discrete_hourly(get(&r, "hours")?, get(&r, "probs")?),
            "empirical" => Marginal::empirical(get(&r, "values")?, get(&r, "weights")?),
            other => return Err(format!("unknown marginal kind `{other}`")),
        };
        m.map_err(|e| e.to_string())
    }
}

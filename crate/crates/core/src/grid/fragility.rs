//! Fragility curves, hourly weather profiles and the failure-time law of an
//! exposed branch.

use serde::{Deserialize, Serialize};

use crate::distributions::Marginal;
use crate::error::{Error, Result};

use super::case::NetworkCase;

/// Piecewise-linear map from wind speed (m/s) to hourly failure probability,
/// held constant outside the breakpoint range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FragilityRepr", into = "FragilityRepr")]
pub struct FragilityCurve {
    wind: Vec<f64>,
    prob: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FragilityRepr {
    breakpoints: Vec<[f64; 2]>,
}

impl TryFrom<FragilityRepr> for FragilityCurve {
    type Error = Error;
    fn try_from(r: FragilityRepr) -> Result<Self> {
        FragilityCurve::new(r.breakpoints.iter().map(|p| (p[0], p[1])).collect())
    }
}

impl From<FragilityCurve> for FragilityRepr {
    fn from(f: FragilityCurve) -> Self {
        FragilityRepr { breakpoints: f.wind.iter().zip(&f.prob).map(|(w, p)| [*w, *p]).collect() }
    }
}

impl FragilityCurve {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::InvalidParameter("fragility curve needs at least one breakpoint".into()));
        }
        for (i, &(w, p)) in breakpoints.iter().enumerate() {
            if !w.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("invalid breakpoint ({w}, {p})")));
            }
            if i > 0 {
                let (w0, p0) = breakpoints[i - 1];
                if w < w0 || p < p0 {
                    return Err(Error::InvalidParameter("fragility breakpoints must be non-decreasing".into()));
                }
            }
        }
        let (wind, prob) = breakpoints.into_iter().unzip();
        Ok(FragilityCurve { wind, prob })
    }

    /// Wind-independent failure probability.
    pub fn constant(p: f64) -> Result<Self> {
        Self::new(vec![(0.0, p)])
    }

    /// Synthetic default used by the bundled study.
    pub fn default_windstorm() -> Self {
        Self::new(vec![(0.0, 0.0), (20.0, 0.0), (30.0, 0.01), (40.0, 0.05), (50.0, 0.15), (60.0, 0.3)]).expect("valid default")
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.wind.iter().copied().zip(self.prob.iter().copied())
    }

    pub fn probability(&self, wind: f64) -> f64 {
        let n = self.wind.len();
        if wind <= self.wind[0] {
            return self.prob[0];
        }
        if wind >= self.wind[n - 1] {
            return self.prob[n - 1];
        }
        let k = self.wind.partition_point(|&w| w <= wind);
        let (w0, w1) = (self.wind[k - 1], self.wind[k]);
        let (p0, p1) = (self.prob[k - 1], self.prob[k]);
        if w1 == w0 {
            p1
        } else {
            p0 + (p1 - p0) * (wind - w0) / (w1 - w0)
        }
    }
}

/// An hourly weather profile and the branches it exposes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherEvent {
    pub horizon: usize,
    /// Wind speed for hours 1..=horizon, m/s.
    pub wind: Vec<f64>,
    /// Zero-based positions in the case branch table.
    pub exposed_branches: Vec<usize>,
}

/// Bus numbers whose incident branches are exposed in the default study.
pub const DEFAULT_AFFECTED_BUSES: [u32; 7] = [12, 13, 14, 15, 16, 17, 20];

impl WeatherEvent {
    pub fn new(wind: Vec<f64>, exposed_branches: Vec<usize>) -> Result<Self> {
        let w = WeatherEvent { horizon: wind.len(), wind, exposed_branches };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("weather horizon must be at least one hour".into()));
        }
        if self.wind.len() != self.horizon {
            return Err(Error::Shape(format!("wind series has {} values for a {}-hour horizon", self.wind.len(), self.horizon)));
        }
        if let Some(w) = self.wind.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidParameter(format!("invalid wind speed {w}")));
        }
        let mut sorted = self.exposed_branches.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.exposed_branches.len() {
            return Err(Error::InvalidParameter("exposed branches contain duplicates".into()));
        }
        Ok(())
    }

    /// Checks that every exposed branch exists in `case`.
    pub fn validate_for(&self, case: &NetworkCase) -> Result<()> {
        self.validate()?;
        if let Some(k) = self.exposed_branches.iter().find(|&&k| k >= case.branches.len()) {
            return Err(Error::InvalidParameter(format!("exposed branch {k} not in case with {} branches", case.branches.len())));
        }
        Ok(())
    }

    /// Synthetic 24-hour storm peaking at 45 m/s at hour 12, exposing every
    /// branch incident to [`DEFAULT_AFFECTED_BUSES`].
    pub fn default_windstorm(case: &NetworkCase) -> Self {
        let wind = (1..=24).map(|t| 15.0 + 30.0 * (-((t as f64 - 12.0) / 5.0).powi(2)).exp()).collect();
        WeatherEvent::new(wind, case.branches_touching(&DEFAULT_AFFECTED_BUSES)).expect("valid default")
    }

    pub fn n_exposed(&self) -> usize {
        self.exposed_branches.len()
    }

    /// Hourly failure probabilities under `f`.
    pub fn hazards(&self, f: &FragilityCurve) -> Vec<f64> {
        self.wind.iter().map(|&w| f.probability(w)).collect()
    }
}

/// Law of the failure hour of an exposed branch: atoms at hours 1..=T carry
/// `h_t * prod_{s<t}(1 - h_s)`, and hour T+1 carries the survival mass.
pub fn failure_time_distribution(f: &FragilityCurve, w: &WeatherEvent, branch: usize) -> Result<Marginal> {
    w.validate()?;
    if !w.exposed_branches.contains(&branch) {
        return Err(Error::InvalidParameter(format!("branch {branch} is not exposed")));
    }
    let mut probs = Vec::with_capacity(w.horizon + 1);
    let mut survive = 1.0;
    for h in w.hazards(f) {
        probs.push(h * survive);
        survive *= 1.0 - h;
    }
    probs.push(survive);
    let hours = (1..=w.horizon as u32 + 1).collect();
    Marginal::discrete_hourly(hours, probs)
}

/// Failure-time marginals of every exposed branch, in exposure order.
pub fn failure_time_marginals(f: &FragilityCurve, w: &WeatherEvent) -> Result<Vec<Marginal>> {
    w.exposed_branches.iter().map(|&k| failure_time_distribution(f, w, k)).collect()
}

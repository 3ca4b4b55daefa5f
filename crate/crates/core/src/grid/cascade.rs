//! Hourly cascading-failure simulation and the load-served rate metric.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::case::NetworkCase;
use super::fragility::WeatherEvent;
use super::powerflow::{solve_network, PowerFlow};

/// Default bound on protection iterations within one cascade.
pub const DEFAULT_ITERATION_CAP: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "lowercase")]
pub enum Component {
    Branch(usize),
    Generator(usize),
}

impl std::fmt::Display for Component {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Component::Branch(k) => write!(f, "branch:{k}"),
            Component::Generator(g) => write!(f, "gen:{g}"),
        }
    }
}

/// Network topology together with the load still being served.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridState {
    pub case: NetworkCase,
    /// Served load per bus, MW. Never increases once shed.
    pub served: Vec<f64>,
    /// Result of the most recent solve.
    pub flow: Option<PowerFlow>,
}

impl GridState {
    pub fn new(case: NetworkCase) -> Self {
        let served = case.buses.iter().map(|b| b.demand).collect();
        GridState { case, served, flow: None }
    }

    pub fn total_served(&self) -> f64 {
        self.served.iter().sum()
    }

    pub fn in_service(&self, c: Component) -> bool {
        match c {
            Component::Branch(k) => self.case.branches[k].in_service,
            Component::Generator(g) => self.case.generators[g].in_service,
        }
    }

    fn switch_off(&mut self, c: Component) -> Result<bool> {
        let flag = match c {
            Component::Branch(k) => self.case.branches.get_mut(k).map(|b| &mut b.in_service),
            Component::Generator(g) => self.case.generators.get_mut(g).map(|g| &mut g.in_service),
        };
        let flag = flag.ok_or_else(|| Error::InvalidParameter(format!("{c} does not exist")))?;
        Ok(std::mem::replace(flag, false))
    }
}

/// Applies `contingencies` and runs protection to steady state: balance each
/// island, solve flows, trip every overloaded branch, repeat. Returns the final
/// state and every component switched off, in trip order. Components already
/// out of service are ignored.
pub fn cascade_step(state: &GridState, contingencies: &[Component]) -> Result<(GridState, Vec<Component>)> {
    cascade_step_capped(state, contingencies, DEFAULT_ITERATION_CAP)
}

pub fn cascade_step_capped(state: &GridState, contingencies: &[Component], cap: usize) -> Result<(GridState, Vec<Component>)> {
    let mut st = state.clone();
    let mut tripped = Vec::new();
    for &c in contingencies {
        if st.switch_off(c)? {
            tripped.push(c);
        }
    }
    for _ in 0..cap {
        let pf = solve_network(&st.case, &st.served)?;
        for &g in &pf.tripped_generators {
            st.switch_off(Component::Generator(g))?;
            tripped.push(Component::Generator(g));
        }
        let overloaded: Vec<usize> = st
            .case
            .branches
            .iter()
            .enumerate()
            .filter(|(k, br)| br.in_service && pf.flows[*k].abs() > br.limit() * (1.0 + 1e-9))
            .map(|(k, _)| k)
            .collect();
        st.served.clone_from(&pf.served);
        st.flow = Some(pf);
        if overloaded.is_empty() {
            return Ok((st, tripped));
        }
        for k in overloaded {
            st.switch_off(Component::Branch(k))?;
            tripped.push(Component::Branch(k));
        }
    }
    Err(Error::NonConvergence { iterations: cap })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeOutcome {
    /// Total served load, MW, at hours 0..=T (hour 0 is pre-event).
    pub load_served: Vec<f64>,
    /// Components switched off during each hour, same indexing.
    pub tripped: Vec<Vec<Component>>,
    /// Rate of change of load served over the event, MW/h.
    pub phi_ls: f64,
}

impl CascadeOutcome {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["hour", "load_served", "tripped"])?;
        for (t, (p, trips)) in self.load_served.iter().zip(&self.tripped).enumerate() {
            let labels: Vec<String> = trips.iter().map(|c| c.to_string()).collect();
            wr.write_record([t.to_string(), p.to_string(), labels.join(";")])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn n_tripped(&self) -> usize {
        self.tripped.iter().map(Vec::len).sum()
    }
}

/// Hour at which a continuous failure time acts: nearest whole hour, never
/// before hour 1. Values past the horizon mean no failure.
pub fn failure_hour(tau: f64) -> Result<u64> {
    if !tau.is_finite() {
        return Err(Error::Domain(format!("failure time {tau} is not finite")));
    }
    Ok(tau.round().max(1.0) as u64)
}

/// Runs the hourly event driver: at each hour the exposed branches whose
/// failure time rounds to that hour are switched off and protection runs to
/// steady state.
pub fn simulate_event(case: &NetworkCase, tau: &[f64], weather: &WeatherEvent) -> Result<CascadeOutcome> {
    weather.validate_for(case)?;
    if tau.len() != weather.n_exposed() {
        return Err(Error::Shape(format!("{} failure times for {} exposed branches", tau.len(), weather.n_exposed())));
    }
    let hours: Vec<u64> = tau.iter().map(|&t| failure_hour(t)).collect::<Result<_>>()?;
    let horizon = weather.horizon;

    let (mut state, initial) = cascade_step(&GridState::new(case.clone()), &[])?;
    let mut load_served = vec![state.total_served()];
    let mut tripped = vec![initial];
    for t in 1..=horizon as u64 {
        let due: Vec<Component> =
            weather.exposed_branches.iter().zip(&hours).filter(|(_, &h)| h == t).map(|(&k, _)| Component::Branch(k)).collect();
        let (next, trips) = if due.is_empty() { (state.clone(), Vec::new()) } else { cascade_step(&state, &due)? };
        state = next;
        load_served.push(state.total_served());
        tripped.push(trips);
    }
    let phi = phi_ls(&load_served, 0, horizon)?;
    Ok(CascadeOutcome { load_served, tripped, phi_ls: phi })
}

/// Average rate of change of load served between hours `t0` and `t_end`.
pub fn phi_ls(trace: &[f64], t0: usize, t_end: usize) -> Result<f64> {
    if t_end <= t0 {
        return Err(Error::Domain(format!("end hour {t_end} must follow start hour {t0}")));
    }
    if t_end >= trace.len() {
        return Err(Error::Domain(format!("trace of length {} does not cover hour {t_end}", trace.len())));
    }
    Ok((trace[t_end] - trace[t0]) / (t_end - t0) as f64)
}

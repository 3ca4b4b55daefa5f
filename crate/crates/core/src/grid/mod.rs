//! Stochastic resilience model of a transmission grid under a windstorm.

mod cascade;
mod case;
mod fragility;
mod powerflow;

pub use cascade::{
    cascade_step, cascade_step_capped, failure_hour, phi_ls, simulate_event, CascadeOutcome, Component, GridState, DEFAULT_ITERATION_CAP,
};
pub use case::{parse_case, Branch, Bus, BusKind, Generator, NetworkCase};
pub use fragility::{failure_time_distribution, failure_time_marginals, FragilityCurve, WeatherEvent, DEFAULT_AFFECTED_BUSES};
pub use powerflow::{dc_power_flow, find_islands, solve_network, Island, PowerFlow};

/// The IEEE 39-bus New England system.
pub const CASE39: &str = include_str!("../../data/case39.m");
/// Synthetic fragility curve shipped with the default study.
pub const DEFAULT_FRAGILITY_JSON: &str = include_str!("../../data/fragility_default.json");
/// Synthetic 24-hour storm shipped with the default study.
pub const DEFAULT_WEATHER_JSON: &str = include_str!("../../data/weather_default.json");

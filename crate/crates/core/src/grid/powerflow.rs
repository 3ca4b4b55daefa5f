//! Island detection, generation/load balancing and DC power flow.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::case::{BusKind, NetworkCase};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Island {
    /// Bus positions, ascending.
    pub buses: Vec<usize>,
    /// Angle reference bus.
    pub reference: usize,
}

/// Operating point of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlow {
    /// Branch flows in MW, positive from `from` to `to`; zero when out of service.
    pub flows: Vec<f64>,
    /// Load served per bus, MW.
    pub served: Vec<f64>,
    /// Output per generator, MW; zero when out of service.
    pub dispatch: Vec<f64>,
    pub islands: Vec<Island>,
    /// Generators switched off to remove over-generation.
    pub tripped_generators: Vec<usize>,
}

impl PowerFlow {
    pub fn total_served(&self) -> f64 {
        self.served.iter().sum()
    }
}

/// Connected components of the in-service network, ordered by lowest bus.
pub fn find_islands(case: &NetworkCase) -> Vec<Vec<usize>> {
    let n = case.buses.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for br in case.branches.iter().filter(|b| b.in_service) {
        let (a, b) = (root(&mut parent, br.from), root(&mut parent, br.to));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut islands: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = root(&mut parent, i);
        if label[r] == usize::MAX {
            label[r] = islands.len();
            islands.push(Vec::new());
        }
        islands[label[r]].push(i);
    }
    islands
}

fn pick_reference(case: &NetworkCase, buses: &[usize]) -> usize {
    if let Some(&b) = buses.iter().find(|&&b| case.buses[b].kind == BusKind::Slack) {
        return b;
    }
    let mut best: Option<(usize, f64)> = None;
    for &b in buses {
        let cap: f64 = case.generators.iter().filter(|g| g.in_service && g.bus == b).map(|g| g.p_max).sum();
        if cap > 0.0 && best.is_none_or(|(_, c)| cap > c) {
            best = Some((b, cap));
        }
    }
    best.map_or(buses[0], |(b, _)| b)
}

/// Balances one island in place. Load is shed proportionally when demand
/// exceeds capacity. Otherwise generators start from their scheduled output
/// and the mismatch is shared in proportion to the remaining margin: headroom
/// to `p_max` when raising, room above `p_min` when curtailing. If the minimum
/// outputs alone exceed the load, units with a positive minimum trip, smallest
/// capacity first.
fn balance_island(case: &NetworkCase, buses: &[usize], served: &mut [f64], dispatch: &mut [f64], tripped: &mut Vec<usize>) {
    let mut gens: Vec<usize> =
        (0..case.generators.len()).filter(|&g| case.generators[g].in_service && buses.contains(&case.generators[g].bus)).collect();
    let demand: f64 = buses.iter().map(|&b| served[b]).sum();

    let mut must_run: Vec<usize> = gens.iter().copied().filter(|&g| case.generators[g].p_min > 0.0).collect();
    must_run.sort_by(|&a, &b| case.generators[a].p_max.total_cmp(&case.generators[b].p_max).then(a.cmp(&b)));
    let mut floor: f64 = must_run.iter().map(|&g| case.generators[g].p_min).sum();
    for g in must_run {
        if floor <= demand {
            break;
        }
        floor -= case.generators[g].p_min;
        tripped.push(g);
        gens.retain(|&x| x != g);
    }

    let capacity: f64 = gens.iter().map(|&g| case.generators[g].p_max).sum();
    if capacity <= 0.0 {
        for &b in buses {
            served[b] = 0.0;
        }
        return;
    }
    if demand >= capacity {
        let ratio = capacity / demand;
        for &b in buses {
            served[b] *= ratio;
        }
        for &g in &gens {
            dispatch[g] = case.generators[g].p_max;
        }
        return;
    }
    let set = |g: usize| case.generators[g].p_set.clamp(case.generators[g].p_min, case.generators[g].p_max);
    let scheduled: f64 = gens.iter().map(|&g| set(g)).sum();
    if demand >= scheduled {
        let room: f64 = gens.iter().map(|&g| case.generators[g].p_max - set(g)).sum();
        let lambda = if room > 0.0 { ((demand - scheduled) / room).min(1.0) } else { 0.0 };
        for &g in &gens {
            dispatch[g] = set(g) + lambda * (case.generators[g].p_max - set(g));
        }
    } else {
        let room: f64 = gens.iter().map(|&g| set(g) - case.generators[g].p_min).sum();
        let lambda = if room > 0.0 { ((scheduled - demand) / room).min(1.0) } else { 0.0 };
        for &g in &gens {
            dispatch[g] = set(g) - lambda * (set(g) - case.generators[g].p_min);
        }
    }
}

/// Balances every island against the load levels in `load` and solves the DC
/// flow equations. `load` caps the served load per bus and is never exceeded.
pub fn solve_network(case: &NetworkCase, load: &[f64]) -> Result<PowerFlow> {
    let nb = case.buses.len();
    if load.len() != nb {
        return Err(Error::Shape(format!("{} load values for {nb} buses", load.len())));
    }
    let mut served = load.to_vec();
    let mut dispatch = vec![0.0; case.generators.len()];
    let mut tripped = Vec::new();
    let mut flows = vec![0.0; case.branches.len()];
    let mut islands = Vec::new();
    let mut theta = vec![0.0; nb];
    let mut local = vec![usize::MAX; nb];

    for (island_no, buses) in find_islands(case).into_iter().enumerate() {
        balance_island(case, &buses, &mut served, &mut dispatch, &mut tripped);
        let reference = pick_reference(case, &buses);
        if buses.len() > 1 {
            // Reduced susceptance system with the reference row and column removed.
            for (k, &b) in buses.iter().filter(|&&b| b != reference).enumerate() {
                local[b] = k;
            }
            local[reference] = usize::MAX;
            let n = buses.len() - 1;
            let mut bmat = DMatrix::<f64>::zeros(n, n);
            let mut inj = DVector::<f64>::zeros(n);
            for br in case.branches.iter().filter(|br| br.in_service && buses.binary_search(&br.from).is_ok()) {
                let y = 1.0 / br.reactance;
                let (i, j) = (local[br.from], local[br.to]);
                if i != usize::MAX {
                    bmat[(i, i)] += y;
                }
                if j != usize::MAX {
                    bmat[(j, j)] += y;
                }
                if i != usize::MAX && j != usize::MAX {
                    bmat[(i, j)] -= y;
                    bmat[(j, i)] -= y;
                }
            }
            for &b in &buses {
                if local[b] != usize::MAX {
                    inj[local[b]] -= served[b] / case.base_mva;
                }
            }
            for (g, gen) in case.generators.iter().enumerate() {
                if dispatch[g] != 0.0 && local[gen.bus] != usize::MAX && buses.binary_search(&gen.bus).is_ok() {
                    inj[local[gen.bus]] += dispatch[g] / case.base_mva;
                }
            }
            let sol = bmat.lu().solve(&inj).filter(|s| s.iter().all(|v| v.is_finite()));
            let sol = sol.ok_or(Error::SingularIsland { island: island_no })?;
            for &b in &buses {
                theta[b] = if local[b] == usize::MAX { 0.0 } else { sol[local[b]] };
                local[b] = usize::MAX;
            }
        }
        islands.push(Island { buses, reference });
    }
    for g in &tripped {
        dispatch[*g] = 0.0;
    }
    for (k, br) in case.branches.iter().enumerate() {
        if br.in_service {
            flows[k] = (theta[br.from] - theta[br.to]) / br.reactance * case.base_mva;
        }
    }
    tripped.sort_unstable();
    Ok(PowerFlow { flows, served, dispatch, islands, tripped_generators: tripped })
}

/// DC power flow of the case at full demand.
pub fn dc_power_flow(case: &NetworkCase) -> Result<PowerFlow> {
    let demand: Vec<f64> = case.buses.iter().map(|b| b.demand).collect();
    solve_network(case, &demand)
}

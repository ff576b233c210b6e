//! Least-cost (cheapest feasible insertion) repair.

use std::iter;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{is_feasible_sequence, Instance, Route, Solution, DEPOT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Route(usize),
    NewRoute,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub slot: Slot,
    /// Index the customer will occupy in the route (0 for a new route).
    pub position: usize,
    pub delta: f64,
}

const SNAP: f64 = 1e12;

/// Rounds a cost delta onto a 1e-12 grid so ties compare identically across platforms.
#[inline]
pub fn snap(delta: f64) -> f64 {
    (delta * SNAP).round() / SNAP
}

/// Detour of placing `c` between `prev` and `next`.
#[inline]
pub fn insertion_delta(inst: &Instance, prev: usize, c: usize, next: usize) -> f64 {
    inst.dist(prev, c) + inst.dist(c, next) - inst.dist(prev, next)
}

/// Cheapest feasible placement of pooled customer `c`.
///
/// Ties go to the lowest route index, then the lowest position; a new
/// route only wins on a strictly smaller delta.
pub fn best_insertion(inst: &Instance, sol: &Solution, c: usize) -> Result<Placement> {
    if !inst.is_customer(c) {
        return Err(Error::UnknownCustomer(c));
    }
    if !sol.pool.contains(&c) {
        return Err(Error::InvalidParameter(format!(
            "customer {c} is not in the pool"
        )));
    }
    cheapest(inst, &sol.routes, c)
}

fn cheapest(inst: &Instance, routes: &[Route], c: usize) -> Result<Placement> {
    let demand = inst.node(c).demand;
    let mut best: Option<(f64, Placement)> = None;

    for (r, route) in routes.iter().enumerate() {
        if route.demand(inst) + demand > inst.capacity() {
            continue;
        }
        let ids = &route.customers;
        for k in 0..=ids.len() {
            let prev = if k == 0 { DEPOT } else { ids[k - 1] };
            let next = if k == ids.len() { DEPOT } else { ids[k] };
            let delta = insertion_delta(inst, prev, c, next);
            let key = snap(delta);
            if matches!(best, Some((b, _)) if key >= b) {
                continue;
            }
            let seq = ids[..k]
                .iter()
                .copied()
                .chain(iter::once(c))
                .chain(ids[k..].iter().copied());
            if is_feasible_sequence(inst, seq) {
                best = Some((
                    key,
                    Placement {
                        slot: Slot::Route(r),
                        position: k,
                        delta,
                    },
                ));
            }
        }
    }

    let delta = 2.0 * inst.dist(DEPOT, c);
    let beats = best.map_or(true, |(b, _)| snap(delta) < b);
    if beats && demand <= inst.capacity() && is_feasible_sequence(inst, iter::once(c)) {
        best = Some((
            snap(delta),
            Placement {
                slot: Slot::NewRoute,
                position: 0,
                delta,
            },
        ));
    }
    best.map(|(_, p)| p).ok_or(Error::InfeasibleCustomer(c))
}

fn apply(sol: &mut Solution, c: usize, placement: Placement) {
    match placement.slot {
        Slot::Route(r) => sol.routes[r].customers.insert(placement.position, c),
        Slot::NewRoute => sol.routes.push(Route::new(vec![c])),
    }
}

/// Inserts a pooled customer at the given placement.
pub fn insert(sol: &mut Solution, c: usize, placement: Placement) -> Result<()> {
    let idx = sol
        .pool
        .iter()
        .position(|&p| p == c)
        .ok_or_else(|| Error::InvalidParameter(format!("customer {c} is not in the pool")))?;
    sol.pool.remove(idx);
    apply(sol, c, placement);
    Ok(())
}

/// Shuffles the pool and reinserts every customer at its cheapest feasible slot.
///
/// On `InfeasibleCustomer` the customers not yet inserted stay in the pool.
pub fn least_cost_repair<R: Rng + ?Sized>(
    inst: &Instance,
    sol: &mut Solution,
    rng: &mut R,
) -> Result<()> {
    if sol.pool.is_empty() {
        return Ok(());
    }
    let mut order = std::mem::take(&mut sol.pool);
    order.shuffle(rng);
    for (i, &c) in order.iter().enumerate() {
        match cheapest(inst, &sol.routes, c) {
            Ok(p) => apply(sol, c, p),
            Err(e) => {
                sol.pool = order[i..].to_vec();
                return Err(e);
            }
        }
    }
    Ok(())
}

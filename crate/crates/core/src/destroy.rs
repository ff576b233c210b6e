//! Destroy operators: dynamic partial removal plus the baseline removals.

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Instance, Solution};

/// Parameters of one dynamic partial removal.
#[derive(Debug, Clone, PartialEq)]
pub struct DprRequest {
    /// Anchors in sampling order; they share one removal budget.
    pub anchors: Vec<usize>,
    /// Route coefficient in `[0, 1]` indexed by node id (entry 0 is ignored).
    pub coefficients: Vec<f64>,
    pub n_destroy: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DprStep {
    /// `count` nodes removed from a route holding `route_len` customers at that moment.
    Removed {
        node: usize,
        route_len: usize,
        quota: usize,
        count: usize,
    },
    /// The neighbor was already purged.
    Skipped { node: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DprOutcome {
    pub removed: Vec<usize>,
    pub steps: Vec<DprStep>,
}

impl DprOutcome {
    /// Nodes whose coefficient determined a removal.
    pub fn used_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().filter_map(|s| match s {
            DprStep::Removed { node, .. } => Some(*node),
            DprStep::Skipped { .. } => None,
        })
    }

    pub fn mean_used_coefficient(&self, coefficients: &[f64]) -> Option<f64> {
        let used: Vec<f64> = self.used_nodes().map(|n| coefficients[n]).collect();
        if used.is_empty() {
            None
        } else {
            Some(used.iter().sum::<f64>() / used.len() as f64)
        }
    }
}

/// `max(1, round_half_up(coefficient * route_len))`.
pub fn removal_quota(coefficient: f64, route_len: usize) -> usize {
    ((coefficient * route_len as f64 + 0.5).floor() as usize).max(1)
}

/// Contiguous run of `quota` entries around `pos`, growing successor side first
/// and alternating, falling back to whichever side still has room.
fn grow_segment(remaining: &[usize], pos: usize, quota: usize) -> Vec<usize> {
    let mut seg = vec![remaining[pos]];
    let (mut lo, mut hi) = (pos, pos);
    let mut successor_turn = true;
    while seg.len() < quota {
        let can_next = hi + 1 < remaining.len();
        let can_prev = lo > 0;
        if !can_next && !can_prev {
            break;
        }
        if (successor_turn && can_next) || !can_prev {
            hi += 1;
            seg.push(remaining[hi]);
        } else {
            lo -= 1;
            seg.push(remaining[lo]);
        }
        successor_turn = !successor_turn;
    }
    seg
}

/// Customers ordered by ascending distance from `from` (ties by id); `from` comes first.
pub fn neighbors_by_distance(inst: &Instance, from: usize) -> Vec<usize> {
    let mut order: Vec<usize> = inst.customers().collect();
    order.sort_by(|&a, &b| {
        inst.dist(from, a)
            .total_cmp(&inst.dist(from, b))
            .then_with(|| (a != from).cmp(&(b != from)))
            .then(a.cmp(&b))
    });
    order
}

/// Dynamic partial removal over a complete solution.
///
/// Starting from each anchor, neighbors are visited by ascending distance;
/// each non-purged neighbor removes a segment around itself from its route
/// sized by its route coefficient, until `n_destroy` customers are gone.
pub fn dpr_destroy(inst: &Instance, sol: &mut Solution, req: &DprRequest) -> Result<DprOutcome> {
    if !sol.is_complete() {
        return Err(Error::IncompleteSolution(sol.pool.len()));
    }
    if req.anchors.is_empty() {
        return Err(Error::InvalidParameter("at least one anchor is required".into()));
    }
    if req.coefficients.len() != inst.len() {
        return Err(Error::InvalidParameter(format!(
            "expected {} coefficients, got {}",
            inst.len(),
            req.coefficients.len()
        )));
    }
    if let Some(c) = req.coefficients[1..]
        .iter()
        .find(|c| !(0.0..=1.0).contains(*c))
    {
        return Err(Error::InvalidParameter(format!(
            "route coefficient {c} outside [0, 1]"
        )));
    }
    if req.n_destroy == 0 {
        return Err(Error::InvalidParameter("n_destroy must be >= 1".into()));
    }

    let loc = sol.locate(inst.len());
    for &a in &req.anchors {
        if !inst.is_customer(a) {
            return Err(Error::UnknownCustomer(a));
        }
        if loc[a].is_none() {
            return Err(Error::NotVisited(a));
        }
    }

    let budget = req.n_destroy.min(sol.n_visited());
    let mut purged = vec![false; inst.len()];
    let mut out = DprOutcome::default();

    'anchors: for &anchor in &req.anchors {
        for node in neighbors_by_distance(inst, anchor) {
            if out.removed.len() >= budget {
                break 'anchors;
            }
            if purged[node] {
                out.steps.push(DprStep::Skipped { node });
                continue;
            }
            let Some((r, _)) = loc[node] else { continue };
            let remaining: Vec<usize> = sol.routes[r]
                .customers
                .iter()
                .copied()
                .filter(|&c| !purged[c])
                .collect();
            let pos = remaining
                .iter()
                .position(|&c| c == node)
                .expect("unpurged node is on its route");
            let quota = removal_quota(req.coefficients[node], remaining.len());
            let take = quota.min(budget - out.removed.len());
            let seg = grow_segment(&remaining, pos, take);
            for &c in &seg {
                purged[c] = true;
            }
            out.steps.push(DprStep::Removed {
                node,
                route_len: remaining.len(),
                quota,
                count: seg.len(),
            });
            out.removed.extend(seg);
        }
    }

    sol.remove_customers(inst, &out.removed)?;
    Ok(out)
}

/// Removes `n` visited customers drawn uniformly without replacement.
pub fn random_destroy<R: Rng + ?Sized>(
    inst: &Instance,
    sol: &mut Solution,
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let visited = sol.visited();
    if n > visited.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot remove {n} of {} visited customers",
            visited.len()
        )));
    }
    let removed: Vec<usize> = index::sample(rng, visited.len(), n)
        .into_iter()
        .map(|i| visited[i])
        .collect();
    sol.remove_customers(inst, &removed)?;
    Ok(removed)
}

/// Removes contiguous strings from the seed's route and the routes nearest to it.
///
/// Routes are visited through the nearest not-yet-touched customer to the
/// seed; each string has a length uniform in `[1, route length]` and
/// contains that customer. If every route was touched and budget remains,
/// another sweep starts.
pub fn string_destroy<R: Rng + ?Sized>(
    inst: &Instance,
    sol: &mut Solution,
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let visited = sol.visited();
    if n > visited.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot remove {n} of {} visited customers",
            visited.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let seed = visited[rng.gen_range(0..visited.len())];
    let loc = sol.locate(inst.len());
    let order: Vec<usize> = neighbors_by_distance(inst, seed)
        .into_iter()
        .filter(|&c| loc[c].is_some())
        .collect();

    let mut purged = vec![false; inst.len()];
    let mut removed = Vec::with_capacity(n);
    while removed.len() < n {
        let mut touched = vec![false; sol.routes.len()];
        for &c in &order {
            if removed.len() == n {
                break;
            }
            if purged[c] {
                continue;
            }
            let (r, _) = loc[c].expect("filtered to visited");
            if touched[r] {
                continue;
            }
            touched[r] = true;
            let remaining: Vec<usize> = sol.routes[r]
                .customers
                .iter()
                .copied()
                .filter(|&x| !purged[x])
                .collect();
            let pos = remaining.iter().position(|&x| x == c).expect("on route");
            let len = rng.gen_range(1..=remaining.len()).min(n - removed.len());
            let lo = (pos + 1).saturating_sub(len);
            let hi = pos.min(remaining.len() - len);
            let start = rng.gen_range(lo..=hi);
            for &x in &remaining[start..start + len] {
                purged[x] = true;
                removed.push(x);
            }
        }
    }
    sol.remove_customers(inst, &removed)?;
    Ok(removed)
}

/// Result of one search iteration as seen by the adaptive weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    NewBest,
    Improved,
    Accepted,
    Rejected,
}

/// Roulette-wheel operator weights with exponential smoothing.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveWeights {
    weights: Vec<f64>,
    rho: f64,
    /// Scores for new best, accepted improving, accepted non-improving.
    scores: [f64; 3],
}

impl AdaptiveWeights {
    pub const RHO: f64 = 0.1;
    pub const SCORES: [f64; 3] = [33.0, 9.0, 13.0];

    pub fn new(n_operators: usize) -> Result<Self> {
        Self::with_params(vec![1.0; n_operators], Self::RHO, Self::SCORES)
    }

    pub fn with_params(weights: Vec<f64>, rho: f64, scores: [f64; 3]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("empty operator set".into()));
        }
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidParameter(format!("rho {rho} outside [0, 1]")));
        }
        Ok(AdaptiveWeights {
            weights,
            rho,
            scores,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        let dist = WeightedIndex::new(&self.weights)
            .map_err(|e| Error::Degenerate(format!("operator weights: {e}")))?;
        Ok(dist.sample(rng))
    }

    pub fn update(&mut self, op: usize, outcome: Outcome) {
        let score = match outcome {
            Outcome::NewBest => self.scores[0],
            Outcome::Improved => self.scores[1],
            Outcome::Accepted => self.scores[2],
            Outcome::Rejected => 0.0,
        };
        let w = &mut self.weights[op];
        *w = (1.0 - self.rho) * *w + self.rho * score;
    }
}

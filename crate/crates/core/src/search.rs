//! LNS controller with simulated-annealing acceptance.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::destroy::{
    dpr_destroy, random_destroy, string_destroy, AdaptiveWeights, DprRequest, Outcome,
};
use crate::error::{Error, Result};
use crate::hrgcn::{HrgcnWeights, NeuralPolicy, DEFAULT_N_A};
use crate::model::{Instance, Solution};
use crate::policy::{sample_anchors, sample_coefficients, DestroyPolicy, RandomPolicy};
use crate::repair::least_cost_repair;
use crate::trace::TraceRow;

/// Improvements smaller than this do not replace the best solution.
pub const BEST_TOLERANCE: f64 = 1e-9;

const INIT_STREAM: u64 = 0;
const SEARCH_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    Rand,
    AlnsLite,
    String,
    DprRandom,
    DprNeural,
}

impl Operator {
    pub const ALL: [Operator; 5] = [
        Operator::Rand,
        Operator::AlnsLite,
        Operator::String,
        Operator::DprRandom,
        Operator::DprNeural,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Operator::Rand => "rand",
            Operator::AlnsLite => "alns",
            Operator::String => "string",
            Operator::DprRandom => "dpr_random",
            Operator::DprNeural => "dpr_neural",
        }
    }

    pub fn is_dpr(self) -> bool {
        matches!(self, Operator::DprRandom | Operator::DprNeural)
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Operator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rand" => Ok(Operator::Rand),
            "alns" | "alns_lite" => Ok(Operator::AlnsLite),
            "string" => Ok(Operator::String),
            "dpr_random" => Ok(Operator::DprRandom),
            "dpr_neural" => Ok(Operator::DprNeural),
            other => Err(Error::InvalidParameter(format!("unknown operator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub iterations: usize,
    pub t_initial: f64,
    pub t_final: f64,
    /// `None` picks the operator default.
    pub n_anchors: Option<usize>,
    pub operator: Operator,
    pub seed: u64,
    /// Required by `dpr_neural`.
    pub weights: Option<Arc<HrgcnWeights>>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            iterations: 150,
            t_initial: 100.0,
            t_final: 1.0,
            n_anchors: None,
            operator: Operator::Rand,
            seed: 0,
            weights: None,
        }
    }
}

impl SearchConfig {
    pub fn new(operator: Operator, seed: u64) -> Self {
        SearchConfig {
            operator,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be >= 1".into()));
        }
        if !(self.t_final > 0.0 && self.t_initial >= self.t_final && self.t_initial.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "temperatures must satisfy t_initial >= t_final > 0, got {} and {}",
                self.t_initial, self.t_final
            )));
        }
        if let Some(k) = self.n_anchors {
            if !(1..=3).contains(&k) {
                return Err(Error::InvalidParameter(format!("n_anchors {k} outside 1..=3")));
            }
        }
        if self.operator == Operator::DprNeural && self.weights.is_none() {
            return Err(Error::InvalidParameter("dpr_neural needs a weight bundle".into()));
        }
        Ok(())
    }

    /// Configured anchor count, or 1 for random DPR, 2 for the network and 3 for large bundles.
    pub fn anchors(&self) -> usize {
        self.n_anchors.unwrap_or(match (self.operator, &self.weights) {
            (Operator::DprNeural, Some(w)) if w.meta.n_a > DEFAULT_N_A => 3,
            (Operator::DprNeural, _) => 2,
            _ => 1,
        })
    }
}

/// `round(sqrt(n))` for one anchor, `round(1.2 sqrt(n))` for several; between 1 and `n`.
pub fn degree_of_destruction(n_customers: usize, multi_anchor: bool) -> usize {
    let scale = if multi_anchor { 1.2 } else { 1.0 };
    let d = (scale * (n_customers as f64).sqrt()).round() as usize;
    d.max(1).min(n_customers.max(1))
}

/// Geometric cooling from `t0` at iteration 0 to `tf` at iteration `k_total - 1`.
pub fn temperature(k: usize, k_total: usize, t0: f64, tf: f64) -> f64 {
    if k_total <= 1 {
        return t0;
    }
    t0 * (tf / t0).powf(k as f64 / (k_total - 1) as f64)
}

/// Metropolis criterion.
pub fn sa_accept<R: Rng + ?Sized>(c_new: f64, c_cur: f64, temperature: f64, rng: &mut R) -> bool {
    if c_new <= c_cur {
        return true;
    }
    if temperature <= 0.0 {
        return false;
    }
    rng.gen::<f64>() < (-(c_new - c_cur) / temperature).exp()
}

/// Generator for the initialization stream of `seed`; shared by every operator.
pub fn init_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INIT_STREAM);
    rng
}

pub fn search_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SEARCH_STREAM);
    rng
}

/// Empties the solution and rebuilds it by least-cost insertion in random order.
pub fn initial_solution<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> Result<Solution> {
    let mut sol = Solution::unassigned(inst);
    least_cost_repair(inst, &mut sol, rng)?;
    Ok(sol)
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best: Solution,
    pub best_cost: f64,
    pub initial_cost: f64,
    pub trace: Vec<TraceRow>,
    pub runtime: Duration,
}

/// Builds the shared initial solution for `cfg.seed` and searches from it.
pub fn lns_run(inst: &Instance, cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let initial = initial_solution(inst, &mut init_rng(cfg.seed))?;
    lns_from(inst, initial, cfg)
}

/// Searches from a given complete solution with the configured operator.
pub fn lns_from(inst: &Instance, initial: Solution, cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    match &cfg.weights {
        Some(w) if cfg.operator == Operator::DprNeural => {
            let mut policy = NeuralPolicy::new(w.clone(), inst);
            lns_with_policy(inst, initial, cfg, &mut policy)
        }
        _ => lns_with_policy(inst, initial, cfg, &mut RandomPolicy),
    }
}

/// Like [`lns_from`] but DPR parameters come from `policy`.
pub fn lns_with_policy(
    inst: &Instance,
    initial: Solution,
    cfg: &SearchConfig,
    policy: &mut dyn DestroyPolicy,
) -> Result<SearchResult> {
    cfg.validate()?;
    let start = Instant::now();
    let mut rng = search_rng(cfg.seed);
    let n = inst.n_customers();
    let n_anchors = cfg.anchors();
    let n_destroy = degree_of_destruction(n, cfg.operator.is_dpr() && n_anchors > 1);
    let mut alns = AdaptiveWeights::new(2)?;

    let initial_cost = initial.cost(inst)?;
    let mut current = initial;
    let mut c_cur = initial_cost;
    let mut best = current.clone();
    let mut best_cost = c_cur;
    let mut trace = Vec::with_capacity(cfg.iterations);

    for k in 0..cfg.iterations {
        let temp = temperature(k, cfg.iterations, cfg.t_initial, cfg.t_final);
        let mut candidate = current.clone();
        let mut anchors = Vec::new();
        let mut mean_coeff = None;
        let mut alns_op = None;

        match cfg.operator {
            Operator::Rand => {
                random_destroy(inst, &mut candidate, n_destroy, &mut rng)?;
            }
            Operator::String => {
                string_destroy(inst, &mut candidate, n_destroy, &mut rng)?;
            }
            Operator::AlnsLite => {
                let op = alns.select(&mut rng)?;
                alns_op = Some(op);
                if op == 0 {
                    random_destroy(inst, &mut candidate, n_destroy, &mut rng)?;
                } else {
                    string_destroy(inst, &mut candidate, n_destroy, &mut rng)?;
                }
            }
            Operator::DprRandom | Operator::DprNeural => {
                let out = policy.propose(inst, &current)?;
                anchors = sample_anchors(&out, n_anchors.min(n), &mut rng)?;
                policy.commit_anchors(&anchors);
                let coefficients = sample_coefficients(&out, &mut rng)?;
                let req = DprRequest {
                    anchors: anchors.clone(),
                    coefficients,
                    n_destroy,
                };
                dpr_destroy(inst, &mut candidate, &req)?;
                mean_coeff = Some(req.coefficients[1..].iter().sum::<f64>() / n as f64);
            }
        }

        least_cost_repair(inst, &mut candidate, &mut rng)?;
        let c_new = candidate.cost(inst)?;
        let accepted = sa_accept(c_new, c_cur, temp, &mut rng);
        let new_best = c_new < best_cost - BEST_TOLERANCE;
        if let Some(op) = alns_op {
            let outcome = match (new_best, accepted, c_new < c_cur) {
                (true, _, _) => Outcome::NewBest,
                (_, true, true) => Outcome::Improved,
                (_, true, false) => Outcome::Accepted,
                _ => Outcome::Rejected,
            };
            alns.update(op, outcome);
        }
        if new_best {
            best = candidate.clone();
            best_cost = c_new;
        }
        if accepted {
            current = candidate;
            c_cur = c_new;
        }
        trace.push(TraceRow {
            iter: k,
            cost: c_cur,
            best: best_cost,
            accepted,
            temperature: temp,
            mean_coeff,
            anchors,
        });
    }

    Ok(SearchResult {
        best,
        best_cost,
        initial_cost,
        trace,
        runtime: start.elapsed(),
    })
}

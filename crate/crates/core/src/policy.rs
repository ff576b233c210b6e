//! Destroy policies: node embeddings, policy outputs and anchor/coefficient sampling.

use ndarray::Array2;
use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::Rng;
use rand_distr::Beta;

use crate::error::{Error, Result};
use crate::model::{Instance, Solution, DEPOT};

pub const EMBEDDING_DIM: usize = 10;

/// Per-node 10-dimensional features of a complete solution, rows ordered by node id.
///
/// Columns: x, y, demand, window start, window end, service, demand
/// accumulated along the route up to the node, distance accumulated up to
/// the node (depot leg included, return leg excluded), route demand, route
/// distance. Demand columns are scaled by the capacity, all others by the
/// depot horizon.
pub fn build_embeddings(inst: &Instance, sol: &Solution) -> Result<Array2<f64>> {
    if !sol.is_complete() {
        return Err(Error::IncompleteSolution(sol.pool.len()));
    }
    let t_max = inst.t_max();
    let q = inst.capacity();
    let mut emb = Array2::zeros((inst.len(), EMBEDDING_DIM));
    for (id, node) in inst.nodes().iter().enumerate() {
        let mut row = emb.row_mut(id);
        row[0] = node.x / t_max;
        row[1] = node.y / t_max;
        row[2] = node.demand / q;
        row[3] = node.tw_start / t_max;
        row[4] = node.tw_end / t_max;
        row[5] = node.service / t_max;
    }
    for route in &sol.routes {
        let total_demand = route.demand(inst);
        let total_dist = route.cost(inst);
        let mut load = 0.0;
        let mut travelled = 0.0;
        let mut prev = DEPOT;
        for &c in &route.customers {
            load += inst.node(c).demand;
            travelled += inst.dist(prev, c);
            prev = c;
            let mut row = emb.row_mut(c);
            row[6] = load / q;
            row[7] = travelled / t_max;
            row[8] = total_demand / q;
            row[9] = total_dist / t_max;
        }
    }
    Ok(emb)
}

/// What a policy hands to the destroy step for one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    /// Anchor distribution over node ids; the depot entry is always 0.
    pub anchor_probs: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Recurrent state snapshot; empty for stateless policies.
    pub hidden: Vec<f64>,
    pub value_hint: Option<f64>,
}

impl PolicyOutput {
    /// Uniform anchors over customers and Beta(1, 1) coefficients.
    pub fn uniform(n_nodes: usize) -> Self {
        let n_customers = n_nodes.saturating_sub(1).max(1) as f64;
        let mut anchor_probs = vec![1.0 / n_customers; n_nodes];
        anchor_probs[DEPOT] = 0.0;
        PolicyOutput {
            anchor_probs,
            alpha: vec![1.0; n_nodes],
            beta: vec![1.0; n_nodes],
            hidden: Vec::new(),
            value_hint: None,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.anchor_probs.len()
    }
}

/// Draws `k` distinct anchors proportionally to `anchor_probs`, in draw order.
pub fn sample_anchors<R: Rng + ?Sized>(
    out: &PolicyOutput,
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidParameter("anchor count must be >= 1".into()));
    }
    let mut weights = out.anchor_probs.clone();
    if weights.is_empty() {
        return Err(Error::Degenerate("empty anchor distribution".into()));
    }
    weights[DEPOT] = 0.0;
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::Degenerate("anchor probabilities must be finite and >= 0".into()));
    }
    let support = weights.iter().filter(|w| **w > 0.0).count();
    if support < k {
        return Err(Error::Degenerate(format!(
            "{k} anchors requested but only {support} nodes have positive probability"
        )));
    }
    let mut anchors = Vec::with_capacity(k);
    for _ in 0..k {
        let dist = WeightedIndex::new(&weights)
            .map_err(|e| Error::Degenerate(format!("anchor distribution: {e}")))?;
        let a = dist.sample(rng);
        anchors.push(a);
        weights[a] = 0.0;
    }
    Ok(anchors)
}

pub fn sample_coefficient<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Beta parameters must be positive, got ({alpha}, {beta})"
        )));
    }
    let dist = Beta::new(alpha, beta)
        .map_err(|e| Error::InvalidParameter(format!("Beta({alpha}, {beta}): {e}")))?;
    Ok(dist.sample(rng).clamp(0.0, 1.0))
}

/// One coefficient per node (the depot entry stays 0).
pub fn sample_coefficients<R: Rng + ?Sized>(out: &PolicyOutput, rng: &mut R) -> Result<Vec<f64>> {
    let mut coefficients = vec![0.0; out.n_nodes()];
    for i in 1..out.n_nodes() {
        coefficients[i] = sample_coefficient(out.alpha[i], out.beta[i], rng)?;
    }
    Ok(coefficients)
}

/// Source of DPR parameters, called once per iteration on the complete current solution.
pub trait DestroyPolicy {
    fn propose(&mut self, inst: &Instance, sol: &Solution) -> Result<PolicyOutput>;

    /// Reports the anchors that were sampled from the last proposal.
    fn commit_anchors(&mut self, _anchors: &[usize]) {}
}

/// Uniform anchors and uniform route coefficients, independent of the solution.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPolicy;

pub fn random_policy(inst: &Instance, _sol: &Solution) -> PolicyOutput {
    PolicyOutput::uniform(inst.len())
}

impl DestroyPolicy for RandomPolicy {
    fn propose(&mut self, inst: &Instance, sol: &Solution) -> Result<PolicyOutput> {
        Ok(random_policy(inst, sol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Node, Route};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_route() -> (Instance, Solution) {
        let nodes = vec![
            Node::depot(0.0, 0.0, 100.0),
            Node {
                id: 1,
                x: 3.0,
                y: 4.0,
                demand: 5.0,
                tw_start: 0.0,
                tw_end: 100.0,
                service: 0.0,
            },
        ];
        let inst = Instance::new("one", nodes, 10.0).unwrap();
        (inst, Solution::new(vec![Route::new(vec![1])]))
    }

    #[test]
    fn depot_and_customer_rows() {
        let (inst, sol) = single_route();
        let emb = build_embeddings(&inst, &sol).unwrap();
        assert_eq!(emb.dim(), (2, EMBEDDING_DIM));
        let depot: Vec<f64> = emb.row(0).to_vec();
        assert_eq!(depot, vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let c = emb.row(1);
        assert!((c[2] - 0.5).abs() < 1e-15);
        assert!((c[6] - 0.5).abs() < 1e-15);
        assert!((c[7] - 0.05).abs() < 1e-15);
        assert!((c[8] - 0.5).abs() < 1e-15);
        assert!((c[9] - 0.10).abs() < 1e-15);
    }

    #[test]
    fn embeddings_need_complete_solutions() {
        let (inst, _) = single_route();
        assert!(build_embeddings(&inst, &Solution::unassigned(&inst)).is_err());
    }

    #[test]
    fn anchors_one_hot_and_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut out = PolicyOutput::uniform(6);
        out.anchor_probs = vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        assert_eq!(sample_anchors(&out, 1, &mut rng).unwrap(), vec![3]);
        assert!(sample_anchors(&out, 2, &mut rng).is_err());

        let out = PolicyOutput::uniform(6);
        let mut all = sample_anchors(&out, 5, &mut rng).unwrap();
        all.sort();
        assert_eq!(all, vec![1, 2, 3, 4, 5]);

        let zeros = PolicyOutput {
            anchor_probs: vec![0.0; 4],
            ..PolicyOutput::uniform(4)
        };
        assert!(sample_anchors(&zeros, 1, &mut rng).is_err());
    }

    #[test]
    fn anchor_frequencies_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 10;
        let out = PolicyOutput::uniform(n + 1);
        let draws = 100_000;
        let mut counts = vec![0usize; n + 1];
        for _ in 0..draws {
            counts[sample_anchors(&out, 1, &mut rng).unwrap()[0]] += 1;
        }
        assert_eq!(counts[0], 0);
        let p = 1.0 / n as f64;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        for &c in &counts[1..] {
            assert!((c as f64 / draws as f64 - p).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn beta_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = 100_000;
        for (a, b) in [(1.0, 1.0), (2.0, 5.0)] {
            let mut sum = 0.0;
            for _ in 0..draws {
                let x = sample_coefficient(a, b, &mut rng).unwrap();
                assert!((0.0..=1.0).contains(&x));
                sum += x;
            }
            assert!((sum / draws as f64 - a / (a + b)).abs() < 0.01);
        }
        assert!(sample_coefficient(0.0, 1.0, &mut rng).is_err());
        assert!(sample_coefficient(1.0, -2.0, &mut rng).is_err());
    }

    #[test]
    fn random_policy_ignores_solution() {
        let (inst, sol) = single_route();
        let a = random_policy(&inst, &sol);
        let b = random_policy(&inst, &Solution::unassigned(&inst));
        assert_eq!(a, b);
        assert_eq!(a.anchor_probs, vec![0.0, 1.0]);
        assert!(a.alpha[1] == 1.0 && a.beta[1] == 1.0);
    }
}

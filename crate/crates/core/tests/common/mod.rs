//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use dprlns::destroy::DprRequest;
use dprlns::hrgcn::{GraphArcs, RecurrentState, WeightBundle};
use dprlns::model::{Instance, Node, Route, Solution, ViolationKind, DEPOT};
use rand::Rng;

pub fn euclid(a: &Node, b: &Node) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

/// Backward pass for the latest admissible service start at every position,
/// then a forward pass for the earliest; schedulable iff earliest <= latest
/// everywhere.
fn schedulable(inst: &Instance, seq: &[usize], return_to_depot: bool) -> bool {
    let nodes = inst.nodes();
    let depot = &nodes[DEPOT];
    let mut latest = vec![f64::INFINITY; seq.len()];
    for i in (0..seq.len()).rev() {
        let node = &nodes[seq[i]];
        let bound = if i + 1 < seq.len() {
            latest[i + 1] - euclid(node, &nodes[seq[i + 1]]) - node.service
        } else if return_to_depot {
            depot.tw_end - euclid(node, depot) - node.service
        } else {
            f64::INFINITY
        };
        latest[i] = node.tw_end.min(bound);
    }
    let mut ready = 0.0;
    let mut prev = depot;
    for (i, &c) in seq.iter().enumerate() {
        let node = &nodes[c];
        let start = (ready + euclid(prev, node)).max(node.tw_start);
        if start > latest[i] {
            return false;
        }
        ready = start + node.service;
        prev = node;
    }
    true
}

/// Verdict by prefix search: the first customer whose prefix is
/// overloaded or unschedulable is the offender, capacity taking priority.
pub fn brute_force_check(inst: &Instance, seq: &[usize]) -> Option<(ViolationKind, usize)> {
    let mut load = 0.0;
    for j in 0..seq.len() {
        load += inst.node(seq[j]).demand;
        if load > inst.capacity() {
            return Some((ViolationKind::CapacityExceeded, seq[j]));
        }
        if !schedulable(inst, &seq[..=j], false) {
            return Some((ViolationKind::TimeWindowMissed, seq[j]));
        }
    }
    if !schedulable(inst, seq, true) {
        return Some((ViolationKind::DepotReturnLate, DEPOT));
    }
    None
}

pub fn route_length(inst: &Instance, seq: &[usize]) -> f64 {
    let nodes = inst.nodes();
    let mut prev = &nodes[DEPOT];
    let mut total = 0.0;
    for &c in seq {
        total += euclid(prev, &nodes[c]);
        prev = &nodes[c];
    }
    if !seq.is_empty() {
        total += euclid(prev, &nodes[DEPOT]);
    }
    total
}

/// Cheapest feasible (route, position) by full enumeration; `None` route means a new one.
pub fn enumerate_insertion(inst: &Instance, routes: &[Route], c: usize) -> Option<(Option<usize>, usize, f64)> {
    let mut best: Option<(Option<usize>, usize, f64)> = None;
    for (r, route) in routes.iter().enumerate() {
        let old = route_length(inst, &route.customers);
        for k in 0..=route.customers.len() {
            let mut seq = route.customers.clone();
            seq.insert(k, c);
            if brute_force_check(inst, &seq).is_some() {
                continue;
            }
            let delta = route_length(inst, &seq) - old;
            if best.map_or(true, |(_, _, b)| delta < b - 1e-12) {
                best = Some((Some(r), k, delta));
            }
        }
    }
    if brute_force_check(inst, &[c]).is_none() {
        let delta = route_length(inst, &[c]);
        if best.map_or(true, |(_, _, b)| delta < b - 1e-12) {
            best = Some((None, 0, delta));
        }
    }
    best
}

/// Random instance on a 50 x 50 square; `tight` windows make many routes infeasible.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize, tight: bool) -> Instance {
    let t_max = if tight { 150.0 } else { 400.0 };
    let mut nodes = vec![Node::depot(rng.gen_range(20.0..30.0), rng.gen_range(20.0..30.0), t_max)];
    for id in 1..=n {
        let open = rng.gen_range(0.0..t_max * 0.7);
        let width = if tight {
            rng.gen_range(5.0..40.0)
        } else {
            rng.gen_range(40.0..t_max)
        };
        nodes.push(Node {
            id,
            x: rng.gen_range(0.0..50.0),
            y: rng.gen_range(0.0..50.0),
            demand: rng.gen_range(1..=10) as f64,
            tw_start: open,
            tw_end: (open + width).min(t_max),
            service: rng.gen_range(0.0..10.0),
        });
    }
    Instance::new("rand", nodes, rng.gen_range(15..=40) as f64).unwrap()
}

fn customer(id: usize, x: f64, y: f64) -> Node {
    Node {
        id,
        x,
        y,
        demand: 1.0,
        tw_start: 0.0,
        tw_end: 1e5,
        service: 0.0,
    }
}

/// Three routes of 8, 12 and 12 customers arranged so the nodes nearest to
/// the anchor A are, in order, B (another route), C (A's successor) and D
/// (a third route).
pub struct RemovalFixture {
    pub inst: Instance,
    pub sol: Solution,
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
}

impl RemovalFixture {
    pub fn new() -> Self {
        let mut nodes = vec![Node::depot(-1000.0, -1000.0, 1e5)];
        let mut id = 1;
        let mut add = |nodes: &mut Vec<Node>, x: f64, y: f64| {
            nodes.push(customer(id, x, y));
            id += 1;
            id - 1
        };
        let r1: Vec<usize> = (0..8).map(|k| add(&mut nodes, 50.0, -9.0 - 10.0 * k as f64)).collect();
        let xs = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 58.0, 68.0, 78.0, 88.0, 98.0, 108.0];
        let r2: Vec<usize> = xs.iter().map(|&x| add(&mut nodes, x, 0.0)).collect();
        let r3: Vec<usize> = (0..12).map(|k| add(&mut nodes, 50.0, 5.0 + 10.0 * k as f64)).collect();
        let inst = Instance::new("removal-fixture", nodes, 1000.0).unwrap();
        let (a, c, b, d) = (r2[5], r2[6], r3[0], r1[0]);
        let sol = Solution::new(vec![Route::new(r1), Route::new(r2), Route::new(r3)]);
        RemovalFixture { inst, sol, a, b, c, d }
    }

    pub fn request(&self) -> DprRequest {
        let mut coefficients = vec![0.9; self.inst.len()];
        coefficients[DEPOT] = 0.0;
        coefficients[self.a] = 0.5;
        coefficients[self.b] = 0.25;
        coefficients[self.c] = 0.25;
        coefficients[self.d] = 0.5;
        DprRequest {
            anchors: vec![self.a],
            coefficients,
            n_destroy: 12,
        }
    }
}

fn tensor<'a>(bundle: &'a WeightBundle, name: &str) -> (&'a [usize], &'a [f64]) {
    let t = bundle
        .tensors
        .iter()
        .find(|t| t.name == name)
        .unwrap_or_else(|| panic!("missing {name}"));
    (&t.shape, &t.values)
}

fn matvec(bundle: &WeightBundle, name: &str, x: &[f64]) -> Vec<f64> {
    let (shape, w) = tensor(bundle, name);
    let (rows, cols) = (shape[0], shape[1]);
    assert_eq!(cols, x.len(), "{name}");
    (0..rows)
        .map(|r| (0..cols).map(|c| w[r * cols + c] * x[c]).sum())
        .collect()
}

fn vector(bundle: &WeightBundle, name: &str) -> Vec<f64> {
    tensor(bundle, name).1.to_vec()
}

/// Explicit-loop graph convolution over an arc list.
pub fn naive_gcn(bundle: &WeightBundle, block: &str, f: &[Vec<f64>], arcs: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let n = f.len();
    let bias = vector(bundle, &format!("{block}.bias"));
    (0..n)
        .map(|i| {
            let incoming: Vec<usize> = arcs.iter().filter(|a| a.1 == i).map(|a| a.0).collect();
            let mut agg = vec![0.0; f[i].len()];
            for &j in &incoming {
                for (d, v) in agg.iter_mut().enumerate() {
                    *v += f[j][d];
                }
            }
            if !incoming.is_empty() {
                agg.iter_mut().for_each(|v| *v /= incoming.len() as f64);
            }
            let s = matvec(bundle, &format!("{block}.w_self"), &f[i]);
            let m = matvec(bundle, &format!("{block}.w_nbr"), &agg);
            (0..bias.len()).map(|o| (s[o] + m[o] + bias[o]).max(0.0)).collect()
        })
        .collect()
}

fn add(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
        .collect()
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub struct NaiveOutput {
    pub probs: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub hidden: Vec<f64>,
}

/// Straight-line forward pass reading tensors by name from the raw bundle.
pub fn naive_forward(bundle: &WeightBundle, emb: &[Vec<f64>], arcs: &GraphArcs, state: &RecurrentState) -> NaiveOutput {
    let h0 = naive_gcn(bundle, "gcn0", emb, &arcs.knn);
    let h1 = naive_gcn(bundle, "gcn_route1", &h0, &arcs.route_fwd);
    let h2 = add(&naive_gcn(bundle, "gcn_route2", &h1, &arcs.route_fwd), &h0);
    let h3 = naive_gcn(bundle, "gcn_near", &h2, &arcs.knn);
    let h4 = naive_gcn(bundle, "gcn_route_inv1", &h3, &arcs.route_inv);
    let h5 = add(&naive_gcn(bundle, "gcn_route_inv2", &h4, &arcs.route_inv), &h3);

    let x = state.prev_anchor.to_vec();
    let h = state.hidden.to_vec();
    let hs = h.len();
    let gi: Vec<f64> = matvec(bundle, "gru.w_ih", &x)
        .iter()
        .zip(vector(bundle, "gru.b_ih"))
        .map(|(a, b)| a + b)
        .collect();
    let gh: Vec<f64> = matvec(bundle, "gru.w_hh", &h)
        .iter()
        .zip(vector(bundle, "gru.b_hh"))
        .map(|(a, b)| a + b)
        .collect();
    let hidden: Vec<f64> = (0..hs)
        .map(|j| {
            let r = sig(gi[j] + gh[j]);
            let z = sig(gi[hs + j] + gh[hs + j]);
            let n = (gi[2 * hs + j] + r * gh[2 * hs + j]).tanh();
            (1.0 - z) * n + z * h[j]
        })
        .collect();
    let gate: Vec<f64> = matvec(bundle, "gate.w", &hidden)
        .iter()
        .zip(vector(bundle, "gate.b"))
        .map(|(a, b)| sig(a + b))
        .collect();
    let h6: Vec<Vec<f64>> = h5
        .iter()
        .map(|row| row.iter().zip(&gate).map(|(a, g)| a * g).collect())
        .collect();

    let head = |name: &str| -> Vec<f64> {
        let b = vector(bundle, &format!("{name}.b"))[0];
        h6.iter()
            .map(|row| matvec(bundle, &format!("{name}.w"), row)[0] + b)
            .collect()
    };
    let logits = head("anchor_head");
    let mx = logits[1..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits
        .iter()
        .enumerate()
        .map(|(i, l)| if i == DEPOT { 0.0 } else { (l - mx).exp() })
        .collect();
    let z: f64 = exps.iter().sum();
    let pos = |v: f64| if v > 0.0 { v } else { v.exp() - 1.0 } + 1.0 + 1e-6;
    NaiveOutput {
        probs: exps.iter().map(|e| e / z).collect(),
        alpha: head("alpha_head").into_iter().map(pos).collect(),
        beta: head("beta_head").into_iter().map(pos).collect(),
        hidden,
    }
}

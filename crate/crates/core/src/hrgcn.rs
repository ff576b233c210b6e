//! Native forward pass of the hierarchical recurrent graph convolutional actor.
//!
//! The trunk runs two graph hierarchies: a k-NN layer followed by two layers
//! along the current routes (with a residual from the k-NN layer), then the
//! same shape again over k-NN and reversed route arcs. A GRU cell carries
//! state across search iterations and gates the node features before the
//! anchor, alpha and beta heads.
//!
//! All weight matrices use the `[out, in]` layout.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Solution, DEPOT};
use crate::policy::{build_embeddings, DestroyPolicy, PolicyOutput, EMBEDDING_DIM};

pub const WEIGHTS_FORMAT: &str = "dprlns-weights/1";
pub const WEIGHTS_VERSION: u32 = 1;
pub const DEFAULT_N_A: usize = 128;
pub const DEFAULT_K: usize = 10;
/// Added to `elu(x) + 1` so Beta parameters stay strictly positive.
pub const BETA_EPS: f64 = 1e-6;

pub type Arc2 = (usize, usize);

/// Directed arcs `from -> to` of the three graphs the trunk convolves over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphArcs {
    pub knn: Vec<Arc2>,
    pub route_fwd: Vec<Arc2>,
    pub route_inv: Vec<Arc2>,
}

impl GraphArcs {
    pub fn build(inst: &Instance, sol: &Solution, k: usize) -> Self {
        Self::with_knn(knn_arcs(inst, k), sol)
    }

    pub fn with_knn(knn: Vec<Arc2>, sol: &Solution) -> Self {
        let (route_fwd, route_inv) = route_arcs(sol);
        GraphArcs {
            knn,
            route_fwd,
            route_inv,
        }
    }
}

/// Arcs `i -> j` for the `min(k, n - 1)` nearest nodes `j` of every node `i` (depot included).
pub fn knn_arcs(inst: &Instance, k: usize) -> Vec<Arc2> {
    let n = inst.len();
    let k = k.min(n - 1);
    let mut arcs = Vec::with_capacity(n * k);
    let mut others: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        others.clear();
        others.extend((0..n).filter(|&j| j != i));
        others.sort_by(|&a, &b| inst.dist(i, a).total_cmp(&inst.dist(i, b)).then(a.cmp(&b)));
        arcs.extend(others[..k].iter().map(|&j| (i, j)));
    }
    arcs
}

/// Consecutive customer pairs along every route, and the same pairs reversed.
/// Depot legs are not part of the route graphs.
pub fn route_arcs(sol: &Solution) -> (Vec<Arc2>, Vec<Arc2>) {
    let fwd: Vec<Arc2> = sol
        .routes
        .iter()
        .flat_map(|r| r.customers.windows(2).map(|w| (w[0], w[1])))
        .collect();
    let inv = fwd.iter().rev().map(|&(a, b)| (b, a)).collect();
    (fwd, inv)
}

/// In-neighbor lists in compressed form.
struct Adjacency {
    offsets: Vec<usize>,
    sources: Vec<usize>,
}

impl Adjacency {
    fn new(n: usize, arcs: &[Arc2]) -> Result<Self> {
        let mut counts = vec![0usize; n + 1];
        for &(from, to) in arcs {
            if from >= n || to >= n {
                return Err(Error::InvalidParameter(format!(
                    "arc ({from}, {to}) references a node outside 0..{n}"
                )));
            }
            counts[to + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut sources = vec![0; arcs.len()];
        for &(from, to) in arcs {
            sources[fill[to]] = from;
            fill[to] += 1;
        }
        Ok(Adjacency {
            offsets: counts,
            sources,
        })
    }

    /// Row `i` is the mean of the source rows of arcs entering `i` (zero without in-arcs).
    fn mean(&self, features: &Array2<f64>) -> Array2<f64> {
        let (n, d) = features.dim();
        let mut agg = Array2::zeros((n, d));
        for i in 0..n {
            let srcs = &self.sources[self.offsets[i]..self.offsets[i + 1]];
            if srcs.is_empty() {
                continue;
            }
            let mut row = agg.row_mut(i);
            for &j in srcs {
                row += &features.row(j);
            }
            row /= srcs.len() as f64;
        }
        agg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnWeights {
    pub w_self: Array2<f64>,
    pub w_nbr: Array2<f64>,
    pub bias: Array1<f64>,
}

impl GcnWeights {
    pub fn zeros(d_in: usize, d_out: usize) -> Self {
        GcnWeights {
            w_self: Array2::zeros((d_out, d_in)),
            w_nbr: Array2::zeros((d_out, d_in)),
            bias: Array1::zeros(d_out),
        }
    }

    pub fn d_in(&self) -> usize {
        self.w_self.ncols()
    }

    pub fn d_out(&self) -> usize {
        self.w_self.nrows()
    }
}

/// `relu(W_self f_i + W_nbr mean_{j -> i} f_j + b)` for every node.
pub fn gcn_layer(features: &Array2<f64>, arcs: &[Arc2], w: &GcnWeights) -> Result<Array2<f64>> {
    let adj = Adjacency::new(features.nrows(), arcs)?;
    gcn_apply(features, &adj, w, "gcn")
}

fn gcn_apply(features: &Array2<f64>, adj: &Adjacency, w: &GcnWeights, name: &str) -> Result<Array2<f64>> {
    if features.ncols() != w.d_in() || w.w_nbr.dim() != w.w_self.dim() || w.bias.len() != w.d_out() {
        return Err(Error::ShapeMismatch {
            name: name.to_string(),
            expected: vec![features.nrows(), w.d_in()],
            found: vec![features.nrows(), features.ncols()],
        });
    }
    let agg = adj.mean(features);
    let mut out = features.dot(&w.w_self.t()) + agg.dot(&w.w_nbr.t());
    out += &w.bias;
    out.mapv_inplace(|v| v.max(0.0));
    Ok(out)
}

/// GRU cell with gate blocks ordered reset, update, candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct GruWeights {
    pub w_ih: Array2<f64>,
    pub w_hh: Array2<f64>,
    pub b_ih: Array1<f64>,
    pub b_hh: Array1<f64>,
}

impl GruWeights {
    pub fn hidden_size(&self) -> usize {
        self.w_hh.ncols()
    }

    pub fn step(&self, x: ArrayView1<f64>, h: ArrayView1<f64>) -> Array1<f64> {
        let hs = self.hidden_size();
        let gi = self.w_ih.dot(&x) + &self.b_ih;
        let gh = self.w_hh.dot(&h) + &self.b_hh;
        let mut out = Array1::zeros(hs);
        for j in 0..hs {
            let r = sigmoid(gi[j] + gh[j]);
            let z = sigmoid(gi[hs + j] + gh[hs + j]);
            let cand = (gi[2 * hs + j] + r * gh[2 * hs + j]).tanh();
            out[j] = (1.0 - z) * cand + z * h[j];
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Linear {
    fn apply_rows(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w.t()) + &self.b
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub n_a: usize,
    pub n_h: usize,
    pub k: usize,
    pub version: u32,
}

impl BundleMeta {
    pub fn new(n_a: usize, n_h: usize, k: usize) -> Self {
        BundleMeta {
            n_a,
            n_h,
            k,
            version: WEIGHTS_VERSION,
        }
    }
}

impl Default for BundleMeta {
    fn default() -> Self {
        BundleMeta::new(DEFAULT_N_A, DEFAULT_N_A, DEFAULT_K)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// Portable weight file: metadata plus named row-major tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightBundle {
    pub format: String,
    pub meta: BundleMeta,
    pub tensors: Vec<Tensor>,
}

const GCN_BLOCKS: [&str; 6] = [
    "gcn0",
    "gcn_route1",
    "gcn_route2",
    "gcn_near",
    "gcn_route_inv1",
    "gcn_route_inv2",
];

/// Declared tensor names and shapes, in file order.
pub fn tensor_specs(meta: &BundleMeta) -> Vec<(String, Vec<usize>)> {
    let (a, h) = (meta.n_a, meta.n_h);
    let mut specs = Vec::new();
    for block in GCN_BLOCKS {
        let d_in = if block == "gcn0" { EMBEDDING_DIM } else { a };
        specs.push((format!("{block}.w_self"), vec![a, d_in]));
        specs.push((format!("{block}.w_nbr"), vec![a, d_in]));
        specs.push((format!("{block}.bias"), vec![a]));
    }
    specs.push(("gru.w_ih".into(), vec![3 * h, a]));
    specs.push(("gru.w_hh".into(), vec![3 * h, h]));
    specs.push(("gru.b_ih".into(), vec![3 * h]));
    specs.push(("gru.b_hh".into(), vec![3 * h]));
    specs.push(("gate.w".into(), vec![a, h]));
    specs.push(("gate.b".into(), vec![a]));
    for head in ["anchor_head", "alpha_head", "beta_head"] {
        specs.push((format!("{head}.w"), vec![1, a]));
        specs.push((format!("{head}.b"), vec![1]));
    }
    specs
}

impl WeightBundle {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let bundle: WeightBundle = serde_json::from_str(text)?;
        if bundle.format != WEIGHTS_FORMAT {
            return Err(Error::Format(bundle.format));
        }
        Ok(bundle)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Uniform `±1/sqrt(fan_in)` initialization of every declared tensor.
    pub fn random<R: Rng + ?Sized>(meta: BundleMeta, rng: &mut R) -> Self {
        let tensors = tensor_specs(&meta)
            .into_iter()
            .map(|(name, shape)| {
                let fan_in = if shape.len() == 2 { shape[1] } else { meta.n_a };
                let bound = 1.0 / (fan_in as f64).sqrt();
                let len = shape.iter().product();
                let values = (0..len).map(|_| rng.gen_range(-bound..=bound)).collect();
                Tensor {
                    name,
                    shape,
                    values,
                }
            })
            .collect();
        WeightBundle {
            format: WEIGHTS_FORMAT.to_string(),
            meta,
            tensors,
        }
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.iter_mut().find(|t| t.name == name)
    }
}

/// Validated, shaped view of a weight bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct HrgcnWeights {
    pub meta: BundleMeta,
    pub gcn0: GcnWeights,
    pub gcn_route: [GcnWeights; 2],
    pub gcn_near: GcnWeights,
    pub gcn_route_inv: [GcnWeights; 2],
    pub gru: GruWeights,
    pub gate: Linear,
    pub anchor_head: Linear,
    pub alpha_head: Linear,
    pub beta_head: Linear,
}

impl HrgcnWeights {
    /// Every declared tensor must be present exactly once with its declared
    /// shape and finite values; unknown tensors are rejected.
    pub fn from_bundle(bundle: &WeightBundle) -> Result<Self> {
        let meta = bundle.meta;
        if meta.n_a == 0 || meta.n_h == 0 || meta.k == 0 {
            return Err(Error::InvalidParameter(format!(
                "bundle metadata must be positive: {meta:?}"
            )));
        }
        if meta.version != WEIGHTS_VERSION {
            return Err(Error::Format(format!("weights version {}", meta.version)));
        }
        let specs = tensor_specs(&meta);
        let mut slots: Vec<Option<&Tensor>> = vec![None; specs.len()];
        for t in &bundle.tensors {
            let idx = specs
                .iter()
                .position(|(n, _)| *n == t.name)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown tensor {:?}", t.name)))?;
            if slots[idx].is_some() {
                return Err(Error::InvalidParameter(format!("duplicate tensor {:?}", t.name)));
            }
            if t.shape != specs[idx].1 {
                return Err(Error::ShapeMismatch {
                    name: t.name.clone(),
                    expected: specs[idx].1.clone(),
                    found: t.shape.clone(),
                });
            }
            if t.values.len() != t.shape.iter().product::<usize>() {
                return Err(Error::ShapeMismatch {
                    name: t.name.clone(),
                    expected: vec![t.shape.iter().product()],
                    found: vec![t.values.len()],
                });
            }
            if t.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(t.name.clone()));
            }
            slots[idx] = Some(t);
        }
        if let Some(missing) = slots.iter().position(Option::is_none) {
            return Err(Error::InvalidParameter(format!(
                "missing tensor {:?}",
                specs[missing].0
            )));
        }

        let mut next = slots.into_iter().map(|t| t.expect("checked above"));
        let mut mat = || {
            let t = next.next().expect("declared tensor");
            match t.shape.as_slice() {
                [r, c] => Tensor2::M(
                    Array2::from_shape_vec((*r, *c), t.values.clone()).expect("shape checked"),
                ),
                _ => Tensor2::V(Array1::from_vec(t.values.clone())),
            }
        };
        let mut gcn = || GcnWeights {
            w_self: mat().m(),
            w_nbr: mat().m(),
            bias: mat().v(),
        };
        let gcn0 = gcn();
        let gcn_route = [gcn(), gcn()];
        let gcn_near = gcn();
        let gcn_route_inv = [gcn(), gcn()];
        let gru = GruWeights {
            w_ih: mat().m(),
            w_hh: mat().m(),
            b_ih: mat().v(),
            b_hh: mat().v(),
        };
        let mut linear = || Linear {
            w: mat().m(),
            b: mat().v(),
        };
        Ok(HrgcnWeights {
            meta,
            gcn0,
            gcn_route,
            gcn_near,
            gcn_route_inv,
            gru,
            gate: linear(),
            anchor_head: linear(),
            alpha_head: linear(),
            beta_head: linear(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bundle(&WeightBundle::read(path)?)
    }

    pub fn random<R: Rng + ?Sized>(meta: BundleMeta, rng: &mut R) -> Self {
        Self::from_bundle(&WeightBundle::random(meta, rng)).expect("declared shapes")
    }

    /// Inverse of [`HrgcnWeights::from_bundle`].
    pub fn to_bundle(&self) -> WeightBundle {
        let mut values: Vec<Vec<f64>> = Vec::new();
        let push_gcn = |g: &GcnWeights, values: &mut Vec<Vec<f64>>| {
            values.push(g.w_self.iter().copied().collect());
            values.push(g.w_nbr.iter().copied().collect());
            values.push(g.bias.to_vec());
        };
        push_gcn(&self.gcn0, &mut values);
        push_gcn(&self.gcn_route[0], &mut values);
        push_gcn(&self.gcn_route[1], &mut values);
        push_gcn(&self.gcn_near, &mut values);
        push_gcn(&self.gcn_route_inv[0], &mut values);
        push_gcn(&self.gcn_route_inv[1], &mut values);
        values.push(self.gru.w_ih.iter().copied().collect());
        values.push(self.gru.w_hh.iter().copied().collect());
        values.push(self.gru.b_ih.to_vec());
        values.push(self.gru.b_hh.to_vec());
        for l in [&self.gate, &self.anchor_head, &self.alpha_head, &self.beta_head] {
            values.push(l.w.iter().copied().collect());
            values.push(l.b.to_vec());
        }
        let tensors = tensor_specs(&self.meta)
            .into_iter()
            .zip(values)
            .map(|((name, shape), values)| Tensor {
                name,
                shape,
                values,
            })
            .collect();
        WeightBundle {
            format: WEIGHTS_FORMAT.to_string(),
            meta: self.meta,
            tensors,
        }
    }
}

enum Tensor2 {
    M(Array2<f64>),
    V(Array1<f64>),
}

impl Tensor2 {
    fn m(self) -> Array2<f64> {
        match self {
            Tensor2::M(m) => m,
            Tensor2::V(_) => unreachable!("declared as matrix"),
        }
    }

    fn v(self) -> Array1<f64> {
        match self {
            Tensor2::V(v) => v,
            Tensor2::M(_) => unreachable!("declared as vector"),
        }
    }
}

/// Recurrent context carried between search iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentState {
    pub hidden: Array1<f64>,
    /// Final embedding of the previous iteration's anchor(s); zero before the first.
    pub prev_anchor: Array1<f64>,
    /// Number of forward passes folded into `hidden`.
    pub steps: usize,
}

impl RecurrentState {
    pub fn zeros(meta: &BundleMeta) -> Self {
        RecurrentState {
            hidden: Array1::zeros(meta.n_h),
            prev_anchor: Array1::zeros(meta.n_a),
            steps: 0,
        }
    }

    /// Stores the mean of the anchors' gated embeddings as the next GRU input.
    pub fn commit_anchors(&mut self, features: &Array2<f64>, anchors: &[usize]) {
        if anchors.is_empty() {
            return;
        }
        let mut mean = Array1::zeros(features.ncols());
        for &a in anchors {
            mean += &features.row(a);
        }
        mean /= anchors.len() as f64;
        self.prev_anchor = mean;
    }
}

/// Intermediate node features of the two graph hierarchies.
#[derive(Debug, Clone, PartialEq)]
pub struct Trunk {
    pub h0: Array2<f64>,
    pub h1: Array2<f64>,
    pub h2: Array2<f64>,
    pub h3: Array2<f64>,
    pub h4: Array2<f64>,
    pub h5: Array2<f64>,
}

pub fn trunk(emb: &Array2<f64>, arcs: &GraphArcs, w: &HrgcnWeights) -> Result<Trunk> {
    let n = emb.nrows();
    if emb.ncols() != EMBEDDING_DIM || n < 2 {
        return Err(Error::ShapeMismatch {
            name: "embeddings".into(),
            expected: vec![n.max(2), EMBEDDING_DIM],
            found: vec![n, emb.ncols()],
        });
    }
    if emb.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("embeddings".into()));
    }
    let knn = Adjacency::new(n, &arcs.knn)?;
    let fwd = Adjacency::new(n, &arcs.route_fwd)?;
    let inv = Adjacency::new(n, &arcs.route_inv)?;

    let h0 = gcn_apply(emb, &knn, &w.gcn0, "gcn0")?;
    let h1 = gcn_apply(&h0, &fwd, &w.gcn_route[0], "gcn_route1")?;
    let h2 = gcn_apply(&h1, &fwd, &w.gcn_route[1], "gcn_route2")? + &h0;
    let h3 = gcn_apply(&h2, &knn, &w.gcn_near, "gcn_near")?;
    let h4 = gcn_apply(&h3, &inv, &w.gcn_route_inv[0], "gcn_route_inv1")?;
    let h5 = gcn_apply(&h4, &inv, &w.gcn_route_inv[1], "gcn_route_inv2")? + &h3;
    Ok(Trunk {
        h0,
        h1,
        h2,
        h3,
        h4,
        h5,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub policy: PolicyOutput,
    /// Gated node embeddings fed to the heads; rows by node id.
    pub features: Array2<f64>,
    /// Advanced state; `prev_anchor` is updated later via `commit_anchors`.
    pub state: RecurrentState,
}

pub fn hrgcn_forward(
    emb: &Array2<f64>,
    arcs: &GraphArcs,
    state: &RecurrentState,
    w: &HrgcnWeights,
) -> Result<ForwardOutput> {
    let (n_a, n_h) = (w.meta.n_a, w.meta.n_h);
    if state.hidden.len() != n_h || state.prev_anchor.len() != n_a {
        return Err(Error::ShapeMismatch {
            name: "recurrent state".into(),
            expected: vec![n_h, n_a],
            found: vec![state.hidden.len(), state.prev_anchor.len()],
        });
    }
    if state.hidden.iter().chain(state.prev_anchor.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("recurrent state".into()));
    }
    let t = trunk(emb, arcs, w)?;

    let hidden = w.gru.step(state.prev_anchor.view(), state.hidden.view());
    let gate = (w.gate.w.dot(&hidden) + &w.gate.b).mapv(sigmoid);
    let features = t.h5 * &gate;

    let logits = w.anchor_head.apply_rows(&features).remove_axis(Axis(1));
    let alpha_raw = w.alpha_head.apply_rows(&features).remove_axis(Axis(1));
    let beta_raw = w.beta_head.apply_rows(&features).remove_axis(Axis(1));

    let n = features.nrows();
    let max = (0..n)
        .filter(|&i| i != DEPOT)
        .map(|i| logits[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut anchor_probs = vec![0.0; n];
    let mut total = 0.0;
    for i in (0..n).filter(|&i| i != DEPOT) {
        let e = (logits[i] - max).exp();
        anchor_probs[i] = e;
        total += e;
    }
    for p in &mut anchor_probs {
        *p /= total;
    }
    let positive = |x: f64| elu(x) + 1.0 + BETA_EPS;
    let alpha: Vec<f64> = alpha_raw.iter().map(|&x| positive(x)).collect();
    let beta: Vec<f64> = beta_raw.iter().map(|&x| positive(x)).collect();

    let all_finite = anchor_probs
        .iter()
        .chain(&alpha)
        .chain(&beta)
        .chain(hidden.iter())
        .all(|v| v.is_finite());
    if !all_finite {
        return Err(Error::NonFinite("hrgcn output".into()));
    }

    let policy = PolicyOutput {
        anchor_probs,
        alpha,
        beta,
        hidden: hidden.to_vec(),
        value_hint: None,
    };
    let state = RecurrentState {
        hidden,
        prev_anchor: state.prev_anchor.clone(),
        steps: state.steps + 1,
    };
    Ok(ForwardOutput {
        policy,
        features,
        state,
    })
}

/// Destroy policy backed by the network, one instance per search run.
#[derive(Debug, Clone)]
pub struct NeuralPolicy {
    weights: Arc<HrgcnWeights>,
    knn: Vec<Arc2>,
    state: RecurrentState,
    features: Option<Array2<f64>>,
}

impl NeuralPolicy {
    pub fn new(weights: Arc<HrgcnWeights>, inst: &Instance) -> Self {
        let knn = knn_arcs(inst, weights.meta.k);
        let state = RecurrentState::zeros(&weights.meta);
        NeuralPolicy {
            weights,
            knn,
            state,
            features: None,
        }
    }

    pub fn state(&self) -> &RecurrentState {
        &self.state
    }
}

impl DestroyPolicy for NeuralPolicy {
    fn propose(&mut self, inst: &Instance, sol: &Solution) -> Result<PolicyOutput> {
        let emb = build_embeddings(inst, sol)?;
        let arcs = GraphArcs::with_knn(self.knn.clone(), sol);
        let out = hrgcn_forward(&emb, &arcs, &self.state, &self.weights)?;
        self.state = out.state;
        self.features = Some(out.features);
        Ok(out.policy)
    }

    fn commit_anchors(&mut self, anchors: &[usize]) {
        if let Some(f) = &self.features {
            self.state.commit_anchors(f, anchors);
        }
    }
}

//! Instance and solution serialization, Solomon parsing and the synthetic generator.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Node, Route, Solution, DEPOT};

pub const INSTANCE_FORMAT: &str = "dprlns-instance/1";
pub const SOLUTION_FORMAT: &str = "dprlns-solution/1";

/// Capacity assigned to synthetic instances.
pub const SYNTHETIC_CAPACITY: f64 = 200.0;
const MAP_SIZE: f64 = 100.0;
const CLUSTER_SPREAD: f64 = 5.0;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses the classic Solomon / Gehring & Homberger text layout.
///
/// The vehicle count is read but ignored: the fleet is unbounded.
pub fn parse_solomon(text: &str) -> Result<Instance> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .collect();
    let last = lines.len();
    let mut it = lines.iter().filter(|(_, l)| !l.is_empty()).peekable();

    let (_, name) = it.next().ok_or_else(|| parse_err(0, "empty input"))?;
    let name = name.to_string();

    let starts = |l: &str, key: &str| l.to_ascii_uppercase().starts_with(key);

    match it.next() {
        Some((_, l)) if starts(l, "VEHICLE") => {}
        Some((n, _)) => return Err(parse_err(*n, "expected VEHICLE section")),
        None => return Err(parse_err(last, "missing VEHICLE section")),
    }
    if let Some((_, l)) = it.peek() {
        if starts(l, "NUMBER") {
            it.next();
        }
    }
    let capacity = match it.next() {
        Some((n, l)) => {
            let fields = numbers(l, *n)?;
            if fields.len() != 2 {
                return Err(parse_err(*n, "expected NUMBER and CAPACITY"));
            }
            fields[1]
        }
        None => return Err(parse_err(last, "missing vehicle data")),
    };

    match it.next() {
        Some((_, l)) if starts(l, "CUSTOMER") => {}
        Some((n, _)) => return Err(parse_err(*n, "expected CUSTOMER section")),
        None => return Err(parse_err(last, "missing CUSTOMER section")),
    }
    // column header line(s)
    while let Some((_, l)) = it.peek() {
        if l.starts_with(|c: char| c.is_ascii_digit()) {
            break;
        }
        it.next();
    }

    let mut nodes = Vec::new();
    for (n, l) in it {
        let f = numbers(l, *n)?;
        if f.len() != 7 {
            return Err(parse_err(*n, format!("expected 7 columns, found {}", f.len())));
        }
        let id = f[0] as usize;
        if f[0] != id as f64 || id != nodes.len() {
            return Err(parse_err(*n, format!("expected customer number {}", nodes.len())));
        }
        if id == DEPOT && f[3] != 0.0 {
            return Err(parse_err(*n, "depot demand must be zero"));
        }
        nodes.push(Node {
            id,
            x: f[1],
            y: f[2],
            demand: f[3],
            tw_start: f[4],
            tw_end: f[5],
            service: f[6],
        });
    }
    if nodes.is_empty() {
        return Err(parse_err(last, "no customer rows"));
    }
    Instance::new(name, nodes, capacity)
}

fn numbers(line: &str, n: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| parse_err(n, format!("non-numeric field {tok:?}")))
        })
        .collect()
}

/// Keeps the depot and customers `1..=n`.
pub fn take_prefix(inst: &Instance, n: usize) -> Result<Instance> {
    if n == 0 || n > inst.n_customers() {
        return Err(Error::InvalidParameter(format!(
            "prefix length {n} outside 1..={}",
            inst.n_customers()
        )));
    }
    let nodes = inst.nodes()[..=n].to_vec();
    let name = if n == inst.n_customers() {
        inst.name().to_string()
    } else {
        format!("{}.{n}", inst.name())
    };
    Instance::new(name, nodes, inst.capacity())
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    format: String,
    name: String,
    capacity: f64,
    nodes: Vec<Node>,
}

pub fn instance_to_string(inst: &Instance) -> Result<String> {
    let doc = InstanceDoc {
        format: INSTANCE_FORMAT.to_string(),
        name: inst.name().to_string(),
        capacity: inst.capacity(),
        nodes: inst.nodes().to_vec(),
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

pub fn instance_from_str(text: &str) -> Result<Instance> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    if doc.format != INSTANCE_FORMAT {
        return Err(Error::Format(doc.format));
    }
    Instance::new(doc.name, doc.nodes, doc.capacity)
}

/// Reads either the native document or a Solomon text file, sniffing the first byte.
pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        instance_from_str(&text)
    } else {
        parse_solomon(&text)
    }
}

pub fn write_instance(path: impl AsRef<Path>, inst: &Instance) -> Result<()> {
    fs::write(path, instance_to_string(inst)?)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolutionDoc {
    pub format: String,
    pub instance: String,
    pub cost: f64,
    pub vehicles: usize,
    pub routes: Vec<Vec<usize>>,
}

impl SolutionDoc {
    pub fn new(inst: &Instance, sol: &Solution) -> Result<Self> {
        Ok(SolutionDoc {
            format: SOLUTION_FORMAT.to_string(),
            instance: inst.name().to_string(),
            cost: sol.cost(inst)?,
            vehicles: sol.n_vehicles(),
            routes: sol.routes.iter().map(|r| r.customers.clone()).collect(),
        })
    }

    pub fn to_solution(&self) -> Result<Solution> {
        if self.format != SOLUTION_FORMAT {
            return Err(Error::Format(self.format.clone()));
        }
        Ok(Solution::new(
            self.routes.iter().cloned().map(Route::new).collect(),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorParams {
    pub n_customers: usize,
    /// Probability that a customer's window spans the whole horizon.
    pub p_start: f64,
    pub seed: u64,
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_customers == 0 {
            return Err(Error::InvalidParameter("n_customers must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p_start) {
            return Err(Error::InvalidParameter(format!(
                "p_start must lie in [0, 1], got {}",
                self.p_start
            )));
        }
        Ok(())
    }
}

/// Demand rule: Normal(20, sd 11) rounded, resampled from U{5..36} outside [1, 45].
pub fn sample_demand<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let normal = Normal::<f64>::new(20.0, 11.0).expect("valid normal");
    let d = normal.sample(rng).round();
    if (1.0..=45.0).contains(&d) {
        d
    } else {
        rng.gen_range(5..=36) as f64
    }
}

/// Builds a random CVRPTW instance; fully determined by `params.seed`.
///
/// Limited windows are redrawn until a dedicated vehicle can serve the
/// customer, so every generated instance is solvable.
pub fn generate_synthetic(params: &GeneratorParams) -> Result<Instance> {
    params.validate()?;
    let n = params.n_customers;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let clustered = rng.gen_bool(0.5);
    let depot_xy = (rng.gen_range(0.0..=MAP_SIZE), rng.gen_range(0.0..=MAP_SIZE));
    let positions: Vec<(f64, f64)> = if clustered {
        let n_clusters = rng.gen_range(5..(n / 5).max(6));
        let centers: Vec<(f64, f64)> = (0..n_clusters)
            .map(|_| (rng.gen_range(0.0..=MAP_SIZE), rng.gen_range(0.0..=MAP_SIZE)))
            .collect();
        let spread = Normal::new(0.0, CLUSTER_SPREAD).expect("valid normal");
        (0..n)
            .map(|_| {
                let (cx, cy) = centers[rng.gen_range(0..n_clusters)];
                let x = (cx + spread.sample(&mut rng)).clamp(0.0, MAP_SIZE);
                let y = (cy + spread.sample(&mut rng)).clamp(0.0, MAP_SIZE);
                (x, y)
            })
            .collect()
    } else {
        (0..n)
            .map(|_| (rng.gen_range(0.0..=MAP_SIZE), rng.gen_range(0.0..=MAP_SIZE)))
            .collect()
    };

    let service = rng.gen_range(10..=100) as f64;
    let t_max = rng.gen_range(600..=10_000) as f64;

    let mut nodes = Vec::with_capacity(n + 1);
    nodes.push(Node::depot(depot_xy.0, depot_xy.1, t_max));
    for (i, &(x, y)) in positions.iter().enumerate() {
        let demand = sample_demand(&mut rng);
        let leg = (x - depot_xy.0).hypot(y - depot_xy.1);
        let (tw_start, tw_end) = if rng.gen_bool(params.p_start) {
            (0.0, t_max)
        } else {
            sample_window(&mut rng, t_max, leg, service)
        };
        nodes.push(Node {
            id: i + 1,
            x,
            y,
            demand,
            tw_start,
            tw_end,
            service,
        });
    }
    Instance::new(format!("syn{n}-{}", params.seed), nodes, SYNTHETIC_CAPACITY)
}

fn sample_window<R: Rng + ?Sized>(rng: &mut R, t_max: f64, leg: f64, service: f64) -> (f64, f64) {
    let horizon = t_max as i64;
    for _ in 0..1000 {
        let gap = rng.gen_range(10..=1000).min(horizon);
        let start = rng.gen_range(0..=horizon - gap) as f64;
        let end = start + gap as f64;
        if leg <= end && start.max(leg) + service + leg <= t_max {
            return (start, end);
        }
    }
    (0.0, t_max)
}

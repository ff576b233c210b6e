//! CVRPTW instance and solution model.
//!
//! Travel time equals Euclidean distance (unit speed) and distances are kept
//! at full floating precision. Node 0 is always the depot.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEPOT: usize = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub demand: f64,
    pub tw_start: f64,
    pub tw_end: f64,
    pub service: f64,
}

impl Node {
    pub fn depot(x: f64, y: f64, t_max: f64) -> Self {
        Node {
            id: DEPOT,
            x,
            y,
            demand: 0.0,
            tw_start: 0.0,
            tw_end: t_max,
            service: 0.0,
        }
    }
}

/// An immutable problem instance with a precomputed distance matrix.
#[derive(Debug, Clone)]
pub struct Instance {
    name: String,
    nodes: Vec<Node>,
    capacity: f64,
    dist: Vec<f64>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.nodes == other.nodes && self.capacity == other.capacity
    }
}

impl Instance {
    /// Validates the nodes and builds the distance matrix.
    pub fn new(name: impl Into<String>, nodes: Vec<Node>, capacity: f64) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidInstance(msg));
        if nodes.len() < 2 {
            return invalid("an instance needs a depot and at least one customer".into());
        }
        if !(capacity.is_finite() && capacity > 0.0) {
            return invalid(format!("capacity must be positive, got {capacity}"));
        }
        let depot = &nodes[DEPOT];
        if depot.demand != 0.0 || depot.service != 0.0 || depot.tw_start != 0.0 {
            return invalid("depot must have zero demand, zero service and window start 0".into());
        }
        let t_max = depot.tw_end;
        for (idx, n) in nodes.iter().enumerate() {
            if n.id != idx {
                return invalid(format!("node at position {idx} has id {}", n.id));
            }
            let fields = [n.x, n.y, n.demand, n.tw_start, n.tw_end, n.service];
            if fields.iter().any(|v| !v.is_finite()) {
                return invalid(format!("node {idx} has a non-finite field"));
            }
            if n.tw_start > n.tw_end {
                return invalid(format!("node {idx}: window start exceeds window end"));
            }
            if n.demand < 0.0 || n.service < 0.0 {
                return invalid(format!("node {idx}: negative demand or service time"));
            }
            if n.tw_start < 0.0 || n.tw_end > t_max {
                return invalid(format!("node {idx}: window outside the depot horizon [0, {t_max}]"));
            }
        }

        let n = nodes.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (nodes[i].x - nodes[j].x).hypot(nodes[i].y - nodes[j].y);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Ok(Instance {
            name: name.into(),
            nodes,
            capacity,
            dist,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// Time span of the depot window.
    pub fn t_max(&self) -> f64 {
        self.nodes[DEPOT].tw_end
    }

    /// Number of nodes including the depot.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_customers(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn customers(&self) -> impl Iterator<Item = usize> {
        1..self.nodes.len()
    }

    pub fn is_customer(&self, id: usize) -> bool {
        id != DEPOT && id < self.nodes.len()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.nodes.len() + j]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Route {
    pub customers: Vec<usize>,
}

impl Route {
    pub fn new(customers: Vec<usize>) -> Self {
        Route { customers }
    }

    pub fn len(&self) -> usize {
        self.customers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.customers.is_empty()
    }

    /// Depot to depot travelled distance.
    pub fn cost(&self, inst: &Instance) -> f64 {
        path_length(inst, self.customers.iter().copied())
    }

    pub fn demand(&self, inst: &Instance) -> f64 {
        self.customers.iter().map(|&c| inst.node(c).demand).sum()
    }
}

/// Length of the closed tour depot -> ids... -> depot.
pub fn path_length(inst: &Instance, ids: impl IntoIterator<Item = usize>) -> f64 {
    let mut prev = DEPOT;
    let mut total = 0.0;
    for c in ids {
        total += inst.dist(prev, c);
        prev = c;
    }
    total + inst.dist(prev, DEPOT)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    CapacityExceeded,
    TimeWindowMissed,
    DepotReturnLate,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::CapacityExceeded => "capacity exceeded",
            ViolationKind::TimeWindowMissed => "time window missed",
            ViolationKind::DepotReturnLate => "late return to depot",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visit {
    pub node: usize,
    pub arrival: f64,
    pub wait: f64,
    pub departure: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schedule {
    pub visits: Vec<Visit>,
    pub return_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RouteCheck {
    Feasible(Schedule),
    Violation { kind: ViolationKind, node: usize },
}

impl RouteCheck {
    pub fn is_feasible(&self) -> bool {
        matches!(self, RouteCheck::Feasible(_))
    }
}

/// Forward time-window recursion from the depot at time 0.
///
/// At each node the load is checked before the arrival time, so a node
/// violating both reports `CapacityExceeded`. A late return reports the
/// depot id.
pub fn check_route(inst: &Instance, route: &Route) -> Result<RouteCheck> {
    if let Some(&bad) = route.customers.iter().find(|&&c| !inst.is_customer(c)) {
        return Err(Error::UnknownCustomer(bad));
    }
    let mut schedule = Schedule {
        visits: Vec::with_capacity(route.len()),
        return_time: 0.0,
    };
    let verdict = simulate(inst, route.customers.iter().copied(), |v| {
        schedule.visits.push(v)
    });
    Ok(match verdict {
        Ok(return_time) => {
            schedule.return_time = return_time;
            RouteCheck::Feasible(schedule)
        }
        Err((kind, node)) => RouteCheck::Violation { kind, node },
    })
}

/// Feasibility of a sequence of (known) customer ids without building a schedule.
pub fn is_feasible_sequence(inst: &Instance, ids: impl IntoIterator<Item = usize>) -> bool {
    simulate(inst, ids, |_| {}).is_ok()
}

fn simulate(
    inst: &Instance,
    ids: impl IntoIterator<Item = usize>,
    mut on_visit: impl FnMut(Visit),
) -> std::result::Result<f64, (ViolationKind, usize)> {
    let mut load = 0.0;
    let mut time = 0.0;
    let mut prev = DEPOT;
    for c in ids {
        let node = inst.node(c);
        load += node.demand;
        if load > inst.capacity() {
            return Err((ViolationKind::CapacityExceeded, c));
        }
        let arrival = time + inst.dist(prev, c);
        if arrival > node.tw_end {
            return Err((ViolationKind::TimeWindowMissed, c));
        }
        let start = arrival.max(node.tw_start);
        let departure = start + node.service;
        on_visit(Visit {
            node: c,
            arrival,
            wait: start - arrival,
            departure,
        });
        time = departure;
        prev = c;
    }
    let back = time + inst.dist(prev, DEPOT);
    if back > inst.t_max() {
        return Err((ViolationKind::DepotReturnLate, DEPOT));
    }
    Ok(back)
}

/// A (possibly partial) solution: routes plus the pool of removed customers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Solution {
    pub routes: Vec<Route>,
    /// Removed customers in removal order.
    pub pool: Vec<usize>,
}

impl Solution {
    pub fn new(routes: Vec<Route>) -> Self {
        let mut s = Solution {
            routes,
            pool: Vec::new(),
        };
        s.normalize();
        s
    }

    /// Every customer in the pool, no routes.
    pub fn unassigned(inst: &Instance) -> Self {
        Solution {
            routes: Vec::new(),
            pool: inst.customers().collect(),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.pool.is_empty()
    }

    pub fn n_vehicles(&self) -> usize {
        self.routes.len()
    }

    pub fn n_visited(&self) -> usize {
        self.routes.iter().map(Route::len).sum()
    }

    /// Total travelled distance; only defined for complete solutions.
    pub fn cost(&self, inst: &Instance) -> Result<f64> {
        if !self.is_complete() {
            return Err(Error::IncompleteSolution(self.pool.len()));
        }
        Ok(self.routes_cost(inst))
    }

    /// Sum of route costs regardless of the pool.
    pub fn routes_cost(&self, inst: &Instance) -> f64 {
        self.routes.iter().map(|r| r.cost(inst)).sum()
    }

    /// Drops empty routes.
    pub fn normalize(&mut self) {
        self.routes.retain(|r| !r.is_empty());
    }

    /// `(route, position)` of every node id; `None` for the depot and pooled customers.
    pub fn locate(&self, n_nodes: usize) -> Vec<Option<(usize, usize)>> {
        let mut loc = vec![None; n_nodes];
        for (r, route) in self.routes.iter().enumerate() {
            for (p, &c) in route.customers.iter().enumerate() {
                if c < n_nodes {
                    loc[c] = Some((r, p));
                }
            }
        }
        loc
    }

    /// Visited customers in ascending id order.
    pub fn visited(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .routes
            .iter()
            .flat_map(|r| r.customers.iter().copied())
            .collect();
        v.sort_unstable();
        v
    }

    /// Moves `ids` into the pool, preserving the order of everything else.
    pub fn remove_customers(&mut self, inst: &Instance, ids: &[usize]) -> Result<()> {
        if ids.is_empty() {
            return Ok(());
        }
        let loc = self.locate(inst.len());
        let mut marked = vec![false; inst.len()];
        for &c in ids {
            if !inst.is_customer(c) {
                return Err(Error::UnknownCustomer(c));
            }
            if loc[c].is_none() || marked[c] {
                return Err(Error::AlreadyRemoved(c));
            }
            marked[c] = true;
        }
        for route in &mut self.routes {
            route.customers.retain(|&c| !marked[c]);
        }
        self.pool.extend_from_slice(ids);
        self.normalize();
        Ok(())
    }

    /// Routes and pool together cover every customer exactly once.
    pub fn is_partition(&self, inst: &Instance) -> bool {
        let mut seen = HashSet::with_capacity(inst.n_customers());
        let all = self
            .routes
            .iter()
            .flat_map(|r| r.customers.iter())
            .chain(self.pool.iter());
        for &c in all {
            if !inst.is_customer(c) || !seen.insert(c) {
                return false;
            }
        }
        seen.len() == inst.n_customers()
    }

    /// Every route passes `check_route` and the solution is complete.
    pub fn is_feasible(&self, inst: &Instance) -> bool {
        self.is_complete()
            && self.is_partition(inst)
            && self
                .routes
                .iter()
                .all(|r| is_feasible_sequence(inst, r.customers.iter().copied()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(points: &[(f64, f64, f64)], capacity: f64) -> Instance {
        let mut nodes = vec![Node::depot(0.0, 0.0, 1000.0)];
        for (i, &(x, y, q)) in points.iter().enumerate() {
            nodes.push(Node {
                id: i + 1,
                x,
                y,
                demand: q,
                tw_start: 0.0,
                tw_end: 1000.0,
                service: 0.0,
            });
        }
        Instance::new("t", nodes, capacity).unwrap()
    }

    #[test]
    fn cost_examples() {
        let i = inst(&[(3.0, 4.0, 1.0), (0.0, 3.0, 1.0), (4.0, 3.0, 1.0)], 10.0);
        assert_eq!(Solution::default().cost(&i).unwrap(), 0.0);
        assert_eq!(Solution::new(vec![Route::new(vec![1])]).cost(&i).unwrap(), 10.0);
        let s = Solution::new(vec![Route::new(vec![2, 3])]);
        assert!((s.cost(&i).unwrap() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn cost_requires_complete_solution() {
        let i = inst(&[(3.0, 4.0, 1.0)], 10.0);
        assert!(matches!(
            Solution::unassigned(&i).cost(&i),
            Err(Error::IncompleteSolution(1))
        ));
    }

    #[test]
    fn capacity_violation_reports_second_node() {
        let i = inst(&[(1.0, 0.0, 6.0), (2.0, 0.0, 5.0)], 10.0);
        let verdict = check_route(&i, &Route::new(vec![1, 2])).unwrap();
        assert_eq!(
            verdict,
            RouteCheck::Violation {
                kind: ViolationKind::CapacityExceeded,
                node: 2
            }
        );
        assert!(check_route(&i, &Route::new(vec![1])).unwrap().is_feasible());
    }

    #[test]
    fn waiting_and_late_return() {
        let mut nodes = vec![Node::depot(0.0, 0.0, 30.0)];
        nodes.push(Node {
            id: 1,
            x: 5.0,
            y: 0.0,
            demand: 1.0,
            tw_start: 10.0,
            tw_end: 20.0,
            service: 2.0,
        });
        let i = Instance::new("w", nodes.clone(), 5.0).unwrap();
        let RouteCheck::Feasible(s) = check_route(&i, &Route::new(vec![1])).unwrap() else {
            panic!("expected feasible");
        };
        assert_eq!(s.visits[0].arrival, 5.0);
        assert_eq!(s.visits[0].wait, 5.0);
        assert_eq!(s.visits[0].departure, 12.0);
        assert_eq!(s.return_time, 17.0);

        nodes[0].tw_end = 16.0;
        nodes[1].tw_end = 16.0;
        let i = Instance::new("w", nodes, 5.0).unwrap();
        assert_eq!(
            check_route(&i, &Route::new(vec![1])).unwrap(),
            RouteCheck::Violation {
                kind: ViolationKind::DepotReturnLate,
                node: DEPOT
            }
        );
    }

    #[test]
    fn unknown_customer_is_an_error() {
        let i = inst(&[(1.0, 0.0, 1.0)], 10.0);
        assert!(matches!(
            check_route(&i, &Route::new(vec![5])),
            Err(Error::UnknownCustomer(5))
        ));
        assert!(matches!(
            check_route(&i, &Route::new(vec![0])),
            Err(Error::UnknownCustomer(0))
        ));
    }

    #[test]
    fn removal_examples() {
        let i = inst(
            &[(1.0, 0.0, 1.0), (2.0, 0.0, 1.0), (3.0, 0.0, 1.0), (0.0, 5.0, 1.0)],
            10.0,
        );
        let base = Solution::new(vec![Route::new(vec![1, 2, 3]), Route::new(vec![4])]);

        let mut s = base.clone();
        s.remove_customers(&i, &[]).unwrap();
        assert_eq!(s, base);

        let mut s = base.clone();
        s.remove_customers(&i, &[2]).unwrap();
        assert_eq!(s.routes[0].customers, vec![1, 3]);
        assert_eq!(s.pool, vec![2]);

        let mut s = base.clone();
        s.remove_customers(&i, &[3, 1, 2]).unwrap();
        assert_eq!(s.n_vehicles(), 1);
        assert_eq!(s.pool.len(), 3);
        assert!(s.is_partition(&i));

        assert!(matches!(
            s.remove_customers(&i, &[1]),
            Err(Error::AlreadyRemoved(1))
        ));
        assert!(matches!(
            s.remove_customers(&i, &[9]),
            Err(Error::UnknownCustomer(9))
        ));
        assert!(matches!(
            s.remove_customers(&i, &[0]),
            Err(Error::UnknownCustomer(0))
        ));
    }

    #[test]
    fn invalid_instances_are_rejected() {
        let depot = Node::depot(0.0, 0.0, 10.0);
        assert!(Instance::new("x", vec![depot.clone()], 1.0).is_err());
        let bad = Node {
            id: 1,
            x: 0.0,
            y: 0.0,
            demand: 1.0,
            tw_start: 5.0,
            tw_end: 11.0,
            service: 0.0,
        };
        assert!(Instance::new("x", vec![depot, bad], 1.0).is_err());
    }
}

//! Single-robot finite-horizon planning on the time-expanded state graph.
//!
//! Every action moves the robot to a successor state one timestep later, so
//! the reachable states form a layered DAG that a single backward pass of
//! value iteration solves exactly. Rewards sit on edges and are attributed to
//! the successor's view: the marginal view reward over the prior robots'
//! density field plus the stationary bonus.

use std::collections::{BTreeSet, HashMap};
use std::ops::Range;

use crate::coord::CollisionMap;
use crate::error::{Error, Result};
use crate::raster::ViewEvaluator;
use crate::reward::{marginal_view_reward, stationary_reward, DensityField};
use crate::scene::{is_env_free, neighbors, RobotState, Scenario};

#[derive(Debug, Clone)]
pub struct StateGraph {
    /// Grouped by timestep, sorted within each layer.
    nodes: Vec<RobotState>,
    index: HashMap<RobotState, usize>,
    layers: Vec<Range<usize>>,
    /// Successor node and edge reward, sorted by successor state.
    successors: Vec<Vec<(usize, f64)>>,
    horizon: u32,
}

impl StateGraph {
    /// Assembles a graph from explicit edges. The root is the unique node
    /// with the smallest `t`; every edge must advance time by one and every
    /// node must be reachable from the root.
    pub fn from_edges(
        nodes: impl IntoIterator<Item = RobotState>,
        edges: impl IntoIterator<Item = (RobotState, RobotState, f64)>,
        horizon: u32,
    ) -> Result<Self> {
        let mut nodes: Vec<RobotState> = nodes.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        nodes.sort_by_key(|s| (s.t, *s));
        let Some(first) = nodes.first().copied() else {
            return Err(Error::validation("graph has no nodes"));
        };
        if nodes.get(1).is_some_and(|s| s.t == first.t) {
            return Err(Error::validation("graph has more than one root"));
        }
        if nodes.iter().any(|s| s.t > horizon) {
            return Err(Error::validation("node beyond the horizon"));
        }
        let index: HashMap<RobotState, usize> =
            nodes.iter().enumerate().map(|(k, s)| (*s, k)).collect();
        let mut successors = vec![Vec::new(); nodes.len()];
        for (from, to, reward) in edges {
            let (Some(&a), Some(&b)) = (index.get(&from), index.get(&to)) else {
                return Err(Error::validation("edge references an unknown node"));
            };
            if to.t != from.t + 1 {
                return Err(Error::validation("edges must advance time by exactly one step"));
            }
            successors[a].push((b, reward));
        }
        for succ in &mut successors {
            succ.sort_by_key(|&(k, _)| nodes[k]);
            succ.dedup_by_key(|e| e.0);
        }
        let graph = Self::assemble(nodes, index, successors, horizon);
        let mut reached = vec![false; graph.nodes.len()];
        reached[0] = true;
        for k in 0..graph.nodes.len() {
            if reached[k] {
                for &(s, _) in &graph.successors[k] {
                    reached[s] = true;
                }
            }
        }
        if reached.iter().any(|r| !r) {
            return Err(Error::validation("graph has nodes unreachable from the root"));
        }
        Ok(graph)
    }

    fn assemble(
        nodes: Vec<RobotState>,
        index: HashMap<RobotState, usize>,
        successors: Vec<Vec<(usize, f64)>>,
        horizon: u32,
    ) -> Self {
        let mut layers = Vec::new();
        let mut start = 0;
        while start < nodes.len() {
            let t = nodes[start].t;
            let end = start + nodes[start..].iter().take_while(|s| s.t == t).count();
            layers.push(start..end);
            start = end;
        }
        Self {
            nodes,
            index,
            layers,
            successors,
            horizon,
        }
    }

    pub fn root(&self) -> RobotState {
        self.nodes[0]
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[RobotState] {
        &self.nodes
    }

    pub fn node_index(&self, state: &RobotState) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn contains(&self, state: &RobotState) -> bool {
        self.index.contains_key(state)
    }

    pub fn successors(&self, node: usize) -> &[(usize, f64)] {
        &self.successors[node]
    }

    pub fn edge_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }

    /// Node count per timestep, starting at the root's layer.
    pub fn layer_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(|r| r.len()).collect()
    }

    /// Reward of the edge `from → to`, if present.
    pub fn edge_reward(&self, from: &RobotState, to: &RobotState) -> Option<f64> {
        let a = self.node_index(from)?;
        let b = self.node_index(to)?;
        self.successors[a]
            .iter()
            .find(|&&(s, _)| s == b)
            .map(|&(_, r)| r)
    }
}

/// Expands every state reachable from `start` through collision-free actions
/// and attaches marginal rewards against `prior`.
pub fn build_graph(
    start: &RobotState,
    scenario: &Scenario,
    evaluator: &ViewEvaluator,
    prior: &DensityField,
    collisions: &CollisionMap,
) -> Result<StateGraph> {
    let cfg = &scenario.robot_config;
    let map = &scenario.height_map;
    if !map.contains(start.x as i64, start.y as i64) || !is_env_free(start.x, start.y, cfg, map) {
        return Err(Error::validation(format!(
            "start ({}, {}) in collision with the environment",
            start.x, start.y
        )));
    }
    if collisions.is_blocked(start.x, start.y, start.t) {
        return Err(Error::validation(format!(
            "start ({}, {}) occupied by another robot at t={}",
            start.x, start.y, start.t
        )));
    }

    let mut nodes = vec![*start];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut index = HashMap::from([(*start, 0usize)]);
    let mut layer = 0..1;
    for t in start.t..scenario.horizon {
        let mut next = BTreeSet::new();
        let mut pending = Vec::new();
        for from in layer.clone() {
            for succ in neighbors(&nodes[from], cfg, map) {
                if collisions.is_blocked(succ.x, succ.y, t + 1) {
                    continue;
                }
                next.insert(succ);
                pending.push((from, succ));
            }
        }
        let begin = nodes.len();
        for s in next {
            index.insert(s, nodes.len());
            nodes.push(s);
        }
        edges.extend(pending.into_iter().map(|(from, s)| (from, index[&s])));
        layer = begin..nodes.len();
        if layer.is_empty() {
            break;
        }
    }

    let gains: Vec<f64> = nodes
        .iter()
        .map(|s| {
            if s.t == start.t {
                0.0
            } else {
                marginal_view_reward(prior, s.t, &evaluator.state_view(s))
            }
        })
        .collect();
    let eps = cfg.stationary_bonus;
    let mut successors = vec![Vec::new(); nodes.len()];
    for (from, to) in edges {
        let reward = gains[to] + stationary_reward(&nodes[from], &nodes[to], eps);
        successors[from].push((to, reward));
    }
    for succ in &mut successors {
        succ.sort_by_key(|&(k, _)| nodes[k]);
    }
    Ok(StateGraph::assemble(nodes, index, successors, scenario.horizon))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    /// Best achievable reward-to-go; `-∞` where no path reaches the horizon.
    pub values: Vec<f64>,
    pub best: Vec<Option<usize>>,
}

impl ValueTable {
    pub fn root_value(&self) -> f64 {
        self.values[0]
    }
}

/// One backward pass over the layers. Ties go to the smallest successor state.
pub fn value_iteration(graph: &StateGraph) -> ValueTable {
    let n = graph.len();
    let mut values = vec![f64::NEG_INFINITY; n];
    let mut best = vec![None; n];
    for layer in graph.layers.iter().rev() {
        for k in layer.clone() {
            if graph.nodes[k].t == graph.horizon {
                values[k] = 0.0;
                continue;
            }
            for &(s, reward) in &graph.successors[k] {
                let candidate = reward + values[s];
                if candidate > values[k] {
                    values[k] = candidate;
                    best[k] = Some(s);
                }
            }
        }
    }
    ValueTable { values, best }
}

/// A planned single-robot trajectory and the controls producing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    /// `controls[k]` is the state commanded at step `k`, i.e. `trajectory[k + 1]`.
    pub controls: Vec<RobotState>,
    pub trajectory: Vec<RobotState>,
}

/// Follows best successors from the root to the horizon. `None` when no
/// path reaches the horizon.
pub fn extract_trajectory(graph: &StateGraph, table: &ValueTable) -> Option<Extracted> {
    if table.values[0] == f64::NEG_INFINITY {
        return None;
    }
    let mut trajectory = vec![graph.nodes[0]];
    let mut k = 0;
    while let Some(next) = table.best[k] {
        trajectory.push(graph.nodes[next]);
        k = next;
    }
    debug_assert_eq!(graph.nodes[k].t, graph.horizon);
    Some(Extracted {
        controls: trajectory[1..].to_vec(),
        trajectory,
    })
}

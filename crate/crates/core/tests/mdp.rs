mod common;

use std::collections::BTreeSet;

use rand::Rng;

use viewplan::coord::{identity_order, sequential_plan, CollisionMap};
use viewplan::mdp::{build_graph, extract_trajectory, value_iteration, StateGraph};
use viewplan::raster::{RenderScale, ViewEvaluator};
use viewplan::reward::DensityField;
use viewplan::scene::{HeightMap, RobotConfig, RobotState, Scenario};

use common::*;

/// Layered random DAG with dyadic rewards (exact in binary floating point).
fn random_graph(seed: u64) -> (Vec<RobotState>, Vec<(RobotState, RobotState, f64)>, u32) {
    let mut r = rng(seed);
    let horizon = r.gen_range(1..=6);
    let mut layers = vec![vec![RobotState::new(0, 0, 0, 0)]];
    let mut edges = Vec::new();
    for t in 1..=horizon {
        let width = r.gen_range(1..=4);
        let layer: Vec<RobotState> = (0..width).map(|x| RobotState::new(x, 0, 0, t)).collect();
        let prev = &layers[t as usize - 1];
        for s in &layer {
            // at least one parent so every node stays reachable
            let mut parents = BTreeSet::from([r.gen_range(0..prev.len())]);
            for p in 0..prev.len() {
                if r.gen_bool(0.4) {
                    parents.insert(p);
                }
            }
            for p in parents {
                let reward = r.gen_range(0..4096) as f64 / 1024.0;
                edges.push((prev[p], *s, reward));
            }
        }
        layers.push(layer);
    }
    (layers.concat(), edges, horizon)
}

fn brute_force(
    node: RobotState,
    edges: &[(RobotState, RobotState, f64)],
    horizon: u32,
    paths: &mut usize,
) -> f64 {
    if node.t == horizon {
        *paths += 1;
        return 0.0;
    }
    edges
        .iter()
        .filter(|e| e.0 == node)
        .map(|e| e.2 + brute_force(e.1, edges, horizon, paths))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn value_iteration_matches_path_enumeration() {
    for seed in 0..60 {
        let (nodes, edges, horizon) = random_graph(seed);
        let root = nodes[0];
        let mut paths = 0;
        let expected = brute_force(root, &edges, horizon, &mut paths);
        assert!(paths <= 10_000);
        let graph = StateGraph::from_edges(nodes, edges.clone(), horizon).unwrap();
        let table = value_iteration(&graph);
        assert_eq!(table.root_value(), expected, "seed {seed}");

        match extract_trajectory(&graph, &table) {
            Some(plan) => {
                let recomputed: f64 = plan
                    .trajectory
                    .windows(2)
                    .map(|w| graph.edge_reward(&w[0], &w[1]).unwrap())
                    .sum();
                assert!((recomputed - expected).abs() <= 1e-9 * expected.abs().max(1.0));
                assert_eq!(plan.trajectory.len(), horizon as usize + 1);
            }
            None => assert_eq!(expected, f64::NEG_INFINITY),
        }
    }
}

fn open_scenario(cols: usize, rows: usize, headings: u32, max_turn: u32, horizon: u32) -> Scenario {
    let actor = random_actor(&mut rng(1), 0, (cols as f64 * 2.0, rows as f64 * 2.0), horizon as usize + 1);
    Scenario {
        height_map: HeightMap::flat(cols, rows, 2.0).unwrap(),
        actors: vec![actor],
        robot_starts: vec![RobotState::new(cols as u32 / 2, rows as u32 / 2, 0, 0)],
        start_sets: vec![],
        robot_config: RobotConfig {
            num_headings: headings,
            max_turn,
            intrinsics: small_intrinsics(),
            ..RobotConfig::default()
        },
        horizon,
        formation_radius: 5.0,
    }
    .validated()
    .unwrap()
}

/// Reachable poses by direct recursion over the motion rules.
fn reachable(s: &Scenario, blocked: &BTreeSet<(u32, u32, u32)>) -> BTreeSet<RobotState> {
    let cfg = &s.robot_config;
    let n = cfg.num_headings as i64;
    let mut out = BTreeSet::new();
    let mut stack = vec![s.robot_starts[0]];
    while let Some(st) = stack.pop() {
        if !out.insert(st) || st.t == s.horizon {
            continue;
        }
        for dx in -1i64..=1 {
            for dy in -1i64..=1 {
                let (x, y) = (st.x as i64 + dx, st.y as i64 + dy);
                if !s.height_map.contains(x, y)
                    || s.height_map.height(x as usize, y as usize) >= cfg.altitude
                    || blocked.contains(&(x as u32, y as u32, st.t + 1))
                {
                    continue;
                }
                for th in 0..n {
                    let d = (th - st.theta as i64).rem_euclid(n);
                    if d.min(n - d) <= cfg.max_turn as i64 {
                        stack.push(RobotState::new(x as u32, y as u32, th as u32, st.t + 1));
                    }
                }
            }
        }
    }
    out
}

#[test]
fn graph_nodes_equal_independent_enumeration() {
    let s = open_scenario(7, 7, 4, 2, 2);
    let ev = ViewEvaluator::new(&s, RenderScale::new(0.5).unwrap());
    let prior = DensityField::new(s.horizon, ev.faces().len());
    let graph = build_graph(&s.robot_starts[0], &s, &ev, &prior, &CollisionMap::new()).unwrap();
    let nodes: BTreeSet<RobotState> = graph.nodes().iter().copied().collect();
    assert_eq!(nodes, reachable(&s, &BTreeSet::new()));
    assert_eq!(graph.layer_sizes(), vec![1, 36, 100]);

    // with obstacles and a blocked cell
    let mut s = open_scenario(6, 5, 8, 1, 3);
    s.height_map.set_height(2, 2, 9.0);
    s.height_map.set_height(4, 3, 1.0);
    let mut collisions = CollisionMap::new();
    let other: Vec<RobotState> = (0..=3).map(|t| RobotState::new(3, 1 + t.min(1), 0, t)).collect();
    collisions.add_trajectory(&other);
    let blocked: BTreeSet<(u32, u32, u32)> = other.iter().map(|s| (s.x, s.y, s.t)).collect();
    let ev = ViewEvaluator::new(&s, RenderScale::new(0.5).unwrap());
    let prior = DensityField::new(s.horizon, ev.faces().len());
    let graph = build_graph(&s.robot_starts[0], &s, &ev, &prior, &collisions).unwrap();
    let nodes: BTreeSet<RobotState> = graph.nodes().iter().copied().collect();
    assert_eq!(nodes, reachable(&s, &blocked));
    assert!(!nodes.iter().any(|n| n.x == 3 && n.y == 2 && n.t == 2));
}

#[test]
fn layers_grow_at_most_quadratically() {
    let s = open_scenario(15, 15, 8, 1, 6);
    let ev = ViewEvaluator::new(&s, RenderScale::new(0.1).unwrap());
    let prior = DensityField::new(s.horizon, ev.faces().len());
    let graph = build_graph(&s.robot_starts[0], &s, &ev, &prior, &CollisionMap::new()).unwrap();
    for (t, size) in graph.layer_sizes().into_iter().enumerate() {
        assert!(size <= (2 * t + 1).pow(2) * 8, "layer {t}: {size}");
    }
}

#[test]
fn zero_horizon_graph_is_the_start() {
    let s = open_scenario(4, 4, 8, 1, 0);
    let ev = ViewEvaluator::new(&s, RenderScale::new(0.1).unwrap());
    let prior = DensityField::new(0, ev.faces().len());
    let graph = build_graph(&s.robot_starts[0], &s, &ev, &prior, &CollisionMap::new()).unwrap();
    assert_eq!((graph.len(), graph.edge_count()), (1, 0));
    let plan = extract_trajectory(&graph, &value_iteration(&graph)).unwrap();
    assert_eq!(plan.trajectory, vec![s.robot_starts[0]]);
}

#[test]
fn single_robot_sequential_is_value_iteration() {
    for seed in 0..10 {
        let s = tiny_scenario(seed, 1, 4, 8, 1);
        let ev = ViewEvaluator::new(&s, RenderScale::new(0.5).unwrap());
        let prior = DensityField::new(s.horizon, ev.faces().len());
        let graph = build_graph(&s.robot_starts[0], &s, &ev, &prior, &CollisionMap::new()).unwrap();
        let table = value_iteration(&graph);
        let direct = extract_trajectory(&graph, &table).unwrap();
        let plan = sequential_plan(&s, &ev, true, &identity_order(1)).unwrap();
        assert_eq!(plan.robots[0].trajectory, direct.trajectory);
        // total objective = t=0 view + optimal reward-to-go
        let t0 = ev.state_view(&s.robot_starts[0]).view_reward();
        let total = plan.breakdown.total();
        assert!((total - (t0 + table.root_value())).abs() <= 1e-9 * total.max(1.0));
        // rerun is identical
        let again = sequential_plan(&s, &ev, true, &identity_order(1)).unwrap();
        assert_eq!(again.robots[0].trajectory, plan.robots[0].trajectory);
    }
}

#[test]
fn no_reward_means_staying_put() {
    // actor far outside every view: only the stationary bonus pays
    let mut s = open_scenario(5, 5, 8, 1, 5);
    for p in &mut s.actors[0].poses {
        p.position = nalgebra::Vector3::new(500.0, 500.0, 0.0);
    }
    let ev = ViewEvaluator::new(&s, RenderScale::new(0.1).unwrap());
    let plan = sequential_plan(&s, &ev, true, &identity_order(1)).unwrap();
    let start = s.robot_starts[0];
    assert!(plan.robots[0].trajectory.iter().all(|st| st.same_pose(&start)));
    assert_eq!(plan.breakdown.view_reward, 0.0);
    assert!((plan.breakdown.stationary_reward - 0.05).abs() < 1e-15);
}

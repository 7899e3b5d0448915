use std::collections::HashMap;
use std::sync::Arc;

use super::{identity_order, PlanResult};
use crate::error::{Error, Result};
use crate::raster::ViewEvaluator;
use crate::reward::{stationary_total, DensityField, ViewDensities};
use crate::scene::{neighbors, RobotState, Scenario};

pub const DEFAULT_ORACLE_BUDGET: u64 = 1_000_000;

/// Number of dynamically feasible trajectories from `start` to the horizon,
/// ignoring other robots.
pub fn count_trajectories(scenario: &Scenario, start: &RobotState) -> f64 {
    fn count(s: &RobotState, scenario: &Scenario, memo: &mut HashMap<RobotState, f64>) -> f64 {
        if s.t >= scenario.horizon {
            return 1.0;
        }
        if let Some(&c) = memo.get(s) {
            return c;
        }
        let c = neighbors(s, &scenario.robot_config, &scenario.height_map)
            .iter()
            .map(|n| count(n, scenario, memo))
            .sum();
        memo.insert(*s, c);
        c
    }
    count(start, scenario, &mut HashMap::new())
}

/// Every dynamically feasible trajectory from `start`, in lexicographic order
/// of successor states.
pub fn enumerate_trajectories(scenario: &Scenario, start: &RobotState) -> Vec<Vec<RobotState>> {
    fn walk(path: &mut Vec<RobotState>, scenario: &Scenario, out: &mut Vec<Vec<RobotState>>) {
        let last = *path.last().expect("path is never empty");
        if last.t >= scenario.horizon {
            out.push(path.clone());
            return;
        }
        for next in neighbors(&last, &scenario.robot_config, &scenario.height_map) {
            path.push(next);
            walk(path, scenario, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    walk(&mut vec![*start], scenario, &mut out);
    out
}

struct Candidate {
    states: Vec<RobotState>,
    views: Vec<Arc<ViewDensities>>,
    stationary: f64,
}

struct Search<'a> {
    candidates: Vec<Vec<Candidate>>,
    enforce: bool,
    faces: usize,
    horizon: u32,
    evaluator: &'a ViewEvaluator,
    best_value: f64,
    best: Option<Vec<usize>>,
}

impl Search<'_> {
    fn run(&mut self, robot: usize, chosen: &mut Vec<usize>, field: &DensityField, stationary: f64) {
        if robot == self.candidates.len() {
            let value = field.view_reward() + stationary;
            if value > self.best_value {
                self.best_value = value;
                self.best = Some(chosen.clone());
            }
            return;
        }
        for k in 0..self.candidates[robot].len() {
            let cand = &self.candidates[robot][k];
            if self.enforce && self.conflicts(chosen, cand) {
                continue;
            }
            let mut next = field.clone();
            for (s, view) in cand.states.iter().zip(&cand.views) {
                next.add_view(s.t, view);
            }
            let extra = cand.stationary;
            chosen.push(k);
            self.run(robot + 1, chosen, &next, stationary + extra);
            chosen.pop();
        }
    }

    fn conflicts(&self, chosen: &[usize], cand: &Candidate) -> bool {
        chosen.iter().enumerate().any(|(r, &k)| {
            self.candidates[r][k]
                .states
                .iter()
                .zip(&cand.states)
                .any(|(a, b)| a.cell() == b.cell())
        })
    }
}

/// Exact optimum of the joint objective by enumerating every combination of
/// single-robot trajectories. Refuses when the product space exceeds `budget`.
pub fn joint_oracle(
    scenario: &Scenario,
    evaluator: &ViewEvaluator,
    enforce_inter_robot: bool,
    budget: u64,
) -> Result<PlanResult> {
    let estimate: f64 = scenario
        .robot_starts
        .iter()
        .map(|s| count_trajectories(scenario, s))
        .product();
    if estimate > budget as f64 {
        return Err(Error::BudgetExceeded { estimate, budget });
    }
    let eps = scenario.robot_config.stationary_bonus;
    let candidates: Vec<Vec<Candidate>> = scenario
        .robot_starts
        .iter()
        .map(|start| {
            enumerate_trajectories(scenario, start)
                .into_iter()
                .map(|states| Candidate {
                    views: states.iter().map(|s| evaluator.state_view(s)).collect(),
                    stationary: stationary_total(std::slice::from_ref(&states), eps),
                    states,
                })
                .collect()
        })
        .collect();
    let mut search = Search {
        candidates,
        enforce: enforce_inter_robot,
        faces: evaluator.faces().len(),
        horizon: scenario.horizon,
        evaluator,
        best_value: f64::NEG_INFINITY,
        best: None,
    };
    let empty = DensityField::new(search.horizon, search.faces);
    search.run(0, &mut Vec::new(), &empty, 0.0);
    let Some(best) = search.best else {
        return Err(Error::Planning {
            robot: 0,
            reason: "no collision-free joint assignment exists".into(),
        });
    };
    let n = scenario.num_robots();
    let trajectories: Vec<Vec<RobotState>> = best
        .iter()
        .enumerate()
        .map(|(r, &k)| search.candidates[r][k].states.clone())
        .collect();
    // marginal contributions in scenario order
    let mut field = DensityField::new(search.horizon, search.faces);
    let mut marginals = Vec::with_capacity(n);
    for traj in &trajectories {
        let before = field.view_reward();
        for s in traj {
            field.add_view(s.t, &search.evaluator.state_view(s));
        }
        marginals.push(field.view_reward() - before);
    }
    PlanResult::from_trajectories(
        scenario,
        evaluator,
        trajectories,
        identity_order(n),
        vec![0.0; n],
        marginals,
    )
}

//! Multi-robot coordination.
//!
//! [`sequential_plan`] plans robots one at a time; each robot solves its own
//! DAG-MDP against the density field (and optionally the occupied cells) of
//! the robots planned before it. [`joint_oracle`] exhaustively searches the
//! joint trajectory space of small instances, and [`formation_plan`] is the
//! actor-centric formation baseline.

mod formation;
mod oracle;

use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mdp::{build_graph, extract_trajectory, value_iteration};
use crate::raster::ViewEvaluator;
use crate::reward::{joint_objective, marginal_view_reward, DensityField, RewardBreakdown};
use crate::scene::{camera_pose, CameraPose, RobotState, Scenario};

pub use formation::{
    formation_groups, formation_plan, formation_plan_with, separation_angle, FORMATION_ORIENTATIONS,
};
pub use oracle::{count_trajectories, enumerate_trajectories, joint_oracle, DEFAULT_ORACLE_BUDGET};

/// Cells occupied by already planned robots, keyed by `(x, y, t)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CollisionMap(HashSet<(u32, u32, u32)>);

impl CollisionMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_trajectory(&mut self, trajectory: &[RobotState]) {
        self.0.extend(trajectory.iter().map(|s| (s.x, s.y, s.t)));
    }

    pub fn is_blocked(&self, x: u32, y: u32, t: u32) -> bool {
        self.0.contains(&(x, y, t))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CollisionEvent {
    pub robots: Vec<usize>,
    pub cell: (u32, u32),
    pub t: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CollisionReport {
    /// Robots involved in at least one collision.
    pub count: usize,
    pub events: Vec<CollisionEvent>,
}

/// Same-cell, same-time conflicts between grid trajectories.
pub fn collision_report(trajectories: &[Vec<RobotState>]) -> CollisionReport {
    let cells: Vec<Vec<Option<(u32, u32)>>> = trajectories
        .iter()
        .map(|traj| traj.iter().map(|s| Some(s.cell())).collect())
        .collect();
    collision_report_cells(&cells)
}

/// Like [`collision_report`] over per-timestep cells; `None` entries (robots
/// off the map) never collide.
pub(crate) fn collision_report_cells(cells: &[Vec<Option<(u32, u32)>>]) -> CollisionReport {
    let mut occupancy: BTreeMap<(u32, (u32, u32)), Vec<usize>> = BTreeMap::new();
    for (robot, traj) in cells.iter().enumerate() {
        for (t, cell) in traj.iter().enumerate() {
            if let Some(cell) = cell {
                occupancy.entry((t as u32, *cell)).or_default().push(robot);
            }
        }
    }
    let mut involved = HashSet::new();
    let events: Vec<CollisionEvent> = occupancy
        .into_iter()
        .filter(|(_, robots)| robots.len() > 1)
        .map(|((t, cell), robots)| {
            involved.extend(robots.iter().copied());
            CollisionEvent { robots, cell, t }
        })
        .collect();
    CollisionReport {
        count: involved.len(),
        events,
    }
}

/// One robot's part of a joint plan.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotPlan {
    /// Commanded successor state per step; empty for off-grid planners.
    pub controls: Vec<RobotState>,
    /// Grid states for `t = 0..=T`; empty for off-grid planners.
    pub trajectory: Vec<RobotState>,
    /// Camera pose for `t = 0..=T`.
    pub poses: Vec<CameraPose>,
    pub wall_time_s: f64,
    /// View reward this robot added on top of the robots planned before it.
    pub marginal_view_reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    /// Indexed by robot, independent of planning order.
    pub robots: Vec<RobotPlan>,
    pub order: Vec<usize>,
    pub breakdown: RewardBreakdown,
    pub collisions: CollisionReport,
}

impl PlanResult {
    pub fn trajectories(&self) -> Vec<Vec<RobotState>> {
        self.robots.iter().map(|r| r.trajectory.clone()).collect()
    }

    pub fn wall_time_s(&self) -> f64 {
        self.robots.iter().map(|r| r.wall_time_s).sum()
    }

    pub(crate) fn from_trajectories(
        scenario: &Scenario,
        evaluator: &ViewEvaluator,
        trajectories: Vec<Vec<RobotState>>,
        order: Vec<usize>,
        wall_times: Vec<f64>,
        marginals: Vec<f64>,
    ) -> Result<PlanResult> {
        let breakdown = joint_objective(scenario, evaluator, &trajectories)?;
        let collisions = collision_report(&trajectories);
        let cfg = &scenario.robot_config;
        let robots = trajectories
            .into_iter()
            .zip(wall_times)
            .zip(marginals)
            .map(|((trajectory, wall_time_s), marginal_view_reward)| RobotPlan {
                controls: trajectory[1..].to_vec(),
                poses: trajectory
                    .iter()
                    .map(|s| camera_pose(s, cfg, &scenario.height_map))
                    .collect(),
                trajectory,
                wall_time_s,
                marginal_view_reward,
            })
            .collect();
        Ok(PlanResult {
            robots,
            order,
            breakdown,
            collisions,
        })
    }
}

fn check_order(order: &[usize], robots: usize) -> Result<()> {
    let mut seen = vec![false; robots];
    if order.len() != robots {
        return Err(Error::validation(format!(
            "planning order lists {} robots, scenario has {robots}",
            order.len()
        )));
    }
    for &i in order {
        if i >= robots || std::mem::replace(&mut seen[i], true) {
            return Err(Error::validation("planning order must be a permutation of the robots"));
        }
    }
    Ok(())
}

/// Sequential greedy planning in the given robot order. With
/// `enforce_inter_robot`, later robots may not enter a cell an earlier robot
/// occupies at the same timestep.
pub fn sequential_plan(
    scenario: &Scenario,
    evaluator: &ViewEvaluator,
    enforce_inter_robot: bool,
    order: &[usize],
) -> Result<PlanResult> {
    let n = scenario.num_robots();
    check_order(order, n)?;
    let mut prior = DensityField::new(scenario.horizon, evaluator.faces().len());
    let mut occupied = CollisionMap::new();
    let unconstrained = CollisionMap::new();
    let mut trajectories = vec![Vec::new(); n];
    let mut wall_times = vec![0.0; n];
    let mut marginals = vec![0.0; n];

    for &robot in order {
        let clock = Instant::now();
        let start = scenario.robot_starts[robot];
        let collisions = if enforce_inter_robot {
            &occupied
        } else {
            &unconstrained
        };
        let graph = build_graph(&start, scenario, evaluator, &prior, collisions).map_err(|e| {
            Error::Planning {
                robot,
                reason: e.to_string(),
            }
        })?;
        let table = value_iteration(&graph);
        let plan = extract_trajectory(&graph, &table).ok_or_else(|| Error::Planning {
            robot,
            reason: "no collision-free trajectory reaches the horizon".into(),
        })?;
        let mut gain = 0.0;
        for s in &plan.trajectory {
            let view = evaluator.state_view(s);
            gain += marginal_view_reward(&prior, s.t, &view);
            prior.add_view(s.t, &view);
        }
        if enforce_inter_robot {
            occupied.add_trajectory(&plan.trajectory);
        }
        trajectories[robot] = plan.trajectory;
        marginals[robot] = gain;
        wall_times[robot] = clock.elapsed().as_secs_f64();
    }
    PlanResult::from_trajectories(
        scenario,
        evaluator,
        trajectories,
        order.to_vec(),
        wall_times,
        marginals,
    )
}

/// Robots in scenario order.
pub fn identity_order(robots: usize) -> Vec<usize> {
    (0..robots).collect()
}

//! View and stationary rewards and the accumulated density field.
//!
//! The view reward of a face at a timestep is the square root of the pixel
//! densities summed over every robot looking at it, so extra views of an
//! already well-covered face are worth less. Marginal gains are evaluated as
//! `c / (√(b + c) + √b)` rather than `√(b + c) − √b`: the two are equal in
//! exact arithmetic, but the former is monotone in `b` under IEEE rounding,
//! which keeps the diminishing-returns property exact in floating point.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::ViewEvaluator;
use crate::scene::{is_feasible_step, RobotState, Scenario};

/// Sparse per-face densities (px/m²) of one view, sorted by face slot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViewDensities(Vec<(u32, f64)>);

impl ViewDensities {
    pub fn from_sorted(entries: Vec<(u32, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(_, d)| d >= 0.0 && d.is_finite()));
        Self(entries)
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, slot: u32) -> f64 {
        self.0
            .binary_search_by_key(&slot, |&(s, _)| s)
            .map_or(0.0, |k| self.0[k].1)
    }

    /// Plain view reward of this view alone.
    pub fn view_reward(&self) -> f64 {
        self.0.iter().map(|&(_, d)| d.sqrt()).sum::<f64>() + 0.0
    }
}

/// Accumulated density per `(t, face)`, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    faces: usize,
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(horizon: u32, faces: usize) -> Self {
        Self {
            faces,
            values: vec![0.0; (horizon as usize + 1) * faces],
        }
    }

    pub fn horizon(&self) -> u32 {
        (self.values.len() / self.faces.max(1)).saturating_sub(1) as u32
    }

    pub fn faces(&self) -> usize {
        self.faces
    }

    pub fn get(&self, t: u32, slot: u32) -> f64 {
        self.values[t as usize * self.faces + slot as usize]
    }

    /// Values of timestep `t`, indexed by slot.
    pub fn row(&self, t: u32) -> &[f64] {
        let start = t as usize * self.faces;
        &self.values[start..start + self.faces]
    }

    pub fn add_view(&mut self, t: u32, view: &ViewDensities) {
        let base = t as usize * self.faces;
        for &(slot, d) in view.entries() {
            self.values[base + slot as usize] += d;
        }
    }

    /// Adds another field entry by entry.
    pub fn add_field(&mut self, other: &DensityField) {
        assert_eq!(self.values.len(), other.values.len(), "field shapes differ");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    /// Sum of `√field` over every `(t, face)`.
    pub fn view_reward(&self) -> f64 {
        self.values.iter().map(|v| v.sqrt()).sum::<f64>() + 0.0
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        let faces = self.faces.max(1);
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| ((k / faces) as u32, (k % faces) as u32, v))
    }
}

/// View reward of one face at one timestep.
pub fn view_reward(field: &DensityField, t: u32, slot: u32) -> f64 {
    field.get(t, slot).sqrt()
}

/// ε when the robot keeps its position and heading, zero otherwise.
pub fn stationary_reward(from: &RobotState, to: &RobotState, epsilon: f64) -> f64 {
    if from.same_pose(to) {
        epsilon
    } else {
        0.0
    }
}

/// `√(prior + own) − √prior` in a form that is monotone non-increasing in
/// `prior` under floating-point rounding.
#[inline]
pub fn sqrt_gain(prior: f64, own: f64) -> f64 {
    if own <= 0.0 {
        0.0
    } else {
        own / ((prior + own).sqrt() + prior.sqrt())
    }
}

/// Increase in view reward at timestep `t` from adding `own` on top of `prior`.
pub fn marginal_view_reward(prior: &DensityField, t: u32, own: &ViewDensities) -> f64 {
    let row = prior.row(t);
    own.entries()
        .iter()
        .map(|&(slot, d)| sqrt_gain(row[slot as usize], d))
        .sum()
}

/// Field-wide version of [`marginal_view_reward`].
pub fn marginal_field_reward(prior: &DensityField, own: &DensityField) -> f64 {
    assert_eq!(prior.values.len(), own.values.len(), "field shapes differ");
    prior
        .values
        .iter()
        .zip(&own.values)
        .map(|(&b, &c)| sqrt_gain(b, c))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RewardBreakdown {
    pub view_reward: f64,
    pub stationary_reward: f64,
    pub robots: usize,
}

impl RewardBreakdown {
    /// Joint objective: view plus stationary reward.
    pub fn total(&self) -> f64 {
        self.view_reward + self.stationary_reward
    }

    pub fn per_robot_view_reward(&self) -> f64 {
        if self.robots == 0 {
            0.0
        } else {
            self.view_reward / self.robots as f64
        }
    }
}

/// Checks that every trajectory starts at its robot's start state, has
/// `horizon + 1` states and only takes feasible steps.
pub fn check_trajectories(scenario: &Scenario, trajectories: &[Vec<RobotState>]) -> Result<()> {
    if trajectories.len() != scenario.num_robots() {
        return Err(Error::validation(format!(
            "{} trajectories supplied for {} robots",
            trajectories.len(),
            scenario.num_robots()
        )));
    }
    let cfg = &scenario.robot_config;
    let map = &scenario.height_map;
    for (robot, traj) in trajectories.iter().enumerate() {
        let infeasible = |t: u32, reason: &str| Error::Infeasible {
            robot,
            t,
            reason: reason.to_string(),
        };
        if traj.len() != scenario.horizon as usize + 1 {
            return Err(infeasible(0, "trajectory length must be horizon + 1"));
        }
        if traj[0] != scenario.robot_starts[robot] {
            return Err(infeasible(0, "does not begin at the robot's start state"));
        }
        for (k, step) in traj.windows(2).enumerate() {
            if !is_feasible_step(&step[0], &step[1], cfg, map) {
                return Err(infeasible(k as u32 + 1, "step violates the motion model"));
            }
        }
    }
    Ok(())
}

/// Density field produced by a set of trajectories, accumulated in the given
/// robot order.
pub fn accumulate_field(evaluator: &ViewEvaluator, trajectories: &[Vec<RobotState>]) -> DensityField {
    let mut field = DensityField::new(evaluator.horizon(), evaluator.faces().len());
    for traj in trajectories {
        for s in traj {
            field.add_view(s.t, &evaluator.state_view(s));
        }
    }
    field
}

/// Number of stationary transitions times ε, summed over robots.
pub fn stationary_total(trajectories: &[Vec<RobotState>], epsilon: f64) -> f64 {
    trajectories
        .iter()
        .flat_map(|traj| traj.windows(2))
        .map(|w| stationary_reward(&w[0], &w[1], epsilon))
        .sum()
}

/// Joint objective of a set of grid trajectories.
pub fn joint_objective(
    scenario: &Scenario,
    evaluator: &ViewEvaluator,
    trajectories: &[Vec<RobotState>],
) -> Result<RewardBreakdown> {
    check_trajectories(scenario, trajectories)?;
    let field = accumulate_field(evaluator, trajectories);
    Ok(RewardBreakdown {
        view_reward: field.view_reward(),
        stationary_reward: stationary_total(trajectories, scenario.robot_config.stationary_bonus),
        robots: trajectories.len(),
    })
}

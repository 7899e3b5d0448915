//! Formation baseline: robots are split across actors and hold a circle of
//! fixed radius around their actor, spaced by a separation angle. At each
//! timestep every group's base orientation is picked from a uniform set to
//! maximize the view reward over all actors. Motion limits and collisions
//! are ignored.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::Vector3;

use super::{collision_report_cells, PlanResult, RobotPlan};
use crate::error::{Error, Result};
use crate::raster::ViewEvaluator;
use crate::reward::{DensityField, RewardBreakdown, ViewDensities};
use crate::scene::{CameraPose, Scenario};

pub const FORMATION_ORIENTATIONS: usize = 64;

const MAX_SWEEPS: usize = 4;

/// Angle between neighboring robots of an `n`-robot formation.
pub fn separation_angle(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => FRAC_PI_2,
        n => TAU / n as f64,
    }
}

/// Robots dealt round-robin to actors in id order; earlier actors receive
/// the extra robots when the count does not divide evenly.
pub fn formation_groups(robots: usize, actors: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); actors];
    if actors > 0 {
        for r in 0..robots {
            groups[r % actors].push(r);
        }
    }
    groups
}

fn slot_pose(scenario: &Scenario, actor: usize, t: usize, angle: f64) -> CameraPose {
    let track = &scenario.actors[actor];
    let center = track.poses[t].position;
    let radius = scenario.formation_radius;
    let altitude = scenario.robot_config.altitude;
    let position = Vector3::new(
        center.x + radius * angle.cos(),
        center.y + radius * angle.sin(),
        altitude,
    );
    let aim_height = center.z + 0.5 * track.model.height;
    CameraPose {
        position,
        yaw: (center.y - position.y).atan2(center.x - position.x),
        pitch: (aim_height - altitude).atan2(radius),
    }
}

fn combine(views: &[ViewDensities]) -> ViewDensities {
    let mut merged: Vec<(u32, f64)> = views.iter().flat_map(|v| v.entries().iter().copied()).collect();
    merged.sort_by_key(|e| e.0);
    let mut out: Vec<(u32, f64)> = Vec::with_capacity(merged.len());
    for (slot, d) in merged {
        match out.last_mut() {
            Some(last) if last.0 == slot => last.1 += d,
            _ => out.push((slot, d)),
        }
    }
    ViewDensities::from_sorted(out)
}

/// Per-face reward of a timestep row with the given group views added.
fn row_reward(row: &[f64], views: &[&ViewDensities]) -> f64 {
    let mut row = row.to_vec();
    for v in views {
        for &(slot, d) in v.entries() {
            row[slot as usize] += d;
        }
    }
    row.iter().map(|v| v.sqrt()).sum()
}

/// Formation plan using the default orientation sampling.
pub fn formation_plan(scenario: &Scenario, evaluator: &ViewEvaluator) -> Result<PlanResult> {
    formation_plan_with(scenario, evaluator, FORMATION_ORIENTATIONS)
}

/// Formation plan searching `orientations` uniformly spaced base angles.
/// Uses at least one robot per actor.
pub fn formation_plan_with(
    scenario: &Scenario,
    evaluator: &ViewEvaluator,
    orientations: usize,
) -> Result<PlanResult> {
    let actors = scenario.actors.len();
    if actors == 0 {
        return Err(Error::validation("formation planning needs at least one actor"));
    }
    if orientations == 0 {
        return Err(Error::validation("formation planning needs at least one orientation"));
    }
    let robots = scenario.num_robots().max(actors);
    let groups = formation_groups(robots, actors);
    let faces = evaluator.faces().len();
    let horizon = scenario.horizon;
    let mut poses = vec![Vec::with_capacity(horizon as usize + 1); robots];
    let mut field = DensityField::new(horizon, faces);

    for t in 0..=horizon as usize {
        // candidate views per group and orientation
        let options: Vec<Vec<(Vec<CameraPose>, ViewDensities)>> = groups
            .iter()
            .enumerate()
            .map(|(actor, members)| {
                let phi = separation_angle(members.len());
                (0..orientations)
                    .map(|k| {
                        let base = TAU * k as f64 / orientations as f64;
                        let slot_poses: Vec<CameraPose> = (0..members.len())
                            .map(|m| slot_pose(scenario, actor, t, base + phi * m as f64))
                            .collect();
                        let views: Vec<ViewDensities> = slot_poses
                            .iter()
                            .map(|p| evaluator.pose_view(p, t as u32))
                            .collect();
                        (slot_poses, combine(&views))
                    })
                    .collect()
            })
            .collect();

        let zero = vec![0.0; faces];
        let mut choice: Vec<Option<usize>> = vec![None; groups.len()];
        for _ in 0..MAX_SWEEPS {
            let mut changed = false;
            for g in 0..groups.len() {
                let others: Vec<&ViewDensities> = choice
                    .iter()
                    .enumerate()
                    .filter(|&(h, c)| h != g && c.is_some())
                    .map(|(h, c)| &options[h][c.unwrap()].1)
                    .collect();
                let mut best = (f64::NEG_INFINITY, 0);
                for (k, option) in options[g].iter().enumerate() {
                    let mut views = others.clone();
                    views.push(&option.1);
                    let value = row_reward(&zero, &views);
                    if value > best.0 {
                        best = (value, k);
                    }
                }
                if choice[g] != Some(best.1) {
                    choice[g] = Some(best.1);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        for (g, members) in groups.iter().enumerate() {
            let (slot_poses, views) = &options[g][choice[g].expect("every group chooses")];
            field.add_view(t as u32, views);
            for (m, &robot) in members.iter().enumerate() {
                poses[robot].push(slot_poses[m]);
            }
        }
    }

    let eps = scenario.robot_config.stationary_bonus;
    let stationary = poses
        .iter()
        .flat_map(|p| p.windows(2))
        .filter(|w| w[0] == w[1])
        .count() as f64
        * eps;
    let cells: Vec<Vec<Option<(u32, u32)>>> = poses
        .iter()
        .map(|p| {
            p.iter()
                .map(|pose| scenario.height_map.cell_of(pose.position.x, pose.position.y))
                .collect()
        })
        .collect();
    let collisions = collision_report_cells(&cells);
    let view_reward = field.view_reward();
    Ok(PlanResult {
        robots: poses
            .into_iter()
            .map(|poses| RobotPlan {
                controls: Vec::new(),
                trajectory: Vec::new(),
                poses,
                wall_time_s: 0.0,
                marginal_view_reward: 0.0,
            })
            .collect(),
        order: (0..robots).collect(),
        breakdown: RewardBreakdown {
            view_reward,
            stationary_reward: stationary,
            robots,
        },
        collisions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn separation_angles() {
        assert_eq!(separation_angle(2), PI / 2.0);
        assert!((separation_angle(3) - 2.0 * PI / 3.0).abs() < 1e-15);
        assert!((separation_angle(5) - 2.0 * PI / 5.0).abs() < 1e-15);
        assert_eq!(separation_angle(1), 0.0);
    }

    #[test]
    fn round_robin_groups() {
        assert_eq!(formation_groups(5, 2), vec![vec![0, 2, 4], vec![1, 3]]);
        assert_eq!(formation_groups(3, 3), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(formation_groups(2, 0), Vec::<Vec<usize>>::new());
    }

    #[test]
    fn combine_sums_shared_slots() {
        let a = ViewDensities::from_sorted(vec![(1, 2.0), (4, 1.0)]);
        let b = ViewDensities::from_sorted(vec![(0, 3.0), (4, 5.0)]);
        assert_eq!(combine(&[a, b]).entries(), &[(0, 3.0), (1, 2.0), (4, 6.0)]);
    }
}

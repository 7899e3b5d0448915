//! Seeded random worlds shared by the integration suites.
#![allow(dead_code)]

use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use viewplan::scene::{
    ActorModel, ActorPose, ActorTrack, CameraIntrinsics, CameraPose, HeightMap, RobotConfig,
    RobotState, Scenario,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_map(rng: &mut ChaCha8Rng, cols: usize, rows: usize, cell: f64, max_h: f64) -> HeightMap {
    let heights = (0..cols * rows)
        .map(|_| if rng.gen_bool(0.6) { 0.0 } else { rng.gen_range(0.3..max_h) })
        .collect();
    HeightMap::new(cols, rows, cell, heights).unwrap()
}

pub fn random_actor(rng: &mut ChaCha8Rng, id: u32, extent: (f64, f64), steps: usize) -> ActorTrack {
    let model = ActorModel {
        radius: rng.gen_range(0.25..0.8),
        height: rng.gen_range(1.0..2.2),
        num_side_faces: rng.gen_range(3..=10),
    };
    let mut x = rng.gen_range(0.0..extent.0);
    let mut y = rng.gen_range(0.0..extent.1);
    let mut yaw = rng.gen_range(0.0..TAU);
    let poses = (0..steps)
        .map(|_| {
            let pose = ActorPose {
                position: Vector3::new(x, y, 0.0),
                yaw,
            };
            x += rng.gen_range(-1.0..1.0);
            y += rng.gen_range(-1.0..1.0);
            yaw += rng.gen_range(-0.5..0.5);
            pose
        })
        .collect();
    ActorTrack { id, model, poses }
}

/// A camera somewhere over the map, mostly looking toward `target`.
pub fn camera_toward(rng: &mut ChaCha8Rng, extent: (f64, f64), target: Vector3<f64>) -> CameraPose {
    let position = Vector3::new(
        rng.gen_range(-2.0..extent.0 + 2.0),
        rng.gen_range(-2.0..extent.1 + 2.0),
        rng.gen_range(1.0..9.0),
    );
    let d = target - position;
    CameraPose {
        position,
        yaw: d.y.atan2(d.x) + rng.gen_range(-0.4..0.4),
        pitch: d.z.atan2(d.x.hypot(d.y)) + rng.gen_range(-0.3..0.3),
    }
}

/// Small intrinsics used where full resolution would be slow.
pub fn small_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics {
        focal_px: 250.0,
        width_px: 400,
        height_px: 300,
    }
}

/// A tiny planning world: open-ish grid, a couple of actors, `robots` robots.
pub fn tiny_scenario(seed: u64, robots: usize, horizon: u32, num_headings: u32, max_turn: u32) -> Scenario {
    let mut r = rng(seed);
    let cols = r.gen_range(4..=6);
    let rows = r.gen_range(4..=6);
    let cell = 2.0;
    let mut map = random_map(&mut r, cols, rows, cell, 8.0);
    let extent = (cols as f64 * cell, rows as f64 * cell);
    let actors: Vec<ActorTrack> = (0..r.gen_range(1..=2))
        .map(|id| random_actor(&mut r, id, extent, horizon as usize + 1))
        .collect();
    let config = RobotConfig {
        max_turn,
        num_headings,
        intrinsics: small_intrinsics(),
        ..RobotConfig::default()
    };
    // distinct free starts
    let mut starts = Vec::new();
    while starts.len() < robots {
        let (x, y) = (r.gen_range(0..cols), r.gen_range(0..rows));
        if starts.iter().any(|s: &RobotState| s.cell() == (x as u32, y as u32)) {
            continue;
        }
        if map.height(x, y) >= config.altitude {
            map.set_height(x, y, 0.0);
        }
        starts.push(RobotState::new(x as u32, y as u32, r.gen_range(0..num_headings), 0));
    }
    Scenario {
        height_map: map,
        actors,
        robot_starts: starts,
        start_sets: vec![],
        robot_config: config,
        horizon,
        formation_radius: 6.0,
    }
    .validated()
    .unwrap()
}

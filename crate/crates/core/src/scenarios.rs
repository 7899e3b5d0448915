//! Bundled desk-scale worlds: five analogs of the usual multi-actor filming
//! situations (actors splitting around a block, merging at a street corner,
//! walking down a corridor, crossing a pillar forest, spread over a large
//! open yard) plus a tiny world small enough for exhaustive search.
//!
//! Everything is generated deterministically; `gen_scenarios` writes the
//! JSON copies under `scenarios/`.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scene::{
    is_env_free, ActorModel, ActorPose, ActorTrack, CameraIntrinsics, HeightMap, RobotConfig,
    RobotState, Scenario,
};

pub const ANALOGS: [&str; 5] = ["split", "merge", "corridor", "forest", "large"];

const CELL: f64 = 2.0;
const HORIZON: u32 = 10;
const TRIALS: usize = 10;
const TALL: f64 = 14.0;
const FORMATION_RADIUS: f64 = 7.0;

/// Looks up a bundled scenario by name (`tiny` or one of [`ANALOGS`]).
pub fn bundled(name: &str) -> Result<Scenario> {
    match name {
        "split" => split(),
        "merge" => merge(),
        "corridor" => corridor(),
        "forest" => forest(),
        "large" => large(),
        "tiny" => tiny(),
        other => Err(Error::validation(format!("unknown bundled scenario '{other}'"))),
    }
}

struct Grid {
    cols: usize,
    rows: usize,
    heights: Vec<f64>,
}

impl Grid {
    fn new(cols: usize, rows: usize) -> Self {
        Self {
            cols,
            rows,
            heights: vec![0.0; cols * rows],
        }
    }

    /// Inclusive cell rectangle.
    fn fill(&mut self, x0: usize, y0: usize, x1: usize, y1: usize, h: f64) -> &mut Self {
        for y in y0..=y1.min(self.rows - 1) {
            for x in x0..=x1.min(self.cols - 1) {
                self.heights[y * self.cols + x] = h;
            }
        }
        self
    }

    fn build(self) -> HeightMap {
        HeightMap::new(self.cols, self.rows, CELL, self.heights).expect("generated map is valid")
    }
}

fn person(id: u32) -> ActorModel {
    ActorModel {
        radius: 0.35 + 0.05 * (id % 3) as f64,
        height: 1.7 + 0.05 * (id % 2) as f64,
        num_side_faces: 8,
    }
}

/// Walks through `waypoints` (metres) at constant speed, facing the
/// direction of travel.
fn walk(id: u32, waypoints: &[(f64, f64)], speed: f64) -> ActorTrack {
    let mut poses = Vec::with_capacity(HORIZON as usize + 1);
    let mut seg = 0;
    let mut pos = Vector3::new(waypoints[0].0, waypoints[0].1, 0.0);
    let mut yaw = 0.0;
    for _ in 0..=HORIZON {
        if seg + 1 < waypoints.len() {
            let (tx, ty) = waypoints[seg + 1];
            yaw = (ty - pos.y).atan2(tx - pos.x);
        }
        poses.push(ActorPose { position: pos, yaw });
        let mut left = speed;
        while left > 0.0 && seg + 1 < waypoints.len() {
            let target = Vector3::new(waypoints[seg + 1].0, waypoints[seg + 1].1, 0.0);
            let d = target - pos;
            let dist = d.norm();
            if dist <= left {
                pos = target;
                left -= dist;
                seg += 1;
            } else {
                pos += d * (left / dist);
                left = 0.0;
            }
        }
    }
    ActorTrack {
        id,
        model: person(id),
        poses,
    }
}

fn config() -> RobotConfig {
    RobotConfig {
        altitude: 5.0,
        camera_tilt: 10f64.to_radians(),
        max_step: 1,
        max_turn: 2,
        num_headings: 16,
        intrinsics: CameraIntrinsics::default(),
        stationary_bonus: 0.01,
        ..RobotConfig::default()
    }
}

/// `TRIALS` start sets of `robots` distinct free cells drawn from `region`
/// (inclusive cell rectangle), headings uniform.
fn start_sets(
    map: &HeightMap,
    cfg: &RobotConfig,
    robots: usize,
    region: (u32, u32, u32, u32),
    seed: u64,
) -> Vec<Vec<RobotState>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x0, y0, x1, y1) = region;
    let mut free: Vec<(u32, u32)> = (y0..=y1)
        .flat_map(|y| (x0..=x1).map(move |x| (x, y)))
        .filter(|&(x, y)| map.contains(x as i64, y as i64) && is_env_free(x, y, cfg, map))
        .collect();
    assert!(free.len() >= robots, "start region too small");
    (0..TRIALS)
        .map(|_| {
            free.shuffle(&mut rng);
            free[..robots]
                .iter()
                .map(|&(x, y)| RobotState::new(x, y, rng.gen_range(0..cfg.num_headings), 0))
                .collect()
        })
        .collect()
}

fn assemble(
    map: HeightMap,
    actors: Vec<ActorTrack>,
    robots: usize,
    region: (u32, u32, u32, u32),
    seed: u64,
) -> Result<Scenario> {
    let cfg = config();
    let sets = start_sets(&map, &cfg, robots, region, seed);
    Scenario {
        height_map: map,
        actors,
        robot_starts: sets[0].clone(),
        start_sets: sets,
        robot_config: cfg,
        horizon: HORIZON,
        formation_radius: FORMATION_RADIUS,
    }
    .validated()
}

fn m(cell: f64) -> f64 {
    cell * CELL
}

/// Two actors walk north together, then part around a tall central block.
pub fn split() -> Result<Scenario> {
    let mut g = Grid::new(16, 16);
    g.fill(7, 8, 8, 9, TALL);
    let map = g.build();
    let actors = vec![
        walk(0, &[(m(7.6), m(1.0)), (m(7.6), m(6.0)), (m(3.0), m(11.0))], 1.8),
        walk(1, &[(m(8.4), m(1.0)), (m(8.4), m(6.0)), (m(13.0), m(11.0))], 1.8),
    ];
    assemble(map, actors, 4, (2, 0, 13, 7), 11)
}

/// Two actors arrive along perpendicular streets between tall buildings and
/// walk on together after the corner.
pub fn merge() -> Result<Scenario> {
    let mut g = Grid::new(16, 16);
    g.fill(0, 0, 5, 5, TALL)
        .fill(10, 0, 15, 5, TALL)
        .fill(0, 10, 5, 15, TALL)
        .fill(10, 10, 15, 15, TALL);
    let map = g.build();
    let actors = vec![
        walk(0, &[(m(0.5), m(8.0)), (m(7.5), m(8.0)), (m(15.5), m(8.0))], 1.6),
        walk(1, &[(m(8.0), m(15.5)), (m(8.0), m(8.6)), (m(15.5), m(8.6))], 1.6),
    ];
    assemble(map, actors, 4, (0, 0, 15, 15), 12)
}

/// Two actors walk one behind the other down a two-cell corridor that
/// zig-zags between tall blocks.
pub fn corridor() -> Result<Scenario> {
    let mut g = Grid::new(16, 16);
    g.fill(0, 0, 15, 15, TALL)
        .fill(0, 2, 6, 3, 0.0)
        .fill(5, 2, 6, 8, 0.0)
        .fill(5, 7, 11, 8, 0.0)
        .fill(10, 7, 11, 13, 0.0)
        .fill(10, 12, 15, 13, 0.0);
    let map = g.build();
    let path = |dx: f64, dy: f64| {
        vec![
            (m(2.0 + dx), m(3.0 + dy)),
            (m(6.0 + dx), m(3.0 + dy)),
            (m(6.0 + dx), m(8.0 + dy)),
            (m(11.0 + dx), m(8.0 + dy)),
            (m(11.0 + dx), m(13.0 + dy)),
            (m(16.0), m(13.0 + dy)),
        ]
    };
    let actors = vec![walk(0, &path(-0.3, -0.3), 1.4), walk(1, &path(-0.7, 0.3), 1.4)];
    assemble(map, actors, 3, (0, 2, 11, 8), 13)
}

/// Three actors walk a narrow trail through dense tall trees; two robots.
pub fn forest() -> Result<Scenario> {
    let actors = vec![
        walk(0, &[(m(2.0), m(6.5)), (m(14.5), m(7.0))], 1.4),
        walk(1, &[(m(2.5), m(8.0)), (m(14.5), m(8.5))], 1.4),
        walk(2, &[(m(1.5), m(9.0)), (m(13.5), m(9.8))], 1.4),
    ];
    let mut g = Grid::new(16, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for y in 0..16 {
        for x in 0..16 {
            if x % 2 == 1 && y % 2 == 1 && rng.gen_bool(TREE_DENSITY) {
                g.fill(x, y, x, y, TALL);
            } else if rng.gen_bool(BUSH_DENSITY) {
                g.fill(x, y, x, y, BUSH);
            }
        }
    }
    // keep the trail under the actors clear
    for track in &actors {
        for p in &track.poses {
            let (x, y) = ((p.position.x / CELL) as usize, (p.position.y / CELL) as usize);
            g.fill(x, y, x, y, 0.0);
        }
    }
    let map = g.build();
    assemble(map, actors, 2, (4, 5, 10, 11), 15)
}

const TREE_DENSITY: f64 = 0.6;
const BUSH_DENSITY: f64 = 0.4;
const BUSH: f64 = 3.5;

/// Three actors spread over a wide yard with low walls; eight robots.
pub fn large() -> Result<Scenario> {
    let mut g = Grid::new(24, 24);
    g.fill(5, 11, 9, 11, 2.0)
        .fill(14, 4, 14, 9, 2.0)
        .fill(14, 15, 19, 15, 2.0);
    let map = g.build();
    let actors = vec![
        walk(0, &[(m(3.0), m(4.0)), (m(10.0), m(6.0))], 1.4),
        walk(1, &[(m(20.0), m(6.0)), (m(18.0), m(12.5))], 1.4),
        walk(2, &[(m(8.0), m(20.0)), (m(16.0), m(19.0))], 1.4),
    ];
    assemble(map, actors, 8, (9, 9, 14, 14), 16)
}

/// Two robots, one actor, horizon 2: small enough for the joint oracle.
pub fn tiny() -> Result<Scenario> {
    let map = Grid::new(5, 5).build();
    let mut cfg = config();
    cfg.num_headings = 4;
    cfg.max_turn = 1;
    let yaw = TAU / 8.0;
    let actor = ActorTrack {
        id: 0,
        model: person(0),
        poses: (0..=2)
            .map(|t| ActorPose {
                position: Vector3::new(m(2.5) + 0.6 * t as f64, m(2.5), 0.0),
                yaw,
            })
            .collect(),
    };
    Scenario {
        height_map: map,
        actors: vec![actor],
        robot_starts: vec![RobotState::new(0, 0, 0, 0), RobotState::new(4, 4, 2, 0)],
        start_sets: vec![],
        robot_config: cfg,
        horizon: 2,
        formation_radius: FORMATION_RADIUS,
    }
    .validated()
}

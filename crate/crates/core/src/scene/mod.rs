//! World model: the 2.5D height map, actor tracks, robot configuration and the
//! discretized robot state space.
//!
//! Grid cell `(x, y)` covers `[x, x+1) × [y, y+1)` in units of `cell_size`,
//! with `x` growing east and `y` growing north. Robots live at cell centers at
//! a fixed altitude; headings are `num_headings` equally spaced yaw values with
//! index 0 facing `+x`.

mod schema;

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub use schema::{load_scenario, parse_scenario, save_scenario, scenario_to_json, ScenarioFile};

#[derive(Debug, Clone, PartialEq)]
pub struct HeightMap {
    cols: usize,
    rows: usize,
    cell_size: f64,
    heights: Vec<f64>,
}

impl HeightMap {
    pub fn new(cols: usize, rows: usize, cell_size: f64, heights: Vec<f64>) -> Result<Self> {
        if cols == 0 || rows == 0 {
            return Err(Error::validation("height map must have at least one row and column"));
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::validation("cell_size must be positive"));
        }
        if heights.len() != cols * rows {
            return Err(Error::validation(format!(
                "height map has {} heights, expected cols*rows = {}",
                heights.len(),
                cols * rows
            )));
        }
        if let Some(bad) = heights.iter().position(|h| !(h.is_finite() && *h >= 0.0)) {
            return Err(Error::validation(format!(
                "height at index {bad} must be finite and non-negative"
            )));
        }
        Ok(Self {
            cols,
            rows,
            cell_size,
            heights,
        })
    }

    /// An obstacle-free map.
    pub fn flat(cols: usize, rows: usize, cell_size: f64) -> Result<Self> {
        Self::new(cols, rows, cell_size, vec![0.0; cols * rows])
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn height(&self, x: usize, y: usize) -> f64 {
        self.heights[y * self.cols + x]
    }

    pub fn set_height(&mut self, x: usize, y: usize, h: f64) {
        assert!(h.is_finite() && h >= 0.0, "height must be finite and non-negative");
        self.heights[y * self.cols + x] = h;
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.cols && (y as usize) < self.rows
    }

    /// Metric coordinates of the center of cell `(x, y)`.
    pub fn cell_center(&self, x: u32, y: u32) -> (f64, f64) {
        (
            (x as f64 + 0.5) * self.cell_size,
            (y as f64 + 0.5) * self.cell_size,
        )
    }

    /// Cell containing a metric point, if it lies on the map.
    pub fn cell_of(&self, px: f64, py: f64) -> Option<(u32, u32)> {
        let x = (px / self.cell_size).floor();
        let y = (py / self.cell_size).floor();
        if x >= 0.0 && y >= 0.0 && (x as usize) < self.cols && (y as usize) < self.rows {
            Some((x as u32, y as u32))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub focal_px: f64,
    pub width_px: u32,
    pub height_px: u32,
}

impl CameraIntrinsics {
    fn validate(&self) -> Result<()> {
        if !(self.focal_px > 0.0 && self.focal_px.is_finite()) {
            return Err(Error::validation("intrinsics: focal_px must be positive"));
        }
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::validation("intrinsics: image size must be positive"));
        }
        Ok(())
    }
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self {
            focal_px: 2500.0,
            width_px: 4000,
            height_px: 3000,
        }
    }
}

/// How `max_step` bounds a single translation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepMetric {
    #[default]
    Chebyshev,
    Euclidean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotConfig {
    pub altitude: f64,
    /// Radians below the horizon.
    pub camera_tilt: f64,
    pub max_step: u32,
    pub max_turn: u32,
    pub num_headings: u32,
    pub intrinsics: CameraIntrinsics,
    pub stationary_bonus: f64,
    pub step_metric: StepMetric,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self {
            altitude: 5.0,
            camera_tilt: 10f64.to_radians(),
            max_step: 1,
            max_turn: 1,
            num_headings: 8,
            intrinsics: CameraIntrinsics::default(),
            stationary_bonus: 0.01,
            step_metric: StepMetric::Chebyshev,
        }
    }
}

impl RobotConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.altitude > 0.0 && self.altitude.is_finite()) {
            return Err(Error::validation("robots: altitude must be positive"));
        }
        if !self.camera_tilt.is_finite() {
            return Err(Error::validation("robots: camera tilt must be finite"));
        }
        if self.num_headings < 4 {
            return Err(Error::validation("robots: num_headings must be at least 4"));
        }
        if self.max_turn > self.num_headings / 2 {
            return Err(Error::validation(
                "robots: max_turn must not exceed num_headings / 2",
            ));
        }
        if !(self.stationary_bonus >= 0.0 && self.stationary_bonus.is_finite()) {
            return Err(Error::validation("robots: stationary_bonus must be non-negative"));
        }
        self.intrinsics.validate()
    }

    pub fn yaw_of(&self, theta: u32) -> f64 {
        theta as f64 * TAU / self.num_headings as f64
    }

    /// Circular distance between two heading indices.
    pub fn heading_distance(&self, a: u32, b: u32) -> u32 {
        let n = self.num_headings;
        let d = a.abs_diff(b) % n;
        d.min(n - d)
    }

    fn step_allowed(&self, dx: i64, dy: i64) -> bool {
        let k = self.max_step as i64;
        match self.step_metric {
            StepMetric::Chebyshev => dx.abs() <= k && dy.abs() <= k,
            StepMetric::Euclidean => dx * dx + dy * dy <= k * k,
        }
    }
}

/// A discrete robot state `[x y θ t]`. The derived ordering is lexicographic
/// in `(x, y, theta, t)`, which is the tie-break order used by the planners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RobotState {
    pub x: u32,
    pub y: u32,
    pub theta: u32,
    pub t: u32,
}

impl RobotState {
    pub const fn new(x: u32, y: u32, theta: u32, t: u32) -> Self {
        Self { x, y, theta, t }
    }

    /// True when `other` has the same position and heading.
    pub fn same_pose(&self, other: &RobotState) -> bool {
        self.x == other.x && self.y == other.y && self.theta == other.theta
    }

    pub fn cell(&self) -> (u32, u32) {
        (self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActorModel {
    /// Circumradius of the polygonal cross-section.
    pub radius: f64,
    pub height: f64,
    pub num_side_faces: u32,
}

impl ActorModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::validation("actor radius must be positive"));
        }
        if !(self.height > 0.0 && self.height.is_finite()) {
            return Err(Error::validation("actor height must be positive"));
        }
        if self.num_side_faces < 3 {
            return Err(Error::validation("actor needs at least 3 side faces"));
        }
        Ok(())
    }

    /// Area of one side face: chord length times height.
    pub fn face_area(&self) -> f64 {
        let n = self.num_side_faces as f64;
        2.0 * self.radius * (std::f64::consts::PI / n).sin() * self.height
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActorPose {
    /// Center of the cylinder base.
    pub position: Vector3<f64>,
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorTrack {
    pub id: u32,
    pub model: ActorModel,
    pub poses: Vec<ActorPose>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub position: Vector3<f64>,
    pub yaw: f64,
    /// Negative values look down.
    pub pitch: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub height_map: HeightMap,
    /// Sorted by id.
    pub actors: Vec<ActorTrack>,
    pub robot_starts: Vec<RobotState>,
    /// Alternative start configurations (trials). Always contains at least
    /// `robot_starts` when loaded from a file.
    pub start_sets: Vec<Vec<RobotState>>,
    pub robot_config: RobotConfig,
    pub horizon: u32,
    pub formation_radius: f64,
}

impl Scenario {
    /// Checks every type invariant, sorting actors by id.
    pub fn validated(mut self) -> Result<Self> {
        self.robot_config.validate()?;
        if !(self.formation_radius > 0.0 && self.formation_radius.is_finite()) {
            return Err(Error::validation("formation_radius must be positive"));
        }
        self.actors.sort_by_key(|a| a.id);
        for pair in self.actors.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::validation(format!("duplicate actor id {}", pair[0].id)));
            }
        }
        for actor in &self.actors {
            actor
                .model
                .validate()
                .map_err(|e| Error::validation(format!("actor {}: {e}", actor.id)))?;
            if actor.poses.len() != self.horizon as usize + 1 {
                return Err(Error::validation(format!(
                    "actor {} has {} poses, expected horizon+1 = {}",
                    actor.id,
                    actor.poses.len(),
                    self.horizon + 1
                )));
            }
            if actor
                .poses
                .iter()
                .any(|p| !(p.position.iter().all(|c| c.is_finite()) && p.yaw.is_finite()))
            {
                return Err(Error::validation(format!(
                    "actor {} has a non-finite pose",
                    actor.id
                )));
            }
        }
        if self.start_sets.is_empty() {
            self.start_sets.push(self.robot_starts.clone());
        }
        for (k, starts) in self.start_sets.iter().enumerate() {
            self.check_starts(starts)
                .map_err(|e| Error::validation(format!("start set {k}: {e}")))?;
        }
        self.check_starts(&self.robot_starts).map_err(Error::Validation)?;
        Ok(self)
    }

    fn check_starts(&self, starts: &[RobotState]) -> std::result::Result<(), String> {
        let mut seen = BTreeSet::new();
        for (i, s) in starts.iter().enumerate() {
            if !self.height_map.contains(s.x as i64, s.y as i64) {
                return Err(format!("robot {i} start ({}, {}) outside the grid", s.x, s.y));
            }
            if s.theta >= self.robot_config.num_headings {
                return Err(format!("robot {i} start heading {} invalid", s.theta));
            }
            if s.t != 0 {
                return Err(format!("robot {i} start must have t=0"));
            }
            if !is_env_free(s.x, s.y, &self.robot_config, &self.height_map) {
                return Err(format!("robot {i} start in collision at ({}, {})", s.x, s.y));
            }
            if !seen.insert((s.x, s.y)) {
                return Err(format!("robot {i} start shares cell ({}, {})", s.x, s.y));
            }
        }
        Ok(())
    }

    pub fn num_robots(&self) -> usize {
        self.robot_starts.len()
    }

    /// A copy planning from a different start configuration.
    pub fn with_starts(&self, starts: Vec<RobotState>) -> Result<Scenario> {
        let mut out = self.clone();
        self.check_starts(&starts).map_err(Error::Validation)?;
        out.robot_starts = starts;
        Ok(out)
    }

    /// A copy keeping only the first `n` robots of every start set.
    pub fn with_robot_count(&self, n: usize) -> Result<Scenario> {
        if n > self.robot_starts.len() {
            return Err(Error::validation(format!(
                "scenario provides {} start positions, {n} requested",
                self.robot_starts.len()
            )));
        }
        let mut out = self.clone();
        out.robot_starts.truncate(n);
        for set in &mut out.start_sets {
            if set.len() < n {
                return Err(Error::validation(format!(
                    "a start set provides {} positions, {n} requested",
                    set.len()
                )));
            }
            set.truncate(n);
        }
        Ok(out)
    }
}

/// Environment collision test: a cell is blocked when its height reaches the
/// flight altitude.
pub fn is_env_free(x: u32, y: u32, config: &RobotConfig, map: &HeightMap) -> bool {
    map.height(x as usize, y as usize) < config.altitude
}

pub fn camera_pose(state: &RobotState, config: &RobotConfig, map: &HeightMap) -> CameraPose {
    let (cx, cy) = map.cell_center(state.x, state.y);
    CameraPose {
        position: Vector3::new(cx, cy, config.altitude),
        yaw: config.yaw_of(state.theta),
        pitch: -config.camera_tilt,
    }
}

/// Successor states reachable in one step, sorted by `(x, y, theta)`.
pub fn neighbors(state: &RobotState, config: &RobotConfig, map: &HeightMap) -> Vec<RobotState> {
    let k = config.max_step as i64;
    let n = config.num_headings;
    let turn = config.max_turn.min(n / 2);
    let headings: BTreeSet<u32> = (0..=2 * turn)
        .map(|d| (state.theta + n * (turn + 1) + d - turn) % n)
        .collect();

    let mut out = Vec::new();
    for dx in -k..=k {
        let x = state.x as i64 + dx;
        for dy in -k..=k {
            let y = state.y as i64 + dy;
            if !config.step_allowed(dx, dy) || !map.contains(x, y) {
                continue;
            }
            let (x, y) = (x as u32, y as u32);
            if !is_env_free(x, y, config, map) {
                continue;
            }
            out.extend(
                headings
                    .iter()
                    .map(|&theta| RobotState::new(x, y, theta, state.t + 1)),
            );
        }
    }
    out.sort();
    out
}

/// True when `to` is one of `from`'s successors.
pub fn is_feasible_step(
    from: &RobotState,
    to: &RobotState,
    config: &RobotConfig,
    map: &HeightMap,
) -> bool {
    if to.t != from.t + 1 || !map.contains(to.x as i64, to.y as i64) {
        return false;
    }
    let dx = to.x as i64 - from.x as i64;
    let dy = to.y as i64 - from.y as i64;
    to.theta < config.num_headings
        && config.step_allowed(dx, dy)
        && config.heading_distance(from.theta, to.theta) <= config.max_turn
        && is_env_free(to.x, to.y, config, map)
}

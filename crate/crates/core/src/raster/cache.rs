use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use super::{face_counts, Camera, FaceTable, RenderScale, SceneGeometry};
use crate::reward::ViewDensities;
use crate::scene::{camera_pose, CameraPose, HeightMap, RobotConfig, RobotState, Scenario};

/// Evaluates pixel densities for robot states and camera poses of one world
/// (height map, actor tracks, camera model), memoizing per-state results.
///
/// The memo is keyed by `(x, y, theta, t)` and does not depend on start
/// positions, so one evaluator can serve every trial and planner on a
/// scenario. Concurrent callers may race to fill the same entry; entries are
/// deterministic, so the last write wins harmlessly.
#[derive(Debug)]
pub struct ViewEvaluator {
    map: HeightMap,
    config: RobotConfig,
    scale: RenderScale,
    frames: Vec<SceneGeometry>,
    cache: RwLock<HashMap<RobotState, Arc<ViewDensities>>>,
    renders: AtomicU64,
}

impl ViewEvaluator {
    pub fn new(scenario: &Scenario, scale: RenderScale) -> Self {
        let frames = (0..=scenario.horizon as usize)
            .map(|t| SceneGeometry::new(&scenario.height_map, &scenario.actors, t))
            .collect();
        Self {
            map: scenario.height_map.clone(),
            config: scenario.robot_config.clone(),
            scale,
            frames,
            cache: RwLock::new(HashMap::new()),
            renders: AtomicU64::new(0),
        }
    }

    pub fn scale(&self) -> RenderScale {
        self.scale
    }

    pub fn faces(&self) -> &FaceTable {
        &self.frames[0].table
    }

    pub fn horizon(&self) -> u32 {
        self.frames.len() as u32 - 1
    }

    pub fn geometry(&self, t: u32) -> &SceneGeometry {
        &self.frames[t as usize]
    }

    /// True when this evaluator was built for the same world as `scenario`.
    pub fn matches(&self, scenario: &Scenario) -> bool {
        self.map == scenario.height_map
            && self.config == scenario.robot_config
            && self.horizon() == scenario.horizon
            && self.faces() == &FaceTable::new(&scenario.actors)
    }

    /// Number of views rendered so far (cache misses plus pose views).
    pub fn render_count(&self) -> u64 {
        self.renders.load(Ordering::Relaxed)
    }

    pub fn cached_states(&self) -> usize {
        self.cache.read().expect("view cache poisoned").len()
    }

    pub fn state_view(&self, state: &RobotState) -> Arc<ViewDensities> {
        if let Some(hit) = self.cache.read().expect("view cache poisoned").get(state) {
            return Arc::clone(hit);
        }
        let pose = camera_pose(state, &self.config, &self.map);
        let view = Arc::new(self.pose_view(&pose, state.t));
        self.cache
            .write()
            .expect("view cache poisoned")
            .insert(*state, Arc::clone(&view));
        view
    }

    /// Densities seen from an arbitrary camera pose at timestep `t`; not cached.
    pub fn pose_view(&self, pose: &CameraPose, t: u32) -> ViewDensities {
        self.renders.fetch_add(1, Ordering::Relaxed);
        let geometry = &self.frames[t as usize];
        let camera = Camera::new(pose, &self.config.intrinsics, self.scale);
        let factor = self.scale.count_factor();
        ViewDensities::from_sorted(
            face_counts(&camera, geometry)
                .into_iter()
                .map(|(slot, count)| (slot, count as f64 * factor / geometry.table.area(slot)))
                .collect(),
        )
    }
}

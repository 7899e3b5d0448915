//! JSON scenario file format.

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{
    ActorModel, ActorPose, ActorTrack, CameraIntrinsics, HeightMap, RobotConfig, RobotState,
    Scenario, StepMetric,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub height_map: HeightMapFile,
    #[serde(default)]
    pub actors: Vec<ActorFile>,
    pub robots: RobotsFile,
    pub horizon: u32,
    pub formation_radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeightMapFile {
    pub cols: usize,
    pub rows: usize,
    pub cell_size: f64,
    pub heights: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorFile {
    pub id: u32,
    pub radius: f64,
    pub height: f64,
    #[serde(default = "default_side_faces")]
    pub num_side_faces: u32,
    pub poses: Vec<ActorPoseFile>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorPoseFile {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub z: f64,
    /// Radians.
    #[serde(default)]
    pub yaw: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartFile {
    pub x: u32,
    pub y: u32,
    #[serde(default)]
    pub theta: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotsFile {
    pub starts: Vec<StartFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub start_sets: Vec<Vec<StartFile>>,
    pub altitude: f64,
    pub camera_tilt_deg: f64,
    #[serde(default = "default_max_step")]
    pub max_step: u32,
    #[serde(default = "default_max_turn")]
    pub max_turn: u32,
    #[serde(default = "default_headings")]
    pub num_headings: u32,
    #[serde(default)]
    pub intrinsics: IntrinsicsFile,
    #[serde(default = "default_stationary_bonus")]
    pub stationary_bonus: f64,
    #[serde(default)]
    pub step_metric: StepMetricFile,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicsFile {
    pub focal_px: f64,
    pub width_px: u32,
    pub height_px: u32,
}

impl Default for IntrinsicsFile {
    fn default() -> Self {
        let d = CameraIntrinsics::default();
        Self {
            focal_px: d.focal_px,
            width_px: d.width_px,
            height_px: d.height_px,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum StepMetricFile {
    #[default]
    Chebyshev,
    Euclidean,
}

fn default_side_faces() -> u32 {
    8
}
fn default_max_step() -> u32 {
    1
}
fn default_max_turn() -> u32 {
    1
}
fn default_headings() -> u32 {
    8
}
fn default_stationary_bonus() -> f64 {
    0.01
}

impl From<StartFile> for RobotState {
    fn from(s: StartFile) -> Self {
        RobotState::new(s.x, s.y, s.theta, 0)
    }
}

impl From<&RobotState> for StartFile {
    fn from(s: &RobotState) -> Self {
        StartFile {
            x: s.x,
            y: s.y,
            theta: s.theta,
        }
    }
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let hm = self.height_map;
        let height_map = HeightMap::new(hm.cols, hm.rows, hm.cell_size, hm.heights)?;
        let actors = self
            .actors
            .into_iter()
            .map(|a| ActorTrack {
                id: a.id,
                model: ActorModel {
                    radius: a.radius,
                    height: a.height,
                    num_side_faces: a.num_side_faces,
                },
                poses: a
                    .poses
                    .into_iter()
                    .map(|p| ActorPose {
                        position: Vector3::new(p.x, p.y, p.z),
                        yaw: p.yaw,
                    })
                    .collect(),
            })
            .collect();
        let r = self.robots;
        let robot_config = RobotConfig {
            altitude: r.altitude,
            camera_tilt: r.camera_tilt_deg.to_radians(),
            max_step: r.max_step,
            max_turn: r.max_turn,
            num_headings: r.num_headings,
            intrinsics: CameraIntrinsics {
                focal_px: r.intrinsics.focal_px,
                width_px: r.intrinsics.width_px,
                height_px: r.intrinsics.height_px,
            },
            stationary_bonus: r.stationary_bonus,
            step_metric: match r.step_metric {
                StepMetricFile::Chebyshev => StepMetric::Chebyshev,
                StepMetricFile::Euclidean => StepMetric::Euclidean,
            },
        };
        let robot_starts: Vec<RobotState> = r.starts.into_iter().map(Into::into).collect();
        let start_sets = r
            .start_sets
            .into_iter()
            .map(|set| set.into_iter().map(Into::into).collect())
            .collect();
        Scenario {
            height_map,
            actors,
            robot_starts,
            start_sets,
            robot_config,
            horizon: self.horizon,
            formation_radius: self.formation_radius,
        }
        .validated()
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        let cfg = &s.robot_config;
        let starts: Vec<StartFile> = s.robot_starts.iter().map(Into::into).collect();
        // A lone start set equal to `starts` is implied and not written out.
        let start_sets = if s.start_sets.len() == 1 && s.start_sets[0] == s.robot_starts {
            Vec::new()
        } else {
            s.start_sets
                .iter()
                .map(|set| set.iter().map(Into::into).collect())
                .collect()
        };
        ScenarioFile {
            height_map: HeightMapFile {
                cols: s.height_map.cols(),
                rows: s.height_map.rows(),
                cell_size: s.height_map.cell_size(),
                heights: s.height_map.heights().to_vec(),
            },
            actors: s
                .actors
                .iter()
                .map(|a| ActorFile {
                    id: a.id,
                    radius: a.model.radius,
                    height: a.model.height,
                    num_side_faces: a.model.num_side_faces,
                    poses: a
                        .poses
                        .iter()
                        .map(|p| ActorPoseFile {
                            x: p.position.x,
                            y: p.position.y,
                            z: p.position.z,
                            yaw: p.yaw,
                        })
                        .collect(),
                })
                .collect(),
            robots: RobotsFile {
                starts,
                start_sets,
                altitude: cfg.altitude,
                camera_tilt_deg: degrees_exact(cfg.camera_tilt),
                max_step: cfg.max_step,
                max_turn: cfg.max_turn,
                num_headings: cfg.num_headings,
                intrinsics: IntrinsicsFile {
                    focal_px: cfg.intrinsics.focal_px,
                    width_px: cfg.intrinsics.width_px,
                    height_px: cfg.intrinsics.height_px,
                },
                stationary_bonus: cfg.stationary_bonus,
                step_metric: match cfg.step_metric {
                    StepMetric::Chebyshev => StepMetricFile::Chebyshev,
                    StepMetric::Euclidean => StepMetricFile::Euclidean,
                },
            },
            horizon: s.horizon,
            formation_radius: s.formation_radius,
        }
    }
}

/// Degrees that convert back to exactly `rad`, when a nearby value does.
fn degrees_exact(rad: f64) -> f64 {
    let deg = rad.to_degrees();
    let bits = deg.to_bits();
    (0..=4u64)
        .flat_map(|k| [bits.wrapping_add(k), bits.wrapping_sub(k)])
        .map(f64::from_bits)
        .find(|d| d.to_radians() == rad)
        .unwrap_or(deg)
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    file.into_scenario()
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text)
}

pub fn scenario_to_json(s: &Scenario) -> String {
    serde_json::to_string_pretty(&ScenarioFile::from_scenario(s))
        .expect("scenario serialization cannot fail")
}

pub fn save_scenario(s: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scenario_to_json(s)).map_err(|e| Error::io(path, e))
}

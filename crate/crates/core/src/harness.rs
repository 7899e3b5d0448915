//! Experiment plumbing behind the command-line tool: running planners over a
//! scenario's start sets, metrics and trajectory files, comparisons,
//! robot-count sweeps and debug renders.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coord::{
    formation_plan, identity_order, joint_oracle, sequential_plan, PlanResult,
    DEFAULT_ORACLE_BUDGET,
};
use crate::error::{Error, Result};
use crate::raster::{
    render, write_depth_pgm, write_id_ppm, Camera, FaceId, RenderScale, SceneGeometry,
    ViewEvaluator,
};
use crate::reward::check_trajectories;
use crate::scene::{camera_pose, load_scenario, CameraPose, RobotState, Scenario};

pub const METRICS_FILE: &str = "metrics.csv";
pub const TRAJECTORIES_FILE: &str = "trajectories.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Planner {
    Sequential,
    SequentialNoCollide,
    Formation,
    Oracle,
}

impl Planner {
    pub const ALL: [Planner; 4] = [
        Planner::Sequential,
        Planner::SequentialNoCollide,
        Planner::Formation,
        Planner::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Planner::Sequential => "sequential",
            Planner::SequentialNoCollide => "sequential-nocollide",
            Planner::Formation => "formation",
            Planner::Oracle => "oracle",
        }
    }

    /// Grid planners produce trajectories that depend on the start set.
    pub fn uses_starts(self) -> bool {
        self != Planner::Formation
    }
}

impl fmt::Display for Planner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Planner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Planner::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::validation(format!(
                    "unknown planner '{s}' (expected one of: sequential, sequential-nocollide, formation, oracle)"
                ))
            })
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: PathBuf,
    pub planner: Planner,
    /// Recorded in the outputs; planning itself is deterministic.
    pub seed: u64,
    pub render_scale: RenderScale,
    pub out_dir: PathBuf,
    /// Plan with only the first `n` robots of every start set.
    pub robots: Option<usize>,
    /// Shuffles the planning order of every trial.
    pub order_seed: Option<u64>,
    pub dump_frames: bool,
    pub oracle_budget: u64,
}

impl RunConfig {
    pub fn new(scenario: impl Into<PathBuf>, planner: Planner, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            scenario: scenario.into(),
            planner,
            seed: 0,
            render_scale: RenderScale::PLANNING,
            out_dir: out_dir.into(),
            robots: None,
            order_seed: None,
            dump_frames: false,
            oracle_budget: DEFAULT_ORACLE_BUDGET,
        }
    }
}

/// Maps an error onto the process exit status.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Planning { .. } => 2,
        Error::BudgetExceeded { .. } => 3,
        _ => 1,
    }
}

/// Planning order for trial `trial`: scenario order, or a seeded shuffle.
pub fn planning_order(robots: usize, order_seed: Option<u64>, trial: usize) -> Vec<usize> {
    let mut order = identity_order(robots);
    if let Some(seed) = order_seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
        order.shuffle(&mut rng);
    }
    order
}

/// One planner run on one start set.
#[derive(Debug, Clone)]
pub struct Trial {
    pub planner: Planner,
    pub trial: usize,
    pub plan: PlanResult,
    /// Robots in the scenario (the per-robot normalizer).
    pub scenario_robots: usize,
}

impl Trial {
    /// View reward divided by the scenario's robot count, even when the
    /// planner flew a different number of robots.
    pub fn per_robot_view_reward(&self) -> f64 {
        self.plan.breakdown.view_reward / self.scenario_robots.max(1) as f64
    }

    pub fn metrics(&self) -> MetricsRow {
        let b = &self.plan.breakdown;
        MetricsRow {
            planner: self.planner.name().to_string(),
            trial: self.trial,
            robots: b.robots,
            view_reward: b.view_reward,
            per_robot_view_reward: self.per_robot_view_reward(),
            stationary_reward: b.stationary_reward,
            collisions: self.plan.collisions.count,
            wall_time_s: self.plan.wall_time_s(),
        }
    }
}

/// Runs `planner` on every start set of `scenario`. Formation planning does
/// not depend on start positions and runs once, as trial 0.
pub fn plan_trials(
    scenario: &Scenario,
    evaluator: &ViewEvaluator,
    planner: Planner,
    order_seed: Option<u64>,
    oracle_budget: u64,
) -> Result<Vec<Trial>> {
    if !evaluator.matches(scenario) {
        return Err(Error::validation("view evaluator was built for a different scenario"));
    }
    let sets: Vec<Vec<RobotState>> = if planner.uses_starts() {
        scenario.start_sets.clone()
    } else {
        vec![scenario.robot_starts.clone()]
    };
    sets.into_iter()
        .enumerate()
        .map(|(trial, starts)| {
            let s = scenario.with_starts(starts)?;
            let n = s.num_robots();
            let clock = Instant::now();
            let mut plan = match planner {
                Planner::Sequential => {
                    sequential_plan(&s, evaluator, true, &planning_order(n, order_seed, trial))?
                }
                Planner::SequentialNoCollide => {
                    sequential_plan(&s, evaluator, false, &planning_order(n, order_seed, trial))?
                }
                Planner::Formation => formation_plan(&s, evaluator)?,
                Planner::Oracle => joint_oracle(&s, evaluator, false, oracle_budget)?,
            };
            if !matches!(planner, Planner::Sequential | Planner::SequentialNoCollide) {
                // joint planners: charge the whole run to the first robot
                let elapsed = clock.elapsed().as_secs_f64();
                for (k, r) in plan.robots.iter_mut().enumerate() {
                    r.wall_time_s = if k == 0 { elapsed } else { 0.0 };
                }
            }
            Ok(Trial {
                planner,
                trial,
                plan,
                scenario_robots: n,
            })
        })
        .collect()
}

/// A row of `metrics.csv`; field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub planner: String,
    pub trial: usize,
    pub robots: usize,
    pub view_reward: f64,
    pub per_robot_view_reward: f64,
    pub stationary_reward: f64,
    pub collisions: usize,
    pub wall_time_s: f64,
}

pub const METRICS_HEADER: &str =
    "planner,trial,robots,view_reward,per_robot_view_reward,stationary_reward,collisions,wall_time_s";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    if rows.is_empty() {
        return fs::write(path, format!("{METRICS_HEADER}\n")).map_err(|e| Error::io(path, e));
    }
    write_csv(path, rows)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRecord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
    pub pitch: f64,
}

impl From<&CameraPose> for PoseRecord {
    fn from(p: &CameraPose) -> Self {
        Self {
            x: p.position.x,
            y: p.position.y,
            z: p.position.z,
            yaw: p.yaw,
            pitch: p.pitch,
        }
    }
}

/// One robot at one timestep. Grid fields are absent for off-grid planners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRecord {
    pub t: u32,
    pub x: Option<u32>,
    pub y: Option<u32>,
    pub theta: Option<u32>,
    pub pose: PoseRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotRecord {
    pub robot: usize,
    pub marginal_view_reward: f64,
    pub steps: Vec<StepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    pub trial: usize,
    pub order: Vec<usize>,
    pub view_reward: f64,
    pub robots: Vec<RobotRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryFile {
    pub planner: String,
    pub seed: u64,
    pub order_seed: Option<u64>,
    pub render_scale: f64,
    pub horizon: u32,
    pub trials: Vec<TrialRecord>,
}

impl TrajectoryFile {
    pub fn new(config: &RunConfig, horizon: u32, trials: &[Trial]) -> Self {
        Self {
            planner: config.planner.name().to_string(),
            seed: config.seed,
            order_seed: config.order_seed,
            render_scale: config.render_scale.get(),
            horizon,
            trials: trials.iter().map(trial_record).collect(),
        }
    }
}

fn trial_record(trial: &Trial) -> TrialRecord {
    let robots = trial
        .plan
        .robots
        .iter()
        .enumerate()
        .map(|(robot, r)| RobotRecord {
            robot,
            marginal_view_reward: r.marginal_view_reward,
            steps: r
                .poses
                .iter()
                .enumerate()
                .map(|(t, pose)| {
                    let s = r.trajectory.get(t);
                    StepRecord {
                        t: t as u32,
                        x: s.map(|s| s.x),
                        y: s.map(|s| s.y),
                        theta: s.map(|s| s.theta),
                        pose: pose.into(),
                    }
                })
                .collect(),
        })
        .collect();
    TrialRecord {
        trial: trial.trial,
        order: trial.plan.order.clone(),
        view_reward: trial.plan.breakdown.view_reward,
        robots,
    }
}

/// Parses a trajectory file and checks it against `scenario`: one step per
/// timestep for every robot, and for grid trajectories the start state and
/// motion model of the matching start set.
pub fn validate_trajectories(text: &str, scenario: &Scenario) -> Result<TrajectoryFile> {
    let file: TrajectoryFile = serde_json::from_str(text)?;
    file.planner.parse::<Planner>()?;
    if file.horizon != scenario.horizon {
        return Err(Error::validation(format!(
            "trajectory horizon {} differs from scenario horizon {}",
            file.horizon, scenario.horizon
        )));
    }
    for trial in &file.trials {
        let starts = scenario.start_sets.get(trial.trial).ok_or_else(|| {
            Error::validation(format!("trial {} has no matching start set", trial.trial))
        })?;
        let mut grid = Vec::new();
        for (k, r) in trial.robots.iter().enumerate() {
            if r.robot != k {
                return Err(Error::validation(format!("trial {}: robots out of order", trial.trial)));
            }
            if r.steps.len() != scenario.horizon as usize + 1
                || r.steps.iter().enumerate().any(|(t, s)| s.t != t as u32)
            {
                return Err(Error::validation(format!(
                    "trial {} robot {k}: expected one step per timestep 0..={}",
                    trial.trial, scenario.horizon
                )));
            }
            let states: Option<Vec<RobotState>> = r
                .steps
                .iter()
                .map(|s| Some(RobotState::new(s.x?, s.y?, s.theta?, s.t)))
                .collect();
            grid.push(states);
        }
        if grid.iter().all(Option::is_some) && !grid.is_empty() {
            let trajectories: Vec<Vec<RobotState>> = grid.into_iter().flatten().collect();
            let n = trajectories.len();
            if n > starts.len() {
                return Err(Error::validation(format!(
                    "trial {}: {n} robots but the start set has {}",
                    trial.trial,
                    starts.len()
                )));
            }
            let s = scenario.with_starts(starts[..n].to_vec())?;
            check_trajectories(&s, &trajectories)?;
        }
    }
    Ok(file)
}

/// What a `plan` run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trials: Vec<Trial>,
    pub metrics: Vec<MetricsRow>,
    pub metrics_path: PathBuf,
    pub trajectories_path: PathBuf,
    pub frames: Vec<PathBuf>,
}

/// Loads the scenario (applying the robot-count override).
pub fn load_for_run(config: &RunConfig) -> Result<Scenario> {
    let scenario = load_scenario(&config.scenario)?;
    match config.robots {
        Some(n) => scenario.with_robot_count(n),
        None => Ok(scenario),
    }
}

/// Runs the configured planner on every start set and writes `metrics.csv`,
/// `trajectories.json` and, if requested, trial-0 frames.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let scenario = load_for_run(config)?;
    let evaluator = ViewEvaluator::new(&scenario, config.render_scale);
    run_with(config, &scenario, &evaluator)
}

pub fn run_with(config: &RunConfig, scenario: &Scenario, evaluator: &ViewEvaluator) -> Result<RunOutput> {
    let trials = plan_trials(
        scenario,
        evaluator,
        config.planner,
        config.order_seed,
        config.oracle_budget,
    )?;
    create_dir(&config.out_dir)?;
    let metrics: Vec<MetricsRow> = trials.iter().map(Trial::metrics).collect();
    let metrics_path = config.out_dir.join(METRICS_FILE);
    write_metrics(&metrics_path, &metrics)?;

    let trajectories_path = config.out_dir.join(TRAJECTORIES_FILE);
    let file = TrajectoryFile::new(config, scenario.horizon, &trials);
    let text = serde_json::to_string_pretty(&file)?;
    fs::write(&trajectories_path, text).map_err(|e| Error::io(&trajectories_path, e))?;

    let mut frames = Vec::new();
    if config.dump_frames {
        let dir = config.out_dir.join("frames");
        create_dir(&dir)?;
        let first = &trials[0];
        for (robot, r) in first.plan.robots.iter().enumerate() {
            for (t, pose) in r.poses.iter().enumerate() {
                let path = dir.join(format!("robot{robot}_t{t:02}.ppm"));
                let camera = Camera::new(pose, &scenario.robot_config.intrinsics, config.render_scale);
                write_id_ppm(&render(&camera, evaluator.geometry(t as u32)), &path)?;
                frames.push(path);
            }
        }
    }
    Ok(RunOutput {
        trials,
        metrics,
        metrics_path,
        trajectories_path,
        frames,
    })
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub planner: String,
    pub trials: usize,
    pub mean_per_robot_view_reward: f64,
    pub std_per_robot_view_reward: f64,
    pub mean_collisions: f64,
    /// Mean divided by the formation planner's mean, when formation ran.
    pub normalized_to_formation: Option<f64>,
}

/// Runs each planner over all start sets and summarizes per-robot reward.
pub fn compare(
    scenario: &Scenario,
    evaluator: &ViewEvaluator,
    planners: &[Planner],
    order_seed: Option<u64>,
    oracle_budget: u64,
) -> Result<Vec<CompareRow>> {
    let mut rows = Vec::new();
    for &planner in planners {
        let trials = plan_trials(scenario, evaluator, planner, order_seed, oracle_budget)?;
        let per_robot: Vec<f64> = trials.iter().map(Trial::per_robot_view_reward).collect();
        let (mean, std) = mean_std(&per_robot);
        let collisions: Vec<f64> = trials.iter().map(|t| t.plan.collisions.count as f64).collect();
        rows.push(CompareRow {
            planner: planner.name().to_string(),
            trials: trials.len(),
            mean_per_robot_view_reward: mean,
            std_per_robot_view_reward: std,
            mean_collisions: mean_std(&collisions).0,
            normalized_to_formation: None,
        });
    }
    if let Some(base) = rows
        .iter()
        .find(|r| r.planner == Planner::Formation.name())
        .map(|r| r.mean_per_robot_view_reward)
    {
        for r in &mut rows {
            r.normalized_to_formation = (base > 0.0).then(|| r.mean_per_robot_view_reward / base);
        }
    }
    Ok(rows)
}

pub fn write_compare(path: &Path, rows: &[CompareRow]) -> Result<()> {
    write_csv(path, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub robots: usize,
    pub view_reward: f64,
    /// Reward added by the last robot on top of the others.
    pub marginal_view_reward: f64,
    pub wall_time_s: f64,
}

/// Sequential planning from the first start set with the first `n` robots
/// for each `n` in `counts`. Each count gets a fresh view cache so wall
/// times include rendering.
pub fn scale_sweep(scenario: &Scenario, counts: &[usize], scale: RenderScale) -> Result<Vec<ScaleRow>> {
    counts
        .iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::validation("robot counts must be positive"));
            }
            let s = scenario.with_robot_count(n)?;
            let evaluator = ViewEvaluator::new(&s, scale);
            let clock = Instant::now();
            let plan = sequential_plan(&s, &evaluator, true, &identity_order(n))?;
            Ok(ScaleRow {
                robots: n,
                view_reward: plan.breakdown.view_reward,
                marginal_view_reward: plan.robots[n - 1].marginal_view_reward,
                wall_time_s: clock.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

pub fn write_scale(path: &Path, rows: &[ScaleRow]) -> Result<()> {
    write_csv(path, rows)
}

/// Least-squares slope of `ln(time)` against `ln(robots)`.
pub fn growth_exponent(rows: &[ScaleRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.wall_time_s > 0.0)
        .map(|r| ((r.robots as f64).ln(), r.wall_time_s.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Renders the view of one robot state, writes `ids.ppm` and `depth.pgm`
/// into `out_dir` and returns the per-face pixel counts.
pub fn render_debug(
    scenario: &Scenario,
    state: &RobotState,
    scale: RenderScale,
    out_dir: &Path,
) -> Result<BTreeMap<FaceId, u64>> {
    if state.t > scenario.horizon {
        return Err(Error::validation(format!(
            "t={} beyond the horizon {}",
            state.t, scenario.horizon
        )));
    }
    if !scenario.height_map.contains(state.x as i64, state.y as i64)
        || state.theta >= scenario.robot_config.num_headings
    {
        return Err(Error::validation("state outside the grid or heading out of range"));
    }
    let geometry = SceneGeometry::new(&scenario.height_map, &scenario.actors, state.t as usize);
    let pose = camera_pose(state, &scenario.robot_config, &scenario.height_map);
    let camera = Camera::new(&pose, &scenario.robot_config.intrinsics, scale);
    let view = render(&camera, &geometry);
    create_dir(out_dir)?;
    write_id_ppm(&view, out_dir.join("ids.ppm"))?;
    write_depth_pgm(&view, out_dir.join("depth.pgm"))?;
    Ok(view.face_counts())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planner_names_round_trip() {
        for p in Planner::ALL {
            assert_eq!(p.name().parse::<Planner>().unwrap(), p);
        }
        assert!("greedy".parse::<Planner>().is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::validation("x")), 1);
        assert_eq!(
            exit_code(&Error::Planning {
                robot: 0,
                reason: String::new()
            }),
            2
        );
        assert_eq!(
            exit_code(&Error::BudgetExceeded {
                estimate: 2.0,
                budget: 1
            }),
            3
        );
    }

    #[test]
    fn order_is_seeded_permutation() {
        assert_eq!(planning_order(4, None, 3), vec![0, 1, 2, 3]);
        let a = planning_order(6, Some(9), 0);
        assert_eq!(a, planning_order(6, Some(9), 0));
        let mut sorted = a.clone();
        sorted.sort();
        assert_eq!(sorted, identity_order(6));
    }

    #[test]
    fn mean_std_examples() {
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn exponent_of_power_law() {
        let rows: Vec<ScaleRow> = (1..=6)
            .map(|n| ScaleRow {
                robots: n,
                view_reward: 0.0,
                marginal_view_reward: 0.0,
                wall_time_s: 0.3 * (n as f64).powf(1.5),
            })
            .collect();
        assert!((growth_exponent(&rows).unwrap() - 1.5).abs() < 1e-9);
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use viewplan::harness::{
    compare, exit_code, growth_exponent, load_for_run, render_debug, run, scale_sweep,
    validate_trajectories, write_compare, write_scale, Planner, RunConfig,
};
use viewplan::raster::{RenderScale, ViewEvaluator};
use viewplan::scene::{load_scenario, RobotState};
use viewplan::{Error, Result};

#[derive(Parser)]
#[command(name = "viewplan", version, about = "Multi-robot view planning for filming moving actors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one planner on every start set of a scenario.
    Plan(PlanArgs),
    /// Compare planners over all start sets (mean and stddev per robot).
    Compare(CompareArgs),
    /// Sequential planning with 1..=N robots; reward and wall time per count.
    Scale(ScaleArgs),
    /// Render one robot view to PPM/PGM and print per-face pixel counts.
    RenderDebug(RenderArgs),
    /// Check a scenario file and optionally a trajectories.json against it.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 0.25, value_parser = parse_scale)]
    render_scale: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "sequential")]
    planner: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep only the first N robots.
    #[arg(long)]
    robots: Option<usize>,
    /// Shuffle the planning order with this seed.
    #[arg(long)]
    order_seed: Option<u64>,
    /// Write trial-0 id frames for every robot and timestep.
    #[arg(long)]
    dump_frames: bool,
    #[arg(long, default_value_t = viewplan::coord::DEFAULT_ORACLE_BUDGET)]
    oracle_budget: u64,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "formation,sequential,sequential-nocollide")]
    planners: Vec<String>,
    #[arg(long)]
    robots: Option<usize>,
    #[arg(long)]
    order_seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ScaleArgs {
    #[command(flatten)]
    common: Common,
    /// Largest robot count; defaults to the scenario's.
    #[arg(long)]
    robots: Option<usize>,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    x: u32,
    #[arg(long)]
    y: u32,
    #[arg(long, default_value_t = 0)]
    theta: u32,
    #[arg(long, default_value_t = 0)]
    t: u32,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    trajectories: Option<PathBuf>,
}

fn parse_scale(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    RenderScale::new(v)
        .map(RenderScale::get)
        .ok_or_else(|| "render scale must lie in (0, 1]".to_string())
}

fn scale(v: f64) -> RenderScale {
    RenderScale::new(v).expect("checked by the argument parser")
}

fn planners(names: &[String]) -> Result<Vec<Planner>> {
    names.iter().map(|n| n.parse()).collect()
}

fn out_file(dir: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(dir.join(name))
}

fn cmd_plan(a: PlanArgs) -> Result<()> {
    let config = RunConfig {
        scenario: a.common.scenario,
        planner: a.planner.parse()?,
        seed: a.seed,
        render_scale: scale(a.common.render_scale),
        out_dir: a.common.out,
        robots: a.robots,
        order_seed: a.order_seed,
        dump_frames: a.dump_frames,
        oracle_budget: a.oracle_budget,
    };
    let output = run(&config)?;
    for trial in &output.trials {
        let b = &trial.plan.breakdown;
        println!(
            "{} trial {}: view reward {:.3} (per robot {:.3}), stationary {:.3}, collisions {}",
            trial.planner,
            trial.trial,
            b.view_reward,
            trial.per_robot_view_reward(),
            b.stationary_reward,
            trial.plan.collisions.count
        );
    }
    println!("wrote {}", output.metrics_path.display());
    println!("wrote {}", output.trajectories_path.display());
    if !output.frames.is_empty() {
        println!("wrote {} frames", output.frames.len());
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    let mut config = RunConfig::new(&a.common.scenario, Planner::Sequential, &a.common.out);
    config.robots = a.robots;
    let scenario = load_for_run(&config)?;
    let planners = planners(&a.planners)?;
    let evaluator = ViewEvaluator::new(&scenario, scale(a.common.render_scale));
    let rows = compare(&scenario, &evaluator, &planners, a.order_seed, config.oracle_budget)?;
    println!("{:<22} {:>6} {:>12} {:>10} {:>10}", "planner", "trials", "mean", "stddev", "vs form.");
    for r in &rows {
        let ratio = r
            .normalized_to_formation
            .map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
        println!(
            "{:<22} {:>6} {:>12.2} {:>10.2} {:>10}",
            r.planner, r.trials, r.mean_per_robot_view_reward, r.std_per_robot_view_reward, ratio
        );
    }
    let path = out_file(&a.common.out, "compare.csv")?;
    write_compare(&path, &rows)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_scale(a: ScaleArgs) -> Result<()> {
    let scenario = load_scenario(&a.common.scenario)?;
    let max = a.robots.unwrap_or(scenario.num_robots());
    let counts: Vec<usize> = (1..=max).collect();
    let rows = scale_sweep(&scenario, &counts, scale(a.common.render_scale))?;
    println!("{:>6} {:>12} {:>12} {:>10}", "robots", "reward", "marginal", "time (s)");
    for r in &rows {
        println!(
            "{:>6} {:>12.2} {:>12.2} {:>10.3}",
            r.robots, r.view_reward, r.marginal_view_reward, r.wall_time_s
        );
    }
    if let Some(k) = growth_exponent(&rows) {
        println!("wall-time growth exponent {k:.3}");
    }
    let path = out_file(&a.common.out, "scale.csv")?;
    write_scale(&path, &rows)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_render(a: RenderArgs) -> Result<()> {
    let scenario = load_scenario(&a.common.scenario)?;
    let state = RobotState::new(a.x, a.y, a.theta, a.t);
    let counts = render_debug(&scenario, &state, scale(a.common.render_scale), &a.common.out)?;
    if counts.is_empty() {
        println!("no actor faces visible");
    }
    for (face, n) in counts {
        println!("actor {} face {}: {n} px", face.actor_id, face.face_index);
    }
    println!("wrote {}", a.common.out.display());
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> Result<()> {
    let scenario = load_scenario(&a.scenario)?;
    println!(
        "scenario ok: {}x{} cells, {} actors, {} robots, horizon {}, {} start sets",
        scenario.height_map.cols(),
        scenario.height_map.rows(),
        scenario.actors.len(),
        scenario.num_robots(),
        scenario.horizon,
        scenario.start_sets.len()
    );
    if let Some(path) = a.trajectories {
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let file = validate_trajectories(&text, &scenario)?;
        println!("trajectories ok: {} trials", file.trials.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Scale(a) => cmd_scale(a),
        Command::RenderDebug(a) => cmd_render(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

//! lqg-walk: plan, simulate and stress-test LIPM walks from a config file.
//!
//! Usage:
//!   lqg-walk plan       --config configs/ten_step_plan.toml --out out/plan
//!   lqg-walk simulate   --config configs/noise.toml --out out/noise --seed 7
//!   lqg-walk push-limit --config configs/push_90.toml --direction backward --out out/limit
//!   lqg-walk sweep      --config configs/push_grid.toml --out out/sweep
//!
//! Exit codes: 0 success, 1 error, 2 the robot fell (simulate without
//! --allow-fall).

mod config;
mod svg;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use lqg_walk::io::{fmt_f64, write_footsteps_csv, write_log_csv, write_reference_csv};
use lqg_walk::planner::{build_reference, ReferenceOptions};
use lqg_walk::sim::{find_push_limit, run_scenario, LogRow, PushDirection, SimulationResult};

use config::RunConfig;
use svg::Series;

#[derive(Parser)]
#[command(name = "lqg-walk", version, about = "LIPM/DCM walking simulator with LQG control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario config (.toml, or .json)
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the config's RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Exit 0 even if the robot falls
    #[arg(long)]
    allow_fall: bool,
    /// Skip SVG output
    #[arg(long)]
    no_plots: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Footstep plan and COM/ZMP/DCM reference
    Plan(Common),
    /// Closed-loop run of one scenario
    Simulate(Common),
    /// Bisect the largest survivable push in one direction
    PushLimit {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "forward")]
        direction: PushDirection,
    },
    /// Run the push grid from the config's [sweep] table
    Sweep(Common),
}

#[derive(Serialize)]
struct RunManifest<'a> {
    scenario_id: &'a str,
    command: &'a str,
    config_hash: String,
    seed: u64,
    outputs: Vec<String>,
    tool_version: &'static str,
}

/// Collects output files so the manifest can list them.
struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(BufWriter::new(file))
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn finish(mut self, cfg: &RunConfig, command: &str) -> Result<()> {
        let manifest = RunManifest {
            scenario_id: &cfg.scenario.id,
            command,
            config_hash: cfg.hash()?,
            seed: cfg.scenario.seed,
            outputs: std::mem::take(&mut self.written),
            tool_version: env!("CARGO_PKG_VERSION"),
        };
        self.write("manifest.json", &(serde_json::to_string_pretty(&manifest)? + "\n"))
    }
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.scenario.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Plan(common) => cmd_plan(&common),
        Command::Simulate(common) => cmd_simulate(&common),
        Command::PushLimit { common, direction } => cmd_push_limit(&common, direction),
        Command::Sweep(common) => cmd_sweep(&common),
    }
}

// ---------------------------------------------------------------------------
// plan
// ---------------------------------------------------------------------------

fn cmd_plan(common: &Common) -> Result<ExitCode> {
    let cfg = load(common)?;
    let sc = &cfg.scenario;
    sc.validate()?;
    let plan = sc.plan()?;
    let opts = ReferenceOptions { dt: sc.dt_ctrl, swing_apex: sc.swing_apex };
    let reference = build_reference(
        &plan,
        &sc.step,
        &sc.robot,
        plan.initial_stance_center(),
        plan.final_stance_center(),
        &opts,
    )?;

    let mut out = Outputs::new(&common.out)?;
    write_reference_csv(out.create("reference.csv")?, &reference)?;
    write_footsteps_csv(out.create("footsteps.csv")?, &plan)?;
    if !common.no_plots {
        for (axis, name) in [(0, "sagittal"), (1, "frontal")] {
            let pick = |f: fn(&lqg_walk::planner::ReferenceSample) -> [f64; 2]| -> Vec<(f64, f64)> {
                reference.samples.iter().map(|s| (s.t, f(s)[axis])).collect()
            };
            let chart = svg::line_chart(
                &format!("Reference, {name}"),
                "t (s)",
                if axis == 0 { "x (m)" } else { "y (m)" },
                &[
                    Series { name: "ZMP", color: "black", dashed: false, points: pick(|s| s.zmp) },
                    Series { name: "COM", color: "steelblue", dashed: false, points: pick(|s| s.com) },
                    Series { name: "DCM", color: "crimson", dashed: true, points: pick(|s| s.dcm) },
                ],
            );
            out.write(&format!("reference_{name}.svg"), &chart)?;
        }
        let com: Vec<(f64, f64)> = reference.samples.iter().map(|s| (s.com[0], s.com[1])).collect();
        let foot = [sc.robot.foot_length, sc.robot.foot_width];
        out.write("topview.svg", &svg::top_view(&plan, &plan, foot, &com))?;
    }
    out.finish(&cfg, "plan")?;
    println!(
        "plan `{}`: {} steps, {} reference samples -> {}",
        sc.id,
        plan.n_steps(),
        reference.samples.len(),
        common.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn trace_charts(result: &SimulationResult) -> [(String, String); 2] {
    [(0, "sagittal"), (1, "frontal")].map(|(axis, name)| {
        let pick = |f: fn(&lqg_walk::sim::AxisLog) -> f64| -> Vec<(f64, f64)> {
            result.log.iter().map(|r: &LogRow| (r.t, f(&r.axes[axis]))).collect()
        };
        let chart = svg::line_chart(
            &format!("{}, {name}", result.id),
            "t (s)",
            if axis == 0 { "x (m)" } else { "y (m)" },
            &[
                Series { name: "ZMP (applied)", color: "black", dashed: false, points: pick(|a| a.zmp_sat) },
                Series { name: "COM ref", color: "steelblue", dashed: true, points: pick(|a| a.com_ref) },
                Series { name: "COM", color: "steelblue", dashed: false, points: pick(|a| a.com_true) },
                Series { name: "DCM ref", color: "crimson", dashed: true, points: pick(|a| a.dcm_ref) },
                Series { name: "DCM", color: "crimson", dashed: false, points: pick(|a| a.dcm_true) },
                Series { name: "DCM est", color: "darkorange", dashed: false, points: pick(|a| a.dcm_est) },
            ],
        );
        (format!("{name}.svg"), chart)
    })
}

fn cmd_simulate(common: &Common) -> Result<ExitCode> {
    let cfg = load(common)?;
    let result = run_scenario(&cfg.scenario)?;

    let mut out = Outputs::new(&common.out)?;
    write_log_csv(out.create("log.csv")?, &result.log)?;
    out.write("metrics.json", &(serde_json::to_string_pretty(&result.metrics)? + "\n"))?;
    write_footsteps_csv(out.create("footsteps.csv")?, &result.initial_plan)?;
    if !result.adjustments.is_empty() {
        write_footsteps_csv(out.create("footsteps_adjusted.csv")?, &result.final_plan)?;
        let mut text = String::from("t,step,offset_x,offset_y\n");
        for a in &result.adjustments {
            text += &format!("{},{},{},{}\n", fmt_f64(a.t), a.step, fmt_f64(a.offset[0]), fmt_f64(a.offset[1]));
        }
        out.write("adjustments.csv", &text)?;
    }
    if !common.no_plots {
        for (name, chart) in trace_charts(&result) {
            out.write(&name, &chart)?;
        }
        let com: Vec<(f64, f64)> = result.log.iter().map(|r| (r.axes[0].com_true, r.axes[1].com_true)).collect();
        let robot = &cfg.scenario.robot;
        out.write(
            "topview.svg",
            &svg::top_view(&result.initial_plan, &result.final_plan, [robot.foot_length, robot.foot_width], &com),
        )?;
    }
    out.finish(&cfg, "simulate")?;

    let m = &result.metrics;
    println!(
        "simulate `{}`: fell={} steps={} rms=[{:.4e}, {:.4e}] max_dcm_err={:.4e} adjustments={}",
        result.id,
        m.fell,
        m.steps_completed,
        m.rms_error[0],
        m.rms_error[1],
        m.max_dcm_error,
        result.adjustments.len()
    );
    if m.fell && !common.allow_fall {
        eprintln!("robot fell at t = {:.3} s", m.fall_time.unwrap_or(f64::NAN));
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// push-limit
// ---------------------------------------------------------------------------

fn cmd_push_limit(common: &Common, direction: PushDirection) -> Result<ExitCode> {
    let cfg = load(common)?;
    let report = find_push_limit(&cfg.scenario, direction, &cfg.push_limit)?;
    let mut out = Outputs::new(&common.out)?;
    out.write(
        &format!("push_limit_{}.json", direction.as_str()),
        &(serde_json::to_string_pretty(&report)? + "\n"),
    )?;
    out.finish(&cfg, "push-limit")?;
    println!(
        "push-limit `{}` {}: survives {:.2} N, falls at {:.2} N ({} trials)",
        cfg.scenario.id,
        direction.as_str(),
        report.f_max,
        report.f_fall,
        report.trace.len()
    );
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

fn cmd_sweep(common: &Common) -> Result<ExitCode> {
    let cfg = load(common)?;
    let points = cfg.sweep.points()?;
    let results: Vec<SimulationResult> = points
        .par_iter()
        .map(|p| run_scenario(&cfg.sweep.scenario(&cfg.scenario, p)))
        .collect::<Result<_, _>>()?;

    let mut out = Outputs::new(&common.out)?;
    let mut table = String::from("index,id,direction,force,t_start,survived,fall_time,max_dcm_error,rms_x,rms_y\n");
    for (i, (p, r)) in points.iter().zip(&results).enumerate() {
        let name = format!("runs/{i:03}_{}.csv", p.direction.as_str());
        write_log_csv(out.create(&name)?, &r.log)?;
        let m = &r.metrics;
        table += &format!(
            "{i},{},{},{},{},{},{},{},{},{}\n",
            r.id,
            p.direction.as_str(),
            fmt_f64(p.force),
            fmt_f64(p.t_start),
            !m.fell,
            m.fall_time.map(fmt_f64).unwrap_or_default(),
            fmt_f64(m.max_dcm_error),
            fmt_f64(m.rms_error[0]),
            fmt_f64(m.rms_error[1]),
        );
    }
    out.write("survival.csv", &table)?;
    if !common.no_plots {
        for (i, r) in results.iter().enumerate() {
            let [(_, sagittal), _] = trace_charts(r);
            out.write(&format!("runs/{i:03}_sagittal.svg"), &sagittal)?;
        }
    }
    out.finish(&cfg, "sweep")?;

    let survived = results.iter().filter(|r| !r.metrics.fell).count();
    println!("sweep `{}`: {survived}/{} survived", cfg.scenario.id, results.len());
    Ok(ExitCode::SUCCESS)
}

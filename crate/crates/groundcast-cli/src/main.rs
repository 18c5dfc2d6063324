//! Command-line frontend for the groundcast pipeline.
//!
//! `detect` runs the full chain on a PCD cloud and a PGM template mask,
//! `synth` renders the built-in scenario catalog to disk, and `eval`
//! scores the detector against that catalog without touching disk.
//!
//! Exit codes: 0 on success, 1 on any error, and 2 when `detect` ran
//! cleanly but found nothing.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use groundcast::eval::run_eval;
use groundcast::io::{write_pcd, write_pgm_mask};
use groundcast::matcher::MatchConfig;
use groundcast::pipeline::{run_detect, DetectJob, DetectOptions, DetectionReport};
use groundcast::ransac::RansacConfig;
use groundcast::synth::{
    body_template, catalog_seeded, make_scene_labeled, GroundTruth, Scenario,
    CATALOG_MASTER_SEED,
};

#[derive(Parser)]
#[command(
    name = "groundcast",
    version,
    about = "Finds a human-shaped footprint in a floor-level point cloud"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect the body template in a point cloud.
    Detect(DetectArgs),
    /// Write synthetic scenes, ground truth, and the template to disk.
    Synth(SynthArgs),
    /// Score the detector against the synthetic catalog.
    Eval(EvalArgs),
}

#[derive(Args)]
struct DetectArgs {
    /// Input point cloud, ASCII PCD.
    #[arg(long)]
    input: PathBuf,
    /// Template mask, PGM.
    #[arg(long)]
    template: PathBuf,
    /// Also write the occupancy grid here, PGM.
    #[arg(long)]
    grid_out: Option<PathBuf>,
    /// Also write the full report here, JSON.
    #[arg(long)]
    report_out: Option<PathBuf>,
    /// Grid cell size, meters. The template mask is read at this scale.
    #[arg(long, default_value_t = 0.05)]
    cell_size: f64,
    /// Plane inlier distance threshold, meters.
    #[arg(long, default_value_t = 0.02)]
    threshold: f64,
    /// Probability that plane sampling sees at least one clean triple.
    #[arg(long, default_value_t = 0.99)]
    confidence: f64,
    /// Assumed worst-case inlier fraction for the iteration budget.
    #[arg(long, default_value_t = 0.5)]
    inlier_ratio: f64,
    /// Hard cap on plane sampling iterations.
    #[arg(long, default_value_t = 1000)]
    max_iterations: usize,
    /// Stop sampling once this fraction of the cloud fits one plane.
    #[arg(long, default_value_t = 0.9)]
    early_stop: f64,
    /// Plane sampling seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Rotation sweep step, degrees in (0, 90].
    #[arg(long, default_value_t = 5.0)]
    angle_step: f64,
    /// Minimum overlap score a detection must reach, in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    score_threshold: f64,
    /// Keep at most this many detections.
    #[arg(long, default_value_t = 4)]
    max_detections: usize,
    /// Omit timings so reruns produce byte-identical reports.
    #[arg(long)]
    no_timing: bool,
}

impl DetectArgs {
    fn options(&self) -> DetectOptions {
        DetectOptions {
            ransac: RansacConfig {
                inlier_threshold: self.threshold,
                confidence: self.confidence,
                inlier_ratio: self.inlier_ratio,
                max_iterations: self.max_iterations,
                early_stop_fraction: self.early_stop,
                seed: self.seed,
            },
            cell_size: self.cell_size,
            bounds: None,
            matching: MatchConfig {
                angle_step_deg: self.angle_step,
                score_threshold: self.score_threshold,
                max_detections: self.max_detections,
            },
        }
    }

    fn run(self) -> Result<ExitCode> {
        let report = run_detect(&DetectJob {
            input: &self.input,
            template: &self.template,
            grid_out: self.grid_out.as_deref(),
            report_out: self.report_out.as_deref(),
            options: self.options(),
            with_timing: !self.no_timing,
        })?;
        print_report(&report);
        Ok(if report.detections.is_empty() {
            ExitCode::from(2)
        } else {
            ExitCode::SUCCESS
        })
    }
}

fn print_report(report: &DetectionReport) {
    println!(
        "cloud: {} points ({} rows dropped); plane: {} inliers, {} off-plane, {} iterations",
        report.point_count,
        report.dropped_rows,
        report.plane.inlier_count,
        report.plane.outlier_count,
        report.plane.iterations_run
    );
    if let Some(grid) = &report.grid {
        println!(
            "grid: {} x {} cells at {} m, {} occupied",
            grid.width, grid.height, grid.cell_size, grid.occupied_cells
        );
    }
    if report.detections.is_empty() {
        println!("no detections");
    }
    for (i, d) in report.detections.iter().enumerate() {
        println!(
            "detection {}: score {:.3}, heading {:.1} deg, \
             center ({:.3}, {:.3}, {:.3}) in the cloud frame",
            i + 1,
            d.score,
            d.angle_deg,
            d.center_cloud[0],
            d.center_cloud[1],
            d.center_cloud[2]
        );
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Directory to fill; created if missing.
    #[arg(long)]
    out_dir: PathBuf,
    /// Scenario ids to render, comma separated. Default: all of them.
    #[arg(long, value_delimiter = ',')]
    scenarios: Option<Vec<u32>>,
    /// Override every scenario's range noise sigma, meters.
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Master seed the catalog's placements and scene seeds derive from.
    #[arg(long, default_value_t = CATALOG_MASTER_SEED)]
    master_seed: u64,
    /// Cell size of the emitted template mask, meters.
    #[arg(long, default_value_t = 0.05)]
    cell_size: f64,
}

impl SynthArgs {
    fn run(self) -> Result<ExitCode> {
        let scenarios = select_scenarios(self.master_seed, self.scenarios.as_deref())?;
        fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating {}", self.out_dir.display()))?;

        let template = body_template(self.cell_size)?;
        let template_path = self.out_dir.join("template.pgm");
        write_pgm_mask(
            &template_path,
            template.width(),
            template.height(),
            template.mask(),
        )?;
        println!(
            "template: {} x {} cells at {} m -> {}",
            template.width(),
            template.height(),
            self.cell_size,
            template_path.display()
        );

        for base in &scenarios {
            let scenario = match self.noise_sigma {
                Some(sigma) => Scenario {
                    noise_sigma: sigma,
                    ..base.clone()
                },
                None => base.clone(),
            };
            let (cloud, truth) = make_scene_labeled(&scenario)?;
            let dir = self.out_dir.join(format!("scenario_{:02}", scenario.id));
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            write_pcd(&dir.join("scene.pcd"), &cloud)?;
            let json = serde_json::to_string_pretty(&TruthFile::new(&scenario, &truth))?;
            fs::write(dir.join("truth.json"), json + "\n")?;
            println!(
                "scenario {:02}: {} points, {} on the body -> {}",
                scenario.id,
                cloud.len(),
                truth.body_pixel_count,
                dir.display()
            );
        }
        Ok(ExitCode::SUCCESS)
    }
}

#[derive(Serialize)]
struct CameraFile {
    width: usize,
    height: usize,
    hfov_deg: f64,
    vfov_deg: f64,
    min_range: f64,
    max_range: f64,
}

/// Ground truth as written next to each scene.
#[derive(Serialize)]
struct TruthFile {
    scenario_id: u32,
    pitch_deg: f64,
    camera_height: f64,
    /// World-frame floor coordinates of the body center.
    body_center: [f64; 2],
    body_yaw_deg: f64,
    noise_sigma: f64,
    seed: u64,
    body_pixel_count: usize,
    floor_pixel_count: usize,
    camera: CameraFile,
}

impl TruthFile {
    fn new(scenario: &Scenario, truth: &GroundTruth) -> Self {
        TruthFile {
            scenario_id: truth.scenario_id,
            pitch_deg: scenario.pitch_deg,
            camera_height: scenario.camera_height,
            body_center: [truth.body_center.u, truth.body_center.v],
            body_yaw_deg: truth.body_yaw_deg,
            noise_sigma: scenario.noise_sigma,
            seed: scenario.seed,
            body_pixel_count: truth.body_pixel_count,
            floor_pixel_count: truth.floor_pixel_count,
            camera: CameraFile {
                width: scenario.camera.width,
                height: scenario.camera.height,
                hfov_deg: scenario.camera.hfov_deg,
                vfov_deg: scenario.camera.vfov_deg,
                min_range: scenario.camera.min_range,
                max_range: scenario.camera.max_range,
            },
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Override the catalog's range noise sigma, meters.
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Scenario ids to score, comma separated. Default: all of them.
    #[arg(long, value_delimiter = ',')]
    scenarios: Option<Vec<u32>>,
    /// Master seed the catalog's placements and scene seeds derive from.
    #[arg(long, default_value_t = CATALOG_MASTER_SEED)]
    master_seed: u64,
    /// Grid and template cell size, meters.
    #[arg(long, default_value_t = 0.05)]
    cell_size: f64,
    /// Rotation sweep step, degrees in (0, 90].
    #[arg(long, default_value_t = 5.0)]
    angle_step: f64,
    /// Minimum overlap score a detection must reach, in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    score_threshold: f64,
    /// Write per-scenario outcomes here, JSON.
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct OutcomeFile {
    scenario_id: u32,
    pitch_deg: f64,
    body_yaw_deg: f64,
    detection_count: usize,
    hit: bool,
    center_error_m: Option<f64>,
    angle_error_deg: Option<f64>,
    score: Option<f64>,
}

#[derive(Serialize)]
struct EvalFile {
    hits: usize,
    total: usize,
    outcomes: Vec<OutcomeFile>,
}

impl EvalArgs {
    fn run(self) -> Result<ExitCode> {
        let scenarios = select_scenarios(self.master_seed, self.scenarios.as_deref())?;
        let options = DetectOptions {
            cell_size: self.cell_size,
            matching: MatchConfig {
                angle_step_deg: self.angle_step,
                score_threshold: self.score_threshold,
                ..MatchConfig::default()
            },
            ..DetectOptions::default()
        };
        let report = run_eval(&scenarios, self.noise_sigma, &options)?;

        for o in &report.outcomes {
            let pose = format!(
                "scenario {:02} (pitch {} deg, yaw {} deg)",
                o.scenario_id, o.pitch_deg, o.body_yaw_deg
            );
            if o.hit {
                println!(
                    "{pose}: HIT  score {:.3}, center off {:.3} m, heading off {:.1} deg",
                    o.score.unwrap_or(f64::NAN),
                    o.center_error_m.unwrap_or(f64::NAN),
                    o.angle_error_deg.unwrap_or(f64::NAN)
                );
            } else if let (Some(c), Some(a)) = (o.center_error_m, o.angle_error_deg) {
                println!(
                    "{pose}: MISS best of {} detection(s) is off by {c:.3} m / {a:.1} deg",
                    o.detection_count
                );
            } else {
                println!("{pose}: MISS no detections");
            }
        }
        println!("{}", report.summary());

        if let Some(path) = &self.report_out {
            let file = EvalFile {
                hits: report.hits,
                total: report.total,
                outcomes: report
                    .outcomes
                    .iter()
                    .map(|o| OutcomeFile {
                        scenario_id: o.scenario_id,
                        pitch_deg: o.pitch_deg,
                        body_yaw_deg: o.body_yaw_deg,
                        detection_count: o.detection_count,
                        hit: o.hit,
                        center_error_m: o.center_error_m,
                        angle_error_deg: o.angle_error_deg,
                        score: o.score,
                    })
                    .collect(),
            };
            let json = serde_json::to_string_pretty(&file)?;
            fs::write(path, json + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(ExitCode::SUCCESS)
    }
}

/// The catalog for `master_seed`, optionally narrowed to specific ids.
fn select_scenarios(master_seed: u64, ids: Option<&[u32]>) -> Result<Vec<Scenario>> {
    let catalog = catalog_seeded(master_seed)?;
    let Some(ids) = ids else {
        return Ok(catalog);
    };
    let mut picked = Vec::with_capacity(ids.len());
    for id in ids {
        let found = catalog
            .iter()
            .find(|s| s.id == *id)
            .with_context(|| format!("no scenario {id}; ids run 1..={}", catalog.len()))?;
        picked.push(found.clone());
    }
    Ok(picked)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Detect(args) => args.run(),
        Command::Synth(args) => args.run(),
        Command::Eval(args) => args.run(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

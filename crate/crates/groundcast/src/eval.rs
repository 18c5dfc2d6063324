//! Closed-loop benchmark: render scenarios, run the detector, score the
//! detections against the renderer's ground truth.
//!
//! Scoring happens in the world frame. A detection lives in the 2D frame
//! of the estimated plane over the camera-frame cloud, so it is lifted to
//! 3D, carried to the world through the true camera pose, and compared to
//! the planted body pose there. A scenario counts as a hit when some
//! detection lands within [`CENTER_TOLERANCE_M`] of the true center and
//! within twice the sweep step of the true heading (folded mod 180: the
//! matcher cannot tell a mask from itself rotated half a turn when the
//! score ties, and heading error near 180 means the axis was right).

use thiserror::Error;

use crate::geometry::from_plane_coords;
use crate::pipeline::{detect_in_cloud, DetectOptions, PipelineError};
use crate::synth::{body_template, make_scene_labeled, GroundTruth, Scenario, SynthError};

/// Maximum world-frame center error for a detection to count, meters.
pub const CENTER_TOLERANCE_M: f64 = 0.15;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("scenario {scenario_id}")]
    Pipeline {
        scenario_id: u32,
        source: PipelineError,
    },
}

/// Distance between two headings on the 180-degree circle (axis
/// directions), degrees in [0, 90].
#[must_use]
pub fn axis_error_deg(a_deg: f64, b_deg: f64) -> f64 {
    let r = (a_deg - b_deg).rem_euclid(180.0);
    r.min(180.0 - r)
}

/// One scenario's scoring.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub scenario_id: u32,
    pub pitch_deg: f64,
    pub body_yaw_deg: f64,
    pub detection_count: usize,
    pub hit: bool,
    /// World-frame center error of the scored detection, meters.
    pub center_error_m: Option<f64>,
    /// Folded heading error of the scored detection, degrees.
    pub angle_error_deg: Option<f64>,
    pub score: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub outcomes: Vec<ScenarioOutcome>,
    pub hits: usize,
    pub total: usize,
}

impl EvalReport {
    #[must_use]
    pub fn summary(&self) -> String {
        format!("{} out of {} scenarios detected", self.hits, self.total)
    }
}

/// World-frame errors of one detection against the truth.
fn detection_errors(
    detection: &crate::matcher::Detection,
    grid: &crate::gridmap::GridMap,
    truth: &GroundTruth,
) -> (f64, f64) {
    let lifted = from_plane_coords(detection.center, grid.plane(), grid.basis());
    let world = truth.camera.to_world(lifted);
    let center_error = (world.x - truth.body_center.u).hypot(world.y - truth.body_center.v);

    let (sin, cos) = detection.angle_deg.to_radians().sin_cos();
    let axis_cloud = cos * grid.basis().u_axis + sin * grid.basis().v_axis;
    let axis_world = truth.camera.dir_to_world(axis_cloud);
    let heading = axis_world.y.atan2(axis_world.x).to_degrees();
    let angle_error = axis_error_deg(heading, truth.body_yaw_deg);
    (center_error, angle_error)
}

/// Renders every scenario, detects with `options`, and scores. With
/// `noise_override` set, every scenario runs at that noise sigma instead
/// of its own.
pub fn run_eval(
    scenarios: &[Scenario],
    noise_override: Option<f64>,
    options: &DetectOptions,
) -> Result<EvalReport, EvalError> {
    let template = body_template(options.cell_size)?;
    let angle_tolerance = 2.0 * options.matching.angle_step_deg;

    let mut outcomes = Vec::with_capacity(scenarios.len());
    let mut hits = 0usize;
    for scenario in scenarios {
        let scenario = match noise_override {
            Some(sigma) => Scenario {
                noise_sigma: sigma,
                ..scenario.clone()
            },
            None => scenario.clone(),
        };
        let (cloud, truth) = make_scene_labeled(&scenario)?;
        let outcome =
            detect_in_cloud(&cloud, &template, options).map_err(|source| EvalError::Pipeline {
                scenario_id: scenario.id,
                source,
            })?;

        // Score the best in-tolerance detection; fall back to the top
        // detection's numbers for diagnosing misses.
        let mut best_hit: Option<(f64, f64, f64)> = None;
        let mut top: Option<(f64, f64, f64)> = None;
        if let Some(grid) = outcome.grid.as_ref() {
            for d in &outcome.detections {
                let (center_error, angle_error) = detection_errors(d, grid, &truth);
                if top.is_none() {
                    top = Some((center_error, angle_error, d.score));
                }
                let within =
                    center_error <= CENTER_TOLERANCE_M && angle_error <= angle_tolerance;
                if within && best_hit.is_none_or(|(c, _, _)| center_error < c) {
                    best_hit = Some((center_error, angle_error, d.score));
                }
            }
        }
        let hit = best_hit.is_some();
        hits += usize::from(hit);
        let scored = best_hit.or(top);
        outcomes.push(ScenarioOutcome {
            scenario_id: scenario.id,
            pitch_deg: scenario.pitch_deg,
            body_yaw_deg: scenario.body_yaw_deg,
            detection_count: outcome.detections.len(),
            hit,
            center_error_m: scored.map(|(c, _, _)| c),
            angle_error_deg: scored.map(|(_, a, _)| a),
            score: scored.map(|(_, _, s)| s),
        });
    }
    Ok(EvalReport {
        outcomes,
        hits,
        total: scenarios.len(),
    })
}

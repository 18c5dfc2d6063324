//! End-to-end detection: cloud in, plane out, grid out, detections out.
//!
//! [`detect_in_cloud`] wires the stages together in memory;
//! [`run_detect`] wraps it in file I/O and a serializable report. Errors
//! carry the stage that failed, so a caller (or a shell) can tell a broken
//! input file from a degenerate cloud.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{from_plane_coords, plane_basis, Point2};
use crate::gridmap::{project_cloud, rasterize, GridMap, Rect2};
use crate::io::{read_pcd, read_pgm_mask, write_pgm_grid};
use crate::matcher::{detect_casualty, Detection, MatchConfig, Template};
use crate::ransac::{estimate_ground_plane, PlaneFit, PointCloud, RansacConfig};

/// A stage label plus the error that stopped it. Display names only the
/// stage; the cause stays in `source()` so chain printers show it once.
#[derive(Debug, Error)]
#[error("{stage} failed")]
pub struct PipelineError {
    pub stage: &'static str,
    #[source]
    pub source: Box<dyn std::error::Error + Send + Sync + 'static>,
}

impl PipelineError {
    fn at<E>(stage: &'static str) -> impl FnOnce(E) -> Self
    where
        E: std::error::Error + Send + Sync + 'static,
    {
        move |source| Self {
            stage,
            source: Box::new(source),
        }
    }
}

/// Knobs for the in-memory pipeline. Defaults reproduce the standard
/// benchmark configuration.
#[derive(Debug, Clone)]
pub struct DetectOptions {
    pub ransac: RansacConfig,
    /// Occupancy-grid cell size, meters. Must equal the template's.
    pub cell_size: f64,
    /// Explicit grid bounds; `None` sizes the grid from the projected
    /// points, padded so every template rotation fits.
    pub bounds: Option<Rect2>,
    pub matching: MatchConfig,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            ransac: RansacConfig::default(),
            cell_size: 0.05,
            bounds: None,
            matching: MatchConfig::default(),
        }
    }
}

/// Everything the pipeline produced. `grid` is `None` exactly when the
/// plane swallowed every point, which is a clean "nothing above the
/// floor" result, not an error.
#[derive(Debug)]
pub struct DetectionOutcome {
    pub fit: PlaneFit,
    pub grid: Option<GridMap>,
    pub detections: Vec<Detection>,
}

/// Grid bounds that cover the points plus enough margin that every
/// rotation of the template fits: each side is at least the template
/// diagonal (in cells, rounded up) plus two.
fn padded_bounds(points: &[Point2], cell_size: f64, template: &Template) -> Rect2 {
    let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        min.u = min.u.min(p.u);
        min.v = min.v.min(p.v);
        max.u = max.u.max(p.u);
        max.v = max.v.max(p.v);
    }
    min.u -= cell_size;
    min.v -= cell_size;
    max.u += cell_size;
    max.v += cell_size;

    let diag = (template.width() as f64).hypot(template.height() as f64);
    let need = (diag.ceil() + 2.0) * cell_size;
    for (lo, hi) in [(&mut min.u, &mut max.u), (&mut min.v, &mut max.v)] {
        let extent = *hi - *lo;
        if extent < need {
            let pad = (need - extent) / 2.0;
            *lo -= pad;
            *hi += pad;
        }
    }
    Rect2::new(min, max)
}

/// Runs plane estimation, floor removal, projection, rasterization, and
/// template matching over an in-memory cloud.
pub fn detect_in_cloud(
    cloud: &PointCloud,
    template: &Template,
    options: &DetectOptions,
) -> Result<DetectionOutcome, PipelineError> {
    let fit =
        estimate_ground_plane(cloud, &options.ransac).map_err(PipelineError::at("estimate-plane"))?;
    if fit.outlier_indices.is_empty() {
        return Ok(DetectionOutcome {
            fit,
            grid: None,
            detections: Vec::new(),
        });
    }

    let basis = plane_basis(&fit.plane);
    let points = project_cloud(cloud, &fit.outlier_indices, &fit.plane, &basis);
    let bounds = options
        .bounds
        .unwrap_or_else(|| padded_bounds(&points, options.cell_size, template));
    let grid = rasterize(&points, options.cell_size, Some(bounds), &fit.plane, &basis)
        .map_err(PipelineError::at("rasterize"))?;
    let detections =
        detect_casualty(&grid, template, &options.matching).map_err(PipelineError::at("match"))?;
    Ok(DetectionOutcome {
        fit,
        grid: Some(grid),
        detections,
    })
}

/// File-level detection job: where to read, where to write, how to run.
#[derive(Debug)]
pub struct DetectJob<'a> {
    pub input: &'a Path,
    pub template: &'a Path,
    /// Grid PGM destination; skipped when `None` or when no grid was
    /// built.
    pub grid_out: Option<&'a Path>,
    /// Report JSON destination; the report is also returned.
    pub report_out: Option<&'a Path>,
    pub options: DetectOptions,
    /// Include wall-clock timings in the report. Off, the report depends
    /// only on the input bytes and options, so reruns are byte-identical.
    pub with_timing: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaneReport {
    pub normal: [f64; 3],
    pub anchor: [f64; 3],
    pub inlier_count: usize,
    pub outlier_count: usize,
    pub iterations_run: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridReport {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    /// Plane-frame coordinates of the min corner.
    pub origin: [f64; 2],
    pub occupied_cells: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionRecord {
    /// Window center in the plane frame, meters.
    pub center_plane: [f64; 2],
    /// The same center lifted back into the cloud frame.
    pub center_cloud: [f64; 3],
    pub angle_deg: f64,
    pub score: f64,
    /// Template half extents at that angle, meters.
    pub half_extents: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingReport {
    pub read_input_ms: f64,
    pub load_template_ms: f64,
    pub detect_ms: f64,
    pub write_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionReport {
    pub input: String,
    pub template: String,
    pub point_count: usize,
    /// Input rows discarded for non-finite coordinates.
    pub dropped_rows: usize,
    pub plane: PlaneReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridReport>,
    pub detections: Vec<DetectionRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingReport>,
}

fn ms(from: Instant) -> f64 {
    from.elapsed().as_secs_f64() * 1e3
}

/// Reads the cloud and template, detects, writes the requested outputs,
/// and returns the report. Stage labels on errors: `read-input`,
/// `load-template`, `estimate-plane`, `rasterize`, `match`, `write-grid`,
/// `write-report`.
pub fn run_detect(job: &DetectJob) -> Result<DetectionReport, PipelineError> {
    let started = Instant::now();

    let t = Instant::now();
    let loaded = read_pcd(job.input).map_err(PipelineError::at("read-input"))?;
    let read_input_ms = ms(t);

    let t = Instant::now();
    let (width, height, mask) =
        read_pgm_mask(job.template).map_err(PipelineError::at("load-template"))?;
    let template = Template::new(job.options.cell_size, width, height, mask)
        .map_err(PipelineError::at("load-template"))?;
    let load_template_ms = ms(t);

    let t = Instant::now();
    let outcome = detect_in_cloud(&loaded.cloud, &template, &job.options)?;
    let detect_ms = ms(t);

    let t = Instant::now();
    if let (Some(path), Some(grid)) = (job.grid_out, outcome.grid.as_ref()) {
        write_pgm_grid(path, grid).map_err(PipelineError::at("write-grid"))?;
    }

    let detections = outcome
        .detections
        .iter()
        .map(|d| {
            let center_cloud = match outcome.grid.as_ref() {
                Some(g) => {
                    let p = from_plane_coords(d.center, g.plane(), g.basis());
                    [p.x, p.y, p.z]
                }
                None => unreachable!("detections imply a grid"),
            };
            DetectionRecord {
                center_plane: [d.center.u, d.center.v],
                center_cloud,
                angle_deg: d.angle_deg,
                score: d.score,
                half_extents: [d.bbox.half_extents.0, d.bbox.half_extents.1],
            }
        })
        .collect();

    let normal = outcome.fit.plane.normal();
    let anchor = outcome.fit.plane.anchor();
    let mut report = DetectionReport {
        input: job.input.display().to_string(),
        template: job.template.display().to_string(),
        point_count: loaded.cloud.len(),
        dropped_rows: loaded.dropped_rows,
        plane: PlaneReport {
            normal: [normal.x, normal.y, normal.z],
            anchor: [anchor.x, anchor.y, anchor.z],
            inlier_count: outcome.fit.inlier_indices.len(),
            outlier_count: outcome.fit.outlier_indices.len(),
            iterations_run: outcome.fit.iterations_run,
        },
        grid: outcome.grid.as_ref().map(|g| GridReport {
            width: g.width(),
            height: g.height(),
            cell_size: g.cell_size(),
            origin: [g.origin().u, g.origin().v],
            occupied_cells: g.occupied_count(),
        }),
        detections,
        timing: None,
    };

    // Timing is finalized before serialization; the report write is the
    // one cost it cannot include.
    if job.with_timing {
        report.timing = Some(TimingReport {
            read_input_ms,
            load_template_ms,
            detect_ms,
            write_ms: ms(t),
            total_ms: ms(started),
        });
    }
    if let Some(path) = job.report_out {
        let json =
            serde_json::to_string_pretty(&report).expect("report serialization cannot fail");
        fs::write(path, json + "\n").map_err(PipelineError::at("write-report"))?;
    }
    Ok(report)
}

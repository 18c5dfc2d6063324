//! Seeded RANSAC ground-plane estimation.
//!
//! Three-point samples, strict `distance < t` inlier counting, argmax over
//! candidate planes with first-encountered tie-breaking, and an early stop
//! once the best candidate explains a configured fraction of the cloud.
//! Every draw comes from a ChaCha8 stream keyed by the config seed, so a
//! given (cloud, config) pair always produces bit-identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{distance_to_plane, plane_from_three_points, Point3, PlaneModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RansacError {
    #[error("need at least 3 points to fit a plane, got {found}")]
    TooFewPoints { found: usize },
    #[error("all sample draws were degenerate within the resample budget")]
    NoPlaneFound,
    #[error("{name} must lie in {range}, got {value}")]
    InvalidProbability {
        name: &'static str,
        range: &'static str,
        value: f64,
    },
    #[error("sample size must be at least 1")]
    InvalidSampleSize,
    #[error("invalid config: {0}")]
    InvalidConfig(&'static str),
    #[error("point {index} has a non-finite coordinate")]
    NonFinitePoint { index: usize },
}

/// An unordered set of 3D points plus a frame tag carried through reports.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    frame_label: String,
}

impl PointCloud {
    /// Builds a cloud, rejecting non-finite coordinates. NaN filtering
    /// belongs at the parse boundary; past this constructor every stage may
    /// assume finite input.
    pub fn new(points: Vec<Point3>, frame_label: impl Into<String>) -> Result<Self, RansacError> {
        for (index, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(RansacError::NonFinitePoint { index });
            }
        }
        Ok(Self {
            points,
            frame_label: frame_label.into(),
        })
    }

    #[must_use]
    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[must_use]
    pub fn frame_label(&self) -> &str {
        &self.frame_label
    }
}

/// Tuning for the plane search. The defaults suit indoor depth-camera
/// clouds with a dominant floor.
#[derive(Debug, Clone, PartialEq)]
pub struct RansacConfig {
    /// Inlier distance threshold in meters. A point counts as an inlier
    /// when its plane distance is strictly below this.
    pub inlier_threshold: f64,
    /// Desired probability that at least one sampled triple is all inliers.
    pub confidence: f64,
    /// Assumed inlier fraction of the cloud, used to size the iteration
    /// budget.
    pub inlier_ratio: f64,
    /// Hard cap on iterations; also the total budget for degenerate-sample
    /// redraws.
    pub max_iterations: usize,
    /// Stop as soon as the best inlier count reaches this fraction of the
    /// cloud.
    pub early_stop_fraction: f64,
    /// PRNG seed. Equal seeds give bit-identical fits.
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            inlier_threshold: 0.02,
            confidence: 0.99,
            inlier_ratio: 0.5,
            max_iterations: 1000,
            early_stop_fraction: 0.9,
            seed: 42,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<(), RansacError> {
        if !(self.inlier_threshold.is_finite() && self.inlier_threshold > 0.0) {
            return Err(RansacError::InvalidConfig(
                "inlier_threshold must be positive and finite",
            ));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(RansacError::InvalidProbability {
                name: "confidence",
                range: "(0, 1)",
                value: self.confidence,
            });
        }
        if !(self.inlier_ratio > 0.0 && self.inlier_ratio <= 1.0) {
            return Err(RansacError::InvalidProbability {
                name: "inlier_ratio",
                range: "(0, 1]",
                value: self.inlier_ratio,
            });
        }
        if self.max_iterations == 0 {
            return Err(RansacError::InvalidConfig(
                "max_iterations must be at least 1",
            ));
        }
        if !(self.early_stop_fraction > 0.0 && self.early_stop_fraction <= 1.0) {
            return Err(RansacError::InvalidConfig(
                "early_stop_fraction must lie in (0, 1]",
            ));
        }
        Ok(())
    }
}

/// A fitted plane plus the index partition it induces on the input cloud.
///
/// The index vectors are sorted, disjoint, and together cover every input
/// index exactly once. Inliers satisfy `distance < threshold`; outliers
/// `distance >= threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneFit {
    pub plane: PlaneModel,
    pub inlier_indices: Vec<usize>,
    pub outlier_indices: Vec<usize>,
    /// Completed sampling iterations (degenerate redraws excluded).
    pub iterations_run: usize,
}

/// Iterations needed so that, with per-point inlier probability
/// `inlier_ratio`, at least one all-inlier sample of `sample_size` points
/// is drawn with probability `confidence`:
///
/// ```text
/// N = ceil( ln(1 - confidence) / ln(1 - inlier_ratio^sample_size) )
/// ```
///
/// Returns 1 when `inlier_ratio^sample_size == 1` and saturates to
/// `usize::MAX` when the denominator underflows; callers clamp against
/// their iteration cap either way.
pub fn required_iterations(
    confidence: f64,
    inlier_ratio: f64,
    sample_size: u32,
) -> Result<usize, RansacError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(RansacError::InvalidProbability {
            name: "confidence",
            range: "(0, 1)",
            value: confidence,
        });
    }
    if !(inlier_ratio > 0.0 && inlier_ratio <= 1.0) {
        return Err(RansacError::InvalidProbability {
            name: "inlier_ratio",
            range: "(0, 1]",
            value: inlier_ratio,
        });
    }
    if sample_size == 0 {
        return Err(RansacError::InvalidSampleSize);
    }
    let all_inlier = inlier_ratio.powi(sample_size as i32);
    if all_inlier == 1.0 {
        return Ok(1);
    }
    let n = ((1.0 - confidence).ln() / (1.0 - all_inlier).ln()).ceil();
    if !n.is_finite() || n >= usize::MAX as f64 {
        return Ok(usize::MAX);
    }
    Ok((n as usize).max(1))
}

/// Fits the dominant plane in the cloud.
///
/// Runs `min(max_iterations, required_iterations(confidence, inlier_ratio, 3))`
/// sampling rounds. Each round draws three distinct indices; a degenerate
/// (collinear) draw is retried without consuming the round, against a
/// shared budget of `max_iterations` redraws. The best candidate by strict
/// `< threshold` inlier count wins, earlier candidates win ties, and the
/// search stops early once the best count reaches
/// `early_stop_fraction * cloud size`. The returned partition is recomputed
/// against the winning plane.
pub fn estimate_ground_plane(
    cloud: &PointCloud,
    cfg: &RansacConfig,
) -> Result<PlaneFit, RansacError> {
    cfg.validate()?;
    let n = cloud.len();
    if n < 3 {
        return Err(RansacError::TooFewPoints { found: n });
    }

    let rounds = required_iterations(cfg.confidence, cfg.inlier_ratio, 3)?.min(cfg.max_iterations);
    let early_stop_count = cfg.early_stop_fraction * n as f64;
    let points = cloud.points();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut redraws_left = cfg.max_iterations;
    let mut best: Option<(usize, PlaneModel)> = None;
    let mut iterations_run = 0usize;

    'rounds: for _ in 0..rounds {
        let plane = loop {
            let idx = rand::seq::index::sample(&mut rng, n, 3);
            match plane_from_three_points(
                points[idx.index(0)],
                points[idx.index(1)],
                points[idx.index(2)],
            ) {
                Ok(plane) => break plane,
                Err(_) => {
                    if redraws_left == 0 {
                        break 'rounds;
                    }
                    redraws_left -= 1;
                }
            }
        };
        iterations_run += 1;

        let count = points
            .iter()
            .filter(|p| distance_to_plane(**p, &plane) < cfg.inlier_threshold)
            .count();
        let improved = best.as_ref().is_none_or(|(c, _)| count > *c);
        if improved {
            best = Some((count, plane));
            if count as f64 >= early_stop_count {
                break;
            }
        }
    }

    let (_, plane) = best.ok_or(RansacError::NoPlaneFound)?;
    let (inlier_indices, outlier_indices) = partition_by_plane(cloud, &plane, cfg.inlier_threshold);
    Ok(PlaneFit {
        plane,
        inlier_indices,
        outlier_indices,
        iterations_run,
    })
}

/// Splits cloud indices by plane distance: strictly below the threshold is
/// an inlier, everything else (including exactly the threshold) is an
/// outlier. Both vectors come back sorted.
#[must_use]
pub fn partition_by_plane(
    cloud: &PointCloud,
    plane: &PlaneModel,
    threshold: f64,
) -> (Vec<usize>, Vec<usize>) {
    let mut inliers = Vec::new();
    let mut outliers = Vec::new();
    for (i, p) in cloud.points().iter().enumerate() {
        if distance_to_plane(*p, plane) < threshold {
            inliers.push(i);
        } else {
            outliers.push(i);
        }
    }
    (inliers, outliers)
}

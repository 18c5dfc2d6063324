//! Sliding, rotating binary template matching over occupancy grids.
//!
//! The match score is the Jaccard overlap between the template mask and the
//! grid window under it: |mask AND window| / |mask OR window|. Rotation
//! decomposes into exact quarter-turn index remaps plus one
//! nearest-neighbor rotation by the residue angle in [0, 90), so rotating
//! by theta + 90 equals a quarter turn of the rotation by theta bit for
//! bit. That exactness is what the right-angle equivariance tests lean on.

use thiserror::Error;

use crate::geometry::Point2;
use crate::gridmap::GridMap;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("template has no occupied cells")]
    EmptyTemplate,
    #[error("template cell size must be positive and finite, got {cell_size}")]
    InvalidCellSize { cell_size: f64 },
    #[error("mask length {len} does not match {width}x{height}")]
    MaskShape {
        len: usize,
        width: usize,
        height: usize,
    },
    #[error("template cell size {template} does not match grid cell size {grid}")]
    CellSizeMismatch { template: f64, grid: f64 },
    #[error("window at ({col}, {row}) with size {width}x{height} exceeds the {grid_width}x{grid_height} grid")]
    OutOfBounds {
        col: usize,
        row: usize,
        width: usize,
        height: usize,
        grid_width: usize,
        grid_height: usize,
    },
    #[error("no rotation of the {width}x{height} template fits the {grid_width}x{grid_height} grid")]
    TemplateLargerThanGrid {
        width: usize,
        height: usize,
        grid_width: usize,
        grid_height: usize,
    },
    #[error("invalid match config: {0}")]
    InvalidConfig(&'static str),
}

/// A binary mask with a physical cell size. At least one cell is occupied.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    cell_size: f64,
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl Template {
    pub fn new(
        cell_size: f64,
        width: usize,
        height: usize,
        mask: Vec<bool>,
    ) -> Result<Self, MatchError> {
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(MatchError::InvalidCellSize { cell_size });
        }
        if width == 0 || height == 0 || mask.len() != width * height {
            return Err(MatchError::MaskShape {
                len: mask.len(),
                width,
                height,
            });
        }
        if !mask.iter().any(|c| *c) {
            return Err(MatchError::EmptyTemplate);
        }
        Ok(Self {
            cell_size,
            width,
            height,
            mask,
        })
    }

    #[must_use]
    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    #[must_use]
    pub fn width(&self) -> usize {
        self.width
    }

    #[must_use]
    pub fn height(&self) -> usize {
        self.height
    }

    #[must_use]
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[must_use]
    pub fn cell(&self, col: usize, row: usize) -> bool {
        self.mask[row * self.width + col]
    }

    #[must_use]
    pub fn occupied_count(&self) -> usize {
        self.mask.iter().filter(|c| **c).count()
    }
}

/// Sweep and acceptance settings for detection.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchConfig {
    /// Rotation sweep step in degrees; angles are 0, step, 2 step, ... below
    /// 360. Must lie in (0, 90]. Steps dividing 360 evenly give a uniform
    /// sweep.
    pub angle_step_deg: f64,
    /// Minimum Jaccard score a candidate must reach, in (0, 1].
    pub score_threshold: f64,
    /// Maximum number of detections emitted.
    pub max_detections: usize,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            angle_step_deg: 5.0,
            score_threshold: 0.5,
            max_detections: 4,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<(), MatchError> {
        if !(self.angle_step_deg > 0.0 && self.angle_step_deg <= 90.0) {
            return Err(MatchError::InvalidConfig(
                "angle_step_deg must lie in (0, 90]",
            ));
        }
        if !(self.score_threshold > 0.0 && self.score_threshold <= 1.0) {
            return Err(MatchError::InvalidConfig(
                "score_threshold must lie in (0, 1]",
            ));
        }
        Ok(())
    }
}

/// An oriented rectangle in plane-frame meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedRect {
    pub center: Point2,
    /// Half extents along the rect's own (u, v) axes before rotation.
    pub half_extents: (f64, f64),
    pub angle_deg: f64,
}

impl RotatedRect {
    /// Point-in-rect test, boundary inclusive.
    #[must_use]
    pub fn contains(&self, p: Point2) -> bool {
        let (sin, cos) = self.angle_deg.to_radians().sin_cos();
        let du = p.u - self.center.u;
        let dv = p.v - self.center.v;
        // Rotate the offset into the rect frame (by -angle).
        let lu = cos * du + sin * dv;
        let lv = -sin * du + cos * dv;
        lu.abs() <= self.half_extents.0 && lv.abs() <= self.half_extents.1
    }
}

/// One accepted match.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// Center of the placed template window, plane-frame meters.
    pub center: Point2,
    /// Sweep angle of the match, degrees in [0, 360).
    pub angle_deg: f64,
    /// Jaccard score in [0, 1].
    pub score: f64,
    /// Footprint of the unrotated template, oriented at `angle_deg`.
    pub bbox: RotatedRect,
}

/// Rotates a template counterclockwise about its center onto a minimally
/// enlarged canvas, nearest-neighbor sampled.
///
/// Angle 0 is the identity; exact multiples of 90 degrees are pure index
/// remaps (90 turns a 3x7 bar into a 7x3 bar). Any angle decomposes as
/// quarter turns plus a residue rotation, so
/// `rotate_template(t, a + 90) == quarter_turn(rotate_template(t, a))`
/// exactly.
#[must_use]
pub fn rotate_template(tpl: &Template, angle_deg: f64) -> Template {
    let a = angle_deg.rem_euclid(360.0);
    let quarters = ((a / 90.0).floor() as u32) % 4;
    let residue = a - 90.0 * f64::from(quarters);
    let base = if residue == 0.0 {
        tpl.clone()
    } else {
        rotate_residue(tpl, residue)
    };
    (0..quarters).fold(base, |t, _| quarter_turn(&t))
}

/// Exact counterclockwise 90-degree turn: cell (col, row) moves to
/// (height - 1 - row, col) on a swapped canvas.
fn quarter_turn(tpl: &Template) -> Template {
    let (w, h) = (tpl.width, tpl.height);
    let mut mask = vec![false; w * h];
    for row in 0..h {
        for col in 0..w {
            if tpl.mask[row * w + col] {
                mask[col * h + (h - 1 - row)] = true;
            }
        }
    }
    Template {
        cell_size: tpl.cell_size,
        width: h,
        height: w,
        mask,
    }
}

/// Nearest-neighbor rotation by a residue angle in (0, 90): each output
/// cell center is mapped back into the source and takes that cell's value.
fn rotate_residue(tpl: &Template, residue_deg: f64) -> Template {
    let (sin, cos) = residue_deg.to_radians().sin_cos();
    let (w, h) = (tpl.width as f64, tpl.height as f64);
    let out_w = ((w * cos + h * sin - 1e-9).ceil().max(1.0)) as usize;
    let out_h = ((w * sin + h * cos - 1e-9).ceil().max(1.0)) as usize;
    let (src_cu, src_cv) = (w / 2.0, h / 2.0);
    let (dst_cu, dst_cv) = (out_w as f64 / 2.0, out_h as f64 / 2.0);

    let mut mask = vec![false; out_w * out_h];
    for row in 0..out_h {
        for col in 0..out_w {
            let du = (col as f64 + 0.5) - dst_cu;
            let dv = (row as f64 + 0.5) - dst_cv;
            let su = cos * du + sin * dv + src_cu;
            let sv = -sin * du + cos * dv + src_cv;
            if su >= 0.0 && sv >= 0.0 {
                let (si, sj) = (su.floor() as usize, sv.floor() as usize);
                if si < tpl.width && sj < tpl.height && tpl.mask[sj * tpl.width + si] {
                    mask[row * out_w + col] = true;
                }
            }
        }
    }

    // Inverse sampling can miss a sub-cell template entirely; splat source
    // centers forward so the occupied invariant survives.
    if !mask.iter().any(|c| *c) {
        for row in 0..tpl.height {
            for col in 0..tpl.width {
                if !tpl.mask[row * tpl.width + col] {
                    continue;
                }
                let du = (col as f64 + 0.5) - src_cu;
                let dv = (row as f64 + 0.5) - src_cv;
                let ou = cos * du - sin * dv + dst_cu;
                let ov = sin * du + cos * dv + dst_cv;
                let oi = (ou.floor().max(0.0) as usize).min(out_w - 1);
                let oj = (ov.floor().max(0.0) as usize).min(out_h - 1);
                mask[oj * out_w + oi] = true;
            }
        }
    }

    Template {
        cell_size: tpl.cell_size,
        width: out_w,
        height: out_h,
        mask,
    }
}

fn check_cell_sizes(grid: &GridMap, tpl: &Template) -> Result<(), MatchError> {
    let (g, t) = (grid.cell_size(), tpl.cell_size());
    if (g - t).abs() > g.max(t) * 1e-12 {
        return Err(MatchError::CellSizeMismatch {
            template: t,
            grid: g,
        });
    }
    Ok(())
}

/// Jaccard overlap between the template mask and the grid window whose
/// top-left cell is (col, row): |mask AND window| / |mask OR window|.
/// 1.0 iff the window equals the mask exactly; 0.0 when they share nothing.
pub fn match_score(
    grid: &GridMap,
    tpl: &Template,
    col: usize,
    row: usize,
) -> Result<f64, MatchError> {
    check_cell_sizes(grid, tpl)?;
    if col + tpl.width > grid.width() || row + tpl.height > grid.height() {
        return Err(MatchError::OutOfBounds {
            col,
            row,
            width: tpl.width,
            height: tpl.height,
            grid_width: grid.width(),
            grid_height: grid.height(),
        });
    }
    Ok(window_score(grid, tpl, col, row))
}

fn window_score(grid: &GridMap, tpl: &Template, col: usize, row: usize) -> f64 {
    let mut intersection = 0usize;
    let mut union = 0usize;
    let cells = grid.cells();
    for j in 0..tpl.height {
        let grid_row = (row + j) * grid.width() + col;
        let mask_row = j * tpl.width;
        for i in 0..tpl.width {
            let m = tpl.mask[mask_row + i];
            let g = cells[grid_row + i];
            intersection += usize::from(m && g);
            union += usize::from(m || g);
        }
    }
    // The mask has at least one occupied cell, so the union is never zero.
    intersection as f64 / union as f64
}

struct Candidate {
    score: f64,
    angle_index: usize,
    row: usize,
    col: usize,
    canvas_w: usize,
    canvas_h: usize,
}

/// Full sweep: every rotation on the angle lattice slid over every offset
/// where its canvas fits, thresholded, then greedy non-maximum suppression
/// in descending score order (ties: smaller angle, then row-major offset).
/// A candidate is suppressed when its center lies in an accepted bbox or an
/// accepted center lies in its bbox. Returns at most
/// `max_detections` detections, best first.
///
/// Rotations whose canvas exceeds the grid are skipped;
/// [`MatchError::TemplateLargerThanGrid`] fires only when no sweep angle
/// fits at all.
pub fn detect_casualty(
    grid: &GridMap,
    tpl: &Template,
    cfg: &MatchConfig,
) -> Result<Vec<Detection>, MatchError> {
    cfg.validate()?;
    check_cell_sizes(grid, tpl)?;

    let mut angles = Vec::new();
    let mut k = 0u32;
    loop {
        let angle = f64::from(k) * cfg.angle_step_deg;
        if angle >= 360.0 {
            break;
        }
        angles.push(angle);
        k += 1;
    }

    let mut candidates: Vec<Candidate> = Vec::new();
    let mut any_fit = false;
    for (angle_index, &angle) in angles.iter().enumerate() {
        let rot = rotate_template(tpl, angle);
        if rot.width() > grid.width() || rot.height() > grid.height() {
            continue;
        }
        any_fit = true;
        for row in 0..=grid.height() - rot.height() {
            for col in 0..=grid.width() - rot.width() {
                let score = window_score(grid, &rot, col, row);
                if score >= cfg.score_threshold {
                    candidates.push(Candidate {
                        score,
                        angle_index,
                        row,
                        col,
                        canvas_w: rot.width(),
                        canvas_h: rot.height(),
                    });
                }
            }
        }
    }
    if !any_fit {
        return Err(MatchError::TemplateLargerThanGrid {
            width: tpl.width,
            height: tpl.height,
            grid_width: grid.width(),
            grid_height: grid.height(),
        });
    }

    candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.angle_index.cmp(&b.angle_index))
            .then_with(|| a.row.cmp(&b.row))
            .then_with(|| a.col.cmp(&b.col))
    });

    let cell = grid.cell_size();
    let half_extents = (
        tpl.width as f64 * cell / 2.0,
        tpl.height as f64 * cell / 2.0,
    );
    let mut accepted: Vec<Detection> = Vec::new();
    for c in candidates {
        if accepted.len() == cfg.max_detections {
            break;
        }
        let center = grid.point_at(
            c.col as f64 + c.canvas_w as f64 / 2.0,
            c.row as f64 + c.canvas_h as f64 / 2.0,
        );
        let bbox = RotatedRect {
            center,
            half_extents,
            angle_deg: angles[c.angle_index],
        };
        let suppressed = accepted
            .iter()
            .any(|d| d.bbox.contains(center) || bbox.contains(d.center));
        if !suppressed {
            accepted.push(Detection {
                center,
                angle_deg: angles[c.angle_index],
                score: c.score,
                bbox,
            });
        }
    }
    Ok(accepted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{plane_basis, PlaneModel};

    fn bar_3x7() -> Template {
        Template::new(1.0, 3, 7, vec![true; 21]).unwrap()
    }

    /// An empty grid in the floor frame with the given dims.
    fn blank_grid(cell: f64, width: usize, height: usize) -> GridMap {
        let plane = PlaneModel::floor();
        let basis = plane_basis(&plane);
        GridMap::new(
            cell,
            Point2::new(0.0, 0.0),
            width,
            height,
            vec![false; width * height],
            plane,
            basis,
        )
        .unwrap()
    }

    /// Stamps a rotated template into the grid at the given window offset.
    fn plant(grid: &mut GridMap, tpl: &Template, angle: f64, col: usize, row: usize) {
        let rot = rotate_template(tpl, angle);
        let w = grid.width();
        let mut cells = grid.cells().to_vec();
        for j in 0..rot.height() {
            for i in 0..rot.width() {
                if rot.cell(i, j) {
                    cells[(row + j) * w + (col + i)] = true;
                }
            }
        }
        *grid = GridMap::new(
            grid.cell_size(),
            grid.origin(),
            grid.width(),
            grid.height(),
            cells,
            *grid.plane(),
            *grid.basis(),
        )
        .unwrap();
    }

    #[test]
    fn empty_template_is_rejected() {
        assert_eq!(
            Template::new(1.0, 2, 2, vec![false; 4]).unwrap_err(),
            MatchError::EmptyTemplate
        );
    }

    #[test]
    fn rotation_by_zero_is_identity() {
        let t = bar_3x7();
        assert_eq!(rotate_template(&t, 0.0), t);
        assert_eq!(rotate_template(&t, 360.0), t);
    }

    #[test]
    fn right_angle_rotations_are_exact_remaps() {
        let t = bar_3x7();
        let r90 = rotate_template(&t, 90.0);
        assert_eq!((r90.width(), r90.height()), (7, 3));
        assert_eq!(r90.occupied_count(), 21);
        let r180 = rotate_template(&t, 180.0);
        assert_eq!((r180.width(), r180.height()), (3, 7));
        assert_eq!(r180.occupied_count(), 21);
        let r270 = rotate_template(&t, 270.0);
        assert_eq!((r270.width(), r270.height()), (7, 3));

        // L-shape to pin the direction of rotation, not just the dims.
        // Row 0 is the smallest v, so with in = {(0,0), (0,1), (1,1)} a
        // counterclockwise turn yields {(1,0), (0,0), (0,1)}.
        let l = Template::new(1.0, 2, 2, vec![true, false, true, true]).unwrap();
        let l90 = rotate_template(&l, 90.0);
        assert_eq!(l90.mask(), &[true, true, true, false]);
    }

    #[test]
    fn quarter_turn_composition_is_exact() {
        let t = bar_3x7();
        for angle in [5.0, 17.5, 45.0, 85.0] {
            let direct = rotate_template(&t, angle + 90.0);
            let composed = rotate_template(&rotate_template(&t, angle), 90.0);
            assert_eq!(direct, composed, "composition broke at {angle}");
        }
    }

    #[test]
    fn rotation_roughly_preserves_occupied_count() {
        let t = bar_3x7();
        let n = t.occupied_count() as f64;
        for angle in [30.0, 45.0, 60.0] {
            let r = rotate_template(&t, angle);
            let count = r.occupied_count() as f64;
            assert!(
                (count - n).abs() <= 0.15 * n,
                "count {count} vs {n} at {angle} deg"
            );
        }
    }

    #[test]
    fn match_score_reference_cases() {
        // Planted verbatim: score 1.
        let t = bar_3x7();
        let mut grid = blank_grid(1.0, 12, 12);
        plant(&mut grid, &t, 0.0, 4, 2);
        assert_eq!(match_score(&grid, &t, 4, 2).unwrap(), 1.0);
        // Empty window: score 0.
        let empty = blank_grid(1.0, 12, 12);
        assert_eq!(match_score(&empty, &t, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn match_score_partial_overlap() {
        // Mask with 10 occupied cells; window shares 6 and adds 2 strays:
        // 6 / (10 + 2) = 0.5.
        let mask_cells: Vec<(usize, usize)> =
            vec![(0, 0), (1, 0), (2, 0), (3, 0), (0, 1), (1, 1), (2, 1), (3, 1), (0, 2), (1, 2)];
        let mut mask = vec![false; 5 * 3];
        for (c, r) in &mask_cells {
            mask[r * 5 + c] = true;
        }
        let tpl = Template::new(1.0, 5, 3, mask).unwrap();

        let mut grid = blank_grid(1.0, 5, 3);
        let mut cells = vec![false; 15];
        for (c, r) in &mask_cells[..6] {
            cells[r * 5 + c] = true; // 6 shared
        }
        cells[2 * 5 + 3] = true; // stray outside the mask
        cells[2 * 5 + 4] = true; // stray outside the mask
        grid = GridMap::new(1.0, Point2::new(0.0, 0.0), 5, 3, cells, *grid.plane(), *grid.basis())
            .unwrap();
        assert_eq!(match_score(&grid, &tpl, 0, 0).unwrap(), 0.5);
    }

    #[test]
    fn match_score_out_of_bounds_and_cell_size_mismatch() {
        let t = bar_3x7();
        let grid = blank_grid(1.0, 12, 12);
        assert!(matches!(
            match_score(&grid, &t, 10, 10),
            Err(MatchError::OutOfBounds { .. })
        ));
        let other = Template::new(0.5, 3, 7, vec![true; 21]).unwrap();
        assert!(matches!(
            match_score(&grid, &other, 0, 0),
            Err(MatchError::CellSizeMismatch { .. })
        ));
    }

    #[test]
    fn empty_grid_yields_no_detections() {
        let grid = blank_grid(1.0, 16, 16);
        let dets = detect_casualty(&grid, &bar_3x7(), &MatchConfig::default()).unwrap();
        assert!(dets.is_empty());
    }

    #[test]
    fn planted_template_is_found_at_its_pose() {
        let t = bar_3x7();
        let mut grid = blank_grid(1.0, 20, 20);
        plant(&mut grid, &t, 0.0, 5, 6);
        let cfg = MatchConfig {
            angle_step_deg: 15.0,
            ..MatchConfig::default()
        };
        let dets = detect_casualty(&grid, &t, &cfg).unwrap();
        assert_eq!(dets.len(), 1);
        let d = &dets[0];
        assert_eq!(d.score, 1.0);
        assert_eq!(d.angle_deg, 0.0);
        // Planted center: offset (5, 6) plus half the 3x7 canvas.
        assert!((d.center.u - 6.5).abs() <= 1.0);
        assert!((d.center.v - 9.5).abs() <= 1.0);
    }

    #[test]
    fn planted_right_angle_rotation_is_found_at_ninety() {
        let t = bar_3x7();
        let mut grid = blank_grid(1.0, 20, 20);
        plant(&mut grid, &t, 90.0, 5, 6);
        let cfg = MatchConfig {
            angle_step_deg: 15.0,
            ..MatchConfig::default()
        };
        let dets = detect_casualty(&grid, &t, &cfg).unwrap();
        assert!(!dets.is_empty());
        let d = &dets[0];
        // The bar is 180-degree symmetric, so 90 and 270 are the same pose.
        assert!(d.angle_deg == 90.0 || d.angle_deg == 270.0, "angle {}", d.angle_deg);
        assert!(d.score >= 0.95);
    }

    #[test]
    fn no_fitting_rotation_is_an_error() {
        let t = bar_3x7();
        let grid = blank_grid(1.0, 2, 2);
        assert!(matches!(
            detect_casualty(&grid, &t, &MatchConfig::default()),
            Err(MatchError::TemplateLargerThanGrid { .. })
        ));
    }

    #[test]
    fn angles_that_do_not_fit_are_skipped_not_fatal() {
        // 3x20 strip in a 24x6 grid: 0/180 fit, 90/45 do not.
        let strip = Template::new(1.0, 20, 3, vec![true; 60]).unwrap();
        let mut grid = blank_grid(1.0, 24, 6);
        plant(&mut grid, &strip, 0.0, 2, 1);
        let cfg = MatchConfig {
            angle_step_deg: 45.0,
            ..MatchConfig::default()
        };
        let dets = detect_casualty(&grid, &strip, &cfg).unwrap();
        assert!(!dets.is_empty());
        assert_eq!(dets[0].score, 1.0);
    }

    #[test]
    fn nms_emits_disjoint_detections_best_first() {
        let t = Template::new(1.0, 4, 6, {
            // Asymmetric blob: bar plus a notch.
            let mut m = vec![true; 24];
            m[0] = false;
            m[4] = false;
            m
        })
        .unwrap();
        let mut grid = blank_grid(1.0, 30, 30);
        plant(&mut grid, &t, 0.0, 2, 3);
        plant(&mut grid, &t, 0.0, 20, 18);
        let cfg = MatchConfig {
            angle_step_deg: 30.0,
            ..MatchConfig::default()
        };
        let dets = detect_casualty(&grid, &t, &cfg).unwrap();
        assert_eq!(dets.len(), 2);
        assert!(dets[0].score >= dets[1].score);
        for a in &dets {
            for b in &dets {
                if a.center != b.center {
                    assert!(!a.bbox.contains(b.center), "mutual center containment");
                }
            }
        }
        // Scores in [0, 1] always.
        for d in &dets {
            assert!((0.0..=1.0).contains(&d.score));
        }
    }

    #[test]
    fn max_detections_caps_the_output() {
        let t = Template::new(1.0, 3, 3, vec![true; 9]).unwrap();
        let mut grid = blank_grid(1.0, 40, 40);
        for (c, r) in [(2, 2), (12, 2), (22, 2), (32, 2), (2, 12), (12, 12)] {
            plant(&mut grid, &t, 0.0, c, r);
        }
        let cfg = MatchConfig {
            angle_step_deg: 90.0,
            score_threshold: 0.9,
            max_detections: 3,
        };
        let dets = detect_casualty(&grid, &t, &cfg).unwrap();
        assert_eq!(dets.len(), 3);
    }

    #[test]
    fn detection_is_deterministic() {
        let t = bar_3x7();
        let mut grid = blank_grid(1.0, 25, 25);
        plant(&mut grid, &t, 45.0, 3, 4);
        plant(&mut grid, &t, 120.0, 14, 12);
        let cfg = MatchConfig {
            angle_step_deg: 15.0,
            score_threshold: 0.3,
            max_detections: 4,
        };
        let a = detect_casualty(&grid, &t, &cfg).unwrap();
        let b = detect_casualty(&grid, &t, &cfg).unwrap();
        assert_eq!(a, b);
    }
}

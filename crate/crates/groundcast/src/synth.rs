//! Synthetic depth-camera scenes with exact ground truth.
//!
//! A scene is a floor plane plus one prone human body, rendered by casting
//! one ray per pixel of a pinhole depth camera and keeping hits inside the
//! sensing range. Geometry is analytic (plane, extruded rectangles, an
//! extruded disc), so true ranges carry no sampling artifacts; optional
//! Gaussian range noise comes from a per-pixel counter-mode RNG stream, so
//! any pixel's noise is independent of every other pixel and of iteration
//! order.
//!
//! Frames: the world frame has x forward along the camera's heading
//! projected to the floor, y left, z up, origin on the floor under the
//! camera. The camera frame has x right, y down, z along the optical axis.
//! Scene clouds are produced in the camera frame, like the sensor would;
//! ground truth stays in the world frame, with the camera pose alongside
//! to map between the two.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::geometry::{Point2, Point3};
use crate::gridmap::Rect2;
use crate::matcher::{MatchError, Template};
use crate::ransac::{PointCloud, RansacError};

/// Thickness of the body solid above the floor, meters.
pub const BODY_EXTRUSION_HEIGHT: f64 = 0.25;

/// Camera height above the floor used by the scenario catalog, meters.
pub const CAMERA_HEIGHT: f64 = 1.1;

/// Master seed behind [`scenario_catalog`].
pub const CATALOG_MASTER_SEED: u64 = 7;

/// Camera pitch angles the catalog sweeps, degrees below horizontal.
pub const CATALOG_PITCHES_DEG: [f64; 4] = [15.0, 25.0, 35.0, 45.0];

/// Body yaw angles the catalog sweeps, degrees. The silhouette is
/// bilaterally symmetric, so [0, 180) covers every distinct pose.
pub const CATALOG_YAWS_DEG: [f64; 4] = [0.0, 45.0, 90.0, 135.0];

/// Clearance kept between the body and every visibility limit when the
/// catalog places bodies, meters.
const PLACEMENT_SLACK: f64 = 0.1;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("silhouette scale must be finite and positive, got {scale}")]
    InvalidScale { scale: f64 },
    #[error("invalid camera model: {0}")]
    InvalidCamera(&'static str),
    #[error("invalid scenario: {0}")]
    InvalidScenario(&'static str),
    #[error("cell size must be finite and positive, got {cell_size}")]
    InvalidCellSize { cell_size: f64 },
    #[error("scenario {scenario_id}: no body surface falls inside the sensed volume")]
    BodyNotVisible { scenario_id: u32 },
    #[error("no feasible body placement at pitch {pitch_deg} deg, yaw {yaw_deg} deg")]
    NoPlacement { pitch_deg: f64, yaw_deg: f64 },
    #[error(transparent)]
    Template(#[from] MatchError),
    #[error(transparent)]
    Cloud(#[from] RansacError),
}

/// One convex piece of the body footprint, in the body frame: u along the
/// body axis (feet to head), v to the body's left, origin at the footprint
/// center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SilhouettePart {
    Rect { center: (f64, f64), half: (f64, f64) },
    Disc { center: (f64, f64), radius: f64 },
}

/// The prone-human footprint: two legs, torso, two arms laid along the
/// body, and a head disc. At scale 1 it spans 1.45 m by 0.55 m and covers
/// about 0.50 m^2; `scale` multiplies every length.
pub fn body_silhouette(scale: f64) -> Result<Vec<SilhouettePart>, SynthError> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(SynthError::InvalidScale { scale });
    }
    let rect = |cu: f64, cv: f64, hu: f64, hv: f64| SilhouettePart::Rect {
        center: (cu * scale, cv * scale),
        half: (hu * scale, hv * scale),
    };
    Ok(vec![
        rect(-0.35, 0.0875, 0.375, 0.06),
        rect(-0.35, -0.0875, 0.375, 0.06),
        rect(0.275, 0.0, 0.25, 0.175),
        rect(0.25, 0.225, 0.275, 0.05),
        rect(0.25, -0.225, 0.275, 0.05),
        SilhouettePart::Disc {
            center: (0.625 * scale, 0.0),
            radius: 0.10 * scale,
        },
    ])
}

/// Point-in-footprint test, boundary inclusive.
#[must_use]
pub fn silhouette_contains(parts: &[SilhouettePart], u: f64, v: f64) -> bool {
    parts.iter().any(|part| match *part {
        SilhouettePart::Rect { center, half } => {
            (u - center.0).abs() <= half.0 && (v - center.1).abs() <= half.1
        }
        SilhouettePart::Disc { center, radius } => {
            let (du, dv) = (u - center.0, v - center.1);
            du * du + dv * dv <= radius * radius
        }
    })
}

/// Tight axis-aligned bounds of the footprint in the body frame.
#[must_use]
pub fn silhouette_bounds(parts: &[SilhouettePart]) -> Rect2 {
    let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for part in parts {
        let ((lo_u, lo_v), (hi_u, hi_v)) = match *part {
            SilhouettePart::Rect { center, half } => (
                (center.0 - half.0, center.1 - half.1),
                (center.0 + half.0, center.1 + half.1),
            ),
            SilhouettePart::Disc { center, radius } => (
                (center.0 - radius, center.1 - radius),
                (center.0 + radius, center.1 + radius),
            ),
        };
        min.u = min.u.min(lo_u);
        min.v = min.v.min(lo_v);
        max.u = max.u.max(hi_u);
        max.v = max.v.max(hi_v);
    }
    Rect2::new(min, max)
}

fn span_cells(extent: f64, cell_size: f64) -> usize {
    ((extent / cell_size - 1e-9).ceil().max(1.0)) as usize
}

/// Rasterizes the unit-scale footprint into a matching template: the grid
/// spans the footprint bounds, a cell is occupied when its center lies
/// inside the footprint, row 0 holds the smallest v.
pub fn body_template(cell_size: f64) -> Result<Template, SynthError> {
    if !(cell_size.is_finite() && cell_size > 0.0) {
        return Err(SynthError::InvalidCellSize { cell_size });
    }
    let parts = body_silhouette(1.0)?;
    let bounds = silhouette_bounds(&parts);
    let width = span_cells(bounds.max.u - bounds.min.u, cell_size);
    let height = span_cells(bounds.max.v - bounds.min.v, cell_size);
    let mut mask = vec![false; width * height];
    for row in 0..height {
        let v = bounds.min.v + (row as f64 + 0.5) * cell_size;
        for col in 0..width {
            let u = bounds.min.u + (col as f64 + 0.5) * cell_size;
            mask[row * width + col] = silhouette_contains(&parts, u, v);
        }
    }
    Ok(Template::new(cell_size, width, height, mask)?)
}

/// Pinhole depth camera intrinsics and sensing range.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub width: usize,
    pub height: usize,
    pub hfov_deg: f64,
    pub vfov_deg: f64,
    /// Closest range the sensor reports, meters.
    pub min_range: f64,
    /// Farthest range the sensor reports, meters.
    pub max_range: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
            hfov_deg: 58.0,
            vfov_deg: 45.0,
            min_range: 0.8,
            max_range: 3.5,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.width == 0 || self.height == 0 {
            return Err(SynthError::InvalidCamera("image dimensions must be nonzero"));
        }
        let fov_ok = |f: f64| f.is_finite() && f > 0.0 && f < 180.0;
        if !(fov_ok(self.hfov_deg) && fov_ok(self.vfov_deg)) {
            return Err(SynthError::InvalidCamera(
                "fields of view must lie in (0, 180) degrees",
            ));
        }
        let ok = self.min_range.is_finite()
            && self.max_range.is_finite()
            && self.min_range > 0.0
            && self.max_range > self.min_range;
        if !ok {
            return Err(SynthError::InvalidCamera(
                "ranges must satisfy 0 < min_range < max_range",
            ));
        }
        Ok(())
    }

    /// Unit ray through the center of pixel (col, row), camera frame.
    /// Pixel (0, 0) is the top-left of the image.
    #[must_use]
    pub fn pixel_ray(&self, col: usize, row: usize) -> Vector3<f64> {
        let fx = (self.width as f64 / 2.0) / (self.hfov_deg / 2.0).to_radians().tan();
        let fy = (self.height as f64 / 2.0) / (self.vfov_deg / 2.0).to_radians().tan();
        let x = (col as f64 + 0.5 - self.width as f64 / 2.0) / fx;
        let y = (row as f64 + 0.5 - self.height as f64 / 2.0) / fy;
        Vector3::new(x, y, 1.0).normalize()
    }
}

/// Camera pose over the floor: at world (0, 0, height), heading along +x,
/// pitched down by `pitch_deg`. Maps points and directions between the
/// camera frame (x right, y down, z forward) and the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub pitch_deg: f64,
    pub height: f64,
}

impl CameraPose {
    #[must_use]
    pub fn position(&self) -> Point3 {
        Point3::new(0.0, 0.0, self.height)
    }

    /// World direction of the optical axis.
    #[must_use]
    pub fn forward(&self) -> Vector3<f64> {
        let (sin, cos) = self.pitch_deg.to_radians().sin_cos();
        Vector3::new(cos, 0.0, -sin)
    }

    /// World direction of the camera's +x (image right).
    #[must_use]
    pub fn right(&self) -> Vector3<f64> {
        Vector3::new(0.0, -1.0, 0.0)
    }

    /// World direction of the camera's +y (image down).
    #[must_use]
    pub fn down(&self) -> Vector3<f64> {
        let (sin, cos) = self.pitch_deg.to_radians().sin_cos();
        Vector3::new(-sin, 0.0, -cos)
    }

    #[must_use]
    pub fn dir_to_world(&self, d: Vector3<f64>) -> Vector3<f64> {
        d.x * self.right() + d.y * self.down() + d.z * self.forward()
    }

    #[must_use]
    pub fn dir_to_camera(&self, d: Vector3<f64>) -> Vector3<f64> {
        Vector3::new(d.dot(&self.right()), d.dot(&self.down()), d.dot(&self.forward()))
    }

    #[must_use]
    pub fn to_world(&self, cam: Point3) -> Point3 {
        Point3::from_coords(self.position().coords() + self.dir_to_world(cam.coords()))
    }

    #[must_use]
    pub fn to_camera(&self, world: Point3) -> Point3 {
        Point3::from_coords(self.dir_to_camera(world.coords() - self.position().coords()))
    }
}

/// A fully specified scene: camera pose, body pose, and noise model.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: u32,
    pub camera: CameraModel,
    /// Camera pitch below horizontal, degrees.
    pub pitch_deg: f64,
    /// Camera height above the floor, meters.
    pub camera_height: f64,
    /// Body footprint center on the floor, world (x, y) as (u, v).
    pub body_center: Point2,
    /// Body axis heading, degrees counterclockwise from world +x.
    pub body_yaw_deg: f64,
    /// Standard deviation of Gaussian range noise, meters. Zero disables
    /// noise entirely.
    pub noise_sigma: f64,
    /// Seed of the per-pixel noise streams.
    pub seed: u64,
}

impl Scenario {
    fn validate(&self) -> Result<(), SynthError> {
        self.camera.validate()?;
        if !(self.camera_height.is_finite() && self.camera_height > 0.0) {
            return Err(SynthError::InvalidScenario("camera height must be positive"));
        }
        if !(self.pitch_deg.is_finite() && self.pitch_deg.abs() < 90.0) {
            return Err(SynthError::InvalidScenario(
                "pitch must be finite and inside (-90, 90) degrees",
            ));
        }
        if !self.body_center.is_finite() || !self.body_yaw_deg.is_finite() {
            return Err(SynthError::InvalidScenario("body pose must be finite"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(SynthError::InvalidScenario("noise sigma must be >= 0"));
        }
        Ok(())
    }

    fn pose(&self) -> CameraPose {
        CameraPose {
            pitch_deg: self.pitch_deg,
            height: self.camera_height,
        }
    }
}

/// Everything the renderer knew that a detector must recover.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub scenario_id: u32,
    /// Body footprint center on the floor, world (x, y).
    pub body_center: Point2,
    /// Body axis heading, degrees counterclockwise from world +x.
    pub body_yaw_deg: f64,
    pub camera: CameraPose,
    /// Pixels whose nearest hit was the body.
    pub body_pixel_count: usize,
    /// Pixels whose nearest hit was the floor.
    pub floor_pixel_count: usize,
}

impl GroundTruth {
    /// Number of cells of a `cell_size` floor grid (anchored at the placed
    /// footprint's bounding-box corner) whose centers the body covers.
    /// The expected occupied-cell count of an ideal rasterization.
    pub fn body_mask_cells(&self, cell_size: f64) -> Result<usize, SynthError> {
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(SynthError::InvalidCellSize { cell_size });
        }
        let parts = body_silhouette(1.0)?;
        let bounds = silhouette_bounds(&parts);
        let (sin, cos) = self.body_yaw_deg.to_radians().sin_cos();
        let e_u = bounds.max.u * cos.abs() + bounds.max.v * sin.abs();
        let e_v = bounds.max.u * sin.abs() + bounds.max.v * cos.abs();
        let width = span_cells(2.0 * e_u, cell_size);
        let height = span_cells(2.0 * e_v, cell_size);
        let mut count = 0;
        for row in 0..height {
            let y = -e_v + (row as f64 + 0.5) * cell_size;
            for col in 0..width {
                let x = -e_u + (col as f64 + 0.5) * cell_size;
                // Into the body frame: rotate the offset by -yaw.
                let u = cos * x + sin * y;
                let v = -sin * x + cos * y;
                count += usize::from(silhouette_contains(&parts, u, v));
            }
        }
        Ok(count)
    }
}

/// The body as a solid: the footprint extruded from the floor up to
/// [`BODY_EXTRUSION_HEIGHT`], posed on the floor.
struct BodySolid {
    center: Point2,
    yaw_sin: f64,
    yaw_cos: f64,
    parts: Vec<SilhouettePart>,
    height: f64,
}

impl BodySolid {
    fn from_scenario(s: &Scenario) -> Result<Self, SynthError> {
        let (yaw_sin, yaw_cos) = s.body_yaw_deg.to_radians().sin_cos();
        Ok(Self {
            center: s.body_center,
            yaw_sin,
            yaw_cos,
            parts: body_silhouette(1.0)?,
            height: BODY_EXTRUSION_HEIGHT,
        })
    }

    /// Nearest positive ray parameter hitting any part, if one exists.
    /// The ray origin must be outside the solid.
    fn hit(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        // Express the ray in the body frame (rotate xy by -yaw about the
        // footprint center; z is shared).
        let ox = origin.x - self.center.u;
        let oy = origin.y - self.center.v;
        let o = Vector3::new(
            self.yaw_cos * ox + self.yaw_sin * oy,
            -self.yaw_sin * ox + self.yaw_cos * oy,
            origin.z,
        );
        let d = Vector3::new(
            self.yaw_cos * dir.x + self.yaw_sin * dir.y,
            -self.yaw_sin * dir.x + self.yaw_cos * dir.y,
            dir.z,
        );
        let mut best: Option<f64> = None;
        for part in &self.parts {
            let t = match *part {
                SilhouettePart::Rect { center, half } => ray_box(
                    &o,
                    &d,
                    (center.0 - half.0, center.1 - half.1, 0.0),
                    (center.0 + half.0, center.1 + half.1, self.height),
                ),
                SilhouettePart::Disc { center, radius } => {
                    ray_cylinder(&o, &d, center, radius, self.height)
                }
            };
            if let Some(t) = t {
                if best.is_none_or(|b| t < b) {
                    best = Some(t);
                }
            }
        }
        best
    }
}

/// Slab-method ray/box intersection; entry parameter if the ray enters the
/// box at t > 0.
fn ray_box(
    o: &Vector3<f64>,
    d: &Vector3<f64>,
    lo: (f64, f64, f64),
    hi: (f64, f64, f64),
) -> Option<f64> {
    let lo = [lo.0, lo.1, lo.2];
    let hi = [hi.0, hi.1, hi.2];
    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for axis in 0..3 {
        let (o_a, d_a) = (o[axis], d[axis]);
        if d_a.abs() < 1e-15 {
            if o_a < lo[axis] || o_a > hi[axis] {
                return None;
            }
            continue;
        }
        let a = (lo[axis] - o_a) / d_a;
        let b = (hi[axis] - o_a) / d_a;
        t_enter = t_enter.max(a.min(b));
        t_exit = t_exit.min(a.max(b));
    }
    (t_enter <= t_exit && t_enter > 0.0).then_some(t_enter)
}

/// Ray against a finite upright cylinder (side wall plus both caps);
/// nearest hit at t > 0.
fn ray_cylinder(
    o: &Vector3<f64>,
    d: &Vector3<f64>,
    center: (f64, f64),
    radius: f64,
    height: f64,
) -> Option<f64> {
    let mut best: Option<f64> = None;
    let mut consider = |t: f64| {
        if t > 0.0 && best.is_none_or(|b| t < b) {
            best = Some(t);
        }
    };

    let (fx, fy) = (o.x - center.0, o.y - center.1);
    let a = d.x * d.x + d.y * d.y;
    if a > 1e-30 {
        let b = 2.0 * (fx * d.x + fy * d.y);
        let c = fx * fx + fy * fy - radius * radius;
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let sqrt = disc.sqrt();
            for t in [(-b - sqrt) / (2.0 * a), (-b + sqrt) / (2.0 * a)] {
                let z = o.z + t * d.z;
                if z >= 0.0 && z <= height {
                    consider(t);
                }
            }
        }
    }
    if d.z.abs() > 1e-15 {
        for cap_z in [0.0, height] {
            let t = (cap_z - o.z) / d.z;
            let (px, py) = (o.x + t * d.x - center.0, o.y + t * d.y - center.1);
            if px * px + py * py <= radius * radius {
                consider(t);
            }
        }
    }
    best
}

/// Renders the scenario into a camera-frame cloud. See
/// [`make_scene_labeled`]; this discards the ground truth.
pub fn make_scene(scenario: &Scenario) -> Result<PointCloud, SynthError> {
    make_scene_labeled(scenario).map(|(cloud, _)| cloud)
}

/// Renders the scenario and reports the ground truth beside the cloud.
///
/// One ray per pixel; the nearest floor-or-body hit whose true range lies
/// in `[min_range, max_range]` yields a point, all other pixels yield
/// nothing. With `noise_sigma > 0` the reported range is the true range
/// plus Gaussian noise, clamped back into the sensing range; the hit and
/// its pixel classification always come from the true range. Noise for
/// pixel (col, row) is drawn from stream `row * width + col` of a
/// counter-mode RNG keyed by the scenario seed, so output is reproducible
/// bit for bit.
///
/// Fails with [`SynthError::BodyNotVisible`] when not a single pixel sees
/// the body.
pub fn make_scene_labeled(scenario: &Scenario) -> Result<(PointCloud, GroundTruth), SynthError> {
    scenario.validate()?;
    let cam = &scenario.camera;
    let pose = scenario.pose();
    let body = BodySolid::from_scenario(scenario)?;
    let origin = pose.position().coords();

    let mut points = Vec::new();
    let mut body_pixels = 0usize;
    let mut floor_pixels = 0usize;
    for row in 0..cam.height {
        for col in 0..cam.width {
            let dir_cam = cam.pixel_ray(col, row);
            let dir = pose.dir_to_world(dir_cam);

            let floor_t = (dir.z < -1e-15).then(|| -origin.z / dir.z);
            let body_t = body.hit(&origin, &dir);
            // The body rests on the floor, so on a shared boundary the
            // body face is the surface actually seen.
            let (range, is_body) = match (body_t, floor_t) {
                (Some(b), Some(f)) if b <= f => (b, true),
                (Some(b), None) => (b, true),
                (_, Some(f)) => (f, false),
                (None, None) => continue,
            };
            if range < cam.min_range || range > cam.max_range {
                continue;
            }

            let reported = if scenario.noise_sigma > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
                rng.set_stream((row * cam.width + col) as u64);
                let n: f64 = rng.sample(StandardNormal);
                (range + scenario.noise_sigma * n).clamp(cam.min_range, cam.max_range)
            } else {
                range
            };
            points.push(Point3::from_coords(reported * dir_cam));
            if is_body {
                body_pixels += 1;
            } else {
                floor_pixels += 1;
            }
        }
    }

    if body_pixels == 0 {
        return Err(SynthError::BodyNotVisible {
            scenario_id: scenario.id,
        });
    }
    let cloud = PointCloud::new(points, "camera")?;
    let truth = GroundTruth {
        scenario_id: scenario.id,
        body_center: scenario.body_center,
        body_yaw_deg: scenario.body_yaw_deg,
        camera: pose,
        body_pixel_count: body_pixels,
        floor_pixel_count: floor_pixels,
    };
    Ok((cloud, truth))
}

/// Forward distances (near, far) of the floor strip the camera senses:
/// clipped by the vertical field of view and by the range gate.
fn visible_ground_span(camera: &CameraModel, pitch_deg: f64, height: f64) -> Option<(f64, f64)> {
    if height >= camera.max_range {
        return None;
    }
    let half_v = camera.vfov_deg / 2.0;
    // Shallowest ray that still yields an in-range floor return.
    let theta_far = (pitch_deg - half_v)
        .to_radians()
        .max((height / camera.max_range).asin());
    let theta_near = (pitch_deg + half_v).to_radians().min(std::f64::consts::FRAC_PI_2);
    if theta_far <= 0.0 || theta_far >= theta_near {
        return None;
    }
    let g_far = height / theta_far.tan();
    let mut g_near = if theta_near >= std::f64::consts::FRAC_PI_2 {
        0.0
    } else {
        height / theta_near.tan()
    };
    if height < camera.min_range {
        g_near = g_near.max((camera.min_range * camera.min_range - height * height).sqrt());
    }
    (g_near < g_far).then_some((g_near, g_far))
}

/// Half width of the sensed floor strip at forward distance `x`.
fn strip_half_width(camera: &CameraModel, pitch_deg: f64, height: f64, x: f64) -> f64 {
    let (sin, cos) = pitch_deg.to_radians().sin_cos();
    (camera.hfov_deg / 2.0).to_radians().tan() * (x * cos + height * sin)
}

/// Picks a body center with every padded footprint corner inside the
/// sensed floor region. Jitters, in [-1, 1], shift the pick inside the
/// middle half of the feasible window; 0 centers it.
fn place_body(
    camera: &CameraModel,
    pitch_deg: f64,
    height: f64,
    half_dims: (f64, f64),
    yaw_deg: f64,
    jitter_u: f64,
    jitter_v: f64,
) -> Result<Point2, SynthError> {
    let no_placement = || SynthError::NoPlacement { pitch_deg, yaw_deg };
    let (g_near, g_far) = visible_ground_span(camera, pitch_deg, height).ok_or_else(no_placement)?;
    let (hu, hv) = half_dims;
    let (sin, cos) = yaw_deg.to_radians().sin_cos();
    let corners = [
        (hu * cos - hv * sin, hu * sin + hv * cos),
        (hu * cos + hv * sin, hu * sin - hv * cos),
        (-hu * cos + hv * sin, -hu * sin - hv * cos),
        (-hu * cos - hv * sin, -hu * sin + hv * cos),
    ];
    let fits = |u: f64, v: f64| {
        corners.iter().all(|&(cx, cy)| {
            let x = u + cx - PLACEMENT_SLACK;
            let y = (v + cy).abs() + PLACEMENT_SLACK;
            x > 0.0 && y <= strip_half_width(camera, pitch_deg, height, x)
        })
    };

    let forward_extent = hu * cos.abs() + hv * sin.abs() + PLACEMENT_SLACK;
    let u_hi = g_far - forward_extent;
    let mut u_lo = g_near + forward_extent;
    // The strip widens with distance, so centerline feasibility is
    // monotone in u: walk u_lo forward to the first laterally feasible
    // spot.
    while u_lo <= u_hi && !fits(u_lo, 0.0) {
        u_lo += 0.01;
    }
    if u_lo > u_hi {
        return Err(no_placement());
    }

    let mid = (u_lo + u_hi) / 2.0;
    let half = (u_hi - u_lo) / 2.0;
    let u = mid + jitter_u.clamp(-1.0, 1.0) * 0.5 * half;
    let v_max = corners
        .iter()
        .map(|&(cx, cy)| {
            strip_half_width(camera, pitch_deg, height, u + cx - PLACEMENT_SLACK)
                - PLACEMENT_SLACK
                - cy.abs()
        })
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    let v = jitter_v.clamp(-1.0, 1.0) * 0.5 * v_max;
    Ok(Point2::new(u, v))
}

/// The standard 16-scenario benchmark: every catalog pitch crossed with
/// every catalog yaw, camera at [`CAMERA_HEIGHT`], noise sigma 0.005 m,
/// seeds and placements derived from [`CATALOG_MASTER_SEED`].
#[must_use]
pub fn scenario_catalog() -> Vec<Scenario> {
    catalog_seeded(CATALOG_MASTER_SEED).expect("the default catalog is feasible by construction")
}

/// [`scenario_catalog`] with a caller-chosen master seed. The seed drives
/// each scenario's noise seed and the jitter of each body placement;
/// scenario ids and the pitch/yaw lattice stay fixed.
pub fn catalog_seeded(master_seed: u64) -> Result<Vec<Scenario>, SynthError> {
    let camera = CameraModel::default();
    let bounds = silhouette_bounds(&body_silhouette(1.0)?);
    let half_dims = (bounds.max.u, bounds.max.v);
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    let mut scenarios = Vec::with_capacity(CATALOG_PITCHES_DEG.len() * CATALOG_YAWS_DEG.len());
    for (pitch_idx, &pitch_deg) in CATALOG_PITCHES_DEG.iter().enumerate() {
        for (yaw_idx, &yaw_deg) in CATALOG_YAWS_DEG.iter().enumerate() {
            let id = (pitch_idx * CATALOG_YAWS_DEG.len() + yaw_idx + 1) as u32;
            let seed: u64 = rng.random();
            let jitter_u: f64 = rng.random_range(-1.0..=1.0);
            let jitter_v: f64 = rng.random_range(-1.0..=1.0);
            let body_center = place_body(
                &camera,
                pitch_deg,
                CAMERA_HEIGHT,
                half_dims,
                yaw_deg,
                jitter_u,
                jitter_v,
            )?;
            scenarios.push(Scenario {
                id,
                camera: camera.clone(),
                pitch_deg,
                camera_height: CAMERA_HEIGHT,
                body_center,
                body_yaw_deg: yaw_deg,
                noise_sigma: 0.005,
                seed,
            });
        }
    }
    Ok(scenarios)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quiet(scenario: &Scenario) -> Scenario {
        Scenario {
            noise_sigma: 0.0,
            ..scenario.clone()
        }
    }

    #[test]
    fn silhouette_spans_its_documented_bounds() {
        let parts = body_silhouette(1.0).unwrap();
        let b = silhouette_bounds(&parts);
        assert_relative_eq!(b.min.u, -0.725);
        assert_relative_eq!(b.max.u, 0.725);
        assert_relative_eq!(b.min.v, -0.275);
        assert_relative_eq!(b.max.v, 0.275);
        // Body length 1.45 m, width 0.55 m.
        assert_relative_eq!(b.max.u - b.min.u, 1.45);
        assert_relative_eq!(b.max.v - b.min.v, 0.55);
    }

    #[test]
    fn silhouette_scale_multiplies_lengths() {
        let parts = body_silhouette(2.0).unwrap();
        let b = silhouette_bounds(&parts);
        assert_relative_eq!(b.max.u - b.min.u, 2.9);
        assert!(silhouette_contains(&parts, 1.25, 0.0)); // head center, scaled
        assert!(matches!(
            body_silhouette(0.0),
            Err(SynthError::InvalidScale { .. })
        ));
        assert!(matches!(
            body_silhouette(f64::NAN),
            Err(SynthError::InvalidScale { .. })
        ));
    }

    #[test]
    fn silhouette_membership_known_points() {
        let parts = body_silhouette(1.0).unwrap();
        assert!(silhouette_contains(&parts, 0.625, 0.0)); // head center
        assert!(silhouette_contains(&parts, 0.275, 0.0)); // torso center
        assert!(silhouette_contains(&parts, -0.5, 0.0875)); // left leg
        assert!(silhouette_contains(&parts, 0.25, -0.225)); // right arm
        assert!(silhouette_contains(&parts, 0.725, 0.0)); // head boundary
        assert!(!silhouette_contains(&parts, 0.0, 0.0)); // between the legs
        assert!(!silhouette_contains(&parts, -0.725, 0.25)); // past the leg
        assert!(!silhouette_contains(&parts, 0.8, 0.0)); // beyond the head
    }

    #[test]
    fn body_template_shape_and_coverage() {
        let tpl = body_template(0.05).unwrap();
        assert_eq!((tpl.width(), tpl.height()), (29, 11));
        // Occupied area tracks the analytic footprint (~0.4964 m^2).
        let area = tpl.occupied_count() as f64 * 0.05 * 0.05;
        assert!((area - 0.4964).abs() < 0.15 * 0.4964, "area {area}");
        // The footprint is bilaterally symmetric, and so is its raster.
        for row in 0..tpl.height() {
            for col in 0..tpl.width() {
                assert_eq!(tpl.cell(col, row), tpl.cell(col, tpl.height() - 1 - row));
            }
        }
        assert!(matches!(
            body_template(-1.0),
            Err(SynthError::InvalidCellSize { .. })
        ));
    }

    #[test]
    fn camera_pose_round_trips_points() {
        let pose = CameraPose {
            pitch_deg: 33.0,
            height: 1.1,
        };
        // One optical-axis unit forward from a level camera would be
        // (1, 0, h); pitched down it drops by sin(pitch).
        let ahead = pose.to_world(Point3::new(0.0, 0.0, 1.0));
        assert_relative_eq!(ahead.x, 33.0_f64.to_radians().cos(), epsilon = 1e-12);
        assert_relative_eq!(ahead.y, 0.0);
        assert_relative_eq!(ahead.z, 1.1 - 33.0_f64.to_radians().sin(), epsilon = 1e-12);
        // Image right is world -y.
        let right = pose.to_world(Point3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(right.y, -1.0);

        for p in [
            Point3::new(0.3, -0.2, 2.0),
            Point3::new(-1.0, 4.0, 0.5),
            Point3::new(0.0, 0.0, 0.0),
        ] {
            let back = pose.to_camera(pose.to_world(p));
            assert_relative_eq!(back.x, p.x, epsilon = 1e-12);
            assert_relative_eq!(back.y, p.y, epsilon = 1e-12);
            assert_relative_eq!(back.z, p.z, epsilon = 1e-12);
        }
    }

    #[test]
    fn pixel_rays_span_the_fov() {
        let cam = CameraModel::default();
        let center_left = cam.pixel_ray(0, 240);
        let center_right = cam.pixel_ray(639, 240);
        let angle = center_left.dot(&center_right).acos().to_degrees();
        // Pixel centers sit half a pixel inside the FOV edges.
        assert!(angle < 58.0 && angle > 57.5, "horizontal span {angle}");
        assert_relative_eq!(cam.pixel_ray(320, 240).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn noiseless_scene_geometry_is_exact() {
        let scenario = quiet(&scenario_catalog()[0]);
        let (cloud, truth) = make_scene_labeled(&scenario).unwrap();
        assert_eq!(
            cloud.len(),
            truth.body_pixel_count + truth.floor_pixel_count
        );
        assert!(truth.body_pixel_count > 0);

        let cam = &scenario.camera;
        let mut floor_like = 0usize;
        for p in cloud.points() {
            let range = p.coords().norm();
            assert!(range >= cam.min_range - 1e-12 && range <= cam.max_range + 1e-12);
            let w = truth.camera.to_world(*p);
            // Every surface lies between the floor and the body top.
            assert!(
                (-1e-9..=BODY_EXTRUSION_HEIGHT + 1e-9).contains(&w.z),
                "world z {}",
                w.z
            );
            floor_like += usize::from(w.z.abs() <= 1e-9);
        }
        assert_eq!(floor_like, truth.floor_pixel_count);
    }

    #[test]
    fn noise_perturbs_ranges_within_bounds() {
        let base = scenario_catalog()[5].clone();
        let (noisy, _) = make_scene_labeled(&base).unwrap();
        let (clean, _) = make_scene_labeled(&quiet(&base)).unwrap();
        // The hit decision ignores noise, so the pixels match one to one.
        assert_eq!(noisy.len(), clean.len());

        let sigma = base.noise_sigma;
        let n = clean.len();
        let mut within_three_sigma = 0usize;
        let mut nonzero = 0usize;
        for (p_noisy, p_clean) in noisy.points().iter().zip(clean.points()) {
            let r_noisy = p_noisy.coords().norm();
            let r_clean = p_clean.coords().norm();
            assert!(r_noisy >= base.camera.min_range - 1e-12);
            assert!(r_noisy <= base.camera.max_range + 1e-12);
            let delta = (r_noisy - r_clean).abs();
            within_three_sigma += usize::from(delta <= 3.0 * sigma + 1e-12);
            nonzero += usize::from(delta > 0.0);
        }
        // Gaussian tails: ~99.7% inside 3 sigma; demand 98.5% to keep the
        // test stable across seeds.
        assert!(within_three_sigma as f64 >= 0.985 * n as f64);
        assert!(nonzero as f64 >= 0.99 * n as f64);
    }

    #[test]
    fn scenes_are_reproducible_bit_for_bit() {
        let scenario = scenario_catalog()[10].clone();
        let (a, _) = make_scene_labeled(&scenario).unwrap();
        let (b, _) = make_scene_labeled(&scenario).unwrap();
        assert_eq!(a.points(), b.points());

        let reseeded = Scenario {
            seed: scenario.seed.wrapping_add(1),
            ..scenario
        };
        let (c, _) = make_scene_labeled(&reseeded).unwrap();
        assert_ne!(a.points(), c.points());
    }

    #[test]
    fn catalog_covers_the_pose_lattice() {
        let catalog = scenario_catalog();
        assert_eq!(catalog.len(), 16);
        assert_eq!(catalog, scenario_catalog());
        for (i, s) in catalog.iter().enumerate() {
            assert_eq!(s.id as usize, i + 1);
            assert_eq!(s.pitch_deg, CATALOG_PITCHES_DEG[i / 4]);
            assert_eq!(s.body_yaw_deg, CATALOG_YAWS_DEG[i % 4]);
            assert_eq!(s.camera_height, CAMERA_HEIGHT);
        }
        // Distinct noise seeds across scenarios.
        let mut seeds: Vec<u64> = catalog.iter().map(|s| s.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 16);
    }

    #[test]
    fn every_catalog_scenario_shows_the_body() {
        for scenario in scenario_catalog() {
            let (_, truth) = make_scene_labeled(&quiet(&scenario)).unwrap();
            assert!(
                truth.body_pixel_count >= 500,
                "scenario {}: only {} body pixels",
                scenario.id,
                truth.body_pixel_count
            );
        }
    }

    #[test]
    fn out_of_view_body_is_an_error() {
        let mut scenario = scenario_catalog()[0].clone();
        scenario.body_center = Point2::new(50.0, 0.0);
        assert!(matches!(
            make_scene_labeled(&scenario),
            Err(SynthError::BodyNotVisible { scenario_id }) if scenario_id == scenario.id
        ));
    }

    #[test]
    fn truth_mask_cells_match_the_template_at_zero_yaw() {
        let truth = GroundTruth {
            scenario_id: 0,
            body_center: Point2::new(2.0, 0.0),
            body_yaw_deg: 0.0,
            camera: CameraPose {
                pitch_deg: 30.0,
                height: CAMERA_HEIGHT,
            },
            body_pixel_count: 1,
            floor_pixel_count: 1,
        };
        let cells = truth.body_mask_cells(0.05).unwrap();
        assert_eq!(cells, body_template(0.05).unwrap().occupied_count());

        // A rotated footprint covers a similar cell count.
        let rotated = GroundTruth {
            body_yaw_deg: 45.0,
            ..truth
        };
        let rotated_cells = rotated.body_mask_cells(0.05).unwrap() as f64;
        assert!((rotated_cells - cells as f64).abs() <= 0.15 * cells as f64);
    }
}

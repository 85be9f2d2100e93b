//! Geometric baselines: pinhole triangulation against the sea plane,
//! depth-map median-in-box aggregation, and chart-based ranging from GPS
//! position and heading.

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{BBox, GeoPoint, ObjectClass, TypeError};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Marks an invalid pixel in a depth map.
pub const INVALID_DEPTH: f64 = -1.0;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("invalid camera pose: {0}")]
    InvalidPose(String),
    #[error("ray through pixel ({0}, {1}) does not intersect the sea plane")]
    AboveHorizon(f64, f64),
    #[error("no valid depth pixels inside the box")]
    NoValidDepth,
    #[error("invalid depth map: {0}")]
    InvalidDepthMap(String),
    #[error("chart parse error at line {line}: {reason}")]
    ChartParse { line: usize, reason: String },
    #[error(transparent)]
    Type(#[from] TypeError),
}

/// Camera mounted `height_m` above the sea plane. Pitch is positive nose
/// down; rotation order is roll about the optical axis, then pitch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub height_m: f64,
    pub pitch_rad: f64,
    pub roll_rad: f64,
    pub hfov_rad: f64,
    pub image_w: u32,
    pub image_h: u32,
}

impl CameraPose {
    pub fn validated(self) -> Result<Self, GeometryError> {
        if !self.height_m.is_finite() || self.height_m <= 0.0 {
            return Err(GeometryError::InvalidPose(format!("height_m {} must be > 0", self.height_m)));
        }
        if !(self.hfov_rad > 0.0 && self.hfov_rad < std::f64::consts::PI) {
            return Err(GeometryError::InvalidPose(format!(
                "hfov_rad {} outside (0, pi)",
                self.hfov_rad
            )));
        }
        if self.image_w < 1 || self.image_h < 1 {
            return Err(GeometryError::InvalidPose("image dimensions must be >= 1".to_string()));
        }
        if !self.pitch_rad.is_finite() || !self.roll_rad.is_finite() {
            return Err(GeometryError::InvalidPose("pitch/roll must be finite".to_string()));
        }
        Ok(self)
    }

    pub fn principal_point(&self) -> (f64, f64) {
        (self.image_w as f64 / 2.0, self.image_h as f64 / 2.0)
    }
}

/// Pinhole focal length in pixels from the horizontal field of view.
pub fn intrinsics_from_fov(pose: &CameraPose) -> f64 {
    (pose.image_w as f64 / 2.0) / (pose.hfov_rad / 2.0).tan()
}

/// Camera-to-world rotation. Camera frame: x right, y down, z forward.
/// World frame: X right, Y forward, Z up; camera sits at (0, 0, height_m).
fn camera_to_world(pose: &CameraPose) -> Matrix3<f64> {
    let axis_map = Matrix3::new(
        1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, //
        0.0, -1.0, 0.0,
    );
    // positive pitch rotates the optical axis below the horizon
    let pitch = Rotation3::from_axis_angle(&Vector3::x_axis(), -pose.pitch_rad);
    let roll = Rotation3::from_axis_angle(&Vector3::z_axis(), pose.roll_rad);
    axis_map * (pitch * roll).into_inner()
}

/// Cast the ray through pixel (u, v) and intersect it with the sea plane
/// z = 0; returns the horizontal range to the intersection point.
pub fn triangulate_distance(pose: &CameraPose, u: f64, v: f64) -> Result<f64, GeometryError> {
    let f = intrinsics_from_fov(pose);
    let (cx, cy) = pose.principal_point();
    let dir_cam = Vector3::new((u - cx) / f, (v - cy) / f, 1.0);
    let dir_world = camera_to_world(pose) * dir_cam;
    if dir_world.z >= 0.0 {
        return Err(GeometryError::AboveHorizon(u, v));
    }
    let t = pose.height_m / -dir_world.z;
    Ok((dir_world.x * t).hypot(dir_world.y * t))
}

/// Project a world ground point (X right, Y forward, z = 0 implied by
/// `z_up`) into the image. `None` when the point is behind the camera.
pub fn project_world_point(pose: &CameraPose, x: f64, y: f64, z_up: f64) -> Option<(f64, f64)> {
    let rel = Vector3::new(x, y, z_up - pose.height_m);
    let cam = camera_to_world(pose).transpose() * rel;
    if cam.z <= 1e-9 {
        return None;
    }
    let f = intrinsics_from_fov(pose);
    let (cx, cy) = pose.principal_point();
    Some((cx + f * cam.x / cam.z, cy + f * cam.y / cam.z))
}

/// Dense metric depth grid; `INVALID_DEPTH` marks pixels without data.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self, GeometryError> {
        if values.len() != (width as usize) * (height as usize) {
            return Err(GeometryError::InvalidDepthMap(format!(
                "expected {} values, got {}",
                width as usize * height as usize,
                values.len()
            )));
        }
        for &v in &values {
            if v != INVALID_DEPTH && (!v.is_finite() || v < 0.0) {
                return Err(GeometryError::InvalidDepthMap(format!("bad depth value {v}")));
            }
        }
        Ok(DepthMap { width, height, values })
    }

    pub fn width(&self) -> u32 {
        self.width
    }
    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn at(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }
}

/// Median of valid depth values whose pixel centers lie inside the box; an
/// even count averages the two middle values.
pub fn depth_median_in_box(depth: &DepthMap, bbox: &BBox) -> Result<f64, GeometryError> {
    let mut vals = Vec::new();
    for y in 0..depth.height() {
        for x in 0..depth.width() {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            if px >= bbox.x1() && px <= bbox.x2() && py >= bbox.y1() && py <= bbox.y2() {
                let v = depth.at(x, y);
                if v != INVALID_DEPTH {
                    vals.push(v);
                }
            }
        }
    }
    if vals.is_empty() {
        return Err(GeometryError::NoValidDepth);
    }
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = vals.len();
    Ok(if n % 2 == 1 { vals[n / 2] } else { (vals[n / 2 - 1] + vals[n / 2]) / 2.0 })
}

/// Great-circle distance in meters.
pub fn haversine_m(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let (lat1, lon1) = (a.lat_deg().to_radians(), a.lon_deg().to_radians());
    let (lat2, lon2) = (b.lat_deg().to_radians(), b.lon_deg().to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().asin()
}

/// Initial great-circle bearing from `a` to `b`, radians clockwise from
/// north.
pub fn bearing_rad(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let (lat1, lon1) = (a.lat_deg().to_radians(), a.lon_deg().to_radians());
    let (lat2, lon2) = (b.lat_deg().to_radians(), b.lon_deg().to_radians());
    let dlon = lon2 - lon1;
    let y = dlon.sin() * lat2.cos();
    let x = lat1.cos() * lat2.sin() - lat1.sin() * lat2.cos() * dlon.cos();
    y.atan2(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartObject {
    pub id: String,
    pub position: GeoPoint,
    pub kind: ObjectClass,
}

/// Chart file: one object per line, `id,lat,lon,kind` in decimal degrees.
/// Blank lines and `#` comments are skipped.
pub fn load_chart(text: &str) -> Result<Vec<ChartObject>, GeometryError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(GeometryError::ChartParse {
                line: idx + 1,
                reason: format!("expected 4 fields `id,lat,lon,kind`, got {}", fields.len()),
            });
        }
        let parse_num = |s: &str, name: &str| {
            s.parse::<f64>().map_err(|_| GeometryError::ChartParse {
                line: idx + 1,
                reason: format!("bad {name} `{s}`"),
            })
        };
        let lat = parse_num(fields[1], "lat")?;
        let lon = parse_num(fields[2], "lon")?;
        let position = GeoPoint::new(lat, lon).map_err(|e| GeometryError::ChartParse {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        let kind = ObjectClass::parse(fields[3]).map_err(|e| GeometryError::ChartParse {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        out.push(ChartObject { id: fields[0].to_string(), position, kind });
    }
    Ok(out)
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut a = a % two_pi;
    if a > std::f64::consts::PI {
        a -= two_pi;
    } else if a <= -std::f64::consts::PI {
        a += two_pi;
    }
    a
}

/// Chart objects inside the bearing cone around the vessel heading, with
/// distance and relative bearing, sorted by distance ascending.
pub fn chart_gt_distance(
    usv: &GeoPoint,
    heading_rad: f64,
    chart: &[ChartObject],
    bearing_tolerance_rad: f64,
) -> Vec<(ChartObject, f64, f64)> {
    let mut out: Vec<(ChartObject, f64, f64)> = chart
        .iter()
        .filter_map(|obj| {
            let dist = haversine_m(usv, &obj.position);
            let rel = wrap_angle(bearing_rad(usv, &obj.position) - heading_rad);
            (rel.abs() <= bearing_tolerance_rad).then(|| (obj.clone(), dist, rel))
        })
        .collect();
    out.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    out
}

//! Core value types shared by every module. Constructors validate; there is
//! no way to obtain an instance that violates its invariants.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TypeError {
    #[error("degenerate box: x1={x1} y1={y1} x2={x2} y2={y2} (need x1 < x2, y1 < y2, all finite)")]
    DegenerateBox { x1: f64, y1: f64, x2: f64, y2: f64 },
    #[error("confidence {0} outside [0, 1]")]
    InvalidConfidence(f64),
    #[error("distance {0} is negative or non-finite")]
    InvalidDistance(f64),
    #[error("empty label for class Other")]
    EmptyClassLabel,
    #[error("lat/lon ({0}, {1}) outside valid ranges")]
    InvalidGeoPoint(f64, f64),
}

/// Axis-aligned box in pixel coordinates, origin top-left, y down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "[f64; 4]")]
pub struct BBox {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, TypeError> {
        let finite = [x1, y1, x2, y2].iter().all(|v| v.is_finite());
        if !finite || x1 >= x2 || y1 >= y2 {
            return Err(TypeError::DegenerateBox { x1, y1, x2, y2 });
        }
        Ok(BBox { x1, y1, x2, y2 })
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }
    pub fn y1(&self) -> f64 {
        self.y1
    }
    pub fn x2(&self) -> f64 {
        self.x2
    }
    pub fn y2(&self) -> f64 {
        self.y2
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    /// Bottom-center pixel; for a floating object this is the waterline point.
    pub fn bottom_center(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, self.y2)
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x1, b.y1, b.x2, b.y2]
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = TypeError;
    fn try_from(v: [f64; 4]) -> Result<Self, Self::Error> {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl<'de> Deserialize<'de> for BBox {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = <[f64; 4]>::deserialize(d)?;
        BBox::try_from(raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(into = "String")]
pub enum ObjectClass {
    Boat,
    Buoy,
    Other(String),
}

impl ObjectClass {
    pub fn parse(label: &str) -> Result<Self, TypeError> {
        match label {
            "boat" => Ok(ObjectClass::Boat),
            "buoy" => Ok(ObjectClass::Buoy),
            "" => Err(TypeError::EmptyClassLabel),
            other => Ok(ObjectClass::Other(other.to_string())),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            ObjectClass::Boat => "boat",
            ObjectClass::Buoy => "buoy",
            ObjectClass::Other(l) => l,
        }
    }
}

impl From<ObjectClass> for String {
    fn from(c: ObjectClass) -> Self {
        c.label().to_string()
    }
}

impl<'de> Deserialize<'de> for ObjectClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        ObjectClass::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// One detector output: box, class, confidence, and the raw normalized
/// distance head output. `distance_m` is filled after denormalization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detection {
    pub bbox: BBox,
    pub class: ObjectClass,
    confidence: f64,
    pub distance_raw: f64,
    distance_m: Option<f64>,
}

impl Detection {
    pub fn new(
        bbox: BBox,
        class: ObjectClass,
        confidence: f64,
        distance_raw: f64,
        distance_m: Option<f64>,
    ) -> Result<Self, TypeError> {
        if !(0.0..=1.0).contains(&confidence) || !confidence.is_finite() {
            return Err(TypeError::InvalidConfidence(confidence));
        }
        if let Some(d) = distance_m {
            if !d.is_finite() || d < 0.0 {
                return Err(TypeError::InvalidDistance(d));
            }
        }
        Ok(Detection { bbox, class, confidence, distance_raw, distance_m })
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn distance_m(&self) -> Option<f64> {
        self.distance_m
    }

    pub fn with_distance_m(&self, d: f64) -> Result<Self, TypeError> {
        Detection::new(self.bbox, self.class.clone(), self.confidence, self.distance_raw, Some(d))
    }
}

impl<'de> Deserialize<'de> for Detection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            bbox: BBox,
            class: ObjectClass,
            confidence: f64,
            distance_raw: f64,
            #[serde(default)]
            distance_m: Option<f64>,
        }
        let r = Raw::deserialize(d)?;
        Detection::new(r.bbox, r.class, r.confidence, r.distance_raw, r.distance_m)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GtSource {
    Chart,
    HumanLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruthObject {
    pub bbox: BBox,
    pub class: ObjectClass,
    distance_m: f64,
    pub source: GtSource,
}

impl GroundTruthObject {
    pub fn new(
        bbox: BBox,
        class: ObjectClass,
        distance_m: f64,
        source: GtSource,
    ) -> Result<Self, TypeError> {
        if !distance_m.is_finite() || distance_m < 0.0 {
            return Err(TypeError::InvalidDistance(distance_m));
        }
        Ok(GroundTruthObject { bbox, class, distance_m, source })
    }

    pub fn distance_m(&self) -> f64 {
        self.distance_m
    }
}

impl<'de> Deserialize<'de> for GroundTruthObject {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            bbox: BBox,
            class: ObjectClass,
            distance_m: f64,
            source: GtSource,
        }
        let r = Raw::deserialize(d)?;
        GroundTruthObject::new(r.bbox, r.class, r.distance_m, r.source)
            .map_err(serde::de::Error::custom)
    }
}

/// One video frame's worth of detections and annotations. No pixel data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub frame_id: u64,
    pub timestamp_s: f64,
    pub detections: Vec<Detection>,
    pub ground_truth: Vec<GroundTruthObject>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeoPoint {
    lat_deg: f64,
    lon_deg: f64,
}

impl GeoPoint {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self, TypeError> {
        if !lat_deg.is_finite()
            || !lon_deg.is_finite()
            || !(-90.0..=90.0).contains(&lat_deg)
            || !(-180.0..=180.0).contains(&lon_deg)
        {
            return Err(TypeError::InvalidGeoPoint(lat_deg, lon_deg));
        }
        Ok(GeoPoint { lat_deg, lon_deg })
    }

    pub fn lat_deg(&self) -> f64 {
        self.lat_deg
    }
    pub fn lon_deg(&self) -> f64 {
        self.lon_deg
    }
}

impl<'de> Deserialize<'de> for GeoPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            lat_deg: f64,
            lon_deg: f64,
        }
        let r = Raw::deserialize(d)?;
        GeoPoint::new(r.lat_deg, r.lon_deg).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bbox_valid() {
        let b = BBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
        assert_eq!(b.area(), 100.0);
        assert_eq!(b.center(), (5.0, 5.0));
        assert_eq!(b.bottom_center(), (5.0, 10.0));
    }

    #[test]
    fn bbox_zero_width_rejected() {
        assert!(matches!(BBox::new(10.0, 0.0, 10.0, 10.0), Err(TypeError::DegenerateBox { .. })));
    }

    #[test]
    fn bbox_negative_extent_rejected() {
        assert!(BBox::new(0.0, 0.0, -5.0, 10.0).is_err());
        assert!(BBox::new(0.0, 0.0, f64::NAN, 10.0).is_err());
        assert!(BBox::new(0.0, 0.0, f64::INFINITY, 10.0).is_err());
    }

    #[test]
    fn class_parse_round_trip() {
        assert_eq!(ObjectClass::parse("boat").unwrap(), ObjectClass::Boat);
        assert_eq!(ObjectClass::parse("buoy").unwrap(), ObjectClass::Buoy);
        assert_eq!(
            ObjectClass::parse("kayak").unwrap(),
            ObjectClass::Other("kayak".to_string())
        );
        assert_eq!(ObjectClass::parse(""), Err(TypeError::EmptyClassLabel));
    }

    #[test]
    fn detection_confidence_range() {
        let b = BBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
        assert!(Detection::new(b, ObjectClass::Boat, 1.2, 0.5, None).is_err());
        assert!(Detection::new(b, ObjectClass::Boat, 0.9, 0.5, Some(-1.0)).is_err());
        assert!(Detection::new(b, ObjectClass::Boat, 0.9, 0.5, Some(10.0)).is_ok());
    }

    #[test]
    fn geopoint_ranges() {
        assert!(GeoPoint::new(91.0, 0.0).is_err());
        assert!(GeoPoint::new(0.0, -181.0).is_err());
        assert!(GeoPoint::new(45.0, -70.0).is_ok());
    }

    #[test]
    fn detection_deserialize_validates() {
        let bad = r#"{"bbox":[10,0,5,10],"class":"boat","confidence":0.9,"distance_raw":0.1}"#;
        assert!(serde_json::from_str::<Detection>(bad).is_err());
        let ok = r#"{"bbox":[0,0,5,10],"class":"boat","confidence":0.9,"distance_raw":0.1}"#;
        let d: Detection = serde_json::from_str(ok).unwrap();
        assert_eq!(d.distance_m(), None);
    }
}

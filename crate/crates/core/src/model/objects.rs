use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::pose::normalize_angle;
use crate::error::{Error, Result};

/// The ten nuScenes detection classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DetectionClass {
    Car,
    Truck,
    Bus,
    Trailer,
    ConstructionVehicle,
    Pedestrian,
    Motorcycle,
    Bicycle,
    TrafficCone,
    Barrier,
}

impl DetectionClass {
    pub const ALL: [DetectionClass; 10] = [
        DetectionClass::Car,
        DetectionClass::Truck,
        DetectionClass::Bus,
        DetectionClass::Trailer,
        DetectionClass::ConstructionVehicle,
        DetectionClass::Pedestrian,
        DetectionClass::Motorcycle,
        DetectionClass::Bicycle,
        DetectionClass::TrafficCone,
        DetectionClass::Barrier,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DetectionClass::Car => "car",
            DetectionClass::Truck => "truck",
            DetectionClass::Bus => "bus",
            DetectionClass::Trailer => "trailer",
            DetectionClass::ConstructionVehicle => "construction_vehicle",
            DetectionClass::Pedestrian => "pedestrian",
            DetectionClass::Motorcycle => "motorcycle",
            DetectionClass::Bicycle => "bicycle",
            DetectionClass::TrafficCone => "traffic_cone",
            DetectionClass::Barrier => "barrier",
        }
    }

    /// Default BEV evaluation radius in meters.
    pub fn default_range(self) -> f64 {
        match self {
            DetectionClass::Car
            | DetectionClass::Truck
            | DetectionClass::Bus
            | DetectionClass::Trailer
            | DetectionClass::ConstructionVehicle => 50.0,
            DetectionClass::Pedestrian | DetectionClass::Motorcycle | DetectionClass::Bicycle => {
                40.0
            }
            DetectionClass::TrafficCone | DetectionClass::Barrier => 30.0,
        }
    }

    /// Static classes have no velocity or attribute error.
    pub fn is_static(self) -> bool {
        matches!(self, DetectionClass::TrafficCone | DetectionClass::Barrier)
    }

    /// Period of the orientation error.
    pub fn yaw_period(self) -> f64 {
        if self == DetectionClass::Barrier {
            std::f64::consts::PI
        } else {
            2.0 * std::f64::consts::PI
        }
    }
}

impl fmt::Display for DetectionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DetectionClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownClass(s.to_string()))
    }
}

/// Vectorized map element classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MapClass {
    Divider,
    Boundary,
    Crossing,
}

impl MapClass {
    pub const ALL: [MapClass; 3] = [MapClass::Divider, MapClass::Boundary, MapClass::Crossing];

    pub fn as_str(self) -> &'static str {
        match self {
            MapClass::Divider => "divider",
            MapClass::Boundary => "boundary",
            MapClass::Crossing => "crossing",
        }
    }
}

impl fmt::Display for MapClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MapClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MapClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownClass(s.to_string()))
    }
}

/// One 3D box hypothesis or label in the ego frame (x forward, y left, z up).
///
/// `size` is `(w, l, h)`: `l` runs along the heading, `w` across it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionBox3D {
    pub class_name: String,
    pub center: [f64; 3],
    pub size: [f64; 3],
    pub yaw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<[f64; 2]>,
    #[serde(default = "unit_score")]
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
}

fn unit_score() -> f64 {
    1.0
}

impl DetectionBox3D {
    pub fn new(class: DetectionClass, center: [f64; 3], size: [f64; 3], yaw: f64) -> Self {
        DetectionBox3D {
            class_name: class.as_str().to_string(),
            center,
            size,
            yaw: normalize_angle(yaw),
            velocity: None,
            score: 1.0,
            attribute: None,
        }
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = score;
        self
    }

    pub fn with_velocity(mut self, velocity: [f64; 2]) -> Self {
        self.velocity = Some(velocity);
        self
    }

    pub fn with_attribute(mut self, attribute: impl Into<String>) -> Self {
        self.attribute = Some(attribute.into());
        self
    }

    pub fn class(&self) -> Result<DetectionClass> {
        self.class_name.parse()
    }

    /// Distance of the center from the ego origin in the ground plane.
    pub fn bev_range(&self) -> f64 {
        self.center[0].hypot(self.center[1])
    }

    /// Checks invariants and normalizes yaw in place. `record` names the box in errors.
    pub fn validate(&mut self, record: &str) -> Result<()> {
        self.class()
            .map_err(|_| Error::validation(record, format!("unknown class `{}`", self.class_name)))?;
        if !self.size.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::validation(
                record,
                format!("nonpositive box size {:?}", self.size),
            ));
        }
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::validation(
                record,
                format!("score {} outside [0, 1]", self.score),
            ));
        }
        let finite = self.center.iter().all(|v| v.is_finite())
            && self.yaw.is_finite()
            && self
                .velocity
                .map_or(true, |v| v.iter().all(|c| c.is_finite()));
        if !finite {
            return Err(Error::validation(record, "non-finite box geometry"));
        }
        self.yaw = normalize_angle(self.yaw);
        Ok(())
    }
}

/// One vectorized map element as an ordered point sequence in the ego BEV frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPolyline {
    pub class_name: String,
    pub points: Vec<[f64; 2]>,
    #[serde(default = "unit_score")]
    pub score: f64,
}

impl MapPolyline {
    pub fn new(class: MapClass, points: Vec<[f64; 2]>) -> Self {
        MapPolyline {
            class_name: class.as_str().to_string(),
            points,
            score: 1.0,
        }
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = score;
        self
    }

    pub fn class(&self) -> Result<MapClass> {
        self.class_name.parse()
    }

    pub fn arc_length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .sum()
    }

    /// Checks invariants. Crossings are closed by repeating their first point.
    pub fn validate(&mut self, record: &str) -> Result<()> {
        let class = self
            .class()
            .map_err(|_| Error::validation(record, format!("unknown class `{}`", self.class_name)))?;
        if self.points.len() < 2 {
            return Err(Error::validation(record, "polyline needs at least 2 points"));
        }
        if !self.points.iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::validation(record, "non-finite polyline point"));
        }
        if let Some(i) = self.points.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::validation(
                record,
                format!("points {i} and {} coincide", i + 1),
            ));
        }
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::validation(
                record,
                format!("score {} outside [0, 1]", self.score),
            ));
        }
        if class == MapClass::Crossing {
            let first = self.points[0];
            if *self.points.last().unwrap() != first {
                self.points.push(first);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_names_round_trip() {
        for c in DetectionClass::ALL {
            assert_eq!(c.as_str().parse::<DetectionClass>().unwrap(), c);
        }
        for c in MapClass::ALL {
            assert_eq!(c.as_str().parse::<MapClass>().unwrap(), c);
        }
        assert_eq!(
            "tram".parse::<DetectionClass>().unwrap_err().kind(),
            "UnknownClassError"
        );
    }

    #[test]
    fn box_validation() {
        let mut b = DetectionBox3D::new(DetectionClass::Car, [1.0, 2.0, 0.0], [2.0, 4.0, 1.5], 0.0);
        b.yaw = -std::f64::consts::PI;
        b.validate("b").unwrap();
        assert_eq!(b.yaw, std::f64::consts::PI);

        let mut bad = b.clone();
        bad.size[1] = 0.0;
        let err = bad.validate("frame f0 box 3").unwrap_err();
        assert!(err.to_string().contains("frame f0 box 3"));

        let mut bad = b.clone();
        bad.score = 1.5;
        assert!(bad.validate("x").is_err());
    }

    #[test]
    fn crossing_is_closed_once() {
        let mut c = MapPolyline::new(MapClass::Crossing, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]);
        c.validate("c").unwrap();
        assert_eq!(c.points.len(), 4);
        c.validate("c").unwrap();
        assert_eq!(c.points.len(), 4);

        let mut d = MapPolyline::new(MapClass::Divider, vec![[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]);
        assert!(d.validate("d").is_err());
    }
}

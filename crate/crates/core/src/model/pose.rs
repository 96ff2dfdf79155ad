use std::f64::consts::PI;

use nalgebra::{Isometry3, Quaternion, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum allowed deviation of a pose quaternion from unit norm.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-9;

/// Rigid ego-to-global transform.
///
/// `rotation` is a unit quaternion stored as `[w, x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub translation: [f64; 3],
    pub rotation: [f64; 4],
}

impl Default for Pose {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        translation: [0.0; 3],
        rotation: [1.0, 0.0, 0.0, 0.0],
    };

    pub fn new(translation: [f64; 3], rotation: [f64; 4]) -> Result<Self> {
        let pose = Pose {
            translation,
            rotation,
        };
        pose.check()?;
        Ok(pose)
    }

    /// Pure translation.
    pub fn from_translation(translation: [f64; 3]) -> Self {
        Pose {
            translation,
            rotation: Self::IDENTITY.rotation,
        }
    }

    /// Pure rotation about the z axis by `angle` radians.
    pub fn from_yaw(angle: f64) -> Self {
        let half = 0.5 * angle;
        Pose {
            translation: [0.0; 3],
            rotation: [half.cos(), 0.0, 0.0, half.sin()],
        }
    }

    pub fn quaternion_norm(&self) -> f64 {
        self.rotation.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub(crate) fn check(&self) -> Result<()> {
        if !self
            .translation
            .iter()
            .chain(self.rotation.iter())
            .all(|v| v.is_finite())
        {
            return Err(Error::validation("pose", "non-finite component"));
        }
        let norm = self.quaternion_norm();
        if (norm - 1.0).abs() > QUATERNION_NORM_TOLERANCE {
            return Err(Error::validation(
                "pose",
                format!("quaternion norm {norm} is not 1"),
            ));
        }
        Ok(())
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        let [w, x, y, z] = self.rotation;
        let [tx, ty, tz] = self.translation;
        Isometry3::from_parts(
            Translation3::new(tx, ty, tz),
            UnitQuaternion::new_unchecked(Quaternion::new(w, x, y, z)),
        )
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        let q = iso.rotation.quaternion();
        let t = iso.translation.vector;
        Pose {
            translation: [t.x, t.y, t.z],
            rotation: [q.w, q.i, q.j, q.k],
        }
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::from_isometry(&(self.to_isometry() * other.to_isometry()))
    }

    pub fn inverse(&self) -> Pose {
        Pose::from_isometry(&self.to_isometry().inverse())
    }

    pub fn transform_point(&self, p: [f64; 3]) -> [f64; 3] {
        let v = self.to_isometry() * nalgebra::Point3::from(Vector3::from(p));
        [v.x, v.y, v.z]
    }

    /// Heading of the rotation about z, in (−π, π].
    pub fn yaw(&self) -> f64 {
        let (_, _, yaw) = self.to_isometry().rotation.euler_angles();
        normalize_angle(yaw)
    }

    /// Compares translations componentwise and rotations up to quaternion sign.
    pub fn approx_eq(&self, other: &Pose, tol: f64) -> bool {
        let t_ok = self
            .translation
            .iter()
            .zip(&other.translation)
            .all(|(a, b)| (a - b).abs() <= tol);
        let same = self
            .rotation
            .iter()
            .zip(&other.rotation)
            .all(|(a, b)| (a - b).abs() <= tol);
        let flipped = self
            .rotation
            .iter()
            .zip(&other.rotation)
            .all(|(a, b)| (a + b).abs() <= tol);
        t_ok && (same || flipped)
    }
}

/// Wraps an angle in radians to (−π, π].
pub fn normalize_angle(angle: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let r = angle.rem_euclid(two_pi);
    if r > PI {
        r - two_pi
    } else {
        r
    }
}

/// Wraps an angle in degrees to (−180, 180].
pub fn normalize_degrees(angle: f64) -> f64 {
    let r = angle.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// Degrees to radians, exact for multiples of 90°.
pub fn deg_to_rad(deg: f64) -> f64 {
    deg / 180.0 * PI
}

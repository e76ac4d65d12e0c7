use crate::geom::{Aabb, Vec3};
use crate::scalar::Real;

/// Similarity map from scene units into a frame where the scene's
/// bounding-box diagonal has length 1 and its center is the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneFrame<T> {
    pub center: Vec3<T>,
    /// Multiplier from scene units to normalized units (`1 / diagonal`).
    pub scale: T,
}

impl<T: Real> SceneFrame<T> {
    pub fn identity() -> Self {
        Self { center: Vec3::zero(), scale: T::one() }
    }

    /// Falls back to the identity for empty or point-like boxes.
    pub fn from_bbox(bbox: &Aabb<T>) -> Self {
        let diag = bbox.diagonal();
        if diag > T::zero() && diag.is_finite() {
            Self { center: bbox.center(), scale: T::one() / diag }
        } else {
            Self::identity()
        }
    }

    #[inline]
    pub fn to_normalized(&self, p: Vec3<T>) -> Vec3<T> {
        (p - self.center) * self.scale
    }

    #[inline]
    pub fn to_world(&self, p: Vec3<T>) -> Vec3<T> {
        p / self.scale + self.center
    }

    /// Converts a length in normalized units to scene units.
    pub fn length_to_world(&self, l: T) -> T {
        l / self.scale
    }
}

#[allow(unused_imports)]
use num_traits::Float;

use super::MocapError;
use crate::linalg::{normalize, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum CameraKind {
    Pinhole,
    DoubleSphere,
}

/// Intrinsics of a pinhole or double-sphere camera.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CameraModel {
    #[cfg_attr(feature = "serde", serde(rename = "model"))]
    pub kind: CameraKind,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub xi: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub alpha: f64,
    pub width: u32,
    pub height: u32,
}

/// The point is outside the model's valid projection region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Behind;

impl CameraModel {
    pub fn pinhole(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Self {
        Self {
            kind: CameraKind::Pinhole,
            fx,
            fy,
            cx,
            cy,
            xi: 0.0,
            alpha: 0.0,
            width,
            height,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn double_sphere(fx: f64, fy: f64, cx: f64, cy: f64, xi: f64, alpha: f64, width: u32, height: u32) -> Self {
        Self {
            kind: CameraKind::DoubleSphere,
            fx,
            fy,
            cx,
            cy,
            xi,
            alpha,
            width,
            height,
        }
    }

    /// Centered VGA pinhole with the given focal length in pixels.
    pub fn vga(f: f64) -> Self {
        Self::pinhole(f, f, 319.5, 239.5, 640, 480)
    }

    pub fn validate(&self) -> Result<(), MocapError> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.cx.is_finite()
            && self.cy.is_finite()
            && match self.kind {
                CameraKind::Pinhole => true,
                CameraKind::DoubleSphere => self.xi.is_finite() && (0.0..1.0).contains(&self.alpha),
            };
        if ok {
            Ok(())
        } else {
            Err(MocapError::InvalidCamera)
        }
    }

    pub fn in_image(&self, p: [f64; 2]) -> bool {
        p[0] >= 0.0 && p[1] >= 0.0 && p[0] < f64::from(self.width) && p[1] < f64::from(self.height)
    }

    /// Pixel coordinates of a camera-frame point.
    pub fn project(&self, p: Vec3) -> Result<[f64; 2], Behind> {
        let [x, y, z] = p;
        match self.kind {
            CameraKind::Pinhole => {
                if z <= 0.0 {
                    return Err(Behind);
                }
                Ok([self.fx * x / z + self.cx, self.fy * y / z + self.cy])
            }
            CameraKind::DoubleSphere => {
                let (xi, a) = (self.xi, self.alpha);
                let d1 = (x * x + y * y + z * z).sqrt();
                let zs = xi * d1 + z;
                let d2 = (x * x + y * y + zs * zs).sqrt();
                let w1 = if a <= 0.5 { a / (1.0 - a) } else { (1.0 - a) / a };
                let w2 = (w1 + xi) / (2.0 * w1 * xi + xi * xi + 1.0).sqrt();
                let den = a * d2 + (1.0 - a) * zs;
                if z <= -w2 * d1 || den <= 0.0 {
                    return Err(Behind);
                }
                Ok([self.fx * x / den + self.cx, self.fy * y / den + self.cy])
            }
        }
    }

    /// Unit ray through a pixel.
    pub fn unproject(&self, px: [f64; 2]) -> Result<Vec3, MocapError> {
        let mx = (px[0] - self.cx) / self.fx;
        let my = (px[1] - self.cy) / self.fy;
        match self.kind {
            CameraKind::Pinhole => Ok(normalize([mx, my, 1.0])),
            CameraKind::DoubleSphere => {
                let (xi, a) = (self.xi, self.alpha);
                let r2 = mx * mx + my * my;
                if a > 0.5 && r2 > 1.0 / (2.0 * a - 1.0) {
                    return Err(MocapError::OutsideImageDomain { u: px[0], v: px[1] });
                }
                let mz = (1.0 - a * a * r2) / (a * (1.0 - (2.0 * a - 1.0) * r2).sqrt() + 1.0 - a);
                let disc = mz * mz + (1.0 - xi * xi) * r2;
                if disc < 0.0 {
                    return Err(MocapError::OutsideImageDomain { u: px[0], v: px[1] });
                }
                let k = (mz * xi + disc.sqrt()) / (mz * mz + r2);
                Ok(normalize([k * mx, k * my, k * mz - xi]))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm};

    #[test]
    fn optical_axis() {
        let c = CameraModel::pinhole(500.0, 500.0, 320.0, 240.0, 640, 480);
        assert_eq!(c.project([0.0, 0.0, 1.0]), Ok([320.0, 240.0]));
        assert_eq!(c.project([0.0, 0.0, -1.0]), Err(Behind));
        let r = c.unproject([320.0, 240.0]).unwrap();
        assert_eq!(r, [0.0, 0.0, 1.0]);
        let r = c.unproject([820.0, 240.0]).unwrap();
        let s = 0.5f64.sqrt();
        assert!((r[0] - s).abs() < 1e-15 && r[1] == 0.0 && (r[2] - s).abs() < 1e-15);
    }

    #[test]
    fn degenerate_double_sphere_is_pinhole() {
        let p = CameraModel::pinhole(480.0, 470.0, 321.0, 239.0, 640, 480);
        let d = CameraModel::double_sphere(480.0, 470.0, 321.0, 239.0, 0.0, 0.0, 640, 480);
        for pt in [[0.1, -0.2, 1.0], [1.5, 0.3, 0.7], [-3.0, 2.0, 9.0]] {
            let a = p.project(pt).unwrap();
            let b = d.project(pt).unwrap();
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
        assert_eq!(d.project([1.0, 0.0, -0.1]), Err(Behind));
    }

    #[test]
    fn double_sphere_round_trip() {
        let c = CameraModel::double_sphere(350.0, 350.0, 640.0, 512.0, -0.2, 0.6, 1280, 1024);
        for pt in [[0.2, 0.1, 1.0], [1.0, -0.5, 0.3], [0.0, 0.0, 2.0], [-0.8, 0.9, 0.2]] {
            let px = c.project(pt).unwrap();
            let ray = c.unproject(px).unwrap();
            assert!((norm(ray) - 1.0).abs() < 1e-12);
            let cos = dot(ray, normalize(pt));
            assert!(cos > 1.0 - 1e-12, "{pt:?}");
        }
    }

    #[test]
    fn validation() {
        assert!(CameraModel::vga(1000.0).validate().is_ok());
        let mut c = CameraModel::vga(1000.0);
        c.fx = 0.0;
        assert_eq!(c.validate(), Err(MocapError::InvalidCamera));
        let c = CameraModel::double_sphere(1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1, 1);
        assert_eq!(c.validate(), Err(MocapError::InvalidCamera));
    }
}

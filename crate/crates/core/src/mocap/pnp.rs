use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{CameraKind, CameraModel, MocapError};
use crate::linalg::{
    add, cross, det3, dot, exp_so3, mat_mul, mat_to_quat, mat_vec, norm, orthonormalize, rotation_angle, skew,
    solve_dense, sub, transpose, Mat3, Vec3, IDENTITY3,
};

/// Rigid transform from the body frame into the camera frame,
/// `p_cam = R·p_body + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pose {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        rotation: IDENTITY3,
        translation: [0.0; 3],
    };

    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    pub fn transform(&self, p: Vec3) -> Vec3 {
        add(mat_vec(&self.rotation, p), self.translation)
    }

    /// Rotation quaternion `[w, x, y, z]`.
    pub fn quaternion(&self) -> [f64; 4] {
        mat_to_quat(&self.rotation)
    }

    /// `RᵀR = I` and `det R = 1` within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let rtr = mat_mul(&transpose(&self.rotation), &self.rotation);
        let ortho = (0..3).all(|i| (0..3).all(|j| (rtr[i][j] - IDENTITY3[i][j]).abs() <= tol));
        ortho && (det3(&self.rotation) - 1.0).abs() <= tol
    }

    /// Rotation angle and translation distance between two poses.
    pub fn error_to(&self, other: &Pose) -> (f64, f64) {
        let d = mat_mul(&transpose(&self.rotation), &other.rotation);
        (rotation_angle(&d), norm(sub(self.translation, other.translation)))
    }
}

/// Solver limits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PnpOptions {
    pub max_iter: usize,
    pub step_tol: f64,
}

impl Default for PnpOptions {
    fn default() -> Self {
        Self {
            max_iter: 50,
            step_tol: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PnpSolution {
    pub pose: Pose,
    /// `sqrt(Σ‖r_i‖² / N)` in pixels.
    pub rmse: f64,
    pub iterations: usize,
}

/// The 24 proper rotations mapping coordinate axes onto coordinate axes.
pub fn axis_rotations() -> Vec<Mat3> {
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::with_capacity(24);
    // Identity first so an unrotated target is tried before anything else.
    out.push(IDENTITY3);
    for p in perms {
        for s in 0..8 {
            let mut m = [[0.0; 3]; 3];
            for (i, &c) in p.iter().enumerate() {
                m[i][c] = if s >> i & 1 == 1 { -1.0 } else { 1.0 };
            }
            if det3(&m) > 0.0 && m != IDENTITY3 {
                out.push(m);
            }
        }
    }
    out
}

/// Reprojection residuals `project(R·X + t) - px`, flattened; `None` if a
/// point leaves the valid region.
fn residuals(camera: &CameraModel, pose: &Pose, points: &[Vec3], pixels: &[[f64; 2]]) -> Option<Vec<f64>> {
    let mut r = Vec::with_capacity(2 * points.len());
    for (p, q) in points.iter().zip(pixels) {
        let uv = camera.project(pose.transform(*p)).ok()?;
        r.push(uv[0] - q[0]);
        r.push(uv[1] - q[1]);
    }
    Some(r)
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Reprojection RMSE of a pose, `None` if a point cannot be projected.
pub fn reprojection_rmse(camera: &CameraModel, pose: &Pose, points: &[Vec3], pixels: &[[f64; 2]]) -> Option<f64> {
    let r = residuals(camera, pose, points, pixels)?;
    Some((sum_sq(&r) / points.len() as f64).sqrt())
}

/// `∂(u, v)/∂p` at a camera-frame point.
fn projection_jacobian(camera: &CameraModel, p: Vec3) -> Option<[[f64; 3]; 2]> {
    if camera.kind == CameraKind::Pinhole {
        let [x, y, z] = p;
        let iz = 1.0 / z;
        return Some([
            [camera.fx * iz, 0.0, -camera.fx * x * iz * iz],
            [0.0, camera.fy * iz, -camera.fy * y * iz * iz],
        ]);
    }
    let h = 1e-6 * norm(p).max(1e-3);
    let mut j = [[0.0; 3]; 2];
    for k in 0..3 {
        let mut a = p;
        let mut b = p;
        a[k] += h;
        b[k] -= h;
        let pa = camera.project(a).ok()?;
        let pb = camera.project(b).ok()?;
        j[0][k] = (pa[0] - pb[0]) / (2.0 * h);
        j[1][k] = (pa[1] - pb[1]) / (2.0 * h);
    }
    Some(j)
}

/// Least-squares translation for a fixed rotation: minimizes the squared
/// distance of every transformed point from its bearing ray.
fn translation_for(rotation: &Mat3, points: &[Vec3], rays: &[Vec3]) -> Option<Vec3> {
    let mut a = [0.0; 9];
    let mut b = [0.0; 3];
    for (p, d) in points.iter().zip(rays) {
        let rp = mat_vec(rotation, *p);
        let dr = dot(*d, rp);
        for i in 0..3 {
            for j in 0..3 {
                let pij = if i == j { 1.0 } else { 0.0 } - d[i] * d[j];
                a[i * 3 + j] += pij;
            }
            b[i] -= rp[i] - d[i] * dr;
        }
    }
    solve_dense(&mut a, &mut b, 3, 1e-12)?;
    Some(b)
}

/// Levenberg-Marquardt on SE(3) with a left rotation perturbation. Returns
/// the refined pose, its squared cost, iterations used and whether the
/// step criterion was met.
fn refine(
    camera: &CameraModel,
    mut pose: Pose,
    points: &[Vec3],
    pixels: &[[f64; 2]],
    opts: PnpOptions,
) -> Option<(Pose, f64, usize, bool)> {
    let n = points.len();
    let mut r = residuals(camera, &pose, points, pixels)?;
    let mut cost = sum_sq(&r);
    let mut lambda = 1e-3;
    let mut jac = vec![[0.0; 6]; 2 * n];
    for iter in 1..=opts.max_iter {
        for (i, p) in points.iter().enumerate() {
            let rp = mat_vec(&pose.rotation, *p);
            let pc = add(rp, pose.translation);
            let dp = projection_jacobian(camera, pc)?;
            // ∂pc/∂ω = -[R·X]×, ∂pc/∂t = I.
            let s = skew(rp);
            for row in 0..2 {
                for k in 0..3 {
                    jac[2 * i + row][k] = -(0..3).map(|m| dp[row][m] * s[m][k]).sum::<f64>();
                    jac[2 * i + row][3 + k] = dp[row][k];
                }
            }
        }
        let mut h = [0.0; 36];
        let mut g = [0.0; 6];
        for (row, res) in jac.iter().zip(&r) {
            for a in 0..6 {
                g[a] += row[a] * res;
                for b in 0..6 {
                    h[a * 6 + b] += row[a] * row[b];
                }
            }
        }
        loop {
            let mut hd = h;
            for a in 0..6 {
                hd[a * 6 + a] += lambda * h[a * 6 + a].max(1e-12);
            }
            let mut step = g.map(|v| -v);
            let solved = solve_dense(&mut hd, &mut step, 6, 1e-15).is_some();
            let step_norm = step.iter().map(|v| v * v).sum::<f64>().sqrt();
            if solved {
                let cand = Pose {
                    rotation: mat_mul(&exp_so3([step[0], step[1], step[2]]), &pose.rotation),
                    translation: add(pose.translation, [step[3], step[4], step[5]]),
                };
                if let Some(rc) = residuals(camera, &cand, points, pixels) {
                    let c = sum_sq(&rc);
                    if c <= cost {
                        pose = cand;
                        r = rc;
                        cost = c;
                        lambda = (lambda * 0.1).max(1e-12);
                        if step_norm < opts.step_tol {
                            return Some((pose, cost, iter, true));
                        }
                        break;
                    }
                }
                if step_norm < opts.step_tol {
                    return Some((pose, cost, iter, true));
                }
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                // No descent direction left at machine precision.
                return Some((pose, cost, iter, true));
            }
        }
    }
    Some((pose, cost, opts.max_iter, false))
}

/// True when all points lie (numerically) on one line.
fn collinear(points: &[Vec3]) -> bool {
    let mut best = (0.0, 0, 0);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = norm(sub(points[i], points[j]));
            if d > best.0 {
                best = (d, i, j);
            }
        }
    }
    let (span, a, b) = best;
    if span <= 1e-12 {
        return true;
    }
    let axis = sub(points[b], points[a]);
    points
        .iter()
        .all(|p| norm(cross(axis, sub(*p, points[a]))) / (span * span) < 1e-9)
}

/// Pose from ≥ 4 body-point / pixel correspondences minimizing the squared
/// reprojection error.
///
/// Without a prior, every axis-aligned rotation seeds a least-squares
/// translation and a Levenberg-Marquardt refinement; the lowest-cost
/// converged result wins. With a prior only the prior is refined.
pub fn solve_pnp(
    points: &[Vec3],
    pixels: &[[f64; 2]],
    camera: &CameraModel,
    prior: Option<&Pose>,
) -> Result<PnpSolution, MocapError> {
    solve_pnp_with(points, pixels, camera, prior, PnpOptions::default())
}

pub fn solve_pnp_with(
    points: &[Vec3],
    pixels: &[[f64; 2]],
    camera: &CameraModel,
    prior: Option<&Pose>,
    opts: PnpOptions,
) -> Result<PnpSolution, MocapError> {
    if points.len() != pixels.len() {
        return Err(MocapError::LengthMismatch {
            points: points.len(),
            pixels: pixels.len(),
        });
    }
    if points.len() < 4 {
        return Err(MocapError::TooFewCorrespondences { n: points.len() });
    }
    camera.validate()?;
    if collinear(points) {
        return Err(MocapError::DegenerateGeometry);
    }
    let rays = pixels
        .iter()
        .map(|&px| camera.unproject(px))
        .collect::<Result<Vec<_>, _>>()?;

    let seeds: Vec<Pose> = match prior {
        Some(p) => vec![*p],
        None => axis_rotations()
            .into_iter()
            .filter_map(|rot| {
                let t = translation_for(&rot, points, &rays)?;
                let pose = Pose::new(rot, t);
                points
                    .iter()
                    .all(|p| pose.transform(*p)[2] > 0.0)
                    .then_some(pose)
            })
            .collect(),
    };

    let mut best: Option<(f64, PnpSolution)> = None;
    let mut tried = 0;
    for seed in &seeds {
        tried += 1;
        let Some((pose, _, iterations, converged)) = refine(camera, *seed, points, pixels, opts) else {
            continue;
        };
        if !converged {
            continue;
        }
        let pose = Pose::new(orthonormalize(&pose.rotation), pose.translation);
        let Some(rmse) = reprojection_rmse(camera, &pose, points, pixels) else {
            continue;
        };
        if best.as_ref().is_none_or(|(c, _)| rmse < *c) {
            best = Some((
                rmse,
                PnpSolution {
                    pose,
                    rmse,
                    iterations,
                },
            ));
        }
    }
    best.map(|(_, s)| s).ok_or(MocapError::EstimationFailed {
        seeds: tried,
        reason: if seeds.is_empty() {
            "no seed places all points in front of the camera"
        } else {
            "no seed converged"
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mocap::REFERENCE_LAYOUT;

    fn project_all(cam: &CameraModel, pose: &Pose, pts: &[Vec3]) -> Vec<[f64; 2]> {
        pts.iter().map(|p| cam.project(pose.transform(*p)).unwrap()).collect()
    }

    #[test]
    fn cube_rotations() {
        let r = axis_rotations();
        assert_eq!(r.len(), 24);
        assert_eq!(r[0], IDENTITY3);
        for (i, a) in r.iter().enumerate() {
            assert!((det3(a) - 1.0).abs() < 1e-15);
            assert!(r[i + 1..].iter().all(|b| b != a));
        }
    }

    #[test]
    fn identity_pose_recovered() {
        let cam = CameraModel::vga(1000.0);
        let pts: Vec<Vec3> = REFERENCE_LAYOUT.iter().map(|p| add(*p, [0.0, 0.0, 1.0])).collect();
        let px = project_all(&cam, &Pose::IDENTITY, &pts);
        let s = solve_pnp(&pts, &px, &cam, None).unwrap();
        let (ang, dt) = s.pose.error_to(&Pose::IDENTITY);
        assert!(ang < 1e-6 && dt < 1e-6, "{ang} {dt}");
        assert!(s.pose.is_valid(1e-9));
    }

    #[test]
    fn known_pose_recovered() {
        let cam = CameraModel::vga(3333.0);
        let axis = crate::linalg::normalize([0.3, -0.8, 0.5]);
        let truth = Pose::new(
            exp_so3(crate::linalg::scale(axis, 20f64.to_radians())),
            [0.1, -0.05, 1.5],
        );
        let px = project_all(&cam, &truth, &REFERENCE_LAYOUT);
        let s = solve_pnp(&REFERENCE_LAYOUT, &px, &cam, None).unwrap();
        let (ang, dt) = s.pose.error_to(&truth);
        assert!(ang < 1e-5 && dt < 1e-5, "{ang} {dt}");
        assert!(s.rmse < 1e-6);
    }

    #[test]
    fn prior_is_refined() {
        let cam = CameraModel::vga(1500.0);
        let truth = Pose::new(exp_so3([0.1, 0.2, -0.1]), [0.0, 0.02, 2.0]);
        let px = project_all(&cam, &truth, &REFERENCE_LAYOUT);
        let prior = Pose::new(exp_so3([0.12, 0.18, -0.05]), [0.01, 0.0, 1.9]);
        let s = solve_pnp(&REFERENCE_LAYOUT, &px, &cam, Some(&prior)).unwrap();
        let (ang, dt) = s.pose.error_to(&truth);
        assert!(ang < 1e-8 && dt < 1e-8);
    }

    #[test]
    fn arity_and_degeneracy() {
        let cam = CameraModel::vga(1000.0);
        let px = [[0.0, 0.0]; 3];
        assert_eq!(
            solve_pnp(&REFERENCE_LAYOUT[..3], &px, &cam, None),
            Err(MocapError::TooFewCorrespondences { n: 3 })
        );
        let line: Vec<Vec3> = (0..5).map(|i| [i as f64 * 0.1, 0.0, 1.0]).collect();
        let px = vec![[320.0, 240.0]; 5];
        assert_eq!(solve_pnp(&line, &px, &cam, None), Err(MocapError::DegenerateGeometry));
    }

    #[test]
    fn rmse_matches_reprojection() {
        let cam = CameraModel::vga(1667.0);
        let truth = Pose::new(exp_so3([0.05, -0.1, 0.3]), [0.05, 0.0, 1.0]);
        let mut px = project_all(&cam, &truth, &REFERENCE_LAYOUT);
        px[0][0] += 0.7;
        px[3][1] -= 0.4;
        let s = solve_pnp(&REFERENCE_LAYOUT, &px, &cam, None).unwrap();
        let again = reprojection_rmse(&cam, &s.pose, &REFERENCE_LAYOUT, &px).unwrap();
        assert!((again - s.rmse).abs() < 1e-9);
        assert!(s.rmse > 0.0);
    }
}

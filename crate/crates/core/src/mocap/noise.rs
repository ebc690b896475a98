use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{solve_pnp, CameraModel, MocapError, Pose};
use crate::linalg::{mat_mul, quat_to_mat, rotation_angle, transpose, Vec3};

/// Minimum number of poses for [`pose_noise_analysis`].
pub const MIN_NOISE_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PoseNoise {
    /// Sample standard deviation of each translation component, m.
    pub sigma_xyz: [f64; 3],
    /// RMS rotation angle about the mean rotation, rad.
    pub sigma_rot: f64,
    pub mean_translation: Vec3,
    pub samples: usize,
}

/// Spread of a pose sequence from a static target.
///
/// The mean rotation is the normalized sum of hemisphere-aligned
/// quaternions. The rotation spread treats each pose's angular distance to
/// that mean as a zero-mean deviation.
pub fn pose_noise_analysis(poses: &[Pose]) -> Result<PoseNoise, MocapError> {
    let n = poses.len();
    if n < MIN_NOISE_SAMPLES {
        return Err(MocapError::InsufficientSamples {
            need: MIN_NOISE_SAMPLES,
            have: n,
        });
    }
    let nf = n as f64;
    // Accumulate around the first sample; identical inputs stay exact.
    let a = poses[0].translation;
    let mut mean = [0.0; 3];
    for p in poses {
        for k in 0..3 {
            mean[k] += (p.translation[k] - a[k]) / nf;
        }
    }
    for k in 0..3 {
        mean[k] += a[k];
    }
    let mut var = [0.0; 3];
    for p in poses {
        for k in 0..3 {
            var[k] += (p.translation[k] - mean[k]).powi(2) / (nf - 1.0);
        }
    }

    let q0 = poses[0].quaternion();
    let mut qs = [0.0; 4];
    for p in poses {
        let q = p.quaternion();
        let s = if (0..4).map(|k| q[k] * q0[k]).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        for k in 0..4 {
            qs[k] += s * q[k];
        }
    }
    let r_mean = quat_to_mat(qs);
    let rt = transpose(&r_mean);
    let sq: f64 = poses
        .iter()
        .map(|p| rotation_angle(&mat_mul(&rt, &p.rotation)).powi(2))
        .sum();

    Ok(PoseNoise {
        sigma_xyz: var.map(|v| v.sqrt()),
        sigma_rot: (sq / (nf - 1.0)).sqrt(),
        mean_translation: mean,
        samples: n,
    })
}

/// Solve PnP for `samples` noisy captures of a static target: every marker
/// is projected under `truth` and perturbed with i.i.d. Gaussian pixel noise.
pub fn simulate_static_poses(
    camera: &CameraModel,
    layout: &[Vec3],
    truth: &Pose,
    sigma_px: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<Pose>, MocapError> {
    let clean = layout
        .iter()
        .map(|p| camera.project(truth.transform(*p)).map_err(|_| MocapError::MarkerBehindCamera))
        .collect::<Result<Vec<_>, _>>()?;
    let noise = Normal::new(0.0, sigma_px).map_err(|_| MocapError::InvalidNoise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples);
    let mut px = clean.clone();
    for _ in 0..samples {
        for (q, c) in px.iter_mut().zip(&clean) {
            *q = [c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)];
        }
        out.push(solve_pnp(layout, &px, camera, None)?.pose);
    }
    Ok(out)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::exp_so3;
    use alloc::vec;

    #[test]
    fn identical_poses_have_zero_spread() {
        let p = Pose::new(exp_so3([0.2, 0.1, -0.3]), [0.1, 0.2, 1.0]);
        let r = pose_noise_analysis(&vec![p; 120]).unwrap();
        assert_eq!(r.sigma_xyz, [0.0; 3]);
        assert!(r.sigma_rot < 1e-12);
    }

    #[test]
    fn too_few_samples() {
        assert_eq!(
            pose_noise_analysis(&vec![Pose::IDENTITY; 99]),
            Err(MocapError::InsufficientSamples { need: 100, have: 99 })
        );
    }

    #[test]
    fn recovers_generated_z_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = Normal::new(0.0, 1e-3).unwrap();
        let poses: Vec<Pose> = (0..2000)
            .map(|_| Pose::new(exp_so3([0.0, 0.0, 0.1]), [0.0, 0.0, 2.0 + n.sample(&mut rng)]))
            .collect();
        let r = pose_noise_analysis(&poses).unwrap();
        assert!((r.sigma_xyz[2] / 1e-3 - 1.0).abs() < 0.1, "{}", r.sigma_xyz[2]);
        assert_eq!(r.sigma_xyz[0], 0.0);
    }

    #[test]
    fn rotation_spread_matches_generator() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = Normal::new(0.0, 0.01).unwrap();
        let base = exp_so3([0.3, 0.0, 0.0]);
        let poses: Vec<Pose> = (0..4000)
            .map(|_| Pose::new(mat_mul(&exp_so3([0.0, 0.0, n.sample(&mut rng)]), &base), [0.0; 3]))
            .collect();
        let r = pose_noise_analysis(&poses).unwrap();
        assert!((r.sigma_rot / 0.01 - 1.0).abs() < 0.1, "{}", r.sigma_rot);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [0.7, 1.0, 2.0, 3.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        assert!((loglog_slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }
}

//! Small fixed-size and dense helpers. Matrices are row-major.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY3: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn normalize(a: Vec3) -> Vec3 {
    scale(a, 1.0 / norm(a))
}

#[inline]
pub fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose(m: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[j][i] = *v;
        }
    }
    out
}

pub fn det3(m: &Mat3) -> f64 {
    dot(m[0], cross(m[1], m[2]))
}

pub fn skew(v: Vec3) -> Mat3 {
    [[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]]
}

/// Rotation matrix for the axis-angle vector `w` (Rodrigues).
pub fn exp_so3(w: Vec3) -> Mat3 {
    let theta2 = dot(w, w);
    let k = skew(w);
    let k2 = mat_mul(&k, &k);
    let (a, b) = if theta2 < 1e-16 {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let mut r = IDENTITY3;
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] += a * k[i][j] + b * k2[i][j];
        }
    }
    r
}

/// Axis-angle vector of a rotation matrix.
pub fn log_so3(r: &Mat3) -> Vec3 {
    let cos = (r[0][0] + r[1][1] + r[2][2] - 1.0) * 0.5;
    let v = [r[2][1] - r[1][2], r[0][2] - r[2][0], r[1][0] - r[0][1]];
    let sin = 0.5 * norm(v);
    let theta = sin.atan2(cos);
    if theta < 1e-8 {
        return scale(v, 0.5);
    }
    if core::f64::consts::PI - theta < 1e-6 {
        // Near π the antisymmetric part vanishes; recover the axis from the
        // symmetric part instead.
        let diag = [r[0][0], r[1][1], r[2][2]];
        let i = (0..3)
            .max_by(|&a, &b| diag[a].partial_cmp(&diag[b]).unwrap())
            .unwrap();
        let mut axis = [0.0; 3];
        axis[i] = ((diag[i] + 1.0) * 0.5).max(0.0).sqrt();
        for j in 0..3 {
            if j != i {
                axis[j] = (r[i][j] + r[j][i]) / (4.0 * axis[i]);
            }
        }
        return scale(normalize(axis), theta);
    }
    scale(v, theta / (2.0 * sin))
}

/// Rotation angle of `r` in radians.
pub fn rotation_angle(r: &Mat3) -> f64 {
    norm(log_so3(r))
}

/// Re-project an almost-orthonormal matrix onto SO(3) via Gram-Schmidt on
/// the rows.
pub fn orthonormalize(r: &Mat3) -> Mat3 {
    let x = normalize(r[0]);
    let y0 = sub(r[1], scale(x, dot(x, r[1])));
    let y = normalize(y0);
    let z = cross(x, y);
    [x, y, z]
}

/// Unit quaternion `[w, x, y, z]` with `w ≥ 0`.
pub fn mat_to_quat(r: &Mat3) -> [f64; 4] {
    let tr = r[0][0] + r[1][1] + r[2][2];
    let q = if tr > 0.0 {
        let s = (tr + 1.0).sqrt() * 2.0;
        [
            0.25 * s,
            (r[2][1] - r[1][2]) / s,
            (r[0][2] - r[2][0]) / s,
            (r[1][0] - r[0][1]) / s,
        ]
    } else if r[0][0] > r[1][1] && r[0][0] > r[2][2] {
        let s = (1.0 + r[0][0] - r[1][1] - r[2][2]).sqrt() * 2.0;
        [
            (r[2][1] - r[1][2]) / s,
            0.25 * s,
            (r[0][1] + r[1][0]) / s,
            (r[0][2] + r[2][0]) / s,
        ]
    } else if r[1][1] > r[2][2] {
        let s = (1.0 + r[1][1] - r[0][0] - r[2][2]).sqrt() * 2.0;
        [
            (r[0][2] - r[2][0]) / s,
            (r[0][1] + r[1][0]) / s,
            0.25 * s,
            (r[1][2] + r[2][1]) / s,
        ]
    } else {
        let s = (1.0 + r[2][2] - r[0][0] - r[1][1]).sqrt() * 2.0;
        [
            (r[1][0] - r[0][1]) / s,
            (r[0][2] + r[2][0]) / s,
            (r[1][2] + r[2][1]) / s,
            0.25 * s,
        ]
    };
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let sign = if q[0] < 0.0 { -1.0 } else { 1.0 };
    [
        sign * q[0] / n,
        sign * q[1] / n,
        sign * q[2] / n,
        sign * q[3] / n,
    ]
}

pub fn quat_to_mat(q: [f64; 4]) -> Mat3 {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let [w, x, y, z] = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

/// Solve the dense `n×n` system `a·x = b` in place by Gaussian elimination
/// with partial pivoting. Returns `None` when a pivot falls below
/// `rel_tol · max|a|`.
pub fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize, rel_tol: f64) -> Option<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| {
                a[i * n + col]
                    .abs()
                    .partial_cmp(&a[j * n + col].abs())
                    .unwrap()
            })
            .unwrap();
        if a[pivot_row * n + col].abs() <= rel_tol * scale {
            return None;
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        let p = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / p;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row * n + k] * b[k];
        }
        b[row] = s / a[row * n + row];
    }
    Some(())
}

/// Cholesky factor `L` (row-major, lower) of a symmetric positive-definite
/// matrix, or `None` if a pivot is not positive beyond `rel_tol · max diag`.
pub fn cholesky(a: &[f64], n: usize, rel_tol: f64) -> Option<Vec<f64>> {
    let max_diag = (0..n).fold(0.0f64, |m, i| m.max(a[i * n + i].abs()));
    if max_diag == 0.0 || !max_diag.is_finite() {
        return None;
    }
    let mut l = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= rel_tol * max_diag {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solve `L·Lᵀ·x = b` given the factor from [`cholesky`].
pub fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Mat3, b: &Mat3, tol: f64) -> bool {
        (0..3).all(|i| (0..3).all(|j| (a[i][j] - b[i][j]).abs() < tol))
    }

    #[test]
    fn exp_log_round_trip() {
        for w in [
            [0.1, -0.2, 0.3],
            [1.0, 2.0, -0.5],
            [0.0, 0.0, 1e-10],
            [3.0, 0.0, 0.0],
        ] {
            let r = exp_so3(w);
            assert!((det3(&r) - 1.0).abs() < 1e-12);
            let back = log_so3(&r);
            assert!(close(&exp_so3(back), &r, 1e-10), "{w:?}");
        }
    }

    #[test]
    fn log_near_pi() {
        let w = scale(normalize([1.0, 2.0, 3.0]), core::f64::consts::PI - 1e-9);
        let r = exp_so3(w);
        assert!(close(&exp_so3(log_so3(&r)), &r, 1e-7));
    }

    #[test]
    fn quaternion_round_trip() {
        let r = exp_so3([0.3, -1.2, 2.0]);
        let q = mat_to_quat(&r);
        assert!(close(&quat_to_mat(q), &r, 1e-12));
        assert!(q[0] >= 0.0);
    }

    #[test]
    fn dense_and_cholesky_agree() {
        let a = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        let b = [1.0, -2.0, 0.5];
        let mut a1 = a;
        let mut b1 = b;
        solve_dense(&mut a1, &mut b1, 3, 1e-14).unwrap();
        let l = cholesky(&a, 3, 1e-14).unwrap();
        let x = cholesky_solve(&l, 3, &b);
        for i in 0..3 {
            assert!((x[i] - b1[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_systems_rejected() {
        let mut a = [1.0, 2.0, 2.0, 4.0];
        let mut b = [1.0, 2.0];
        assert!(solve_dense(&mut a, &mut b, 2, 1e-12).is_none());
        assert!(cholesky(&[1.0, 1.0, 1.0, 1.0], 2, 1e-12).is_none());
    }
}

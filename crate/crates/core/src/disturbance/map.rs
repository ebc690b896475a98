use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::DisturbanceError;
use crate::synth::PIPE_RADIUS_M;

/// Basis over the pipe cross-section in normalized coordinates
/// `(y/R, z/R)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Basis {
    /// Monomials `u^i v^j` with `i + j ≤ degree`.
    Polynomial { degree: usize },
    /// A constant plus Gaussian bumps on a `grid × grid` lattice over
    /// `[-1, 1]²` with standard deviation `width`.
    Rbf { grid: usize, width: f64 },
}

impl Default for Basis {
    fn default() -> Self {
        Basis::Polynomial { degree: 4 }
    }
}

impl Basis {
    pub fn len(&self) -> usize {
        match *self {
            Basis::Polynomial { degree } => (degree + 1) * (degree + 2) / 2,
            Basis::Rbf { grid, .. } => 1 + grid * grid,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<(), DisturbanceError> {
        match *self {
            Basis::Polynomial { degree } if degree > 12 => Err(DisturbanceError::BadBasis("degree above 12")),
            Basis::Rbf { grid, .. } if !(2..=20).contains(&grid) => Err(DisturbanceError::BadBasis("grid outside 2..=20")),
            Basis::Rbf { width, .. } if !(width > 0.0 && width.is_finite()) => {
                Err(DisturbanceError::BadBasis("width must be positive"))
            }
            _ => Ok(()),
        }
    }

    /// Basis values at normalized `(u, v)`, written to `out`.
    pub fn eval_into(&self, u: f64, v: f64, out: &mut Vec<f64>) {
        out.clear();
        match *self {
            Basis::Polynomial { degree } => {
                for total in 0..=degree {
                    for i in (0..=total).rev() {
                        out.push(u.powi(i as i32) * v.powi((total - i) as i32));
                    }
                }
            }
            Basis::Rbf { grid, width } => {
                out.push(1.0);
                let s = -0.5 / (width * width);
                for a in 0..grid {
                    let cz = -1.0 + 2.0 * a as f64 / (grid - 1) as f64;
                    for b in 0..grid {
                        let cy = -1.0 + 2.0 * b as f64 / (grid - 1) as f64;
                        out.push((s * ((u - cy).powi(2) + (v - cz).powi(2))).exp());
                    }
                }
            }
        }
    }
}

/// Mean force/torque acting on the vehicle.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Wrench {
    /// Lateral force, N.
    pub fy: f64,
    /// Vertical force, N.
    pub fz: f64,
    /// Roll torque, N·m.
    pub tau_x: f64,
}

impl Wrench {
    pub fn to_array(&self) -> [f64; 3] {
        [self.fy, self.fz, self.tau_x]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self {
            fy: a[0],
            fz: a[1],
            tau_x: a[2],
        }
    }
}

/// A wrench measured at a position in the cross-section, meters.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DisturbanceSample {
    #[cfg_attr(feature = "serde", serde(rename = "y_m"))]
    pub y: f64,
    #[cfg_attr(feature = "serde", serde(rename = "z_m"))]
    pub z: f64,
    #[cfg_attr(feature = "serde", serde(rename = "fy_N"))]
    pub fy: f64,
    #[cfg_attr(feature = "serde", serde(rename = "fz_N"))]
    pub fz: f64,
    #[cfg_attr(feature = "serde", serde(rename = "taux_Nm"))]
    pub tau_x: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChannelCoeffs {
    pub fy: Vec<f64>,
    pub fz: Vec<f64>,
    pub tau_x: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DisturbanceMap {
    pub basis: Basis,
    pub coeffs: ChannelCoeffs,
    pub lambda: f64,
    /// Pipe radius used to normalize positions, m.
    pub radius_m: f64,
    /// In-sample residual RMSE per channel.
    pub residual_rmse: Wrench,
}

impl DisturbanceMap {
    fn channels(&self) -> [&[f64]; 3] {
        [&self.coeffs.fy, &self.coeffs.fz, &self.coeffs.tau_x]
    }

    /// Euclidean norm of all coefficients.
    pub fn coeff_norm(&self) -> f64 {
        self.channels()
            .iter()
            .flat_map(|c| c.iter())
            .map(|c| c * c)
            .sum::<f64>()
            .sqrt()
    }
}

fn inside(y: f64, z: f64, r: f64) -> bool {
    y.is_finite() && z.is_finite() && y * y + z * z <= r * r * (1.0 + 1e-9)
}

/// Ridge regression per channel, minimizing `‖Φc − f‖² + λ‖c‖²`.
pub fn fit_disturbance_map(
    samples: &[DisturbanceSample],
    basis: Basis,
    lambda: f64,
) -> Result<DisturbanceMap, DisturbanceError> {
    basis.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(DisturbanceError::BadLambda);
    }
    let m = basis.len();
    if samples.len() < 3 * m {
        return Err(DisturbanceError::InsufficientData {
            need: 3 * m,
            got: samples.len(),
        });
    }
    let r = PIPE_RADIUS_M;
    // Augmented least squares [Φ; √λ·I] c = [f; 0], row-major, three
    // right-hand sides. QR avoids squaring the condition number.
    let rows = samples.len() + m;
    let mut a = vec![0.0; rows * m];
    let mut b = vec![0.0; rows * 3];
    let mut phi = Vec::with_capacity(m);
    for (i, s) in samples.iter().enumerate() {
        if ![s.fy, s.fz, s.tau_x].iter().all(|v| v.is_finite()) {
            return Err(DisturbanceError::NonFinite);
        }
        if !inside(s.y, s.z, r) {
            return Err(DisturbanceError::OutsidePipe { y: s.y, z: s.z });
        }
        basis.eval_into(s.y / r, s.z / r, &mut phi);
        a[i * m..(i + 1) * m].copy_from_slice(&phi);
        b[i * 3..i * 3 + 3].copy_from_slice(&[s.fy, s.fz, s.tau_x]);
    }
    let sl = lambda.sqrt();
    for j in 0..m {
        a[(samples.len() + j) * m + j] = sl;
    }
    let [fy, fz, tau_x] = qr_least_squares(&mut a, &mut b, rows, m, 1e-10)?;
    let mut map = DisturbanceMap {
        basis,
        coeffs: ChannelCoeffs { fy, fz, tau_x },
        lambda,
        radius_m: r,
        residual_rmse: Wrench::default(),
    };
    let mut sq = [0.0; 3];
    for s in samples {
        let w = eval_disturbance_map(&map, s.y, s.z)?;
        for (acc, (a, b)) in sq.iter_mut().zip(w.to_array().iter().zip([s.fy, s.fz, s.tau_x])) {
            *acc += (a - b).powi(2);
        }
    }
    let n = samples.len() as f64;
    map.residual_rmse = Wrench::from_array(sq.map(|v| (v / n).sqrt()));
    Ok(map)
}

/// Householder QR solve of `a x = b` in the least-squares sense for three
/// right-hand sides; `Singular` if a pivot falls below `rel_tol` of the
/// largest column norm.
fn qr_least_squares(
    a: &mut [f64],
    b: &mut [f64],
    rows: usize,
    m: usize,
    rel_tol: f64,
) -> Result<[Vec<f64>; 3], DisturbanceError> {
    let scale = (0..m)
        .map(|j| (0..rows).map(|i| a[i * m + j].powi(2)).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);
    if !(scale > 0.0) {
        return Err(DisturbanceError::Singular);
    }
    let mut diag = vec![0.0; m];
    for k in 0..m {
        let norm = (k..rows).map(|i| a[i * m + k].powi(2)).sum::<f64>().sqrt();
        if !(norm > rel_tol * scale) {
            return Err(DisturbanceError::Singular);
        }
        let alpha = if a[k * m + k] > 0.0 { -norm } else { norm };
        // v = x − αe₁ stored in place of column k.
        a[k * m + k] -= alpha;
        let vnorm2: f64 = (k..rows).map(|i| a[i * m + k].powi(2)).sum();
        for j in k + 1..m {
            let d: f64 = (k..rows).map(|i| a[i * m + k] * a[i * m + j]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..rows {
                a[i * m + j] -= d * a[i * m + k];
            }
        }
        for c in 0..3 {
            let d: f64 = (k..rows).map(|i| a[i * m + k] * b[i * 3 + c]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..rows {
                b[i * 3 + c] -= d * a[i * m + k];
            }
        }
        diag[k] = alpha;
    }
    Ok([0, 1, 2].map(|c| {
        let mut x = vec![0.0; m];
        for k in (0..m).rev() {
            let s: f64 = (k + 1..m).map(|j| a[k * m + j] * x[j]).sum();
            x[k] = (b[k * 3 + c] - s) / diag[k];
        }
        x
    }))
}

pub fn eval_disturbance_map(map: &DisturbanceMap, y: f64, z: f64) -> Result<Wrench, DisturbanceError> {
    let r = map.radius_m;
    if !inside(y, z, r) {
        return Err(DisturbanceError::OutsidePipe { y, z });
    }
    let mut phi = Vec::with_capacity(map.basis.len());
    map.basis.eval_into(y / r, z / r, &mut phi);
    let dot = |c: &[f64]| c.iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>();
    let [a, b, c] = map.channels();
    Ok(Wrench {
        fy: dot(a),
        fz: dot(b),
        tau_x: dot(c),
    })
}

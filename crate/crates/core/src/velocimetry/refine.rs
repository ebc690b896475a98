use super::CostSurface;
#[allow(unused_imports)]
use num_traits::Float;

/// Subpixel result around an integer minimum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Refinement {
    pub du: f64,
    pub dv: f64,
    /// Determinant of the fitted Hessian `[[2a4, a3], [a3, 2a5]]`.
    pub det: f64,
    /// `sqrt(det)`.
    pub conf: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum Discard {
    #[error("integer minimum on the search-grid boundary")]
    OnBoundary,
    #[error("fitted surface is not a minimum (det A = {det})")]
    NotAMinimum { det: f64 },
    #[error("fitted minimum ({du}, {dv}) lies outside the 3x3 neighborhood")]
    OutOfRange { du: f64, dv: f64 },
}

/// Least-squares coefficients `[a0, a1, a2, a3, a4, a5]` of
/// `a0 + a1·u + a2·v + a3·uv + a4·u² + a5·v²` through the 3×3 samples
/// `s[dv + 1][du + 1]`, `du, dv ∈ {-1, 0, 1}`.
///
/// On this grid `u`, `v` and `uv` are orthogonal to every other basis
/// function, which leaves a 3×3 system for `a0, a4, a5` solved in closed
/// form.
pub fn fit_quadratic(s: &[[f64; 3]; 3]) -> [f64; 6] {
    let mut s0 = 0.0;
    let mut su = 0.0;
    let mut sv = 0.0;
    let mut suv = 0.0;
    let mut su2 = 0.0;
    let mut sv2 = 0.0;
    for (jv, row) in s.iter().enumerate() {
        let v = jv as f64 - 1.0;
        for (ju, &j) in row.iter().enumerate() {
            let u = ju as f64 - 1.0;
            s0 += j;
            su += u * j;
            sv += v * j;
            suv += u * v * j;
            su2 += u * u * j;
            sv2 += v * v * j;
        }
    }
    // Normal equations for (a0, a4, a5):
    //   9 a0 + 6 a4 + 6 a5 = s0
    //   6 a0 + 6 a4 + 4 a5 = su2
    //   6 a0 + 4 a4 + 6 a5 = sv2
    let sum45 = (su2 + sv2 - 4.0 * s0 / 3.0) / 2.0;
    let diff45 = (su2 - sv2) / 2.0;
    let a4 = (sum45 + diff45) / 2.0;
    let a5 = (sum45 - diff45) / 2.0;
    let a0 = (s0 - 6.0 * sum45) / 9.0;
    [a0, su / 6.0, sv / 6.0, suv / 4.0, a4, a5]
}

/// Fit a quadratic to a 3×3 neighborhood and return the offset of its
/// minimum from the center sample.
pub fn refine_neighborhood(s: &[[f64; 3]; 3]) -> Result<Refinement, Discard> {
    let a = fit_quadratic(s);
    let (h11, h12, h22) = (2.0 * a[4], a[3], 2.0 * a[5]);
    let det = h11 * h22 - h12 * h12;
    // A positive determinant alone also admits maxima; require a positive
    // definite Hessian.
    if det.is_nan() || det <= 0.0 || h11 <= 0.0 {
        return Err(Discard::NotAMinimum { det });
    }
    let (b1, b2) = (-a[1], -a[2]);
    let du = (b1 * h22 - h12 * b2) / det;
    let dv = (h11 * b2 - h12 * b1) / det;
    if du.abs() > 1.0 || dv.abs() > 1.0 {
        return Err(Discard::OutOfRange { du, dv });
    }
    Ok(Refinement {
        du,
        dv,
        det,
        conf: det.sqrt(),
    })
}

/// Quadratic refinement around the integer minimum `(u, v)` of `cost`.
/// Minima without a full 3×3 neighborhood inside the grid are discarded.
pub fn quadratic_refine(cost: &CostSurface, (u, v): (i32, i32)) -> Result<Refinement, Discard> {
    if !cost.contains(u - 1, v - 1) || !cost.contains(u + 1, v + 1) {
        return Err(Discard::OnBoundary);
    }
    let mut s = [[0.0; 3]; 3];
    for (jv, row) in s.iter_mut().enumerate() {
        for (ju, cell) in row.iter_mut().enumerate() {
            *cell = cost.get(u + ju as i32 - 1, v + jv as i32 - 1);
        }
    }
    refine_neighborhood(&s)
}

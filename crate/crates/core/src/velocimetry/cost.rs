use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::BlurredFrame;

/// Energies below this are treated as an empty patch.
pub const ENERGY_EPS: f64 = 1e-12;

/// Normalized-SSD cost over the displacement grid
/// `u ∈ [-u_max, u_max]`, `v ∈ [-v_max, v_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CostSurface {
    pub u_max: i32,
    pub v_max: i32,
    /// Row-major in `v`, i.e. `values[(v + v_max) * (2·u_max + 1) + (u + u_max)]`.
    pub values: Vec<f64>,
}

impl CostSurface {
    pub fn from_fn(u_max: i32, v_max: i32, mut f: impl FnMut(i32, i32) -> f64) -> Self {
        let mut values = Vec::with_capacity(((2 * u_max + 1) * (2 * v_max + 1)) as usize);
        for v in -v_max..=v_max {
            for u in -u_max..=u_max {
                values.push(f(u, v));
            }
        }
        Self {
            u_max,
            v_max,
            values,
        }
    }

    #[inline]
    pub fn cols(&self) -> usize {
        (2 * self.u_max + 1) as usize
    }

    #[inline]
    pub fn get(&self, u: i32, v: i32) -> f64 {
        self.values[((v + self.v_max) as usize) * self.cols() + (u + self.u_max) as usize]
    }

    pub fn contains(&self, u: i32, v: i32) -> bool {
        u.abs() <= self.u_max && v.abs() <= self.v_max
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum PatchError {
    #[error("zero-energy reference patch")]
    EmptyReference,
    #[error("zero-energy displaced patch at ({u}, {v})")]
    EmptyDisplaced { u: i32, v: i32 },
    #[error("patch and search range leave the frame")]
    OutOfFrame,
}

/// Geometry of one template-matching problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatchSpec {
    /// Top-left corner of the reference patch in the current frame.
    pub x0: usize,
    pub y0: usize,
    pub window: usize,
    pub u_max: i32,
    pub v_max: i32,
}

#[inline]
fn ssd(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            let d = x[k] - y[k];
            acc[k] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        let d = x - y;
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Evaluate the normalized SSD between the reference patch of `curr` and
/// the patch of `prev` displaced by `-(u, v)`, for every displacement.
///
/// A displacement `(u, v)` means content moved by `(u, v)` pixels from
/// `prev` to `curr`, so `J(u, v) = 0` when `curr(x, y) = prev(x - u, y - v)`
/// over the patch. The SSD is divided by `sqrt(E_curr · E_prev(u, v))`,
/// the energies being sums of squared intensities.
pub fn cost_surface(
    curr: &BlurredFrame,
    prev: &BlurredFrame,
    spec: PatchSpec,
) -> Result<CostSurface, PatchError> {
    let PatchSpec {
        x0,
        y0,
        window: w,
        u_max,
        v_max,
    } = spec;
    let (um, vm) = (u_max as usize, v_max as usize);
    if x0 < um
        || y0 < vm
        || x0 + w + um > curr.width
        || y0 + w + vm > curr.height
        || prev.width != curr.width
        || prev.height != curr.height
    {
        return Err(PatchError::OutOfFrame);
    }

    let e_curr: f64 = (0..w)
        .map(|j| {
            let r = &curr.row(y0 + j)[x0..x0 + w];
            r.iter().map(|v| v * v).sum::<f64>()
        })
        .sum();
    if e_curr < ENERGY_EPS {
        return Err(PatchError::EmptyReference);
    }

    // Summed-area table of prev² over the search region.
    let rx = x0 - um;
    let ry = y0 - vm;
    let rw = w + 2 * um;
    let rh = w + 2 * vm;
    let stride = rw + 1;
    let mut sat = alloc::vec![0.0f64; stride * (rh + 1)];
    for j in 0..rh {
        let row = &prev.row(ry + j)[rx..rx + rw];
        let mut run = 0.0;
        for (i, v) in row.iter().enumerate() {
            run += v * v;
            sat[(j + 1) * stride + i + 1] = sat[j * stride + i + 1] + run;
        }
    }
    let region_energy = |ox: usize, oy: usize| {
        sat[(oy + w) * stride + ox + w] - sat[oy * stride + ox + w] - sat[(oy + w) * stride + ox]
            + sat[oy * stride + ox]
    };

    let mut values = Vec::with_capacity((2 * um + 1) * (2 * vm + 1));
    for v in -v_max..=v_max {
        for u in -u_max..=u_max {
            // Displaced patch origin in prev, relative to the region.
            let ox = (um as i32 - u) as usize;
            let oy = (vm as i32 - v) as usize;
            let e_prev = region_energy(ox, oy);
            if e_prev < ENERGY_EPS {
                return Err(PatchError::EmptyDisplaced { u, v });
            }
            let px = rx + ox;
            let py = ry + oy;
            let mut d = 0.0;
            for j in 0..w {
                d += ssd(&curr.row(y0 + j)[x0..x0 + w], &prev.row(py + j)[px..px + w]);
            }
            values.push(d / (e_curr * e_prev).sqrt());
        }
    }
    Ok(CostSurface {
        u_max,
        v_max,
        values,
    })
}

/// Integer argmin of the cost grid. Ties go to the smallest `|u| + |v|`,
/// then to the lexicographically smallest `(u, v)`.
pub fn match_patch(cost: &CostSurface) -> (i32, i32) {
    let mut best = (0i32, 0i32);
    let mut best_key = (f64::INFINITY, i32::MAX, i32::MAX, i32::MAX);
    for v in -cost.v_max..=cost.v_max {
        for u in -cost.u_max..=cost.u_max {
            let j = cost.get(u, v);
            let key = (j, u.abs() + v.abs(), u, v);
            let better = j < best_key.0
                || (j == best_key.0
                    && (key.1, key.2, key.3) < (best_key.1, best_key.2, best_key.3));
            if better {
                best_key = key;
                best = (u, v);
            }
        }
    }
    best
}

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::event::EventFrame;

/// Stacked and smoothed event image used for template matching.
#[derive(Clone, Debug, PartialEq)]
pub struct BlurredFrame {
    pub width: usize,
    pub height: usize,
    /// Index of the newest frame in the stack.
    pub k: u64,
    pub data: Vec<f64>,
}

impl BlurredFrame {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            k: 0,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            k: 0,
            data,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Left-right mirror about the vertical image axis.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        for y in 0..self.height {
            out.data[y * self.width..(y + 1) * self.width].reverse();
        }
        out
    }
}

/// Normalized 1-D Gaussian taps; the 2-D kernel is their outer product.
pub fn gaussian_kernel_1d(size: usize, sigma: f64) -> Vec<f64> {
    assert!(size % 2 == 1, "kernel size must be odd");
    let c = (size / 2) as f64;
    let mut taps: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - c;
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);
    taps
}

/// Reflect an out-of-range index back into `[0, n)` without repeating the
/// edge sample (`-1 → 1`, `n → n-2`).
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let n = n as isize;
    let period = 2 * (n - 1);
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - m;
    }
    m as usize
}

/// Separable convolution of a dense image with `taps` along both axes.
pub fn blur_separable(src: &[f64], width: usize, height: usize, taps: &[f64]) -> Vec<f64> {
    let r = (taps.len() / 2) as isize;
    let mut tmp = vec![0.0; width * height];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        let out = &mut tmp[y * width..(y + 1) * width];
        let ru = r as usize;
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            if x >= ru && x + ru < width {
                for (w, v) in taps.iter().zip(&row[x - ru..]) {
                    acc += w * v;
                }
            } else {
                for (k, w) in taps.iter().enumerate() {
                    acc += w * row[reflect(x as isize + k as isize - r, width)];
                }
            }
            *o = acc;
        }
    }
    let mut dst = vec![0.0; width * height];
    for y in 0..height {
        for (k, w) in taps.iter().enumerate() {
            let sy = reflect(y as isize + k as isize - r, height);
            let src_row = &tmp[sy * width..(sy + 1) * width];
            let dst_row = &mut dst[y * width..(y + 1) * width];
            for (d, s) in dst_row.iter_mut().zip(src_row) {
                *d += w * s;
            }
        }
    }
    dst
}

/// Sum the given frames and blur the sum once. Convolution is linear, so
/// this equals the sum of the individually blurred frames.
pub fn sum_and_blur(frames: &[EventFrame], taps: &[f64]) -> BlurredFrame {
    let first = &frames[0];
    let (width, height) = (first.width, first.height);
    let mut acc = vec![0.0f64; width * height];
    for f in frames {
        debug_assert_eq!((f.width, f.height), (width, height));
        for (a, v) in acc.iter_mut().zip(&f.data) {
            *a += f64::from(*v);
        }
    }
    BlurredFrame {
        width,
        height,
        k: frames.last().map_or(0, |f| f.k),
        data: blur_separable(&acc, width, height, taps),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let g = gaussian_kernel_1d(7, 1.75);
        assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for i in 0..3 {
            assert_eq!(g[i], g[6 - i]);
        }
    }

    #[test]
    fn reflect_indices() {
        assert_eq!(reflect(-1, 5), 1);
        assert_eq!(reflect(-2, 5), 2);
        assert_eq!(reflect(5, 5), 3);
        assert_eq!(reflect(6, 5), 2);
        assert_eq!(reflect(3, 5), 3);
        assert_eq!(reflect(-3, 1), 0);
        assert_eq!(reflect(-4, 2), 0);
    }

    #[test]
    fn blur_preserves_mass_away_from_borders() {
        let mut img = vec![0.0; 20 * 20];
        img[10 * 20 + 10] = 3.0;
        let out = blur_separable(&img, 20, 20, &gaussian_kernel_1d(7, 1.75));
        assert!((out.iter().sum::<f64>() - 3.0).abs() < 1e-12);
    }
}

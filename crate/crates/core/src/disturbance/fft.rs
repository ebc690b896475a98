#[allow(unused_imports)]
use num_traits::Float;

/// In-place forward DFT, `X_k = Σ x_n e^{-2πi kn/N}`, of interleaved
/// `(re, im)` pairs. `re.len()` must be a power of two.
pub fn fft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    assert_eq!(n, im.len());
    assert!(n.is_power_of_two(), "length must be a power of two");
    if n < 2 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * core::f64::consts::PI / len as f64;
        let half = len / 2;
        for k in 0..half {
            // Twiddles from the angle directly; a running product drifts.
            let (s, c) = (ang * k as f64).sin_cos();
            let mut i = k;
            while i < n {
                let j = i + half;
                let tr = re[j] * c - im[j] * s;
                let ti = re[j] * s + im[j] * c;
                re[j] = re[i] - tr;
                im[j] = im[i] - ti;
                re[i] += tr;
                im[i] += ti;
                i += len;
            }
        }
        len <<= 1;
    }
}

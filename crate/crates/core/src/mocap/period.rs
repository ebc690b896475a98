use alloc::vec::Vec;

/// Complete blink periods in a pixel's stack (oldest first), in µs.
///
/// Everything up to and including the first positive→negative transition is
/// dropped, as are any negative entries right after it. From there each
/// negative→positive transition closes one period whose length is the sum of
/// `|delta|` since the previous closing point. The trailing partial period is
/// ignored.
pub fn periods(stack: &[i16]) -> Vec<u32> {
    let mut out = Vec::new();
    let Some(cut) = stack.windows(2).position(|w| w[0] > 0 && w[1] < 0) else {
        return out;
    };
    let rest = &stack[cut + 2..];
    let Some(start) = rest.iter().position(|&d| d > 0) else {
        return out;
    };
    let rest = &rest[start..];
    let mut acc = 0u32;
    let mut prev_neg = false;
    for &d in rest {
        if d > 0 && prev_neg {
            out.push(acc);
            acc = 0;
        }
        acc += u32::from(d.unsigned_abs());
        prev_neg = d < 0;
    }
    out
}

/// Median of [`periods`], or `None` with fewer than two complete periods.
pub fn estimate_period(stack: &[i16]) -> Option<f64> {
    let mut p = periods(stack);
    if p.len() < 2 {
        return None;
    }
    p.sort_unstable();
    let n = p.len();
    Some(if n % 2 == 1 {
        f64::from(p[n / 2])
    } else {
        (f64::from(p[n / 2 - 1]) + f64::from(p[n / 2])) / 2.0
    })
}

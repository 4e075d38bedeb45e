//! Composite quadrature of closed-form integrands.

/// Composite Simpson rule on `[a, b]` with `intervals` subintervals
/// (rounded up to an even count).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = (intervals.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Simpson quadrature of equally spaced samples with spacing `h`. An odd
/// number of intervals closes with the 3/8 rule on the last three.
pub fn simpson_samples(samples: &[f64], h: f64) -> f64 {
    let m = samples.len();
    match m {
        0 | 1 => 0.0,
        2 => 0.5 * h * (samples[0] + samples[1]),
        3 => h / 3.0 * (samples[0] + 4.0 * samples[1] + samples[2]),
        _ => {
            let intervals = m - 1;
            let (simpson_end, tail) = if intervals.is_multiple_of(2) {
                (m - 1, 0.0)
            } else {
                let s = &samples[m - 4..];
                (m - 4, 3.0 * h / 8.0 * (s[0] + 3.0 * s[1] + 3.0 * s[2] + s[3]))
            };
            if simpson_end == 0 {
                return tail;
            }
            let mut sum = samples[0] + samples[simpson_end];
            for (i, v) in samples.iter().enumerate().take(simpson_end).skip(1) {
                sum += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            sum * h / 3.0 + tail
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_cubics() {
        let f = |x: f64| 2.0 * x.powi(3) - x + 1.0;
        let exact = 0.5 * 16.0 - 2.0 + 2.0;
        assert!((simpson(f, 0.0, 2.0, 2) - exact).abs() < 1e-13);
        for m in [4usize, 5, 6, 9, 10] {
            let h = 2.0 / (m - 1) as f64;
            let s: Vec<f64> = (0..m).map(|i| f(i as f64 * h)).collect();
            assert!((simpson_samples(&s, h) - exact).abs() < 1e-12, "m={m}");
        }
    }

    #[test]
    fn converges_on_exponential() {
        let v = simpson(|x: f64| x.exp(), 0.0, 1.0, 1000);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13);
    }
}

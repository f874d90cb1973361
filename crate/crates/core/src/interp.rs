//! Four-point Lagrange stencils on uniform nodes.

/// Base index and weights of the cubic stencil at fractional index `x`.
///
/// The base is clamped to `[0, n - 4]`; `x` is expected in `[0, n - 1]`.
#[inline]
pub fn cubic_stencil(x: f64, n: usize) -> (usize, [f64; 4]) {
    debug_assert!(n >= 4);
    let max_base = (n - 4) as f64;
    let base = (x.floor() - 1.0).clamp(0.0, max_base);
    let t = x - base;
    let w0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    let w1 = t * (t - 2.0) * (t - 3.0) / 2.0;
    let w2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    let w3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    (base as usize, [w0, w1, w2, w3])
}

/// Cubic interpolation of nodal samples `v` with spacing `h` starting at `x0`.
#[inline]
pub fn cubic_1d(v: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let (b, w) = cubic_stencil((x - x0) / h, v.len());
    w[0] * v[b] + w[1] * v[b + 1] + w[2] * v[b + 2] + w[3] * v[b + 3]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics() {
        let v: Vec<f64> = (0..10).map(|i| {
            let x = i as f64 * 0.5;
            1.0 - 2.0 * x + 0.3 * x * x - 0.1 * x * x * x
        }).collect();
        for &x in &[0.0, 0.13, 1.7, 2.25, 4.49, 4.5] {
            let exact = 1.0 - 2.0 * x + 0.3 * x * x - 0.1 * x * x * x;
            assert!((cubic_1d(&v, 0.0, 0.5, x) - exact).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn weights_partition_unity_and_hit_nodes() {
        for i in 0..40 {
            let x = i as f64 * 0.17;
            let (_, w) = cubic_stencil(x, 8);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
        let (b, w) = cubic_stencil(3.0, 8);
        assert_eq!(b, 2);
        assert_eq!(w, [0.0, 1.0, 0.0, 0.0]);
        let (b, _) = cubic_stencil(7.0, 8);
        assert_eq!(b, 4);
    }
}

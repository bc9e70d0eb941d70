//! Small shared numerics: finite differences, quadrature, discrete Sobolev
//! norms and log-log slope fits used by the diagnostics.

/// First derivative of a uniformly sampled signal, second-order accurate:
/// centered in the interior, one-sided three-point stencils at the ends.
pub fn deriv1(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 3, "need at least 3 samples for derivatives");
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
    d
}

/// Second derivative, second-order accurate with one-sided ends.
pub fn deriv2(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 4, "need at least 4 samples for second derivatives");
    let h2 = h * h;
    let mut d = vec![0.0; n];
    d[0] = (2.0 * values[0] - 5.0 * values[1] + 4.0 * values[2] - values[3]) / h2;
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - 2.0 * values[i] + values[i - 1]) / h2;
    }
    d[n - 1] = (2.0 * values[n - 1] - 5.0 * values[n - 2] + 4.0 * values[n - 3] - values[n - 4]) / h2;
    d
}

/// Composite trapezoid integral of uniform samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    h * (0.5 * (values[0] + values[values.len() - 1]) + inner)
}

/// Discrete H² norm of a scalar signal over a window: L² of the signal plus
/// its first and second finite-difference derivatives, by trapezoid rule.
pub fn h2_window(values: &[f64], h: f64) -> f64 {
    let d1 = deriv1(values, h);
    let d2 = deriv2(values, h);
    let sq = |v: &[f64]| trapezoid(&v.iter().map(|x| x * x).collect::<Vec<_>>(), h);
    (sq(values) + sq(&d1) + sq(&d2)).sqrt()
}

/// Discrete H² norm of a two-component signal (Euclidean in the components).
pub fn h2_window_vec2(a: &[f64], b: &[f64], h: f64) -> f64 {
    let na = h2_window(a, h);
    let nb = h2_window(b, h);
    (na * na + nb * nb).sqrt()
}

/// Least-squares slope of log(err) against log(h): the observed order of a
/// convergence table.
pub fn fit_order(table: &[(f64, f64)]) -> f64 {
    let n = table.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(h, err) in table {
        let x = h.ln();
        let y = err.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Linear interpolation of uniformly gridded data; `frac` in units of the
/// grid spacing from sample `i0`.
#[inline]
pub fn lerp(a: f64, b: f64, w: f64) -> f64 {
    a + w * (b - a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn derivatives_of_smooth_signal() {
        let n = 512;
        let h = 1.0 / n as f64;
        let vals: Vec<f64> = (0..=n).map(|i| (2.0 * PI * i as f64 * h).sin()).collect();
        let d1 = deriv1(&vals, h);
        let d2 = deriv2(&vals, h);
        for (i, (&g1, &g2)) in d1.iter().zip(&d2).enumerate() {
            let t = i as f64 * h;
            assert!((g1 - 2.0 * PI * (2.0 * PI * t).cos()).abs() < 2e-3, "i={i}");
            assert!((g2 + (2.0 * PI) * (2.0 * PI) * (2.0 * PI * t).sin()).abs() < 0.3);
        }
    }

    #[test]
    fn trapezoid_exact_on_linear() {
        // f(x) = 1 + 20 x on [0, 1]: integral 11
        let vals: Vec<f64> = (0..=10).map(|i| 2.0 * i as f64 + 1.0).collect();
        assert!((trapezoid(&vals, 0.1) - 11.0).abs() < 1e-14);
    }

    #[test]
    fn h2_window_of_sine() {
        // ||sin(2 pi t)||_{H^2([0,1])}^2 = 1/2 + (2 pi)^2/2 + (2 pi)^4/2
        let n = 4096;
        let h = 1.0 / n as f64;
        let vals: Vec<f64> = (0..=n).map(|i| (2.0 * PI * i as f64 * h).sin()).collect();
        let w = 2.0 * PI;
        let exact = (0.5 + 0.5 * w * w + 0.5 * w.powi(4)).sqrt();
        let got = h2_window(&vals, h);
        assert!(
            (got - exact).abs() < 1e-4 * exact,
            "got {got}, exact {exact}"
        );
    }

    #[test]
    fn fit_order_recovers_slope() {
        let table: Vec<(f64, f64)> = (0..4).map(|k| {
            let h = 0.1 / 2f64.powi(k);
            (h, 3.0 * h * h)
        }).collect();
        assert!((fit_order(&table) - 2.0).abs() < 1e-12);
    }
}

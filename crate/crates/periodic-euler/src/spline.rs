//! Periodic cubic spline through uniformly spaced samples over one period.
//!
//! The interpolant is C², which is what tabulated forcing coefficients and
//! boundary signals need to honor the smoothness assumptions of the model.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SplineError {
    #[error("periodic spline needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("spline period must be positive, got {0}")]
    NonPositivePeriod(f64),
}

/// C² periodic interpolant of `values[i]` at `t_i = i * period / n`,
/// extended by exact periodicity to all of the real line.
#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    period: f64,
    h: f64,
    values: Vec<f64>,
    /// Second derivatives at the knots (natural spline moments).
    moments: Vec<f64>,
    /// Integral of the spline from t=0 to each knot.
    prefix: Vec<f64>,
}

impl PeriodicSpline {
    pub fn new(period: f64, values: Vec<f64>) -> Result<Self, SplineError> {
        if !(period > 0.0) {
            return Err(SplineError::NonPositivePeriod(period));
        }
        let n = values.len();
        if n < 3 {
            return Err(SplineError::TooFewSamples(n));
        }
        let h = period / n as f64;
        let moments = solve_periodic_moments(&values, h);

        let mut spline = PeriodicSpline {
            period,
            h,
            values,
            moments,
            prefix: Vec::new(),
        };
        // Simpson's rule with the spline's own midpoint is exact for cubics,
        // so the prefix sums integrate the interpolant exactly.
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for i in 0..n {
            let a = i as f64 * h;
            let mid = spline.eval_local(a + 0.5 * h);
            let fa = spline.values[i];
            let fb = spline.values[(i + 1) % n];
            acc += h / 6.0 * (fa + 4.0 * mid + fb);
            prefix.push(acc);
        }
        spline.prefix = prefix;
        Ok(spline)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    fn wrap(&self, t: f64) -> f64 {
        let tau = t.rem_euclid(self.period);
        // rem_euclid can return `period` itself after rounding
        if tau >= self.period {
            0.0
        } else {
            tau
        }
    }

    fn segment(&self, tau: f64) -> (usize, f64) {
        let n = self.values.len();
        let i = ((tau / self.h) as usize).min(n - 1);
        (i, tau - i as f64 * self.h)
    }

    /// Evaluation for arguments already inside [0, period).
    fn eval_local(&self, tau: f64) -> f64 {
        let n = self.values.len();
        let (i, d) = self.segment(tau);
        let j = (i + 1) % n;
        let h = self.h;
        let (ya, yb) = (self.values[i], self.values[j]);
        let (ma, mb) = (self.moments[i], self.moments[j]);
        let e = h - d;
        (ma * e * e * e + mb * d * d * d) / (6.0 * h)
            + (ya / h - ma * h / 6.0) * e
            + (yb / h - mb * h / 6.0) * d
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_local(self.wrap(t))
    }

    pub fn deriv1(&self, t: f64) -> f64 {
        let tau = self.wrap(t);
        let n = self.values.len();
        let (i, d) = self.segment(tau);
        let j = (i + 1) % n;
        let h = self.h;
        let (ma, mb) = (self.moments[i], self.moments[j]);
        let e = h - d;
        (-ma * e * e + mb * d * d) / (2.0 * h) + (self.values[j] - self.values[i]) / h
            - (mb - ma) * h / 6.0
    }

    pub fn deriv2(&self, t: f64) -> f64 {
        let tau = self.wrap(t);
        let n = self.values.len();
        let (i, d) = self.segment(tau);
        let j = (i + 1) % n;
        let h = self.h;
        (self.moments[i] * (h - d) + self.moments[j] * d) / h
    }

    /// Integral of the periodic extension from 0 to t. The full-period
    /// integral generally differs from zero; callers that require a periodic
    /// antiderivative must handle that separately.
    pub fn integral_from_zero(&self, t: f64) -> f64 {
        let periods = (t / self.period).floor();
        let tau = self.wrap(t);
        let (i, d) = self.segment(tau);
        let mut acc = periods * self.full_integral() + self.prefix[i];
        if d > 0.0 {
            let a = i as f64 * self.h;
            let fa = self.values[i];
            let fm = self.eval_local(a + 0.5 * d);
            let fb = self.eval_local(tau);
            acc += d / 6.0 * (fa + 4.0 * fm + fb);
        }
        acc
    }

    /// Integral over one full period.
    pub fn full_integral(&self) -> f64 {
        *self.prefix.last().unwrap()
    }
}

/// Solves the cyclic tridiagonal system for the spline moments:
/// `m[i-1] + 4 m[i] + m[i+1] = 6 (y[i-1] - 2 y[i] + y[i+1]) / h^2`
/// via the Sherman-Morrison correction of the open Thomas solve.
fn solve_periodic_moments(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let rhs: Vec<f64> = (0..n)
        .map(|i| {
            let im = (i + n - 1) % n;
            let ip = (i + 1) % n;
            6.0 * (y[im] - 2.0 * y[i] + y[ip]) / (h * h)
        })
        .collect();

    let diag = 4.0;
    // Rank-one split: A = T + u v^T with u = (-diag, 0, .., 1)^T scaled.
    let alpha = -diag;
    let mut d = vec![diag; n];
    d[0] = diag - alpha;
    d[n - 1] = diag - 1.0 / alpha;

    let x = thomas(&d, &rhs);
    let mut u = vec![0.0; n];
    u[0] = alpha;
    u[n - 1] = 1.0;
    let z = thomas(&d, &u);

    let factor = (x[0] + x[n - 1] / alpha) / (1.0 + z[0] + z[n - 1] / alpha);
    (0..n).map(|i| x[i] - factor * z[i]).collect()
}

/// Thomas algorithm for a tridiagonal system with unit off-diagonals and the
/// given main diagonal.
fn thomas(diag: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = 1.0 / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - c[i - 1];
        c[i] = 1.0 / m;
        d[i] = (rhs[i] - d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sin_spline(n: usize) -> PeriodicSpline {
        let samples: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).sin()).collect();
        PeriodicSpline::new(1.0, samples).unwrap()
    }

    #[test]
    fn interpolates_knots_exactly() {
        let sp = sin_spline(32);
        for i in 0..32 {
            let t = i as f64 / 32.0;
            assert!((sp.eval(t) - (2.0 * PI * t).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn approximates_between_knots() {
        let sp = sin_spline(64);
        for &t in &[0.013, 0.3, 0.49, 0.77, 0.999] {
            assert!((sp.eval(t) - (2.0 * PI * t).sin()).abs() < 1e-5, "t={t}");
            assert!((sp.deriv1(t) - 2.0 * PI * (2.0 * PI * t).cos()).abs() < 1e-3);
            assert!(
                (sp.deriv2(t) + (2.0 * PI) * (2.0 * PI) * (2.0 * PI * t).sin()).abs() < 0.05
            );
        }
    }

    #[test]
    fn periodic_extension_is_exact() {
        let sp = sin_spline(16);
        // bitwise at dyadic arguments, where t + P is exact in f64
        for &t in &[0.25, 0.5, 0.8125] {
            assert_eq!(sp.eval(t), sp.eval(t + 1.0));
            assert_eq!(sp.eval(t), sp.eval(t - 3.0));
        }
        // one ulp of wobble in t + P is all that remains elsewhere
        for &t in &[0.1, 0.45, 0.83] {
            assert!((sp.eval(t) - sp.eval(t + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn integral_matches_closed_form() {
        let sp = sin_spline(64);
        // integral of sin(2 pi s) from 0 to t is (1 - cos(2 pi t)) / (2 pi)
        for &t in &[0.25, 0.5, 0.9] {
            let exact = (1.0 - (2.0 * PI * t).cos()) / (2.0 * PI);
            assert!((sp.integral_from_zero(t) - exact).abs() < 1e-6, "t={t}");
        }
        assert!(sp.full_integral().abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(PeriodicSpline::new(1.0, vec![1.0, 2.0]).is_err());
        assert!(PeriodicSpline::new(0.0, vec![1.0, 2.0, 3.0]).is_err());
    }
}

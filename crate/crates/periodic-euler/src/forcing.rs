//! The periodic force coefficient `alpha(t)`, its cumulative integral
//! `A(t) = int_0^t alpha`, the admissibility checks, and the explicit
//! background periodic solution `(rho_ref, exp(A(t)) u_ref)`.

use crate::gas::{GasParams, PrimitiveState, RiemannPair};
use crate::spline::{PeriodicSpline, SplineError};
use std::f64::consts::TAU;
use thiserror::Error;

/// Number of sample points per period used by admissibility checks.
const VALIDATION_SAMPLES: usize = 16_384;

/// Tolerance on `int_0^P alpha = 0` and on the sign condition for `A`.
pub const INTEGRAL_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum ForcingError {
    #[error("forcing period must be positive, got {0}")]
    NonPositivePeriod(f64),
    #[error("sine term harmonic must be >= 1")]
    ZeroHarmonic,
    #[error(transparent)]
    Spline(#[from] SplineError),
}

/// One term `amplitude * sin(2 pi harmonic t / P)` of a sine series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineTerm {
    pub amplitude: f64,
    pub harmonic: u32,
}

#[derive(Debug, Clone)]
enum Kind {
    Zero,
    /// Pure sine series: satisfies `int_0^P alpha = 0` identically and has a
    /// closed-form antiderivative. Cosine or constant terms would violate
    /// the zero-mean condition, so they are not representable.
    SineSeries(Vec<SineTerm>),
    Tabulated(PeriodicSpline),
}

/// The P-periodic force coefficient `alpha(t)` in the momentum source
/// `alpha(t) rho u`. Immutable after construction; evaluations are pure.
#[derive(Debug, Clone)]
pub struct ForcingCoefficient {
    period: f64,
    kind: Kind,
}

impl ForcingCoefficient {
    pub fn zero(period: f64) -> Result<Self, ForcingError> {
        if !(period > 0.0) {
            return Err(ForcingError::NonPositivePeriod(period));
        }
        Ok(ForcingCoefficient {
            period,
            kind: Kind::Zero,
        })
    }

    pub fn sine_series(period: f64, terms: Vec<SineTerm>) -> Result<Self, ForcingError> {
        if !(period > 0.0) {
            return Err(ForcingError::NonPositivePeriod(period));
        }
        if terms.iter().any(|t| t.harmonic == 0) {
            return Err(ForcingError::ZeroHarmonic);
        }
        Ok(ForcingCoefficient {
            period,
            kind: Kind::SineSeries(terms),
        })
    }

    /// Uniform samples of alpha over one period, interpolated by a C²
    /// periodic cubic spline.
    pub fn tabulated(period: f64, samples: Vec<f64>) -> Result<Self, ForcingError> {
        Ok(ForcingCoefficient {
            period,
            kind: Kind::Tabulated(PeriodicSpline::new(period, samples)?),
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, Kind::Zero)
    }

    /// Phase reduction makes the evaluation bitwise P-periodic.
    fn phase(&self, t: f64) -> f64 {
        let tau = t.rem_euclid(self.period);
        if tau >= self.period {
            0.0
        } else {
            tau
        }
    }

    /// `alpha(t)`, exactly P-periodic.
    pub fn alpha(&self, t: f64) -> f64 {
        let tau = self.phase(t);
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::SineSeries(terms) => terms
                .iter()
                .map(|term| term.amplitude * (TAU * term.harmonic as f64 * tau / self.period).sin())
                .sum(),
            Kind::Tabulated(sp) => sp.eval(tau),
        }
    }

    /// `(alpha, alpha', alpha'')` at t. The derivatives of the tabulated kind
    /// are those of the interpolant; they bound the user's underlying
    /// function only as well as the tabulation resolves it.
    pub fn alpha_derivs(&self, t: f64) -> (f64, f64, f64) {
        let tau = self.phase(t);
        match &self.kind {
            Kind::Zero => (0.0, 0.0, 0.0),
            Kind::SineSeries(terms) => {
                let mut v = (0.0, 0.0, 0.0);
                for term in terms {
                    let w = TAU * term.harmonic as f64 / self.period;
                    let ph = w * tau;
                    v.0 += term.amplitude * ph.sin();
                    v.1 += term.amplitude * w * ph.cos();
                    v.2 -= term.amplitude * w * w * ph.sin();
                }
                v
            }
            Kind::Tabulated(sp) => (sp.eval(tau), sp.deriv1(tau), sp.deriv2(tau)),
        }
    }

    /// Cumulative integral `A(t) = int_0^t alpha(s) ds`, extended by exact
    /// periodicity: `A(t + P) = A(t)` and `A(nP) = 0` exactly. For the sine
    /// series the closed form `sum beta_k (1 - cos(2 pi k t / P)) P/(2 pi k)`
    /// is used; for tabulated data the interpolant is integrated segment-wise
    /// with Simpson's rule, which is exact for cubics.
    pub fn integral(&self, t: f64) -> f64 {
        let tau = self.phase(t);
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::SineSeries(terms) => terms
                .iter()
                .map(|term| {
                    let k = term.harmonic as f64;
                    term.amplitude * (1.0 - (TAU * k * tau / self.period).cos()) * self.period
                        / (TAU * k)
                })
                .sum(),
            Kind::Tabulated(sp) => sp.integral_from_zero(tau),
        }
    }

    /// Checks the admissibility conditions: zero mean over one period and
    /// the lower bound on `A` (strict: `A >= 0`; relaxed: `A > ln(c/u)` of
    /// the reference state, which keeps the background supersonic).
    /// Never aborts; failures are reported with the violating time.
    pub fn validate(&self, params: &GasParams, relaxed: bool) -> ForcingReport {
        let n = VALIDATION_SAMPLES;
        let c_ref = params.c_ref();

        let integral_over_period = match &self.kind {
            Kind::Zero | Kind::SineSeries(_) => 0.0,
            Kind::Tabulated(sp) => sp.full_integral(),
        };

        let mut min_a = f64::INFINITY;
        let mut argmin_a = 0.0;
        let mut min_margin = f64::INFINITY;
        let mut max_alpha: f64 = 0.0;
        let mut max_dalpha: f64 = 0.0;
        let mut max_ddalpha: f64 = 0.0;
        for i in 0..=n {
            let t = i as f64 * self.period / n as f64;
            let a = self.integral(t);
            if a < min_a {
                min_a = a;
                argmin_a = t;
            }
            min_margin = min_margin.min(a.exp() * params.u_ref - c_ref);
            let (al, d1, d2) = self.alpha_derivs(t);
            max_alpha = max_alpha.max(al.abs());
            max_dalpha = max_dalpha.max(d1.abs());
            max_ddalpha = max_ddalpha.max(d2.abs());
        }

        let mut violation = None;
        if integral_over_period.abs() > INTEGRAL_TOL {
            violation = Some(format!(
                "integral of alpha over one period is {integral_over_period:e}, not 0"
            ));
        } else if relaxed {
            let bound = (c_ref / params.u_ref).ln();
            if min_a <= bound + INTEGRAL_TOL {
                violation = Some(format!(
                    "A(t) = {min_a:e} at t = {argmin_a} does not exceed ln(c_ref/u_ref) = {bound:e}"
                ));
            }
        } else if min_a < -INTEGRAL_TOL {
            violation = Some(format!("A(t) = {min_a:e} < 0 at t = {argmin_a}"));
        }

        ForcingReport {
            valid: violation.is_none(),
            relaxed,
            integral_over_period,
            min_integral: min_a,
            argmin_integral: argmin_a,
            min_supersonic_margin: min_margin,
            max_alpha,
            max_dalpha,
            max_ddalpha,
            violation,
        }
    }
}

/// Outcome of [`ForcingCoefficient::validate`].
#[derive(Debug, Clone)]
pub struct ForcingReport {
    pub valid: bool,
    pub relaxed: bool,
    /// Quadrature estimate of `int_0^P alpha`.
    pub integral_over_period: f64,
    /// Minimum of `A(t)` over one period and where it is attained.
    pub min_integral: f64,
    pub argmin_integral: f64,
    /// Minimum of `exp(A) u_ref - c_ref` over one period.
    pub min_supersonic_margin: f64,
    pub max_alpha: f64,
    pub max_dalpha: f64,
    pub max_ddalpha: f64,
    pub violation: Option<String>,
}

/// The explicit x-independent periodic solution
/// `(rho_ref, exp(A(t)) u_ref)`; in Riemann invariants
/// `r_a(t) = exp(A(t)) u_ref / 2 - c_ref/(gamma-1)` and
/// `s_a(t) = exp(A(t)) u_ref / 2 + c_ref/(gamma-1)`.
#[derive(Debug, Clone)]
pub struct BackgroundSolution {
    params: GasParams,
    forcing: ForcingCoefficient,
}

impl BackgroundSolution {
    pub fn new(params: GasParams, forcing: ForcingCoefficient) -> Self {
        BackgroundSolution { params, forcing }
    }

    pub fn params(&self) -> &GasParams {
        &self.params
    }

    pub fn forcing(&self) -> &ForcingCoefficient {
        &self.forcing
    }

    pub fn integral(&self, t: f64) -> f64 {
        self.forcing.integral(t)
    }

    /// Background velocity `exp(A(t)) u_ref`.
    pub fn velocity(&self, t: f64) -> f64 {
        self.forcing.integral(t).exp() * self.params.u_ref
    }

    pub fn primitive(&self, t: f64) -> PrimitiveState {
        PrimitiveState {
            rho: self.params.rho_ref,
            u: self.velocity(t),
        }
    }

    pub fn riemann(&self, t: f64) -> RiemannPair {
        let half_u = 0.5 * self.velocity(t);
        let spread = self.params.c_ref() / (self.params.gamma - 1.0);
        RiemannPair {
            r: half_u - spread,
            s: half_u + spread,
        }
    }

    /// Slow eigenvalue `exp(A(t)) u_ref - c_ref` along the background.
    pub fn lambda1(&self, t: f64) -> f64 {
        self.velocity(t) - self.params.c_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gas::to_riemann;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn params() -> GasParams {
        GasParams {
            a: 1.0,
            gamma: 2.0,
            length: 1.0,
            period: 1.0,
            rho_ref: 1.0,
            u_ref: 2.0,
        }
    }

    fn single_sine(beta: f64) -> ForcingCoefficient {
        ForcingCoefficient::sine_series(
            1.0,
            vec![SineTerm {
                amplitude: beta,
                harmonic: 1,
            }],
        )
        .unwrap()
    }

    #[test]
    fn alpha_examples() {
        let zero = ForcingCoefficient::zero(1.0).unwrap();
        assert_eq!(zero.alpha(0.37), 0.0);

        let f = single_sine(0.5);
        assert!((f.alpha(0.25) - 0.5).abs() < 1e-15);
        // bitwise periodicity via phase reduction
        assert_eq!(f.alpha(1.25), f.alpha(0.25));
        assert_eq!(f.alpha(-0.75), f.alpha(0.25));
    }

    #[test]
    fn integral_examples() {
        let zero = ForcingCoefficient::zero(1.0).unwrap();
        assert_eq!(zero.integral(3.3), 0.0);

        let f = single_sine(0.5);
        // closed form: 0.5 (1 - cos(pi)) / (2 pi) = 1/(2 pi)
        assert!((f.integral(0.5) - 0.159_154_943_091_895_34).abs() < 1e-15);
        assert_eq!(f.integral(1.0), 0.0);
        assert_eq!(f.integral(7.0), 0.0);
        assert_eq!(f.integral(1.3), f.integral(0.3));
    }

    #[test]
    fn integral_cross_checked_against_quadrature() {
        // independent oracle: composite Simpson over [0, t] of alpha itself
        let f = single_sine(0.5);
        for &t in &[0.21, 0.5, 0.83] {
            let n = 20_000;
            let h = t / n as f64;
            let mut acc = 0.0;
            for i in 0..n {
                let a = i as f64 * h;
                acc += h / 6.0
                    * (f.alpha(a) + 4.0 * f.alpha(a + 0.5 * h) + f.alpha(a + h));
            }
            assert!((f.integral(t) - acc).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn validate_examples() {
        let p = params();
        let zero = ForcingCoefficient::zero(1.0).unwrap();
        let rep = zero.validate(&p, false);
        assert!(rep.valid);
        assert_eq!(rep.min_integral, 0.0);

        let f = single_sine(0.5);
        let rep = f.validate(&p, false);
        assert!(rep.valid);
        assert!(rep.min_integral.abs() < 1e-14);
        // A = beta (1 - cos) / (2 pi) is minimized at multiples of P
        assert!(rep.argmin_integral == 0.0 || rep.argmin_integral == 1.0);
        // min of exp(A) u - c at A = 0
        assert!((rep.min_supersonic_margin - (2.0 - std::f64::consts::SQRT_2)).abs() < 1e-12);
        assert!((rep.max_alpha - 0.5).abs() < 1e-6);
        assert!((rep.max_dalpha - PI).abs() < 1e-4);

        // constant 0.1 tabulated: violates the zero-mean condition
        let konst = ForcingCoefficient::tabulated(1.0, vec![0.1; 16]).unwrap();
        let rep = konst.validate(&p, false);
        assert!(!rep.valid);
        assert!((rep.integral_over_period - 0.1).abs() < 1e-12);
    }

    #[test]
    fn relaxed_mode_accepts_small_negative_dips() {
        let p = params();
        let f = single_sine(-0.1); // A dips to -0.1/pi ~ -0.032
        assert!(!f.validate(&p, false).valid);
        let rep = f.validate(&p, true);
        assert!(rep.valid, "{:?}", rep.violation);
        assert!(rep.min_integral < 0.0);
        assert!(rep.min_supersonic_margin > 0.0);
    }

    #[test]
    fn background_examples() {
        let p = params();
        let bg0 = BackgroundSolution::new(p, ForcingCoefficient::zero(1.0).unwrap());
        for &t in &[0.0, 0.4, 2.7] {
            let w = bg0.primitive(t);
            assert_eq!(w.rho, 1.0);
            assert_eq!(w.u, 2.0);
        }

        let bg = BackgroundSolution::new(p, single_sine(0.5));
        // u(0.5) = 2 exp(1/(2 pi))
        assert!((bg.velocity(0.5) - 2.345_039_212_840_04).abs() < 1e-12);
        let w = bg.primitive(1.0);
        assert_eq!(w.rho, 1.0);
        assert_eq!(w.u, 2.0);
    }

    #[test]
    fn background_riemann_consistency() {
        let p = params();
        let bg = BackgroundSolution::new(p, single_sine(0.5));
        let sqrt2 = std::f64::consts::SQRT_2;
        let q0 = BackgroundSolution::new(p, ForcingCoefficient::zero(1.0).unwrap()).riemann(0.3);
        assert!((q0.r - (1.0 - sqrt2)).abs() < 1e-15);
        assert!((q0.s - (1.0 + sqrt2)).abs() < 1e-15);

        for &t in &[0.0, 0.17, 0.5, 0.99, 3.21] {
            let q = bg.riemann(t);
            // spread is t-independent: 2 c_ref / (gamma - 1)
            assert!((q.s - q.r - 2.0 * sqrt2).abs() < 1e-14);
            let via = to_riemann(bg.primitive(t), &p).unwrap();
            assert!((q.r - via.r).abs() < 1e-14);
            assert!((q.s - via.s).abs() < 1e-14);
        }
    }

    #[test]
    fn background_satisfies_riemann_ode() {
        // centered-difference residual of r' = alpha (r + s) / 2 at random t
        let p = params();
        let bg = BackgroundSolution::new(p, single_sine(0.5));
        let h = 1e-6;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let t: f64 = rng.random_range(-2.0..3.0);
            let qp = bg.riemann(t + h);
            let qm = bg.riemann(t - h);
            let q = bg.riemann(t);
            let rhs = 0.5 * bg.forcing().alpha(t) * (q.r + q.s);
            let dr = (qp.r - qm.r) / (2.0 * h);
            let ds = (qp.s - qm.s) / (2.0 * h);
            assert!((dr - rhs).abs() <= 1e-6, "t={t} residual={}", dr - rhs);
            assert!((ds - rhs).abs() <= 1e-6);
        }
    }

    #[test]
    fn integral_periodicity_for_all_kinds() {
        let samples: Vec<f64> = (0..64)
            .map(|i| (2.0 * PI * i as f64 / 64.0).sin() * 0.3)
            .collect();
        let kinds = [
            ForcingCoefficient::zero(1.0).unwrap(),
            single_sine(0.5),
            ForcingCoefficient::tabulated(1.0, samples).unwrap(),
        ];
        for f in &kinds {
            for &t in &[0.0, 0.31, 0.77] {
                assert!((f.integral(t + 1.0) - f.integral(t)).abs() < 1e-12);
            }
            assert_eq!(f.integral(2.0), 0.0);
        }
    }

    proptest::proptest! {
        #[test]
        fn integral_is_periodic_everywhere(t in -4.0f64..4.0) {
            let f = single_sine(0.5);
            proptest::prop_assert!((f.integral(t + 1.0) - f.integral(t)).abs() < 1e-12);
            proptest::prop_assert!((f.alpha(t + 1.0) - f.alpha(t)).abs() < 1e-12);
        }
    }
}

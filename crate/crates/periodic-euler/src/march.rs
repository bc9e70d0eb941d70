//! The constructive scheme made numerical: with supersonic flow both
//! characteristic speeds are positive, so x is a valid evolution direction
//! for the Riemann-invariant system
//!
//! ```text
//! r_x + (1/lambda1) r_t = alpha(t) (r + s) / (2 lambda1)
//! s_x + (1/lambda2) s_t = alpha(t) (r + s) / (2 lambda2)
//! ```
//!
//! The solver marches columns from x = 0 to x = L with an upwind
//! discretization in t. Column x = 0 carries the extended data (boundary
//! signal for t > 0, background solution for t <= 0); the bottom row sits
//! deep enough below t = 0 that its domain of dependence never leaves the
//! background region, so it is pinned to the exact background value.

use crate::boundary::{BoundaryData, BoundaryError};
use crate::field::{Field, FieldMeta};
use crate::forcing::ForcingCoefficient;
use crate::gas::{GasParams, ParamsError, RiemannPair};
use thiserror::Error;

/// Safety factor applied to the CFL bound when sizing dx.
const CFL_SAFETY: f64 = 0.9;

/// Extra margin on the domain-of-determinacy buffer below t = 0.
const BUFFER_FACTOR: f64 = 1.25;

#[derive(Debug, Error)]
pub enum MarchError {
    #[error("invalid parameters: {0}")]
    InvalidParams(#[from] ParamsError),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("boundary evaluation failed: {0}")]
    Boundary(#[from] BoundaryError),
    #[error(
        "CFL violation at x = {x}: dx = {dx} exceeds dt * lambda1_min = {} \
         (lambda1_min = {lambda1_min}); use a larger dt or a smaller dx",
        dt * lambda1_min
    )]
    CflViolation {
        x: f64,
        lambda1_min: f64,
        dx: f64,
        dt: f64,
    },
    #[error(
        "supersonicity lost at (t = {t}, x = {x}): lambda1 = {lambda1} fell to half the \
         guaranteed floor; the perturbation left the small-epsilon regime"
    )]
    SupersonicityLoss { t: f64, x: f64, lambda1: f64 },
    #[error("invalid state at (t = {t}, x = {x}): s = {s} does not exceed r = {r}")]
    InvalidState { t: f64, x: f64, r: f64, s: f64 },
    #[error("non-finite value at (t = {t}, x = {x})")]
    NonFinite { t: f64, x: f64 },
}

/// Uniform computation grid for the marching solver, with record strides
/// for the stored [`Field`].
///
/// dt is set first from the boundary-signal resolution; dx then comes from
/// the CFL bound `dx <= dt * lambda_floor` with a 0.9 safety factor, where
/// `lambda_floor = (u_ref - c_ref)/2` is the guaranteed eigenvalue floor.
/// The t range starts at `t_min <= -1.25 L / lambda_floor` so that the
/// domain of determinacy of every x = L node with t >= 0 is covered by
/// columns whose data is the background solution.
#[derive(Debug, Clone)]
pub struct MarchGrid {
    pub dt: f64,
    pub dx: f64,
    /// Total number of t rows, including the buffer below t = 0.
    pub nt: usize,
    /// Row index of t = 0; `t_min = -(n_buf as f64) * dt`.
    pub n_buf: usize,
    /// Number of x cells; columns are 0..=nx_cells.
    pub nx_cells: usize,
    /// Every `t_stride`-th row at/above t = 0 is recorded.
    pub t_stride: usize,
    /// Every `x_stride`-th column is recorded.
    pub x_stride: usize,
}

impl MarchGrid {
    /// Builds a grid for `nt_per_period` time nodes per period covering
    /// `[0, t_max]`, recording about `record_per_period` rows per period and
    /// at most about `record_columns` columns.
    pub fn new(
        params: &GasParams,
        nt_per_period: usize,
        t_max: f64,
        record_per_period: usize,
        record_columns: usize,
    ) -> Result<Self, MarchError> {
        params.validate()?;
        if nt_per_period < 4 {
            return Err(MarchError::InvalidGrid(format!(
                "nt_per_period must be at least 4, got {nt_per_period}"
            )));
        }
        if !(t_max > 0.0) {
            return Err(MarchError::InvalidGrid(format!(
                "t_max must be positive, got {t_max}"
            )));
        }
        let lambda_floor = params.lambda_floor();
        let dt = params.period / nt_per_period as f64;

        let t_stride = if record_per_period > 0
            && record_per_period < nt_per_period
            && nt_per_period.is_multiple_of(record_per_period)
        {
            nt_per_period / record_per_period
        } else {
            1
        };

        let raw_cells = (params.length / (CFL_SAFETY * lambda_floor * dt)).ceil() as usize;
        let x_stride = raw_cells.div_ceil(record_columns.max(1)).max(1);
        let nx_cells = raw_cells.div_ceil(x_stride) * x_stride;
        let dx = params.length / nx_cells as f64;

        let n_buf = (BUFFER_FACTOR * params.length / lambda_floor / dt).ceil() as usize;
        let record_rows = (t_max / (t_stride as f64 * dt)).ceil() as usize;
        let nt = n_buf + record_rows * t_stride + 1;

        Ok(MarchGrid {
            dt,
            dx,
            nt,
            n_buf,
            nx_cells,
            t_stride,
            x_stride,
        })
    }

    pub fn t_min(&self) -> f64 {
        -(self.n_buf as f64) * self.dt
    }

    /// Time of the full-resolution row j.
    #[inline]
    pub fn time(&self, j: usize) -> f64 {
        (j as f64 - self.n_buf as f64) * self.dt
    }

    /// Spacing of the recorded rows.
    pub fn record_dt(&self) -> f64 {
        self.t_stride as f64 * self.dt
    }

    /// Number of recorded rows (t >= 0).
    pub fn record_nt(&self) -> usize {
        (self.nt - 1 - self.n_buf) / self.t_stride + 1
    }

    /// Recorded times, shared with the finite-volume oracle.
    pub fn record_times(&self) -> Vec<f64> {
        (0..self.record_nt())
            .map(|k| k as f64 * self.record_dt())
            .collect()
    }
}

struct Column {
    r: Vec<f64>,
    s: Vec<f64>,
}

/// Marches the Riemann-invariant system across the duct.
///
/// `scheme_order` 1 is first-order upwind; 2 uses a two-stage midpoint step
/// in x with an upwind-biased three-point time difference.
pub fn march(
    params: &GasParams,
    forcing: &ForcingCoefficient,
    boundary: &BoundaryData,
    grid: &MarchGrid,
    scheme_order: u32,
) -> Result<Field, MarchError> {
    if scheme_order != 1 && scheme_order != 2 {
        return Err(MarchError::InvalidGrid(format!(
            "scheme_order must be 1 or 2, got {scheme_order}"
        )));
    }
    let nt = grid.nt;
    let (dt, dx) = (grid.dt, grid.dx);
    let lambda_floor = params.lambda_floor();

    let alpha: Vec<f64> = (0..nt).map(|j| forcing.alpha(grid.time(j))).collect();

    let mut cur = Column {
        r: Vec::with_capacity(nt),
        s: Vec::with_capacity(nt),
    };
    for j in 0..nt {
        let q = boundary.extended_star(grid.time(j))?;
        cur.r.push(q.r);
        cur.s.push(q.s);
    }
    // Bottom-row closure: exact because the bottom node's domain of
    // dependence stays inside the region determined by background data.
    let (bottom_r, bottom_s) = (cur.r[0], cur.s[0]);

    let record_nt = grid.record_nt();
    let record_nx = grid.nx_cells / grid.x_stride + 1;
    let mut values = vec![RiemannPair { r: 0.0, s: 0.0 }; record_nt * record_nx];
    let record_col = |col: &Column, rec_i: usize, values: &mut Vec<RiemannPair>| {
        for k in 0..record_nt {
            let j = grid.n_buf + k * grid.t_stride;
            values[k * record_nx + rec_i] = RiemannPair {
                r: col.r[j],
                s: col.s[j],
            };
        }
    };

    let mut lambda0 = f64::INFINITY;
    let mut cfl_history = Vec::with_capacity(grid.nx_cells + 1);

    let check_column = |col: &Column, x: f64, lambda0: &mut f64| -> Result<f64, MarchError> {
        let mut min_l1 = f64::INFINITY;
        let mut min_l1_t = 0.0;
        for j in 0..nt {
            let (r, s) = (col.r[j], col.s[j]);
            if !r.is_finite() || !s.is_finite() {
                return Err(MarchError::NonFinite {
                    t: grid.time(j),
                    x,
                });
            }
            if !(s > r) {
                return Err(MarchError::InvalidState {
                    t: grid.time(j),
                    x,
                    r,
                    s,
                });
            }
            let (l1, _) =
                crate::gas::eigenvalues_unchecked(RiemannPair { r, s }, params);
            if l1 < min_l1 {
                min_l1 = l1;
                min_l1_t = grid.time(j);
            }
            if j >= grid.n_buf {
                *lambda0 = lambda0.min(l1);
            }
        }
        if min_l1 <= 0.5 * lambda_floor {
            return Err(MarchError::SupersonicityLoss {
                t: min_l1_t,
                x,
                lambda1: min_l1,
            });
        }
        if dx > dt * min_l1 {
            return Err(MarchError::CflViolation {
                x,
                lambda1_min: min_l1,
                dx,
                dt,
            });
        }
        Ok(min_l1)
    };

    cfl_history.push(check_column(&cur, 0.0, &mut lambda0)?);
    record_col(&cur, 0, &mut values);

    let mut fr = vec![0.0; nt];
    let mut fs = vec![0.0; nt];
    let mut half = Column {
        r: vec![0.0; nt],
        s: vec![0.0; nt],
    };

    // dq/dx at every interior node of a column.
    let rhs = |col: &Column, fr: &mut [f64], fs: &mut [f64]| {
        for j in 1..nt {
            let q = RiemannPair {
                r: col.r[j],
                s: col.s[j],
            };
            let (l1, l2) = crate::gas::eigenvalues_unchecked(q, params);
            let src = 0.5 * alpha[j] * (q.r + q.s);
            let (dr, ds) = if scheme_order == 2 && j >= 2 {
                (
                    (3.0 * col.r[j] - 4.0 * col.r[j - 1] + col.r[j - 2]) / (2.0 * dt),
                    (3.0 * col.s[j] - 4.0 * col.s[j - 1] + col.s[j - 2]) / (2.0 * dt),
                )
            } else {
                (
                    (col.r[j] - col.r[j - 1]) / dt,
                    (col.s[j] - col.s[j - 1]) / dt,
                )
            };
            fr[j] = (src - dr) / l1;
            fs[j] = (src - ds) / l2;
        }
    };

    for i in 1..=grid.nx_cells {
        let x = i as f64 * dx;
        rhs(&cur, &mut fr, &mut fs);
        if scheme_order == 1 {
            for j in 1..nt {
                cur.r[j] += dx * fr[j];
                cur.s[j] += dx * fs[j];
            }
        } else {
            for j in 1..nt {
                half.r[j] = cur.r[j] + 0.5 * dx * fr[j];
                half.s[j] = cur.s[j] + 0.5 * dx * fs[j];
            }
            half.r[0] = bottom_r;
            half.s[0] = bottom_s;
            rhs(&half, &mut fr, &mut fs);
            for j in 1..nt {
                cur.r[j] += dx * fr[j];
                cur.s[j] += dx * fs[j];
            }
        }
        cur.r[0] = bottom_r;
        cur.s[0] = bottom_s;

        cfl_history.push(check_column(&cur, x, &mut lambda0)?);
        if i % grid.x_stride == 0 {
            record_col(&cur, i / grid.x_stride, &mut values);
        }
    }

    let mut meta = FieldMeta::new(*params, format!("march-o{scheme_order}"));
    meta.lambda0 = Some(lambda0);
    meta.cfl_history = cfl_history;
    Ok(Field::new(
        0.0,
        grid.record_dt(),
        record_nt,
        0.0,
        grid.x_stride as f64 * dx,
        record_nx,
        values,
        meta,
    ))
}

/// Measured accuracy of a grid/scheme combination, from a twin run whose
/// boundary is the background solution itself (an exact solution, so the
/// deviation is pure discretization error).
#[derive(Debug, Clone, Copy)]
pub struct Calibration {
    /// Sup-norm error of the twin run against the analytic background.
    pub error_linf: f64,
    /// Largest period-difference residual of the twin run; the noise floor
    /// of the periodicity diagnostic at this resolution. None when the run
    /// is shorter than one period.
    pub periodicity_floor: Option<f64>,
}

/// Runs the background twin on the given grid and measures it.
pub fn calibrate(
    params: &GasParams,
    forcing: &ForcingCoefficient,
    grid: &MarchGrid,
    scheme_order: u32,
) -> Result<Calibration, MarchError> {
    let bg = crate::forcing::BackgroundSolution::new(*params, forcing.clone());
    let twin = BoundaryData::background_only(bg.clone());
    let field = march(params, forcing, &twin, grid, scheme_order)?;

    let mut err: f64 = 0.0;
    for j in 0..field.nt {
        let qa = bg.riemann(field.t(j));
        for i in 0..field.nx {
            let q = field.get(j, i);
            err = err.max((q.r - qa.r).abs()).max((q.s - qa.s).abs());
        }
    }

    Ok(Calibration {
        error_linf: err,
        periodicity_floor: max_period_residual(&field),
    })
}

/// Max over the grid of `|q(t + P, x) - q(t, x)|` (Euclidean in (r, s)),
/// when the field covers at least one period.
pub fn max_period_residual(field: &Field) -> Option<f64> {
    let period = field.meta.params.period;
    let shift = (period / field.dt).round() as usize;
    if shift == 0
        || shift >= field.nt
        || ((shift as f64 * field.dt) - period).abs() > 1e-9 * period
    {
        return None;
    }
    let mut max = 0.0f64;
    for j in 0..field.nt - shift {
        for i in 0..field.nx {
            let a = field.get(j, i);
            let b = field.get(j + shift, i);
            let (dr, ds) = (b.r - a.r, b.s - a.s);
            max = max.max((dr * dr + ds * ds).sqrt());
        }
    }
    Some(max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::PeriodicSignal;
    use crate::forcing::{BackgroundSolution, SineTerm};

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

    fn sine_forcing() -> ForcingCoefficient {
        ForcingCoefficient::sine_series(
            1.0,
            vec![SineTerm {
                amplitude: 0.5,
                harmonic: 1,
            }],
        )
        .unwrap()
    }

    fn perturbed_boundary(delta: f64) -> BoundaryData {
        BoundaryData::new(
            BackgroundSolution::new(params(), sine_forcing()),
            PeriodicSignal::background(),
            PeriodicSignal::BackgroundPlusSine3 { delta, harmonic: 1 },
        )
    }

    #[test]
    fn grid_satisfies_cfl_and_buffer() {
        let p = params();
        let g = MarchGrid::new(&p, 256, 2.0, 256, 1024).unwrap();
        let lf = p.lambda_floor();
        assert!(g.dx <= 0.9 * lf * g.dt * (1.0 + 1e-12));
        assert!(g.t_min() <= -p.length / lf);
        // t = 0 is a grid row and a record row
        assert_eq!(g.time(g.n_buf), 0.0);
        assert_eq!(g.record_times()[0], 0.0);
        // records cover t_max
        assert!(*g.record_times().last().unwrap() >= 2.0);
    }

    #[test]
    fn constant_state_is_a_fixed_point() {
        // alpha = 0 with constant boundary: the update increments vanish
        for gamma in [2.0, 1.4] {
            let p = GasParams { gamma, ..params() };
            let forcing = ForcingCoefficient::zero(1.0).unwrap();
            let bg = BackgroundSolution::new(p, forcing.clone());
            let b = BoundaryData::background_only(bg.clone());
            let qref = bg.riemann(0.0);
            let g = MarchGrid::new(&p, 64, 3.0, 64, 256).unwrap();
            for order in [1, 2] {
                let f = march(&p, &forcing, &b, &g, order).unwrap();
                for j in 0..f.nt {
                    for i in 0..f.nx {
                        let q = f.get(j, i);
                        assert!((q.r - qref.r).abs() <= 1e-15, "gamma {gamma}");
                        assert!((q.s - qref.s).abs() <= 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn background_error_halves_with_resolution() {
        let p = params();
        let forcing = sine_forcing();
        let c1 = calibrate(
            &p,
            &forcing,
            &MarchGrid::new(&p, 128, 2.0, 128, 4096).unwrap(),
            1,
        )
        .unwrap();
        let c2 = calibrate(
            &p,
            &forcing,
            &MarchGrid::new(&p, 256, 2.0, 256, 4096).unwrap(),
            1,
        )
        .unwrap();
        let ratio = c1.error_linf / c2.error_linf;
        assert!(
            (1.5..=2.5).contains(&ratio),
            "expected first-order halving, got ratio {ratio}"
        );
    }

    #[test]
    fn background_error_still_first_order_at_gamma_14() {
        let p = GasParams {
            gamma: 1.4,
            a: 0.7,
            ..params()
        };
        let forcing = sine_forcing();
        let mut errs = Vec::new();
        for pp in [128, 256] {
            let g = MarchGrid::new(&p, pp, 2.0, pp, 4096).unwrap();
            errs.push(calibrate(&p, &forcing, &g, 1).unwrap().error_linf);
        }
        let ratio = errs[0] / errs[1];
        assert!((1.5..=2.5).contains(&ratio), "ratio {ratio} ({errs:?})");
    }

    #[test]
    fn perturbed_run_records_expected_lambda0() {
        let p = params();
        let f = march(
            &p,
            &sine_forcing(),
            &perturbed_boundary(1e-2),
            &MarchGrid::new(&p, 256, 2.0, 256, 1024).unwrap(),
            1,
        )
        .unwrap();
        let (l0, _) = f.lambda0_t0();
        let expect = 2.0 - std::f64::consts::SQRT_2;
        assert!(
            (l0 - expect).abs() <= 0.05,
            "lambda0 = {l0}, expected near {expect}"
        );
    }

    #[test]
    fn later_boundary_data_does_not_affect_earlier_rows() {
        // domain of determinacy: values at (t, x) only depend on data up to
        // time t, so extending the run cannot change earlier rows
        let p = params();
        let forcing = sine_forcing();
        let b = perturbed_boundary(1e-2);
        let g_short = MarchGrid::new(&p, 128, 1.0, 128, 512).unwrap();
        let g_long = MarchGrid::new(&p, 128, 2.0, 128, 512).unwrap();
        let f_short = march(&p, &forcing, &b, &g_short, 1).unwrap();
        let f_long = march(&p, &forcing, &b, &g_long, 1).unwrap();
        assert_eq!(f_short.nx, f_long.nx);
        for j in 0..f_short.nt {
            for i in 0..f_short.nx {
                assert_eq!(f_short.get(j, i), f_long.get(j, i), "row {j} col {i}");
            }
        }
    }

    #[test]
    fn upwind_adds_no_new_extrema_without_forcing() {
        // with alpha = 0 each first-order update is a convex combination of
        // the previous column, so column extrema cannot grow
        let p = params();
        let forcing = ForcingCoefficient::zero(1.0).unwrap();
        let bg = BackgroundSolution::new(p, forcing.clone());
        let b = BoundaryData::new(
            bg,
            PeriodicSignal::background(),
            PeriodicSignal::BackgroundPlusSine3 {
                delta: 1e-2,
                harmonic: 1,
            },
        );
        // full-resolution recording so true column extrema are visible
        let g = MarchGrid::new(&p, 64, 2.0, 64, 1 << 20).unwrap();
        assert_eq!(g.x_stride, 1);
        let f = march(&p, &forcing, &b, &g, 1).unwrap();
        let mut rmin = f64::INFINITY;
        let mut rmax = f64::NEG_INFINITY;
        let mut smin = f64::INFINITY;
        let mut smax = f64::NEG_INFINITY;
        for j in 0..f.nt {
            let q = f.get(j, 0);
            rmin = rmin.min(q.r);
            rmax = rmax.max(q.r);
            smin = smin.min(q.s);
            smax = smax.max(q.s);
        }
        for j in 0..f.nt {
            for i in 1..f.nx {
                let q = f.get(j, i);
                assert!(q.r >= rmin - 1e-14 && q.r <= rmax + 1e-14);
                assert!(q.s >= smin - 1e-14 && q.s <= smax + 1e-14);
            }
        }
    }

    #[test]
    fn cfl_violation_is_reported() {
        let p = params();
        let mut g = MarchGrid::new(&p, 64, 1.0, 64, 256).unwrap();
        g.dx *= 4.0; // break the CFL bound by hand
        g.nx_cells /= 4;
        let err = march(&p, &sine_forcing(), &perturbed_boundary(1e-2), &g, 1);
        assert!(matches!(err, Err(MarchError::CflViolation { .. })), "{err:?}");
    }

    #[test]
    fn deep_subsonic_dip_aborts() {
        // keeps the inflow supersonic but pushes lambda1 below half the floor
        let p = params();
        let b = perturbed_boundary(-0.65);
        assert!(b.validate().valid);
        let g = MarchGrid::new(&p, 128, 2.0, 128, 512).unwrap();
        let err = march(&p, &sine_forcing(), &b, &g, 1);
        assert!(
            matches!(err, Err(MarchError::SupersonicityLoss { .. })),
            "{err:?}"
        );
    }

    #[test]
    fn background_twin_is_periodic_to_rounding() {
        let p = params();
        let g = MarchGrid::new(&p, 128, 3.0, 128, 512).unwrap();
        let cal = calibrate(&p, &sine_forcing(), &g, 1).unwrap();
        let floor = cal.periodicity_floor.unwrap();
        assert!(floor < 1e-12, "periodicity floor {floor}");
    }

    #[test]
    fn background_twin_deviations_stay_at_scheme_error_scale() {
        // measured at 256 and 512 nodes/period: sup|m| ~ 1.2 E,
        // sup|m_t| ~ 8 E, sup|m_x| ~ 5 E; bounds carry a 2x margin
        let p = params();
        let forcing = sine_forcing();
        let g = MarchGrid::new(&p, 128, 4.0, 128, 1024).unwrap();
        let cal = calibrate(&p, &forcing, &g, 1).unwrap();
        let bg = BackgroundSolution::new(p, forcing.clone());
        let f = march(&p, &forcing, &BoundaryData::background_only(bg.clone()), &g, 1).unwrap();
        let dev = crate::analysis::deviation_c1(&f, &bg);
        assert!(dev.sup_m <= 2.0 * cal.error_linf, "{dev:?}");
        assert!(dev.sup_m_t <= 16.0 * cal.error_linf, "{dev:?}");
        assert!(dev.sup_m_x <= 10.0 * cal.error_linf, "{dev:?}");
        let prof = crate::analysis::h2_profile(&f, &bg).unwrap();
        let max_h2 = prof.columns.iter().map(|&(_, n)| n).fold(0.0f64, f64::max);
        assert!(max_h2 <= 50.0 * cal.error_linf, "max H2 {max_h2}");
    }

    #[test]
    fn onset_scale_shift_is_linear_in_delta() {
        // |T0(delta) - T0(0)| stays below an observed multiple of delta
        let p = params();
        let forcing = sine_forcing();
        let t0_exact = p.length / p.lambda1_ref();
        let g = MarchGrid::new(&p, 256, 2.0, 256, 1024).unwrap();
        for delta in [1e-2, 5e-3] {
            let f = march(&p, &forcing, &perturbed_boundary(delta), &g, 1).unwrap();
            let (_, t0) = f.lambda0_t0();
            assert!(
                (t0 - t0_exact).abs() <= 5.0 * delta,
                "delta {delta}: T0 shift {}",
                (t0 - t0_exact).abs()
            );
        }
    }
}

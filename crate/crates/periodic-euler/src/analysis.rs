//! Diagnostics that quantify the claimed solution properties on computed
//! fields: the period-difference residual and its onset, C¹ deviation from
//! the background, characteristic tracing, the characteristic-strip energy
//! functional, per-column H² profiles and grid-convergence studies.

use crate::field::Field;
use crate::forcing::{BackgroundSolution, ForcingCoefficient};
use crate::fv::{self, FluxScheme, FvError, FvGrid};
use crate::gas::{eigenvalues_unchecked, from_riemann, GasParams};
use crate::march::{self, MarchError, MarchGrid};
use crate::numutil;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("field window too short: covers up to t = {t_end}, need at least {required}")]
    WindowTooShort { t_end: f64, required: f64 },
    #[error("probe point (t = {t}, x = {x}) outside the stored grid")]
    OutOfDomain { t: f64, x: f64 },
    #[error("probe time {t} must exceed T0 + P = {required}")]
    ProbeTooEarly { t: f64, required: f64 },
    #[error("characteristic curve left the stored time window at x = {x}")]
    TraceIncomplete { x: f64 },
    #[error("non-supersonic interpolated state on a traced curve at (t = {t}, x = {x})")]
    NonSupersonicSample { t: f64, x: f64 },
    #[error("record grid mismatch: {0}")]
    GridMismatch(String),
    #[error("convergence study needs at least 3 resolutions, got {0}")]
    TooFewResolutions(usize),
    #[error(transparent)]
    March(#[from] MarchError),
    #[error(transparent)]
    Fv(#[from] FvError),
}

/// Period-difference residual series and the detected onset of periodicity.
#[derive(Debug, Clone)]
pub struct PeriodicityReport {
    /// `(t, R_sup(t), R_l2(t))` for every recorded t with t + P stored.
    pub residual_series: Vec<(f64, f64, f64)>,
    /// Earliest recorded time after which `R_sup` stays below the tolerance
    /// for every later recorded time.
    pub onset_detected: Option<f64>,
    /// `T0 = L / lambda0` from the run's recorded lambda0.
    pub t0_predicted: f64,
    pub tol_used: f64,
}

/// Max-norm residual `R_sup(t) = max_x |q(t+P, x) - q(t, x)|` and the
/// corresponding L² residual in x. Because the background is exactly
/// P-periodic, this equals the residual of the deviation variables
/// `m = (r - r_a, s - s_a)`.
pub fn periodicity_residual(f: &Field, tol: f64) -> Result<PeriodicityReport, AnalysisError> {
    let period = f.meta.params.period;
    let (_, t0_predicted) = f.lambda0_t0();
    let required = t0_predicted + 2.0 * period;
    if f.t_end() + 1e-12 < required {
        return Err(AnalysisError::WindowTooShort {
            t_end: f.t_end(),
            required,
        });
    }
    let shift = (period / f.dt).round() as usize;
    if shift == 0 || ((shift as f64 * f.dt) - period).abs() > 1e-9 * period {
        return Err(AnalysisError::GridMismatch(format!(
            "record spacing {} does not divide the period {period}",
            f.dt
        )));
    }

    let n_res = f.nt - shift;
    let mut series = Vec::with_capacity(n_res);
    for j in 0..n_res {
        let mut sup = 0.0f64;
        let mut l2 = 0.0f64;
        for i in 0..f.nx {
            let a = f.get(j, i);
            let b = f.get(j + shift, i);
            let v2 = (b.r - a.r) * (b.r - a.r) + (b.s - a.s) * (b.s - a.s);
            sup = sup.max(v2.sqrt());
            let w = if i == 0 || i == f.nx - 1 { 0.5 } else { 1.0 };
            l2 += w * v2;
        }
        series.push((f.t(j), sup, (l2 * f.dx).sqrt()));
    }

    // Sustained-threshold rule: below tol for all later recorded times.
    let mut onset = None;
    for j in (0..n_res).rev() {
        if series[j].1 > tol {
            break;
        }
        onset = Some(series[j].0);
    }

    Ok(PeriodicityReport {
        residual_series: series,
        onset_detected: onset,
        t0_predicted,
        tol_used: tol,
    })
}

/// Sup norms of the deviation from the background and of its first
/// finite-difference derivatives, plus the primitive-variable deviations.
#[derive(Debug, Clone, Copy)]
pub struct DeviationReport {
    pub sup_m: f64,
    pub sup_m_t: f64,
    pub sup_m_x: f64,
    pub sup_rho_dev: f64,
    pub sup_u_dev: f64,
}

pub fn deviation_c1(f: &Field, bg: &BackgroundSolution) -> DeviationReport {
    let (nt, nx) = (f.nt, f.nx);
    let mut mr = vec![0.0; nt * nx];
    let mut ms = vec![0.0; nt * nx];
    let mut sup_m = 0.0f64;
    let mut sup_rho = 0.0f64;
    let mut sup_u = 0.0f64;
    let params = f.meta.params;
    for j in 0..nt {
        let t = f.t(j);
        let qa = bg.riemann(t);
        let wa = bg.primitive(t);
        for i in 0..nx {
            let q = f.get(j, i);
            let (dr, ds) = (q.r - qa.r, q.s - qa.s);
            mr[j * nx + i] = dr;
            ms[j * nx + i] = ds;
            sup_m = sup_m.max((dr * dr + ds * ds).sqrt());
            if let Ok(w) = from_riemann(q, &params) {
                sup_rho = sup_rho.max((w.rho - wa.rho).abs());
                sup_u = sup_u.max((w.u - wa.u).abs());
            }
        }
    }

    let mut sup_m_t = 0.0f64;
    let mut col_r = vec![0.0; nt];
    let mut col_s = vec![0.0; nt];
    for i in 0..nx {
        for j in 0..nt {
            col_r[j] = mr[j * nx + i];
            col_s[j] = ms[j * nx + i];
        }
        let dr = numutil::deriv1(&col_r, f.dt);
        let ds = numutil::deriv1(&col_s, f.dt);
        for j in 0..nt {
            sup_m_t = sup_m_t.max((dr[j] * dr[j] + ds[j] * ds[j]).sqrt());
        }
    }

    let mut sup_m_x = 0.0f64;
    for j in 0..nt {
        let dr = numutil::deriv1(&mr[j * nx..(j + 1) * nx], f.dx);
        let ds = numutil::deriv1(&ms[j * nx..(j + 1) * nx], f.dx);
        for i in 0..nx {
            sup_m_x = sup_m_x.max((dr[i] * dr[i] + ds[i] * ds[i]).sqrt());
        }
    }

    DeviationReport {
        sup_m,
        sup_m_t,
        sup_m_x,
        sup_rho_dev: sup_rho,
        sup_u_dev: sup_u,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharFamily {
    /// `dt/dx = 1/lambda1`.
    Slow,
    /// `dt/dx = 1/lambda2`.
    Fast,
}

/// A characteristic curve traced backward from a probe point to x = 0,
/// stored as (x, t) nodes with x descending.
#[derive(Debug, Clone)]
pub struct CharCurve {
    pub family: CharFamily,
    pub nodes: Vec<(f64, f64)>,
    /// False when the curve left the stored window before reaching x = 0.
    pub complete: bool,
}

impl CharCurve {
    /// Linear interpolation of t on the curve at position x.
    pub fn t_at(&self, x: f64) -> Option<f64> {
        let first = self.nodes.first()?;
        let last = self.nodes.last()?;
        if x > first.0 + 1e-12 || x < last.0 - 1e-12 {
            return None;
        }
        let mut prev = *first;
        for &node in &self.nodes[1..] {
            if x >= node.0 - 1e-12 {
                let span = prev.0 - node.0;
                let w = if span.abs() < 1e-300 {
                    0.0
                } else {
                    (prev.0 - x) / span
                };
                return Some(numutil::lerp(prev.1, node.1, w));
            }
            prev = node;
        }
        Some(last.1)
    }

    pub fn t_terminal(&self) -> f64 {
        self.nodes.last().map(|n| n.1).unwrap_or(f64::NAN)
    }
}

struct LambdaGrid {
    t0: f64,
    dt: f64,
    nt: usize,
    x0: f64,
    dx: f64,
    nx: usize,
    vals: Vec<f64>,
}

impl LambdaGrid {
    fn from_field(f: &Field, family: CharFamily) -> Self {
        let params = f.meta.params;
        let vals = f
            .values()
            .iter()
            .map(|&q| {
                let (l1, l2) = eigenvalues_unchecked(q, &params);
                match family {
                    CharFamily::Slow => l1,
                    CharFamily::Fast => l2,
                }
            })
            .collect();
        LambdaGrid {
            t0: f.t0,
            dt: f.dt,
            nt: f.nt,
            x0: f.x0,
            dx: f.dx,
            nx: f.nx,
            vals,
        }
    }

    fn bilinear(&self, t: f64, x: f64) -> Option<f64> {
        let ft = (t - self.t0) / self.dt;
        let fx = (x - self.x0) / self.dx;
        if ft < -1e-9 || fx < -1e-9 {
            return None;
        }
        let ft = ft.max(0.0);
        let fx = fx.max(0.0);
        let jt = (ft as usize).min(self.nt - 2);
        let ix = (fx as usize).min(self.nx - 2);
        let (wt, wx) = (ft - jt as f64, fx - ix as f64);
        if wt > 1.0 + 1e-9 || wx > 1.0 + 1e-9 {
            return None;
        }
        let v00 = self.vals[jt * self.nx + ix];
        let v01 = self.vals[jt * self.nx + ix + 1];
        let v10 = self.vals[(jt + 1) * self.nx + ix];
        let v11 = self.vals[(jt + 1) * self.nx + ix + 1];
        Some((1.0 - wt) * ((1.0 - wx) * v00 + wx * v01) + wt * ((1.0 - wx) * v10 + wx * v11))
    }
}

/// Traces the characteristic of the chosen family backward from
/// `(t_start, x_start)` to x = 0 by RK4 with step `dx / substeps` on the
/// bilinearly interpolated eigenvalue grid.
pub fn trace_characteristic_with_step(
    f: &Field,
    t_start: f64,
    x_start: f64,
    family: CharFamily,
    substeps: usize,
) -> Result<CharCurve, AnalysisError> {
    if t_start < f.t0 || t_start > f.t_end() || x_start < f.x0 || x_start > f.x_end() {
        return Err(AnalysisError::OutOfDomain {
            t: t_start,
            x: x_start,
        });
    }
    let lam = LambdaGrid::from_field(f, family);
    let h = f.dx / substeps.max(1) as f64;
    let mut nodes = vec![(x_start, t_start)];
    let mut x = x_start;
    let mut t = t_start;
    let mut complete = true;

    // Slope of t(x); positive for supersonic flow in both families.
    let slope = |t: f64, x: f64| -> Result<f64, AnalysisError> {
        let l = lam
            .bilinear(t, x)
            .ok_or(AnalysisError::TraceIncomplete { x })?;
        if l <= 1e-12 {
            return Err(AnalysisError::NonSupersonicSample { t, x });
        }
        Ok(1.0 / l)
    };

    'outer: while x > f.x0 + 1e-13 {
        let step = h.min(x - f.x0);
        let rk = (|| -> Result<f64, AnalysisError> {
            let k1 = slope(t, x)?;
            let k2 = slope(t - 0.5 * step * k1, x - 0.5 * step)?;
            let k3 = slope(t - 0.5 * step * k2, x - 0.5 * step)?;
            let k4 = slope(t - step * k3, x - step)?;
            Ok((k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0)
        })();
        match rk {
            Ok(k) => {
                t -= step * k;
                x -= step;
                if t < f.t0 {
                    complete = false;
                    break 'outer;
                }
                nodes.push((x, t));
            }
            Err(AnalysisError::TraceIncomplete { .. }) => {
                complete = false;
                break 'outer;
            }
            Err(e) => return Err(e),
        }
    }

    Ok(CharCurve {
        family,
        nodes,
        complete,
    })
}

/// [`trace_characteristic_with_step`] at the default step of a quarter
/// record cell.
pub fn trace_characteristic(
    f: &Field,
    t_start: f64,
    x_start: f64,
    family: CharFamily,
) -> Result<CharCurve, AnalysisError> {
    trace_characteristic_with_step(f, t_start, x_start, family, 4)
}

/// The energy `I(x) = 1/2 int_{t1(x)}^{t2(x)} |V(t, x)|^2 dt` between the
/// two characteristics through the probe point, per recorded column.
#[derive(Debug, Clone)]
pub struct EnergyProfile {
    pub points: Vec<(f64, f64)>,
    pub curve_slow: CharCurve,
    pub curve_fast: CharCurve,
}

pub fn energy_functional(
    f: &Field,
    t_start: f64,
    x_start: f64,
) -> Result<EnergyProfile, AnalysisError> {
    let period = f.meta.params.period;
    let (_, t0) = f.lambda0_t0();
    if t_start <= t0 + period {
        return Err(AnalysisError::ProbeTooEarly {
            t: t_start,
            required: t0 + period,
        });
    }
    if t_start + period > f.t_end() + 1e-12 {
        return Err(AnalysisError::WindowTooShort {
            t_end: f.t_end(),
            required: t_start + period,
        });
    }
    let shift = (period / f.dt).round() as usize;
    if shift == 0 || ((shift as f64 * f.dt) - period).abs() > 1e-9 * period {
        return Err(AnalysisError::GridMismatch(format!(
            "record spacing {} does not divide the period {period}",
            f.dt
        )));
    }

    let curve_slow = trace_characteristic(f, t_start, x_start, CharFamily::Slow)?;
    let curve_fast = trace_characteristic(f, t_start, x_start, CharFamily::Fast)?;
    if !curve_slow.complete || !curve_fast.complete {
        return Err(AnalysisError::TraceIncomplete { x: 0.0 });
    }

    let mut points = Vec::new();
    for i in 0..f.nx {
        let x = f.x(i);
        if x > x_start + 1e-12 {
            break;
        }
        let (Some(t1), Some(t2)) = (curve_slow.t_at(x), curve_fast.t_at(x)) else {
            continue;
        };
        // the slow curve lies below the fast one
        let (t_lo, t_hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let energy = 0.5 * integrate_v_squared(f, shift, i, t_lo, t_hi)?;
        points.push((x, energy));
    }
    Ok(EnergyProfile {
        points,
        curve_slow,
        curve_fast,
    })
}

/// Trapezoid integral of `|V(t, x_i)|^2` over `[t_lo, t_hi]`, with linear
/// interpolation of the squared residual at the partial end segments.
fn integrate_v_squared(
    f: &Field,
    shift: usize,
    col: usize,
    t_lo: f64,
    t_hi: f64,
) -> Result<f64, AnalysisError> {
    if t_hi <= t_lo {
        return Ok(0.0);
    }
    let n_res = f.nt - shift;
    let g = |j: usize| -> f64 {
        let a = f.get(j, col);
        let b = f.get(j + shift, col);
        (b.r - a.r) * (b.r - a.r) + (b.s - a.s) * (b.s - a.s)
    };
    let g_at = |t: f64| -> Result<f64, AnalysisError> {
        let ft = (t - f.t0) / f.dt;
        if ft < 0.0 {
            return Err(AnalysisError::OutOfDomain { t, x: f.x(col) });
        }
        let j = (ft as usize).min(n_res.saturating_sub(2));
        if j + 1 >= n_res {
            return Err(AnalysisError::OutOfDomain { t, x: f.x(col) });
        }
        Ok(numutil::lerp(g(j), g(j + 1), ft - j as f64))
    };

    let j_lo = ((t_lo - f.t0) / f.dt).ceil() as usize;
    let j_hi = ((t_hi - f.t0) / f.dt).floor() as usize;
    if j_lo > j_hi || j_hi >= n_res {
        // both ends inside one record cell
        return Ok(0.5 * (g_at(t_lo)? + g_at(t_hi)?) * (t_hi - t_lo));
    }

    let mut acc = 0.0;
    let t_first = f.t(j_lo);
    if t_first > t_lo {
        acc += 0.5 * (g_at(t_lo)? + g(j_lo)) * (t_first - t_lo);
    }
    for j in j_lo..j_hi {
        acc += 0.5 * (g(j) + g(j + 1)) * f.dt;
    }
    let t_last = f.t(j_hi);
    if t_hi > t_last {
        acc += 0.5 * (g(j_hi) + g_at(t_hi)?) * (t_hi - t_last);
    }
    Ok(acc)
}

/// Discrete H² norms of the deviation per column over `[T0, T0 + P]`, and
/// the smallest exponential rate bounding their growth in x.
#[derive(Debug, Clone)]
pub struct H2Profile {
    pub columns: Vec<(f64, f64)>,
    /// Least `C >= 0` with `||m(x)||^2 <= ||m(0)||^2 exp(C x)` on the grid.
    pub c_fit: f64,
    /// First record row of the window and the number of rows in it.
    pub window_start: usize,
    pub window_len: usize,
}

pub fn h2_profile(f: &Field, bg: &BackgroundSolution) -> Result<H2Profile, AnalysisError> {
    let period = f.meta.params.period;
    let (_, t0) = f.lambda0_t0();
    if f.t_end() + 1e-12 < t0 + period {
        return Err(AnalysisError::WindowTooShort {
            t_end: f.t_end(),
            required: t0 + period,
        });
    }
    let j_lo = ((t0 - f.t0) / f.dt).ceil() as usize;
    let j_hi = (((t0 + period) - f.t0) / f.dt).floor() as usize;
    let len = j_hi - j_lo + 1;
    if len < 5 {
        return Err(AnalysisError::GridMismatch(format!(
            "H2 window [T0, T0+P] holds only {len} record rows"
        )));
    }

    let mut columns = Vec::with_capacity(f.nx);
    let qa: Vec<_> = (j_lo..=j_hi).map(|j| bg.riemann(f.t(j))).collect();
    let mut mr = vec![0.0; len];
    let mut ms = vec![0.0; len];
    for i in 0..f.nx {
        for (k, j) in (j_lo..=j_hi).enumerate() {
            let q = f.get(j, i);
            mr[k] = q.r - qa[k].r;
            ms[k] = q.s - qa[k].s;
        }
        columns.push((f.x(i), numutil::h2_window_vec2(&mr, &ms, f.dt)));
    }

    let n0sq = columns[0].1 * columns[0].1;
    let mut c_fit = 0.0f64;
    if n0sq > 1e-300 {
        for &(x, n) in &columns[1..] {
            if x > 0.0 && n > 0.0 {
                c_fit = c_fit.max(((n * n) / n0sq).ln() / x);
            }
        }
    }

    Ok(H2Profile {
        columns,
        c_fit,
        window_start: j_lo,
        window_len: len,
    })
}

/// What [`convergence_study`] runs at each resolution.
#[derive(Debug, Clone)]
pub enum SolverSpec {
    /// Resolution is the number of time nodes per period.
    March { scheme_order: u32 },
    /// Resolution is the cell count.
    Fv { flux: FluxScheme, scheme_order: u32 },
}

#[derive(Debug, Clone)]
pub struct ConvergenceSetup {
    pub params: GasParams,
    pub forcing: ForcingCoefficient,
    pub solver: SolverSpec,
    pub resolutions: Vec<usize>,
    pub t_max: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub resolution: usize,
    pub h: f64,
    pub error: f64,
    /// Order observed against the previous row.
    pub observed_order: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub fitted_order: f64,
}

/// Errors of background-boundary runs against the analytic background across
/// a ladder of resolutions, with the least-squares observed order.
pub fn convergence_study(setup: &ConvergenceSetup) -> Result<ConvergenceTable, AnalysisError> {
    if setup.resolutions.len() < 3 {
        return Err(AnalysisError::TooFewResolutions(setup.resolutions.len()));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &res in &setup.resolutions {
        let (h, error) = match &setup.solver {
            SolverSpec::March { scheme_order } => {
                let grid = MarchGrid::new(&setup.params, res, setup.t_max, res.min(256), 1024)?;
                let cal = march::calibrate(&setup.params, &setup.forcing, &grid, *scheme_order)?;
                (grid.dt, cal.error_linf)
            }
            SolverSpec::Fv { flux, scheme_order } => {
                let grid = FvGrid {
                    nx: res,
                    cfl: 0.45,
                    t_end: setup.t_max,
                };
                let record_dt = setup.params.period / 64.0;
                let record_nt = (setup.t_max / record_dt).floor() as usize + 1;
                let cal = fv::calibrate(
                    &setup.params,
                    &setup.forcing,
                    &grid,
                    *flux,
                    *scheme_order,
                    record_dt,
                    record_nt,
                )?;
                (setup.params.length / res as f64, cal.error_linf)
            }
        };
        let observed_order = rows.last().map(|prev: &ConvergenceRow| {
            (prev.error / error).ln() / (prev.h / h).ln()
        });
        rows.push(ConvergenceRow {
            resolution: res,
            h,
            error,
            observed_order,
        });
    }
    let fitted_order = numutil::fit_order(
        &rows
            .iter()
            .map(|r| (r.h, r.error))
            .collect::<Vec<_>>(),
    );
    Ok(ConvergenceTable { rows, fitted_order })
}

//! Independent oracle: a conservative finite-volume discretization of the
//! system in conserved variables `(rho, rho u)` with the momentum source
//! `alpha(t) rho u`, marched in time. Supersonic inflow imposes both
//! primitive variables in the left ghost cells; the right boundary is
//! zero-order extrapolation (supersonic outflow).

use crate::boundary::BoundaryData;
use crate::field::{Field, FieldMeta};
use crate::forcing::ForcingCoefficient;
use crate::gas::{GasParams, ParamsError, RiemannPair};
use thiserror::Error;

const NGHOST: usize = 2;

#[derive(Debug, Error)]
pub enum FvError {
    #[error("invalid parameters: {0}")]
    InvalidParams(#[from] ParamsError),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("positivity lost at (t = {t}, x = {x}): rho = {rho}")]
    PositivityLoss { t: f64, x: f64, rho: f64 },
    #[error("time step underflow at t = {t}: dt = {dt}")]
    DtUnderflow { t: f64, dt: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxScheme {
    /// Local Lax-Friedrichs.
    Rusanov,
    Hll,
}

impl FluxScheme {
    pub fn name(&self) -> &'static str {
        match self {
            FluxScheme::Rusanov => "rusanov",
            FluxScheme::Hll => "hll",
        }
    }
}

/// Cell layout and stepping control for [`fv_run`].
#[derive(Debug, Clone, Copy)]
pub struct FvGrid {
    /// Number of interior cells over [0, L].
    pub nx: usize,
    /// Courant number in (0, 1].
    pub cfl: f64,
    /// Final time; must cover the last record time.
    pub t_end: f64,
}

struct Workspace {
    frho: Vec<f64>,
    fmom: Vec<f64>,
    slope_rho: Vec<f64>,
    slope_mom: Vec<f64>,
}

#[inline]
fn phys_flux(rho: f64, mom: f64, params: &GasParams) -> (f64, f64) {
    let u = mom / rho;
    (mom, mom * u + params.a * rho.powf(params.gamma))
}

#[inline]
fn wave_speed(rho: f64, mom: f64, params: &GasParams) -> f64 {
    let u = mom / rho;
    let c = (params.a * params.gamma).sqrt() * rho.powf(0.5 * (params.gamma - 1.0));
    u.abs() + c
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

fn fill_ghosts(rho: &mut [f64], mom: &mut [f64], boundary: &BoundaryData, t: f64) {
    let n = rho.len();
    let (rho_l, u_l) = (boundary.rho(t), boundary.u(t));
    for g in 0..NGHOST {
        rho[g] = rho_l;
        mom[g] = rho_l * u_l;
    }
    for g in 0..NGHOST {
        rho[n - 1 - g] = rho[n - NGHOST - 1];
        mom[n - 1 - g] = mom[n - NGHOST - 1];
    }
}

/// Interface fluxes into `ws.frho/fmom`; index k is the face between cells
/// k and k+1, valid for k in 1..=nx+1.
fn interface_fluxes(
    rho: &[f64],
    mom: &[f64],
    params: &GasParams,
    flux: FluxScheme,
    order: u32,
    ws: &mut Workspace,
) {
    let n = rho.len();
    if order == 2 {
        for i in 1..n - 1 {
            ws.slope_rho[i] = minmod(rho[i] - rho[i - 1], rho[i + 1] - rho[i]);
            ws.slope_mom[i] = minmod(mom[i] - mom[i - 1], mom[i + 1] - mom[i]);
        }
    }
    for k in 1..n - 2 {
        let (rho_l, mom_l, rho_r, mom_r) = if order == 2 {
            (
                rho[k] + 0.5 * ws.slope_rho[k],
                mom[k] + 0.5 * ws.slope_mom[k],
                rho[k + 1] - 0.5 * ws.slope_rho[k + 1],
                mom[k + 1] - 0.5 * ws.slope_mom[k + 1],
            )
        } else {
            (rho[k], mom[k], rho[k + 1], mom[k + 1])
        };
        let (fl_rho, fl_mom) = phys_flux(rho_l, mom_l, params);
        let (fr_rho, fr_mom) = phys_flux(rho_r, mom_r, params);
        match flux {
            FluxScheme::Rusanov => {
                let smax = wave_speed(rho_l, mom_l, params).max(wave_speed(rho_r, mom_r, params));
                ws.frho[k] = 0.5 * (fl_rho + fr_rho) - 0.5 * smax * (rho_r - rho_l);
                ws.fmom[k] = 0.5 * (fl_mom + fr_mom) - 0.5 * smax * (mom_r - mom_l);
            }
            FluxScheme::Hll => {
                let (ul, cl) = (
                    mom_l / rho_l,
                    (params.a * params.gamma).sqrt()
                        * rho_l.powf(0.5 * (params.gamma - 1.0)),
                );
                let (ur, cr) = (
                    mom_r / rho_r,
                    (params.a * params.gamma).sqrt()
                        * rho_r.powf(0.5 * (params.gamma - 1.0)),
                );
                let sl = (ul - cl).min(ur - cr);
                let sr = (ul + cl).max(ur + cr);
                if sl >= 0.0 {
                    ws.frho[k] = fl_rho;
                    ws.fmom[k] = fl_mom;
                } else if sr <= 0.0 {
                    ws.frho[k] = fr_rho;
                    ws.fmom[k] = fr_mom;
                } else {
                    let inv = 1.0 / (sr - sl);
                    ws.frho[k] =
                        (sr * fl_rho - sl * fr_rho + sl * sr * (rho_r - rho_l)) * inv;
                    ws.fmom[k] =
                        (sr * fl_mom - sl * fr_mom + sl * sr * (mom_r - mom_l)) * inv;
                }
            }
        }
    }
}

/// One explicit-Euler stage: `out = state + dt_stage * L(state, t_stage)`,
/// with ghosts filled at the stage time and the source applied unsplit.
#[allow(clippy::too_many_arguments)]
fn stage(
    rho: &mut [f64],
    mom: &mut [f64],
    out_rho: &mut [f64],
    out_mom: &mut [f64],
    t_stage: f64,
    dt_stage: f64,
    dx: f64,
    params: &GasParams,
    forcing: &ForcingCoefficient,
    boundary: &BoundaryData,
    flux: FluxScheme,
    order: u32,
    ws: &mut Workspace,
) {
    fill_ghosts(rho, mom, boundary, t_stage);
    interface_fluxes(rho, mom, params, flux, order, ws);
    let al = forcing.alpha(t_stage);
    let n = rho.len();
    for i in NGHOST..n - NGHOST {
        out_rho[i] = rho[i] - dt_stage / dx * (ws.frho[i] - ws.frho[i - 1]);
        out_mom[i] =
            mom[i] - dt_stage / dx * (ws.fmom[i] - ws.fmom[i - 1]) + dt_stage * al * mom[i];
    }
}

/// Advances the conserved variables from the constant initial state
/// `(rho_ref, u_ref)` and records Riemann-invariant rows at the uniform
/// times `k * record_dt` for k in 0..record_nt (cell centers in x).
///
/// `scheme_order` 1 is forward Euler; 2 is Heun with minmod-limited linear
/// reconstruction. Loss of supersonicity is flagged in the metadata but is
/// not fatal for the oracle.
#[allow(clippy::too_many_arguments)]
pub fn fv_run(
    params: &GasParams,
    forcing: &ForcingCoefficient,
    boundary: &BoundaryData,
    grid: &FvGrid,
    flux: FluxScheme,
    scheme_order: u32,
    record_dt: f64,
    record_nt: usize,
) -> Result<Field, FvError> {
    params.validate()?;
    if grid.nx < 4 {
        return Err(FvError::InvalidGrid(format!(
            "need at least 4 cells, got {}",
            grid.nx
        )));
    }
    if !(grid.cfl > 0.0 && grid.cfl <= 1.0) {
        return Err(FvError::InvalidGrid(format!(
            "cfl must be in (0, 1], got {}",
            grid.cfl
        )));
    }
    if scheme_order != 1 && scheme_order != 2 {
        return Err(FvError::InvalidGrid(format!(
            "scheme_order must be 1 or 2, got {scheme_order}"
        )));
    }
    let record_end = (record_nt.saturating_sub(1)) as f64 * record_dt;
    if grid.t_end + 1e-12 < record_end {
        return Err(FvError::InvalidGrid(format!(
            "t_end = {} does not cover the last record time {}",
            grid.t_end, record_end
        )));
    }

    let nx = grid.nx;
    let n = nx + 2 * NGHOST;
    let dx = params.length / nx as f64;

    let mut rho = vec![params.rho_ref; n];
    let mut mom = vec![params.rho_ref * params.u_ref; n];
    let mut rho_new = rho.clone();
    let mut mom_new = mom.clone();
    let mut rho_mid = rho.clone();
    let mut mom_mid = mom.clone();
    let mut ws = Workspace {
        frho: vec![0.0; n],
        fmom: vec![0.0; n],
        slope_rho: vec![0.0; n],
        slope_mom: vec![0.0; n],
    };

    let mut values = Vec::with_capacity(record_nt * nx);
    let mut cfl_history = Vec::with_capacity(record_nt);
    let mut lambda0 = f64::INFINITY;
    let mut lost_supersonicity = false;

    let record_row = |rho_a: &[f64],
                          mom_a: &[f64],
                          rho_b: &[f64],
                          mom_b: &[f64],
                          w: f64,
                          values: &mut Vec<RiemannPair>,
                          lambda0: &mut f64,
                          lost: &mut bool|
     -> Result<f64, FvError> {
        let mut min_l1 = f64::INFINITY;
        let spread_coeff = 1.0 / (params.gamma - 1.0);
        for i in NGHOST..rho_a.len() - NGHOST {
            let rho_i = rho_a[i] + w * (rho_b[i] - rho_a[i]);
            let mom_i = mom_a[i] + w * (mom_b[i] - mom_a[i]);
            let u = mom_i / rho_i;
            let c = (params.a * params.gamma).sqrt() * rho_i.powf(0.5 * (params.gamma - 1.0));
            values.push(RiemannPair {
                r: 0.5 * u - c * spread_coeff,
                s: 0.5 * u + c * spread_coeff,
            });
            let l1 = u - c;
            min_l1 = min_l1.min(l1);
        }
        *lambda0 = lambda0.min(min_l1);
        if min_l1 <= 0.0 {
            *lost = true;
        }
        Ok(min_l1)
    };

    // row at t = 0 is the exact initial state
    cfl_history.push(record_row(
        &rho,
        &mom,
        &rho,
        &mom,
        0.0,
        &mut values,
        &mut lambda0,
        &mut lost_supersonicity,
    )?);
    let mut next_record = 1usize;

    let mut t = 0.0f64;
    while next_record < record_nt {
        let smax = (0..n)
            .map(|i| wave_speed(rho[i], mom[i], params))
            .fold(0.0f64, f64::max);
        let dt = grid.cfl * dx / smax;
        if !dt.is_finite() || dt < 1e-14 {
            return Err(FvError::DtUnderflow { t, dt });
        }

        if scheme_order == 1 {
            stage(
                &mut rho, &mut mom, &mut rho_new, &mut mom_new, t, dt, dx, params, forcing,
                boundary, flux, 1, &mut ws,
            );
        } else {
            stage(
                &mut rho, &mut mom, &mut rho_mid, &mut mom_mid, t, dt, dx, params, forcing,
                boundary, flux, 2, &mut ws,
            );
            stage(
                &mut rho_mid,
                &mut mom_mid,
                &mut rho_new,
                &mut mom_new,
                t + dt,
                dt,
                dx,
                params,
                forcing,
                boundary,
                flux,
                2,
                &mut ws,
            );
            for i in NGHOST..n - NGHOST {
                rho_new[i] = 0.5 * (rho[i] + rho_new[i]);
                mom_new[i] = 0.5 * (mom[i] + mom_new[i]);
            }
        }

        let t_new = t + dt;
        for i in NGHOST..n - NGHOST {
            let rv = rho_new[i];
            if !rv.is_finite() || !mom_new[i].is_finite() {
                return Err(FvError::NonFinite { t: t_new });
            }
            if rv <= crate::gas::DENSITY_FLOOR {
                return Err(FvError::PositivityLoss {
                    t: t_new,
                    x: (i - NGHOST) as f64 * dx + 0.5 * dx,
                    rho: rv,
                });
            }
        }

        while next_record < record_nt {
            let t_rec = next_record as f64 * record_dt;
            if t_rec > t_new + 1e-14 {
                break;
            }
            let w = ((t_rec - t) / dt).clamp(0.0, 1.0);
            let min_l1 = record_row(
                &rho,
                &mom,
                &rho_new,
                &mom_new,
                w,
                &mut values,
                &mut lambda0,
                &mut lost_supersonicity,
            )?;
            cfl_history.push(min_l1);
            next_record += 1;
        }

        std::mem::swap(&mut rho, &mut rho_new);
        std::mem::swap(&mut mom, &mut mom_new);
        t = t_new;
    }

    let mut meta = FieldMeta::new(
        *params,
        format!("fv-{}-o{scheme_order}", flux.name()),
    );
    meta.lambda0 = Some(lambda0);
    meta.cfl_history = cfl_history;
    meta.lost_supersonicity = lost_supersonicity;
    Ok(Field::new(
        0.0,
        record_dt,
        record_nt,
        0.5 * dx,
        dx,
        nx,
        values,
        meta,
    ))
}

/// Background-twin error estimate for the finite-volume scheme, analogous to
/// [`crate::march::calibrate`].
pub fn calibrate(
    params: &GasParams,
    forcing: &ForcingCoefficient,
    grid: &FvGrid,
    flux: FluxScheme,
    scheme_order: u32,
    record_dt: f64,
    record_nt: usize,
) -> Result<crate::march::Calibration, FvError> {
    let bg = crate::forcing::BackgroundSolution::new(*params, forcing.clone());
    let twin = BoundaryData::background_only(bg.clone());
    let field = fv_run(
        params,
        forcing,
        &twin,
        grid,
        flux,
        scheme_order,
        record_dt,
        record_nt,
    )?;
    let mut err: f64 = 0.0;
    for j in 0..field.nt {
        let qa = bg.riemann(field.t(j));
        for i in 0..field.nx {
            let q = field.get(j, i);
            err = err.max((q.r - qa.r).abs()).max((q.s - qa.s).abs());
        }
    }
    Ok(crate::march::Calibration {
        error_linf: err,
        periodicity_floor: crate::march::max_period_residual(&field),
    })
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

    #[test]
    fn constant_state_is_held_exactly() {
        let p = params();
        let forcing = ForcingCoefficient::zero(1.0).unwrap();
        let b = BoundaryData::background_only(BackgroundSolution::new(p, forcing.clone()));
        let grid = FvGrid {
            nx: 64,
            cfl: 0.45,
            t_end: 2.0,
        };
        for flux in [FluxScheme::Rusanov, FluxScheme::Hll] {
            for order in [1, 2] {
                let f = fv_run(&p, &forcing, &b, &grid, flux, order, 0.25, 9).unwrap();
                let sqrt2 = std::f64::consts::SQRT_2;
                for q in f.values() {
                    assert!((q.r - (1.0 - sqrt2)).abs() <= 1e-15);
                    assert!((q.s - (1.0 + sqrt2)).abs() <= 1e-15);
                }
            }
        }
    }

    #[test]
    fn background_error_shrinks_at_first_order() {
        let p = params();
        let forcing = sine_forcing();
        let mut errs = Vec::new();
        for nx in [100, 200] {
            let grid = FvGrid {
                nx,
                cfl: 0.45,
                t_end: 1.5,
            };
            let cal = calibrate(&p, &forcing, &grid, FluxScheme::Hll, 1, 1.0 / 64.0, 97).unwrap();
            errs.push(cal.error_linf);
        }
        let ratio = errs[0] / errs[1];
        assert!(
            (1.4..=2.6).contains(&ratio),
            "expected roughly first-order decay, got {ratio} ({errs:?})"
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
        for nx in [100, 200] {
            let grid = FvGrid {
                nx,
                cfl: 0.45,
                t_end: 1.5,
            };
            let cal =
                calibrate(&p, &forcing, &grid, FluxScheme::Rusanov, 1, 1.0 / 64.0, 97).unwrap();
            errs.push(cal.error_linf);
        }
        let ratio = errs[0] / errs[1];
        assert!((1.4..=2.6).contains(&ratio), "ratio {ratio} ({errs:?})");
    }

    #[test]
    fn rusanov_and_hll_agree_on_smooth_runs() {
        let p = params();
        let forcing = sine_forcing();
        let grid = FvGrid {
            nx: 200,
            cfl: 0.45,
            t_end: 1.0,
        };
        let ca = calibrate(&p, &forcing, &grid, FluxScheme::Rusanov, 1, 1.0 / 64.0, 65).unwrap();
        let cb = calibrate(&p, &forcing, &grid, FluxScheme::Hll, 1, 1.0 / 64.0, 65).unwrap();
        // both errors are pure truncation error of the same order
        assert!(ca.error_linf < 3.0 * cb.error_linf);
        assert!(cb.error_linf < 3.0 * ca.error_linf);
    }

    #[test]
    fn interior_update_telescopes_mass_flux() {
        // discrete conservation: the summed mass update must equal the
        // boundary flux difference exactly (up to rounding)
        let p = params();
        let n = 32 + 2 * NGHOST;
        let dx = p.length / 32.0;
        let mut rho: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.05 * (i as f64 * 0.3).sin())
            .collect();
        let mut mom: Vec<f64> = rho.iter().map(|r| 2.0 * r).collect();
        let mut ws = Workspace {
            frho: vec![0.0; n],
            fmom: vec![0.0; n],
            slope_rho: vec![0.0; n],
            slope_mom: vec![0.0; n],
        };
        let b = BoundaryData::background_only(BackgroundSolution::new(
            p,
            ForcingCoefficient::zero(1.0).unwrap(),
        ));
        let mut out_rho = rho.clone();
        let mut out_mom = mom.clone();
        let forcing = ForcingCoefficient::zero(1.0).unwrap();
        let dt = 1e-4;
        stage(
            &mut rho, &mut mom, &mut out_rho, &mut out_mom, 0.0, dt, dx, &p, &forcing, &b,
            FluxScheme::Hll, 2, &mut ws,
        );
        let change: f64 = (NGHOST..n - NGHOST).map(|i| out_rho[i] - rho[i]).sum();
        let flux_diff = -dt / dx * (ws.frho[n - NGHOST - 1] - ws.frho[NGHOST - 1]);
        assert!(
            (change - flux_diff).abs() < 1e-12,
            "change {change:e} vs flux difference {flux_diff:e}"
        );
    }

    #[test]
    fn subsonic_inflow_is_flagged_not_fatal() {
        let p = params();
        let forcing = ForcingCoefficient::zero(1.0).unwrap();
        let bg = BackgroundSolution::new(p, forcing.clone());
        // dips to u = 1.1 < c = sqrt(2): subsonic but positive
        let b = BoundaryData::new(
            bg,
            PeriodicSignal::background(),
            PeriodicSignal::BackgroundPlusSine3 {
                delta: -0.9,
                harmonic: 1,
            },
        );
        let grid = FvGrid {
            nx: 100,
            cfl: 0.45,
            t_end: 1.5,
        };
        let f = fv_run(&p, &forcing, &b, &grid, FluxScheme::Hll, 1, 1.0 / 64.0, 97).unwrap();
        assert!(f.meta.lost_supersonicity);
        assert!(f.meta.lambda0.unwrap() <= 0.0);
    }

    #[test]
    fn rejects_bad_grids() {
        let p = params();
        let forcing = ForcingCoefficient::zero(1.0).unwrap();
        let b = BoundaryData::background_only(BackgroundSolution::new(p, forcing.clone()));
        let bad = FvGrid {
            nx: 50,
            cfl: 1.5,
            t_end: 1.0,
        };
        assert!(matches!(
            fv_run(&p, &forcing, &b, &bad, FluxScheme::Hll, 1, 0.5, 3),
            Err(FvError::InvalidGrid(_))
        ));
        let short = FvGrid {
            nx: 50,
            cfl: 0.5,
            t_end: 0.5,
        };
        assert!(matches!(
            fv_run(&p, &forcing, &b, &short, FluxScheme::Hll, 1, 0.5, 3),
            Err(FvError::InvalidGrid(_))
        ));
    }
}

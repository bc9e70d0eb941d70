//! The acceptance suite: one check per verification criterion, runnable both
//! from `cargo test` (the `acceptance` integration test) and from the CLI
//! via `--self-test`.

use crate::analysis::{self, ConvergenceSetup, SolverSpec};
use crate::boundary::BoundaryData;
use crate::config::RunConfig;
use crate::field::Field;
use crate::forcing::BackgroundSolution;
use crate::fv::{self, FluxScheme, FvGrid};
use crate::gas::{
    eigenvalues, from_riemann, sound_speed, to_riemann, PrimitiveState,
};
use crate::march::{self, Calibration};
use crate::runner::{self, Prepared};
use crate::tolerances as tol;
use once_cell::sync::Lazy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} criterion {:2} ({}): {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

fn result(id: usize, name: &'static str, pass: bool, detail: String) -> CriterionResult {
    CriterionResult {
        id,
        name,
        pass,
        detail,
    }
}

fn fail(id: usize, name: &'static str, detail: String) -> CriterionResult {
    result(id, name, false, detail)
}

struct Baseline {
    prepared: Prepared,
    field: Field,
    calib: Calibration,
}

/// The baseline scenario is shared by several criteria; computed once.
static BASELINE: Lazy<Result<Baseline, String>> = Lazy::new(|| {
    let config = RunConfig::baseline();
    let prepared = runner::prepare(&config).map_err(|e| e.to_string())?;
    let field = runner::run_march(&prepared).map_err(|e| e.to_string())?;
    let calib = runner::calibrate_march(&prepared).map_err(|e| e.to_string())?;
    Ok(Baseline {
        prepared,
        field,
        calib,
    })
});

fn baseline() -> Result<&'static Baseline, String> {
    BASELINE.as_ref().map_err(|e| e.clone())
}

/// Criterion 1: Riemann/primitive round-trip algebra on 1e5 random
/// supersonic states.
pub fn criterion_1() -> CriterionResult {
    const NAME: &str = "round-trip algebra";
    let params = RunConfig::baseline().gas_params();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut max_rel = 0.0f64;
    let mut max_eig = 0.0f64;
    for _ in 0..100_000 {
        let rho: f64 = rng.random_range(0.1..10.0);
        let c = sound_speed(rho, &params).unwrap();
        let u = c + rng.random_range(f64::EPSILON..5.0);
        let w = PrimitiveState { rho, u };
        let q = match to_riemann(w, &params) {
            Ok(q) => q,
            Err(e) => return fail(1, NAME, format!("to_riemann failed: {e}")),
        };
        let back = match from_riemann(q, &params) {
            Ok(b) => b,
            Err(e) => return fail(1, NAME, format!("from_riemann failed: {e}")),
        };
        max_rel = max_rel
            .max((back.rho - rho).abs() / rho)
            .max((back.u - u).abs() / u);
        let (l1, l2) = eigenvalues(q, &params).unwrap();
        max_eig = max_eig.max((l2 - l1 - 2.0 * c).abs() / (1.0 + 2.0 * c));
    }
    let pass = max_rel <= tol::ROUNDTRIP_TOL && max_eig <= tol::ROUNDTRIP_TOL;
    result(
        1,
        NAME,
        pass,
        format!(
            "max round-trip rel err {max_rel:.2e}, max |l2-l1-2c| rel err {max_eig:.2e} \
             (tol {:.0e})",
            tol::ROUNDTRIP_TOL
        ),
    )
}

/// Criterion 2: alpha = 0 with constant boundary holds the constant state
/// to 1e-13 in both solvers over t in [0, 5].
pub fn criterion_2() -> CriterionResult {
    const NAME: &str = "zero-forcing identity";
    let mut config = RunConfig::baseline();
    config.forcing.kind = "zero".into();
    config.forcing.terms.clear();
    config.boundary.rho = crate::config::SignalConfig {
        kind: "constant".into(),
        value: 1.0,
        ..Default::default()
    };
    config.boundary.u = crate::config::SignalConfig {
        kind: "constant".into(),
        value: 2.0,
        ..Default::default()
    };
    config.march.nt_per_period = 256;
    config.march.t_max = 5.0;
    let prepared = match runner::prepare(&config) {
        Ok(p) => p,
        Err(e) => return fail(2, NAME, e.to_string()),
    };
    let qref = prepared.background.riemann(0.0);
    let sup = |f: &Field| -> f64 {
        f.values()
            .iter()
            .map(|q| (q.r - qref.r).abs().max((q.s - qref.s).abs()))
            .fold(0.0, f64::max)
    };

    let march_field = match runner::run_march(&prepared) {
        Ok(f) => f,
        Err(e) => return fail(2, NAME, format!("march failed: {e}")),
    };
    let march_dev = sup(&march_field);

    let mut fv_dev = 0.0f64;
    for (flux, order) in [(FluxScheme::Hll, 1), (FluxScheme::Rusanov, 2)] {
        let f = match fv::fv_run(
            &prepared.params,
            &prepared.forcing,
            &prepared.boundary,
            &FvGrid {
                nx: 400,
                cfl: 0.45,
                t_end: 5.0,
            },
            flux,
            order,
            march_field.dt,
            march_field.nt,
        ) {
            Ok(f) => f,
            Err(e) => return fail(2, NAME, format!("fv failed: {e}")),
        };
        fv_dev = fv_dev.max(sup(&f));
    }

    let pass = march_dev <= tol::CONSTANT_STATE_TOL && fv_dev <= tol::CONSTANT_STATE_TOL;
    result(
        2,
        NAME,
        pass,
        format!(
            "sup deviation march {march_dev:.2e}, fv {fv_dev:.2e} (tol {:.0e})",
            tol::CONSTANT_STATE_TOL
        ),
    )
}

/// Criterion 3: observed convergence orders on the exact background, plus
/// the finite-difference residual of the background ODE.
pub fn criterion_3() -> CriterionResult {
    const NAME: &str = "background exactness and order";
    let config = RunConfig::baseline();
    let params = config.gas_params();
    let forcing = match config.build_forcing() {
        Ok(f) => f,
        Err(e) => return fail(3, NAME, e.to_string()),
    };

    let study = |solver: SolverSpec, resolutions: Vec<usize>| {
        analysis::convergence_study(&ConvergenceSetup {
            params,
            forcing: forcing.clone(),
            solver,
            resolutions,
            t_max: 2.0,
        })
    };
    let o1 = match study(
        SolverSpec::March { scheme_order: 1 },
        vec![256, 512, 1024, 2048],
    ) {
        Ok(t) => t.fitted_order,
        Err(e) => return fail(3, NAME, format!("march order-1 study failed: {e}")),
    };
    let o2 = match study(
        SolverSpec::March { scheme_order: 2 },
        vec![64, 128, 256, 512],
    ) {
        Ok(t) => t.fitted_order,
        Err(e) => return fail(3, NAME, format!("march order-2 study failed: {e}")),
    };
    let ofv = match study(
        SolverSpec::Fv {
            flux: FluxScheme::Hll,
            scheme_order: 1,
        },
        vec![200, 400, 800, 1600],
    ) {
        Ok(t) => t.fitted_order,
        Err(e) => return fail(3, NAME, format!("fv study failed: {e}")),
    };

    // centered-difference residual of the background ODE
    let bg = BackgroundSolution::new(params, forcing.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let h = 1e-6;
    let mut max_res = 0.0f64;
    for _ in 0..1000 {
        let t: f64 = rng.random_range(0.0..3.0);
        let (qp, qm, q) = (bg.riemann(t + h), bg.riemann(t - h), bg.riemann(t));
        let rhs = 0.5 * forcing.alpha(t) * (q.r + q.s);
        max_res = max_res
            .max(((qp.r - qm.r) / (2.0 * h) - rhs).abs())
            .max(((qp.s - qm.s) / (2.0 * h) - rhs).abs());
    }

    let in_w = |o: f64, w: (f64, f64)| o >= w.0 && o <= w.1;
    let pass = in_w(o1, tol::ORDER1_WINDOW)
        && in_w(o2, tol::ORDER2_WINDOW)
        && in_w(ofv, tol::ORDER1_WINDOW)
        && max_res <= tol::BACKGROUND_ODE_RESIDUAL_TOL;
    result(
        3,
        NAME,
        pass,
        format!(
            "fitted orders: march-o1 {o1:.3}, march-o2 {o2:.3}, fv {ofv:.3}; \
             ODE residual {max_res:.2e} (tol {:.0e})",
            tol::BACKGROUND_ODE_RESIDUAL_TOL
        ),
    )
}

/// Criterion 4: periodicity onset on the baseline run.
pub fn criterion_4() -> CriterionResult {
    const NAME: &str = "periodicity onset";
    let b = match baseline() {
        Ok(b) => b,
        Err(e) => return fail(4, NAME, e),
    };
    let Some(floor) = b.calib.periodicity_floor else {
        return fail(4, NAME, "no periodicity floor from the twin run".into());
    };
    if floor > tol::PERIODICITY_FLOOR_CEILING {
        return fail(
            4,
            NAME,
            format!("periodicity floor {floor:.2e} above sanity ceiling"),
        );
    }
    let tol_used = tol::PERIODICITY_TOL_FACTOR * floor;
    let report = match analysis::periodicity_residual(&b.field, tol_used) {
        Ok(r) => r,
        Err(e) => return fail(4, NAME, e.to_string()),
    };
    let t0 = report.t0_predicted;
    let period = b.prepared.params.period;

    let max_in = |lo: f64, hi: f64| {
        report
            .residual_series
            .iter()
            .filter(|&&(t, _, _)| t >= lo && t <= hi)
            .map(|&(_, sup, _)| sup)
            .fold(0.0f64, f64::max)
    };
    let pre_max = max_in(0.0, t0 - 0.1);
    let post_max = max_in(t0 + 0.1, t0 + period);
    let separation_ok = post_max * tol::PERIODICITY_SEPARATION <= pre_max;

    let onset_ok = match report.onset_detected {
        Some(t) => t >= tol::ONSET_WINDOW.0 * t0 && t <= tol::ONSET_WINDOW.1 * t0,
        None => false,
    };
    let pass = separation_ok && onset_ok;
    let ratio = if post_max > 0.0 {
        format!("{:.1e}", pre_max / post_max)
    } else {
        "inf".into()
    };
    result(
        4,
        NAME,
        pass,
        format!(
            "pre-onset max {pre_max:.3e}, post-onset max {post_max:.3e} \
             (ratio {ratio}); onset {:?} with T0 = {t0:.4} (window [{:.4}, {:.4}])",
            report.onset_detected,
            tol::ONSET_WINDOW.0 * t0,
            tol::ONSET_WINDOW.1 * t0
        ),
    )
}

/// Criterion 5: the baseline run keeps lambda1 above the guaranteed floor,
/// and in fact above 0.9x the reference eigenvalue.
pub fn criterion_5() -> CriterionResult {
    const NAME: &str = "supersonic floor";
    let b = match baseline() {
        Ok(b) => b,
        Err(e) => return fail(5, NAME, e),
    };
    let (lambda0, _) = b.field.lambda0_t0();
    let lref = b.prepared.params.lambda1_ref();
    let hard = 0.5 * lref;
    let expected = tol::LAMBDA_FLOOR_EXPECT_FACTOR * lref;
    let pass = lambda0 >= hard && lambda0 >= expected;
    result(
        5,
        NAME,
        pass,
        format!(
            "lambda0 = {lambda0:.6} (guaranteed floor {hard:.6}, expected {expected:.6})"
        ),
    )
}

/// Criterion 6: linear response in the perturbation size.
pub fn criterion_6() -> CriterionResult {
    const NAME: &str = "linear response";
    let b = match baseline() {
        Ok(b) => b,
        Err(e) => return fail(6, NAME, e),
    };
    let mut sups = vec![analysis::deviation_c1(&b.field, &b.prepared.background).sup_m];
    for delta in [5e-3, 2.5e-3] {
        let mut config = RunConfig::baseline();
        config.boundary.u.delta = delta;
        let prepared = match runner::prepare(&config) {
            Ok(p) => p,
            Err(e) => return fail(6, NAME, e.to_string()),
        };
        let field = match runner::run_march(&prepared) {
            Ok(f) => f,
            Err(e) => return fail(6, NAME, e.to_string()),
        };
        sups.push(analysis::deviation_c1(&field, &prepared.background).sup_m);
    }
    let r1 = sups[0] / sups[1];
    let r2 = sups[1] / sups[2];
    let (lo, hi) = tol::RESPONSE_RATIO_WINDOW;
    let ratios_ok = r1 >= lo && r1 <= hi && r2 >= lo && r2 <= hi;

    let eps = b.prepared.perturbation_h2;
    let c0_obs = sups[0] / eps;
    let c0_ok = c0_obs <= tol::REGRESSION_MARGIN * tol::C0_OBS_FROZEN;

    result(
        6,
        NAME,
        ratios_ok && c0_ok,
        format!(
            "sup|m| = {:.3e}/{:.3e}/{:.3e}, ratios {r1:.3}, {r2:.3} (window [{lo}, {hi}]); \
             C0_obs = {c0_obs:.4e} (frozen {:.4e} x{})",
            sups[0],
            sups[1],
            sups[2],
            tol::C0_OBS_FROZEN,
            tol::REGRESSION_MARGIN
        ),
    )
}

/// Criterion 7: the characteristic-strip energy vanishes past the onset.
pub fn criterion_7() -> CriterionResult {
    const NAME: &str = "energy functional";
    let b = match baseline() {
        Ok(b) => b,
        Err(e) => return fail(7, NAME, e),
    };
    let period = b.prepared.params.period;
    let (_, t0) = b.field.lambda0_t0();
    let t_latest = b.field.t_end() - period - 1e-9;
    let probes = [
        (t0 + period + 0.05, 0.5),
        (t0 + period + 0.15, 0.75),
        ((t0 + period + 0.25).min(t_latest), b.field.x_end()),
    ];

    let e_est = b.calib.error_linf;
    let mut max_i = 0.0f64;
    let mut max_width = 0.0f64;
    for &(tp, xp) in &probes {
        let prof = match analysis::energy_functional(&b.field, tp, xp) {
            Ok(p) => p,
            Err(e) => return fail(7, NAME, format!("probe ({tp}, {xp}): {e}")),
        };
        let width = prof.curve_fast.t_terminal() - prof.curve_slow.t_terminal();
        max_width = max_width.max(width);
        for &(_, e) in &prof.points {
            max_i = max_i.max(e);
        }
    }
    let tol_i = (tol::PERIODICITY_TOL_FACTOR * e_est).powi(2) * max_width;

    // on a background twin, I is bounded by the squared scheme error
    let twin_boundary = BoundaryData::background_only(b.prepared.background.clone());
    let grid = match runner::march_grid(&b.prepared) {
        Ok(g) => g,
        Err(e) => return fail(7, NAME, e.to_string()),
    };
    let twin = match march::march(
        &b.prepared.params,
        &b.prepared.forcing,
        &twin_boundary,
        &grid,
        b.prepared.config.march.scheme_order,
    ) {
        Ok(f) => f,
        Err(e) => return fail(7, NAME, e.to_string()),
    };
    let mut max_i_bg = 0.0f64;
    match analysis::energy_functional(&twin, t0 + period + 0.1, twin.x_end()) {
        Ok(prof) => {
            for &(_, e) in &prof.points {
                max_i_bg = max_i_bg.max(e);
            }
        }
        Err(e) => return fail(7, NAME, format!("background probe: {e}")),
    }
    let bg_ok = max_i_bg <= e_est * e_est;

    let pass = max_i <= tol_i && bg_ok;
    result(
        7,
        NAME,
        pass,
        format!(
            "max I = {max_i:.3e} (tol {tol_i:.3e}); background max I = {max_i_bg:.3e} \
             (bound {:.3e})",
            e_est * e_est
        ),
    )
}

fn max_diff_in_window(march_field: &Field, fv_field: &Field, lo: f64, hi: f64) -> f64 {
    let mut max = 0.0f64;
    for j in 0..fv_field.nt {
        let t = fv_field.t(j);
        if t < lo || t > hi {
            continue;
        }
        for i in 0..fv_field.nx {
            let Some(qm) = march_field.interp(t, fv_field.x(i)) else {
                continue;
            };
            let qf = fv_field.get(j, i);
            max = max.max((qf.r - qm.r).abs()).max((qf.s - qm.s).abs());
        }
    }
    max
}

/// Criterion 8: cross-solver agreement within the derived tolerance, and
/// joint-refinement decay of the difference.
pub fn criterion_8() -> CriterionResult {
    const NAME: &str = "cross-solver oracle";
    let b = match baseline() {
        Ok(b) => b,
        Err(e) => return fail(8, NAME, e),
    };
    let p = &b.prepared;
    let period = p.params.period;
    let (_, t0) = b.field.lambda0_t0();
    let (w_lo, w_hi) = (t0 + period, t0 + 2.0 * period);

    let run_pair = |nt_pp: usize, nx: usize| -> Result<f64, String> {
        let mut config = RunConfig::baseline();
        config.march.nt_per_period = nt_pp;
        config.fv.nx = nx;
        let prep = runner::prepare(&config).map_err(|e| e.to_string())?;
        let mf = runner::run_march(&prep).map_err(|e| e.to_string())?;
        let ff = runner::run_fv(&prep, mf.dt, mf.nt).map_err(|e| e.to_string())?;
        Ok(max_diff_in_window(&mf, &ff, w_lo, w_hi))
    };

    // fine pair: the baseline march resolution with the configured fv grid
    let fv_grid = FvGrid {
        nx: p.config.fv.nx,
        cfl: p.config.fv.cfl,
        t_end: b.field.t_end(),
    };
    let fv_field = match runner::run_fv(p, b.field.dt, b.field.nt) {
        Ok(f) => f,
        Err(e) => return fail(8, NAME, e.to_string()),
    };
    let flux = match p.config.fv_flux() {
        Ok(f) => f,
        Err(e) => return fail(8, NAME, e.to_string()),
    };
    let fv_cal = match fv::calibrate(
        &p.params,
        &p.forcing,
        &fv_grid,
        flux,
        p.config.fv.scheme_order,
        b.field.dt,
        b.field.nt,
    ) {
        Ok(c) => c,
        Err(e) => return fail(8, NAME, e.to_string()),
    };
    let tol_cross = tol::CROSS_TOL_FACTOR * (b.calib.error_linf + fv_cal.error_linf);
    let diff_fine = max_diff_in_window(&b.field, &fv_field, w_lo, w_hi);

    let diff_coarse = match run_pair(256, p.config.fv.nx / 2) {
        Ok(d) => d,
        Err(e) => return fail(8, NAME, e),
    };
    let order = (diff_coarse / diff_fine).ln() / 2.0f64.ln();

    // the derived diagnostics inherit the agreement: the residual series of
    // the two fields must also match within tol_cross
    let tol_used = tol::PERIODICITY_TOL_FACTOR
        * b.calib.periodicity_floor.unwrap_or(f64::INFINITY);
    let residual_gap = match (
        analysis::periodicity_residual(&b.field, tol_used),
        analysis::periodicity_residual(&fv_field, tol_used),
    ) {
        (Ok(rm), Ok(rf)) => rm
            .residual_series
            .iter()
            .zip(&rf.residual_series)
            .map(|(&(_, a, _), &(_, b, _))| (a - b).abs())
            .fold(0.0f64, f64::max),
        (Err(e), _) | (_, Err(e)) => return fail(8, NAME, e.to_string()),
    };

    let pass = diff_fine <= tol_cross
        && order >= tol::CROSS_REFINE_ORDER_MIN
        && residual_gap <= tol_cross;
    result(
        8,
        NAME,
        pass,
        format!(
            "Linf diff on [T0+P, T0+2P] = {diff_fine:.3e} (tol_cross {tol_cross:.3e}); \
             joint refinement order {order:.2} (min {}); R_sup gap {residual_gap:.3e}",
            tol::CROSS_REFINE_ORDER_MIN
        ),
    )
}

/// Criterion 9: H² growth profile with frozen regression rate, matching the
/// boundary measurement at x = 0.
pub fn criterion_9() -> CriterionResult {
    const NAME: &str = "H2 growth";
    let b = match baseline() {
        Ok(b) => b,
        Err(e) => return fail(9, NAME, e),
    };
    let prof = match analysis::h2_profile(&b.field, &b.prepared.background) {
        Ok(p) => p,
        Err(e) => return fail(9, NAME, e.to_string()),
    };
    let finite = prof.columns.iter().all(|&(_, n)| n.is_finite());
    let c_fit_ok = prof.c_fit <= tol::REGRESSION_MARGIN * tol::C_FIT_FROZEN;

    let t_window0 = b.field.t(prof.window_start);
    let boundary_norm = match b.prepared.boundary.riemann_deviation_h2_window(
        t_window0,
        b.field.dt,
        prof.window_len,
    ) {
        Ok(n) => n,
        Err(e) => return fail(9, NAME, e.to_string()),
    };
    let x0_diff = (prof.columns[0].1 - boundary_norm).abs();
    let x0_ok = x0_diff <= tol::H2_BOUNDARY_MATCH_TOL;

    result(
        9,
        NAME,
        finite && c_fit_ok && x0_ok,
        format!(
            "C_fit = {:.3} (frozen {:.3} x{}); |profile(0) - boundary| = {x0_diff:.2e} \
             (tol {:.0e}); profile(0) = {:.4e}",
            prof.c_fit,
            tol::C_FIT_FROZEN,
            tol::REGRESSION_MARGIN,
            tol::H2_BOUNDARY_MATCH_TOL,
            prof.columns[0].1
        ),
    )
}

/// Criterion 10: repeated baseline runs emit bit-identical CSV output.
pub fn criterion_10() -> CriterionResult {
    const NAME: &str = "determinism";
    let base = std::env::temp_dir().join(format!(
        "periodic-euler-selftest-{}",
        std::process::id()
    ));
    let run = |tag: &str| -> Result<Vec<u8>, String> {
        let dir = base.join(tag);
        let config = RunConfig::baseline();
        runner::simulate(&config, &dir).map_err(|e| e.to_string())?;
        // every emitted file, in a fixed order
        let mut names: Vec<_> = std::fs::read_dir(&dir)
            .map_err(|e| e.to_string())?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        names.sort();
        let mut all = Vec::new();
        for path in names {
            all.extend_from_slice(path.file_name().unwrap().as_encoded_bytes());
            all.extend_from_slice(&std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        Ok(all)
    };
    let out = (|| -> Result<bool, String> {
        let a = run("a")?;
        let b = run("b")?;
        Ok(a == b)
    })();
    let _ = std::fs::remove_dir_all(&base);
    match out {
        Ok(identical) => result(
            10,
            NAME,
            identical,
            if identical {
                "two baseline runs produced byte-identical CSV and summary".into()
            } else {
                "outputs differ between repeated runs".into()
            },
        ),
        Err(e) => fail(10, NAME, e),
    }
}

/// Runs every criterion in order.
pub fn run_all() -> Vec<CriterionResult> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ]
}

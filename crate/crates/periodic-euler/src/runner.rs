//! Experiment orchestration: validates a configuration, runs the selected
//! solvers and diagnostics, and emits CSV artifacts plus a human-readable
//! summary.

use crate::analysis::{self, AnalysisError, ConvergenceSetup, SolverSpec};
use crate::boundary::BoundaryData;
use crate::config::{ConfigError, RunConfig};
use crate::field::Field;
use crate::forcing::{BackgroundSolution, ForcingCoefficient};
use crate::fv::{self, FvError, FvGrid};
use crate::gas::GasParams;
use crate::march::{self, Calibration, MarchError, MarchGrid};
use crate::tolerances;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// Process exit code: 2 config, 3 validation, 4 solver/runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Validation(_) => 3,
            RunError::Solver(_) | RunError::Io(_) => 4,
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.to_string())
    }
}

impl From<MarchError> for RunError {
    fn from(e: MarchError) -> Self {
        match e {
            MarchError::InvalidParams(p) => RunError::Validation(p.to_string()),
            other => RunError::Solver(other.to_string()),
        }
    }
}

impl From<FvError> for RunError {
    fn from(e: FvError) -> Self {
        match e {
            FvError::InvalidParams(p) => RunError::Validation(p.to_string()),
            other => RunError::Solver(other.to_string()),
        }
    }
}

impl From<AnalysisError> for RunError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::WindowTooShort { .. } | AnalysisError::TooFewResolutions(_) => {
                RunError::Validation(e.to_string())
            }
            other => RunError::Solver(other.to_string()),
        }
    }
}

/// All validated inputs of a run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: RunConfig,
    pub params: GasParams,
    pub forcing: ForcingCoefficient,
    pub background: BackgroundSolution,
    pub boundary: BoundaryData,
    pub perturbation_h2: f64,
}

/// Validates parameters, forcing and boundary before any solver starts.
pub fn prepare(config: &RunConfig) -> Result<Prepared, RunError> {
    let params = config.gas_params();
    params
        .validate()
        .map_err(|e| RunError::Validation(e.to_string()))?;

    let forcing = config.build_forcing()?;
    let freport = forcing.validate(&params, config.forcing.relaxed);
    if !freport.valid {
        return Err(RunError::Validation(format!(
            "forcing coefficient rejected: {}",
            freport.violation.unwrap_or_default()
        )));
    }

    let background = BackgroundSolution::new(params, forcing.clone());
    let boundary = config.build_boundary(background.clone())?;
    let breport = boundary.validate();
    if !breport.valid {
        return Err(RunError::Validation(format!(
            "boundary data rejected: {}",
            breport.violation.unwrap_or_default()
        )));
    }

    let perturbation_h2 = boundary.perturbation_h2();
    Ok(Prepared {
        config: config.clone(),
        params,
        forcing,
        background,
        boundary,
        perturbation_h2,
    })
}

pub fn march_grid(p: &Prepared) -> Result<MarchGrid, RunError> {
    Ok(MarchGrid::new(
        &p.params,
        p.config.march.nt_per_period,
        p.config.march.t_max,
        p.config.march.record_per_period,
        p.config.march.record_columns,
    )?)
}

pub fn run_march(p: &Prepared) -> Result<Field, RunError> {
    let grid = march_grid(p)?;
    let mut field = march::march(
        &p.params,
        &p.forcing,
        &p.boundary,
        &grid,
        p.config.march.scheme_order,
    )?;
    field.meta.forcing_desc = format!("{:?}", p.config.forcing.kind);
    field.meta.boundary_desc = format!(
        "rho:{} u:{}",
        p.config.boundary.rho.kind, p.config.boundary.u.kind
    );
    Ok(field)
}

/// Background-twin calibration of the configured march scheme.
pub fn calibrate_march(p: &Prepared) -> Result<Calibration, RunError> {
    let grid = march_grid(p)?;
    Ok(march::calibrate(
        &p.params,
        &p.forcing,
        &grid,
        p.config.march.scheme_order,
    )?)
}

pub fn run_fv(p: &Prepared, record_dt: f64, record_nt: usize) -> Result<Field, RunError> {
    let grid = FvGrid {
        nx: p.config.fv.nx,
        cfl: p.config.fv.cfl,
        t_end: (record_nt.saturating_sub(1)) as f64 * record_dt,
    };
    let mut field = fv::fv_run(
        &p.params,
        &p.forcing,
        &p.boundary,
        &grid,
        p.config.fv_flux()?,
        p.config.fv.scheme_order,
        record_dt,
        record_nt,
    )?;
    field.meta.forcing_desc = format!("{:?}", p.config.forcing.kind);
    field.meta.boundary_desc = format!(
        "rho:{} u:{}",
        p.config.boundary.rho.kind, p.config.boundary.u.kind
    );
    Ok(field)
}

fn write_field(field: &Field, cfg: &RunConfig, path: &Path) -> Result<(), RunError> {
    let file = fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    field
        .write_csv(&mut w, &cfg.provenance_lines(), cfg.output.stride)
        .map_err(RunError::Io)
}

/// Resolved-config comment lines carried by every emitted CSV.
fn provenance_header(cfg: &RunConfig) -> String {
    let mut s = String::new();
    for line in cfg.provenance_lines() {
        let _ = writeln!(s, "# {line}");
    }
    s
}

fn summary_block(p: &Prepared, field: &Field) -> String {
    let (lambda0, t0) = field.lambda0_t0();
    let dev = analysis::deviation_c1(field, &p.background);
    let mut s = String::new();
    let _ = writeln!(s, "scheme            : {}", field.meta.scheme);
    let _ = writeln!(
        s,
        "grid              : nt = {}, nx = {}, dt = {:.6e}, dx = {:.6e}",
        field.nt, field.nx, field.dt, field.dx
    );
    let _ = writeln!(s, "lambda0           : {lambda0:.12}");
    let _ = writeln!(s, "T0 = L/lambda0    : {t0:.12}");
    let _ = writeln!(s, "boundary eps (H2) : {:.6e}", p.perturbation_h2);
    let _ = writeln!(s, "sup |m|           : {:.6e}", dev.sup_m);
    let _ = writeln!(s, "sup |m_t|         : {:.6e}", dev.sup_m_t);
    let _ = writeln!(s, "sup |m_x|         : {:.6e}", dev.sup_m_x);
    let _ = writeln!(s, "sup |rho - ref|   : {:.6e}", dev.sup_rho_dev);
    let _ = writeln!(s, "sup |u - bg|      : {:.6e}", dev.sup_u_dev);
    if p.perturbation_h2 > 0.0 {
        let _ = writeln!(
            s,
            "C0_obs = sup|m|/eps: {:.6e}",
            dev.sup_m / p.perturbation_h2
        );
    }
    if field.meta.lost_supersonicity {
        let _ = writeln!(s, "WARNING           : supersonicity lost somewhere in the run");
    }
    s
}

fn write_curve_csv(
    curve: &analysis::CharCurve,
    cfg: &RunConfig,
    path: &Path,
) -> Result<(), RunError> {
    let mut csv = provenance_header(cfg);
    csv.push_str("x,t\n");
    for &(x, t) in &curve.nodes {
        let _ = writeln!(csv, "{x},{t}");
    }
    fs::write(path, csv)?;
    Ok(())
}

/// H² profile and characteristic curves for a completed march field; both
/// are skipped when the window does not fit the run.
fn write_march_diagnostics(
    p: &Prepared,
    field: &Field,
    cfg: &RunConfig,
    out_dir: &Path,
    summary: &mut String,
) -> Result<(), RunError> {
    match analysis::h2_profile(field, &p.background) {
        Ok(prof) => {
            let mut csv = provenance_header(cfg);
            csv.push_str("x,h2_norm\n");
            for &(x, n) in &prof.columns {
                let _ = writeln!(csv, "{x},{n}");
            }
            fs::write(out_dir.join("h2_profile.csv"), csv)?;
            let _ = writeln!(summary, "C_fit             : {:.6e}", prof.c_fit);
        }
        Err(AnalysisError::WindowTooShort { .. } | AnalysisError::GridMismatch(_)) => {}
        Err(e) => return Err(e.into()),
    }

    let (t_probe, x_probe) = (field.t_end(), field.x_end());
    for (family, name) in [
        (analysis::CharFamily::Slow, "characteristic_slow.csv"),
        (analysis::CharFamily::Fast, "characteristic_fast.csv"),
    ] {
        let curve = analysis::trace_characteristic(field, t_probe, x_probe, family)?;
        write_curve_csv(&curve, cfg, &out_dir.join(name))?;
    }
    Ok(())
}

/// `simulate`: runs the enabled solvers, writes field CSVs and a summary.
pub fn simulate(config: &RunConfig, out_dir: &Path) -> Result<String, RunError> {
    let p = prepare(config)?;
    fs::create_dir_all(out_dir)?;
    let mut summary = String::new();

    let march_field = if config.march.enabled {
        let field = run_march(&p)?;
        if config.output.write_fields {
            write_field(&field, config, &out_dir.join("march_field.csv"))?;
        }
        summary.push_str(&summary_block(&p, &field));
        write_march_diagnostics(&p, &field, config, out_dir, &mut summary)?;
        Some(field)
    } else {
        None
    };

    if config.fv.enabled {
        let (record_dt, record_nt) = match &march_field {
            Some(f) => (f.dt, f.nt),
            None => {
                let grid = march_grid(&p)?;
                (grid.record_dt(), grid.record_nt())
            }
        };
        let field = run_fv(&p, record_dt, record_nt)?;
        if config.output.write_fields {
            write_field(&field, config, &out_dir.join("fv_field.csv"))?;
        }
        summary.push('\n');
        summary.push_str(&summary_block(&p, &field));
    }

    if march_field.is_none() && !config.fv.enabled {
        return Err(RunError::Validation(
            "no solver enabled: set march.enabled or fv.enabled".into(),
        ));
    }

    fs::write(out_dir.join("summary.txt"), &summary)?;
    Ok(summary)
}

/// `periodicity`: residual series, onset detection and report.
pub fn periodicity(config: &RunConfig, out_dir: &Path) -> Result<String, RunError> {
    let p = prepare(config)?;
    fs::create_dir_all(out_dir)?;
    let field = run_march(&p)?;
    let calib = calibrate_march(&p)?;
    let floor = calib.periodicity_floor.ok_or_else(|| {
        RunError::Validation("march.t_max too short to measure the periodicity floor".into())
    })?;
    let tol = tolerances::PERIODICITY_TOL_FACTOR * floor;
    let report = analysis::periodicity_residual(&field, tol)?;

    let mut csv = provenance_header(config);
    csv.push_str("t,R_sup,R_l2\n");
    for &(t, sup, l2) in &report.residual_series {
        let _ = writeln!(csv, "{t},{sup},{l2}");
    }
    fs::write(out_dir.join("residual.csv"), csv)?;

    let mut s = summary_block(&p, &field);
    let _ = writeln!(s, "scheme error est  : {:.6e}", calib.error_linf);
    let _ = writeln!(s, "periodicity floor : {:.6e}", floor);
    let _ = writeln!(s, "tolerance used    : {:.6e}", tol);
    let _ = writeln!(s, "T0 predicted      : {:.6}", report.t0_predicted);
    match report.onset_detected {
        Some(t) => {
            let _ = writeln!(
                s,
                "onset detected    : {t:.6} ({:.3} T0)",
                t / report.t0_predicted
            );
        }
        None => {
            let _ = writeln!(s, "onset detected    : none within the window");
        }
    }
    fs::write(out_dir.join("summary.txt"), &s)?;
    Ok(s)
}

/// `compare`: march vs finite-volume on the shared record grid.
pub fn compare(config: &RunConfig, out_dir: &Path) -> Result<String, RunError> {
    let p = prepare(config)?;
    fs::create_dir_all(out_dir)?;
    let march_field = run_march(&p)?;
    let fv_field = run_fv(&p, march_field.dt, march_field.nt)?;

    let march_cal = calibrate_march(&p)?;
    let fv_cal = fv::calibrate(
        &p.params,
        &p.forcing,
        &FvGrid {
            nx: config.fv.nx,
            cfl: config.fv.cfl,
            t_end: march_field.t_end(),
        },
        p.config.fv_flux()?,
        config.fv.scheme_order,
        march_field.dt,
        march_field.nt,
    )
    .map_err(RunError::from)?;
    let tol_cross =
        tolerances::CROSS_TOL_FACTOR * (march_cal.error_linf + fv_cal.error_linf);

    let (_, t0) = march_field.lambda0_t0();
    let period = p.params.period;
    let (w_lo, w_hi) = (t0 + period, t0 + 2.0 * period);

    let mut csv = provenance_header(config);
    csv.push_str("t,linf,l2\n");
    let mut linf_all = 0.0f64;
    let mut linf_window = 0.0f64;
    for j in 0..fv_field.nt {
        let t = fv_field.t(j);
        let mut row_linf = 0.0f64;
        let mut row_l2 = 0.0f64;
        for i in 0..fv_field.nx {
            let x = fv_field.x(i);
            let Some(qm) = march_field.interp(t, x) else {
                continue;
            };
            let qf = fv_field.get(j, i);
            let d = ((qf.r - qm.r).powi(2) + (qf.s - qm.s).powi(2)).sqrt();
            row_linf = row_linf.max(d);
            row_l2 += d * d;
        }
        row_l2 = (row_l2 * fv_field.dx).sqrt();
        let _ = writeln!(csv, "{t},{row_linf},{row_l2}");
        linf_all = linf_all.max(row_linf);
        if t >= w_lo && t <= w_hi {
            linf_window = linf_window.max(row_linf);
        }
    }
    fs::write(out_dir.join("compare.csv"), csv)?;

    // judge on the settled window when the run reaches it, else on all of t
    let windowed = fv_field.t_end() + 1e-12 >= w_hi;
    let linf_judged = if windowed { linf_window } else { linf_all };
    let pass = linf_judged <= tol_cross;
    let mut s = String::new();
    let _ = writeln!(s, "march scheme      : {}", march_field.meta.scheme);
    let _ = writeln!(s, "fv scheme         : {}", fv_field.meta.scheme);
    let _ = writeln!(s, "march error est   : {:.6e}", march_cal.error_linf);
    let _ = writeln!(s, "fv error est      : {:.6e}", fv_cal.error_linf);
    let _ = writeln!(s, "tol_cross         : {:.6e}", tol_cross);
    let _ = writeln!(s, "Linf (all t)      : {:.6e}", linf_all);
    if windowed {
        let _ = writeln!(s, "Linf on [T0+P, T0+2P]: {:.6e}", linf_window);
    } else {
        let _ = writeln!(s, "run ends before T0+2P; judged on all t");
    }
    let _ = writeln!(
        s,
        "verdict           : {}",
        if pass { "PASS" } else { "FAIL" }
    );
    fs::write(out_dir.join("summary.txt"), &s)?;
    if !pass {
        return Err(RunError::Solver(format!(
            "cross-solver difference {linf_judged:e} exceeds tol_cross {tol_cross:e}"
        )));
    }
    Ok(s)
}

/// `convergence`: background-run error ladder with fitted order.
pub fn convergence(config: &RunConfig, out_dir: &Path) -> Result<String, RunError> {
    let p = prepare(config)?;
    fs::create_dir_all(out_dir)?;
    let solver = match config.convergence.solver.as_str() {
        "march" => SolverSpec::March {
            scheme_order: config.march.scheme_order,
        },
        "fv" => SolverSpec::Fv {
            flux: config.fv_flux()?,
            scheme_order: config.fv.scheme_order,
        },
        other => {
            return Err(RunError::Config(format!(
                "unknown convergence.solver '{other}'; expected march or fv"
            )))
        }
    };
    let table = analysis::convergence_study(&ConvergenceSetup {
        params: p.params,
        forcing: p.forcing.clone(),
        solver,
        resolutions: config.convergence.resolutions.clone(),
        t_max: config.convergence.t_max,
    })?;

    let mut csv = provenance_header(config);
    csv.push_str("resolution,h,error,observed_order\n");
    for row in &table.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            row.resolution,
            row.h,
            row.error,
            row.observed_order
                .map(|o| o.to_string())
                .unwrap_or_default()
        );
    }
    fs::write(out_dir.join("convergence.csv"), csv)?;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "solver            : {} (order {})",
        config.convergence.solver,
        match config.convergence.solver.as_str() {
            "fv" => config.fv.scheme_order,
            _ => config.march.scheme_order,
        }
    );
    for row in &table.rows {
        let _ = writeln!(
            s,
            "res {:>6}  h = {:.4e}  error = {:.6e}  order = {}",
            row.resolution,
            row.h,
            row.error,
            row.observed_order
                .map(|o| format!("{o:.3}"))
                .unwrap_or_else(|| "-".into())
        );
    }
    let _ = writeln!(s, "fitted order      : {:.4}", table.fitted_order);
    fs::write(out_dir.join("summary.txt"), &s)?;
    Ok(s)
}

/// `background`: tabulates the exact background solution.
pub fn background(config: &RunConfig, out_dir: &Path) -> Result<String, RunError> {
    let p = prepare(config)?;
    fs::create_dir_all(out_dir)?;
    let record_dt = p.params.period / config.march.record_per_period.max(1) as f64;
    let nt = (config.march.t_max / record_dt).ceil() as usize + 1;

    let mut csv = provenance_header(config);
    csv.push_str("t,rho,u,r_alpha,s_alpha,A\n");
    for j in 0..nt {
        let t = j as f64 * record_dt;
        let w = p.background.primitive(t);
        let q = p.background.riemann(t);
        let a = p.background.integral(t);
        let _ = writeln!(csv, "{t},{},{},{},{},{a}", w.rho, w.u, q.r, q.s);
    }
    fs::write(out_dir.join("background.csv"), csv)?;

    let rep = p.forcing.validate(&p.params, config.forcing.relaxed);
    let mut s = String::new();
    let _ = writeln!(s, "rows              : {nt}");
    let _ = writeln!(s, "min A             : {:.6e}", rep.min_integral);
    let _ = writeln!(
        s,
        "min exp(A)u - c   : {:.6e}",
        rep.min_supersonic_margin
    );
    let _ = writeln!(
        s,
        "max |alpha|,|a'|,|a''| : {:.4e}, {:.4e}, {:.4e}",
        rep.max_alpha, rep.max_dalpha, rep.max_ddalpha
    );
    fs::write(out_dir.join("summary.txt"), &s)?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prepare_rejects_bad_gamma() {
        let mut cfg = RunConfig::baseline();
        cfg.params.gamma = 0.9;
        let err = prepare(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("gamma must exceed 1"));
    }

    #[test]
    fn prepare_rejects_subsonic_reference() {
        let mut cfg = RunConfig::baseline();
        cfg.params.u_ref = 1.0;
        let err = prepare(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("reference state subsonic"));
    }

    #[test]
    fn prepare_rejects_nonzero_mean_forcing() {
        let mut cfg = RunConfig::baseline();
        cfg.forcing.kind = "tabulated".into();
        cfg.forcing.samples = vec![0.1; 16];
        let err = prepare(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn background_emission_is_periodic() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::baseline();
        cfg.march.t_max = 2.0;
        background(&cfg, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("background.csv")).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        // row at t = 0 equals row at t = P except for the time column
        let row0: Vec<&str> = rows[1].split(',').collect();
        let row_p: Vec<&str> = rows[1 + 256].split(',').collect();
        for k in 1..6 {
            let a: f64 = row0[k].parse().unwrap();
            let b: f64 = row_p[k].parse().unwrap();
            assert!((a - b).abs() < 1e-12, "column {k}");
        }
    }
}

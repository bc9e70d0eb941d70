//! Python bindings: the state algebra, forcing/background evaluation,
//! boundary data, both solvers and the main diagnostics.

use periodic_euler::analysis;
use periodic_euler::boundary::{BoundaryData, PeriodicSignal};
use periodic_euler::field::Field;
use periodic_euler::forcing::{BackgroundSolution, ForcingCoefficient, SineTerm};
use periodic_euler::fv::{self, FluxScheme, FvGrid};
use periodic_euler::gas::{self, GasParams, PrimitiveState, RiemannPair};
use periodic_euler::march::{self, MarchGrid};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Gas and problem parameters.
#[pyclass(name = "Params", skip_from_py_object)]
#[derive(Clone)]
struct PyParams {
    inner: GasParams,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (a=1.0, gamma=2.0, length=1.0, period=1.0, rho_ref=1.0, u_ref=2.0))]
    fn new(a: f64, gamma: f64, length: f64, period: f64, rho_ref: f64, u_ref: f64) -> Self {
        PyParams {
            inner: GasParams {
                a,
                gamma,
                length,
                period,
                rho_ref,
                u_ref,
            },
        }
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(err)
    }

    #[getter]
    fn c_ref(&self) -> f64 {
        self.inner.c_ref()
    }

    #[getter]
    fn lambda1_ref(&self) -> f64 {
        self.inner.lambda1_ref()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// The periodic force coefficient alpha(t).
#[pyclass(name = "Forcing", skip_from_py_object)]
#[derive(Clone)]
struct PyForcing {
    inner: ForcingCoefficient,
}

#[pymethods]
impl PyForcing {
    #[staticmethod]
    fn zero(period: f64) -> PyResult<Self> {
        Ok(PyForcing {
            inner: ForcingCoefficient::zero(period).map_err(err)?,
        })
    }

    /// terms: list of (amplitude, harmonic) pairs.
    #[staticmethod]
    fn sine_series(period: f64, terms: Vec<(f64, u32)>) -> PyResult<Self> {
        Ok(PyForcing {
            inner: ForcingCoefficient::sine_series(
                period,
                terms
                    .into_iter()
                    .map(|(amplitude, harmonic)| SineTerm {
                        amplitude,
                        harmonic,
                    })
                    .collect(),
            )
            .map_err(err)?,
        })
    }

    #[staticmethod]
    fn tabulated(period: f64, samples: Vec<f64>) -> PyResult<Self> {
        Ok(PyForcing {
            inner: ForcingCoefficient::tabulated(period, samples).map_err(err)?,
        })
    }

    fn alpha(&self, t: f64) -> f64 {
        self.inner.alpha(t)
    }

    /// Cumulative integral A(t), periodic by construction.
    fn integral(&self, t: f64) -> f64 {
        self.inner.integral(t)
    }

    /// Validation report as a dict.
    fn validate(&self, params: &PyParams, relaxed: bool) -> PyResult<Py<PyAny>> {
        let rep = self.inner.validate(&params.inner, relaxed);
        Python::attach(|py| {
            let d = pyo3::types::PyDict::new(py);
            d.set_item("valid", rep.valid)?;
            d.set_item("integral_over_period", rep.integral_over_period)?;
            d.set_item("min_integral", rep.min_integral)?;
            d.set_item("min_supersonic_margin", rep.min_supersonic_margin)?;
            d.set_item("max_alpha", rep.max_alpha)?;
            d.set_item("violation", rep.violation)?;
            Ok(d.into())
        })
    }
}

/// Periodic inflow data built over a background solution.
#[pyclass(name = "Boundary", skip_from_py_object)]
#[derive(Clone)]
struct PyBoundary {
    inner: BoundaryData,
}

#[pymethods]
impl PyBoundary {
    /// Boundary identical to the background solution.
    #[staticmethod]
    fn background(params: &PyParams, forcing: &PyForcing) -> Self {
        PyBoundary {
            inner: BoundaryData::background_only(BackgroundSolution::new(
                params.inner,
                forcing.inner.clone(),
            )),
        }
    }

    /// Background plus `delta sin^3(2 pi k t / P)` bumps per channel.
    #[staticmethod]
    #[pyo3(signature = (params, forcing, delta_u=0.0, harmonic_u=1, delta_rho=0.0, harmonic_rho=1))]
    fn perturbed(
        params: &PyParams,
        forcing: &PyForcing,
        delta_u: f64,
        harmonic_u: u32,
        delta_rho: f64,
        harmonic_rho: u32,
    ) -> Self {
        let bg = BackgroundSolution::new(params.inner, forcing.inner.clone());
        PyBoundary {
            inner: BoundaryData::new(
                bg,
                PeriodicSignal::BackgroundPlusSine3 {
                    delta: delta_rho,
                    harmonic: harmonic_rho,
                },
                PeriodicSignal::BackgroundPlusSine3 {
                    delta: delta_u,
                    harmonic: harmonic_u,
                },
            ),
        }
    }

    fn rho(&self, t: f64) -> f64 {
        self.inner.rho(t)
    }

    fn u(&self, t: f64) -> f64 {
        self.inner.u(t)
    }

    /// Discrete H2 size of the boundary perturbation.
    fn perturbation_h2(&self) -> f64 {
        self.inner.perturbation_h2()
    }

    fn validate(&self) -> PyResult<()> {
        let rep = self.inner.validate();
        if rep.valid {
            Ok(())
        } else {
            Err(PyValueError::new_err(rep.violation.unwrap_or_default()))
        }
    }
}

/// A computed (t, x) field of Riemann invariants.
#[pyclass(name = "Field")]
struct PyField {
    inner: Field,
}

#[pymethods]
impl PyField {
    #[getter]
    fn nt(&self) -> usize {
        self.inner.nt
    }

    #[getter]
    fn nx(&self) -> usize {
        self.inner.nx
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.inner.dx
    }

    #[getter]
    fn scheme(&self) -> String {
        self.inner.meta.scheme.clone()
    }

    fn times(&self) -> Vec<f64> {
        (0..self.inner.nt).map(|j| self.inner.t(j)).collect()
    }

    fn positions(&self) -> Vec<f64> {
        (0..self.inner.nx).map(|i| self.inner.x(i)).collect()
    }

    /// Flat row-major (t, x) arrays of the invariants.
    fn r(&self) -> Vec<f64> {
        self.inner.values().iter().map(|q| q.r).collect()
    }

    fn s(&self) -> Vec<f64> {
        self.inner.values().iter().map(|q| q.s).collect()
    }

    /// `(lambda0, T0)` for the run.
    fn lambda0(&self) -> (f64, f64) {
        self.inner.lambda0_t0()
    }

    /// `(t, R_sup, R_l2)` rows of the period-difference residual.
    fn periodicity_residual(&self, tol: f64) -> PyResult<Vec<(f64, f64, f64)>> {
        Ok(analysis::periodicity_residual(&self.inner, tol)
            .map_err(err)?
            .residual_series)
    }
}

#[pyfunction]
fn sound_speed(rho: f64, params: &PyParams) -> PyResult<f64> {
    gas::sound_speed(rho, &params.inner).map_err(err)
}

#[pyfunction]
fn to_riemann(rho: f64, u: f64, params: &PyParams) -> PyResult<(f64, f64)> {
    let q = gas::to_riemann(PrimitiveState { rho, u }, &params.inner).map_err(err)?;
    Ok((q.r, q.s))
}

#[pyfunction]
fn from_riemann(r: f64, s: f64, params: &PyParams) -> PyResult<(f64, f64)> {
    let w = gas::from_riemann(RiemannPair { r, s }, &params.inner).map_err(err)?;
    Ok((w.rho, w.u))
}

#[pyfunction]
fn eigenvalues(r: f64, s: f64, params: &PyParams) -> PyResult<(f64, f64)> {
    gas::eigenvalues(RiemannPair { r, s }, &params.inner).map_err(err)
}

/// Background solution `(rho_ref, exp(A(t)) u_ref)` at time t.
#[pyfunction]
fn background_state(params: &PyParams, forcing: &PyForcing, t: f64) -> (f64, f64) {
    let bg = BackgroundSolution::new(params.inner, forcing.inner.clone());
    let w = bg.primitive(t);
    (w.rho, w.u)
}

/// Space-marching solve; returns the recorded field.
#[pyfunction]
#[pyo3(signature = (params, forcing, boundary, nt_per_period=512, t_max=4.0, scheme_order=1,
                    record_per_period=256, record_columns=1024))]
#[allow(clippy::too_many_arguments)]
fn run_march(
    params: &PyParams,
    forcing: &PyForcing,
    boundary: &PyBoundary,
    nt_per_period: usize,
    t_max: f64,
    scheme_order: u32,
    record_per_period: usize,
    record_columns: usize,
) -> PyResult<PyField> {
    let grid = MarchGrid::new(
        &params.inner,
        nt_per_period,
        t_max,
        record_per_period,
        record_columns,
    )
    .map_err(err)?;
    let field = march::march(
        &params.inner,
        &forcing.inner,
        &boundary.inner,
        &grid,
        scheme_order,
    )
    .map_err(err)?;
    Ok(PyField { inner: field })
}

/// Finite-volume solve recorded on the same uniform time grid.
#[pyfunction]
#[pyo3(signature = (params, forcing, boundary, nx=1600, cfl=0.45, flux="hll", scheme_order=1,
                    record_dt=1.0/256.0, record_nt=1025))]
#[allow(clippy::too_many_arguments)]
fn run_fv(
    params: &PyParams,
    forcing: &PyForcing,
    boundary: &PyBoundary,
    nx: usize,
    cfl: f64,
    flux: &str,
    scheme_order: u32,
    record_dt: f64,
    record_nt: usize,
) -> PyResult<PyField> {
    let flux = match flux {
        "rusanov" => FluxScheme::Rusanov,
        "hll" => FluxScheme::Hll,
        other => return Err(PyValueError::new_err(format!("unknown flux '{other}'"))),
    };
    let grid = FvGrid {
        nx,
        cfl,
        t_end: (record_nt.saturating_sub(1)) as f64 * record_dt,
    };
    let field = fv::fv_run(
        &params.inner,
        &forcing.inner,
        &boundary.inner,
        &grid,
        flux,
        scheme_order,
        record_dt,
        record_nt,
    )
    .map_err(err)?;
    Ok(PyField { inner: field })
}

#[pymodule]
fn periodic_euler_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyForcing>()?;
    m.add_class::<PyBoundary>()?;
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(sound_speed, m)?)?;
    m.add_function(wrap_pyfunction!(to_riemann, m)?)?;
    m.add_function(wrap_pyfunction!(from_riemann, m)?)?;
    m.add_function(wrap_pyfunction!(eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(background_state, m)?)?;
    m.add_function(wrap_pyfunction!(run_march, m)?)?;
    m.add_function(wrap_pyfunction!(run_fv, m)?)?;
    Ok(())
}

//! Discrete solutions on a rectangular (t, x) record grid, shared by both
//! solvers, plus CSV serialization.

use crate::forcing::BackgroundSolution;
use crate::gas::{eigenvalues_unchecked, from_riemann, GasParams, RiemannPair};
use std::io::{self, Write};

/// Provenance and run statistics attached to a [`Field`].
#[derive(Debug, Clone)]
pub struct FieldMeta {
    pub params: GasParams,
    /// Scheme identifier, e.g. `march-o1` or `fv-hll-o2`.
    pub scheme: String,
    pub forcing_desc: String,
    pub boundary_desc: String,
    /// Minimum slow eigenvalue over all computed nodes with t >= 0.
    pub lambda0: Option<f64>,
    /// Measured sup-norm error of a matched background twin run, when the
    /// caller calibrated the scheme.
    pub error_estimate: Option<f64>,
    /// Measured periodicity residual of a matched background twin run.
    pub periodicity_floor: Option<f64>,
    /// Per-column (march) or per-record-interval (fv) minimum of lambda1,
    /// recorded while checking the CFL/supersonicity conditions.
    pub cfl_history: Vec<f64>,
    /// Set if the finite-volume oracle saw a non-supersonic state (not
    /// fatal there).
    pub lost_supersonicity: bool,
}

impl FieldMeta {
    pub fn new(params: GasParams, scheme: impl Into<String>) -> Self {
        FieldMeta {
            params,
            scheme: scheme.into(),
            forcing_desc: String::new(),
            boundary_desc: String::new(),
            lambda0: None,
            error_estimate: None,
            periodicity_floor: None,
            cfl_history: Vec::new(),
            lost_supersonicity: false,
        }
    }
}

/// A solution sampled on a uniform rectangular record grid, stored row-major
/// over (t, x). Both solvers produce this layout; diagnostics and CSV
/// serialization work on it uniformly.
#[derive(Debug, Clone)]
pub struct Field {
    pub t0: f64,
    pub dt: f64,
    pub nt: usize,
    pub x0: f64,
    pub dx: f64,
    pub nx: usize,
    values: Vec<RiemannPair>,
    pub meta: FieldMeta,
}

impl Field {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        t0: f64,
        dt: f64,
        nt: usize,
        x0: f64,
        dx: f64,
        nx: usize,
        values: Vec<RiemannPair>,
        meta: FieldMeta,
    ) -> Self {
        assert_eq!(values.len(), nt * nx, "field shape mismatch");
        Field {
            t0,
            dt,
            nt,
            x0,
            dx,
            nx,
            values,
            meta,
        }
    }

    /// Samples the analytic background solution on a record grid; used by
    /// diagnostics tests that need an exact field.
    pub fn from_background(bg: &BackgroundSolution, dt: f64, nt: usize, dx: f64, nx: usize) -> Self {
        let mut values = Vec::with_capacity(nt * nx);
        for j in 0..nt {
            let q = bg.riemann(j as f64 * dt);
            for _ in 0..nx {
                values.push(q);
            }
        }
        let mut meta = FieldMeta::new(*bg.params(), "analytic-background");
        meta.lambda0 = Some(
            (0..nt)
                .map(|j| bg.lambda1(j as f64 * dt))
                .fold(f64::INFINITY, f64::min),
        );
        Field::new(0.0, dt, nt, 0.0, dx, nx, values, meta)
    }

    #[inline]
    pub fn t(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.nt - 1)
    }

    pub fn x_end(&self) -> f64 {
        self.x(self.nx - 1)
    }

    #[inline]
    pub fn get(&self, j: usize, i: usize) -> RiemannPair {
        self.values[j * self.nx + i]
    }

    pub fn values(&self) -> &[RiemannPair] {
        &self.values
    }

    /// Row of states at fixed time index.
    pub fn row(&self, j: usize) -> &[RiemannPair] {
        &self.values[j * self.nx..(j + 1) * self.nx]
    }

    /// Minimum of lambda1 over stored nodes with t >= 0.
    pub fn min_lambda1(&self) -> f64 {
        let mut min = f64::INFINITY;
        for j in 0..self.nt {
            if self.t(j) < 0.0 {
                continue;
            }
            for i in 0..self.nx {
                let (l1, _) = eigenvalues_unchecked(self.get(j, i), &self.meta.params);
                min = min.min(l1);
            }
        }
        min
    }

    /// `(lambda0, T0 = L / lambda0)`: the recorded infimum of the slow
    /// eigenvalue and the induced sweep time. Falls back to scanning the
    /// stored rows when the solver did not record lambda0.
    pub fn lambda0_t0(&self) -> (f64, f64) {
        let lambda0 = self.meta.lambda0.unwrap_or_else(|| self.min_lambda1());
        (lambda0, self.meta.params.length / lambda0)
    }

    /// Bilinear interpolation of the stored states at (t, x).
    pub fn interp(&self, t: f64, x: f64) -> Option<RiemannPair> {
        let ft = (t - self.t0) / self.dt;
        let fx = (x - self.x0) / self.dx;
        if ft < 0.0 || fx < 0.0 {
            return None;
        }
        let jt = (ft as usize).min(self.nt.saturating_sub(2));
        let ix = (fx as usize).min(self.nx.saturating_sub(2));
        if jt + 1 >= self.nt || ix + 1 >= self.nx {
            return None;
        }
        let (wt, wx) = (ft - jt as f64, fx - ix as f64);
        if !(0.0..=1.0 + 1e-12).contains(&wt) || !(0.0..=1.0 + 1e-12).contains(&wx) {
            return None;
        }
        let blend = |f: fn(&RiemannPair) -> f64| {
            let q00 = f(&self.values[jt * self.nx + ix]);
            let q01 = f(&self.values[jt * self.nx + ix + 1]);
            let q10 = f(&self.values[(jt + 1) * self.nx + ix]);
            let q11 = f(&self.values[(jt + 1) * self.nx + ix + 1]);
            (1.0 - wt) * ((1.0 - wx) * q00 + wx * q01) + wt * ((1.0 - wx) * q10 + wx * q11)
        };
        Some(RiemannPair {
            r: blend(|q| q.r),
            s: blend(|q| q.s),
        })
    }

    /// Writes the field as CSV: comment header with provenance, then
    /// `t,x,r,s,rho,u,lambda1,lambda2` rows, row-major over (t, x).
    /// `provenance` lines are emitted verbatim after a `# `.
    pub fn write_csv<W: Write>(
        &self,
        mut w: W,
        provenance: &[String],
        stride: usize,
    ) -> io::Result<()> {
        let stride = stride.max(1);
        writeln!(w, "# scheme = {}", self.meta.scheme)?;
        if let Some(l0) = self.meta.lambda0 {
            writeln!(w, "# lambda0 = {l0}")?;
        }
        for line in provenance {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "t,x,r,s,rho,u,lambda1,lambda2")?;
        let params = self.meta.params;
        for j in (0..self.nt).step_by(stride) {
            let t = self.t(j);
            for i in (0..self.nx).step_by(stride) {
                let q = self.get(j, i);
                let (l1, l2) = eigenvalues_unchecked(q, &params);
                let w_prim = from_riemann(q, &params)
                    .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    t,
                    self.x(i),
                    q.r,
                    q.s,
                    w_prim.rho,
                    w_prim.u,
                    l1,
                    l2
                )?;
            }
        }
        Ok(())
    }
}

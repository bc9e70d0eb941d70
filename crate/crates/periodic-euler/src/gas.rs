//! State representations and the algebra of the isentropic Euler system:
//! pressure law `p = a rho^gamma`, sound speed, Riemann-invariant transforms
//! and characteristic speeds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Density floor below which conserved-to-primitive conversion fails instead
/// of clamping. The smooth supersonic regime never approaches vacuum, so a
/// density this small indicates a solver bug rather than physics.
pub const DENSITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GasError {
    #[error("density must be positive, got {rho}")]
    NonPositiveDensity { rho: f64 },
    #[error("invalid Riemann pair: s ({s}) must exceed r ({r})")]
    InvalidRiemannPair { r: f64, s: f64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("pressure coefficient a must be positive, got {0}")]
    NonPositiveA(f64),
    #[error("gamma must exceed 1, got {0}")]
    GammaTooSmall(f64),
    #[error("duct length must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("period must be positive, got {0}")]
    NonPositivePeriod(f64),
    #[error("reference density must be positive, got {0}")]
    NonPositiveRhoRef(f64),
    #[error("reference state subsonic: u_ref = {u_ref} does not exceed c_ref = {c_ref}")]
    SubsonicReference { u_ref: f64, c_ref: f64 },
}

/// Pressure-law constants and the geometry of the problem: duct length `L`,
/// boundary period `P` and the supersonic reference inflow state.
///
/// All quantities are nondimensional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasParams {
    /// Pressure coefficient in `p = a rho^gamma` (> 0).
    pub a: f64,
    /// Adiabatic exponent (> 1).
    pub gamma: f64,
    /// Duct length `L` (> 0).
    pub length: f64,
    /// Time period `P` of the forcing and boundary data (> 0).
    pub period: f64,
    /// Reference inflow density (> 0).
    pub rho_ref: f64,
    /// Reference inflow velocity; must exceed the reference sound speed.
    pub u_ref: f64,
}

impl GasParams {
    /// Checks the admissibility constraints, including strict supersonicity
    /// of the reference state.
    pub fn validate(&self) -> Result<(), ParamsError> {
        if !(self.a > 0.0) {
            return Err(ParamsError::NonPositiveA(self.a));
        }
        if !(self.gamma > 1.0) {
            return Err(ParamsError::GammaTooSmall(self.gamma));
        }
        if !(self.length > 0.0) {
            return Err(ParamsError::NonPositiveLength(self.length));
        }
        if !(self.period > 0.0) {
            return Err(ParamsError::NonPositivePeriod(self.period));
        }
        if !(self.rho_ref > 0.0) {
            return Err(ParamsError::NonPositiveRhoRef(self.rho_ref));
        }
        let c_ref = sound_speed_unchecked(self.rho_ref, self);
        if !(self.u_ref > c_ref) {
            return Err(ParamsError::SubsonicReference {
                u_ref: self.u_ref,
                c_ref,
            });
        }
        Ok(())
    }

    /// Sound speed of the reference state.
    pub fn c_ref(&self) -> f64 {
        sound_speed_unchecked(self.rho_ref, self)
    }

    /// `u_ref - c_ref`, the slow eigenvalue of the reference state.
    pub fn lambda1_ref(&self) -> f64 {
        self.u_ref - self.c_ref()
    }

    /// Guaranteed lower bound `(u_ref - c_ref) / 2` on the slow eigenvalue in
    /// the small-perturbation regime; used for grid sizing and abort checks.
    pub fn lambda_floor(&self) -> f64 {
        0.5 * self.lambda1_ref()
    }

    /// Reference state as a primitive pair.
    pub fn reference_state(&self) -> PrimitiveState {
        PrimitiveState {
            rho: self.rho_ref,
            u: self.u_ref,
        }
    }
}

/// Density and velocity `(rho, u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitiveState {
    pub rho: f64,
    pub u: f64,
}

/// Riemann invariants `r = u/2 - c/(gamma-1)`, `s = u/2 + c/(gamma-1)`.
/// A pair is valid iff `s > r`, which is equivalent to `rho > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannPair {
    pub r: f64,
    pub s: f64,
}

/// Conserved variables `(rho, rho u)` used by the finite-volume solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedState {
    pub rho: f64,
    pub mom: f64,
}

fn sound_speed_unchecked(rho: f64, params: &GasParams) -> f64 {
    (params.a * params.gamma).sqrt() * rho.powf(0.5 * (params.gamma - 1.0))
}

/// Sound speed `c = sqrt(a gamma) rho^((gamma-1)/2)`.
pub fn sound_speed(rho: f64, params: &GasParams) -> Result<f64, GasError> {
    if !(rho > 0.0) {
        return Err(GasError::NonPositiveDensity { rho });
    }
    Ok(sound_speed_unchecked(rho, params))
}

/// Pressure `p = a rho^gamma`; defined for `rho >= 0` (vacuum gives 0).
pub fn pressure(rho: f64, params: &GasParams) -> f64 {
    params.a * rho.powf(params.gamma)
}

/// Maps a primitive state to its Riemann invariants.
pub fn to_riemann(w: PrimitiveState, params: &GasParams) -> Result<RiemannPair, GasError> {
    let c = sound_speed(w.rho, params)?;
    let half_u = 0.5 * w.u;
    let spread = c / (params.gamma - 1.0);
    Ok(RiemannPair {
        r: half_u - spread,
        s: half_u + spread,
    })
}

/// Inverse of [`to_riemann`]: `u = r + s`, `c = (gamma-1)(s-r)/2`,
/// `rho = (c^2 / (a gamma))^(1/(gamma-1))`.
pub fn from_riemann(q: RiemannPair, params: &GasParams) -> Result<PrimitiveState, GasError> {
    if !(q.s > q.r) {
        return Err(GasError::InvalidRiemannPair { r: q.r, s: q.s });
    }
    let c = 0.5 * (params.gamma - 1.0) * (q.s - q.r);
    let rho = (c * c / (params.a * params.gamma)).powf(1.0 / (params.gamma - 1.0));
    Ok(PrimitiveState { rho, u: q.r + q.s })
}

/// Characteristic speeds `(lambda1, lambda2) = (u - c, u + c)` of a valid pair.
pub fn eigenvalues(q: RiemannPair, params: &GasParams) -> Result<(f64, f64), GasError> {
    if !(q.s > q.r) {
        return Err(GasError::InvalidRiemannPair { r: q.r, s: q.s });
    }
    Ok(eigenvalues_unchecked(q, params))
}

/// Eigenvalues without the validity check; the hot path of both solvers.
/// `u = r + s` and `c = (gamma-1)(s-r)/2`, so
/// `lambda1 = r + s - c`, `lambda2 = r + s + c`.
#[inline]
pub fn eigenvalues_unchecked(q: RiemannPair, params: &GasParams) -> (f64, f64) {
    let u = q.r + q.s;
    let c = 0.5 * (params.gamma - 1.0) * (q.s - q.r);
    (u - c, u + c)
}

/// Strict supersonicity test `lambda1 > 0`; the sonic state is rejected.
pub fn is_supersonic(q: RiemannPair, params: &GasParams) -> bool {
    if !(q.s > q.r) {
        return false;
    }
    eigenvalues_unchecked(q, params).0 > 0.0
}

pub fn primitive_to_conserved(w: PrimitiveState) -> Result<ConservedState, GasError> {
    if !(w.rho > 0.0) {
        return Err(GasError::NonPositiveDensity { rho: w.rho });
    }
    Ok(ConservedState {
        rho: w.rho,
        mom: w.rho * w.u,
    })
}

pub fn conserved_to_primitive(u: ConservedState) -> Result<PrimitiveState, GasError> {
    if !(u.rho > DENSITY_FLOOR) {
        return Err(GasError::NonPositiveDensity { rho: u.rho });
    }
    Ok(PrimitiveState {
        rho: u.rho,
        u: u.mom / u.rho,
    })
}

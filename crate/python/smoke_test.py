#!/usr/bin/env python3
"""Smoke test for the periodic_euler_py extension module.

Builds the cdylib if needed, loads it, and exercises the main types and
operations: state algebra, forcing/background evaluation, boundary data,
both solvers and the periodicity diagnostic.

Usage: python3 python/smoke_test.py [--debug]
"""
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def build_and_import(profile: str):
    cmd = ["cargo", "build", "-p", "periodic-euler-py"]
    if profile == "release":
        cmd.append("--release")
    subprocess.run(cmd, cwd=REPO, check=True)
    lib = REPO / "target" / profile / "libperiodic_euler_py.so"
    if not lib.exists():
        sys.exit(f"extension library not found at {lib}")
    stage = Path(tempfile.mkdtemp(prefix="periodic_euler_py_"))
    shutil.copy2(lib, stage / "periodic_euler_py.so")
    sys.path.insert(0, str(stage))
    import periodic_euler_py

    return periodic_euler_py


def approx(a, b, tol=1e-12):
    assert abs(a - b) <= tol * max(1.0, abs(b)), f"{a} != {b} (tol {tol})"


def main():
    profile = "debug" if "--debug" in sys.argv else "release"
    pe = build_and_import(profile)

    # state algebra on the baseline parameters
    params = pe.Params(a=1.0, gamma=2.0, length=1.0, period=1.0, rho_ref=1.0, u_ref=2.0)
    params.validate()
    sqrt2 = math.sqrt(2.0)
    approx(pe.sound_speed(1.0, params), sqrt2)
    r, s = pe.to_riemann(1.0, 2.0, params)
    approx(r, 1.0 - sqrt2)
    approx(s, 1.0 + sqrt2)
    rho, u = pe.from_riemann(r, s, params)
    approx(rho, 1.0)
    approx(u, 2.0)
    l1, l2 = pe.eigenvalues(r, s, params)
    approx(l2 - l1, 2.0 * sqrt2)

    subsonic = pe.Params(u_ref=1.0)
    try:
        subsonic.validate()
    except ValueError as e:
        assert "subsonic" in str(e)
    else:
        sys.exit("subsonic reference state was not rejected")

    # forcing and the explicit background solution
    forcing = pe.Forcing.sine_series(1.0, [(0.5, 1)])
    approx(forcing.alpha(0.25), 0.5)
    approx(forcing.integral(0.5), 1.0 / (2.0 * math.pi))
    assert forcing.integral(1.0) == 0.0
    report = forcing.validate(params, False)
    assert report["valid"], report
    approx(report["min_supersonic_margin"], 2.0 - sqrt2, 1e-9)
    rho_bg, u_bg = pe.background_state(params, forcing, 0.5)
    approx(rho_bg, 1.0)
    approx(u_bg, 2.0 * math.exp(1.0 / (2.0 * math.pi)))

    # boundary data with the default sin^3 velocity perturbation
    boundary = pe.Boundary.perturbed(params, forcing, delta_u=1e-2)
    boundary.validate()
    eps = boundary.perturbation_h2()
    approx(eps, 1e-2 * 66.37716630312385, 1e-4)

    # a small marching run: supersonic throughout, periodic past the onset
    field = pe.run_march(params, forcing, boundary, nt_per_period=256, t_max=4.0)
    lam0, t_onset_scale = field.lambda0()
    assert abs(lam0 - (2.0 - sqrt2)) < 0.05, lam0
    assert field.nt == len(field.times())
    assert field.nx == len(field.positions())
    assert len(field.r()) == field.nt * field.nx

    series = field.periodicity_residual(1e-10)
    t0 = t_onset_scale
    pre = max(sup for t, sup, _ in series if t <= t0 - 0.1)
    post = max(sup for t, sup, _ in series if t0 + 0.1 <= t <= t0 + 1.0)
    assert post < 1e-2 * pre, (pre, post)

    # the finite-volume oracle agrees with the marching solver
    fv_field = pe.run_fv(
        params, forcing, boundary,
        nx=400, record_dt=field.dt, record_nt=field.nt,
    )
    lam0_fv, _ = fv_field.lambda0()
    assert abs(lam0_fv - lam0) < 0.02, (lam0, lam0_fv)

    print("smoke test passed:")
    print(f"  lambda0 (march) = {lam0:.6f}, T0 = {t0:.4f}")
    print(f"  boundary eps    = {eps:.6e}")
    print(f"  residual pre/post onset = {pre:.3e} / {post:.3e}")


if __name__ == "__main__":
    main()

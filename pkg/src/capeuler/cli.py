"""Command-line entry point: ``capeuler <subcommand> [options]``.

Exit status: 0 when every check passes, 1 when a check fails or a scenario
is refused, 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .energies import energy_monitors, higher_energy
from .exact import annulus_initial_state, annulus_integrate, annulus_rt_signs, bump_profile
from .geometry import StarCurve, ellipse_curve, geometry, make_star_curve
from .io import (ConfigError, CheckpointVersionError, RunManifest, TIMESERIES_COLUMNS, build_state,
                 parse_config, read_checkpoint, write_checkpoint, write_timeseries, output_root)
from .solver import (SWEEP_SCENARIOS, RTConditionError, SimulationError, StabilityError, WaveState,
                     dispersion_probe, eps_sweep, simulate)

__all__ = ["main", "dispatch", "diagnostics_row", "build_parser"]


class _Out:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def __call__(self, *args):
        if not self.quiet:
            print(*args)


def diagnostics_row(state: WaveState, eps: float, n_r: int) -> dict:
    """One time-series row: energies, RT margin, geometry summaries and monitors."""
    dom = state.domain(n_r)
    v = state.interior_velocity(dom)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rep = higher_energy(dom, v, eps)
    row = {"t": state.t, **rep.as_dict()}
    row["max_kappa"] = max(float(np.max(np.abs(g.kappa))) for g in dom.geoms)
    row["area"] = dom.area
    row.update(energy_monitors(rep, dom, v, eps))
    return row


def _run_dir(args, name: str) -> Path:
    d = output_root(args.out) / name
    d.mkdir(parents=True, exist_ok=True)
    return d


def _table(out, header, rows):
    out("  ".join(f"{h:>14}" for h in header))
    for r in rows:
        out("  ".join(f"{x:>14.6g}" if isinstance(x, float) else f"{str(x):>14}" for x in r))


# ----- subcommands -----------------------------------------------------

def cmd_geom(args, out) -> int:
    if args.config:
        cfg = parse_config(args.config)
        shape = build_state(cfg).shape()
    elif args.ellipse:
        shape = ellipse_curve(args.ellipse[0], args.ellipse[1], args.n_theta)
    else:
        shape = make_star_curve(args.modes, args.radius, args.n_theta)
    curves = [shape] if isinstance(shape, StarCurve) else [shape.inner, shape.outer]
    sides = ["single"] if len(curves) == 1 else ["inner", "outer"]
    rows, csv_rows = [], []
    for c, side in zip(curves, sides):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            g = geometry(c, side)
        rows.append([side, g.length, float(g.kappa.min()), float(g.kappa.max()), str(g.resolved)])
        csv_rows += [{"boundary": sides.index(side), "theta": t, "rho": r, "kappa": k}
                     for t, r, k in zip(c.theta, c.rho, g.kappa)]
    _table(out, ["boundary", "length", "kappa_min", "kappa_max", "resolved"], rows)
    out(f"area = {shape.area():.17g}")
    d = _run_dir(args, "geom")
    write_timeseries(d / "geometry.csv", csv_rows, ("boundary", "theta", "rho", "kappa"))
    RunManifest("geom", "", time.time(), time.time(), outputs=["geometry.csv"]).write(d)
    return 0


def _random_angular(rng, kmax=6):
    from .kinematics import angular_mode

    ks = np.arange(1, kmax + 1)
    coef = rng.standard_normal(kmax) / ks ** 2
    parts = [angular_mode(int(k)) for k in ks]

    def F(x, y):
        return sum(c * p[0](x, y) for c, p in zip(coef, parts))

    def G(x, y):
        gs = [p[1](x, y) for p in parts]
        return (sum(c * g[0] for c, g in zip(coef, gs)), sum(c * g[1] for c, g in zip(coef, gs)))

    return F, G


def ops_verify(family: str, dt: float, n_theta: int, n_r: int, seed: int | None = None):
    """Rows (check, relative error, observed order, passed) for the identity suite."""
    from . import kinematics as K
    from .fields import boundary_curvature, curvature_force_J
    from .identities import dn_square_residual, energy_identity_residual, product_rule_residual

    fam = K.standard_family(family, n_theta, n_r)
    dom = fam.domain_at(0.0)
    snap = fam.snapshot(0.0, dom)
    rows = []

    def fd_row(name, quantity, exact, where="boundary", derivative=1, step=dt):
        fd = K.flow_fd(fam, quantity, 0.0, step, where=where, derivative=derivative)
        err, order = fd.errors(exact)[-1], fd.observed_order(exact)
        rows.append((name, err, order, bool(err < 1e-5 and order >= 1.9)))

    def on_curve(field):
        return lambda d, p: K.boundary_sample(d, field(d), p)

    fd_row("dt_normal", lambda d, p: np.array([K.boundary_sample(d, d.geoms[0].normal[i], p) for i in range(2)]),
           K.dt_normal(snap))
    fd_row("dt_surface_measure", lambda d, p: np.log(np.linalg.norm(K.fourier_diff(p), axis=0)),
           K.dt_surface_measure(snap))
    for form in (1, 2):
        fd_row(f"dt_curvature_{form}", on_curve(boundary_curvature), K.dt_curvature(snap, form))
    if snap.accel is not None:
        fd_row("dt2_curvature", on_curve(boundary_curvature), K.dt2_curvature(snap), derivative=2,
               step=2.5 * dt)
    fd_row("dt_J", lambda d, p: np.array([d.interpolate(c, p[0], p[1]) for c in curvature_force_J(d)]),
           K.dt_J(snap)[:, 1:].reshape(2, -1), where="interior")
    rng = np.random.default_rng(seed)
    F, G = (K.angular_mode(3) if seed is None else _random_angular(rng))
    for which in ("H", "N", "surface_laplace"):
        err, order, _ = K.commutator_residual(fam, which, F, G, 0.0, dt)
        rows.append((f"commutator_{which}", err, order, bool(err < 1e-5 and order >= 1.9)))
    err, order, _ = K.commutator_residual(fam, "inv_laplace", lambda x, y: 1 + x ** 2 - x * y,
                                          lambda x, y: (2 * x - y, -x), 0.0, dt)
    rows.append(("commutator_inv_laplace", err, order, bool(err < 1e-5 and order >= 1.9)))
    th = dom.theta
    f = np.cos(3 * th) + 0.3 * np.sin(5 * th) if seed is None else _band_limited(rng, th)
    g = np.sin(2 * th) - 0.2 * np.cos(7 * th) if seed is None else _band_limited(rng, th)
    for name, val in (("product_rule", product_rule_residual(dom, f, g)),
                      ("dn_square", dn_square_residual(dom, f)),
                      ("energy_identity", energy_identity_residual(dom, f))):
        rows.append((name, val, float("nan"), bool(val < 1e-6)))
    return rows


def _band_limited(rng, th, kmax=8):
    k = np.arange(1, kmax + 1)[:, None]
    return (rng.standard_normal((kmax, 1)) * np.cos(k * th) + rng.standard_normal((kmax, 1)) * np.sin(k * th)).sum(0)


def cmd_ops_verify(args, out) -> int:
    rows = ops_verify(args.family, args.dt, args.n_theta, args.n_r, args.seed)
    _table(out, ["check", "rel_error", "order", "pass"], rows)
    d = _run_dir(args, "ops-verify")
    _write_rows(d / "ops_verify.csv", ["check", "rel_error", "order", "pass"], rows)
    ok = all(r[3] for r in rows)
    RunManifest("ops-verify", "", time.time(), time.time(), outputs=["ops_verify.csv"],
                checks={r[0]: bool(r[3]) for r in rows}).write(d)
    return 0 if ok else 1


def _write_rows(path, header, rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([format(x, ".17g") if isinstance(x, float) else x for x in r])


def _apply_overrides(cfg, args):
    over = {k: getattr(args, k) for k in ("n_theta", "n_r", "dt", "eps") if getattr(args, k, None) is not None}
    return replace(cfg, **over) if over else cfg


def cmd_simulate(args, out) -> int:
    started = time.time()
    cfg = _apply_overrides(parse_config(args.config), args)
    state = build_state(cfg)
    d = _run_dir(args, "simulate")
    rows, outputs = [], ["timeseries.csv", "final.json"]
    count = [0]

    def cb(s):
        rows.append(diagnostics_row(s, cfg.eps, cfg.n_r))
        if cfg.checkpoint_every and count[0] % cfg.checkpoint_every == 0:
            name = f"ckpt_{count[0]:05d}.json"
            write_checkpoint(d / name, s, cfg.eps, binary=args.binary)
            outputs.append(name)
        count[0] += 1
        out(f"t={s.t:.6g}  E0={rows[-1]['E0']:.12g}  rt_margin={rows[-1]['rt_margin']:.4g}")

    try:
        traj = simulate(state, cfg.sim_config(), cb)
    except StabilityError as exc:
        raise ConfigError(str(exc)) from None
    except SimulationError as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        write_checkpoint(d / "abort.json", state, cfg.eps)
        return 1
    write_timeseries(d / "timeseries.csv", rows)
    write_checkpoint(d / "final.json", traj.final, cfg.eps, binary=args.binary)
    drift = max(abs(r["E0"] / rows[0]["E0"] - 1) for r in rows)
    area = max(abs(r["area"] / rows[0]["area"] - 1) for r in rows)
    checks = {"energy_drift_lt_1e-6": bool(drift < 1e-6), "area_drift_lt_1e-8": bool(area < 1e-8)}
    out(f"max relative E0 drift {drift:.3e}; max relative area drift {area:.3e}")
    RunManifest("simulate", cfg.digest(), started, time.time(), outputs=outputs, checks=checks).write(d)
    return 0 if all(checks.values()) else 1


def cmd_annulus_ode(args, out) -> int:
    started = time.time()
    swirl = bump_profile(args.swirl_amp, args.swirl_center, args.swirl_width) if args.swirl_amp else None
    st = annulus_initial_state(args.r1, args.r2, args.a1, swirl)
    tr = annulus_integrate(st, args.t_end, args.dt, args.eps)
    rows = []
    for s, e in zip(tr.states, tr.E0):
        s1, s2, m = annulus_rt_signs(s)
        rows.append({"t": s.t, "r1": s.r1, "r2": s.r2, "A": s.A, "a1": s.a1, "E0": e,
                     "sign_pr_r1": s1, "sign_pr_r2": s2, "rt_margin": m})
    d = _run_dir(args, "annulus-ode")
    write_timeseries(d / "annulus_ode.csv", rows,
                     ("t", "r1", "r2", "A", "a1", "E0", "sign_pr_r1", "sign_pr_r2", "rt_margin"))
    fin = tr.states[-1]
    write_timeseries(d / "theta1_final.csv", [{"r0": r, "theta1": v} for r, v in zip(fin.r0, fin.theta1)],
                     ("r0", "theta1"))
    vol = float(np.max(np.abs(tr.volume - tr.volume[0])))
    e0 = float(np.max(np.abs(tr.E0 / tr.E0[0] - 1)))
    checks = {"volume_drift_lt_1e-12": bool(vol < 1e-12), "energy_drift_lt_1e-10": bool(e0 < 1e-10)}
    out(f"r1(T)={fin.r1:.15g}  r2(T)={fin.r2:.15g}  volume drift {vol:.2e}  E0 drift {e0:.2e}")
    out(f"RT signs at T: p_r(r1) {rows[-1]['sign_pr_r1']:+d}, p_r(r2) {rows[-1]['sign_pr_r2']:+d}, "
        f"margin {rows[-1]['rt_margin']:.6g}")
    RunManifest("annulus-ode", "", started, time.time(), outputs=["annulus_ode.csv", "theta1_final.csv"],
                checks=checks).write(d)
    return 0 if all(checks.values()) else 1


def cmd_dispersion(args, out) -> int:
    started = time.time()
    res = [dispersion_probe(k, args.eps, amplitude=args.amplitude, n_theta=args.n_theta, n_r=args.n_r)
           for k in args.k]
    rows = [(r.k, r.measured, r.predicted, r.rel_error, r.harmonic_content) for r in res]
    _table(out, ["k", "measured", "predicted", "rel_error", "harmonics"], rows)
    checks = {f"k{r.k}_within_1pct": bool(r.rel_error < 0.01) for r in res}
    if len(res) >= 2 and args.eps > 0:
        slope = float(np.polyfit(np.log(args.k), np.log([r.measured for r in res]), 1)[0])
        out(f"log-log slope of frequency vs k: {slope:.4f}")
        if args.check_slope:
            checks["slope_in_1.45_1.55"] = bool(1.45 <= slope <= 1.55)
    d = _run_dir(args, "dispersion")
    _write_rows(d / "dispersion.csv", ["k", "measured", "predicted", "rel_error", "harmonics"], rows)
    RunManifest("dispersion", "", started, time.time(), outputs=["dispersion.csv"], checks=checks).write(d)
    return 0 if all(checks.values()) else 1


def cmd_eps_sweep(args, out) -> int:
    started = time.time()
    try:
        res = eps_sweep(args.scenario, args.eps_list, args.t_end, args.n_theta, args.n_r)
    except RTConditionError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 1
    rows = [(e, dd, m) for e, dd, m in zip(res.eps, res.distance, res.min_margin[1:])]
    _table(out, ["eps", "d(eps)", "min_rt_margin"], rows)
    out(f"eps = 0 reference run: min RT margin {res.min_margin[0]:.6g}")
    d = _run_dir(args, "eps-sweep")
    _write_rows(d / "sweep.csv", ["eps", "d", "min_rt_margin"], rows)
    checks = {"strictly_decreasing": res.strictly_decreasing, "rt_margin_positive": res.valid}
    RunManifest("eps-sweep", "", started, time.time(), outputs=["sweep.csv"], checks=checks).write(d)
    return 0 if all(checks.values()) else 1


def cmd_energy_report(args, out) -> int:
    rows = []
    for p in args.checkpoint:
        state, eps, _ = read_checkpoint(p)
        rows.append(diagnostics_row(state, eps, args.n_r))
    d = _run_dir(args, "energy-report")
    write_timeseries(d / "energy_report.csv", rows)
    _table(out, list(TIMESERIES_COLUMNS[:7]), [[r[c] for c in TIMESERIES_COLUMNS[:7]] for r in rows])
    RunManifest("energy-report", "", time.time(), time.time(), outputs=["energy_report.csv"]).write(d)
    return 0


def cmd_checkpoint_info(args, out) -> int:
    state, eps, meta = read_checkpoint(args.path)
    meta["rho_range"] = [float(state.rho.min()), float(state.rho.max())]
    print(json.dumps(meta, indent=1, sort_keys=True))
    return 0


# ----- parser ----------------------------------------------------------

def _mode(text: str):
    try:
        k, a = text.split(":")
        return int(k), float(a)
    except ValueError:
        raise argparse.ArgumentTypeError(f"mode must look like k:amplitude, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output root (default $CAPEULER_OUT or ./capeuler_out)")
    common.add_argument("--quiet", action="store_true")
    common.add_argument("--seed", type=int, default=None, help="seed for randomized test fields")

    p = argparse.ArgumentParser(prog="capeuler", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"capeuler {__version__}")
    sub = p.add_subparsers(dest="command", metavar="SUBCOMMAND")
    sub.required = True

    g = sub.add_parser("geom", parents=[common], help="boundary geometry summary")
    g.add_argument("--config")
    g.add_argument("--ellipse", nargs=2, type=float, metavar=("A", "B"))
    g.add_argument("--radius", type=float, default=1.0)
    g.add_argument("--modes", nargs="*", type=_mode, default=[])
    g.add_argument("--n-theta", type=int, default=256)
    g.set_defaults(func=cmd_geom)

    o = sub.add_parser("ops-verify", parents=[common], help="kinematic identities vs flow finite differences")
    o.add_argument("--family", default="ellipse-shear",
                   choices=["ellipse-shear", "ellipse-bandlimited", "rigid-rotation", "stationary"])
    o.add_argument("--dt", type=float, default=2e-3)
    o.add_argument("--n-theta", type=int, default=128)
    o.add_argument("--n-r", type=int, default=32)
    o.set_defaults(func=cmd_ops_verify)

    s = sub.add_parser("simulate", parents=[common], help="run the free-boundary solver from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--n-theta", type=int)
    s.add_argument("--n-r", type=int)
    s.add_argument("--dt", type=float)
    s.add_argument("--eps", type=float)
    s.add_argument("--binary", action="store_true", help="base64 float64 checkpoint payloads")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("annulus-ode", parents=[common], help="expanding annulus ODE oracle")
    a.add_argument("--r1", type=float, default=0.5)
    a.add_argument("--r2", type=float, default=1.0)
    a.add_argument("--a1", type=float, default=0.5)
    a.add_argument("--swirl-amp", type=float, default=0.0)
    a.add_argument("--swirl-center", type=float, default=0.75)
    a.add_argument("--swirl-width", type=float, default=0.2)
    a.add_argument("--eps", type=float, default=0.0)
    a.add_argument("--t-end", type=float, default=0.5)
    a.add_argument("--dt", type=float, default=1e-3)
    a.set_defaults(func=cmd_annulus_ode)

    d = sub.add_parser("dispersion", parents=[common], help="capillary drop frequencies")
    d.add_argument("--k", type=int, nargs="+", default=[2, 3, 4, 5, 6])
    d.add_argument("--eps", type=float, default=0.5)
    d.add_argument("--amplitude", type=float, default=1e-5)
    d.add_argument("--n-theta", type=int, default=64)
    d.add_argument("--n-r", type=int, default=24)
    d.add_argument("--check-slope", action="store_true", help="require the log-log slope in [1.45, 1.55]")
    d.set_defaults(func=cmd_dispersion)

    e = sub.add_parser("eps-sweep", parents=[common], help="vanishing surface tension sweep")
    e.add_argument("--scenario", default="expanding-annulus", choices=SWEEP_SCENARIOS)
    e.add_argument("--eps", dest="eps_list", type=float, nargs="+", default=[0.4, 0.2, 0.1, 0.05])
    e.add_argument("--t-end", type=float, default=0.25)
    e.add_argument("--n-theta", type=int, default=64)
    e.add_argument("--n-r", type=int, default=16)
    e.set_defaults(func=cmd_eps_sweep)

    r = sub.add_parser("energy-report", parents=[common], help="energies of saved checkpoints")
    r.add_argument("checkpoint", nargs="+")
    r.add_argument("--n-r", type=int, default=32)
    r.set_defaults(func=cmd_energy_report)

    c = sub.add_parser("checkpoint-info", parents=[common], help="print checkpoint metadata")
    c.add_argument("path")
    c.set_defaults(func=cmd_checkpoint_info)
    return p


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    out = _Out(args.quiet)
    try:
        return args.func(args, out)
    except (ConfigError, CheckpointVersionError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> None:
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()

"""Command-line driver: ``kdvtrail <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 computation failure, 3 validation
failure.  Options may also come from a flat ``key = value`` config file
(``--config``); flags given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .errors import KdVTrailError

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE, EXIT_VALIDATE = 0, 1, 2, 3
ORACLE_EPS_FLOOR = 3e-3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# output helpers


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serialisable: {type(obj).__name__}")


def _finite_or_null(obj):
    # strict JSON has no NaN or Infinity; non-finite numbers become null
    if isinstance(obj, dict):
        return {k: _finite_or_null(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_null(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
        return None
    return obj


def dumps(payload) -> str:
    # insertion order is the documented key order
    return json.dumps(_finite_or_null(payload), indent=2, default=_json_default, allow_nan=False) + "\n"


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.17g}"


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def emit(payload, path: str | None) -> None:
    text = dumps(payload)
    if path:
        atomic_write_text(path, text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# config handling


def read_config(path: str) -> dict:
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{n}: expected key = value")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


_TYPES = {"epsilon": float, "t": float, "N": int, "L": float, "dt": float, "points": int,
          "threshold": float, "tolerance": float, "k_max": int}


def _coerce(key, value):
    if key in ("x_range", "y_range"):
        parts = value.replace(",", " ").split()
        if len(parts) != 2:
            raise UsageError(f"{key} needs two numbers")
        return [float(p) for p in parts]
    conv = _TYPES.get(key)
    if conv is None:
        return value
    try:
        return conv(value)
    except ValueError as exc:
        raise UsageError(f"bad value for {key}: {value!r}") from exc


def merge_config(args: argparse.Namespace, defaults: dict) -> argparse.Namespace:
    if getattr(args, "config", None):
        for key, value in read_config(args.config).items():
            if getattr(args, key, None) is None:
                setattr(args, key, _coerce(key, value))
    for key, value in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    return args


def load_model(profile: str):
    from .initial_data import load_profile_file, make_sech2_profile

    if profile == "sech2":
        return make_sech2_profile()
    if not os.path.exists(profile):
        raise UsageError(f"profile must be 'sech2' or a profile file, got {profile!r}")
    return load_profile_file(profile)


def _failure(exc: Exception, command: str) -> dict:
    return {"command": command, "status": "error", "reason": type(exc).__name__, "message": str(exc)}


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    from . import spectral

    args = merge_config(args, {"profile": "sech2", "epsilon": 1e-2, "t": 0.4, "N": 2**15, "L": 60.0,
                               "dt": None, "output": None, "report": None})
    if not args.epsilon > 0:
        raise UsageError("epsilon must be positive")
    if args.t < 0:
        raise UsageError("t must be non-negative")
    model = load_model(args.profile)
    output = args.output or f"simulate_t{args.t:g}.csv"
    try:
        field = spectral.field_from_function(model.u0, args.L, args.N, args.epsilon)
        out, rep = spectral.evolve(field, args.t, dt=args.dt if args.dt else "auto")
    except KdVTrailError as exc:
        emit(_failure(exc, "simulate"), args.report)
        return EXIT_COMPUTE
    spectral.write_snapshot_csv(output, out)
    payload = {"command": "simulate", "status": "ok", "profile": model.name, "epsilon": args.epsilon,
               "t": args.t, "N": args.N, "L": args.L, "dt": rep.dt, "steps": rep.steps,
               "mass_drift": rep.mass_drift, "momentum_drift": rep.momentum_drift,
               "max_abs_u": rep.max_abs_u, "snapshot": output}
    emit(payload, args.report)
    print(f"wall time {rep.wall_time:.2f} s", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# edges


def edges_payload(t: float, model) -> dict:
    from .initial_data import catastrophe
    from .modulation import leading_edge, trailing_edge, whitham_curve

    cp = catastrophe(model)
    edge = trailing_edge(t, model, cp)
    curve = whitham_curve(t, model, edge)
    lead = leading_edge(t, model, curve)
    r1, e1, e2 = edge.residuals
    return {"t": t, "x_minus": lead.x_minus, "x_plus": edge.x_plus, "u": edge.u, "v": edge.v,
            "gamma": edge.gamma, "t_c": cp.t_c, "x_c": cp.x_c, "u_c": cp.u_c,
            "dtheta_dv": edge.dtheta_dv, "leading_beta1": lead.u, "leading_beta3": lead.v,
            "residual_trailing1": r1, "residual_trailing2": e1, "residual_trailing3": e2}


def cmd_edges(args) -> int:
    args = merge_config(args, {"profile": "sech2", "t": 0.4, "output": None})
    model = load_model(args.profile)
    try:
        payload = edges_payload(args.t, model)
    except KdVTrailError as exc:
        emit(_failure(exc, "edges"), args.output)
        return EXIT_COMPUTE
    emit(payload, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# asymptotics


def asymptotics_table(mode: str, t: float, eps: float, model, x_range=None, y_range=None, points: int = 201):
    """Rows ``(x, y, u_approx, terms_used[, u_theta, u_dn])`` and metadata."""
    from . import asymptotics as A
    from .modulation import trailing_edge, whitham_curve

    edge = trailing_edge(t, model)
    meta = {"mode": mode, "t": t, "epsilon": eps, "u": edge.u, "v": edge.v, "gamma": edge.gamma,
            "x_plus": edge.x_plus}
    curve = None
    if x_range is None and y_range is None:
        # default grid: the computed zone with small margins at both edges
        curve = whitham_curve(t, model, edge)
        lo, hi = float(np.min(curve.x)), float(np.max(curve.x))
        x_range = (lo + 0.01 * (hi - lo), hi - 0.01 * (hi - lo))
    if y_range is not None:
        ys = np.linspace(y_range[0], y_range[1], points)
        xs = np.array([A.x_from_y(y, eps, edge) for y in ys])
    else:
        xs = np.linspace(x_range[0], x_range[1], points)
        ys = np.array([A.y_from_x(x, eps, edge) for x in xs])
    rows = []
    if mode == "soliton-sum":
        window = set()
        for x, y in zip(xs, ys):
            r = A.soliton_sum(float(y), t, eps, model, edge)
            window.update(r.X)
            rows.append((x, y, r.u_value, r.terms_used))
        meta["k_window"] = [min(window), max(window)] if window else []
        return ["x", "y", "u_approx", "terms_used"], rows, meta
    curve = curve or whitham_curve(t, model, edge)
    lo, hi = float(np.min(curve.x)), float(np.max(curve.x))
    meta["zone"] = [lo, hi]
    if mode == "elliptic":
        for x, y in zip(xs, ys):
            if lo < x < hi:
                r = A.elliptic_approx(float(x), t, eps, model, curve=curve)
                rows.append((x, y, r.u_dn, 0, r.u_theta, r.u_dn))
            else:
                rows.append((x, y, math.nan, 0, math.nan, math.nan))
        return ["x", "y", "u_approx", "terms_used", "u_theta", "u_dn"], rows, meta
    if mode == "formal":
        k = 0
        for x, y in zip(xs, ys):
            if lo < x < hi:
                st = A.whitham_solve(float(x), t, model, curve=curve)
                rows.append((x, y, A.formal_trailing(float(x), t, eps, k, edge, st), 1))
            else:
                rows.append((x, y, math.nan, 0))
        return ["x", "y", "u_approx", "terms_used"], rows, meta
    raise UsageError(f"unknown mode {mode!r}")


def cmd_asymptotics(args) -> int:
    args = merge_config(args, {"profile": "sech2", "mode": "soliton-sum", "epsilon": 1e-5, "t": 0.25,
                               "points": 201, "output": None, "meta": None})
    if not args.epsilon > 0:
        raise UsageError("epsilon must be positive")
    if args.x_range is not None and args.y_range is not None:
        raise UsageError("give at most one of --x-range / --y-range")
    if args.mode == "soliton-sum" and args.x_range is None and args.y_range is None:
        args.y_range = [-1.0, 5.0]
    for rng in (args.x_range, args.y_range):
        if rng is not None and not rng[0] < rng[1]:
            raise UsageError("ranges must be nonempty")
    model = load_model(args.profile)
    try:
        header, rows, meta = asymptotics_table(args.mode, args.t, args.epsilon, model,
                                               args.x_range, args.y_range, args.points)
    except KdVTrailError as exc:
        emit(_failure(exc, "asymptotics"), args.meta)
        return EXIT_COMPUTE
    output = args.output or f"asymptotics_{args.mode}.csv"
    atomic_write_text(output, csv_text(header, rows))
    meta["csv"] = output
    emit(meta, args.meta)
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare


def last_pulse_amplitude(x, u, x_plus, width) -> float:
    """Height of the rightmost pulse within ``width`` left of ``x_plus``.

    Measured from the peak down to the lowest value between the peak and the
    right end of the search window, which is the background the pulse sits on.
    """
    sel = (x > x_plus - width) & (x < x_plus + 0.5 * width)
    xs, us = x[sel], u[sel]
    peaks = np.flatnonzero((us[1:-1] > us[:-2]) & (us[1:-1] >= us[2:])) + 1
    if peaks.size == 0:
        raise KdVTrailError("no pulse found near the trailing edge")
    p = peaks[-1]
    return float(us[p]) - float(np.min(us[p:]))


def compare_payload(t, eps, model, N=2**15, L=60.0, threshold=0.1, solved=None):
    """Direct solve vs the modulation predictions at time ``t``.

    ``solved`` may carry an already computed ``(field, report)`` pair at ``t``.
    """
    from . import asymptotics as A
    from . import spectral
    from .modulation import leading_edge, trailing_edge, whitham_curve

    edge = trailing_edge(t, model)
    curve = whitham_curve(t, model, edge)
    lead = leading_edge(t, model, curve)
    if solved is None:
        field = spectral.field_from_function(model.u0, L, N, eps)
        solved = spectral.evolve(field, t, check_decay=False)
    out, rep = solved
    N, L = out.N, out.L
    x, u = out.x, out.values
    zone = spectral.oscillation_zone(out, threshold)
    lo, hi = lead.x_minus, edge.x_plus
    margin = 0.1 * (hi - lo)
    inner = (x > lo + margin) & (x < hi - margin)
    approx = np.array([A.elliptic_approx(float(xx), t, eps, model, curve=curve) for xx in x[inner]])
    u_dn = np.array([r.u_dn for r in approx])
    dev = u[inner] - u_dn
    # envelope of the dn form: [b1 - b2 + b3, b1 + b2 - b3]
    env_lo = np.array([r.state.beta1 - r.state.beta2 + r.state.beta3 for r in approx])
    env_hi = np.array([r.state.beta1 + r.state.beta2 - r.state.beta3 for r in approx])
    amp = env_hi - env_lo
    outside = np.maximum(env_lo - 0.1 * amp - u[inner], u[inner] - env_hi - 0.1 * amp)
    wavelength = 2.0 * math.pi * eps / math.sqrt(edge.v - edge.u)
    pulse = last_pulse_amplitude(x, u, edge.x_plus, 3.0 * wavelength)
    return {"t": t, "epsilon": eps, "N": N, "L": L,
            "predicted_zone": [lo, hi], "detected_zone": list(zone),
            "zone_offsets": [zone[0] - lo, zone[1] - hi],
            "linf_interior": float(np.max(np.abs(dev))) if dev.size else math.nan,
            "l2_interior": float(math.sqrt(np.mean(dev**2))) if dev.size else math.nan,
            "envelope_excess": float(np.max(outside)) if dev.size else math.nan,
            "last_pulse_amplitude": pulse, "predicted_pulse_amplitude": 2.0 * (edge.v - edge.u),
            "pulse_relative_error": abs(pulse - 2.0 * (edge.v - edge.u)) / (2.0 * (edge.v - edge.u)),
            "mass_drift": rep.mass_drift, "momentum_drift": rep.momentum_drift}


def cmd_compare(args) -> int:
    args = merge_config(args, {"profile": "sech2", "epsilon": 1e-2, "t": 0.4, "N": 2**15, "L": 60.0,
                               "threshold": 0.1, "output": None})
    if not args.epsilon > 0:
        raise UsageError("epsilon must be positive")
    if args.epsilon < ORACLE_EPS_FLOOR:
        emit({"command": "compare", "status": "error", "reason": "OracleScope",
              "message": f"epsilon below {ORACLE_EPS_FLOOR} is outside the direct-solver scope"}, args.output)
        return EXIT_COMPUTE
    model = load_model(args.profile)
    try:
        payload = compare_payload(args.t, args.epsilon, model, args.N, args.L, args.threshold)
    except KdVTrailError as exc:
        emit(_failure(exc, "compare"), args.output)
        return EXIT_COMPUTE
    emit(payload, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate and golden


def cmd_validate(args) -> int:
    from .validation import run_suite

    args = merge_config(args, {"tolerance": None, "output": None})
    report = run_suite(args.tolerance)
    emit(report, args.output)
    return EXIT_OK if report["passed"] else EXIT_VALIDATE


def cmd_golden(args) -> int:
    from .validation import regenerate_golden

    args = merge_config(args, {"output_dir": "golden"})
    try:
        written = regenerate_golden(args.output_dir)
    except KdVTrailError as exc:
        emit(_failure(exc, "golden"), None)
        return EXIT_COMPUTE
    emit({"command": "golden", "status": "ok", "files": written}, None)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kdvtrail", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, t=True):
        sp.add_argument("--config", help="key = value file; flags override its entries")
        sp.add_argument("--profile", help="'sech2' (default) or a profile file")
        if t:
            sp.add_argument("--t", type=float)
        sp.add_argument("--output", help="output path (stdout for JSON when omitted)")

    sp = sub.add_parser("simulate", help="direct pseudospectral solve")
    common(sp)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--N", type=int)
    sp.add_argument("--L", type=float)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--report", help="JSON run report path (stdout by default)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("edges", help="trailing and leading edge of the oscillation zone")
    common(sp)
    sp.set_defaults(func=cmd_edges)

    sp = sub.add_parser("asymptotics", help="evaluate an asymptotic formula on a grid")
    common(sp)
    sp.add_argument("--mode", choices=["elliptic", "soliton-sum", "formal"])
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--x-range", dest="x_range", type=float, nargs=2)
    sp.add_argument("--y-range", dest="y_range", type=float, nargs=2)
    sp.add_argument("--points", type=int)
    sp.add_argument("--meta", help="JSON metadata path (stdout by default)")
    sp.set_defaults(func=cmd_asymptotics)

    sp = sub.add_parser("compare", help="direct solver against the elliptic approximation")
    common(sp)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--N", type=int)
    sp.add_argument("--L", type=float)
    sp.add_argument("--threshold", type=float)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("validate", help="run the invariant suite")
    sp.add_argument("--config")
    sp.add_argument("--tolerance", type=float, help="override every tolerance (forces failures if tiny)")
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("golden", help="regenerate golden files from the independent oracles")
    sp.add_argument("--config")
    sp.add_argument("--output-dir", dest="output_dir")
    sp.set_defaults(func=cmd_golden)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"kdvtrail: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"kdvtrail: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

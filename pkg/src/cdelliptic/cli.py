"""Command line front end.

    cdelliptic algebra-check --level 3
    cdelliptic lattice-verify --lattice lattice.json --lambda "0,sqrt(2),0,0,0,0,0,0"
    cdelliptic eval zeta --point "0.1,0.2,0,0,0,0,0,0.3" --radius 4
    cdelliptic legendre --radius 4
    cdelliptic trace-verify --lambda "1,1,0,0,0,0,0,0" --radius-ladder 3,4,5,6

Reports go to stdout (or --out) as JSON; progress goes to stderr.
Exit codes: 0 ok, 1 property violated, 2 invalid input or singularity,
3 internal assertion.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .cd_algebra import CDElement, LevelMismatchError, identity_suite
from .lattice import (Lattice, adjugate_residual, brandt_check, canonical_cm_lattice,
                      cm_multiplier_matrix, is_closed_under_multiplication,
                      lattice_from_generators, standard_lattice)
from .number_field import MQElement, MQField, format_mq, format_rational, parse_mq

EXIT_OK, EXIT_VIOLATION, EXIT_INVALID, EXIT_INTERNAL = 0, 1, 2, 3

LATTICE_KEYS = {"level", "radicands", "alpha", "generators"}


class ConfigError(ValueError):
    pass


def _progress(msg: str):
    print(f"[cdelliptic] {msg}", file=sys.stderr, flush=True)


# -- values <-> JSON ------------------------------------------------------------

def scalar_to_str(x) -> str:
    if isinstance(x, MQElement):
        return format_mq(x)
    if isinstance(x, Fraction):
        return format_rational(x)
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def element_to_json(z) -> list:
    coords = z.coords if isinstance(z, CDElement) else list(np.asarray(z).ravel())
    return [scalar_to_str(c) for c in coords]


def parse_scalar(text: str, field: Optional[MQField]):
    text = str(text).strip()
    if "sqrt" in text:
        if field is None:
            raise ConfigError(f"{text!r} needs radicands in the lattice config")
        v = parse_mq(text, field)
        return v.coeffs[0] if v.is_rational() else v
    try:
        return Fraction(text)
    except ValueError:
        raise ConfigError(f"cannot parse number {text!r}") from None


def parse_element(text, level: int, field: Optional[MQField] = None, exact: bool = True) -> CDElement:
    """Comma separated coordinates (or a JSON array); short lists are zero padded."""
    if isinstance(text, str):
        s = text.strip()
        items = json.loads(s) if s.startswith("[") else [p for p in s.split(",")]
    else:
        items = list(text)
    n = 1 << level
    if not items or len(items) > n:
        raise ConfigError(f"expected 1..{n} coordinates, got {len(items)}")
    vals = [parse_scalar(str(v), field) for v in items] + [Fraction(0)] * (n - len(items))
    if not exact:
        vals = [float(v) for v in vals]
    else:
        vals = [int(v) if isinstance(v, Fraction) and v.denominator == 1 else v for v in vals]
    return CDElement(vals)


def load_lattice_config(source: Optional[str], level: int) -> tuple[Lattice, dict]:
    """Inline JSON, a file path, or None for the standard lattice."""
    if source is None:
        cfg = {"level": level}
    else:
        text = source if source.lstrip().startswith("{") else Path(source).read_text()
        try:
            cfg = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"lattice config is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("lattice config must be a JSON object")
    unknown = set(cfg) - LATTICE_KEYS
    if unknown:
        raise ConfigError(f"unknown lattice config keys: {sorted(unknown)}")
    k = int(cfg.get("level", level))
    radicands = cfg.get("radicands")
    if "generators" in cfg:
        if "alpha" in cfg:
            raise ConfigError("give either 'generators' or 'alpha', not both")
        field = MQField(radicands) if radicands else None
        gens = [parse_element(g, k, field) for g in cfg["generators"]]
        L = lattice_from_generators(gens)
    elif radicands:
        if len(radicands) != k:
            raise ConfigError(f"level {k} needs {k} radicands, got {len(radicands)}")
        alpha = {key: Fraction(str(v)) for key, v in (cfg.get("alpha") or {}).items()}
        L = canonical_cm_lattice(radicands, alpha)
    else:
        if "alpha" in cfg:
            raise ConfigError("'alpha' needs 'radicands'")
        L = standard_lattice(k)
    return L, cfg


# -- commands --------------------------------------------------------------------

def _series_params(args, radius: Optional[int] = None):
    from .elliptic import SeriesParams

    return SeriesParams(radius=radius if radius is not None else args.radius, eps=args.eps,
                        pairing=args.pairing == "on", precision=args.precision,
                        threads=args.threads)


def _params_echo(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func",)}


def cmd_algebra_check(args) -> tuple[int, dict]:
    rep = identity_suite(args.level, trials=args.trials, seed=args.seed)
    checks = {}
    for name, c in rep.checks.items():
        checks[name] = {
            "holds": c.holds, "expected": c.expected,
            "witness": [element_to_json(w) for w in c.witness] if c.witness else None,
            "max_residual": scalar_to_str(c.max_residual),
        }
    out = {"level": rep.level, "trials": rep.trials, "seed": rep.seed,
           "consistent": rep.consistent, "checks": checks}
    return (EXIT_OK if rep.consistent else EXIT_VIOLATION), out


def _multiplier_args(args, L: Lattice):
    field = L.field
    lam = parse_element(args.lam, L.level, field) if args.lam else None
    mu = parse_element(args.mu, L.level, field) if args.mu else None
    return lam, mu


def cmd_lattice_verify(args) -> tuple[int, dict]:
    L, cfg = load_lattice_config(args.lattice, args.level)
    closed = is_closed_under_multiplication(L)
    brandt = all(brandt_check(a, b, "rational") for a in L.generators for b in L.generators)
    adj = all(x == 0 for x in adjugate_residual(L))
    out = {
        "lattice": cfg, "det": scalar_to_str(L.det),
        "generators": [element_to_json(g) for g in L.generators],
        "closed": closed, "brandt_rational": brandt, "adjugate_identity": adj,
    }
    ok = closed and brandt and adj
    lam, mu = _multiplier_args(args, L)
    if lam is not None or mu is not None:
        from .lattice import NotAMultiplierError

        one = CDElement.scalar(1, L.level)
        try:
            cm = cm_multiplier_matrix(L, lam or one, mu or one)
            recon = all(cm.reconstruct(L, h) == _exact_product(L, cm, h) for h in range(L.dim))
            out["multiplier"] = {"lambda": element_to_json(cm.lam), "mu": element_to_json(cm.mu),
                                 "n": [list(r) for r in cm.n], "reconstruction": recon}
            ok = ok and recon
        except NotAMultiplierError as exc:
            out["multiplier"] = {"error": str(exc), "h": exc.h}
            ok = False
    return (EXIT_OK if ok else EXIT_VIOLATION), out


def _exact_product(L, cm, h):
    from .cd_algebra import cd_mul
    from .lattice import _lift_to, _simplify

    f = L.field
    return cd_mul(_lift_to(cm.lam, f), cd_mul(_lift_to(L.generators[h], f), _lift_to(cm.mu, f))).map(_simplify)


def _ctx(args):
    from .elliptic import EvalContext

    L, cfg = load_lattice_config(args.lattice, args.level)
    return L, cfg, EvalContext.from_lattice(L, args.precision)


def cmd_eval(args) -> tuple[int, dict]:
    from .elliptic import wp_n_series, wp_tau_series, zeta_series

    L, cfg, ctx = _ctx(args)
    z = parse_element(args.point, L.level, exact=False).to_float()
    params = _series_params(args)
    _progress(f"{args.function} at R={params.radius}")
    if args.function == "zeta":
        res = zeta_series(z, ctx, params)
        pick = lambda v: v[0]
        tail = lambda t: float(t[0])
    elif args.function == "wp_tau":
        if args.index is None:
            raise ConfigError("wp_tau needs --index")
        if not 1 <= args.index < ctx.dim:
            raise ConfigError(f"--index must lie in 1..{ctx.dim - 1}")
        res = wp_tau_series(z, ctx, params)
        pick = lambda v: v[0, args.index - 1]
        tail = lambda t: float(t[0, args.index - 1])
    else:
        if args.multi_index is None:
            raise ConfigError("wp_n needs --multi-index")
        n_idx = [int(v) for v in args.multi_index.split(",")]
        if len(n_idx) != ctx.dim - 1:
            raise ConfigError(f"--multi-index needs {ctx.dim - 1} entries")
        res = wp_n_series(n_idx, z, ctx, params)
        pick = lambda v: v[0]
        tail = lambda t: float(t[0])
    out = {
        "function": args.function, "lattice": cfg, "point": element_to_json(z),
        "value": element_to_json(pick(res.value)), "tail": tail(res.tail),
        "ladder": {str(r): {"value": element_to_json(pick(res.values[r])), "tail": tail(res.tails[r])}
                   for r in res.radii},
        "min_distance": res.min_distance,
    }
    return EXIT_OK, out


def cmd_legendre(args) -> tuple[int, dict]:
    from .elliptic import legendre_constants, quasi_periodicity_ladder

    L, cfg, ctx = _ctx(args)
    params = _series_params(args)
    _progress(f"Legendre constants at R={params.radius}")
    leg = legendre_constants(ctx, params)
    rng = np.random.default_rng(args.seed)
    checks = []
    for _ in range(args.samples):
        z = rng.uniform(0.1, 0.9, ctx.dim) @ ctx.W
        h = int(rng.integers(ctx.dim))
        lad = quasi_periodicity_ladder(z, h, ctx, params)
        checks.append({"z": element_to_json(z), "h": h,
                       "residual": {str(r): v for r, v in lad.items()}})
    R = params.radius
    tol = args.tolerance
    ok = tol is None or all(c["residual"][str(R)] <= tol for c in checks)
    out = {"lattice": cfg, "eta": [element_to_json(e) for e in leg.eta],
           "eta_tail": [float(t) for t in leg.tails[R]],
           "quasi_periodicity": checks}
    return (EXIT_OK if ok else EXIT_VIOLATION), out


def cmd_trace_verify(args) -> tuple[int, dict]:
    from .cm_trace import verify_trace

    L, cfg = load_lattice_config(args.lattice, args.level)
    lam, mu = _multiplier_args(args, L)
    if lam is None:
        raise ConfigError("trace-verify needs --lambda")
    radii = [int(r) for r in args.radius_ladder.split(",")] if args.radius_ladder else [args.radius]
    if any(r < 1 for r in radii):
        raise ConfigError("radii must be positive")
    params = _series_params(args, max(radii))
    tol = 0.1 if args.tolerance is None else args.tolerance
    rep = verify_trace(L, lam, mu, radii=radii, params=params, tolerance=tol, progress=_progress,
                       bracketing=args.bracketing)
    R = rep.radii[-1]
    out = {
        "lattice": cfg, "lambda": rep.lam, "mu": rep.mu, "division_points": rep.division_points,
        "radii": rep.radii, "active": rep.active,
        "identity_residual": rep.identity_residual,
        "gaps_ok": rep.gaps_ok(), "trend_ok": rep.trend_ok(), "passed": rep.passed,
        "per_direction": [
            {"i": i, "lhs": element_to_json(rep.lhs[R][i - 1]), "rhs": element_to_json(rep.rhs[R][i - 1]),
             "C": element_to_json(rep.C[R][i - 1]), "relative_gap": float(rep.relative_gap[R][i - 1]),
             "lhs_tail": float(rep.lhs_tail[i - 1])}
            for i in range(1, 8)],
        "zeta_trace": element_to_json(rep.zeta_trace[R]), "zeta_C": element_to_json(rep.zeta_C[R]),
        "trend": {str(r): {"relative_gap": [float(g) for g in rep.relative_gap[r]],
                           "lhs_norm": [float(x) for x in np.linalg.norm(rep.lhs[r], axis=1)],
                           "rhs_norm": [float(x) for x in np.linalg.norm(rep.rhs[r], axis=1)]}
                  for r in rep.radii},
    }
    return (EXIT_OK if rep.passed else EXIT_VIOLATION), out


# -- parser ------------------------------------------------------------------------

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--level", type=int, default=3)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    series = argparse.ArgumentParser(add_help=False)
    series.add_argument("--lattice", help="lattice config: JSON file path or inline JSON")
    series.add_argument("--radius", type=_positive_int, default=4)
    series.add_argument("--pairing", choices=("on", "off"), default="on")
    series.add_argument("--precision", type=int, default=53)
    series.add_argument("--eps", type=float)
    series.add_argument("--threads", type=_positive_int)
    series.add_argument("--tolerance", type=float)

    p = argparse.ArgumentParser(prog="cdelliptic", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"cdelliptic {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("algebra-check", parents=[common], help="identity suite at one level")
    a.add_argument("--trials", type=_positive_int, default=100)
    a.set_defaults(func=cmd_algebra_check)

    lv = sub.add_parser("lattice-verify", parents=[common], help="closure, Brandt, adjugate, multiplier")
    lv.add_argument("--lattice")
    lv.add_argument("--lambda", dest="lam")
    lv.add_argument("--mu")
    lv.set_defaults(func=cmd_lattice_verify)

    e = sub.add_parser("eval", parents=[common, series], help="evaluate zeta, wp_tau or wp_n")
    e.add_argument("function", choices=("zeta", "wp_tau", "wp_n"))
    e.add_argument("--point", required=True)
    e.add_argument("--index", type=int)
    e.add_argument("--multi-index")
    e.set_defaults(func=cmd_eval)

    lg = sub.add_parser("legendre", parents=[common, series], help="Legendre constants eta_h")
    lg.add_argument("--samples", type=int, default=5)
    lg.set_defaults(func=cmd_legendre)

    t = sub.add_parser("trace-verify", parents=[common, series], help="trace formula over a radius ladder")
    t.add_argument("--lambda", dest="lam")
    t.add_argument("--mu")
    t.add_argument("--radius-ladder")
    t.add_argument("--bracketing", choices=("left", "right"), default="left",
                   help="left: (mu s) lam; right: mu (s lam). Equal when lambda or mu is real")
    t.set_defaults(func=cmd_trace_verify)
    return p


def _emit(payload: dict, out: Optional[str]):
    text = json.dumps(payload, indent=2, sort_keys=False)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    from .cm_trace import CardinalityError
    from .kernels import SingularPointError
    from .lattice import NotAMultiplierError, SingularLatticeError

    echo = {"tool": "cdelliptic", "version": __version__, "command": args.command,
            "parameters": _params_echo(args)}
    try:
        code, result = args.func(args)
    except CardinalityError as exc:
        code, result = EXIT_INTERNAL, {"error": str(exc), "kind": "cardinality"}
    except (ConfigError, SingularPointError, SingularLatticeError, NotAMultiplierError,
            LevelMismatchError, ValueError, IndexError, OSError) as exc:
        code, result = EXIT_INVALID, {"error": str(exc), "kind": type(exc).__name__}
    except Exception as exc:  # noqa: BLE001 - surfaced as an internal failure
        code, result = EXIT_INTERNAL, {"error": repr(exc), "kind": "internal"}
    if code in (EXIT_INVALID, EXIT_INTERNAL):
        _progress(f"error: {result['error']}")
    _emit({**echo, "exit_code": code, "result": result}, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``rmtorus <subcommand> ...``.

Exit codes: 0 success, 1 computation failure (including failed checks),
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from importlib import resources
from typing import Any

import mpmath

from . import __version__
from .harper import butterfly, butterfly_csv, gap_labels, solv_spectrum, torus_spectrum
from .lattice import enumerate_orbits
from .quadfield import FieldElement, RationalThetaError, fixed_points_check, is_squarefree, unit_system
from .spectra import (
    default_dps,
    dirac_modes,
    eta_eta,
    heat_constant,
    heat_functional_check,
    heat_h,
    heat_log_slope,
    modes_csv,
    residue_estimate,
    shimizu_L,
    z_epsilon,
    zeta_unsigned,
)
from .topology import topology_report, trace_range

FORMATS = ("json", "csv", "text")


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    def __init__(self, document: dict):
        super().__init__("one or more checks failed")
        self.document = document


# --------------------------------------------------------------------------
# argument types


def squarefree_d(text: str) -> int:
    try:
        d = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"d must be an integer, got {text!r}") from None
    if d < 2 or not is_squarefree(d):
        raise argparse.ArgumentTypeError(f"d must be squarefree and >= 2, got {d}")
    return d


def flux_arg(text: str) -> tuple[int, int]:
    try:
        p, q = (int(x) for x in text.split("/"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"flux must look like p/q, got {text!r}") from None
    if q < 1 or math.gcd(p, q) != 1:
        raise argparse.ArgumentTypeError(f"flux {text} must be a reduced fraction with q >= 1")
    return p, q


def theta_arg(text: str) -> tuple[int, int, int]:
    try:
        a, b, c = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--theta expects a,b,c meaning (a + b sqrt d)/c, got {text!r}") from None
    if c == 0:
        raise argparse.ArgumentTypeError("--theta denominator must be nonzero")
    return a, b, c


def positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def precision_digits(text: str) -> int:
    v = int(text)
    if v < 15:
        raise argparse.ArgumentTypeError(f"--dps must be at least 15, got {text}")
    return v


def nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=FORMATS, default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument(
        "--dps", type=precision_digits, default=None, help="decimal digits (default: $RMTORUS_DPS or 50)"
    )
    common.add_argument("-o", "--output", default=None, help="write to this file instead of stdout")

    parser = argparse.ArgumentParser(prog="rmtorus", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rmtorus {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("field", parents=[common], help="unit system of Z + Z theta")
    p.add_argument("d", type=squarefree_d)
    p.add_argument("--theta", type=theta_arg, default=None)
    p.add_argument("-B", type=positive_int, default=None, help="also list orbit representatives with |N| <= B")

    p = sub.add_parser("topology", parents=[common], help="homology, K-theory and trace range")
    p.add_argument("d", type=squarefree_d)

    p = sub.add_parser("series", parents=[common], help="L, Z, eta, zeta, residue and heat series")
    p.add_argument("d", type=squarefree_d)
    p.add_argument("--which", choices=("L", "Z", "eta", "zeta", "residue", "heat", "modes"), required=True)
    p.add_argument("-s", type=float, default=None)
    p.add_argument("-B", type=positive_int, default=50)
    p.add_argument("-K", type=nonneg_int, default=60)
    p.add_argument("-t", type=float, default=1.0, help="heat time for --which heat")

    p = sub.add_parser("harper", parents=[common], help="Harper spectra")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--flux", type=flux_arg)
    g.add_argument("--solv", type=squarefree_d, metavar="D")
    p.add_argument("-G", type=positive_int, default=16)
    p.add_argument("-R", type=positive_int, default=8)
    p.add_argument("-K", dest="Kc", type=positive_int, default=1)
    p.add_argument("--u", default="trace", help="solv flux: trace (default), theta, theta', or a real number")
    p.add_argument("--periodic", action="store_true", help="reduce the torus flux modulo 1")

    p = sub.add_parser("butterfly", parents=[common], help="Hofstadter butterfly band table")
    p.add_argument("q_max", type=positive_int)
    p.add_argument("-G", type=positive_int, default=16)

    p = sub.add_parser("check", parents=[common], help="property suites")
    p.add_argument("d", type=squarefree_d)
    p.add_argument("--suite", choices=("cocycle", "rep", "krein", "all"), default="all")
    p.add_argument("--triples", type=positive_int, default=10_000)
    return parser


# --------------------------------------------------------------------------
# commands


def _n(x, dps: int) -> str:
    return mpmath.nstr(x, dps, strip_zeros=False)


def _us(args):
    theta = None
    if getattr(args, "theta", None) is not None:
        a, b, c = args.theta
        theta = FieldElement(a, b, c, args.d)
    return unit_system(args.d, theta)


def cmd_field(args, dps: int) -> dict:
    us = _us(args)
    (a, b), (c, d) = us.phi
    doc: dict[str, Any] = {
        "d": us.d,
        "theta": us.theta.as_dict(),
        "theta_str": str(us.theta),
        "epsilon": us.epsilon.as_dict(),
        "epsilon_str": str(us.epsilon),
        "phi": [list(r) for r in us.phi],
        "det_phi": a * d - b * c,
        "trace_phi": a + d,
        "embeddings": {
            "theta": [_n(us.theta.to_mpf(1), dps), _n(us.theta.to_mpf(2), dps)],
            "epsilon": [_n(us.epsilon.to_mpf(1), dps), _n(us.epsilon.to_mpf(2), dps)],
        },
        "continued_fraction": {"preperiod": list(us.cf.preperiod), "period": list(us.cf.period)},
        "fixed_points_check": fixed_points_check(us),
    }
    if args.B is not None:
        tab = enumerate_orbits(us, args.B)
        doc["orbits"] = {
            "B": args.B,
            "fundamental_domain": tab.metadata,
            "reps": [
                {"n": p.n, "m": p.m, "norm_num": nrm.numerator, "norm_den": nrm.denominator}
                for p, nrm in zip(tab.reps, tab.norms)
            ],
        }
        doc["_csv"] = tab.to_csv()
    return doc


def cmd_topology(args, dps: int) -> dict:
    return topology_report(unit_system(args.d))


def cmd_series(args, dps: int) -> dict:
    us = unit_system(args.d)
    which = args.which
    doc: dict[str, Any] = {"d": us.d, "which": which}
    if which == "L":
        s = 2.0 if args.s is None else args.s
        v = shimizu_L(us, args.B, s, raw=s <= 1, dps=dps)
        doc.update(s=s, **v.as_dict())
    elif which == "Z":
        s = 1.0 if args.s is None else args.s
        doc.update(s=s, **z_epsilon(us, s, args.K, dps=dps).as_dict())
    elif which in ("eta", "zeta"):
        s = 4.0 if args.s is None else args.s
        f = eta_eta if which == "eta" else zeta_unsigned
        doc.update(f(us, args.B, args.K, s, dps=dps).as_dict())
        doc.update(B=args.B, K=args.K)
    elif which == "residue":
        r = residue_estimate(us, dps=dps)
        doc.update(
            estimate=_n(r["estimate"], dps),
            target=_n(r["target"], dps),
            deviation=_n(r["deviation"], 5),
            samples=r["samples"],
            richardson_order=r["richardson_order"],
            note="residue of the unit factor Z_eps at s=0; the L-value at 0 is not computed",
        )
    elif which == "heat":
        sl = heat_log_slope(us, dps=dps)
        doc.update(
            t=args.t,
            h=_n(heat_h(us, args.t, dps=dps), dps),
            functional_check={str(t): _n(heat_functional_check(us, t, dps=dps), 5) for t in (0.1, 1.0, 10.0)},
            log_slope=_n(sl["slope"], 15),
            log_slope_target=_n(sl["target"], 15),
            log_slope_relative_error=_n(sl["relative_error"], 5),
            constant_estimate=_n(heat_constant(us, dps=dps), 15),
        )
    elif which == "modes":
        modes = dirac_modes(us, args.B, args.K)
        doc.update(
            B=args.B,
            K=args.K,
            count=len(modes),
            krein_symmetry_exact=all(m.krein_ok for m in modes),
            modes=[
                {"mu_n": m.mu.n, "mu_m": m.mu.m, "k": m.k, "sign": m.sign, "abs_eigenvalue": m.abs_eigenvalue}
                for m in modes
            ],
        )
        doc["_csv"] = modes_csv(modes)
    return doc


def _solv_flux(us, text: str):
    if text == "trace":
        return trace_range(us).u
    if text == "theta":
        return us.theta
    if text == "theta'":
        return us.theta_conj
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"--u must be trace, theta, theta' or a number, got {text!r}") from None


def _spectrum_csv(spec) -> str:
    lines = ["band_index,lo,hi"]
    lines += [f"{i},{lo!r},{hi!r}" for i, (lo, hi) in enumerate(spec.bands)]
    return "\n".join(lines) + "\n"


def cmd_harper(args, dps: int) -> dict:
    if args.flux is not None:
        p, q = args.flux
        if not args.periodic and not 0 <= p < q and (p, q) != (0, 1):
            raise UsageError(f"flux {p}/{q} outside [0, 1); pass --periodic to reduce it")
        spec = torus_spectrum(p, q, args.G, periodic=args.periodic)
        labels = gap_labels(spec, Fraction(p % q, q), tol=0)
        doc = spec.as_dict(labels)
        doc["flux"] = {"p": p % q, "q": q}
    else:
        us = unit_system(args.solv)
        u = _solv_flux(us, args.u)
        spec = solv_spectrum(us, u, args.R, args.Kc)
        tr = trace_range(us)
        labels = gap_labels(spec, tr, tol=1e-3)
        doc = spec.as_dict(labels)
        doc["label_module"] = {"u": tr.as_dict(), "u_value": tr.value, "dense": tr.is_dense}
        doc["note"] = "gap labels against Z + Z u are reported, not asserted"
    doc["truncation"] = {"R": args.R, "Kc": args.Kc, "G": args.G}
    doc["_csv"] = _spectrum_csv(spec)
    return doc


def cmd_butterfly(args, dps: int) -> dict:
    if args.q_max < 2:
        raise UsageError("q_max must be at least 2")
    rows = butterfly(args.q_max, args.G)
    return {
        "q_max": args.q_max,
        "G": args.G,
        "rows": [{"p": p, "q": q, "band_index": b, "lo": lo, "hi": hi} for p, q, b, lo, hi in rows],
        "_csv_rows": rows,
    }


def cmd_check(args, dps: int) -> dict:
    from . import checks

    doc = checks.run_suites(args.d, args.suite, seed=args.seed, triples=args.triples)
    if not doc["passed"]:
        raise CheckFailed(doc)
    return doc


COMMANDS = {
    "field": cmd_field,
    "topology": cmd_topology,
    "series": cmd_series,
    "harper": cmd_harper,
    "butterfly": cmd_butterfly,
    "check": cmd_check,
}

CSV_CAPABLE = {"field", "series", "harper", "butterfly"}


# --------------------------------------------------------------------------
# rendering


def load_schema(command: str) -> dict:
    """JSON schema shipped for the ``--format json`` output of ``command``."""
    return json.loads(resources.files("rmtorus").joinpath("schemas", f"{command}.json").read_text("utf-8"))


def resolved_config(args, dps: int) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("output",)}
    cfg["dps"] = dps
    for k, v in list(cfg.items()):
        if isinstance(v, tuple):
            cfg[k] = list(v)
    return cfg


def _json_default(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, mpmath.mpf):
        return mpmath.nstr(x, 30)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def render(command: str, config: dict, doc: dict, fmt: str) -> str:
    payload = {k: v for k, v in doc.items() if not k.startswith("_")}
    if fmt == "json":
        out = {"config": config, "command": command, "result": payload}
        return json.dumps(out, indent=2, sort_keys=True, default=_json_default) + "\n"
    header = "".join(f"# {k}={json.dumps(v, default=_json_default)}\n" for k, v in config.items())
    if fmt == "csv":
        if "_csv_rows" in doc:
            return butterfly_csv(doc["_csv_rows"], [f"{k}={json.dumps(v)}" for k, v in config.items()])
        return header + doc["_csv"]
    lines = [header.rstrip("\n"), f"{command}:"]
    for k in sorted(payload):
        lines.append(f"  {k}: {json.dumps(payload[k], sort_keys=True, default=_json_default)}")
    return "\n".join(lines) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        try:
            dps = args.dps if args.dps is not None else default_dps()
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if args.format == "csv" and args.command not in CSV_CAPABLE:
            raise UsageError(f"csv output is not available for '{args.command}'")
        if args.format == "csv" and args.command == "field" and args.B is None:
            raise UsageError("field --format csv exports the orbit table and needs -B")
        if args.format == "csv" and args.command == "series" and args.which != "modes":
            raise UsageError("series --format csv is only available with --which modes")
        config = resolved_config(args, dps)
        with mpmath.workdps(dps):
            doc = COMMANDS[args.command](args, dps)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"rmtorus: error: {exc}", file=sys.stderr)
        return 2
    except CheckFailed as exc:
        _emit(render(args.command, config, exc.document, "json" if args.format == "csv" else args.format), args.output)
        print("rmtorus: one or more checks failed", file=sys.stderr)
        return 1
    except (ValueError, ArithmeticError, RationalThetaError) as exc:
        print(f"rmtorus: error: {exc}", file=sys.stderr)
        return 1
    _emit(render(args.command, config, doc, args.format), args.output)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

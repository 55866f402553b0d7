"""Command-line entry point.

Every command is deterministic in its resolved configuration.  When ``--out``
is given, the configuration is echoed to ``<out>.config.json``; feeding that
file to ``replay`` reproduces the output byte for byte.  ``--threads`` only
changes speed and is deliberately left out of the echo.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import concentration as conc
from .constructions import (PBody, QBody, a_prime_norm, build_L2, build_P, build_Q, epsilon_n,
                            make_body, rho_L2)
from .errors import CertificationError, ConvergenceError, GeometryError, InputError
from .geom import HPolytope, Segment, SliceProfile
from .john import john_report
from .moments import centroid_height, format_float, half_volume_sign, sign_integral_F, sweep, sweep_csv
from .sampling import RngStream, hit_and_run, rejection_sample, sample_sphere

EXIT_OK, EXIT_INPUT, EXIT_CONVERGENCE, EXIT_INDETERMINATE = 0, 1, 2, 3

# keys that never affect output
_UNECHOED = {"threads", "out", "handler"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _n_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _epsilon(n: int, epsilon: float | None, c: float) -> float:
    return epsilon_n(n, c) if epsilon is None else epsilon


# -- commands -------------------------------------------------------------------

def _construct_poly(cfg) -> HPolytope:
    if cfg["body"] == "q":
        return build_Q(cfg["n"])
    eps = _epsilon(cfg["n"], cfg["epsilon"], cfg["epsilon_c"])
    return build_L2(cfg["n"], eps) if cfg["body"] == "l2" else build_P(cfg["n"], eps)


def _profile(cfg, theta) -> SliceProfile:
    n = cfg["n"]
    if cfg["body"] == "q":
        return QBody(n).profile(theta)
    eps = _epsilon(n, cfg["epsilon"], cfg["epsilon_c"])
    if cfg["body"] == "p":
        return PBody(n, eps).profile(theta)
    return SliceProfile((Segment(-1.0, float(n), float(rho_L2(theta, n, eps)), 0.0),))


def cmd_construct(cfg, threads):
    if cfg["profile_grid"] is None:
        # bare polytope schema so other commands can read it; config goes to the sidecar
        return "text", _dump_json(_construct_poly(cfg).to_json())
    n, M = cfg["n"], cfg["profile_grid"]
    if M < 2:
        raise InputError("--profile-grid needs at least 2 points")
    theta = sample_sphere(n - 1, RngStream(cfg["seed"], (n,)).substream(0))
    prof = _profile(cfg, theta)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("theta_seed", "t", "rho"))
    for t in np.linspace(prof.tmin, prof.tmax, M):
        w.writerow((cfg["seed"], format_float(t), format_float(prof(float(t)))))
    return "text", buf.getvalue()


def cmd_john(cfg, threads):
    poly = HPolytope.load(cfg["input"])
    report = john_report(poly, tol=cfg["tol"], slack_tol=cfg["slack_tol"])
    return "json", report.to_json()


def _estimate_json(est, extra):
    out = dict(extra)
    out.update({"value": est.value, "stderr": est.stderr, "log_scale": est.log_scale,
                "n_samples": est.n_samples, "seed": est.seed, "verdict": est.verdict})
    return out


def _axial(cfg):
    eps = cfg.get("epsilon")
    if cfg["body"] == "p":
        eps = _epsilon(cfg["n"], eps, cfg["epsilon_c"])
    return make_body(cfg["body"], cfg["n"], eps)


def cmd_centroid(cfg, threads):
    est = centroid_height(_axial(cfg), cfg["n"], cfg["samples"], cfg["seed"], threads)
    out = _estimate_json(est, {"t_hat": est.value})
    out["gap"] = cfg["n"] - est.value
    return "json", out


def cmd_halfvolume(cfg, threads):
    fn = half_volume_sign if cfg["statistic"] == "half-volume" else sign_integral_F
    est = fn(_axial(cfg), cfg["n"], cfg["R"], cfg["samples"], cfg["seed"], threads)
    return "json", _estimate_json(est, {"R": cfg["R"], "statistic": cfg["statistic"]})


def cmd_sweep(cfg, threads):
    rows = sweep(cfg["body"], cfg["n_list"], cfg["samples"], cfg["seed"], threads, cfg["epsilon_c"])
    return "text", sweep_csv(rows)


def cmd_sample(cfg, threads):
    poly = HPolytope.load(cfg["input"])
    stream = RngStream(cfg["seed"], (poly.dim, 4))
    if cfg["method"] == "rej":
        batch = rejection_sample(poly, cfg["count"], rng=stream)
    else:
        chains = cfg["chains"]
        thin = cfg["thin"] or poly.dim
        per_chain = -(-cfg["count"] // chains)
        batch = hit_and_run(poly, poly.interior_point(), per_chain * thin, burn_in=cfg["burn_in"],
                            thin=thin, rng=stream, chains=chains)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(poly.dim)])
    for row in batch.points[: cfg["count"]]:
        w.writerow([format_float(v) for v in row])
    return "text", buf.getvalue()


def _batch_for(cfg, n):
    poly = HPolytope.load(cfg["input"]) if cfg["input"] else HPolytope(
        np.vstack([np.eye(n), -np.eye(n)]), np.ones(2 * n), name=f"cube_{n}")
    chains = cfg["chains"]
    per_chain = -(-cfg["samples"] // chains)
    batch = hit_and_run(poly, poly.interior_point(), per_chain * poly.dim, rng=RngStream(cfg["seed"], (poly.dim, 5)),
                        chains=chains)
    return poly, batch


def cmd_concentration(cfg, threads):
    test, n, seed, N = cfg["test"], cfg["n"], cfg["seed"], cfg["samples"]
    t_grid = cfg["t_grid"]
    if test == "cap":
        grid = t_grid or [0.1 * k for k in range(1, 10)]
        checks = conc.check_cap_bound([n], grid, cfg["C3"], N, seed)
        return "json", [c.to_json() for c in checks]
    if test == "lipschitz":
        eps = _epsilon(n, cfg["epsilon"], cfg["epsilon_c"])
        f = lambda x: a_prime_norm(x, eps)
        check = conc.lipschitz_concentration_check(f, 1.0, n - 1, t_grid or [0.05, 0.1, 0.2], N, seed,
                                                   cfg["C4"])
        return "json", check.to_json()
    if test == "badsets":
        eps = _epsilon(n, cfg["epsilon"], cfg["epsilon_c"])
        C0 = cfg["C0"] if cfg["C0"] is not None else conc.default_C0(cfg["C3"])
        return "json", conc.bad_set_measures(n, eps, C0, N, seed).to_json()
    if test == "gaussian":
        eps = _epsilon(n, cfg["epsilon"], cfg["epsilon_c"])
        return "json", conc.gaussian_norm_bounds(n, eps, N, seed).to_json()
    poly, batch = _batch_for(cfg, n)
    if test == "borell":
        return "json", conc.borell_tail_check(batch, t_grid or [1.5, 2.0]).to_json()
    if test == "smallball":
        return "json", conc.small_ball_check(batch, t_grid or [0.25, 0.5, 0.75, 1.0]).to_json()
    report = john_report(poly)
    cert = report.contacts if report.is_john_position else None
    out = conc.moment_sandwich_checks(batch, certificate=cert, center=report.ellipsoid.center)
    return "json", out.to_json()


COMMANDS = {
    "construct": cmd_construct, "john": cmd_john, "centroid": cmd_centroid,
    "halfvolume": cmd_halfvolume, "sweep": cmd_sweep, "sample": cmd_sample,
    "concentration": cmd_concentration,
}


# -- parser -----------------------------------------------------------------------

def _add_globals(p, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0), help="random seed (default 0)")
    p.add_argument("--threads", type=int, default=d(1), help="worker threads; never changes output")
    p.add_argument("--out", default=d(None), help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="johncentroid", description="John position and centroid experiments.")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        _add_globals(p, suppress=True)
        return p

    def eps_flags(p):
        p.add_argument("--epsilon", type=float, default=None, help="default c/log n")
        p.add_argument("--epsilon-c", type=float, default=1.0, help="c in epsilon = c/log n")

    p = command("construct", "write Q, L2 or P as polytope JSON, or a radial profile as CSV")
    p.add_argument("--body", choices=("q", "l2", "p"), required=True)
    p.add_argument("--n", type=int, required=True)
    eps_flags(p)
    p.add_argument("--profile-grid", type=int, default=None, metavar="M")

    p = command("john", "maximal inscribed ellipsoid and contact decomposition")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--slack-tol", type=float, default=1e-6)

    bodies = ("k", "p", "q", "l", "cylinder", "cone")
    p = command("centroid", "centroid height along the axis")
    p.add_argument("--body", choices=bodies, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    eps_flags(p)

    p = command("halfvolume", "sign test for the mass below height R")
    p.add_argument("--body", choices=bodies, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--statistic", choices=("half-volume", "first-moment"), default="half-volume")
    eps_flags(p)

    p = command("sweep", "centroid gap across dimensions (CSV)")
    p.add_argument("--body", choices=("k", "p"), required=True)
    p.add_argument("--n-list", type=_n_list, required=True)
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--epsilon-c", type=float, default=1.0)

    p = command("sample", "uniform points in a polytope (CSV)")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--method", choices=("har", "rej"), default="har")
    p.add_argument("--chains", type=int, default=16)
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--thin", type=int, default=None)

    p = command("concentration", "empirical concentration checks (JSON)")
    p.add_argument("--test", choices=("cap", "lipschitz", "badsets", "borell", "moments", "gaussian",
                                      "smallball"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--t-grid", type=_float_list, default=None)
    p.add_argument("--in", dest="input", default=None, help="polytope for batch tests (default cube)")
    p.add_argument("--chains", type=int, default=50)
    p.add_argument("--C3", type=float, default=conc.DEFAULT_C3)
    p.add_argument("--C4", type=float, default=conc.DEFAULT_C4)
    p.add_argument("--C0", type=float, default=None)
    eps_flags(p)

    p = command("replay", "rerun a command from its echoed config")
    p.add_argument("--config", required=True)
    return parser


def _config(ns: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(ns).items()) if k not in _UNECHOED}


def _dump_json(obj) -> str:
    return json.dumps(conc._jsonable(obj), indent=2, sort_keys=True) + "\n"


def _write(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def execute(cfg: dict, threads: int = 1, out: str | None = None) -> int:
    kind, payload = COMMANDS[cfg["command"]](cfg, threads)
    if kind == "json":
        payload = {"config": cfg, "result": payload}
        text = _dump_json(payload)
    else:
        text = payload
    _write(out, text)
    if out is not None:
        _write(out + ".config.json", _dump_json(cfg))
    if cfg["command"] == "halfvolume" and payload["result"]["verdict"] == "indeterminate":
        return EXIT_INDETERMINATE
    return EXIT_OK


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.threads < 1:
            raise InputError("--threads must be at least 1")
        if ns.command == "replay":
            with open(ns.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
            if cfg.get("command") not in COMMANDS:
                raise InputError(f"config has unknown command {cfg.get('command')!r}")
        else:
            cfg = _config(ns)
        return execute(cfg, ns.threads, ns.out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    except (ConvergenceError, CertificationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (GeometryError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

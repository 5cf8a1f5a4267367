"""Command-line front end.

Exit status is 0 on success or a PASS verdict, 1 on a FAIL verdict and 2 on
errors (bad configuration, solver failure, incomplete certificate).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import constants, hardy, io, suite
from .closed_forms import ClosedForm, sample
from .config import COMMANDS, PRESETS, RunConfig, help_table, load_config
from .errors import ConfigError, LEHardyError
from .grid import build_domain
from .lane_emden import solve_lane_emden
from .spectral import Potential, principal_eigenvalue

log = logging.getLogger("lehardy")

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI config file (see the key table below)")
    common.add_argument("--out", type=Path, help="output directory (default: out)")
    common.add_argument("--seed", type=lambda s: int(s, 0), help="unsigned 64-bit seed")
    common.add_argument("--h", type=float, help="grid spacing")
    common.add_argument("--q", type=float, help="Lane-Emden exponent in [1, 2)")
    common.add_argument("--shape", choices=sorted(PRESETS), help="preset shape")
    common.add_argument("--quiet", action="store_true", help="only print the final line")

    parser = argparse.ArgumentParser(
        prog="lehardy",
        description="Lane-Emden densities, Dirichlet and Schroedinger ground states, "
                    "Hardy-Lane-Emden checks and bound certificates.",
        epilog=help_table(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="Lane-Emden density of a shape")
    sub.add_parser("eigen", parents=[common], help="principal Dirichlet eigenvalue")
    cert = sub.add_parser("certify", parents=[common], help="ground-state bound certificate")
    cert.add_argument("--potential", help="limit | scale:<c> | closed:<name> | file:<path>")
    const = sub.add_parser("constants", parents=[common], help="explicit constants for dimension N")
    const.add_argument("--N", type=int, help="dimension")
    suite_p = sub.add_parser("verify-suite", parents=[common], help="run the acceptance matrix")
    suite_p.add_argument("--criteria", help="comma separated criterion numbers (default: all)")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config, args.command) if args.config else RunConfig(args.command)
    if args.shape:
        cfg.shape = PRESETS[args.shape]
    for key in ("h", "q", "seed", "out"):
        if getattr(args, key) is not None:
            setattr(cfg, key, getattr(args, key))
    if getattr(args, "potential", None):
        cfg.potential = args.potential
    if getattr(args, "N", None) is not None:
        cfg.N = args.N
    if getattr(args, "criteria", None):
        try:
            cfg.criteria = tuple(int(t) for t in args.criteria.split(","))
        except ValueError:
            raise ConfigError(f"criteria: bad list {args.criteria!r}") from None
    cfg.quiet = args.quiet
    return cfg.validate()


def _say(cfg: RunConfig, text: str):
    if not cfg.quiet:
        print(text)


def cmd_solve(cfg: RunConfig) -> int:
    dom = build_domain(cfg.shape, cfg.h, cfg.boundary)
    d = solve_lane_emden(dom, cfg.q, cfg.tol)
    io.write_density(cfg.out / "density", d)
    _say(cfg, f"nodes {dom.M}, residual {d.residual:.3e}, iterations {d.iterations}")
    print(f"sup norm {d.sup_norm:.10g}, energy {d.energy:.10g}")
    return EXIT_OK


def cmd_eigen(cfg: RunConfig) -> int:
    dom = build_domain(cfg.shape, cfg.h, cfg.boundary)
    r = principal_eigenvalue(dom, cfg.eig_tol)
    io.write_spectral(cfg.out / "eigen", r)
    _say(cfg, f"nodes {dom.M}, residual {r.residual:.3e}")
    print(f"lambda_1 {r.eigenvalue:.12g}")
    return EXIT_OK


def _potential_source(cfg: RunConfig, dom):
    kind, _, arg = cfg.potential.partition(":")
    if kind == "limit":
        return None
    if kind == "scale":
        c = float(arg)
        return lambda d: hardy.limit_potential(d).scaled(c)
    if kind == "closed":
        cf = ClosedForm(arg, dom.N)
        return Potential(sample(cf, dom, floor=0.25 * dom.h), arg)
    field, _ = io.read_field(arg)
    if not field.domain.same_grid(dom):
        raise ConfigError(f"potential: {arg} was sampled on another grid")
    return Potential(field, f"file:{arg}")


def cmd_certify(cfg: RunConfig) -> int:
    dom = build_domain(cfg.shape, cfg.h, cfg.boundary)
    d = solve_lane_emden(dom, cfg.q, cfg.tol)
    cert = hardy.certify(dom, cfg.q, _potential_source(cfg, dom), cfg.deltas,
                         tol=cfg.tol, eig_tol=cfg.eig_tol, seed=cfg.seed, density=d)
    io.write_certificate(cfg.out, cert)
    io.write_field(cfg.out / "limit_potential", hardy.limit_potential(d).field)
    if not cfg.quiet:
        print(io.certificate_summary(cert), end="")
    else:
        print(cert.verdict)
    if cert.verdict == "PASS":
        return EXIT_OK
    return EXIT_ERROR if cert.verdict == "INCOMPLETE" else EXIT_FAIL


def cmd_constants(cfg: RunConfig) -> int:
    N = cfg.N if cfg.N is not None else cfg.shape.dim
    out = {"N": N, "q": cfg.q, "omega_N": constants.unit_ball_volume(N),
           "moser_constant": constants.moser_constant(N, cfg.q)}
    if N >= 3:
        out["talenti_constant"] = constants.talenti_constant(N)
    if N == 2:
        out["gamma"] = constants.DEFAULT_GAMMA
        out["lambda_2gamma_unit_disk"] = constants.ball_lambda_2gamma(constants.DEFAULT_GAMMA)
    io.write_json(cfg.out / "constants.json", out)
    for k, v in out.items():
        print(f"{k:<24} {v:.12g}" if isinstance(v, float) else f"{k:<24} {v}")
    return EXIT_OK


def cmd_verify_suite(cfg: RunConfig) -> int:
    results = []
    for n in cfg.criteria or sorted(suite.CRITERIA):
        if n not in suite.CRITERIA:
            raise ConfigError(f"criteria: no criterion {n}")
        r = suite.CRITERIA[n]()
        results.append(r)
        _say(cfg, r.line())
    payload = [{"number": r.number, "title": r.title, "passed": r.passed,
                "seconds": r.seconds, "details": r.details} for r in results]
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "suite.json").write_text(json.dumps(payload, indent=2, default=_jsonable) + "\n")
    table = suite.summary_table(results)
    (cfg.out / "suite.txt").write_text(table)
    print(table.splitlines()[-1])
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def _jsonable(x):
    return x.item() if hasattr(x, "item") else str(x)


HANDLERS = {
    "solve": cmd_solve,
    "eigen": cmd_eigen,
    "certify": cmd_certify,
    "constants": cmd_constants,
    "verify-suite": cmd_verify_suite,
}
assert set(HANDLERS) == set(COMMANDS)


def run(cfg: RunConfig) -> int:
    try:
        return HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
    except (LEHardyError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return EXIT_ERROR


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

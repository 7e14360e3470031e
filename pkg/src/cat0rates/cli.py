"""Command-line entry point: ``cat0rates {run,rates,verify,metastability,list}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from . import rate_calculus as rc
from .geodesic_space import Spider
from .iteration import write_csv
from .scenario import _region, _space, bundled_scenarios, load_scenario
from .schedules import ErrorSchedule, parse_rational, sequence_from_str
from .verification import VerificationReport, metastability_certificates, verify_metastability, verify_scenario


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _schedule_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--err-eps", default="zero", help="eps_n: zero | geometric:c:q | list:a,b,...")
    p.add_argument("--err-delta", default="zero", help="delta_n, same forms as --err-eps")
    p.add_argument("--B", type=_rational, help="bound on the error sum (default: the exact sum)")


def _moduli(args):
    mod = rc.schedule_moduli(ErrorSchedule(sequence_from_str(args.err_eps), sequence_from_str(args.err_delta)))
    B = args.B if args.B is not None else mod.B
    return mod, B


def _rate_value(args) -> rc.RateCertificate | int:
    name = args.rate
    if name == "phi":
        return rc.phi_certificate(args.eps, args.b)
    if name == "monotone-cauchy-bound":
        return rc.monotone_cauchy_bound(args.b, args.eps_prime, args.k)
    if name == "chi-fejer":
        return rc.chi_fejer(args.n, args.m, args.r)
    if name == "chi-m":
        return rc.chi_M(rc.counterfunction_from_str(args.g), args.n, args.k)
    mod, B = _moduli(args)
    if name == "phi-prime":
        return rc.phi_prime_certificate(args.eps, args.b, B, mod.alpha)
    if name == "phi-double-prime":
        return rc.phi_double_prime_certificate(args.eps, args.b, B, mod.alpha)
    if name == "phi-beta":
        beta = mod.beta_prime if args.primed else mod.beta
        return rc.phi_beta_certificate(args.eps, beta, args.b, B, mod.alpha, args.primed)
    if name == "phi-hat":
        beta = mod.beta_prime if args.primed else mod.beta
        return rc.phi_hat(args.k, args.N, rc.PhiBetaCurve(beta, args.b, B, mod.alpha, args.primed))
    if name == "psi-hat":
        if args.region is not None:
            space = _space(json.loads(args.space)) if args.space else None
            tb = rc.RegionTB(_region(json.loads(args.region)), space if isinstance(space, Spider) else None)
        else:
            tb = rc.ConstantModulus(args.tb)
        g = rc.counterfunction_from_str(args.g)
        beta = mod.beta_prime if args.primed else mod.beta
        return rc.psi_hat(args.k, g, tb, mod.alpha, beta, args.b, B,
                          primed=args.primed, alpha_prime=mod.alpha_prime)
    raise SystemExit(f"unknown rate {name}")


def cmd_rates(args) -> int:
    result = _rate_value(args)
    if isinstance(result, int):
        print(result)
        return 0
    if args.json:
        print(json.dumps(result.to_dict(), indent=2))
        return 0
    print(rc.decimal_str(result.bound))
    if args.verbose:
        if result.symbolic:
            print(f"= {result.symbolic}")
        for note in result.notes:
            print(f"# {note}")
    if not result.exact:
        print("# lower bound only: the exact value is beyond the evaluation budget", file=sys.stderr)
    return 0


def cmd_run(args) -> int:
    scn = load_scenario(args.scenario)
    traj = scn.run()
    out = args.output or f"{scn.id}.csv"
    if out == "-":
        write_csv(traj, "/dev/stdout")
    else:
        write_csv(traj, out)
        print(f"wrote {traj.horizon} rows to {out}")
    return 0


def _verify_one(path) -> str:
    return verify_scenario(load_scenario(path)).to_json()


def cmd_verify(args) -> int:
    paths = list(args.scenarios)
    if args.all or not paths:
        paths += [str(p) for p in bundled_scenarios()]
    if args.parallel:
        with ProcessPoolExecutor() as pool:
            texts = list(pool.map(_verify_one, paths))
    else:
        texts = [_verify_one(p) for p in paths]
    reports = [VerificationReport.from_json(t) for t in texts]
    for r in reports:
        print(r.to_text())
    if args.json:
        payload = [json.loads(t) for t in texts]
        blob = json.dumps(payload[0] if len(payload) == 1 else payload, indent=2)
        if args.json == "-":
            print(blob)
        else:
            with open(args.json, "w") as fh:
                fh.write(blob)
    return 0 if all(r.passed for r in reports) else 1


def cmd_metastability(args) -> int:
    scn = load_scenario(args.scenario)
    if scn.region is None:
        raise SystemExit(f"{scn.id} has no region, so no total-boundedness modulus")
    requests = scn.metastability
    if args.k is not None:
        requests = [(args.k, rc.counterfunction_from_str(args.g))]
    traj = scn.run()
    ok = True
    for k, g in requests:
        certs = metastability_certificates(scn, k, g)
        for seq, cert in certs.items():
            check = verify_metastability(traj, k, g, cert, scn.region, seq)
            ok &= check.status != "fail"
            sym = f" = {cert.symbolic}" if cert.symbolic else ""
            kind = "psi_hat" if cert.exact else "psi_hat >="
            print(f"({seq}_n) k={k} g={g.describe()}: {kind} {rc.short_int(cert.bound)}{sym}")
            print(f"    {check.status}: {check.note}")
    return 0 if ok else 1


def cmd_list(args) -> int:
    for p in bundled_scenarios():
        print(p.stem)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cat0rates", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="iterate a scenario and write the residual CSV")
    p.add_argument("scenario")
    p.add_argument("-o", "--output", help="CSV path, '-' for stdout (default: <id>.csv)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run the full check battery")
    p.add_argument("scenarios", nargs="*")
    p.add_argument("--all", action="store_true", help="also verify every bundled scenario")
    p.add_argument("--json", help="write the JSON report here ('-' for stdout)")
    p.add_argument("--parallel", action="store_true", help="verify scenarios in separate processes")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("metastability", help="compute psi_hat and search the trajectory")
    p.add_argument("scenario")
    p.add_argument("--k", type=int)
    p.add_argument("--g", default="const:1")
    p.set_defaults(func=cmd_metastability)

    p = sub.add_parser("list", help="list bundled scenarios")
    p.set_defaults(func=cmd_list)

    rates = sub.add_parser("rates", help="evaluate a rate exactly")
    rsub = rates.add_subparsers(dest="rate", required=True)

    def rate(name, help_text):
        rp = rsub.add_parser(name, help=help_text)
        rp.add_argument("--json", action="store_true", help="print the full certificate")
        rp.add_argument("-v", "--verbose", action="store_true")
        rp.set_defaults(func=cmd_rates)
        return rp

    rp = rate("phi", "regularity rate, exact iteration (b >= 2 d(x0,u))")
    rp.add_argument("--eps", type=_rational, required=True)
    rp.add_argument("--b", type=_rational, required=True)
    for name in ("phi-prime", "phi-double-prime", "phi-beta"):
        rp = rate(name, f"{name} rate, iteration with errors (b >= d(x0,u))")
        rp.add_argument("--eps", type=_rational, required=True)
        rp.add_argument("--b", type=_rational, required=True)
        _schedule_args(rp)
        if name == "phi-beta":
            rp.add_argument("--primed", action="store_true", help="rate for d(y_n, S' y_n)")
    rp = rate("phi-hat", "monotone liminf bound")
    rp.add_argument("--k", type=int, required=True)
    rp.add_argument("--N", type=int, default=0)
    rp.add_argument("--b", type=_rational, required=True)
    rp.add_argument("--primed", action="store_true")
    _schedule_args(rp)
    rp = rate("chi-fejer", "quasi-Fejer modulus m(r+1)")
    for flag in ("--n", "--m", "--r"):
        rp.add_argument(flag, type=int, required=True)
    rp = rate("chi-m", "(max_{i<=n} g(i)) (k+1)")
    rp.add_argument("--g", required=True, help="const:m | identity | affine:a:b | table:v0,v1,...:default")
    rp.add_argument("--n", type=int, required=True)
    rp.add_argument("--k", type=int, required=True)
    rp = rate("psi-hat", "rate of metastability")
    rp.add_argument("--k", type=int, required=True)
    rp.add_argument("--g", required=True)
    rp.add_argument("--b", type=_rational, required=True)
    rp.add_argument("--tb", type=int, default=0, help="constant total-boundedness modulus")
    rp.add_argument("--region", help='region JSON, e.g. \'{"box":{"lo":[0],"hi":[1]}}\'')
    rp.add_argument("--space", help='space JSON, needed for spider balls, e.g. \'{"spider":3}\'')
    rp.add_argument("--primed", action="store_true")
    _schedule_args(rp)
    rp = rate("monotone-cauchy-bound", "k * ceil(b / eps')")
    rp.add_argument("--b", type=_rational, required=True)
    rp.add_argument("--eps-prime", type=_rational, required=True)
    rp.add_argument("--k", type=int, required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        # reader closed early (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except (ValueError, FileNotFoundError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

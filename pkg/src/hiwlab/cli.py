"""Command-line front end.

Exit codes: 0 ok, 1 runtime error, 2 configuration error, 3 a --check
assertion failed.  All structured output is JSON with sorted keys and no
timestamps, so identical configurations reproduce byte-identical files;
per-class tables go to CSV, and --gnuplot additionally writes plain
two-column data files.  HIW_THREADS caps the bucketing parallelism.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__
from . import hecke as hk
from . import progsums as ps
from . import qseries as qs
from . import signstats as ss
from . import voronoi as vo
from . import windows as wl
from .modarith import (PrimeCtx, is_prime, legendre, nearest_prime, salie_closed,
                       salie_direct, sa, sqrt_mod)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_CHECK = 3

# observed slack constant for the rearrangement check's Y^-3 comparison
# (largest class-wise constant measured on the reference configuration)
REARRANGE_C_DEFAULT = 6500.0


class ConfigError(ValueError):
    pass


class CheckFailure(AssertionError):
    pass


def _parse_window(spec: str) -> wl.Window:
    if spec == "standard":
        return wl.standard_bump()
    try:
        a, b = (float(t) for t in spec.split(","))
    except ValueError as exc:
        raise ConfigError(f"window must be 'standard' or 'a,b', got {spec!r}") from exc
    return wl.scaled_bump(a, b)


def _load_form(name: str, trunc: int | None, x_hint: float | None = None) -> qs.QSeries:
    if os.path.exists(name) or name.endswith(".qexp"):
        return qs.read_qexp(name)
    if name not in qs.BUILTIN_NAMES:
        raise ConfigError(f"--form must be a builtin {qs.BUILTIN_NAMES} or a .qexp path")
    if trunc is None:
        trunc = int(math.ceil(x_hint)) + 1 if x_hint else 1000
    return qs.builtin_form(name, trunc)


def _resolve_p(args, x: float) -> int:
    if getattr(args, "p", None):
        if not is_prime(args.p):
            raise ConfigError(f"--p {args.p} is not prime")
        return args.p
    exp = getattr(args, "p_exp", None) or 0.55
    return nearest_prime(x ** exp)


def _config_echo(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _write_json(path, payload) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if path:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_dat(path, xs, ys) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for xv, yv in zip(xs, ys):
            fh.write(f"{xv!r} {yv!r}\n")


def _sibling(out: str | None, suffix: str) -> str:
    base = os.path.splitext(out)[0] if out else "hiw_report"
    return base + suffix


# -- subcommands --------------------------------------------------------------


def cmd_form(args) -> int:
    form = _load_form(args.name, args.trunc)
    qs.write_qexp(form, args.out)
    if args.check:
        back = qs.read_qexp(args.out)
        if back != form:
            raise CheckFailure("round trip altered the series")
    _write_json(None, {"written": args.out, "truncation": form.truncation,
                       "weight": f"{form.weight_two}/2", "level": form.level,
                       "config": _config_echo(args), "version": __version__})
    return EXIT_OK


def cmd_sums(args) -> int:
    p = args.p
    if not is_prime(p) or p == 2:
        raise ConfigError("--p must be an odd prime")
    ctx = PrimeCtx(p)
    u, v = args.u, args.v
    payload = {"p": p, "u": u, "v": v, "legendre_u": legendre(u, p),
               "config": _config_echo(args), "version": __version__}
    if (u * v) % p != 0:
        cl = salie_closed(u, v, ctx)
        payload["salie_closed"] = [cl.real, cl.imag]
    di = salie_direct(u, v, ctx)
    sav = sa(u, ctx)
    payload["salie_direct"] = [di.real, di.imag]
    payload["sa_u"] = [sav.real, sav.imag]
    if legendre(u, p) == 1:
        payload["sqrt_u"] = sqrt_mod(u, p)
    if args.check:
        if (u * v) % p != 0 and abs(salie_closed(u, v, ctx) - di) > 1e-9:
            raise CheckFailure("closed and direct Salie evaluations disagree")
    _write_json(args.out, payload)
    return EXIT_OK


def cmd_moments(args) -> int:
    w = _parse_window(args.window)
    x = float(args.x)
    form = _load_form(args.form, args.trunc, x_hint=x)
    p = _resolve_p(args, x)
    report = ps.progression_e(form, w, x, p)
    cf = ps.estimate_cf(form, w, [x])
    verdict = ps.moment_verdict(report, cf.estimates[-1], w)
    am1, floor = ps.holder_abs_first_moment(report)
    payload = report.to_dict()
    payload.update({"cf_estimate": cf.to_dict(), "verdict": verdict.to_dict(),
                    "holder": {"abs_m1": am1, "floor": floor},
                    "l2sq": w.l2sq, "config": _config_echo(args),
                    "version": __version__})
    if args.check:
        part = math.sqrt(x / p) * float(np.sum(report.e_values))
        scale = float(np.sum(np.abs(form.float_coeffs[: int(x) + 1]))) + 1e-30
        if abs(part - report.total_sum) > 1e-9 * scale:
            raise CheckFailure("class sums do not re-assemble the total")
        if am1 + 1e-12 < floor:
            raise CheckFailure("Holder chain violated")
    _write_json(args.out, payload)
    if args.gnuplot:
        _write_dat(_sibling(args.out, "_evalues.dat"),
                   range(len(report.e_values)), report.e_values)
    if args.plot:
        from . import plotting

        plotting.plot_progression(report, _sibling(args.out, "_evalues.png"))
    return EXIT_OK


def cmd_voronoi(args) -> int:
    w = _parse_window(args.window)
    x = float(args.x)
    trunc_f = args.trunc or int(x) + 1
    pair = vo.make_fricke_pair(trunc_f, args.f0_trunc)
    report = vo.voronoi_check(pair, w, args.u, args.q, x)
    payload = report.to_dict()
    payload.update({"config": _config_echo(args), "version": __version__})
    if args.check and not (report.converged and report.rel_residual < 1e-6):
        raise CheckFailure(f"identity residual {report.rel_residual:.3e} too large")
    _write_json(args.out, payload)
    if args.plot:
        from . import plotting

        plotting.plot_kernel_profile(pair.kernel(w), _sibling(args.out, "_kernel.png"))
    if args.gnuplot:
        kern = pair.kernel(w)
        ys = np.geomspace(0.05, 50.0, 300)
        _write_dat(_sibling(args.out, "_kernel.dat"), ys, kern.values(ys))
    return EXIT_OK


def cmd_rearrange(args) -> int:
    w = _parse_window(args.window)
    x = float(args.x)
    pair = vo.make_fricke_pair(int(x) + 1, max(2000, args.f0_trunc or 0))
    report = vo.rearranged_e_check(pair, w, x, args.p, args.a, eta=args.eta)
    payload = report.to_dict()
    payload.update({"config": _config_echo(args), "version": __version__})
    if args.check:
        allowed = max(1e-4, args.c_slack * report.y_big ** -3)
        if report.residual > allowed:
            raise CheckFailure(
                f"residual {report.residual:.3e} above allowance {allowed:.3e}")
    _write_json(args.out, payload)
    return EXIT_OK


def cmd_hecke(args) -> int:
    form = _load_form(args.form, args.trunc)
    result = hk.extract_eigenvalue(form, args.p)
    payload = result.to_dict()
    payload.update({"config": _config_echo(args), "version": __version__})
    if args.check:
        doubled = hk.apply_tp2(form.scale(2), args.p)
        single = hk.apply_tp2(form, args.p)
        if any(2 * c1 != c2 for c1, c2 in zip(single.coeffs, doubled.coeffs)):
            raise CheckFailure("Hecke action is not linear")
    _write_json(args.out, payload)
    return EXIT_OK


def cmd_shimura(args) -> int:
    form = _load_form(args.form, args.trunc)
    n_max = args.nmax
    chi_sq = (lambda p: 0 if form.level % p == 0 else 1)
    lambdas = {}
    for p in range(2, n_max + 1):
        if not is_prime(p):
            continue
        if form.level % p == 0:
            killed = hk.u_action(form, p * p)
            if any(killed.coeffs):
                raise ConfigError(
                    f"prime {p} divides the level and the U-action does not vanish; unsupported")
            lambdas[p] = 0
        else:
            res = hk.extract_eigenvalue(form, p)
            if not res.is_eigen:
                raise ConfigError(f"form is not an eigenform at p = {p}")
            lambdas[p] = res.lam
    residual = hk.shimura_relation_check(form, lambdas, args.t, n_max, chi_sq=chi_sq)
    payload = {"t": args.t, "n_max": n_max,
               "lambdas": {str(k): str(v) for k, v in sorted(lambdas.items())},
               "max_residual": str(residual),
               "config": _config_echo(args), "version": __version__}
    if args.check and residual != 0:
        raise CheckFailure(f"relation residual {residual} is not exactly zero")
    _write_json(args.out, payload)
    return EXIT_OK


def cmd_signs(args) -> int:
    w = _parse_window(args.window) if args.window else None
    x = float(args.x)
    form = _load_form(args.form, args.trunc, x_hint=x)
    q = args.p or 1
    report = ss.sign_count_report(form, x, args.alpha, q, w)
    payload = report.to_dict()
    payload.update({"config": _config_echo(args), "version": __version__})
    rows = None
    if q > 1 and is_prime(q):
        prog = ps.progression_e(form, w or wl.standard_bump(), x, q)
        rows = [(a, repr(float(prog.e_values[a])), int(report.per_class_plus[a]),
                 int(report.per_class_minus[a])) for a in range(q)]
    if args.check:
        neg = ss.class_counts(form.scale(-1), x, args.alpha, q, -1, w)
        if not np.array_equal(neg, report.per_class_plus):
            raise CheckFailure("sign symmetry T+(f) = T-(-f) broken")
    _write_json(args.out, payload)
    if rows is not None:
        _write_csv(_sibling(args.out, "_classes.csv"), ["a", "E", "T+", "T-"], rows)
    if args.gnuplot:
        _write_dat(_sibling(args.out, "_tplus.dat"),
                   range(q), report.per_class_plus)
    if args.plot:
        from . import plotting

        plotting.plot_sign_counts(report, _sibling(args.out, "_signs.png"))
    return EXIT_OK


def cmd_survey(args) -> int:
    w = _parse_window(args.window)
    x = float(args.x)
    form = _load_form(args.form, args.trunc, x_hint=x)
    p = _resolve_p(args, x)
    if args.mode == "plain":
        if not (3.0 / 14.0 < args.alpha <= 0.25):
            raise ConfigError(
                f"alpha = {args.alpha} invalid: the plain survey needs alpha in (3/14, 1/4]")
        verdict = ss.class_survey(form, w, x, p, args.alpha,
                                  m1=args.m1, m2=args.m2, r=args.r)
        payload = verdict.to_dict()
        counts_plus = ss.class_counts(form, x, args.alpha, p, +1, w)
        counts_minus = ss.class_counts(form, x, args.alpha, p, -1, w)
        in_a = in_b = [""] * p
        if args.check:
            hits = np.flatnonzero(counts_plus[1:] >= 1) + 1
            sample = hits[:: max(1, len(hits) // 50)]
            for a in sample:
                if ss.count_t(form, x, args.alpha, int(a), p, +1, w) < 1:
                    raise CheckFailure(f"class {a} recount lost its hit")
    else:
        if not (0.125 < args.alpha <= 1.0 / 7.0):
            raise ConfigError(
                f"alpha = {args.alpha} invalid: the eigen survey needs alpha in (1/8, 1/7]")
        cf = ps.estimate_cf(form, w, [x]).estimates[-1]
        m = args.m if args.m is not None else 0.1 * cf * w.l2sq
        rep = ss.eigen_survey(form, w, x, p, args.alpha, m, args.delta)
        payload = rep.to_dict()
        counts_plus, counts_minus = rep.t_plus, rep.t_minus
        in_a, in_b = rep.in_a.astype(int), rep.in_b.astype(int)
        if args.check and rep.holder_violations:
            raise CheckFailure("per-class Holder floor violated inside A")
    payload.update({"config": _config_echo(args), "version": __version__})
    _write_json(args.out, payload)
    prog = ps.progression_e(form, w, x, p)
    rows = [(a, repr(float(prog.e_values[a])), int(counts_plus[a]),
             int(counts_minus[a]), in_a[a], in_b[a]) for a in range(p)]
    _write_csv(_sibling(args.out, "_classes.csv"),
               ["a", "E", "T+", "T-", "inA", "inB"], rows)
    if args.gnuplot:
        _write_dat(_sibling(args.out, "_tplus.dat"), range(p), counts_plus)
    if args.plot:
        from . import plotting

        plotting.plot_survey_classes(prog.e_values, np.asarray(counts_plus) >= 1,
                                     _sibling(args.out, "_survey.png"),
                                     title=f"x={x:g} p={p} alpha={args.alpha}")
    return EXIT_OK


def cmd_corollary(args) -> int:
    x = float(args.x)
    form = _load_form(args.form, args.trunc, x_hint=x)
    result = ss.corollary_count(form, x, args.eps, r=args.r)
    result.update({"config": _config_echo(args), "version": __version__})
    if args.check and not result["meets_target"]:
        raise CheckFailure(
            f"count {result['count']} below target {result['target']:.2f}")
    _write_json(args.out, result)
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hiw",
        description="numerical laboratory for half-integral weight cusp forms")
    ap.add_argument("--version", action="version", version=f"hiwlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, form=True, window=True, out=True):
        if form:
            p.add_argument("--form", default="theta_delta",
                           help="builtin name or path to a .qexp file")
            p.add_argument("--trunc", type=int, default=None,
                           help="truncation for builtin forms")
        if window:
            p.add_argument("--window", default="standard",
                           help="'standard' or 'a,b' for a scaled bump")
        if out:
            p.add_argument("--out", default=None, help="JSON output path (stdout if absent)")
        p.add_argument("--seed", type=int, default=0,
                       help="seed recorded in reports (reproducibility tag)")
        p.add_argument("--check", action="store_true",
                       help="run the subcommand's consistency assertions (exit 3 on failure)")
        p.add_argument("--plot", action="store_true",
                       help="render figures next to the output files")
        p.add_argument("--gnuplot", action="store_true",
                       help="emit plain two-column .dat files next to the output")

    p = sub.add_parser("form", help="build a form and write its q-expansion file")
    p.add_argument("--name", required=True, choices=qs.BUILTIN_NAMES)
    p.add_argument("--trunc", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--check", action="store_true")
    p.add_argument("--plot", action="store_true")
    p.add_argument("--gnuplot", action="store_true")
    p.set_defaults(func=cmd_form)

    p = sub.add_parser("sums", help="character/exponential sum spot checks")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--u", type=int, default=1)
    p.add_argument("--v", type=int, default=1)
    common(p, form=False, window=False)
    p.set_defaults(func=cmd_sums)

    p = sub.add_parser("moments", help="progression sums and their moments")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--p-exp", dest="p_exp", type=float, default=None,
                   help="use the prime nearest to x^e (default e = 0.55)")
    common(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("voronoi", help="dual summation identity residual")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--u", type=int, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--f0-trunc", dest="f0_trunc", type=int, default=50000)
    common(p)
    p.set_defaults(func=cmd_voronoi)

    p = sub.add_parser("rearrange", help="Salie-side rearrangement residual")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--c-slack", dest="c_slack", type=float, default=REARRANGE_C_DEFAULT,
                   help="allowance constant C in max(1e-4, C Y^-3) for --check")
    p.add_argument("--f0-trunc", dest="f0_trunc", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_rearrange)

    p = sub.add_parser("hecke", help="square-index Hecke action and eigenvalue")
    p.add_argument("--p", type=int, required=True)
    common(p, window=False)
    p.set_defaults(func=cmd_hecke)

    p = sub.add_parser("shimura", help="lift relation residual (exact)")
    p.add_argument("--t", type=int, default=1)
    p.add_argument("--nmax", type=int, default=15)
    common(p, window=False)
    p.set_defaults(func=cmd_shimura)

    p = sub.add_parser("signs", help="per-class sign counts")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--p", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_signs)

    p = sub.add_parser("survey", help="class surveys (plain or eigen mode)")
    p.add_argument("--mode", choices=("plain", "eigen"), default="plain")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--alpha", type=float, default=0.23)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--p-exp", dest="p_exp", type=float, default=None)
    p.add_argument("--r", type=float, default=0.01)
    p.add_argument("--m", type=float, default=None)
    p.add_argument("--m1", type=float, default=None)
    p.add_argument("--m2", type=float, default=None)
    p.add_argument("--delta", type=float, default=0.05)
    common(p)
    p.set_defaults(func=cmd_survey)

    p = sub.add_parser("corollary", help="aggregate count against its power target")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--eps", type=float, default=0.02)
    p.add_argument("--r", type=float, default=0.01)
    common(p, window=False)
    p.set_defaults(func=cmd_corollary)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: reproducible runs with JSON/CSV artifacts.

Every subcommand assembles a manifest (command, parameters, seed,
versions), runs the computation single-threaded and deterministically,
and emits a JSON result whose numeric payload is digest-stamped; rerruns
with the same manifest reproduce the digest bit for bit.  Exit code 0 on
success, 2 when an assertion-style check reports violations, 1 on usage
errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__, bec, bounds, channels, construction, exactpoly
from . import randmaps, scaling


def _out_dir(args):
    d = args.out or os.environ.get("POLARSCALE_OUT", ".")
    os.makedirs(d, exist_ok=True)
    return d


def _emit(args, name, inputs, payload, runtime, check_failed=False):
    body = {
        "command": name,
        "inputs": inputs,
        "result": payload,
        "runtime_sec": round(runtime, 3),
        "versions": {"polarscale": __version__, "numpy": np.__version__},
        "seed": args.seed,
    }
    digest_src = json.dumps({"command": name, "inputs": inputs, "result": payload},
                            sort_keys=True, default=str)
    body["digest"] = hashlib.sha256(digest_src.encode()).hexdigest()[:16]
    text = json.dumps(body, indent=2, default=str)
    if args.json_path:
        path = os.path.join(_out_dir(args), args.json_path)
        with open(path, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 2 if check_failed else 0


def _write_csv(args, filename, header, rows):
    path = os.path.join(_out_dir(args), filename)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


# -- subcommand implementations ----------------------------------------------


def cmd_eig(args):
    t0 = time.time()
    lams = bec.subdominant_eigenvalues(args.L, args.k)
    return _emit(args, "eig", {"L": args.L, "k": args.k},
                 {"eigenvalues": lams, "tolerance": 1e-6}, time.time() - t0)


def cmd_pn(args):
    t0 = time.time()
    p = bec.prob_in_interval(args.z, args.a, args.b, args.n)
    payload = {"probability": p}
    if args.n > bec.ENUM_CAP:
        lo, hi = bec.prob_bracket(args.z, args.a, args.b, args.n)
        payload.update({"bracket": [lo, hi], "method": "grid-bracket"})
    else:
        payload["method"] = "exact-enumeration"
    return _emit(args, "pn", {"z": args.z, "a": args.a, "b": args.b, "n": args.n},
                 payload, time.time() - t0)


def cmd_qfit(args):
    t0 = time.time()
    prof = bec.iterate_q(args.grid, args.tol)
    payload = {"inv_mu": prof.inv_mu, "mu": prof.mu, "lambda": prof.lam,
               "iterations": prof.iterations, "sup_change": prof.sup_change}
    if args.csv_path:
        step = max(1, len(prof.z) // 2000)
        _write_csv(args, args.csv_path, ["z", "q"],
                   zip(prof.z[::step], prof.q[::step]))
    return _emit(args, "qfit", {"grid": args.grid, "tol": args.tol},
                 payload, time.time() - t0)


def cmd_am(args):
    t0 = time.time()
    bound = exactpoly.infimum_ratio(args.m, Fraction(args.prec))
    payload = {
        "a_m": [float(bound.lo), float(bound.hi)],
        "exact": [str(bound.lo), str(bound.hi)],
        "method": bound.method,
        "certificate": {k: str(v) for k, v in bound.detail.items()},
    }
    return _emit(args, "am", {"m": args.m, "prec": args.prec},
                 payload, time.time() - t0)


def cmd_concave(args):
    t0 = time.time()
    cert = exactpoly.certify_concavity(args.m)
    return _emit(args, "concave", {"m": args.m},
                 {"suitable": bool(cert), "method": cert.method,
                  "detail": cert.detail},
                 time.time() - t0, check_failed=not cert)


def cmd_mu_lower(args):
    t0 = time.time()
    bound = exactpoly.mu_lower(args.m, Fraction(args.prec),
                               require_suitable=not args.unchecked)
    return _emit(args, "mu-lower", {"m": args.m, "prec": args.prec},
                 {"mu_m": [float(bound.lo), float(bound.hi)],
                  "suitable": bound.detail.get("suitable"),
                  "method": bound.method},
                 time.time() - t0)


def cmd_bm(args):
    t0 = time.time()
    g = bounds.TestFunction.parse(args.g)
    enc = bounds.sup_ratio_bec(g, args.m, args.prec)
    return _emit(args, "bm", {"g": args.g, "m": args.m, "prec": args.prec},
                 {"b_m": [enc.lo, enc.hi], "converged": enc.converged,
                  "cells": enc.cells, "g": enc.detail["g"]},
                 time.time() - t0)


def cmd_lg(args):
    t0 = time.time()
    g = bounds.TestFunction.parse(args.g)
    enc = bounds.compute_Lg(g, args.prec, reference=args.reference)
    payload = {"L_g": [enc.lo, enc.hi],
               "log2_L_g": [math.log2(enc.lo), math.log2(enc.hi)],
               "converged": enc.converged, "cells": enc.cells}
    failed = False
    if args.reference is not None:
        payload["reference"] = args.reference
        payload["reference_inside"] = enc.reference_inside
        failed = not enc.reference_inside
    return _emit(args, "lg", {"g": args.g, "prec": args.prec},
                 payload, time.time() - t0, check_failed=failed)


def cmd_threshold(args):
    t0 = time.time()
    zs = randmaps.threshold_sample(args.depth, args.samples, seed=args.seed)
    ks = randmaps.ks_uniform_statistic(zs)
    if args.csv_path:
        _write_csv(args, args.csv_path, ["z_star"], [[z] for z in zs])
    return _emit(args, "threshold",
                 {"samples": args.samples, "depth": args.depth, "seed": args.seed},
                 {"ks_statistic": ks, "mean": float(np.mean(zs))},
                 time.time() - t0)


def cmd_loglen(args):
    t0 = time.time()
    mean, stderr = randmaps.estimate_log_length(
        args.n, args.samples, args.a, args.b, seed=args.seed)
    return _emit(args, "loglen",
                 {"n": args.n, "samples": args.samples, "a": args.a,
                  "b": args.b, "seed": args.seed},
                 {"mean": mean, "stderr": stderr,
                  "ergodic_limit": randmaps.ERGODIC_RATE},
                 time.time() - t0)


def cmd_intdecay(args):
    t0 = time.time()
    rep = randmaps.integral_decay_check(args.n, args.a, args.b,
                                        samples=args.samples, seed=args.seed)
    return _emit(args, "intdecay",
                 {"n": args.n, "a": args.a, "b": args.b},
                 {"value": rep.value, "bound": rep.bound, "slack": rep.slack,
                  "exact": rep.exact, "holds": rep.holds},
                 time.time() - t0, check_failed=not rep.holds)


def cmd_construct(args):
    t0 = time.time()
    W = channels.parse_channel(args.channel)
    records = construction.subchannel_params(W, args.n, args.quant)
    sel = construction.good_indices(records, args.rate, key=args.key)
    if args.csv_path:
        _write_csv(args, args.csv_path,
                   ["index", "H", "Z", "E", "delta_H"],
                   [[r.index, r.entropy, r.bhattacharyya, r.error_prob,
                     r.delta_H] for r in records])
    payload = {
        "blocklength": sel.blocklength, "rate": sel.rate,
        "selection_size": sel.size, "error_lower": sel.error_lower,
        "error_upper": sel.error_upper, "key": sel.key,
        "tie_break": "index",
        "indices": sel.indices.tolist() if sel.size <= 64 else "csv",
    }
    return _emit(args, "construct",
                 {"channel": args.channel, "n": args.n, "rate": args.rate,
                  "quant": args.quant, "key": args.key},
                 payload, time.time() - t0)


def cmd_scalingfit(args):
    t0 = time.time()
    W = channels.parse_channel(args.channel)
    gaps = np.geomspace(args.gmin, args.gmax, args.points)
    cap = channels.params(W).capacity
    fit = construction.fit_scaling_exponent(
        W, args.pe, R_grid=cap - gaps, n_max=args.nmax, M=args.quant,
        condition=args.condition)
    payload = {"slope": fit.slope, "intercept": fit.intercept,
               "slope_stderr": fit.slope_stderr,
               "points": len(fit.log_N),
               "gaps": fit.gaps.tolist(),
               "log_N": fit.log_N.tolist(),
               "condition": args.condition}
    return _emit(args, "scalingfit",
                 {"channel": args.channel, "pe": args.pe,
                  "gmin": args.gmin, "gmax": args.gmax,
                  "points": args.points, "nmax": args.nmax},
                 payload, time.time() - t0)


def cmd_thm3(args):
    t0 = time.time()
    W = channels.parse_channel(args.channel)
    r_cap, pe_floor, cert = scaling.theorem3_rate_cap(W, args.m, args.n)
    return _emit(args, "thm3",
                 {"channel": args.channel, "m": args.m, "n": args.n},
                 {"rate_cap": r_cap, "pe_floor": pe_floor,
                  "gamma": cert.gamma, "theta": cert.theta,
                  "mu_m": [cert.mu_lo, cert.mu_hi],
                  "a_m": [cert.a_lo, cert.a_hi],
                  "formulas": {
                      "gamma": "2^(m/mu_m) f_m(H(W))",
                      "rate_cap": "I(W) - gamma/4 * 2^(-n/mu_m)",
                      "pe_floor": "(gamma^2/16) 2^(n(1-2/mu_m)) / (8(n/mu_m + log2(4/gamma)))",
                  }},
                 time.time() - t0)


def cmd_thm4(args):
    t0 = time.time()
    W = channels.parse_channel(args.channel)
    cert = scaling.theorem4_blocklength(W, args.rate, args.pe, rho=args.rho,
                                        beta_decay=args.beta,
                                        alpha_exp=args.alpha)
    return _emit(args, "thm4",
                 {"channel": args.channel, "rate": args.rate, "pe": args.pe,
                  "rho": args.rho, "alpha": args.alpha, "beta": args.beta},
                 {"n0": cert.n0, "n1": cert.n1, "log_N_bound": cert.log_N_bound,
                  "c1": cert.c1, "c2": cert.c2, "c3": cert.c3, "c6": cert.c6,
                  "verified_at": cert.verified_at,
                  "desk_scale": cert.desk_scale,
                  "formulas": {
                      "c2": "2/(sqrt(2)-1)^2",
                      "c3": "2/((1-alpha) ln 2)",
                      "c1": "8 c2 c3 beta",
                      "n0": "ceil((1/rho) log2(3(1+c1)(1+2 c2 c3 beta)/d))",
                  }},
                 time.time() - t0)


def cmd_auxcheck(args):
    t0 = time.time()
    W = channels.parse_channel(args.channel)
    rep = scaling.aux_lemmas_check(W, n_max=args.nmax, seed=args.seed)
    payload = {
        "lemma7": rep.lemma7,
        "lemma8": rep.lemma8,
        "lemma9": rep.lemma9,
        "all_hold": rep.all_hold,
    }
    return _emit(args, "auxcheck", {"channel": args.channel, "nmax": args.nmax},
                 payload, time.time() - t0, check_failed=not rep.all_hold)


FIG2_CHANNELS = {
    "bsc": [0.11, 0.146, 0.189],
    "bawgn": [0.978, 1.149, 1.386],
}


def cmd_figures(args):
    t0 = time.time()
    which = args.which
    written = []
    if which == "fig1":
        zs = [0.5, 0.6, 0.7]
        n_max = args.nmax or 40
        curves = bec.prob_curve(zs, 0.1, 0.9, n_max)
        rows = []
        for n in range(1, n_max + 1):
            row = [n]
            for j in range(len(zs)):
                lo, hi = curves[n, j]
                mid = 0.5 * (lo + hi)
                row.append(math.log2(mid) / n if mid > 0 else float("nan"))
            rows.append(row)
        written.append(_write_csv(args, "fig1.csv",
                                  ["n"] + [f"z={z}" for z in zs], rows))
    elif which == "fig2":
        n_max = args.nmax or 14
        header = ["n"]
        cols = []
        for eps in FIG2_CHANNELS["bsc"]:
            W = channels.make_bsc(eps)
            stats = construction.ChannelLevelStats(W, n_max, M=args.quant)
            cols.append([stats.fraction_z_below(n, 0.9)
                         - stats.fraction_z_below(n, 0.1 - 1e-15)
                         for n in range(1, n_max + 1)])
            header.append(f"bsc={eps}")
        for sig in FIG2_CHANNELS["bawgn"]:
            W = channels.make_bawgn(sig, args.quant)
            stats = construction.ChannelLevelStats(W, n_max, M=args.quant)
            cols.append([stats.fraction_z_below(n, 0.9)
                         - stats.fraction_z_below(n, 0.1 - 1e-15)
                         for n in range(1, n_max + 1)])
            header.append(f"bawgn={sig}")
        rows = [[n] + [math.log2(c[n - 1]) / n if c[n - 1] > 0 else float("nan")
                       for c in cols]
                for n in range(1, n_max + 1)]
        written.append(_write_csv(args, "fig2.csv", header, rows))
    elif which == "fig3":
        prof = bec.iterate_q(args.grid or 100_001, 1e-10)
        step = max(1, len(prof.z) // 2000)
        written.append(_write_csv(args, "fig3.csv", ["z", "q"],
                                  zip(prof.z[::step], prof.q[::step])))
    elif which == "fig5":
        prof = bec.iterate_q(args.grid or 100_001, 1e-10)
        zs = np.linspace(0.02, 0.98, 49)
        header = ["z", "c_q"]
        fit = bec.fit_c_ab(prof, 0.1, 0.9, n=20, z_samples=zs)
        cols = {n: [] for n in (0, 5, 10, 20)}
        for n in cols:
            for z in zs:
                p = bec.prob_in_interval(z, 0.1, 0.9, n)
                cols[n].append(2.0 ** (n * prof.inv_mu) * p)
            header.append(f"n={n}")
        qi = np.interp(zs, prof.z, prof.q)
        rows = [[z, fit.c * q] + [cols[n][i] for n in (0, 5, 10, 20)]
                for i, (z, q) in enumerate(zip(zs, qi))]
        written.append(_write_csv(args, "fig5.csv", header, rows))
    else:
        raise ValueError(f"unknown figure {which!r}")
    return _emit(args, "figures", {"which": which}, {"files": written},
                 time.time() - t0)


# -- parser --------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(
        prog="polarscale",
        description="Finite-length scaling analysis for polar codes")
    p.add_argument("--seed", type=int, default=0, help="global RNG seed")
    p.add_argument("--threads", type=int, default=1,
                   help="accepted for interface stability; results are "
                        "single-threaded and thread-count independent")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--json", dest="json_path", default=None,
                   help="write the JSON result to this file")
    p.add_argument("--csv", dest="csv_path", default=None,
                   help="write CSV artifacts to this file")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("eig", help="subdominant spectrum of the grid operator")
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--k", type=int, default=3)
    s.set_defaults(fn=cmd_eig)

    s = sub.add_parser("pn", help="Pr(Z_n in [a,b]) for the BEC")
    s.add_argument("--z", type=float, required=True)
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--b", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(fn=cmd_pn)

    s = sub.add_parser("qfit", help="scaling-exponent fixed point")
    s.add_argument("--grid", type=int, default=1_000_001)
    s.add_argument("--tol", type=float, default=1e-10)
    s.set_defaults(fn=cmd_qfit)

    s = sub.add_parser("am", help="certified a_m enclosure")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--prec", default="1e-5")
    s.set_defaults(fn=cmd_am)

    s = sub.add_parser("concave", help="concavity certificate for f_m")
    s.add_argument("--m", type=int, required=True)
    s.set_defaults(fn=cmd_concave)

    s = sub.add_parser("mu-lower", help="certified mu_m lower-bound exponent")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--prec", default="1e-5")
    s.add_argument("--unchecked", action="store_true",
                   help="skip the suitability requirement")
    s.set_defaults(fn=cmd_mu_lower)

    s = sub.add_parser("bm", help="certified b_m enclosure")
    s.add_argument("--g", required=True, help="e.g. pow:2/3")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--prec", type=float, default=1e-4)
    s.set_defaults(fn=cmd_bm)

    s = sub.add_parser("lg", help="certified operator bound L_g")
    s.add_argument("--g", required=True,
                   help="e.g. poly:0.4,0.25,0.95;d=3/4")
    s.add_argument("--prec", type=float, default=2e-4)
    s.add_argument("--reference", type=float, default=None,
                   help="flag if this value falls outside the enclosure")
    s.set_defaults(fn=cmd_lg)

    s = sub.add_parser("threshold", help="threshold-point sample and KS test")
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--depth", type=int, default=60)
    s.set_defaults(fn=cmd_threshold)

    s = sub.add_parser("loglen", help="Monte Carlo interval-length exponent")
    s.add_argument("--n", type=int, default=50)
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--a", type=float, default=0.01)
    s.add_argument("--b", type=float, default=0.99)
    s.set_defaults(fn=cmd_loglen)

    s = sub.add_parser("intdecay", help="integral decay of the unpolarized mass")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--a", type=float, default=0.1)
    s.add_argument("--b", type=float, default=0.9)
    s.add_argument("--samples", type=int, default=None)
    s.set_defaults(fn=cmd_intdecay)

    s = sub.add_parser("construct", help="subchannel records and good indices")
    s.add_argument("--channel", required=True, help="bec:0.5 | bsc:0.11 | bawgn:0.978")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--rate", type=float, required=True)
    s.add_argument("--quant", type=int, default=512)
    s.add_argument("--key", choices=["e", "z", "h"], default="e")
    s.set_defaults(fn=cmd_construct)

    s = sub.add_parser("scalingfit", help="desk-scale blocklength scaling fit")
    s.add_argument("--channel", required=True)
    s.add_argument("--pe", type=float, required=True)
    s.add_argument("--gmin", type=float, default=0.02)
    s.add_argument("--gmax", type=float, default=0.2)
    s.add_argument("--points", type=int, default=12)
    s.add_argument("--nmax", type=int, default=22)
    s.add_argument("--quant", type=int, default=512)
    s.add_argument("--condition", choices=["sum", "max"], default="max")
    s.set_defaults(fn=cmd_scalingfit)

    s = sub.add_parser("thm3", help="lower-bound rate cap and error floor")
    s.add_argument("--channel", required=True)
    s.add_argument("--m", type=int, default=10)
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(fn=cmd_thm3)

    s = sub.add_parser("thm4", help="upper-bound blocklength recipe")
    s.add_argument("--channel", required=True)
    s.add_argument("--rate", type=float, required=True)
    s.add_argument("--pe", type=float, required=True)
    s.add_argument("--rho", type=float, default=0.202)
    s.add_argument("--alpha", type=float, default=0.75)
    s.add_argument("--beta", type=float, default=1.0)
    s.set_defaults(fn=cmd_thm4)

    s = sub.add_parser("auxcheck", help="auxiliary inequality checks")
    s.add_argument("--channel", required=True)
    s.add_argument("--nmax", type=int, default=15)
    s.set_defaults(fn=cmd_auxcheck)

    s = sub.add_parser("figures", help="CSV curve bundles")
    s.add_argument("which", choices=["fig1", "fig2", "fig3", "fig5"])
    s.add_argument("--nmax", type=int, default=None)
    s.add_argument("--grid", type=int, default=None)
    s.add_argument("--quant", type=int, default=256)
    s.set_defaults(fn=cmd_figures)

    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

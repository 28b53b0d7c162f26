"""Command-line front end: subcommand dispatch, config handling, JSON/CSV
reports, and the acceptance-suite runner.

Reports are deterministic for a fixed (config, master seed): the timestamp
lives in its own field and everything else is a pure function of the inputs.
Every numeric entry carries a provenance marker ("exact", "quadrature", or
"monte-carlo" with a standard error) and the check tag naming what it
verifies.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from fractions import Fraction

import numpy as np

SCHEMA_VERSION = "1"


def num(value, provenance: str, std_error: float | None = None, tag: str | None = None):
    """A report numeric with provenance (and stderr for Monte-Carlo values)."""
    if isinstance(value, complex):
        entry = {"re": value.real, "im": value.imag}
    elif isinstance(value, Fraction):
        entry = {"exact": str(value), "float": float(value)}
    else:
        entry = {"value": float(value)}
    entry["provenance"] = provenance
    if std_error is not None:
        entry["std_error"] = std_error
    if tag is not None:
        entry["check"] = tag
    return entry


def _read_config_file(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise SystemExit(f"config line without '=': {line!r}")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def _apply_config_defaults(args, parser):
    if getattr(args, "config", None):
        overrides = _read_config_file(args.config)
        known = {a.dest for a in parser._actions}
        for key, val in overrides.items():
            if key not in known:
                raise SystemExit(f"unknown config key: {key}")
            if getattr(args, key, None) in (None, parser.get_default(key)):
                setattr(args, key, val)
    return args


def _write_report(args, payload):
    report = {
        "schema": SCHEMA_VERSION,
        "subcommand": payload.pop("_subcommand"),
        "master_seed": args.seed,
        "threads": args.threads,
        "config": payload.pop("_config"),
        "results": payload,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    text = json.dumps(report, indent=2, sort_keys=True, default=str)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return report


def _write_csv(path, rows, header):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _parse_ints(text):
    return tuple(int(v) for v in str(text).split(","))


def _parse_weyl(text, n):
    from .groups import corner_weyl, identity_weyl, long_weyl, weyl_from_composition

    text = str(text).strip()
    if text in ("1", "identity", "id"):
        return identity_weyl(n)
    if text == "long":
        return long_weyl(n)
    if text == "corner":
        return corner_weyl(n)
    comp = _parse_ints(text)
    if sum(comp) != n:
        raise SystemExit(f"composition {comp} does not sum to n={n}")
    return weyl_from_composition(comp)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_kloosterman(args):
    from .kloosterman import kloosterman_sum, trivial_bound_margin

    n = args.n
    w = _parse_weyl(args.w, n)
    m = _parse_ints(args.m)
    nv = _parse_ints(args.nv)
    c = _parse_ints(args.c)
    res = kloosterman_sum(w, m, nv, c, height_bound=args.height_bound)
    margin = trivial_bound_margin(res, c)
    return {
        "_subcommand": "kloosterman",
        "_config": {"n": n, "w": list(w.perm), "m": list(m), "nv": list(nv), "c": list(c)},
        "value_re": res.value.real,
        "value_im": res.value.imag,
        "terms": res.term_count,
        "stabilized": res.stabilized,
        "phases": [str(p) for p in res.phases],
        "reason": res.reason,
        "trivial_bound_ratio": num(margin.ratio, "exact", tag="kloosterman-trivial-bound"),
        "trivial_bound_flagged": margin.flagged,
    }, 0


def _cmd_admissible(args):
    from .admissibility import corner_weyl_moduli_family, is_admissible_modulus

    n = args.n
    w = _parse_weyl(args.w, n)
    m = _parse_ints(args.m)
    nv = _parse_ints(args.nv) if args.nv else m
    out = {
        "_subcommand": "admissible",
        "_config": {"n": n, "w": list(w.perm), "m": list(m), "nv": list(nv)},
    }
    if args.c:
        c = _parse_ints(args.c)
        out["w"] = w.composition if w.composition else list(w.perm)
        out["m"] = list(m)
        out["c"] = list(c)
        out["admissible"] = is_admissible_modulus(w, m, nv, c)
    else:
        fam = corner_weyl_moduli_family(m, args.bound, n)
        out["family_bound"] = args.bound
        out["family"] = [list(c) for c in fam]
    return out, 0


def _cmd_feasibility(args):
    from .feasibility import certify_vanishing, predicted_vanishing, threshold_scan

    n = args.n
    if args.scan:
        m_values = [int(v) for v in str(args.m).split(",")]
        X_values = [float(v) for v in str(args.X).split(",")]
        rows = threshold_scan(
            n, m_values, X_values, args.tau,
            restarts=args.restarts, master_seed=args.seed,
        )
        hard = [r for r in rows if r.hard_failure]
        csv_rows = [
            (",".join(map(str, r.w_composition)), r.m_value, ",".join(map(str, r.c)),
             r.X, r.verdict, r.min_residual, r.predicted_vanish)
            for r in rows
        ]
        if args.csv:
            _write_csv(args.csv, csv_rows, ["w", "m", "c", "X", "verdict", "minResidual", "predicted"])
        return {
            "_subcommand": "feasibility-scan",
            "_config": {"n": n, "m": m_values, "X": X_values, "tau": args.tau,
                        "restarts": args.restarts},
            "rows": len(rows),
            "hard_failures": len(hard),
        }, (1 if hard else 0)

    w = _parse_weyl(args.w, n)
    m = (int(args.m),) + (1,) * (n - 2)
    c = _parse_ints(args.c)
    X = float(args.X)
    rep = certify_vanishing(w, m, c, X, args.tau, restarts=args.restarts,
                            master_seed=args.seed)
    return {
        "_subcommand": "feasibility",
        "_config": {"n": n, "w": list(w.perm), "m": list(m), "c": list(c),
                    "X": X, "tau": args.tau, "restarts": args.restarts},
        "verdict": rep.verdict,
        "min_residual": num(rep.min_residual, "monte-carlo", tag="support-residual"),
        "threshold": num(rep.threshold, "exact"),
        "predicted_vanish": predicted_vanishing(w, int(args.m), c, X),
        "exact_checked": rep.exact_checked,
    }, 0


def _cmd_orbital(args):
    from .montecarlo import McConfig
    from .orbital import BoxIndicatorF, corner_orbital_integral

    n = args.n
    F = BoxIndicatorF(n, float(args.X), args.tau)
    mc = McConfig(int(float(args.samples)), args.seed, threads=args.threads)
    res = corner_orbital_integral(F, n, args.m, args.r, args.s, float(args.X),
                                  args.tau, mc)
    return {
        "_subcommand": "orbital",
        "_config": {"n": n, "m": args.m, "r": args.r, "s": args.s, "X": float(args.X),
                    "tau": args.tau, "samples": mc.samples, "seed": mc.seed},
        "value": num(res.estimate.value, "monte-carlo", res.estimate.std_error,
                     tag="corner-orbital"),
        "vanishing_reason": res.vanishing_reason,
        "acceptance_fraction": res.acceptance_fraction,
        "envelope": num(res.envelope, "exact", tag="corner-orbital-envelope"),
        "within_envelope": abs(res.estimate.value) <= res.envelope
        * (1 + 3 * (res.estimate.std_error / abs(res.estimate.value)
                    if res.estimate.value else 0.0)),
    }, 0


def _cmd_geometric(args):
    from .montecarlo import McConfig
    from .orbital import BoxIndicatorF, assemble_geometric_side

    n = args.n
    F = BoxIndicatorF(n, float(args.X), args.tau)
    mc = McConfig(int(float(args.samples)), args.seed, threads=args.threads)
    rep = assemble_geometric_side(F, args.m, float(args.X), args.c_bound, args.tau,
                                  mc, master_seed=args.seed)
    terms = [
        {
            "w": list(t.w_composition),
            "c": list(t.c),
            "kloosterman": {"re": t.kloosterman.real, "im": t.kloosterman.imag},
            "orbital": (num(t.orbital.value, "monte-carlo", t.orbital.std_error)
                        if t.orbital is not None else None),
            "contribution": {"re": t.contribution.real, "im": t.contribution.imag},
            "status": t.status,
            "reason": t.reason,
        }
        for t in rep.terms
    ]
    if args.csv:
        _write_csv(
            args.csv,
            [(",".join(map(str, t.w_composition)), ",".join(map(str, t.c)), t.status,
              t.contribution.real, t.contribution.imag, t.reason or "") for t in rep.terms],
            ["w", "c", "status", "contribution_re", "contribution_im", "reason"],
        )
    included = [t for t in rep.terms if t.status == "included"]
    return {
        "_subcommand": "geometric",
        "_config": {"n": n, "m": args.m, "X": float(args.X), "tau": args.tau,
                    "c_bound": args.c_bound, "samples": mc.samples},
        "terms": terms,
        "included_terms": len(included),
        "total": {"re": rep.total.real, "im": rep.total.imag},
        "bound": num(rep.bound, "exact", tag="geometric-side-envelope"),
        "identity_ratio": num(rep.identity_ratio, "monte-carlo",
                              tag="identity-term-volume-ratio"),
    }, 0


def _cmd_testfn(args):
    from .montecarlo import McConfig
    from .testfn import build_test_function, verify_test_function_properties

    n = args.n
    sweep = [float(v) for v in str(args.X).split(",")]
    mc = McConfig(int(float(args.samples)), args.seed, threads=args.threads)
    rep = verify_test_function_properties(n, sweep, mc, delta=args.delta,
                                          delta_prime=args.delta_prime)
    handle = build_test_function(n, sweep[0], args.delta, args.delta_prime)
    if args.csv:
        _write_csv(
            args.csv,
            list(zip(rep["X"], rep["l1"], rep["sup"], rep["central"])),
            ["X", "l1", "sup", "central"],
        )
    return {
        "_subcommand": "testfn",
        "_config": {"n": n, "X": sweep, "delta": args.delta,
                    "delta_prime": args.delta_prime, "samples": mc.samples,
                    "handle": handle.config_text()},
        "l1": [num(v, "monte-carlo", tag="test-function-l1-mass") for v in rep["l1"]],
        "sup": [num(v, "monte-carlo", tag="test-function-sup-norm") for v in rep["sup"]],
        "central": [num(v, "monte-carlo", tag="test-function-central-average")
                    for v in rep["central"]],
        "sup_exponent": num(rep["sup_exponent"], "monte-carlo",
                            tag="sup-norm-growth-exponent"),
        "sup_exponent_target": rep["sup_exponent_target"],
        "central_exponent": num(rep["central_exponent"], "monte-carlo",
                                tag="central-average-growth-exponent"),
        "central_exponent_cap": rep["central_exponent_cap"],
    }, 0


def _cmd_hecke_check(args):
    from .hecke import (SatakeParams, SyntheticFamily, consecutive_hecke_bound,
                        random_family, random_satake, rankin_count,
                        temperedness_defect)

    n = args.n
    if ".." in str(args.r):
        lo, hi = str(args.r).split("..")
        r_values = range(int(lo), int(hi) + 1)
    else:
        r_values = [int(args.r)]
    rng = np.random.default_rng(args.seed)
    violations = 0
    checked = 0
    if args.families:
        with open(args.families) as fh:
            data = json.load(fh)
        entries = tuple(
            (f"pi{i}", SatakeParams(n, args.p, tuple(complex(z[0], z[1]) for z in mus)))
            for i, mus in enumerate(data)
        )
        fam = SyntheticFamily(entries, X=float(args.X))
    else:
        fam = random_family(n, args.p, args.family_size, float(args.X), rng)
    for _ in range(args.trials):
        sp = random_satake(n, args.p, rng)
        for r in r_values:
            lhs, rhs, holds = consecutive_hecke_bound(sp, r)
            checked += 1
            if not holds:
                violations += 1
    count, bound = rankin_count(fam, args.sigma, float(args.X))
    return {
        "_subcommand": "hecke-check",
        "_config": {"n": n, "p": args.p, "r": str(args.r), "trials": args.trials,
                    "sigma": args.sigma, "X": float(args.X)},
        "checked": checked,
        "violations": violations,
        "rankin_count": count,
        "markov_bound": num(bound, "exact", tag="exceedance-markov-bound"),
        "count_within_bound": count <= bound,
        "family_defects": [temperedness_defect(sp) for _, sp in fam.entries[:20]],
    }, (1 if violations else 0)


def _cmd_acceptance(args):
    from .acceptance import run_suite

    names = None if args.suite in (None, "all") else [s.strip() for s in args.suite.split(",")]
    results = run_suite(names=names, master_seed=args.seed, threads=args.threads)
    payload = {
        "_subcommand": "acceptance",
        "_config": {"suite": args.suite or "all"},
        "criteria": [
            {"name": r.name, "passed": r.passed, "seconds": round(r.seconds, 2),
             "details": r.details}
            for r in results
        ],
        "passed": all(r.passed for r in results),
    }
    return payload, (0 if payload["passed"] else 1)


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="glnkuz",
        description="Exact and Monte-Carlo toolkit for the geometric side of the "
        "GL(n) Kuznetsov formula.",
    )
    parser.add_argument("--config", help="plain-text key=value config file")
    parser.add_argument("--seed", type=int,
                        default=int(os.environ.get("MASTER_SEED", "0")),
                        help="master seed (env MASTER_SEED)")
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("THREADS", "1")),
                        help="thread budget (env THREADS)")
    parser.add_argument("--output", "-o", help="write the JSON report here")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kloosterman", help="exact Kloosterman sum for a cell")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--w", default="long")
    p.add_argument("--m", required=True)
    p.add_argument("--nv", required=True)
    p.add_argument("--c", required=True)
    p.add_argument("--height-bound", type=int, default=None)
    p.set_defaults(func=_cmd_kloosterman)

    p = sub.add_parser("admissible", help="admissibility test / corner family")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--w", default="corner")
    p.add_argument("--m", required=True)
    p.add_argument("--nv", default=None)
    p.add_argument("--c", default=None)
    p.add_argument("--bound", type=int, default=10)
    p.set_defaults(func=_cmd_admissible)

    p = sub.add_parser("feasibility", help="support feasibility certification")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--w", default="corner")
    p.add_argument("--m", required=True, help="index value, or comma list with --scan")
    p.add_argument("--c", default="1,1,1")
    p.add_argument("--X", required=True)
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--restarts", type=int, default=64)
    p.add_argument("--scan", action="store_true")
    p.add_argument("--csv", help="CSV output path for scans")
    p.set_defaults(func=_cmd_feasibility)

    p = sub.add_parser("orbital", help="corner orbital integral by Monte Carlo")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--X", required=True)
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--samples", default="1e6")
    p.set_defaults(func=_cmd_orbital)

    p = sub.add_parser("geometric", help="assemble the geometric side")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--X", required=True)
    p.add_argument("--tau", type=float, default=0.01)
    p.add_argument("--c-bound", type=int, default=4)
    p.add_argument("--samples", default="1e6")
    p.add_argument("--csv", help="CSV output path for the term table")
    p.set_defaults(func=_cmd_geometric)

    p = sub.add_parser("testfn", help="test-function property sweep")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--X", default="8,16,32")
    p.add_argument("--delta", type=float, default=0.3)
    p.add_argument("--delta-prime", type=float, default=0.15)
    p.add_argument("--samples", default="1e5")
    p.add_argument("--csv", help="CSV output path for the sweep table")
    p.set_defaults(func=_cmd_testfn)

    p = sub.add_parser("hecke-check", help="Satake inequality and Markov count checks")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--r", default="5..9")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--X", default="10")
    p.add_argument("--family-size", type=int, default=100)
    p.add_argument("--families", help="JSON file with a list of mu multisets "
                   "(pairs [re, im])")
    p.set_defaults(func=_cmd_hecke_check)

    p = sub.add_parser("acceptance", help="run the acceptance criteria")
    p.add_argument("--suite", default="all",
                   help="'all' or comma list of criterion names/numbers")
    p.set_defaults(func=_cmd_acceptance)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_config_defaults(args, parser)
        payload, status = args.func(args)
    except SystemExit as exc:  # argparse errors exit 2 already
        return int(exc.code) if exc.code is not None else 2
    except (ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _write_report(args, payload)
    return status


if __name__ == "__main__":
    sys.exit(main())

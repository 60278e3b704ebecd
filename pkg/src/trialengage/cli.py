"""Command-line surface: simulate, estimate, diagnose, verify, graph.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 verification
failure. All file outputs are written atomically.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io as tio
from ._kernels import BACKEND
from .diagnostics import (exchangeability_mean_check, interaction_scan,
                          positivity_report)
from .errors import ValidationError
from .estimators import METHODS, bootstrap_ci, estimate, point_estimator
from .glm import DesignSpec
from .graphs import (build_canonical_graphs, d_separated,
                     verify_independence_claims)
from .scm import BUILTIN_SPECS, derive_seed, generate, to_composite, true_estimands
from .verifier import ScenarioSpec, builtin_scenario, run_scenario, summarize

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_VERIFY_FAILED = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def split_outside_braces(text: str, sep: str) -> list[str]:
    """Split on sep at brace depth zero; counterfactual names contain commas."""
    parts, cur, depth = [], [], 0
    for ch in text:
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth < 0:
                raise ValidationError(f"unbalanced braces in {text!r}")
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise ValidationError(f"unbalanced braces in {text!r}")
    parts.append("".join(cur))
    return parts


def parse_query(query: str) -> tuple[str, str, tuple[str, ...]]:
    """Parse 'A,B|Z1,Z2' into (A, B, (Z1, Z2)); the conditioning part is optional."""
    pieces = split_outside_braces(query, "|")
    if len(pieces) > 2:
        raise ValidationError(f"query {query!r} has more than one '|'")
    pair = [p.strip() for p in split_outside_braces(pieces[0], ",")]
    if len(pair) != 2 or not all(pair):
        raise ValidationError(
            f"query {query!r} must name exactly two nodes before '|'")
    given: tuple[str, ...] = ()
    if len(pieces) == 2 and pieces[1].strip():
        given = tuple(p.strip() for p in split_outside_braces(pieces[1], ","))
        if not all(given):
            raise ValidationError(f"query {query!r} has an empty conditioning entry")
    return pair[0], pair[1], given


def _emit(obj: dict, out_path) -> None:
    if out_path:
        tio.write_json(out_path, obj)
    else:
        print(json.dumps(obj, indent=2, sort_keys=True))


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_simulate(ns) -> int:
    if ns.spec:
        spec = tio.read_scm_json(ns.spec)
    else:
        if ns.builtin not in BUILTIN_SPECS:
            raise ValidationError(
                f"unknown builtin spec {ns.builtin!r}; choose from "
                f"{tuple(BUILTIN_SPECS)}")
        spec = BUILTIN_SPECS[ns.builtin]()
    pod = generate(spec, ns.n, ns.seed)
    kwargs = {"control_outcomes": ns.control_outcomes}
    if ns.design == "non-nested":
        kwargs.update(f_trial=ns.f_trial, f_target=ns.f_target,
                      seed=derive_seed(ns.seed, 3))
    data = to_composite(pod, design=ns.design, **kwargs)
    out = Path(ns.out)
    tio.write_composite_csv(out / "composite.csv", data)
    tio.write_pod_csv(out / "potential_outcomes.csv", pod)
    tio.write_json(out / "estimands.json", true_estimands(spec).to_obj())
    print(f"wrote {out / 'composite.csv'} ({data.n} rows), "
          f"{out / 'potential_outcomes.csv'}, {out / 'estimands.json'}")
    return EXIT_OK


def _estimate_args_from_config(config: dict):
    method = str(config["estimator"])
    options = {}
    for key, val in dict(config.get("options", {})).items():
        options[key] = DesignSpec.from_obj(val) if key.endswith("_design") else val
    return method, options, config.get("bootstrap")


def _cmd_estimate(ns) -> int:
    data = tio.parse_composite_csv(ns.data, design=ns.design)
    if ns.config:
        config = tio.read_estimate_config(ns.config)
    else:
        config = {"estimator": ns.estimator}
    method, options, boot = _estimate_args_from_config(config)
    report = estimate(method, data, **options)
    if boot:
        report.ci = bootstrap_ci(
            data, point_estimator(method, **options),
            n_replicates=int(boot.get("n_replicates", 500)),
            level=float(boot.get("level", 0.95)), seed=int(boot["seed"]))
    _emit(report.to_obj(), ns.out)
    return EXIT_OK


def _cmd_diagnose(ns) -> int:
    if not ns.data and not ns.pod:
        raise UsageError("diagnose needs --data and/or --pod")
    report: dict = {}
    rows: list[tuple] = []
    if ns.data:
        data = tio.parse_composite_csv(ns.data, design=ns.design)
        pos = positivity_report(data)
        report["positivity"] = pos.to_obj()
        rows += pos.csv_rows()
    if ns.pod:
        pod = tio.read_pod_csv(ns.pod)
        scan = interaction_scan(pod)
        exch = exchangeability_mean_check(pod)
        report["interaction"] = scan.to_obj()
        report["exchangeability"] = exch.to_obj()
        rows += scan.csv_rows() + exch.csv_rows()
    if ns.out:
        out = Path(ns.out)
        tio.write_json(out / "diagnostics.json", report)
        tio.atomic_write_text(out / "diagnostics.csv", tio.plot_csv_text(rows))
        print(f"wrote {out / 'diagnostics.json'} and {out / 'diagnostics.csv'}")
    else:
        print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_verify(ns) -> int:
    if bool(ns.scenario) == bool(ns.file):
        raise UsageError("verify needs exactly one of --scenario or --file")
    if ns.file:
        scenarios = [ScenarioSpec.from_obj(tio.read_json(ns.file))]
    else:
        overrides = {}
        if ns.n is not None:
            overrides["n"] = ns.n
        if ns.replicates is not None:
            overrides["n_replicates"] = ns.replicates
        if ns.seed is not None:
            overrides["seed"] = ns.seed
        if ns.bootstrap is not None:
            overrides["bootstrap_replicates"] = ns.bootstrap
        names = (["S1", "S2", "S3", "S4", "S5", "S6"]
                 if ns.scenario == "all" else [ns.scenario])
        scenarios = [builtin_scenario(name, **overrides) for name in names]
    reports = [run_scenario(sc) for sc in scenarios]
    summary = summarize(reports)
    print(f"backend: {BACKEND}")
    print(summary.render())
    if ns.out:
        out = Path(ns.out)
        tio.write_json(out / "verification.json",
                       {"summary": summary.to_obj(),
                        "reports": [r.to_obj() for r in reports]})
        for rep in reports:
            tio.atomic_write_text(out / f"replicates_{rep.scenario}.csv",
                                  tio.replicates_csv_text(rep.estimates))
        print(f"wrote reports under {out}/")
    return EXIT_OK if summary.all_passed else EXIT_VERIFY_FAILED


def _cmd_graph(ns) -> int:
    if not ns.query and not ns.claims:
        raise UsageError("graph needs --query and/or --claims")
    base = tio.read_graph_json(ns.file) if ns.file else None
    result: dict = {}
    if ns.claims:
        claims = verify_independence_claims(base)
        result["claims"] = claims.to_obj()
        for r in claims.results:
            mark = "ok" if r.matches else "DIVERGES"
            verdict = "independent" if r.actual else "dependent"
            print(f"{r.figure}: {r.statement}: {verdict} [{mark}]")
    if ns.query:
        if base is not None:
            graph = base
        else:
            figures = build_canonical_graphs()
            key = ns.figure if ns.figure.startswith("figure") else f"figure{ns.figure}"
            if key not in figures:
                raise ValidationError(
                    f"unknown figure {ns.figure!r}; choose 1..4")
            graph = figures[key]
        lhs, rhs, given = parse_query(ns.query)
        sep = d_separated(graph, lhs, rhs, given)
        result["query"] = {"lhs": lhs, "rhs": rhs, "given": list(given),
                           "d_separated": sep}
        cond = f" | {', '.join(given)}" if given else ""
        print(f"{lhs} vs {rhs}{cond}: "
              f"{'d-separated (independent)' if sep else 'd-connected'}")
    if ns.out:
        tio.write_json(ns.out, result)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser assembly


def build_parser() -> _Parser:
    parser = _Parser(prog="trialengage",
                     description="Trial engagement effects: simulation, "
                                 "estimation, diagnostics, and verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw data from a generative spec")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--spec", help="generative spec JSON file")
    src.add_argument("--builtin", help=f"builtin spec: {', '.join(BUILTIN_SPECS)}")
    p.add_argument("--n", type=int, required=True, help="number of units")
    p.add_argument("--seed", type=int, required=True, help="master seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--design", choices=("nested", "non-nested"), default="nested",
                   help="sampling design tag for the composite dataset")
    p.add_argument("--f-trial", type=float, default=1.0,
                   help="trial sampling fraction (non-nested only)")
    p.add_argument("--f-target", type=float, default=1.0,
                   help="target sampling fraction (non-nested only)")
    p.add_argument("--control-outcomes", action="store_true",
                   help="flag untreated target rows and keep their outcomes")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="run an estimator on a composite CSV")
    p.add_argument("--data", required=True, help="composite CSV file")
    p.add_argument("--config", help="config JSON (estimator/options/bootstrap)")
    p.add_argument("--estimator", default="om_all",
                   help=f"estimator when no config given: {', '.join(METHODS)}")
    p.add_argument("--design", choices=("nested", "non-nested"), default="nested",
                   help="design tag to attach to the data")
    p.add_argument("--out", help="report JSON path (default: stdout)")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("diagnose", help="positivity and assumption diagnostics")
    p.add_argument("--data", help="composite CSV for positivity reporting")
    p.add_argument("--pod", help="potential-outcome CSV for interaction and "
                                 "exchangeability checks (simulation output)")
    p.add_argument("--design", choices=("nested", "non-nested"), default="nested")
    p.add_argument("--out", help="output directory for JSON + plot CSV")
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser("verify", help="run verification scenarios")
    p.add_argument("--scenario", help="builtin scenario S1..S6 or 'all'")
    p.add_argument("--file", help="scenario spec JSON")
    p.add_argument("--n", type=int, help="override sample size")
    p.add_argument("--replicates", type=int, help="override replicate count")
    p.add_argument("--seed", type=int, help="override master seed")
    p.add_argument("--bootstrap", type=int,
                   help="bootstrap replicates per replicate (coverage)")
    p.add_argument("--out", help="output directory for reports")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("graph", help="d-separation queries and claim checks")
    p.add_argument("--file", help="graph JSON ({nodes: [...], edges: [...]})")
    p.add_argument("--figure", default="1",
                   help="canonical graph 1..4 when no --file (1 is the DAG, "
                        "2-4 the intervened graphs)")
    p.add_argument("--query", help="independence query 'A,B|Z1,Z2'")
    p.add_argument("--claims", action="store_true",
                   help="evaluate the seven canonical independence claims")
    p.add_argument("--out", help="result JSON path")
    p.set_defaults(func=_cmd_graph)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return ns.func(ns)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()

"""Command-line runner for the verification suites.

Exit codes: 0 all pass, 1 any failure (or indeterminate without
--allow-indeterminate), 2 configuration error.
"""

import argparse
import json
import sys

from . import checks, extension, mesh
from .errors import ConfigError, LoopExtError


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="loopext",
        description="Verification suites for the loop-group extension lab.",
    )
    p.add_argument("--suite", action="append", choices=checks.ALL_SUITES,
                   help="suite to run (repeatable; default: all)")
    p.add_argument("--resolution", default="default",
                   choices=sorted(mesh.RESOLUTION_PRESETS),
                   help="mesh resolution preset")
    p.add_argument("--tolerance", action="append", type=float,
                   help="circle tolerance in turns; repeat to give a "
                        "per-level ladder for convergence runs")
    p.add_argument("--seed", action="append", type=int,
                   help="random seed (repeatable; default: 0)")
    p.add_argument("--samples", type=int, default=4,
                   help="sample count for randomized checks")
    p.add_argument("--levels", type=int, default=3,
                   help="refinement levels for convergence studies")
    p.add_argument("--convergence", action="store_true",
                   help="run the refinement study instead of the plain suite")
    p.add_argument("--report", choices=("json", "md"), default="json")
    p.add_argument("--out", help="write the report to this path")
    p.add_argument("--allow-indeterminate", action="store_true",
                   help="do not fail the run on indeterminate results")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: LOOPEXT_THREADS or cpu count)")
    p.add_argument("--input", help="replay a stored map or element: validate "
                                   "its invariants and report")
    return p


def _replay_input(path: str) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    kind = data.get("kind")
    records = []
    if kind == "ext-element":
        el = extension.element_from_dict(data)
        el.phi.validate()
        boundary = extension.project(el)
        records.append({
            "name": "replay.ext-element",
            "anchor": "bundle-projection",
            "status": "pass",
            "max_error": abs(abs(el.z.u) - 1.0),
            "tolerance": 1e-12,
            "resolution": f"{el.phi.radial}x{el.phi.angular}",
            "wall_time": 0.0,
            "details": {"boundary_samples": boundary.size},
        })
    else:
        obj = mesh.map_from_dict(data)
        if hasattr(obj, "validate"):
            obj.validate()
        dims = (list(obj.grid.shape[:2]) if kind == "disk"
                else [obj.samples.shape[0]])
        records.append({
            "name": f"replay.{kind}",
            "anchor": "plumbing",
            "status": "pass",
            "max_error": 0.0,
            "tolerance": 0.0,
            "resolution": "x".join(str(d) for d in dims),
            "wall_time": 0.0,
            "details": {},
        })
    return {
        "schema_version": checks.SCHEMA_VERSION,
        "mode": "replay",
        "config": {"input": path},
        "records": records,
        "summary": {"total": len(records), "pass": len(records), "fail": 0,
                    "indeterminate": 0, "vacuous": 0},
        "timing": {"total_wall_time": 0.0},
    }


def render_markdown(report: dict) -> str:
    lines = [f"# loopext report ({report['mode']})", ""]
    cfg = report.get("config", {})
    lines.append("config: " + ", ".join(f"{k}={v}" for k, v in sorted(cfg.items())))
    lines.append("")
    lines.append("| check | anchor | status | max error | tolerance |")
    lines.append("|---|---|---|---|---|")
    for r in report["records"]:
        lines.append(
            f"| {r['name']} | {r['anchor']} | {r['status']} "
            f"| {r['max_error']:.3e} | {r['tolerance']:.3e} |"
        )
    s = report["summary"]
    lines.append("")
    lines.append(f"total {s['total']}, pass {s['pass']}, fail {s['fail']}, "
                 f"indeterminate {s['indeterminate']}, vacuous {s['vacuous']}")
    lines.append("")
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.input:
            report = _replay_input(args.input)
        else:
            tolerances = args.tolerance or [1e-3]
            config = checks.SuiteConfig(
                resolution=args.resolution,
                tolerance=tolerances[-1],
                tolerance_ladder=(tuple(tolerances)
                                  if len(tolerances) > 1 else ()),
                seeds=tuple(args.seed) if args.seed else (0,),
                samples=args.samples,
                suites=tuple(args.suite) if args.suite else checks.ALL_SUITES,
                refinement_levels=args.levels,
                allow_indeterminate=args.allow_indeterminate,
                threads=args.threads,
            )
            if args.convergence:
                report = checks.run_convergence(config)
            else:
                report = checks.run_suite(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except LoopExtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.report == "json":
        text = json.dumps(report, sort_keys=True, indent=1)
    else:
        text = render_markdown(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text)
    return checks.exit_code(report, args.allow_indeterminate)


if __name__ == "__main__":
    sys.exit(main())

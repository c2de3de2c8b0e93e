"""Command-line entry points: serve the tool protocol, emit phantom
fixtures, inspect the registry, and run/validate/score/ablate benchmarks."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import bench, evalkit, phantoms
from .orchestrate import (
    ExternalAgentConfig,
    external_agent_adapter,
    read_trajectories,
    write_trajectories,
)
from .server import Server, Toolbox
from .volume import write_nifti

DATA_ROOT_ENV = "CTKIT_DATA_ROOT"


def _split_categories(value: str | None):
    return tuple(v for v in value.split(",") if v) if value else ()


def _data_root(args) -> str:
    root = args.data_root or os.environ.get(DATA_ROOT_ENV)
    if not root:
        sys.exit(f"no data root: pass --data-root or set {DATA_ROOT_ENV}")
    return root


def _add_common(parser, data_root=True):
    if data_root:
        parser.add_argument("--data-root", help=f"directory all file access is confined to (default ${DATA_ROOT_ENV})")
    parser.add_argument("--vocabulary", help="anatomy vocabulary file (default: packaged table)")


def _toolbox(args, disabled=()) -> Toolbox:
    return Toolbox(_data_root(args), getattr(args, "vocabulary", None), disabled)


def _load_cases(path):
    return evalkit.load_task_manifest(Path(path).read_bytes())


def _agent_factory(args, data_root):
    if args.agent == "scripted":
        return evalkit.sop_agent
    config = ExternalAgentConfig(
        endpoint=args.endpoint,
        model=args.model,
        api_key=os.environ.get(args.api_key_env or "", "") or None,
    )

    def factory(case):
        toolbox = Toolbox(data_root, args.vocabulary)
        return external_agent_adapter(config, toolbox)

    return factory


def cmd_serve(args) -> int:
    disabled = _split_categories(args.disable)
    Server(_toolbox(args, disabled)).serve_stdio()
    return 0


def cmd_tools(args) -> int:
    # listing needs no file access; default the root so the flag is optional
    root = args.data_root or os.environ.get(DATA_ROOT_ENV) or "."
    toolbox = Toolbox(root, args.vocabulary, _split_categories(args.disable))
    categories = _split_categories(args.categories) or None
    listing = [t.as_dict() for t in toolbox.list_tools(categories)]
    print(json.dumps(listing, indent=2, sort_keys=True))
    return 0


def cmd_phantom(args) -> int:
    out = Path(args.out)
    if args.kind == "bench":
        manifest = bench.build_demo_bench(out, n_cases=args.cases, seed=args.seed)
        print(manifest)
        return 0
    dims = tuple(int(v) for v in args.dims.split(","))
    if args.kind == "ramp":
        vox = phantoms.ramp_volume(dims)
    elif args.kind == "ball":
        vox = phantoms.constant_volume(dims)
        center = tuple(d // 2 for d in dims)
        vox[phantoms.ball_mask(dims, center, min(dims) // 3)] = 0.0
    else:
        vox, _ = phantoms.labeled_lesion_volume(dims, seed=args.seed)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(write_nifti(vox, datatype=4))
    print(out)
    return 0


def cmd_run(args) -> int:
    root = _data_root(args)
    cases = _load_cases(args.tasks)
    trajectories = evalkit.run_benchmark(
        cases,
        _agent_factory(args, root),
        root,
        budget=args.budget,
        randomize_seed=args.randomize_seed,
        vocabulary=args.vocabulary,
    )
    write_trajectories(args.out, trajectories)
    print(f"wrote {len(trajectories)} trajectories to {args.out}")
    return 0


def cmd_validate(args) -> int:
    root = _data_root(args)
    cases = {c.id: c for c in _load_cases(args.tasks)}
    reports = []
    all_consistent = True
    for traj in read_trajectories(args.traj):
        case = cases.get(traj.case_id)
        if case is None:
            sys.exit(f"trajectory references unknown case {traj.case_id!r}")
        report = evalkit.validate_trajectory(traj, case, root, args.vocabulary)
        reports.append({"case_id": traj.case_id, **report.as_dict()})
        all_consistent = all_consistent and report.consistent
    print(json.dumps(reports, indent=2, sort_keys=True))
    return 0 if all_consistent else 1


def cmd_score(args) -> int:
    cases = _load_cases(args.tasks)
    trajectories = read_trajectories(args.traj)
    accuracy = evalkit.score_accuracy(trajectories, cases)
    stats = evalkit.compute_tool_stats(trajectories)
    print(evalkit.render_report(accuracy, stats))
    if args.json:
        print(json.dumps({"accuracy": accuracy.as_dict(), "stats": stats.as_dict()},
                         sort_keys=True))
    return 0


def cmd_ablate(args) -> int:
    root = _data_root(args)
    cases = _load_cases(args.tasks)
    result, trajectories = evalkit.run_ablation(
        cases,
        evalkit.sop_agent,
        _split_categories(args.disable),
        root,
        budget=args.budget,
        vocabulary=args.vocabulary,
    )
    print(f"disabled: {', '.join(result.disabled) or '(none)'}")
    print(evalkit.render_report(result.accuracy, result.stats))
    if args.json:
        print(json.dumps(result.as_dict(), sort_keys=True))
    if args.out:
        write_trajectories(args.out, trajectories)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the stdio tool server")
    _add_common(p)
    p.add_argument("--disable", help="comma-separated tool categories to remove")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("tools", help="print the tool registry")
    _add_common(p)
    p.add_argument("--categories", help="comma-separated category filter")
    p.add_argument("--disable", help="comma-separated categories to remove")
    p.set_defaults(func=cmd_tools)

    p = sub.add_parser("phantom", help="emit synthetic NIfTI fixtures")
    p.add_argument("--kind", choices=["bench", "ramp", "ball", "lesion"], default="bench")
    p.add_argument("--out", required=True, help="output directory (bench) or file")
    p.add_argument("--cases", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dims", default="24,24,16")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("run", help="run episodes over a task manifest")
    _add_common(p)
    p.add_argument("--tasks", required=True)
    p.add_argument("--agent", choices=["scripted", "external"], default="scripted")
    p.add_argument("--budget", type=int, default=16)
    p.add_argument("--out", required=True)
    p.add_argument("--randomize-seed", type=int, default=None)
    p.add_argument("--endpoint", help="chat completions URL (external agent)")
    p.add_argument("--model", help="model id (external agent)")
    p.add_argument("--api-key-env", help="environment variable holding the API key")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="re-execute trajectories and check consistency")
    _add_common(p)
    p.add_argument("--traj", required=True)
    p.add_argument("--tasks", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("score", help="accuracy and tool-usage report")
    p.add_argument("--traj", required=True)
    p.add_argument("--tasks", required=True)
    p.add_argument("--json", action="store_true", help="also print machine-readable JSON")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("ablate", help="run with tool categories disabled")
    _add_common(p)
    p.add_argument("--disable", required=True, help="comma-separated categories, e.g. global,detail")
    p.add_argument("--tasks", required=True)
    p.add_argument("--budget", type=int, default=16)
    p.add_argument("--out", help="optional trajectory output file")
    p.add_argument("--json", action="store_true", help="also print machine-readable JSON")
    p.set_defaults(func=cmd_ablate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver: ``crowdenergy simulate | analyze | serve``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .domain import DomainError
from .pipeline import AnalyzeParams, run_analyze, run_simulate
from .simulate import SimConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


def _parse_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split(":")
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b, got {text!r}")
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crowdenergy",
        description="Crowdsourced energy-survey simulation, analysis and serving.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic dataset")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", type=Path, required=True)
    sim.add_argument("--preset", choices=["paper-regime"], default="paper-regime")
    sim.add_argument(
        "--config", type=Path, default=None,
        help="JSON file overriding simulator settings by field name",
    )

    ana = sub.add_parser("analyze", help="run the full analysis pipeline")
    ana.add_argument("data_dir", type=Path)
    ana.add_argument("--out", type=Path, required=True)
    ana.add_argument("--seed", type=int, default=0)
    ana.add_argument("--trees", type=int, default=500)
    ana.add_argument("--mtry", type=int, default=None)
    ana.add_argument("--min-node-size", type=int, default=5)
    ana.add_argument("--reps", type=int, default=10)
    ana.add_argument("--delta-range", type=_parse_range, default=(1, 10), metavar="A:B")
    ana.add_argument("--nu-range", type=_parse_range, default=(2, 20), metavar="A:B")
    ana.add_argument("--log-outcome", action="store_true")
    ana.add_argument(
        "--manifest", type=Path, default=None,
        help="rerun with the parameters recorded in a previous manifest.json",
    )

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--store", type=Path, required=True)
    srv.add_argument("--port", type=int, default=8000)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--seed", type=int, default=0)
    srv.add_argument(
        "--meter", type=Path, default=None,
        help="ingest a meter-reading CSV into the store before serving",
    )
    return parser


def _load_sim_config(path: Path | None) -> SimConfig | None:
    if path is None:
        return None
    raw = json.loads(path.read_text())
    fields = {f.name for f in dataclasses.fields(SimConfig)}
    unknown = set(raw) - fields
    if unknown:
        raise DomainError(f"unknown simulator settings: {sorted(unknown)}")
    return dataclasses.replace(SimConfig(), **raw)


def _cmd_simulate(args) -> int:
    config = _load_sim_config(args.config)
    run_simulate(args.out, args.seed, config=config, preset=args.preset)
    return EXIT_OK


def _cmd_analyze(args) -> int:
    if args.manifest is not None:
        manifest = json.loads(args.manifest.read_text())
        params = AnalyzeParams.from_json(manifest["params"])
        data_dir = Path(manifest["data_dir"])
    else:
        params = AnalyzeParams(
            seed=args.seed, trees=args.trees, mtry=args.mtry,
            min_node_size=args.min_node_size, reps=args.reps,
            delta_range=args.delta_range, nu_range=args.nu_range,
            log_outcome=args.log_outcome,
        )
        data_dir = args.data_dir
    result = run_analyze(data_dir, args.out, params)
    print(
        f"users={result.n_users} questions={result.n_questions} "
        f"ks_d={result.ks_d:.4f} p={result.p_value:.3e} k_hat={result.k_hat}"
    )
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app
    from .store import Store

    store = Store(args.store)
    store.ensure_seed_questions()
    if args.meter is not None:
        report = store.ingest_meter_csv(args.meter)
        print(f"meter ingest: {report.stored} stored, {len(report.rejected)} rejected")
    app = create_app(store, master_seed=args.seed)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_INTERNAL
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK

    handlers = {
        "simulate": _cmd_simulate,
        "analyze": _cmd_analyze,
        "serve": _cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except (FileNotFoundError, json.JSONDecodeError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

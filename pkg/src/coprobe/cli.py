"""Command-line entry point: ``coprobe <subcommand> --config run.yaml``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import ConfigError, load_config
from .features import features_to_csv
from .render import export_rendering, render
from .report import FORMATS, emit_report, load_report

log = logging.getLogger("coprobe")


def _abs(p):
    return str(Path(p).resolve()) if p else None


def _load(args):
    overrides = {"seed": args.seed, "endpoint": args.endpoint,
                 "activations_dir": _abs(args.offline_dir), "output_dir": _abs(args.output)}
    cfg = load_config(args.config, overrides)
    if args.offline_dir:
        cfg.provider.kind = "offline"
    return cfg


def _reports_dir(cfg):
    return cfg.output_dir / "reports"


def cmd_features(cfg, args):
    for kind, ds in pipeline.load_all(cfg).items():
        path = cfg.output_dir / "features" / f"{kind.value}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(features_to_csv(ds.truths, kind), encoding="utf-8")
        print(f"{kind.value}: {len(ds.instances)} instances -> {path}")
    return 0


def cmd_render(cfg, args):
    for kind, ds in pipeline.load_all(cfg).items():
        directory = cfg.output_dir / "renderings" / kind.value
        for inst in ds.instances:
            for rep in cfg.representations:
                export_rendering(render(inst, rep), directory)
        print(f"{kind.value}: {len(ds.instances)} x {len(cfg.representations)} -> {directory}")
    return 0


def _finish(report, cfg, args):
    emit_report(report, _reports_dir(cfg), args.formats or _default_formats(cfg))
    for cell in report.failed_cells:
        log.warning("failed cell: %s", cell)
    print(f"{report.experiment}: {len(report.records)} cells, "
          f"{len(report.failed_cells)} failed -> {_reports_dir(cfg)}")
    return 0 if report.ok else 1


def _default_formats(cfg):
    return FORMATS if cfg.plots else tuple(f for f in FORMATS if f != "plots")


def cmd_query(cfg, args):
    return _finish(pipeline.run_direct_querying(cfg), cfg, args)


def cmd_probe(cfg, args):
    direct = _reports_dir(cfg) / "direct.json"
    direct_report = load_report(direct) if direct.exists() else None
    return _finish(pipeline.run_feature_probing(cfg, direct_report=direct_report), cfg, args)


def cmd_select(cfg, args):
    return _finish(pipeline.run_algorithm_selection(cfg), cfg, args)


def cmd_report(cfg, args):
    found = sorted(_reports_dir(cfg).glob("*.json"))
    if not found:
        print(f"no reports under {_reports_dir(cfg)}", file=sys.stderr)
        return 1
    status = 0
    reports = {p.stem: load_report(p) for p in found}
    for name, rep in reports.items():
        if name == "probing" and "direct" in reports and not rep.comparison:
            rep.comparison = [r for r in reports["direct"].records if r["metric"] == "mae"]
        emit_report(rep, _reports_dir(cfg), args.formats or _default_formats(cfg))
        status |= 0 if rep.ok else 1
        print(f"{name}: {len(rep.records)} cells, {len(rep.failed_cells)} failed")
    return status


COMMANDS = {
    "features": (cmd_features, "compute ground-truth feature CSVs"),
    "render": (cmd_render, "export the three textual renderings per instance"),
    "query": (cmd_query, "run direct querying against the configured provider"),
    "probe": (cmd_probe, "train regression probes on pooled activations"),
    "select": (cmd_select, "k-fold algorithm selection from activations and baselines"),
    "report": (cmd_report, "re-emit CSV/pivot/plot files from saved report JSON"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coprobe", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", "-c", required=True, help="run configuration (YAML/JSON)")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--endpoint", help="LLM service base URL (switches provider to http)")
        p.add_argument("--offline-dir", help="precomputed activation directory")
        p.add_argument("--output", help="override output_dir")
        p.add_argument("--formats", nargs="+", choices=FORMATS, help="report formats to write")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    return COMMANDS[args.command][0](cfg, args)


if __name__ == "__main__":
    sys.exit(main())

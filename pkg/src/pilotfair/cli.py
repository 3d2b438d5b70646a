"""Command-line entry point.

Exit status: 0 success, 1 usage error, 2 data or validation error,
3 numerical failure. Every command that writes files also writes
``manifest.json`` next to them.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .dataset import Dataset, SEX_NAMES, balance_classes
from .experiment import (TrialError, figure_data_csv, run_experiment, summary_json,
                         trials_csv)
from .fairness import audit
from .mitigate import CONSTRAINTS, ThresholdPolicy, apply_policy, fit_policy
from .model_select import cv_table_csv, grid_search_cv
from .stats import format_percent
from .survey import parse_responses, score_responses
from .synth import generate
from .tree import DecisionTree, fit

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
_CONSTRAINT_FLAGS = {"dp": ("demographic_parity",), "eo": ("equalized_odds",), "both": CONSTRAINTS}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class _Run:
    """Collects written artifacts and input digests for the manifest."""

    def __init__(self, args, argv, config: RunConfig):
        self.args, self.argv, self.config = args, list(argv), config
        self.out = Path(args.out)
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}

    def read(self, path: str) -> bytes:
        data = Path(path).read_bytes()
        self.inputs[str(path)] = _sha256(data)
        return data

    def write(self, name: str, text: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        data = text.encode("utf-8")
        path = self.out / name
        path.write_bytes(data)
        self.outputs[name] = _sha256(data)
        return path

    def finish(self, seed):
        if not self.outputs:
            return
        manifest = {"tool": "pilotfair", "version": __version__, "command": self.args.command,
                    "argv": self.argv, "seed": seed, "config": self.config.to_dict(),
                    "inputs": self.inputs, "outputs": self.outputs}
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _seed(args, config: RunConfig) -> int:
    return config.experiment.master_seed if args.seed is None else args.seed


def _load_dataset(run: _Run, path: str) -> Dataset:
    return Dataset.from_csv(run.read(path).decode("utf-8"))


def _group_names(data: Dataset) -> np.ndarray:
    return np.array([SEX_NAMES[g] for g in data.groups])


def cmd_ingest(run: _Run, args):
    responses = parse_responses(run.read(args.raw), run.config.instruments)
    data = score_responses(responses, run.config.instruments)
    run.write("dataset.csv", data.to_csv())
    print(f"scored {len(data)} of {len(responses)} participants", file=sys.stderr)


def cmd_synth(run: _Run, args):
    data = generate(run.config.cohort, _seed(args, run.config))
    run.write("dataset.csv", data.to_csv())


def cmd_train(run: _Run, args):
    data = _load_dataset(run, args.dataset)
    seed = _seed(args, run.config)
    exp = run.config.experiment
    if args.no_balance:
        train = data
    else:
        train = balance_classes(data, min(exp.positive_target, int(data.labels.sum())), seed)
    best, table = grid_search_cv(train, run.config.grid, seed)
    run.write("cv_table.csv", cv_table_csv(table))
    run.write("tree.json", fit(train, best).to_json())
    print(f"best parameters: {best}", file=sys.stderr)


def cmd_mitigate(run: _Run, args):
    data = _load_dataset(run, args.dataset)
    model = DecisionTree.from_json(run.read(args.tree).decode("utf-8"))
    scores = model.predict_scores(data.features)
    for c in _CONSTRAINT_FLAGS[args.constraint]:
        policy = fit_policy(c, scores, data.labels, _group_names(data))
        run.write(f"policy_{c}.json", policy.to_json())


def cmd_audit(run: _Run, args):
    data = _load_dataset(run, args.dataset)
    model = DecisionTree.from_json(run.read(args.tree).decode("utf-8"))
    scores = model.predict_scores(data.features)
    if args.policy:
        policy = ThresholdPolicy.from_json(run.read(args.policy).decode("utf-8"))
        pred = apply_policy(policy, scores, _group_names(data), _seed(args, run.config))
    else:
        pred = (scores > 0.5).astype(int)
    report = audit(data.labels, pred, data.groups, SEX_NAMES)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("metric", "group", "value"))
        for metric, group, value in report.flat():
            w.writerow((metric, group, repr(value)))
        run.write("fairness_report.csv", buf.getvalue())
    else:
        run.write("fairness_report.json", report.to_json())


def cmd_experiment(run: _Run, args):
    seed = _seed(args, run.config)
    exp = replace(run.config.experiment, master_seed=seed)
    if args.trials is not None:
        exp = replace(exp, n_trials=args.trials)
    if args.constraint is not None:
        exp = replace(exp, constraint=args.constraint)
    run.config.experiment = exp
    if args.dataset:
        data = _load_dataset(run, args.dataset)
    else:
        data = generate(run.config.cohort, seed)
        run.write("dataset.csv", data.to_csv())
    records, summary = run_experiment(data, exp)
    run.write("trials.csv", trials_csv(records))
    run.write("summary.json", summary_json(summary))
    run.write("figure_data.csv", figure_data_csv(summary))


def render_report(summary: dict) -> str:
    """Plain-text percentages for a summary produced by ``experiment``."""
    lines = [f"trials: {summary.get('n_trials', '?')}"]
    for c in CONSTRAINTS:
        if c not in summary:
            continue
        lines.append("")
        lines.append(c.replace("_", " ") + " mitigation")
        for name, m in sorted(summary[c]["metrics"].items()):
            imp = m.get("percent_improvement")
            imp_text = "n/a" if imp is None else format_percent(imp)
            lines.append(f"  {name:40s} before {format_percent(100 * m['before']):>8s}"
                         f"  after {format_percent(100 * m['after']):>8s}  improvement {imp_text}")
        tt = summary[c].get("t_test")
        if tt:
            lines.append(f"  t({tt['df']}) = {tt['t']:.2f}, p-value = {tt['p_value']:.3g}"
                         f" on {tt['metric']}")
    return "\n".join(lines) + "\n"


def cmd_report(run: _Run, args):
    summary = json.loads(run.read(args.summary).decode("utf-8"))
    if args.format == "json":
        sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(render_report(summary))


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", default="default", help="JSON config file or 'default'")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--format", choices=("json", "csv", "text"), default=None)

    parser = _Parser(prog="pilotfair", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", parents=[common], help="raw survey CSV -> scored dataset CSV")
    p.add_argument("raw")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", parents=[common], help="cohort spec -> synthetic dataset CSV")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", parents=[common], help="grid-search and fit a tree")
    p.add_argument("dataset")
    p.add_argument("--no-balance", action="store_true", help="skip positive subsampling")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("mitigate", parents=[common], help="fit group threshold policies")
    p.add_argument("dataset")
    p.add_argument("--tree", required=True)
    p.add_argument("--constraint", choices=tuple(_CONSTRAINT_FLAGS), default="both")
    p.set_defaults(func=cmd_mitigate)

    p = sub.add_parser("audit", parents=[common], help="fairness report for a tree [+ policy]")
    p.add_argument("dataset")
    p.add_argument("--tree", required=True)
    p.add_argument("--policy")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("experiment", parents=[common], help="repeated before/after trials")
    p.add_argument("dataset", nargs="?")
    p.add_argument("--trials", type=int)
    p.add_argument("--constraint", choices=tuple(_CONSTRAINT_FLAGS))
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", parents=[common], help="summary JSON -> readable text")
    p.add_argument("summary")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    stage = args.command
    try:
        config = load_config(args.config)
        run = _Run(args, argv, config)
        args.func(run, args)
        run.finish(_seed(args, config))
    except TrialError as exc:
        print(f"error [{stage}/{exc.stage}]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC if isinstance(exc.__cause__, ArithmeticError) else EXIT_DATA
    except ArithmeticError as exc:
        print(f"numerical failure [{stage}]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: run scenario files or shipped presets.

Output is deterministic: fixed column orders, arms alphabetical, g
descending, and numbers rendered in fixed 12-digit scientific notation
(complex values as ``re+imi``).  Data goes to standard output (or
``--out``); diagnostics go to standard error.  Exit codes: 0 success,
1 parse/validation diagnostics, 2 runtime errors such as a dark detector.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

from . import interferometer, limits, scenario, weakmeas
from .errors import (
    DarkDetectorError,
    OrthogonalSelectionError,
    ScheduleError,
    UnclassifiedOrderError,
)
from .pointer import initial_state, translation_generator
from .weakmeas import PrePostSelection

PRESETS = {
    "spin-sz": "spin_sz",
    "spin-splus-sminus": "spin_splus_sminus",
    "spin-flipped": "spin_flipped",
    "eigenvalue-zero": "eigenvalue_zero",
    "nested-mzi": "nested_mzi_presence",
    "compare-limits": "compare_limits_demo",
}

#: subcommand -> compatible scenario plans
_PLAN_FOR_COMMAND = {
    "weakvalue": ("weakvalue",),
    "sweep": ("sweep",),
    "trace": ("trace", "presence"),
    "presence": ("presence", "trace"),
    "compare-limits": ("compare_limits",),
}


def sci12(x: float) -> str:
    """Fixed 12-digit scientific notation with a bare exponent (1.5e-3 style)."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        x = 0.0  # normalize -0.0
    mantissa, _, exponent = f"{x:.12e}".partition("e")
    return f"{mantissa}e{int(exponent)}"


def fmt_complex(z: complex) -> str:
    z = complex(z)
    imag = z.imag + 0.0
    sign = "-" if imag < 0 else "+"
    return f"{sci12(z.real)}{sign}{sci12(abs(imag))}i"


def _emit_csv(header: list[str], rows: list[list[str]]) -> str:
    lines = [",".join(header)]
    lines += [",".join(row) for row in rows]
    return "\n".join(lines) + "\n"


def _emit_json(header: list[str], rows: list[list[str]]) -> str:
    return json.dumps([dict(zip(header, row)) for row in rows], indent=2) + "\n"


def _override_schedule(args, fallback: Sequence[float] | None) -> tuple[float, ...]:
    if args.g_min is not None or args.g_max is not None or args.points is not None:
        g_max = args.g_max if args.g_max is not None else 1e-2
        g_min = args.g_min if args.g_min is not None else 1e-4
        points = args.points if args.points is not None else 9
        return limits.default_g_decade(g_max, g_min, points)
    if fallback is not None:
        return tuple(fallback)
    return limits.default_g_decade()


def _selection(doc) -> PrePostSelection:
    pre, post = doc.selection
    return PrePostSelection(doc.states[pre], doc.states[post])


def _run_weakvalue(doc, args):
    sel = _selection(doc)
    no_flags = args.g_min is None and args.g_max is None and args.points is None
    if no_flags and doc.experiment.g_schedule is None:
        schedule = weakmeas.default_g_schedule(doc.pointer)
    else:
        schedule = _override_schedule(args, doc.experiment.g_schedule)
    header = ["observable", "analytic", "numeric", "deviation", "residual"]
    rows = []
    for name in sorted(doc.experiment.observables):
        op = doc.operators[name]
        analytic = weakmeas.weak_value(sel, op)
        estimate = weakmeas.estimate_weak_value(sel, op, doc.pointer, schedule)
        rows.append(
            [
                name,
                fmt_complex(analytic),
                fmt_complex(estimate.value),
                sci12(abs(estimate.value - analytic)),
                sci12(estimate.extrapolation_residual),
            ]
        )
    return header, rows


_METRFN = {
    "continuity": limits.continuity_metric,
    "derail": limits.derail_metric,
    "first_order_residual": limits.first_order_residual,
    "overlap_deficit": limits.overlap_deficit,
}


def _run_sweep(doc, args):
    sel = _selection(doc)
    op = doc.operators[doc.experiment.observables[0]]
    metric_fn = _METRFN[doc.experiment.metric]
    ready = initial_state(doc.pointer)
    generator = translation_generator(doc.pointer)
    schedule = _override_schedule(args, doc.experiment.g_schedule)
    result = limits.sweep_metric(
        lambda g: metric_fn(sel.pre, ready, op, generator, g), schedule
    )
    header = ["g", "metric", "fitted_order", "fitted_coefficient", "fit_residual"]
    order = sci12(result.fitted_order) if math.isfinite(result.fitted_order) else "inf"
    rows = [
        [sci12(g), sci12(v), order, sci12(result.fitted_coefficient), sci12(result.fit_residual)]
        for g, v in zip(result.g_values, result.metric_values)
    ]
    return header, rows


def _network_arms(doc) -> list[str]:
    arms = doc.experiment.arms or doc.network.arm_labels
    return sorted(arms)


def _run_trace(doc, args):
    schedule = _override_schedule(args, doc.experiment.g_schedule)
    header = ["arm", "g", "trace"]
    rows = []
    for arm in _network_arms(doc):
        values = interferometer.weak_trace_sweep(doc.network, arm, doc.pointer, schedule)
        rows += [[arm, sci12(g), sci12(v)] for g, v in zip(schedule, values)]
    return header, rows


def _run_presence(doc, args):
    schedule = _override_schedule(args, doc.experiment.g_schedule)
    report = interferometer.classify_presence(
        doc.network, _network_arms(doc), doc.pointer, schedule
    )
    header = ["arm", "leading_order", "classification"]
    rows = []
    for arm, presence in report.entries:
        order = (
            sci12(presence.leading_order)
            if math.isfinite(presence.leading_order)
            else "inf"
        )
        rows.append([arm, order, presence.classification])
    return header, rows


def _run_compare_limits(doc, args):
    sel = _selection(doc)
    op = doc.operators[doc.experiment.observables[0]]
    plan = doc.experiment
    kwargs = {}
    if plan.spread_schedule is not None:
        kwargs["spread_schedule"] = plan.spread_schedule
    if plan.fixed_spread is not None:
        kwargs["fixed_spread"] = plan.fixed_spread
    if plan.fixed_g is not None:
        kwargs["fixed_coupling"] = plan.fixed_g
    g_schedule = plan.g_schedule
    if args.g_min is not None or args.g_max is not None or args.points is not None:
        g_schedule = _override_schedule(args, g_schedule)
    comparison = limits.compare_limits(sel, op, g_schedule=g_schedule, **kwargs)
    header = ["branch", "parameter", "estimate", "deviation", "analytic"]
    rows = []
    analytic = fmt_complex(comparison.analytic)
    for point in comparison.coupling_branch:
        rows.append(
            ["g_to_zero", sci12(point.parameter), fmt_complex(point.estimate),
             sci12(point.deviation), analytic]
        )
    for point in sorted(comparison.spread_branch, key=lambda p: -p.parameter):
        rows.append(
            ["spread_to_infinity", sci12(point.parameter), fmt_complex(point.estimate),
             sci12(point.deviation), analytic]
        )
    return header, rows


_RUNNERS = {
    "weakvalue": _run_weakvalue,
    "sweep": _run_sweep,
    "trace": _run_trace,
    "presence": _run_presence,
    "compare-limits": _run_compare_limits,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsvflab",
        description="Weak-value laboratory: run scenario files or shipped presets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("weakvalue", "analytic and numeric weak values"),
        ("sweep", "metric vs g table with its fitted order"),
        ("trace", "per-arm weak traces"),
        ("presence", "primary/secondary presence classification"),
        ("compare-limits", "g -> 0 vs spread -> infinity trajectories"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("file", nargs="?", help="scenario (.scn) file")
        cmd.add_argument(
            "--preset", choices=sorted(PRESETS), help="run a shipped scenario instead"
        )
        cmd.add_argument("--format", choices=("csv", "json"), default="csv")
        cmd.add_argument("--g-min", type=float, default=None)
        cmd.add_argument("--g-max", type=float, default=None)
        cmd.add_argument("--points", type=int, default=None)
        cmd.add_argument("--out", default=None, help="write output here instead of stdout")
    return parser


def _load_document(args) -> tuple:
    """Returns (doc, source_name) or raises SystemExit-style int via ValueError."""
    if args.preset is not None:
        text = scenario.load_corpus_text(PRESETS[args.preset])
        source = args.preset
    elif args.file is not None:
        source = args.file
        try:
            text = Path(args.file).read_text(encoding="utf-8")
        except OSError as err:
            return None, [f"{source}: {err}"]
    else:
        return None, ["provide a scenario file or --preset"]
    parsed = scenario.parse(text)
    messages = [f"{source}:{d}" for d in parsed.diagnostics]
    if not parsed.ok:
        return None, messages
    checked = scenario.validate_semantics(parsed.doc)
    messages += [f"{source}:{d}" for d in checked.diagnostics]
    if not checked.ok:
        return None, messages
    return (checked.doc, messages), None


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    loaded, failure = _load_document(args)
    if loaded is None:
        for message in failure:
            print(message, file=sys.stderr)
        return 1
    doc, warnings = loaded
    for message in warnings:
        print(message, file=sys.stderr)

    if doc.experiment.kind not in _PLAN_FOR_COMMAND[args.command]:
        print(
            f"scenario plan {doc.experiment.kind!r} does not fit subcommand "
            f"{args.command!r}",
            file=sys.stderr,
        )
        return 1

    try:
        header, rows = _RUNNERS[args.command](doc, args)
    except (DarkDetectorError, UnclassifiedOrderError, OrthogonalSelectionError,
            ScheduleError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    text = _emit_csv(header, rows) if args.format == "csv" else _emit_json(header, rows)
    if args.out is not None:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())

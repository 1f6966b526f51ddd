"""Scenario ingestion, run orchestration, and result emission.

Scenario files are INI-style text with sections map/dither/controller/
trigger/init/sim.  Frequency multipliers are written as exact "p/q" tokens
and never pass through floating point.  All numeric output is printed with
17 significant digits so doubles round-trip losslessly.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from dataclasses import replace
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .control import ControllerGains, ControlScheme
from .plant import QuadraticMap
from .report import Report, build_report
from .signals import DitherDesign
from .sim import RunResult, Scenario, run, run_comparison
from .trigger import EventLog, TriggerConfig

__all__ = [
    "ScenarioError",
    "parse_scenario",
    "parse_scenario_text",
    "emit_scenario",
    "bundled_scenario_names",
    "load_bundled_scenario",
    "resolve_scenario",
    "write_trajectory_csv",
    "write_events_csv",
    "write_report",
    "emit_plot_script",
    "main",
]

BUNDLED = ("paper_sec6_newton", "paper_sec6_gradient", "scalar_smoke")


class ScenarioError(ValueError):
    """A scenario file failed validation; the message names the field."""


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _parse_vector(text: str) -> np.ndarray:
    toks = text.replace(",", " ").split()
    if not toks:
        raise ValueError("expected at least one number")
    return np.array([float(t) for t in toks])


def _parse_matrix(text: str) -> np.ndarray:
    rows = [r for r in text.split(";") if r.strip()]
    return np.array([_parse_vector(r) for r in rows])


def _parse_fractions(text: str) -> tuple[Fraction, ...]:
    toks = text.replace(",", " ").split()
    return tuple(Fraction(t.strip("\"'")) for t in toks)


def _field(section, key: str, parser, default=None, required: bool = False):
    name = f"{section.name}.{key}"
    if key not in section:
        if required:
            raise ScenarioError(f"{name}: missing required field")
        return default
    try:
        return parser(section[key])
    except ScenarioError:
        raise
    except Exception as exc:
        raise ScenarioError(f"{name}: {exc}") from exc


def parse_scenario_text(text: str, label: str = "scenario") -> Scenario:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(str(exc)) from exc

    for required in ("map", "dither", "controller", "init"):
        if required not in cp:
            raise ScenarioError(f"missing required section [{required}]")

    sec = cp["map"]
    try:
        plant = QuadraticMap(
            q_star=_field(sec, "q_star", float, required=True),
            h_star=_field(sec, "h_star", _parse_matrix, required=True),
            theta_star=_field(sec, "theta_star", _parse_vector, required=True),
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"map: {exc}") from exc

    sec = cp["dither"]
    try:
        design = DitherDesign(
            amplitudes=tuple(_field(sec, "amplitudes", _parse_vector, required=True)),
            multipliers=_field(sec, "multipliers", _parse_fractions, required=True),
            base_omega=_field(sec, "omega", float, default=1.0),
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"dither: {exc}") from exc

    sec = cp["controller"]
    scheme_text = _field(sec, "scheme", str.strip, required=True)
    try:
        scheme = ControlScheme(scheme_text)
    except ValueError:
        valid = ", ".join(s.value for s in ControlScheme)
        raise ScenarioError(f"controller.scheme: unknown scheme {scheme_text!r}; one of {valid}")
    try:
        gains = ControllerGains(
            k_diag=tuple(_field(sec, "k_diag", _parse_vector, required=True)),
            scheme=scheme,
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"controller: {exc}") from exc
    omega_r = _field(sec, "omega_r", float, default=0.05)

    trigger = None
    if "trigger" in cp:
        sec = cp["trigger"]
        try:
            trigger = TriggerConfig(
                sigma=_field(sec, "sigma", float, required=True),
                alpha=_field(sec, "alpha", float, required=True),
            )
        except ScenarioError:
            raise
        except ValueError as exc:
            raise ScenarioError(f"trigger: {exc}") from exc
    elif scheme.is_event_triggered:
        raise ScenarioError("missing [trigger] section for an event-triggered scheme")

    sec = cp["init"]
    theta_hat0 = _field(sec, "theta_hat0", _parse_vector, required=True)
    gamma0 = None
    if scheme.is_newton:
        raw = sec.get("gamma0", "auto").strip()
        if raw == "auto":
            # conservative default: identity over the largest curvature eigenvalue
            gamma0 = np.eye(plant.dim) / float(np.max(np.abs(plant.curvature_eigenvalues)))
        else:
            try:
                g = _parse_matrix(raw)
            except Exception as exc:
                raise ScenarioError(f"init.gamma0: {exc}") from exc
            if g.size == 1:
                gamma0 = float(g.ravel()[0]) * np.eye(plant.dim)
            else:
                gamma0 = g

    step_h = None
    t_end, stride = 100.0, 10
    ceiling, refine = 1e6, False
    if "sim" in cp:
        sec = cp["sim"]
        raw_h = sec.get("h", "auto").strip()
        if raw_h != "auto":
            step_h = _field(sec, "h", float)
        t_end = _field(sec, "t_end", float, default=100.0)
        stride = _field(sec, "stride", int, default=10)
        ceiling = _field(sec, "riccati_ceiling", float, default=1e6)
        refine = _field(sec, "refine_events", lambda s: s.strip().lower() in ("1", "true", "yes", "on"), default=False)
        label = sec.get("label", label).strip()

    scenario = Scenario(
        map=plant,
        design=design,
        gains=gains,
        trigger=trigger,
        theta_hat0=theta_hat0,
        gamma0=gamma0,
        omega_r=omega_r,
        step_h=step_h,
        t_end=t_end,
        stride=stride,
        riccati_ceiling=ceiling,
        refine_events=refine,
        label=label,
    )
    try:
        scenario.validate()
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    return scenario


def parse_scenario(path) -> Scenario:
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"scenario file not found: {path}")
    return parse_scenario_text(path.read_text(), label=path.stem)


def emit_scenario(scenario: Scenario, path) -> None:
    """Write a scenario back out; parsing the result reproduces it exactly."""

    def vec(v) -> str:
        return " ".join(_fmt(x) for x in np.asarray(v).ravel())

    def mat(m) -> str:
        return " ; ".join(" ".join(_fmt(x) for x in row) for row in np.asarray(m))

    lines = [
        "[map]",
        f"q_star = {_fmt(scenario.map.q_star)}",
        f"h_star = {mat(scenario.map.h_star)}",
        f"theta_star = {vec(scenario.map.theta_star)}",
        "",
        "[dither]",
        f"amplitudes = {vec(scenario.design.amplitudes)}",
        "multipliers = " + " ".join(str(m) for m in scenario.design.multipliers),
        f"omega = {_fmt(scenario.design.base_omega)}",
        "",
        "[controller]",
        f"scheme = {scenario.gains.scheme.value}",
        f"k_diag = {vec(scenario.gains.k_diag)}",
        f"omega_r = {_fmt(scenario.omega_r)}",
        "",
    ]
    if scenario.trigger is not None:
        lines += [
            "[trigger]",
            f"sigma = {_fmt(scenario.trigger.sigma)}",
            f"alpha = {_fmt(scenario.trigger.alpha)}",
            "",
        ]
    lines += ["[init]", f"theta_hat0 = {vec(scenario.theta_hat0)}"]
    if scenario.gamma0 is not None:
        lines.append(f"gamma0 = {mat(scenario.gamma0)}")
    lines += [
        "",
        "[sim]",
        f"h = {'auto' if scenario.step_h is None else _fmt(scenario.step_h)}",
        f"t_end = {_fmt(scenario.t_end)}",
        f"stride = {scenario.stride}",
        f"riccati_ceiling = {_fmt(scenario.riccati_ceiling)}",
        f"refine_events = {'true' if scenario.refine_events else 'false'}",
        f"label = {scenario.label}",
        "",
    ]
    Path(path).write_text("\n".join(lines))


def bundled_scenario_names() -> tuple[str, ...]:
    return BUNDLED


def load_bundled_scenario(name: str) -> Scenario:
    text = resources.files("etseek").joinpath(f"scenarios/{name}.cfg").read_text()
    return parse_scenario_text(text, label=name)


def resolve_scenario(spec: str) -> Scenario:
    """Accept either a file path or a bundled scenario name."""
    p = Path(spec)
    if p.exists():
        return parse_scenario(p)
    name = spec.removesuffix(".cfg")
    if name in BUNDLED:
        return load_bundled_scenario(name)
    raise ScenarioError(
        f"{spec!r} is neither an existing file nor a bundled scenario "
        f"(bundled: {', '.join(BUNDLED)})"
    )


# ---------------------------------------------------------------------------
# Output writers


def write_trajectory_csv(traj, path) -> None:
    names = traj.column_names()
    m = traj.as_matrix()
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in m:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def write_events_csv(log: Optional[EventLog], path) -> None:
    with open(path, "w") as fh:
        fh.write("k,t,gap\n")
        if log is None:
            return
        prev = None
        for k, t in enumerate(log.times):
            gap = "" if prev is None else _fmt(t - prev)
            fh.write(f"{k},{_fmt(t)},{gap}\n")
            prev = t


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def write_report(report: Report, out_dir: Path) -> None:
    (out_dir / "report.txt").write_text(report.render_text())
    payload = json.dumps(_jsonable(report.to_dict()), sort_keys=True, indent=2)
    (out_dir / "report.json").write_text(payload + "\n")


PLOT_TEMPLATE = '''"""Five-panel rendering of the emitted CSVs; generated file, data-only glue."""
import csv
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

ENTRIES = {entries!r}
{warning}

def load_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    cols = {{name: [float(r[i]) if r[i] else float("nan") for r in data]
            for i, name in enumerate(header)}}
    return cols

fig, axes = plt.subplots(5, 1, figsize=(8, 16), sharex=True)
ax_theta, ax_u, ax_y, ax_updates, ax_gamma = axes

for e in ENTRIES:
    tr = load_csv(e["trajectory"])
    t = tr["t"]
    n = e["n"]
    for i in range(1, n + 1):
        ax_theta.plot(t, tr[f"theta_{{i}}"], label=f"{{e['label']}} theta_{{i}}", lw=0.8)
        ax_u.step(t, tr[f"u_{{i}}"], where="post", label=f"{{e['label']}} u_{{i}}", lw=0.8)
    ax_y.plot(t, tr["y"], label=e["label"], lw=0.8)
    if e.get("events"):
        ev = load_csv(e["events"])
        counts = list(range(1, len(ev["t"]) + 1))
        ax_updates.step(ev["t"], counts, where="post", label=e["label"])
    if e.get("newton"):
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                ax_gamma.plot(t, tr[f"Gamma_{{i}}{{j}}"], lw=0.8,
                              label=f"{{e['label']}} Gamma_{{i}}{{j}}")

for i, e in enumerate(ENTRIES[:1]):
    for v in e["theta_star"]:
        ax_theta.axhline(v, color="k", ls="--", lw=0.6)
    ax_y.axhline(e["q_star"], color="k", ls="--", lw=0.6)

ax_theta.set_ylabel("map input")
ax_u.set_ylabel("control input")
ax_y.set_ylabel("measurement")
ax_updates.set_ylabel("cumulative updates")
ax_gamma.set_ylabel("inverse-curvature estimate")
ax_gamma.set_xlabel("time [s]")
for ax in axes:
    ax.legend(loc="best", fontsize=6)
fig.tight_layout()
fig.savefig("panels.png", dpi=150)
print("wrote panels.png")
'''


def emit_plot_script(out_dir: Path, entries: list[dict], filename: str = "plot.py") -> Path:
    warning = ""
    if any(e.get("empty") for e in entries):
        warning = "# warning: at least one trajectory is empty; panels may be blank"
    script = PLOT_TEMPLATE.format(entries=entries, warning=warning)
    path = out_dir / filename
    path.write_text(script)
    return path


# ---------------------------------------------------------------------------
# Subcommands


def _apply_overrides(sc: Scenario, args) -> Scenario:
    if getattr(args, "step", None) is not None:
        sc = replace(sc, step_h=args.step)
    if getattr(args, "horizon", None) is not None:
        sc = replace(sc, t_end=args.horizon)
    if getattr(args, "refine_events", False):
        sc = replace(sc, refine_events=True)
    return sc


def _emit_scenario_outputs(sc: Scenario, res: RunResult, out_dir: Path) -> dict:
    sub = out_dir / sc.label
    sub.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(res.trajectory, sub / "trajectory.csv")
    write_events_csv(res.events, sub / "events.csv")
    emit_scenario(sc, sub / "scenario.cfg")  # defaults resolved and echoed
    return {
        "label": sc.label,
        "trajectory": str(sub / "trajectory.csv"),
        "events": str(sub / "events.csv") if res.events is not None else None,
        "n": sc.map.dim,
        "newton": sc.gains.scheme.is_newton,
        "theta_star": [float(x) for x in sc.map.theta_star],
        "q_star": float(sc.map.q_star),
        "empty": res.trajectory.t.size <= 1,
    }


def _run_and_emit(scenarios: list[Scenario], args) -> tuple[Report, list[dict]]:
    results = [run(sc) for sc in scenarios]
    report = build_report(scenarios, results)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = [
        _emit_scenario_outputs(sc, res, out_dir)
        for sc, res in zip(scenarios, results)
    ]
    write_report(report, out_dir)
    if args.plot:
        emit_plot_script(out_dir, entries)
    return report, entries


def cmd_run(args) -> int:
    sc = _apply_overrides(resolve_scenario(args.scenario[0]), args)
    report, _ = _run_and_emit([sc], args)
    sys.stdout.write(report.render_text())
    return 0


def cmd_compare(args) -> int:
    scenarios = [_apply_overrides(resolve_scenario(s), args) for s in args.scenario]
    report, _ = _run_and_emit(scenarios, args)
    sys.stdout.write(report.render_text())
    return 0


_SWEEPABLE = ("omega", "omega_r", "sigma", "alpha", "gamma0", "h", "t_end")


def _with_param(sc: Scenario, name: str, factor: float) -> tuple[Scenario, float]:
    """Scale one scenario parameter by ``factor``; returns the new value."""
    if name == "omega":
        design = DitherDesign(
            amplitudes=sc.design.amplitudes,
            multipliers=sc.design.multipliers,
            base_omega=sc.design.base_omega * factor,
        )
        return replace(sc, design=design), design.base_omega
    if name == "omega_r":
        return replace(sc, omega_r=sc.omega_r * factor), sc.omega_r * factor
    if name == "sigma":
        cfg = TriggerConfig(sigma=sc.trigger.sigma * factor, alpha=sc.trigger.alpha)
        return replace(sc, trigger=cfg), cfg.sigma
    if name == "alpha":
        cfg = TriggerConfig(sigma=sc.trigger.sigma, alpha=sc.trigger.alpha * factor)
        return replace(sc, trigger=cfg), cfg.alpha
    if name == "gamma0":
        return replace(sc, gamma0=sc.gamma0 * factor), factor
    if name == "h":
        h = sc.h * factor
        return replace(sc, step_h=h), h
    if name == "t_end":
        return replace(sc, t_end=sc.t_end * factor), sc.t_end * factor
    raise ScenarioError(f"unknown sweep parameter {name!r}; one of {', '.join(_SWEEPABLE)}")


def cmd_sweep(args) -> int:
    from . import analysis
    from .linalg import symmetric_inverse

    base = _apply_overrides(resolve_scenario(args.scenario[0]), args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(args.points):
        sc, value = _with_param(base, args.param, args.factor**i)
        sc = replace(sc, label=f"{base.label}__{args.param}_{i}")
        res = run(sc)
        row = {
            "point": i,
            args.param: value,
            "update_count": res.summary["update_count"],
            "final_theta_err": res.summary["final_theta_err"],
            "final_y_err": res.summary["final_y_err"],
            "min_inter_event": res.summary["min_inter_event"],
        }
        if sc.gains.scheme == ControlScheme.NEWTON_ET:
            avg_traj, _ = analysis.run_averaged(sc)
            gaps = analysis.averaging_gap(
                res.trajectory, avg_traj, sc.map.theta_star,
                symmetric_inverse(sc.map.h_star),
            )
            row["averaging_gap_theta_hat"] = gaps["theta_hat"]
        rows.append(row)

    headers = list(rows[0].keys())
    with open(out_dir / "sweep.csv", "w") as fh:
        fh.write(",".join(headers) + "\n")
        for row in rows:
            fh.write(
                ",".join(
                    _fmt(row[h]) if isinstance(row[h], float) else str(row[h])
                    for h in headers
                )
                + "\n"
            )
    for row in rows:
        sys.stdout.write(
            " ".join(f"{k}={row[k]:.6g}" if isinstance(row[k], float) else f"{k}={row[k]}" for k in headers)
            + "\n"
        )
    return 0


def cmd_validate(args) -> int:
    status = 0
    for spec in args.scenario:
        try:
            sc = resolve_scenario(spec)
            sys.stdout.write(f"OK {spec}: scheme {sc.gains.scheme.value}, n={sc.map.dim}\n")
        except ScenarioError as exc:
            sys.stdout.write(f"INVALID {spec}: {exc}\n")
            status = 1
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="etseek",
        description="Event-triggered extremum seeking simulator and verifier",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, multi: bool):
        p.add_argument(
            "--scenario",
            action="append",
            required=True,
            help="scenario file path or bundled name "
            f"({', '.join(BUNDLED)}); repeatable" if multi else "scenario file or bundled name",
        )
        p.add_argument("--out", default="etseek-out", help="output directory")
        p.add_argument("--step", type=float, default=None, help="override step size h")
        p.add_argument("--horizon", type=float, default=None, help="override horizon T")
        p.add_argument(
            "--refine-events",
            action="store_true",
            help="bisection refinement of event instants within a step",
        )
        p.add_argument("--plot", action="store_true", help="emit a plot script")

    p_run = sub.add_parser("run", help="run one scenario")
    add_common(p_run, multi=False)
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="run several scenarios side by side")
    add_common(p_cmp, multi=True)
    p_cmp.set_defaults(func=cmd_compare)

    p_sweep = sub.add_parser("sweep", help="geometric sweep of one parameter")
    add_common(p_sweep, multi=False)
    p_sweep.add_argument("--param", required=True, choices=_SWEEPABLE)
    p_sweep.add_argument("--factor", type=float, default=2.0, help="ratio between points")
    p_sweep.add_argument("--points", type=int, default=4)
    p_sweep.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="parse and validate scenarios")
    p_val.add_argument("--scenario", action="append", required=True)
    p_val.set_defaults(func=cmd_validate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())

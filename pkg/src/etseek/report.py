"""Run summaries and the side-by-side comparison report data model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .sim import RunResult, Scenario
from .trigger import zeno_lower_bound

__all__ = ["ScenarioReport", "Report", "build_report"]


@dataclass
class ScenarioReport:
    label: str
    scheme: str
    summary: dict
    event_times: list[float]
    tau_star_ideal: float
    alpha_used: Optional[float]
    alpha_lower_bound: Optional[float]
    lyapunov: Optional[dict]
    envelopes: Optional[dict]
    averaging_gaps: Optional[dict]

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "scheme": self.scheme,
            "summary": self.summary,
            "event_times": self.event_times,
            "tau_star_ideal": self.tau_star_ideal,
            "alpha_used": self.alpha_used,
            "alpha_lower_bound": self.alpha_lower_bound,
            "lyapunov": self.lyapunov,
            "envelopes": self.envelopes,
            "averaging_gaps": self.averaging_gaps,
        }


@dataclass
class Report:
    scenarios: list[ScenarioReport]

    def to_dict(self) -> dict:
        return {
            "scenarios": [s.to_dict() for s in self.scenarios],
            "comparison": self.comparison_rows(),
        }

    def comparison_rows(self) -> list[dict]:
        rows = []
        for s in self.scenarios:
            rows.append(
                {
                    "label": s.label,
                    "scheme": s.scheme,
                    "update_count": s.summary["update_count"],
                    "convergence_time_2a": s.summary["convergence_time_2a"],
                    "final_theta_err": s.summary["final_theta_err"],
                    "final_y_err": s.summary["final_y_err"],
                    "min_inter_event": s.summary["min_inter_event"],
                    "tau_star_ideal": s.tau_star_ideal,
                    "envelopes_pass": (
                        all(v["dominated"] for v in s.envelopes.values())
                        if s.envelopes
                        else None
                    ),
                }
            )
        return rows

    def render_text(self) -> str:
        lines = []
        for s in self.scenarios:
            sm = s.summary
            lines.append(f"== {s.label} ({s.scheme}) ==")
            lines.append(f"  horizon: {sm['t_end']:.6g} s, step {sm['h']:.6g} s")
            lines.append(f"  control updates: {sm['update_count']}")
            lines.append(
                f"  final |y - extremum|: {sm['final_y_err']:.6g}   "
                f"final ||theta - optimizer||: {sm['final_theta_err']:.6g}"
            )
            lines.append(
                f"  convergence time (2a ball): {sm['convergence_time_2a']:.6g} s"
            )
            if not math.isnan(sm["min_inter_event"]):
                lines.append(
                    f"  inter-event: min {sm['min_inter_event']:.6g} s, "
                    f"mean {sm['mean_inter_event']:.6g} s; "
                    f"idealized lower bound tau* = {s.tau_star_ideal:.6g} s "
                    f"(average-system formula, informative only)"
                )
            if s.alpha_lower_bound is not None:
                lines.append(
                    f"  trigger alpha used: {s.alpha_used:.6g}; "
                    f"theory lower bound: {s.alpha_lower_bound:.6g} (not enforced)"
                )
            if s.lyapunov is not None:
                lines.append(
                    f"  Lyapunov residuals: gain eq {s.lyapunov['residual_p1']:.3e}, "
                    f"similarity eq {s.lyapunov['residual_p2']:.3e}"
                )
            if s.envelopes is not None:
                flags = ", ".join(
                    f"{k}:{'pass' if v['dominated'] else 'FAIL'}"
                    for k, v in s.envelopes.items()
                )
                lines.append(f"  envelope dominance: {flags}")
            if s.averaging_gaps is not None:
                lines.append(
                    f"  averaging gap (sup-norm): theta_hat {s.averaging_gaps['theta_hat']:.6g}"
                )
            lines.append("")
        if len(self.scenarios) > 1:
            lines.append("== comparison ==")
            header = f"{'label':<24} {'scheme':<20} {'updates':>8} {'conv(2a)':>10} {'|y-Q*|':>12}"
            lines.append(header)
            for row in self.comparison_rows():
                conv = row["convergence_time_2a"]
                conv_s = f"{conv:.4g}" if not math.isnan(conv) else "n/a"
                lines.append(
                    f"{row['label']:<24} {row['scheme']:<20} "
                    f"{row['update_count']:>8} {conv_s:>10} {row['final_y_err']:>12.6g}"
                )
            lines.append("")
        return "\n".join(lines)


def build_report(scenarios: Sequence[Scenario], results: Sequence[RunResult]) -> Report:
    """Assemble per-scenario verification numbers and the comparison table."""
    from . import analysis
    from .linalg import spectral_norm, symmetric_inverse

    out = []
    for sc, res in zip(scenarios, results):
        tau_star = (
            zeno_lower_bound(sc.gains.k_norm, sc.trigger)
            if sc.trigger is not None
            else math.nan
        )
        alpha_used = sc.trigger.alpha if sc.trigger is not None else None
        alpha_min = None
        lyap = None
        envs = None
        gaps = None
        if sc.gains.scheme.is_newton:
            q = np.eye(sc.map.dim)
            cert1 = analysis.solve_lyapunov(-sc.gains.K, q)
            h = sc.map.h_star
            h_inv = symmetric_inverse(h)
            cert2 = analysis.solve_lyapunov(h @ (-sc.gains.K) @ h_inv, q)
            lyap = {
                "residual_p1": cert1.residual,
                "residual_p2": cert2.residual,
                "p1_spectrum": list(cert1.p_spectrum),
                "p2_spectrum": list(cert2.p_spectrum),
            }
            if sc.trigger is not None:
                alpha_min = analysis.alpha_lower_bound(cert1, sc.gains.K, h)
            if sc.gains.scheme.is_event_triggered:
                params = analysis.envelope_params_for(sc)
                init = analysis.envelope_init_for(sc, res.trajectory)
                params = analysis.calibrate_envelope_constants(
                    sc, res.trajectory, params, init
                )
                envs = analysis.check_envelope_dominance(
                    sc, res.trajectory, params, init
                )
                avg_traj, _ = analysis.run_averaged(sc)
                gaps = analysis.averaging_gap(
                    res.trajectory, avg_traj, sc.map.theta_star, h_inv
                )
        out.append(
            ScenarioReport(
                label=sc.label,
                scheme=sc.gains.scheme.value,
                summary=res.summary,
                event_times=list(res.events.times) if res.events is not None else [],
                tau_star_ideal=tau_star,
                alpha_used=alpha_used,
                alpha_lower_bound=alpha_min,
                lyapunov=lyap,
                envelopes=envs,
                averaging_gaps=gaps,
            )
        )
    return Report(scenarios=out)

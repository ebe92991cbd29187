"""Run reports: a documented JSON shape with self-checking aggregates.

The report body is deterministic (sorted keys, no timestamps), so identical
runs serialize to identical bytes.  Aggregates are recomputed from the
per-step records on load and must match exactly.
"""

from __future__ import annotations

import json
import os

from .fusion import SequenceResult
from .projection import EquivalenceCheck

REPORT_FORMAT = "ttf-report-v1"
SWEEP_FORMAT = "ttf-sweep-v1"


class InvariantError(RuntimeError):
    """A stored report or run result violates one of its invariants."""


def build_report(
    config_echo: dict,
    sequence: SequenceResult,
    checks: list[EquivalenceCheck] | None,
) -> dict:
    """Assemble the report dict for one run.

    ``checks`` may be None when projection verification was skipped; the
    ledger columns are then zero.
    """
    steps = []
    for index, step in enumerate(sequence.steps):
        check = checks[index] if checks else None
        steps.append(
            {
                "t": step.timestep,
                "is_keyframe": step.is_keyframe,
                "pixel_updates": int(step.pixel_mask.sum()),
                "attention_updates": int(step.attention_mask.sum()),
                "fusion_updates": int(step.fusion_mask.sum()),
                "fusion_rate": step.fusion_rate,
                "reused_rows": check.reused_rows if check else 0,
                "saved_multiplications": check.saved_multiplications if check else 0,
                "query_error": check.query_error if check else 0.0,
                "key_error": check.key_error if check else 0.0,
                "value_error": check.value_error if check else 0.0,
            }
        )
    report = {"format": REPORT_FORMAT, "config": dict(config_echo), "steps": steps}
    report["aggregates"] = _aggregates_from_steps(steps)
    return report


def _aggregates_from_steps(steps: list[dict]) -> dict:
    rates = [s["fusion_rate"] for s in steps]
    non_keyframe = [s["fusion_rate"] for s in steps if not s["is_keyframe"]]
    return {
        "steps": len(steps),
        "keyframes": sum(1 for s in steps if s["is_keyframe"]),
        "mean_fusion_rate_all": sum(rates) / len(rates) if rates else 0.0,
        "mean_fusion_rate_non_keyframe": (
            sum(non_keyframe) / len(non_keyframe) if non_keyframe else 0.0
        ),
        "total_saved_multiplications": sum(s["saved_multiplications"] for s in steps),
        "max_reuse_error_query": max((s["query_error"] for s in steps), default=0.0),
        "max_reuse_error_key": max((s["key_error"] for s in steps), default=0.0),
        "max_reuse_error_value": max((s["value_error"] for s in steps), default=0.0),
    }


def serialize_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def write_report(path: str | os.PathLike, report: dict) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(serialize_report(report))


def load_report(path: str | os.PathLike) -> dict:
    """Load a report and re-derive its aggregates; mismatch is an error."""
    with open(path, "r", encoding="ascii") as fh:
        report = json.load(fh)
    if report.get("format") != REPORT_FORMAT:
        raise InvariantError(f"{path}: unknown report format {report.get('format')!r}")
    recomputed = _aggregates_from_steps(report["steps"])
    if recomputed != report.get("aggregates"):
        raise InvariantError(f"{path}: stored aggregates disagree with per-step records")
    return report


def build_sweep_summary(parameter: str, points: list[dict]) -> dict:
    return {"format": SWEEP_FORMAT, "parameter": parameter, "points": points}


def sweep_csv(summary: dict) -> str:
    lines = ["value,mean_fusion_rate_all,mean_fusion_rate_non_keyframe"]
    for point in summary["points"]:
        lines.append(
            f"{point['value']},{point['mean_fusion_rate_all']!r},"
            f"{point['mean_fusion_rate_non_keyframe']!r}"
        )
    return "\n".join(lines) + "\n"

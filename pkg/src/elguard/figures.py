"""Report figures rendered to files with matplotlib (Agg, no display)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.patches as mpatches
import matplotlib.pyplot as plt
import numpy as np

from .decision import PipelineResult
from .lzs import LandingCandidate
from .segcore import DEFAULT_PALETTE
from .sora import RiskAssessment
from .taxonomy import CLASS_NAMES
from .tensors import Rect


def _labels_rgb(labels: np.ndarray, palette=DEFAULT_PALETTE) -> np.ndarray:
    lut = np.asarray(palette, dtype=np.uint8)
    return lut[labels]


def _class_legend(ax, palette=DEFAULT_PALETTE) -> None:
    handles = [
        mpatches.Patch(color=np.asarray(c) / 255.0, label=name)
        for c, name in zip(palette, CLASS_NAMES)
    ]
    ax.legend(handles=handles, loc="center left", bbox_to_anchor=(1.02, 0.5), fontsize=8)


def save_labels_figure(labels: np.ndarray, path: Path, title: str = "class labels") -> None:
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.imshow(_labels_rgb(labels), interpolation="nearest")
    ax.set_title(title)
    ax.set_xlabel("col [px]")
    ax.set_ylabel("row [px]")
    _class_legend(ax)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def save_warning_figure(
    labels: np.ndarray, tile: Rect, warning_mask: np.ndarray, path: Path, decision: str
) -> None:
    """Scene backdrop with the verified tile outlined and unsafe pixels in red."""
    rgb = _labels_rgb(labels).copy()
    sub = rgb[tile.row:tile.row + tile.h, tile.col:tile.col + tile.w]
    sub[warning_mask] = (255, 0, 0)
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.imshow(rgb, interpolation="nearest")
    edge = "lime" if decision == "SAFE" else "red"
    ax.add_patch(
        mpatches.Rectangle(
            (tile.col - 0.5, tile.row - 0.5), tile.w, tile.h,
            fill=False, edgecolor=edge, linewidth=2,
        )
    )
    unsafe = int(warning_mask.sum())
    ax.set_title(f"tile {decision}: {unsafe} unsafe pixel(s)")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def save_candidates_figure(
    labels: np.ndarray, candidates: list[LandingCandidate], path: Path
) -> None:
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.imshow(_labels_rgb(labels), interpolation="nearest")
    for cand in candidates:
        t = cand.tile
        ax.add_patch(
            mpatches.Rectangle(
                (t.col - 0.5, t.row - 0.5), t.w, t.h,
                fill=False, edgecolor="white", linewidth=1.2,
            )
        )
        ax.annotate(
            str(cand.rank), (t.col + t.w / 2, t.row + t.h / 2),
            color="white", ha="center", va="center", fontsize=8,
        )
    ax.set_title(f"{len(candidates)} eligible landing tile(s), ranked by clearance")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def save_decision_figure(labels: np.ndarray, result: PipelineResult, path: Path) -> None:
    """Trial-by-trial verdicts next to the scene with the chosen tile."""
    fig, (ax_img, ax_tr) = plt.subplots(
        1, 2, figsize=(10, 5), gridspec_kw={"width_ratios": [3, 2]}
    )
    ax_img.imshow(_labels_rgb(labels), interpolation="nearest")
    verdict_steps = [s for s in result.trace if s.event == "VERDICT"]
    for step in verdict_steps:
        t = step.candidate.tile
        safe = step.verdict is not None and step.verdict.decision == "SAFE"
        ax_img.add_patch(
            mpatches.Rectangle(
                (t.col - 0.5, t.row - 0.5), t.w, t.h,
                fill=False, edgecolor="lime" if safe else "red", linewidth=2,
            )
        )
    ax_img.set_title(f"outcome: {result.outcome.status}")

    if verdict_steps:
        heights = [s.verdict.unsafe_pixel_count for s in verdict_steps]
        colors = ["tab:green" if s.verdict.decision == "SAFE" else "tab:red" for s in verdict_steps]
        ax_tr.bar(range(1, len(verdict_steps) + 1), heights, color=colors)
        ax_tr.set_xticks(range(1, len(verdict_steps) + 1))
    ax_tr.set_xlabel("trial")
    ax_tr.set_ylabel("unsafe pixels in tile")
    ax_tr.set_title(f"{result.outcome.trials_used} trial(s)")
    fig.tight_layout()
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def save_assessment_figure(assessment: RiskAssessment, path: Path) -> None:
    """Waterfall from intrinsic to final ground-risk class."""
    labels = ["intrinsic"]
    values = [assessment.intrinsic_grc]
    running = assessment.intrinsic_grc
    for step in assessment.mitigation_trace:
        running += step["delta"]
        labels.append(f"{step['kind']}\n({step['robustness']})")
        values.append(running)
    labels.append("final")
    values.append(assessment.final_grc)

    fig, ax = plt.subplots(figsize=(1.6 * len(values) + 2, 4))
    colors = ["tab:blue"] + ["tab:orange"] * (len(values) - 2) + ["tab:green"]
    ax.bar(range(len(values)), values, color=colors)
    for i, v in enumerate(values):
        ax.annotate(str(v), (i, v), ha="center", va="bottom")
    ax.set_xticks(range(len(values)))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("ground-risk class")
    ax.set_ylim(0, 9)
    ax.set_title(
        f"GRC {assessment.intrinsic_grc} -> {assessment.final_grc}, "
        f"ARC-{assessment.arc.value}, SAIL {assessment.sail}"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)

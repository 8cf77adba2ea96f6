"""Figure rendering for the report path; written next to the text output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import PROTOCOL_MAP, EvalReport


def _new_axes(width=6.4, height=3.6):
    fig, ax = plt.subplots(figsize=(width, height))
    ax.grid(True, linewidth=0.3, alpha=0.5)
    return fig, ax


def save_score_chart(report: EvalReport, path: str) -> None:
    """Per-query score bars with the aggregate drawn as a horizontal line."""
    labels = [q for q, _ in report.per_query]
    values = [v for _, v in report.per_query]
    is_map = report.protocol == PROTOCOL_MAP
    fig, ax = _new_axes(width=max(6.4, 0.35 * len(labels)))
    ax.bar(range(len(values)), values, color="#4878a8")
    agg_label = f"mAP = {report.aggregate:.4f}" if is_map else f"ukb = {report.aggregate:.4f}"
    ax.axhline(report.aggregate, color="#c44e52", linewidth=1.2, label=agg_label)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=90, fontsize=7)
    ax.set_ylabel("average precision" if is_map else "relevant in top 4")
    ax.set_ylim(0, 1.05 if is_map else 4.2)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_loss_trace(trace, path: str) -> None:
    """Quantization loss per alternating-minimization iteration."""
    fig, ax = _new_axes()
    ax.plot(range(1, len(trace) + 1), list(trace), marker="o", markersize=3, color="#4878a8")
    ax.set_xlabel("iteration")
    ax.set_ylabel("quantization loss")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)

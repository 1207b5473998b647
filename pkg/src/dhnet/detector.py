"""Evaluation metrics, GOP-wise voting, and video-level detection modes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import extract_all
from .frame_io import load_plane
from .model import DHNet, predict_labels


class UndefinedMetricsError(ValueError):
    """Raised when every confusion count is zero."""


@dataclass
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion_from_predictions(labels, truths) -> ConfusionCounts:
    labels = np.asarray(labels)
    truths = np.asarray(truths)
    return ConfusionCounts(
        tp=int(((labels == 1) & (truths == 1)).sum()),
        tn=int(((labels == 0) & (truths == 0)).sum()),
        fp=int(((labels == 1) & (truths == 0)).sum()),
        fn=int(((labels == 0) & (truths == 1)).sum()),
    )


def compute_metrics(counts: ConfusionCounts) -> dict:
    """ACC / TNR / PRE / REC / F1 as percentages.

    Metrics with a zero denominator are reported as None rather than
    coerced to 0; all-zero counts are an error.
    """
    if counts.total == 0:
        raise UndefinedMetricsError("all confusion counts are zero")

    def ratio(num, den):
        return 100.0 * num / den if den > 0 else None

    acc = ratio(counts.tp + counts.tn, counts.total)
    tnr = ratio(counts.tn, counts.tn + counts.fp)
    pre = ratio(counts.tp, counts.tp + counts.fp)
    rec = ratio(counts.tp, counts.tp + counts.fn)
    if pre is not None and rec is not None and (pre + rec) > 0:
        f1 = 2.0 * pre * rec / (pre + rec)
    else:
        f1 = None
    return {"acc": acc, "tnr": tnr, "pre": pre, "rec": rec, "f1": f1}


@dataclass
class RocCurve:
    """Points (false positive rate, true positive rate) from (0,0) to (1,1)."""

    points: list[tuple[float, float]]
    auc: float


def roc_auc(scores, truths) -> RocCurve:
    """ROC over grouped unique thresholds; AUC by trapezoidal integration."""
    scores = np.asarray(scores, dtype=np.float64)
    truths = np.asarray(truths)
    n_pos = int((truths == 1).sum())
    n_neg = int((truths == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes present")
    order = np.argsort(-scores, kind="stable")
    s_sorted = scores[order]
    t_sorted = truths[order]
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    n = len(scores)
    while i < n:
        j = i
        while j < n and s_sorted[j] == s_sorted[i]:
            j += 1
        tp += int((t_sorted[i:j] == 1).sum())
        fp += int((t_sorted[i:j] == 0).sum())
        points.append((fp / n_neg, tp / n_pos))
        i = j
    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])
    auc = float(np.trapezoid(ys, xs))
    return RocCurve(points=points, auc=auc)


def gop_vote(labels) -> int:
    """Majority vote over per-I-frame labels; exact ties resolve to 1."""
    labels = list(labels)
    if not labels:
        raise ValueError("empty label list")
    ones = sum(1 for l in labels if l == 1)
    return 1 if 2 * ones >= len(labels) else 0


# -- video-level modes -------------------------------------------------------


def _frame_score(model: DHNet, plane, q_m, q_s, alpha) -> float:
    h4, h8, h16, aux = extract_all(plane, q_m, q_s, alpha)
    batch = {
        "h4": h4[None, None],
        "h8": h8[None, None],
        "h16": h16[None, None],
        "aux": aux[None],
    }
    return float(model.predict_scores(batch)[0])


def temporal_scan(frame_paths, model: DHNet, q_m, q_s, alpha=None) -> list[dict]:
    """Score every decoded frame of a video in order.

    Returns one dict per frame: {frame_index, score, label} on success or
    {frame_index, error} when a frame cannot be read; the scan continues
    past bad frames. On aligned-GOP double-compressed videos the scores
    peak at the I-frame positions.
    """
    alpha = model.cfg.alpha if alpha is None else alpha
    results = []
    for idx, path in enumerate(frame_paths):
        try:
            plane = load_plane(path)
            score = _frame_score(model, plane, q_m, q_s, alpha)
        except (OSError, ValueError) as exc:
            results.append({"frame_index": idx, "error": str(exc)})
            continue
        results.append(
            {
                "frame_index": idx,
                "score": score,
                "label": int(predict_labels(np.array([score]))[0]),
            }
        )
    return results


def first_iframe_detect(frame_paths, model: DHNet, q_m, q_s) -> dict:
    """Verdict from frame 0 only.

    The first frame is intra-coded by both passes regardless of GOP
    alignment, so this is the mode of choice when the two GOP sizes differ.
    """
    frame_paths = list(frame_paths)
    if not frame_paths:
        raise ValueError("empty frame list")
    plane = load_plane(frame_paths[0])
    score = _frame_score(model, plane, q_m, q_s, model.cfg.alpha)
    return {
        "frame_index": 0,
        "score": score,
        "label": int(predict_labels(np.array([score]))[0]),
    }

"""Grounding, report-text, label, and phrase-match evaluation.

Tokenization is pinned so text scores reproduce bit-for-bit: input is
lowercased, then split into maximal alphanumeric runs with every other
non-space character emitted as its own token (``"No acute disease."`` ->
``["no", "acute", "disease", "."]``).

Grounding metrics follow the mask/merge protocol: for the mean-IoU score,
predictions are filtered by confidence at each threshold in
``MIOU_THRESHOLDS``, merged into one binary mask per sentence, compared to
the merged ground-truth mask, averaged over sentences and then thresholds.
The detection-style score treats each sentence as its own class, matches
ranked predictions one-to-one to ground truth greedily at each IoU
threshold in ``MAP_THRESHOLDS``, and averages all-point-interpolated
average precision over classes and thresholds.
"""
from __future__ import annotations

import logging
import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .types import BBox, CATEGORY_LABELS

log = logging.getLogger(__name__)

MIOU_THRESHOLDS = (0.1, 0.2, 0.3, 0.4, 0.5)
MAP_THRESHOLDS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7)

LABEL_STATES = ("positive", "negative", "uncertain", "absent")
POSITIVE_ONLY = "positive_only"
MULTICLASS = "multiclass"

_TOKEN_RE = re.compile(r"[a-z0-9]+|[^\sa-z0-9]")


@dataclass(frozen=True)
class GroundingPrediction:
    sentence_id: str
    boxes: tuple[tuple[BBox, float], ...]

    def __post_init__(self) -> None:
        for _, conf in self.boxes:
            if not (0.0 <= conf <= 1.0):
                raise ValueError(f"confidence {conf} outside [0, 1]")


@dataclass(frozen=True)
class LabelRecord:
    report_id: str
    labels: dict[str, str]

    def __post_init__(self) -> None:
        for cat, state in self.labels.items():
            if cat not in CATEGORY_LABELS:
                raise ValueError(f"unknown category {cat!r}")
            if state not in LABEL_STATES:
                raise ValueError(f"unknown label state {state!r}")

    def state(self, category: str) -> str:
        return self.labels.get(category, "absent")


# --- box and mask primitives ----------------------------------------------------

def box_iou(a: BBox, b: BBox) -> float:
    """Intersection over union with pixel-count areas (inclusive corners)."""
    ix0, iy0 = max(a.x_min, b.x_min), max(a.y_min, b.y_min)
    ix1, iy1 = min(a.x_max, b.x_max), min(a.y_max, b.y_max)
    if ix1 < ix0 or iy1 < iy0:
        return 0.0
    inter = (ix1 - ix0 + 1) * (iy1 - iy0 + 1)
    return inter / (a.area + b.area - inter)


def merged_mask(boxes: Sequence[BBox], width: int, height: int) -> np.ndarray:
    """Union of boxes as a boolean (height, width) mask."""
    out = np.zeros((height, width), dtype=bool)
    for b in boxes:
        x0, y0 = max(0, b.x_min), max(0, b.y_min)
        x1, y1 = min(width - 1, b.x_max), min(height - 1, b.y_max)
        if x1 >= x0 and y1 >= y0:
            out[y0 : y1 + 1, x0 : x1 + 1] = True
    return out


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 0.0
    return float(np.logical_and(a, b).sum() / union)


def _canvas(*box_groups: Sequence[BBox]) -> tuple[int, int]:
    """Smallest (width, height) covering all boxes; mask IoU is canvas-free."""
    w = h = 1
    for group in box_groups:
        for b in group:
            w = max(w, b.x_max + 1)
            h = max(h, b.y_max + 1)
    return w, h


def grounding_miou(
    preds: Sequence[GroundingPrediction],
    gts: dict[str, Sequence[BBox]],
    thresholds: Sequence[float] = MIOU_THRESHOLDS,
) -> dict:
    """Confidence-thresholded merged-mask IoU, averaged per the protocol.

    Sentences with no ground-truth boxes are excluded (warned and counted).
    Returns ``{"miou", "per_threshold", "n_sentences", "n_skipped"}``.
    """
    pred_by_id = {p.sentence_id: p for p in preds}
    unknown = sorted(set(pred_by_id) - set(gts))
    if unknown:
        raise ValueError(f"predictions for unknown sentence ids: {unknown}")

    sentence_ids = []
    n_skipped = 0
    for sid in sorted(gts):
        if not gts[sid]:
            log.warning("sentence %s has no ground-truth boxes; excluded", sid)
            n_skipped += 1
            continue
        sentence_ids.append(sid)
    if not sentence_ids:
        raise ValueError("no sentences with ground truth")

    per_threshold = []
    for tau in thresholds:
        ious = []
        for sid in sentence_ids:
            gt_boxes = list(gts[sid])
            pred = pred_by_id.get(sid)
            kept = [b for b, conf in (pred.boxes if pred else ()) if conf >= tau]
            w, h = _canvas(gt_boxes, kept)
            ious.append(
                mask_iou(merged_mask(kept, w, h), merged_mask(gt_boxes, w, h))
            )
        per_threshold.append(float(np.mean(ious)))
    return {
        "miou": float(np.mean(per_threshold)),
        "per_threshold": dict(zip([float(t) for t in thresholds], per_threshold)),
        "n_sentences": len(sentence_ids),
        "n_skipped": n_skipped,
    }


def _average_precision(
    ranked_ious: list[list[float]], n_gt: int, tau: float
) -> float:
    """All-point-interpolated AP for one class at one IoU threshold.

    ``ranked_ious[r]`` holds the IoUs of prediction r (confidence-ranked)
    against each ground-truth box; matching is greedy one-to-one.
    """
    matched = [False] * n_gt
    tp, fp = [], []
    for ious in ranked_ious:
        best, best_g = 0.0, -1
        for g, v in enumerate(ious):
            if not matched[g] and v >= tau and v > best:
                best, best_g = v, g
        if best_g >= 0:
            matched[best_g] = True
            tp.append(1.0)
            fp.append(0.0)
        else:
            tp.append(0.0)
            fp.append(1.0)
    if not tp:
        return 0.0
    tp_c = np.cumsum(tp)
    fp_c = np.cumsum(fp)
    recall = tp_c / n_gt
    precision = tp_c / (tp_c + fp_c)

    mrec = np.concatenate([[0.0], recall, [1.0]])
    mpre = np.concatenate([[0.0], precision, [0.0]])
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    idx = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(((mrec[idx + 1] - mrec[idx]) * mpre[idx + 1]).sum())


def grounding_map(
    preds: Sequence[GroundingPrediction],
    gts: dict[str, Sequence[BBox]],
    thresholds: Sequence[float] = MAP_THRESHOLDS,
) -> dict:
    """Detection-style mean average precision, one class per sentence.

    Returns ``{"map", "per_threshold", "n_classes", "n_skipped"}``.
    Classes with no predictions score 0.
    """
    pred_by_id = {p.sentence_id: p for p in preds}
    unknown = sorted(set(pred_by_id) - set(gts))
    if unknown:
        raise ValueError(f"predictions for unknown sentence ids: {unknown}")

    classes = []
    n_skipped = 0
    for sid in sorted(gts):
        if not gts[sid]:
            log.warning("sentence %s has no ground-truth boxes; excluded", sid)
            n_skipped += 1
            continue
        classes.append(sid)
    if not classes:
        raise ValueError("no sentences with ground truth")

    # Precompute confidence-ranked IoU tables per class.
    tables = {}
    for sid in classes:
        gt_boxes = list(gts[sid])
        pred = pred_by_id.get(sid)
        ranked = sorted(
            pred.boxes if pred else (), key=lambda bc: -bc[1]
        )
        tables[sid] = (
            [[box_iou(b, g) for g in gt_boxes] for b, _ in ranked],
            len(gt_boxes),
        )

    per_threshold = []
    for tau in thresholds:
        aps = [
            _average_precision(tables[sid][0], tables[sid][1], tau)
            for sid in classes
        ]
        per_threshold.append(float(np.mean(aps)))
    return {
        "map": float(np.mean(per_threshold)),
        "per_threshold": dict(zip([float(t) for t in thresholds], per_threshold)),
        "n_classes": len(classes),
        "n_skipped": n_skipped,
    }


# --- text metrics ----------------------------------------------------------------

def tokenize(text: str) -> list[str]:
    """Lowercase; alphanumeric runs are tokens, other marks split off."""
    return _TOKEN_RE.findall(text.lower())


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(
    candidates: Sequence[Sequence[str]],
    references_list: Sequence[Sequence[Sequence[str]]],
    max_n: int = 4,
) -> list[float]:
    """Unsmoothed corpus-level BLEU-1..max_n over tokenized segments.

    Modified (clipped) n-gram precision pooled over the corpus, geometric
    mean over orders 1..n, brevity penalty ``exp(1 - r/c)`` when the
    candidate corpus is shorter than the effective reference length
    (closest reference length per segment, ties to the shorter).
    """
    if len(candidates) != len(references_list):
        raise ValueError("candidates and references must align")
    matches = [0] * max_n
    totals = [0] * max_n
    c_len = 0
    r_len = 0
    for cand, refs in zip(candidates, references_list):
        cand = list(cand)
        refs = [list(r) for r in refs]
        if not refs:
            raise ValueError("each candidate needs at least one reference")
        c_len += len(cand)
        r_len += min((abs(len(r) - len(cand)), len(r)) for r in refs)[1]
        for n in range(1, max_n + 1):
            cand_counts = _ngram_counts(cand, n)
            if not cand_counts:
                continue
            max_ref = Counter()
            for r in refs:
                for gram, cnt in _ngram_counts(r, n).items():
                    if cnt > max_ref[gram]:
                        max_ref[gram] = cnt
            totals[n - 1] += sum(cand_counts.values())
            matches[n - 1] += sum(
                min(cnt, max_ref[gram]) for gram, cnt in cand_counts.items()
            )
    if c_len == 0:
        return [0.0] * max_n
    bp = 1.0 if c_len >= r_len else math.exp(1.0 - r_len / c_len)
    precisions = [
        (matches[i] / totals[i]) if totals[i] > 0 else 0.0 for i in range(max_n)
    ]
    scores = []
    for n in range(1, max_n + 1):
        if any(p == 0.0 for p in precisions[:n]):
            scores.append(0.0)
        else:
            scores.append(
                bp * math.exp(sum(math.log(p) for p in precisions[:n]) / n)
            )
    return scores


def bleu(
    candidate: Sequence[str],
    references: Sequence[Sequence[str]],
    max_n: int = 4,
) -> list[float]:
    """Single-segment BLEU-1..max_n (a corpus of one)."""
    return corpus_bleu([candidate], [references], max_n)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            cur[j] = prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rouge_l(
    candidate: Sequence[str], reference: Sequence[str], beta: float = 1.2
) -> float:
    """Longest-common-subsequence F-measure.

    ``P = LCS/|candidate|``, ``R = LCS/|reference|`` and
    ``F = (1 + beta^2) P R / (R + beta^2 P)`` with the conventional
    recall-leaning beta of 1.2.
    """
    if not candidate or not reference:
        return 0.0
    lcs = _lcs_length(candidate, reference)
    if lcs == 0:
        return 0.0
    p = lcs / len(candidate)
    r = lcs / len(reference)
    return (1 + beta**2) * p * r / (r + beta**2 * p)


def _align_chunks(cand: Sequence[str], ref: Sequence[str]) -> tuple[int, int]:
    """Exact-match unigram alignment; returns (matches, chunks).

    The alignment always reaches the maximum match count (the per-word
    minimum of the two bags).  Chunks are counted by repeatedly extracting
    the longest common contiguous block of still-unmatched positions
    (leftmost-in-candidate, then leftmost-in-reference on ties), which
    keeps the chunk count near-minimal and fully deterministic.
    """
    cand = list(cand)
    ref = list(ref)
    c_used = [False] * len(cand)
    r_used = [False] * len(ref)
    matches = 0
    chunks = 0
    while True:
        best_len, best_i, best_j = 0, -1, -1
        for i in range(len(cand)):
            if c_used[i]:
                continue
            for j in range(len(ref)):
                if r_used[j] or cand[i] != ref[j]:
                    continue
                length = 0
                while (
                    i + length < len(cand)
                    and j + length < len(ref)
                    and not c_used[i + length]
                    and not r_used[j + length]
                    and cand[i + length] == ref[j + length]
                ):
                    length += 1
                if length > best_len:
                    best_len, best_i, best_j = length, i, j
        if best_len == 0:
            return matches, chunks
        for k in range(best_len):
            c_used[best_i + k] = True
            r_used[best_j + k] = True
        matches += best_len
        chunks += 1


def meteor_simplified(candidate: Sequence[str], reference: Sequence[str]) -> float:
    """Exact-match-only unigram metric with a fragmentation penalty.

    ``F_mean = 10 P R / (R + 9 P)`` with P and R the match fraction of the
    candidate and reference; ``penalty = 0.5 (chunks / matches)^3``;
    score = ``F_mean * (1 - penalty)``.  Stemming/synonym stages of the
    full metric are deliberately out of scope ("simplified").
    """
    if not candidate or not reference:
        return 0.0
    matches, chunks = _align_chunks(candidate, reference)
    if matches == 0:
        return 0.0
    p = matches / len(candidate)
    r = matches / len(reference)
    f_mean = 10.0 * p * r / (r + 9.0 * p)
    penalty = 0.5 * (chunks / matches) ** 3
    return f_mean * (1.0 - penalty)


# --- label F1 ----------------------------------------------------------------------

@dataclass(frozen=True)
class LabelF1Report:
    mode: str
    per_category: dict[str, Optional[float]]
    per_class: dict[str, Optional[float]]
    macro: float
    micro: float


def _f1(tp: int, fp: int, fn: int) -> Optional[float]:
    if tp + fp + fn == 0:
        return None
    return 2 * tp / (2 * tp + fp + fn)


def label_f1(
    preds: Sequence[LabelRecord],
    gts: Sequence[LabelRecord],
    mode: str = POSITIVE_ONLY,
) -> LabelF1Report:
    """Category-level F1 between predicted and reference label records.

    ``positive_only``: binary per category, everything but "positive"
    counts as negative; macro averages over categories with any support.
    ``multiclass``: per-class F1 over {positive, negative, uncertain}
    pooled over all (report, category) cells.  Micro aggregates pooled
    TP/FP/FN in both modes (vacuously 1.0 when there is nothing to find).
    Report id sets must match exactly.
    """
    if mode not in (POSITIVE_ONLY, MULTICLASS):
        raise ValueError(f"unknown mode {mode!r}")
    pred_by_id = {r.report_id: r for r in preds}
    gt_by_id = {r.report_id: r for r in gts}
    unmatched = sorted(set(pred_by_id) ^ set(gt_by_id))
    if unmatched:
        raise ValueError(f"report id mismatch: {unmatched}")
    ids = sorted(gt_by_id)

    per_category: dict[str, Optional[float]] = {}
    per_class: dict[str, Optional[float]] = {}

    if mode == POSITIVE_ONLY:
        tot_tp = tot_fp = tot_fn = 0
        for cat in CATEGORY_LABELS:
            tp = fp = fn = 0
            for rid in ids:
                p = pred_by_id[rid].state(cat) == "positive"
                g = gt_by_id[rid].state(cat) == "positive"
                tp += p and g
                fp += p and not g
                fn += g and not p
            per_category[cat] = _f1(tp, fp, fn)
            tot_tp, tot_fp, tot_fn = tot_tp + tp, tot_fp + fp, tot_fn + fn
        defined = [v for v in per_category.values() if v is not None]
        macro = float(np.mean(defined)) if defined else 1.0
        micro = _f1(tot_tp, tot_fp, tot_fn)
        per_class = {"positive": micro}
    else:
        tot_tp = tot_fp = tot_fn = 0
        for cls in ("positive", "negative", "uncertain"):
            tp = fp = fn = 0
            for rid in ids:
                for cat in CATEGORY_LABELS:
                    p = pred_by_id[rid].state(cat) == cls
                    g = gt_by_id[rid].state(cat) == cls
                    tp += p and g
                    fp += p and not g
                    fn += g and not p
            per_class[cls] = _f1(tp, fp, fn)
            tot_tp, tot_fp, tot_fn = tot_tp + tp, tot_fp + fp, tot_fn + fn
        # category breakdown: positive-vs-rest is reported for reference
        for cat in CATEGORY_LABELS:
            tp = fp = fn = 0
            for rid in ids:
                p = pred_by_id[rid].state(cat) == "positive"
                g = gt_by_id[rid].state(cat) == "positive"
                tp += p and g
                fp += p and not g
                fn += g and not p
            per_category[cat] = _f1(tp, fp, fn)
        defined = [v for v in per_class.values() if v is not None]
        macro = float(np.mean(defined)) if defined else 1.0
        micro = _f1(tot_tp, tot_fp, tot_fn)

    return LabelF1Report(
        mode=mode,
        per_category=per_category,
        per_class=per_class,
        macro=macro,
        micro=1.0 if micro is None else micro,
    )


# --- phrase match -----------------------------------------------------------------

_PHRASE_SPLIT_RE = re.compile(r",|;|\band\b")


def split_phrases(text: str) -> list[str]:
    """Lowercased, whitespace-normalized phrases split on , ; and "and"."""
    parts = _PHRASE_SPLIT_RE.split(text.lower())
    out = []
    for part in parts:
        norm = " ".join(part.split())
        if norm:
            out.append(norm)
    return out


def vqa_top1_phrase_match(prediction: str, ground_truth: str) -> bool:
    """True iff any predicted phrase exactly equals any reference phrase."""
    pred = set(split_phrases(prediction))
    truth = set(split_phrases(ground_truth))
    return bool(pred & truth)

"""Event matching with a frame tolerance, the challenge accuracy, and Score.

Accuracy is ``sum(correct_i / total_i) / (TP + 0.5 * (FP + FN))``. A pair
``i`` is a prediction and a ground-truth event of the same kind and ball
whose frames differ by at most ``tol``. Each pair checks two id fields, so
``total_i = 2``. The ball id always agrees because it is part of the
matching key. A pair whose person id also agrees is a TP worth 1. A pair
with the wrong person earns 0.5 and counts as one FP plus one FN.

Under this reading the denominator is always ``(len(pred) + len(gt)) / 2``.
Accuracy therefore grows with the number and quality of matched pairs.
:func:`pair_credit` isolates the interpretation so it can be swapped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .actions import ActionEvent, sort_events
from .assignment import solve_assignment
from .buffers import CostReport
from .errors import DegenerateCost

DEFAULT_TOL = 10
MODES = ("greedy", "optimal")


def pair_credit(pred: ActionEvent, gt: ActionEvent) -> Tuple[int, int]:
    """``(correct, total)`` id fields for a time-and-ball matched pair."""
    return int(pred.ball_id == gt.ball_id) + int(pred.person_id == gt.person_id), 2


@dataclass
class MatchResult:
    tp: int
    fp: int
    fn: int
    pairs: List[Tuple[ActionEvent, ActionEvent]] = field(default_factory=list)
    partial: List[Tuple[ActionEvent, ActionEvent]] = field(default_factory=list)
    per_pair_correct: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def matched(self) -> List[Tuple[ActionEvent, ActionEvent]]:
        return self.pairs + self.partial


def _candidates(pred: Sequence[ActionEvent], gt: Sequence[ActionEvent], tol: int):
    by_key: dict = {}
    for j, g in enumerate(gt):
        by_key.setdefault((g.kind, g.ball_id), []).append(j)
    for i, p in enumerate(pred):
        for j in by_key.get((p.kind, p.ball_id), ()):
            dt = abs(p.frame - gt[j].frame)
            if dt <= tol:
                yield i, j, dt


def _greedy(pred, gt, tol) -> List[Tuple[int, int]]:
    # Nearest-first over all candidate pairs. Raising tol only appends pairs
    # with a larger gap to the end of this order, so earlier choices never
    # change and the match set only grows.
    cands = sorted(
        _candidates(pred, gt, tol),
        key=lambda c: (c[2], pred[c[0]].person_id != gt[c[1]].person_id, c[0], c[1]),
    )
    used_p, used_g, out = set(), set(), []
    for i, j, _ in cands:
        if i in used_p or j in used_g:
            continue
        used_p.add(i)
        used_g.add(j)
        out.append((i, j))
    return out


def _optimal(pred, gt, tol) -> List[Tuple[int, int]]:
    """Maximum total credit matching."""
    cands = list(_candidates(pred, gt, tol))
    if not cands:
        return []
    # every entry finite: unmatched-in-effect pairs cost 0 and are dropped after
    cost = np.zeros((len(pred), len(gt)))
    ok = np.zeros(cost.shape, dtype=bool)
    for i, j, _ in cands:
        correct, total = pair_credit(pred[i], gt[j])
        cost[i, j] = -correct / total
        ok[i, j] = True
    return [(i, j) for i, j in solve_assignment(cost) if ok[i, j]]


def match_events(
    pred: Iterable[ActionEvent], gt: Iterable[ActionEvent], tol: int = DEFAULT_TOL, mode: str = "greedy"
) -> MatchResult:
    if tol < 0:
        raise ValueError("tol must be >= 0")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    pred, gt = sort_events(pred), sort_events(gt)
    links = _greedy(pred, gt, tol) if mode == "greedy" else _optimal(pred, gt, tol)
    res = MatchResult(tp=0, fp=0, fn=0)
    for i, j in sorted(links, key=lambda ij: (gt[ij[1]].sort_key(), ij[0])):
        p, g = pred[i], gt[j]
        res.per_pair_correct.append(pair_credit(p, g))
        if p.person_id == g.person_id:
            res.pairs.append((p, g))
        else:
            res.partial.append((p, g))
    res.tp = len(res.pairs)
    res.fp = len(pred) - res.tp
    res.fn = len(gt) - res.tp
    return res


def accuracy(m: MatchResult) -> float:
    denom = m.tp + 0.5 * (m.fp + m.fn)
    if denom == 0:
        return 1.0
    num = sum(c / t for c, t in m.per_pair_correct)
    assert num <= denom + 1e-12, (num, denom)
    return num / denom


@dataclass(frozen=True)
class Score:
    accuracy: float
    energy_proxy: float
    score: float

    def items(self):
        return [
            ("accuracy", format(self.accuracy, ".6f")),
            ("energy_proxy", format(self.energy_proxy, ".17g")),
            ("score", format(self.score, ".17g")),
        ]


def final_score(acc: float, report, alpha: float = 0.0) -> Score:
    """``report`` is a :class:`CostReport` or an energy proxy value."""
    proxy = report.energy_proxy(alpha) if isinstance(report, CostReport) else float(report)
    if not proxy > 0:
        raise DegenerateCost(f"energy proxy must be positive, got {proxy}")
    return Score(acc, proxy, acc / proxy)


def report_lines(m: MatchResult, tol: int, score: Score | None = None) -> List[str]:
    """Machine-readable ``key=value`` block."""
    lines = [
        f"tol={tol}",
        f"pred={m.tp + m.fp}",
        f"gt={m.tp + m.fn}",
        f"tp={m.tp}",
        f"fp={m.fp}",
        f"fn={m.fn}",
        f"partial={len(m.partial)}",
        f"accuracy={accuracy(m):.6f}",
    ]
    if score is not None:
        lines += [f"{k}={v}" for k, v in score.items()[1:]]
    return lines

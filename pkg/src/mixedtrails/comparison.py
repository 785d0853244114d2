"""Bayes factors, significance labels and per-kappa rankings."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .evidence import EvidenceCurve

# Kass & Raftery thresholds on |2 ln B|; each upper bound is inclusive
KASS_RAFTERY = ((2.0, "barely-worth-mentioning"), (6.0, "positive"), (10.0, "strong"))
DECISIVE = "decisive"
DECISIVE_LOG_GAP = 10.0
TIE_SIGMAS = 3.0


def kass_raftery_label(two_ln_bf: float) -> str:
    x = abs(two_ln_bf)
    for bound, label in KASS_RAFTERY:
        if x <= bound:
            return label
    return DECISIVE


@dataclass(frozen=True)
class ComparisonResult:
    kappa: float
    hypothesis_a: str
    hypothesis_b: str
    log_bayes_factor: float
    two_ln_bf: float
    label: str
    decisive_by_paper_rule: bool
    std_err: Optional[float] = None


def _combined_se(*errs: Optional[float]) -> Optional[float]:
    present = [e for e in errs if e is not None]
    if not present:
        return None
    return math.sqrt(sum(e * e for e in present))


def bayes_factor(curve_a: EvidenceCurve, curve_b: EvidenceCurve, kappa: float) -> ComparisonResult:
    """Compare two hypotheses at one concentration factor (equal prior odds)."""
    try:
        a = curve_a.at(kappa)
        b = curve_b.at(kappa)
    except KeyError as e:
        raise KeyError(e.args[0]) from None
    lbf = a.log_ml - b.log_ml
    return ComparisonResult(
        kappa=kappa,
        hypothesis_a=curve_a.name,
        hypothesis_b=curve_b.name,
        log_bayes_factor=lbf,
        two_ln_bf=2.0 * lbf,
        label=kass_raftery_label(2.0 * lbf),
        decisive_by_paper_rule=abs(lbf) > DECISIVE_LOG_GAP,
        std_err=_combined_se(a.std_err, b.std_err),
    )


@dataclass(frozen=True)
class RankEntry:
    rank: int
    name: str
    log_ml: float
    std_err: Optional[float]
    gap_to_next: Optional[float]
    decisive_over_next: bool
    incomparable_with_next: bool


def rank_hypotheses(curves: Sequence[EvidenceCurve], kappa: float) -> list[RankEntry]:
    """Order hypotheses by evidence at ``kappa``, best first.

    Each entry is flagged against the one ranked just below it: decisive when
    the log gap exceeds 10, incomparable when the gap is within three
    combined standard errors.
    """
    if not curves:
        raise ValueError("no curves to rank")
    pts = [(c.name, c.at(kappa)) for c in curves]
    pts.sort(key=lambda np_: -np_[1].log_ml)
    out = []
    for r, (name, p) in enumerate(pts):
        gap = decisive = incomparable = None
        if r + 1 < len(pts):
            q = pts[r + 1][1]
            gap = p.log_ml - q.log_ml
            se = _combined_se(p.std_err, q.std_err)
            incomparable = se is not None and gap < TIE_SIGMAS * se
            decisive = gap > DECISIVE_LOG_GAP and not incomparable
        out.append(RankEntry(r + 1, name, p.log_ml, p.std_err, gap, bool(decisive), bool(incomparable)))
    return out


def grid_average(curve: EvidenceCurve, kappas: Optional[Sequence[float]] = None) -> float:
    """Log of the mean marginal likelihood over a kappa grid.

    Equivalent to marginalizing kappa under a prior that weights every grid
    value equally; this is a convenience summary and discards curve shape.
    """
    ks = curve.kappas if kappas is None else list(kappas)
    vals = np.array([curve.at(k).log_ml for k in ks])
    return float(logsumexp(vals) - math.log(vals.size))

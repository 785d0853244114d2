"""Marginal likelihood of transition data under an elicited hypothesis.

All quantities are natural logs. Transition probabilities are integrated out
analytically, so the only remaining sum is over group assignments: it
collapses to one term for deterministic hypotheses, is enumerated exactly for
tiny instances and is estimated by direct sampling otherwise.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .core import GroupAssignment, GroupAssignmentProbabilities, Hypothesis, TransitionDataset, validate_hypothesis
from .elicitation import DirichletPriorSet, elicit

DEFAULT_ENUMERATION_CAP = 2**20
DEFAULT_SAMPLES = 50
_CHUNK = 1 << 13

CLOSED_FORM = "closed-form"
ENUMERATION = "enumeration"
SAMPLING = "sampling"


class EnumerationTooLarge(ValueError):
    """Exact enumeration would exceed the configured number of terms."""


@dataclass(frozen=True)
class EvidencePoint:
    kappa: float
    log_ml: float
    std_err: Optional[float] = None
    n_samples: Optional[int] = None
    method: str = CLOSED_FORM


@dataclass(frozen=True)
class EvidenceCurve:
    """Log marginal likelihood of one hypothesis along a kappa grid."""

    name: str
    points: tuple[EvidencePoint, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        ks = [p.kappa for p in self.points]
        if len(set(ks)) != len(ks):
            raise ValueError(f"curve {self.name!r} has duplicate kappa values")

    @property
    def kappas(self) -> list[float]:
        return [p.kappa for p in self.points]

    def at(self, kappa: float) -> EvidencePoint:
        for p in self.points:
            if p.kappa == kappa:
                return p
        raise KeyError(f"kappa {kappa} not in curve {self.name!r}")


def log_multivariate_beta(alpha_row: Mapping[int, float] | Sequence[float], n: Optional[int] = None) -> float:
    """``log B(alpha) = sum_j lgamma(alpha_j) - lgamma(sum_j alpha_j)``.

    ``alpha_row`` is either a dense sequence or a sparse ``{j: alpha_j}`` map
    over ``n`` states whose absent entries equal 1 (``lgamma(1) == 0``, so
    they only enter the total).
    """
    if isinstance(alpha_row, Mapping):
        if n is None:
            raise ValueError("n is required for a sparse alpha row")
        vals = np.fromiter(alpha_row.values(), dtype=np.float64, count=len(alpha_row))
        total = float(np.sum(vals)) + (n - len(alpha_row))
    else:
        vals = np.asarray(alpha_row, dtype=np.float64)
        total = float(np.sum(vals))
    return float(np.sum(gammaln(vals)) - gammaln(total))


class _Counter:
    """Per-assignment count tables restricted to the observed (src, dst) pairs."""

    def __init__(self, d: TransitionDataset, o: int):
        n = d.n
        pair_key, self.pair_of = np.unique(d.src * n + d.dst, return_inverse=True)
        self.pair_of = self.pair_of.reshape(-1)
        self.pair_src = pair_key // n
        self.pair_dst = pair_key % n
        self.src = d.src
        self.n = n
        self.o = o
        self.p = pair_key.size

    def counts(self, z: np.ndarray):
        """Nonzero cell and row counts of one assignment, as flat (g, pair) and (g, i) indices."""
        o, p, n = self.o, self.p, self.n
        cell = np.bincount(z * p + self.pair_of, minlength=o * p)
        rows = np.bincount(z * n + self.src, minlength=o * n)
        ci = np.flatnonzero(cell)
        ri = np.flatnonzero(rows)
        return ci, cell[ci], ri, rows[ri]

    def tables(self, priors: DirichletPriorSet):
        if priors.o != self.o or priors.n != self.n:
            raise ValueError(
                f"priors cover {priors.o} groups x {priors.n} states, data needs {self.o} x {self.n}"
            )
        a = np.concatenate([priors.alpha_at(g, self.pair_src, self.pair_dst) for g in range(self.o)])
        r = np.concatenate([priors.row_sums(g) for g in range(self.o)])
        return a, r

    @staticmethod
    def log_ml(counts, tables) -> float:
        ci, cc, ri, rc = counts
        a, r = tables
        ac = a[ci]
        rr = r[ri]
        # sum of log B(n + alpha) - log B(alpha) over every (group, source) row
        return float(np.sum(gammaln(cc + ac) - gammaln(ac)) + np.sum(gammaln(rr) - gammaln(rr + rc)))


def log_ml_deterministic(d: TransitionDataset, priors: DirichletPriorSet, w: GroupAssignment) -> float:
    """Closed-form evidence for one fixed group assignment."""
    z = np.asarray(w.assignment, dtype=np.int64)
    if z.size != len(d):
        raise ValueError(f"assignment length ({z.size}) != transitions ({len(d)})")
    if z.size and (z.min() < 0 or z.max() >= priors.o):
        raise ValueError("assignment references a group without priors")
    c = _Counter(d, priors.o)
    return c.log_ml(c.counts(z), c.tables(priors))


def _supports(gamma: GroupAssignmentProbabilities):
    g = gamma._snapped if gamma.deterministic else gamma.gamma
    return [np.flatnonzero(row > 0) for row in g]


def enumeration_size(gamma: GroupAssignmentProbabilities) -> int:
    """Number of group assignments with nonzero probability."""
    return math.prod(len(s) for s in _supports(gamma))


def _enumerate_terms(d, priors, gamma, cap):
    supports = _supports(gamma)
    total = math.prod(len(s) for s in supports)
    if total > cap:
        raise EnumerationTooLarge(
            f"instance too large for enumeration ({total} assignments > cap {cap}); use sampling"
        )
    g = gamma._snapped if gamma.deterministic else gamma.gamma
    m = gamma.m
    radix = np.array([len(s) for s in supports], dtype=np.int64)
    sup = [np.asarray(s, dtype=np.int64) for s in supports]
    logg = [np.log(g[k, s]) for k, s in enumerate(sup)]
    c = _Counter(d, priors.o)
    tables = c.tables(priors)
    out = np.empty(total)
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        z = np.empty((idx.size, m), dtype=np.int64)
        lp = np.zeros(idx.size)
        rest = idx.copy()
        for k in range(m - 1, -1, -1):
            digit = rest % radix[k]
            rest //= radix[k]
            z[:, k] = sup[k][digit]
            lp += logg[k][digit]
        for b in range(idx.size):
            out[start + b] = lp[b] + c.log_ml(c.counts(z[b]), tables)
    return out


def log_ml_enumerate(
    d: TransitionDataset,
    priors: DirichletPriorSet,
    gamma: GroupAssignmentProbabilities,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> float:
    """Exact evidence as the probability-weighted sum over all group assignments."""
    if gamma.m != len(d):
        raise ValueError(f"gamma rows ({gamma.m}) != transitions ({len(d)})")
    return float(logsumexp(_enumerate_terms(d, priors, gamma, cap)))


def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


def sample_assignment(gamma: GroupAssignmentProbabilities, rng: np.random.Generator) -> np.ndarray:
    """Draw one group per transition from its categorical distribution."""
    g = gamma._snapped if gamma.deterministic else gamma.gamma
    u = rng.random(gamma.m)
    if g.shape[1] == 1:
        return np.zeros(gamma.m, dtype=np.int64)
    cum = np.cumsum(g, axis=1)
    z = np.sum(u[:, None] >= cum[:, :-1], axis=1).astype(np.int64)
    # guard against rounding pushing a draw onto a trailing zero-probability group
    last = g.shape[1] - 1 - np.argmax(g[:, ::-1] > 0, axis=1)
    return np.minimum(z, last)


class _SampledCounts:
    """Count tables of sampled assignments, shared across kappa values."""

    def __init__(self, d, gamma, n_samples, seed, jobs=1):
        if n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if gamma.m != len(d):
            raise ValueError(f"gamma rows ({gamma.m}) != transitions ({len(d)})")
        self.counter = _Counter(d, gamma.o)
        self.n_samples = int(n_samples)
        if gamma.deterministic:
            self.samples = [self.counter.counts(gamma.assignment())] * self.n_samples
            return

        def one(s):
            return self.counter.counts(sample_assignment(gamma, _stream(seed, s)))

        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                self.samples = list(pool.map(one, range(self.n_samples)))
        else:
            self.samples = [one(s) for s in range(self.n_samples)]

    def terms(self, priors: DirichletPriorSet) -> np.ndarray:
        tables = self.counter.tables(priors)
        return np.array([self.counter.log_ml(c, tables) for c in self.samples])


def _estimate(kappa: float, terms: np.ndarray) -> EvidencePoint:
    n = terms.size
    est = float(logsumexp(terms) - math.log(n))
    if n > 1:
        w = np.exp(terms - terms.max())
        # delta method: se(log mean) = se(mean) / mean
        se = float(np.std(w, ddof=1) / math.sqrt(n) / np.mean(w))
    else:
        se = 0.0
    return EvidencePoint(kappa, est, se, n, SAMPLING)


def log_ml_sampled(
    d: TransitionDataset,
    priors: DirichletPriorSet,
    gamma: GroupAssignmentProbabilities,
    n_samples: int,
    seed: int,
    jobs: int = 1,
) -> EvidencePoint:
    """Monte-Carlo evidence: mean closed-form evidence over sampled assignments.

    Sample ``s`` uses its own PCG64 stream keyed by ``(seed, s)``, so results
    do not depend on ``jobs``. The standard error comes from the delta method
    on the log of the sample mean.
    """
    sc = _SampledCounts(d, gamma, n_samples, seed, jobs)
    return _estimate(priors.kappa, sc.terms(priors))


def running_estimates(terms: Iterable[float]) -> np.ndarray:
    """Log-mean-exp of the first k terms for every k."""
    t = np.asarray(list(terms), dtype=np.float64)
    return np.logaddexp.accumulate(t) - np.log(np.arange(1, t.size + 1))


def evidence_curve(
    d: TransitionDataset,
    h: Hypothesis,
    kappas: Sequence[float],
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    exact: bool = False,
    exact_cap: int = DEFAULT_ENUMERATION_CAP,
    jobs: int = 1,
) -> EvidenceCurve:
    """Evidence of ``h`` at every kappa.

    Deterministic hypotheses use the closed form. Otherwise the sum over
    assignments is enumerated when ``exact`` is set and fits under
    ``exact_cap``, and sampled if not. Sampled assignments are reused for all
    kappa values so curve shapes are not distorted by sampling noise.
    """
    kappas = [float(k) for k in kappas]
    if len(set(kappas)) != len(kappas):
        raise ValueError("kappa values must be distinct")
    if any(k < 0 for k in kappas):
        raise ValueError("kappa values must be >= 0")
    problems = validate_hypothesis(h, d)
    if problems:
        raise ValueError(f"hypothesis {h.name!r} is invalid: " + "; ".join(problems))
    gamma = h.gamma
    points = []
    if gamma.deterministic:
        counter = _Counter(d, gamma.o)
        counts = counter.counts(gamma.assignment())
        for k in kappas:
            points.append(EvidencePoint(k, counter.log_ml(counts, counter.tables(elicit(h, d, k)))))
    elif exact and enumeration_size(gamma) <= exact_cap:
        for k in kappas:
            lm = log_ml_enumerate(d, elicit(h, d, k), gamma, exact_cap)
            points.append(EvidencePoint(k, lm, method=ENUMERATION))
    else:
        sc = _SampledCounts(d, gamma, n_samples, seed, jobs)
        for k in kappas:
            points.append(_estimate(k, sc.terms(elicit(h, d, k))))
    return EvidenceCurve(h.name, points)

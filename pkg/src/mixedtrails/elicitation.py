"""Turning hypotheses into Dirichlet hyperparameters.

Every hyperparameter is ``1 + pseudo-count``. Pseudo-counts are stored as a
sparse per-group matrix plus a dense per-row offset that carries the mass of
rows whose belief is uniform (empty belief rows), so uniform beliefs over
large state spaces stay cheap.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .core import Hypothesis, TransitionDataset, validate_hypothesis

DEFAULT_KAPPAS: tuple[float, ...] = (0, 1, 2, 3, 4, 5, 10, 100, 1000, 10000)


class DirichletPriorSet:
    """Hyperparameters ``alpha[g][i, j] = 1 + offset[g, i] + extra[g][i, j]``."""

    def __init__(self, kappa: float, groups: Sequence[str], offset: np.ndarray, extra: Sequence[sp.csr_matrix]):
        self.kappa = float(kappa)
        self.groups = tuple(groups)
        self.offset = offset
        self.extra = tuple(extra)
        self.offset.setflags(write=False)

    @property
    def n(self) -> int:
        return self.offset.shape[1]

    @property
    def o(self) -> int:
        return len(self.groups)

    def alpha_row(self, g: int, i: int) -> dict[int, float]:
        """Entries of row ``i`` of group ``g`` that exceed 1; absent entries are exactly 1."""
        base = 1.0 + self.offset[g, i]
        mat = self.extra[g]
        start, stop = mat.indptr[i], mat.indptr[i + 1]
        explicit = dict(zip(mat.indices[start:stop].tolist(), (base + mat.data[start:stop]).tolist()))
        if self.offset[g, i] == 0.0:
            return explicit
        return {j: explicit.get(j, base) for j in range(self.n)}

    def alpha_dense(self, g: int) -> np.ndarray:
        return 1.0 + self.offset[g][:, None] + self.extra[g].toarray()

    def alpha_at(self, g: int, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if src.size == 0:
            return np.zeros(0)
        extra = np.asarray(self.extra[g][src, dst]).ravel()
        return 1.0 + self.offset[g, src] + extra

    def row_sums(self, g: int) -> np.ndarray:
        """Sum of alpha over each row of group ``g``."""
        extra = np.asarray(self.extra[g].sum(axis=1)).ravel()
        return self.n * (1.0 + self.offset[g]) + extra

    def pseudo_mass(self, g: int) -> np.ndarray:
        """Per-row sum of ``alpha - 1``; equals kappa for every row."""
        return self.row_sums(g) - self.n


def _check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if not np.isfinite(kappa) or kappa < 0:
        raise ValueError(f"concentration factor must be finite and >= 0, got {kappa}")
    return kappa


def _assemble(h: Hypothesis, kappa: float, weights: np.ndarray) -> DirichletPriorSet:
    # weights[g, g2]: share of belief matrix g2 in the mixture used for group g
    o = len(h.phis)
    n = h.phis[0].n
    offset = np.zeros((o, n))
    extra = []
    for g in range(o):
        if kappa == 0.0:
            extra.append(sp.csr_matrix((n, n)))
            continue
        mix = None
        row_offset = np.zeros(n)
        for g2 in range(o):
            w = weights[g, g2]
            if w == 0.0:
                continue
            phi = h.phis[g2]
            term = phi.rows * w if w != 1.0 else phi.rows
            mix = term if mix is None else mix + term
            row_offset = row_offset + (w / n) * phi.empty_rows
        mix = sp.csr_matrix(mix * kappa)
        mix.eliminate_zeros()
        mix.sort_indices()
        extra.append(mix)
        offset[g] = kappa * row_offset
    return DirichletPriorSet(kappa, h.groups, offset, extra)


def elicit_deterministic(h: Hypothesis, kappa: float, strict: bool = True) -> DirichletPriorSet:
    """Per-group pseudo-observations: ``alpha = kappa * phi + 1``.

    With ``strict=False`` a probabilistic hypothesis is elicited as if its
    groups were deterministic (the "naive" variant, no mixing).
    """
    kappa = _check_kappa(kappa)
    if strict and not h.deterministic:
        raise ValueError(
            f"hypothesis {h.name!r} has probabilistic group assignments; use elicit_probabilistic"
        )
    return _assemble(h, kappa, np.eye(len(h.phis)))


def mixture_weights(h: Hypothesis) -> np.ndarray:
    """Row-normalized co-assignment mass ``sum_t gamma[t, g] * gamma[t, g2]``.

    A group with zero total mass keeps its own belief matrix.
    """
    gam = h.gamma._snapped if h.gamma.deterministic else h.gamma.gamma
    co = gam.T @ gam
    z = co.sum(axis=1)
    o = co.shape[0]
    w = np.eye(o)
    nz = z > 0
    w[nz] = co[nz] / z[nz, None]
    return w


def elicit_probabilistic(h: Hypothesis, d: TransitionDataset, kappa: float) -> DirichletPriorSet:
    """Mixture elicitation accounting for uncertain group membership.

    Group ``g`` receives ``kappa`` pseudo-observations per row distributed as
    the mixture of all belief matrices, each weighted by how often a
    transition is assigned to ``g`` while belonging to the other group.
    Belief rows are stochastic, so the normalizer depends on ``g`` only.
    """
    kappa = _check_kappa(kappa)
    problems = validate_hypothesis(h, d)
    if problems:
        raise ValueError(f"hypothesis {h.name!r} is invalid: " + "; ".join(problems))
    return _assemble(h, kappa, mixture_weights(h))


def elicit(h: Hypothesis, d: TransitionDataset, kappa: float) -> DirichletPriorSet:
    """Pick the elicitation rule the hypothesis asks for."""
    if h.naive_elicitation:
        return elicit_deterministic(h, kappa, strict=False)
    if h.deterministic:
        return elicit_deterministic(h, kappa)
    return elicit_probabilistic(h, d, kappa)

"""Shared data model: states, transitions, belief matrices and hypotheses."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np
import scipy.sparse as sp

GAMMA_SUM_TOL = 1e-9
SNAP_TOL = 1e-12
ROW_SUM_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class StateSpace:
    """Ordered, finite set of opaque state identifiers."""

    def __init__(self, states: Sequence[str]):
        states = tuple(str(s) for s in states)
        if not states:
            raise ValueError("state space must contain at least one state")
        index = {}
        for i, s in enumerate(states):
            if not s:
                raise ValueError("state identifiers must be non-empty")
            if s in index:
                raise ValueError(f"duplicate state identifier {s!r}")
            index[s] = i
        self._states = states
        self._index = index

    @property
    def states(self) -> tuple[str, ...]:
        return self._states

    def __len__(self) -> int:
        return len(self._states)

    def __iter__(self) -> Iterator[str]:
        return iter(self._states)

    def __contains__(self, state: object) -> bool:
        return state in self._index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, StateSpace) and self._states == other._states

    def __hash__(self) -> int:
        return hash(self._states)

    def __repr__(self) -> str:
        return f"StateSpace(n={len(self)})"

    def index(self, state: str) -> int:
        try:
            return self._index[state]
        except KeyError:
            raise KeyError(f"unknown state {state!r}") from None

    def indices(self, states: Sequence[str]) -> np.ndarray:
        return np.fromiter((self.index(s) for s in states), dtype=np.int64, count=len(states))


@dataclass(frozen=True)
class Transition:
    src: int
    dst: int
    sequence_id: Optional[str] = None
    position: Optional[int] = None


class TransitionDataset:
    """Ordered transitions over a state space.

    Row order is canonical: group-assignment rows are aligned to it.
    ``metadata`` holds arbitrary per-transition columns (e.g. walker color).
    """

    def __init__(
        self,
        space: StateSpace,
        src: Sequence[int],
        dst: Sequence[int],
        sequence_ids: Optional[Sequence[str]] = None,
        positions: Optional[Sequence[int]] = None,
        metadata: Optional[Mapping[str, Sequence]] = None,
    ):
        src = np.asarray(src, dtype=np.int64).reshape(-1)
        dst = np.asarray(dst, dtype=np.int64).reshape(-1)
        if src.shape != dst.shape:
            raise ValueError("src and dst must have equal length")
        n = len(space)
        if src.size and (src.min() < 0 or src.max() >= n or dst.min() < 0 or dst.max() >= n):
            raise ValueError("transition references a state index outside the state space")
        m = src.size
        if sequence_ids is not None:
            sequence_ids = tuple(None if s is None else str(s) for s in sequence_ids)
            if len(sequence_ids) != m:
                raise ValueError("sequence_ids length differs from number of transitions")
        if positions is not None:
            positions = _frozen(np.asarray(positions, dtype=np.int64).reshape(-1).copy())
            if positions.size != m:
                raise ValueError("positions length differs from number of transitions")
        if sequence_ids is not None and positions is not None:
            _check_positions(sequence_ids, positions)
        meta = {}
        for key, col in (metadata or {}).items():
            col = tuple(col)
            if len(col) != m:
                raise ValueError(f"metadata column {key!r} has {len(col)} rows, expected {m}")
            meta[str(key)] = col
        self.space = space
        self.src = _frozen(src.copy())
        self.dst = _frozen(dst.copy())
        self.sequence_ids = sequence_ids
        self.positions = positions
        self.metadata: Mapping[str, tuple] = meta

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[str, str]], space: Optional[StateSpace] = None, **kwargs):
        if space is None:
            space = StateSpace(sorted({s for p in pairs for s in p}))
        src = space.indices([p[0] for p in pairs])
        dst = space.indices([p[1] for p in pairs])
        return cls(space, src, dst, **kwargs)

    def __len__(self) -> int:
        return int(self.src.size)

    @property
    def m(self) -> int:
        return len(self)

    @property
    def n(self) -> int:
        return len(self.space)

    def __getitem__(self, k: int) -> Transition:
        return Transition(
            int(self.src[k]),
            int(self.dst[k]),
            None if self.sequence_ids is None else self.sequence_ids[k],
            None if self.positions is None else int(self.positions[k]),
        )

    def __iter__(self) -> Iterator[Transition]:
        for k in range(len(self)):
            yield self[k]

    def counts(self) -> sp.csr_matrix:
        """Dense-free n x n count matrix of the whole dataset."""
        n = self.n
        ones = np.ones(len(self), dtype=np.int64)
        return sp.csr_matrix((ones, (self.src, self.dst)), shape=(n, n))


def _check_positions(sequence_ids: Sequence[Optional[str]], positions: np.ndarray) -> None:
    seen: dict[str, list[int]] = {}
    for s, p in zip(sequence_ids, positions):
        if s is not None:
            seen.setdefault(s, []).append(int(p))
    for s, ps in seen.items():
        if sorted(ps) != list(range(len(ps))):
            raise ValueError(f"positions of sequence {s!r} are not unique and contiguous from 0")


class BeliefMatrix:
    """Row-stochastic belief over transitions for one group.

    Rows are normalized at construction. A row without entries means "no
    belief from this state" and is treated as uniform over all states.
    """

    def __init__(self, weights, group_label: str = "", n: Optional[int] = None):
        mat = sp.csr_matrix(weights, dtype=np.float64, shape=None if n is None else (n, n))
        if mat.shape[0] != mat.shape[1]:
            raise ValueError(f"belief matrix must be square, got {mat.shape}")
        mat.sum_duplicates()
        mat.eliminate_zeros()
        if mat.nnz and (not np.all(np.isfinite(mat.data)) or mat.data.min() < 0):
            raise ValueError("belief weights must be finite and non-negative")
        sums = np.asarray(mat.sum(axis=1)).ravel()
        scale = np.divide(1.0, sums, out=np.zeros_like(sums), where=sums > 0)
        # leave already-stochastic rows untouched so write/read round-trips are exact
        scale[np.abs(sums - 1.0) <= ROW_SUM_TOL] = 1.0
        mat = sp.csr_matrix(sp.diags(scale) @ mat)
        mat.eliminate_zeros()
        mat.sort_indices()
        mat.data.setflags(write=False)
        self.group_label = str(group_label)
        self.rows = mat
        self.empty_rows = _frozen(np.diff(mat.indptr) == 0)

    @classmethod
    def uniform(cls, n: int, group_label: str = "") -> "BeliefMatrix":
        return cls(sp.csr_matrix((n, n)), group_label)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def row(self, i: int) -> dict[int, float]:
        start, stop = self.rows.indptr[i], self.rows.indptr[i + 1]
        return dict(zip(self.rows.indices[start:stop].tolist(), self.rows.data[start:stop].tolist()))

    def dense(self) -> np.ndarray:
        """Full matrix with empty rows expanded to uniform."""
        out = self.rows.toarray()
        out[self.empty_rows] = 1.0 / self.n
        return out

    def relabel(self, group_label: str) -> "BeliefMatrix":
        out = object.__new__(BeliefMatrix)
        out.group_label = group_label
        out.rows = self.rows
        out.empty_rows = self.empty_rows
        return out

    def __repr__(self) -> str:
        return f"BeliefMatrix({self.group_label!r}, n={self.n}, nnz={self.rows.nnz})"


class GroupAssignmentProbabilities:
    """Per-transition categorical distribution over groups (m x o).

    Construction does not validate row sums; see :func:`validate_hypothesis`.
    """

    def __init__(self, groups: Sequence[str], gamma):
        groups = tuple(str(g) for g in groups)
        gamma = np.array(gamma, dtype=np.float64, ndmin=2)
        if gamma.ndim != 2 or gamma.shape[1] != len(groups):
            raise ValueError(f"gamma must have shape (m, {len(groups)}), got {gamma.shape}")
        snapped = gamma.copy()
        snapped[np.abs(snapped) <= SNAP_TOL] = 0.0
        snapped[np.abs(snapped - 1.0) <= SNAP_TOL] = 1.0
        self.groups = groups
        self.gamma = _frozen(gamma)
        self.deterministic = bool(np.all((snapped == 0.0) | (snapped == 1.0)))
        self._snapped = _frozen(snapped)

    @classmethod
    def single(cls, m: int, group: str = "all") -> "GroupAssignmentProbabilities":
        return cls([group], np.ones((m, 1)))

    @classmethod
    def from_labels(cls, labels: Sequence, groups: Optional[Sequence[str]] = None):
        """Deterministic assignment from one label per transition."""
        labels = [str(x) for x in labels]
        if groups is None:
            groups = sorted(set(labels))
        pos = {g: k for k, g in enumerate(groups)}
        gamma = np.zeros((len(labels), len(groups)))
        for row, lab in enumerate(labels):
            if lab not in pos:
                raise ValueError(f"label {lab!r} at row {row} is not one of the groups {list(groups)}")
            gamma[row, pos[lab]] = 1.0
        return cls(groups, gamma)

    @property
    def m(self) -> int:
        return self.gamma.shape[0]

    @property
    def o(self) -> int:
        return len(self.groups)

    def assignment(self) -> np.ndarray:
        """The single group index per transition of a deterministic gamma."""
        if not self.deterministic:
            raise ValueError("gamma is not deterministic")
        return np.argmax(self._snapped, axis=1)


@dataclass(frozen=True)
class Hypothesis:
    name: str
    gamma: GroupAssignmentProbabilities
    phis: tuple[BeliefMatrix, ...]
    naive_elicitation: bool = False

    def __post_init__(self):
        object.__setattr__(self, "phis", tuple(self.phis))
        if len(self.phis) != self.gamma.o or not self.phis:
            raise ValueError(
                f"hypothesis {self.name!r}: {len(self.phis)} belief matrices for {self.gamma.o} groups"
            )

    @property
    def deterministic(self) -> bool:
        return self.gamma.deterministic

    @property
    def groups(self) -> tuple[str, ...]:
        return self.gamma.groups

    @classmethod
    def homogeneous(cls, name: str, m: int, phi: BeliefMatrix) -> "Hypothesis":
        return cls(name, GroupAssignmentProbabilities.single(m), (phi,))


@dataclass(frozen=True)
class GroupAssignment:
    """One concrete mapping of every transition to a group index."""

    assignment: np.ndarray
    log_p: float = 0.0

    @classmethod
    def from_gamma(cls, gamma: GroupAssignmentProbabilities, assignment) -> "GroupAssignment":
        z = np.asarray(assignment, dtype=np.int64)
        if z.shape != (gamma.m,):
            raise ValueError(f"assignment length {z.size} differs from number of transitions {gamma.m}")
        p = gamma.gamma[np.arange(gamma.m), z]
        if np.any(p <= 0):
            raise ValueError("assignment uses a zero-probability group")
        return cls(_frozen(z.copy()), float(np.sum(np.log(p))))


def validate_hypothesis(h: Hypothesis, d: TransitionDataset) -> list[str]:
    """List every reason ``h`` cannot be evaluated against ``d``; empty if usable."""
    problems = []
    g = h.gamma
    if g.m != len(d):
        problems.append(f"gamma rows ({g.m}) != transitions ({len(d)})")
    gam = g.gamma
    if not np.all(np.isfinite(gam)):
        problems.append("gamma contains non-finite values")
    neg = np.argwhere(gam < 0)
    if neg.size:
        problems.append(f"gamma row {int(neg[0, 0])} has negative entries")
    sums = gam.sum(axis=1)
    for k in np.flatnonzero(np.abs(sums - 1.0) > GAMMA_SUM_TOL)[:10]:
        problems.append(f"gamma row {int(k)} sums to {sums[k]:.12g}")
    for phi in h.phis:
        if phi.n != d.n:
            problems.append(f"belief matrix {phi.group_label!r} has {phi.n} states, dataset has {d.n}")
            continue
        rs = np.asarray(phi.rows.sum(axis=1)).ravel()
        bad = np.flatnonzero(~phi.empty_rows & (np.abs(rs - 1.0) > ROW_SUM_TOL))
        for i in bad[:10]:
            problems.append(f"belief matrix {phi.group_label!r} row {int(i)} sums to {rs[i]:.12g}")
    return problems


def transition_counts(d: TransitionDataset, w: GroupAssignment, o: Optional[int] = None) -> list[sp.csr_matrix]:
    """Per-group n x n transition counts under the assignment ``w``."""
    z = np.asarray(w.assignment)
    if z.size != len(d):
        raise ValueError(f"assignment length ({z.size}) != transitions ({len(d)})")
    if o is None:
        o = int(z.max()) + 1 if z.size else 1
    n = d.n
    out = []
    for g in range(o):
        mask = z == g
        ones = np.ones(int(mask.sum()), dtype=np.int64)
        out.append(sp.csr_matrix((ones, (d.src[mask], d.dst[mask])), shape=(n, n)))
    return out


def permute_states(d: TransitionDataset, order: Sequence[int]) -> tuple[TransitionDataset, np.ndarray]:
    """Re-index ``d`` so that new state ``k`` is old state ``order[k]``.

    Returns the new dataset and the old-to-new index map.
    """
    order = np.asarray(order, dtype=np.int64)
    new_of_old = np.empty_like(order)
    new_of_old[order] = np.arange(order.size)
    space = StateSpace([d.space.states[i] for i in order])
    nd = TransitionDataset(
        space, new_of_old[d.src], new_of_old[d.dst], d.sequence_ids, d.positions, d.metadata
    )
    return nd, new_of_old


def permute_belief(phi: BeliefMatrix, new_of_old: np.ndarray) -> BeliefMatrix:
    coo = phi.rows.tocoo()
    n = phi.n
    mat = sp.csr_matrix((coo.data, (new_of_old[coo.row], new_of_old[coo.col])), shape=(n, n))
    return BeliefMatrix(mat, phi.group_label)

"""File formats: transition TSV, belief-matrix TSV, hypothesis specs, results CSV.

Every writer goes through :func:`atomic_write`, so readers never observe a
half-written file.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .core import BeliefMatrix, GroupAssignmentProbabilities, Hypothesis, StateSpace, TransitionDataset
from .evidence import EvidenceCurve, EvidencePoint

RESULT_COLUMNS = ("hypothesis", "kappa", "log_ml", "std_err", "n_samples", "method")
_RESERVED = ("src", "dst", "seq", "pos")


class DataFormatError(ValueError):
    """A data file is malformed or inconsistent with the state space."""


@contextmanager
def atomic_write(path, newline: Optional[str] = ""):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline=newline) as f:
            yield f
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt_float(x: float) -> str:
    """Shortest round-tripping decimal text, independent of locale."""
    x = float(x)
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def _read_tsv(path) -> tuple[list[str], list[tuple[int, list[str]]]]:
    with open(path, encoding="utf-8", newline="") as f:
        lines = f.read().splitlines()
    rows = [(no, line.split("\t")) for no, line in enumerate(lines, start=1) if line.strip()]
    if not rows:
        return [], []
    return rows[0][1], rows[1:]


def load_states(path) -> StateSpace:
    with open(path, encoding="utf-8") as f:
        return StateSpace([line.rstrip("\n") for line in f if line.strip()])


def write_states(space: StateSpace, path) -> None:
    with atomic_write(path) as f:
        for s in space:
            f.write(f"{s}\n")


def load_transitions(path, states: Optional[StateSpace] = None) -> TransitionDataset:
    """Read a header-led TSV with ``src`` and ``dst`` columns.

    Optional ``seq``/``pos`` columns give sequence membership; every other
    column is kept verbatim as string metadata. Without ``states`` the state
    space is the sorted union of the src/dst values.
    """
    header, rows = _read_tsv(path)
    if not header:
        raise DataFormatError(f"{path}: empty file, expected a header row")
    for col in ("src", "dst"):
        if col not in header:
            raise DataFormatError(f"{path}: missing required column {col!r}")
    if len(set(header)) != len(header):
        raise DataFormatError(f"{path}: duplicate column names in header")
    width = len(header)
    cols: dict[str, list[str]] = {h: [] for h in header}
    for no, fields in rows:
        if len(fields) != width:
            raise DataFormatError(f"{path}: line {no}: expected {width} fields, found {len(fields)}")
        for h, v in zip(header, fields):
            cols[h].append(v)
    for no, (s, t) in zip((r[0] for r in rows), zip(cols["src"], cols["dst"])):
        if not s or not t:
            raise DataFormatError(f"{path}: line {no}: empty state identifier")
    if states is None:
        states = StateSpace(sorted(set(cols["src"]) | set(cols["dst"])))
    else:
        for no, s, t in zip((r[0] for r in rows), cols["src"], cols["dst"]):
            for v in (s, t):
                if v not in states:
                    raise DataFormatError(f"{path}: line {no}: unknown state {v!r}")
    positions = None
    if "pos" in cols:
        try:
            positions = [int(v) for v in cols["pos"]]
        except ValueError as e:
            raise DataFormatError(f"{path}: non-integer value in column 'pos': {e}") from None
    meta = {h: cols[h] for h in header if h not in _RESERVED}
    try:
        return TransitionDataset(
            states, states.indices(cols["src"]), states.indices(cols["dst"]),
            cols.get("seq"), positions, meta,
        )
    except ValueError as e:
        raise DataFormatError(f"{path}: {e}") from None


def write_transitions(d: TransitionDataset, path) -> None:
    header = ["src", "dst"]
    if d.sequence_ids is not None:
        header.append("seq")
    if d.positions is not None:
        header.append("pos")
    header += list(d.metadata)
    names = d.space.states
    with atomic_write(path) as f:
        f.write("\t".join(header) + "\n")
        for k in range(len(d)):
            row = [names[d.src[k]], names[d.dst[k]]]
            if d.sequence_ids is not None:
                row.append(d.sequence_ids[k])
            if d.positions is not None:
                row.append(str(int(d.positions[k])))
            row += [str(d.metadata[c][k]) for c in d.metadata]
            f.write("\t".join(row) + "\n")


def load_belief_matrix(path, space: StateSpace, group_label: str = "") -> BeliefMatrix:
    """Read ``src<TAB>dst<TAB>weight`` triples; duplicate pairs are summed, rows normalized."""
    rows, cols, vals = [], [], []
    with open(path, encoding="utf-8") as f:
        for no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 3:
                raise DataFormatError(f"{path}: line {no}: expected src, dst, weight")
            s, t, w = fields
            try:
                w = float(w)
            except ValueError:
                raise DataFormatError(f"{path}: line {no}: weight {w!r} is not a number") from None
            if not math.isfinite(w) or w <= 0:
                raise DataFormatError(f"{path}: line {no}: weight must be positive, got {w}")
            for v in (s, t):
                if v not in space:
                    raise DataFormatError(f"{path}: line {no}: unknown state {v!r}")
            rows.append(space.index(s))
            cols.append(space.index(t))
            vals.append(w)
    n = len(space)
    return BeliefMatrix(sp.csr_matrix((vals, (rows, cols)), shape=(n, n)), group_label)


def write_belief_matrix(phi: BeliefMatrix | sp.spmatrix, space: StateSpace, path) -> None:
    mat = phi.rows if isinstance(phi, BeliefMatrix) else sp.csr_matrix(phi)
    coo = mat.tocoo()
    order = np.lexsort((coo.col, coo.row))
    names = space.states
    with atomic_write(path) as f:
        for k in order:
            f.write(f"{names[coo.row[k]]}\t{names[coo.col[k]]}\t{fmt_float(coo.data[k])}\n")


def load_adjacency(path, space: StateSpace, group_label: str = "") -> BeliefMatrix:
    """Uniform belief over the targets listed for each source (``src<TAB>dst`` lines)."""
    rows, cols = [], []
    with open(path, encoding="utf-8") as f:
        for no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) < 2:
                raise DataFormatError(f"{path}: line {no}: expected src, dst")
            for v in fields[:2]:
                if v not in space:
                    raise DataFormatError(f"{path}: line {no}: unknown state {v!r}")
            rows.append(space.index(fields[0]))
            cols.append(space.index(fields[1]))
    n = len(space)
    mat = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    mat.data[:] = 1.0  # duplicate links count once
    return BeliefMatrix(mat, group_label)


def load_gamma(path, m: int, groups: Sequence[str]) -> GroupAssignmentProbabilities:
    """Per-transition group probabilities: header of group labels, one row per transition."""
    header, rows = _read_tsv(path)
    if list(header) != list(groups):
        raise DataFormatError(f"{path}: header {header} does not match groups {list(groups)}")
    if len(rows) != m:
        raise DataFormatError(f"gamma rows ({len(rows)}) != transitions ({m})")
    vals = np.empty((m, len(groups)))
    for r, (no, fields) in enumerate(rows):
        if len(fields) != len(groups):
            raise DataFormatError(f"{path}: line {no}: expected {len(groups)} probabilities")
        try:
            vals[r] = [float(v) for v in fields]
        except ValueError:
            raise DataFormatError(f"{path}: line {no}: non-numeric probability") from None
    return GroupAssignmentProbabilities(groups, vals)


def write_gamma(gamma: GroupAssignmentProbabilities, path) -> None:
    with atomic_write(path) as f:
        f.write("\t".join(gamma.groups) + "\n")
        for row in gamma.gamma:
            f.write("\t".join(fmt_float(v) for v in row) + "\n")


def _kind(entry):
    """Split a spec entry into (kind, argument)."""
    if isinstance(entry, str):
        return entry, None
    if isinstance(entry, dict) and len(entry) == 1:
        (k, v), = entry.items()
        return k, v
    raise DataFormatError(f"cannot interpret spec entry {entry!r}")


def load_hypothesis(path, d: TransitionDataset) -> Hypothesis:
    """Build a hypothesis from a JSON spec; relative paths resolve against the spec's folder.

    Schema::

        {"name": str,
         "groups": [label, ...],                       # optional for "single"
         "gamma": "single" | {"column": meta} | {"file": tsv},
         "phi": [entry, ...] or {label: entry},        # aligned with groups
         "naive_elicitation": bool}

    where ``entry`` is ``{"file": tsv}``, ``"uniform"``, ``"data"`` or
    ``{"adjacency": tsv}``.
    """
    path = Path(path)
    try:
        spec = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataFormatError(f"{path}: invalid JSON: {e}") from None
    base = path.parent
    name = str(spec.get("name", path.stem))
    kind, arg = _kind(spec.get("gamma", "single"))
    groups = spec.get("groups")
    m = len(d)
    if kind == "single":
        groups = list(groups or ["all"])
        if len(groups) != 1:
            raise DataFormatError(f"{path}: 'single' gamma needs exactly one group, got {groups}")
        gamma = GroupAssignmentProbabilities.single(m, groups[0])
    elif kind == "column":
        if arg not in d.metadata:
            raise DataFormatError(f"{path}: dataset has no metadata column {arg!r}")
        labels = d.metadata[arg]
        if groups is None:
            groups = sorted({str(x) for x in labels})
        try:
            gamma = GroupAssignmentProbabilities.from_labels(labels, groups)
        except ValueError as e:
            raise DataFormatError(f"{path}: {e}") from None
    elif kind == "file":
        if not groups:
            raise DataFormatError(f"{path}: a gamma file requires an explicit 'groups' list")
        gamma = load_gamma(base / arg, m, groups)
    else:
        raise DataFormatError(f"{path}: unknown gamma kind {kind!r}")
    groups = list(gamma.groups)

    phi_spec = spec.get("phi")
    if isinstance(phi_spec, dict):
        missing = [g for g in groups if g not in phi_spec]
        if missing:
            raise DataFormatError(f"{path}: no phi for groups {missing}")
        phi_spec = [phi_spec[g] for g in groups]
    if not isinstance(phi_spec, list) or len(phi_spec) != len(groups):
        raise DataFormatError(f"{path}: phi must list one entry per group ({len(groups)})")
    phis = []
    for g, entry in zip(groups, phi_spec):
        k, a = _kind(entry)
        if k == "uniform":
            phis.append(BeliefMatrix.uniform(d.n, g))
        elif k == "data":
            phis.append(BeliefMatrix(d.counts(), g))
        elif k == "file":
            phis.append(load_belief_matrix(base / a, d.space, g))
        elif k == "adjacency":
            phis.append(load_adjacency(base / a, d.space, g))
        else:
            raise DataFormatError(f"{path}: unknown phi kind {k!r}")
    return Hypothesis(name, gamma, tuple(phis), bool(spec.get("naive_elicitation", False)))


def write_hypothesis_spec(path, spec: dict) -> None:
    with atomic_write(path) as f:
        f.write(json.dumps(spec, indent=2) + "\n")


def results_rows(curves: Iterable[EvidenceCurve]) -> list[list[str]]:
    rows = []
    seen = set()
    for c in curves:
        for p in c.points:
            key = (c.name, p.kappa)
            if key in seen:
                raise ValueError(f"duplicate result row for hypothesis {c.name!r} at kappa {p.kappa}")
            seen.add(key)
            rows.append([
                c.name,
                fmt_float(p.kappa),
                repr(float(p.log_ml)),
                "" if p.std_err is None else repr(float(p.std_err)),
                "" if p.n_samples is None else str(p.n_samples),
                p.method,
            ])
    return rows


def format_results(curves: Iterable[EvidenceCurve]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    w.writerows(results_rows(curves))
    return buf.getvalue()


def write_results(curves: Iterable[EvidenceCurve], path) -> None:
    text = format_results(curves)
    with atomic_write(path) as f:
        f.write(text)


def read_results(path) -> list[EvidenceCurve]:
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or tuple(reader.fieldnames) != RESULT_COLUMNS:
            raise DataFormatError(f"{path}: expected header {','.join(RESULT_COLUMNS)}")
        by_name: dict[str, list[EvidencePoint]] = {}
        for row in reader:
            se = row["std_err"]
            ns = row["n_samples"]
            by_name.setdefault(row["hypothesis"], []).append(EvidencePoint(
                float(row["kappa"]), float(row["log_ml"]),
                float(se) if se else None, int(ns) if ns else None, row["method"],
            ))
    return [EvidenceCurve(name, pts) for name, pts in by_name.items()]

"""Synthetic walker datasets on a colored preferential-attachment graph.

Randomness comes from numpy's PCG64 bit generator seeded through
``SeedSequence(seed, spawn_key=(stream, index))``: stream 0 builds the graph,
stream 1 drives walker ``index``. Walkers are therefore independent of the
order (or parallelism) in which they are simulated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .core import BeliefMatrix, GroupAssignmentProbabilities, Hypothesis, StateSpace, TransitionDataset

RED = "red"
BLUE = "blue"
DRAW = "draw"
LINK = "link"
SCENARIOS = ("link", "color", "memory", "violet")
VARIANTS = (LINK, RED, BLUE)
HYPOTHESES = ("link", "link-color", "color", "mem", "violet", "violet-naive")

_GRAPH_STREAM = 0
_WALKER_STREAM = 1


def rng_stream(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(stream, index))))


@dataclass(frozen=True)
class ColoredGraph:
    n_nodes: int
    edges: tuple[frozenset, ...]
    node_color: tuple[str, ...]

    @property
    def n_edges(self) -> int:
        return sum(len(e) for e in self.edges) // 2

    def adjacency(self) -> sp.csr_matrix:
        rows = [i for i, nb in enumerate(self.edges) for _ in nb]
        cols = [j for nb in self.edges for j in sorted(nb)]
        return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.n_nodes, self.n_nodes))

    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            for j in self.edges[stack.pop()]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == self.n_nodes

    def state_names(self) -> list[str]:
        width = len(str(self.n_nodes - 1))
        return [f"n{i:0{width}d}" for i in range(self.n_nodes)]


def generate_ba_graph(n: int, m_attach: int, p_red: float = 0.5, seed: int = 0) -> ColoredGraph:
    """Barabasi-Albert graph grown from an ``m_attach``-clique, with random node colors.

    Each new node links to ``m_attach`` distinct existing nodes drawn without
    replacement with probability proportional to their current degree.
    """
    if m_attach < 1 or n < 2 or m_attach >= n:
        raise ValueError(f"need 1 <= m_attach < n, got n={n}, m_attach={m_attach}")
    if not 0.0 <= p_red <= 1.0:
        raise ValueError(f"p_red must lie in [0, 1], got {p_red}")
    rng = rng_stream(seed, _GRAPH_STREAM)
    adj: list[set[int]] = [set() for _ in range(n)]
    for i in range(m_attach):
        for j in range(i + 1, m_attach):
            adj[i].add(j)
            adj[j].add(i)
    deg = np.zeros(n)
    deg[:m_attach] = m_attach - 1
    for v in range(m_attach, n):
        w = deg[:v]
        p = w / w.sum() if w.sum() > 0 else None
        for u in rng.choice(v, size=m_attach, replace=False, p=p):
            adj[v].add(int(u))
            adj[int(u)].add(v)
            deg[u] += 1
        deg[v] = m_attach
    colors = tuple(RED if x < p_red else BLUE for x in rng.random(n))
    return ColoredGraph(n, tuple(frozenset(a) for a in adj), colors)


@dataclass(frozen=True)
class GeneratorTransitionMatrix:
    variant: str
    theta: sp.csr_matrix

    def belief(self) -> BeliefMatrix:
        return BeliefMatrix(self.theta, self.variant)


def build_theta(g: ColoredGraph, variant: str, preference: float = 10.0) -> GeneratorTransitionMatrix:
    """Random-walk matrix over the graph's links.

    ``link`` is the row-normalized adjacency matrix; ``red``/``blue`` make
    moves to nodes of that color ``preference`` times as likely.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    rows, cols, vals = [], [], []
    for i, nb in enumerate(g.edges):
        if not nb:
            raise ValueError(f"node {i} is isolated")
        targets = sorted(nb)
        w = np.array([
            preference if variant != LINK and g.node_color[j] == variant else 1.0 for j in targets
        ])
        rows.extend([i] * len(targets))
        cols.extend(targets)
        vals.extend(w / w.sum())
    theta = sp.csr_matrix((vals, (rows, cols)), shape=(g.n_nodes, g.n_nodes))
    theta.sort_indices()
    return GeneratorTransitionMatrix(variant, theta)


@dataclass(frozen=True)
class WalkerConfig:
    scenario: str
    n_walkers: int = 10_000
    n_steps: int = 10
    seed: int = 0
    shade_prior: tuple[float, float] = (1.0, 1.0)
    p_red_walker: float = 0.5
    fixed_shade: Optional[float] = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if self.n_walkers < 1 or self.n_steps < 1:
            raise ValueError("n_walkers and n_steps must be >= 1")


class _Sampler:
    def __init__(self, g: ColoredGraph):
        self.cum = {}
        self.nbrs = {}
        for v in VARIANTS:
            theta = build_theta(g, v).theta
            self.cum[v] = [np.cumsum(theta.data[theta.indptr[i]:theta.indptr[i + 1]]) for i in range(g.n_nodes)]
            self.nbrs[v] = [theta.indices[theta.indptr[i]:theta.indptr[i + 1]] for i in range(g.n_nodes)]

    def step(self, variant: str, node: int, u: float) -> int:
        cum = self.cum[variant][node]
        k = min(int(np.searchsorted(cum, u, side="right")), cum.size - 1)
        return int(self.nbrs[variant][node][k])


@dataclass(frozen=True)
class WalkRecord:
    """One walker's path plus the facts hypotheses are built from."""

    walker: int
    color: str
    shade: float
    nodes: tuple[int, ...]
    majority: tuple[str, ...]
    matrix: tuple[str, ...]


def _walk(g: ColoredGraph, cfg: WalkerConfig, sampler: _Sampler, w: int) -> WalkRecord:
    rng = rng_stream(cfg.seed, _WALKER_STREAM, w)
    # fixed draw order for every scenario so streams line up across scenarios
    color = RED if rng.random() < cfg.p_red_walker else BLUE
    shade = float(rng.beta(*cfg.shade_prior))
    if cfg.fixed_shade is not None:
        shade = float(cfg.fixed_shade)
    node = int(rng.integers(g.n_nodes))
    nodes = [node]
    majority, matrix = [], []
    n_red = n_blue = 0
    for _ in range(cfg.n_steps):
        if g.node_color[node] == RED:
            n_red += 1
        else:
            n_blue += 1
        maj = RED if n_red > n_blue else BLUE if n_blue > n_red else DRAW
        u_color = rng.random()
        u_move = rng.random()
        if cfg.scenario == "link":
            variant = LINK
        elif cfg.scenario == "color":
            variant = color
        elif cfg.scenario == "memory":
            variant = LINK if maj == DRAW else maj
        else:
            variant = RED if u_color < shade else BLUE
        node = sampler.step(variant, node, u_move)
        nodes.append(node)
        majority.append(maj)
        matrix.append(variant)
    return WalkRecord(w, color, shade, tuple(nodes), tuple(majority), tuple(matrix))


def simulate_walker(g: ColoredGraph, cfg: WalkerConfig, w: int) -> WalkRecord:
    return _walk(g, cfg, _Sampler(g), w)


def simulate_walkers(g: ColoredGraph, cfg: WalkerConfig) -> TransitionDataset:
    """Run ``cfg.n_walkers`` walkers; one dataset row per step.

    Metadata columns: ``walker_color``, ``majority`` (color majority over
    visited nodes including the current one, before the step; ``draw`` on a
    tie), ``shade`` and ``matrix`` (the generating matrix actually used).
    """
    sampler = _Sampler(g)
    space = StateSpace(g.state_names())
    src, dst, seq, pos = [], [], [], []
    meta = {"walker_color": [], "majority": [], "shade": [], "matrix": []}
    for w in range(cfg.n_walkers):
        rec = _walk(g, cfg, sampler, w)
        src.extend(rec.nodes[:-1])
        dst.extend(rec.nodes[1:])
        seq.extend([f"w{w}"] * cfg.n_steps)
        pos.extend(range(cfg.n_steps))
        meta["walker_color"].extend([rec.color] * cfg.n_steps)
        meta["majority"].extend(rec.majority)
        meta["shade"].extend([repr(rec.shade)] * cfg.n_steps)
        meta["matrix"].extend(rec.matrix)
    return TransitionDataset(space, src, dst, seq, pos, meta)


def default_hypotheses(scenario: str) -> tuple[str, ...]:
    if scenario == "violet":
        return ("link", "link-color", "mem", "violet", "violet-naive")
    return ("link", "link-color", "color", "mem")


def paper_hypotheses(g: ColoredGraph, d: TransitionDataset, names: Sequence[str]) -> list[Hypothesis]:
    """Hypotheses of the synthetic studies, built on the generating matrices."""
    thetas = {v: build_theta(g, v).belief() for v in VARIANTS}
    m = len(d)

    def need(col):
        if col not in d.metadata:
            raise ValueError(f"dataset lacks metadata column {col!r}")
        return d.metadata[col]

    out = []
    for name in names:
        if name == "link":
            h = Hypothesis.homogeneous(name, m, thetas[LINK])
        elif name in ("color", "link-color"):
            gamma = GroupAssignmentProbabilities.from_labels(need("walker_color"), (RED, BLUE))
            phis = (thetas[RED], thetas[BLUE]) if name == "color" else (
                thetas[LINK].relabel(RED), thetas[LINK].relabel(BLUE))
            h = Hypothesis(name, gamma, phis)
        elif name == "mem":
            gamma = GroupAssignmentProbabilities.from_labels(need("majority"), (RED, BLUE, DRAW))
            h = Hypothesis(name, gamma, (thetas[RED], thetas[BLUE], thetas[LINK].relabel(DRAW)))
        elif name in ("violet", "violet-naive"):
            s = np.asarray(need("shade"), dtype=np.float64)
            gamma = GroupAssignmentProbabilities((RED, BLUE), np.column_stack([s, 1.0 - s]))
            h = Hypothesis(name, gamma, (thetas[RED], thetas[BLUE]), naive_elicitation=name == "violet-naive")
        else:
            raise ValueError(f"unknown hypothesis {name!r}; expected one of {HYPOTHESES}")
        out.append(h)
    return out

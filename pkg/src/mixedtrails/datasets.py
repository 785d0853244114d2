"""Bundled fixtures."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .core import Hypothesis, TransitionDataset
from .io import load_hypothesis, load_transitions


def soccer_dir() -> Path:
    """Folder holding the soccer pass/shot fixture and its hypothesis specs."""
    return Path(str(resources.files("mixedtrails") / "data" / "soccer"))


def load_soccer() -> tuple[TransitionDataset, dict[str, Hypothesis]]:
    """The 160 passes and shots of the soccer example, plus every hypothesis spec.

    States are players ``1``-``4`` and the goal ``5``. Metadata column
    ``half`` splits the match into halves; ``random`` is a fixed coin-flip
    split used as a meaningless grouping.
    """
    root = soccer_dir()
    d = load_transitions(root / "transitions.tsv")
    hyps = {p.stem: load_hypothesis(p, d) for p in sorted(root.glob("*.json"))}
    return d, hyps

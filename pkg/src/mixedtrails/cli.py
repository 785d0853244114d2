"""Command-line entry point: ``mixedtrails {compare,generate,plot}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from . import io as mio
from .core import validate_hypothesis
from .elicitation import DEFAULT_KAPPAS
from .evidence import DEFAULT_ENUMERATION_CAP, DEFAULT_SAMPLES, evidence_curve
from .plot import render_svg
from .synthgen import (
    SCENARIOS, WalkerConfig, build_theta, default_hypotheses, generate_ba_graph, paper_hypotheses,
    simulate_walkers,
)

log = logging.getLogger("mixedtrails")

EXIT_VALIDATION = 2
EXIT_IO = 3
SEED_ENV = "MIXEDTRAILS_SEED"


class ValidationFailure(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ValidationFailure(f"{SEED_ENV}={raw!r} is not an integer") from None


def parse_kappas(text: str) -> list[float]:
    if text.strip().lower() == "grid":
        return [float(k) for k in DEFAULT_KAPPAS]
    try:
        ks = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValidationFailure(f"--kappas: cannot parse {text!r}") from None
    if not ks:
        raise ValidationFailure("--kappas: no values given")
    if any(k < 0 for k in ks) or len(set(ks)) != len(ks):
        raise ValidationFailure("--kappas: values must be distinct and >= 0")
    return ks


def cmd_compare(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    kappas = parse_kappas(args.kappas)
    states = mio.load_states(args.states) if args.states else None
    d = mio.load_transitions(args.data, states)
    hyps = [mio.load_hypothesis(p, d) for p in args.hypothesis]
    names = [h.name for h in hyps]
    if len(set(names)) != len(names):
        raise ValidationFailure(f"hypothesis names must be unique, got {names}")
    report = []
    for h in hyps:
        report += [f"{h.name}: {msg}" for msg in validate_hypothesis(h, d)]
    if report:
        raise ValidationFailure("\n".join(report))

    def run(h):
        log.info("evaluating %s", h.name)
        return evidence_curve(d, h, kappas, n_samples=args.samples, seed=seed, exact=args.exact_cap > 0,
                              exact_cap=args.exact_cap, jobs=1)

    if args.jobs > 1 and len(hyps) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            curves = list(pool.map(run, hyps))
    else:
        curves = [run(h) for h in hyps]
    if args.out:
        mio.write_results(curves, args.out)
    else:
        sys.stdout.write(mio.format_results(curves))
    return 0


def _spec(name, groups, gamma, phi, naive=False):
    spec = {"name": name, "groups": groups, "gamma": gamma, "phi": phi}
    if naive:
        spec["naive_elicitation"] = True
    return spec


def cmd_generate(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    try:
        cfg = WalkerConfig(args.scenario, args.walkers, args.steps, seed)
        g = generate_ba_graph(args.nodes, args.attach, args.p_red, seed)
    except ValueError as e:
        raise ValidationFailure(str(e)) from None
    d = simulate_walkers(g, cfg)
    out = Path(args.outdir)
    mio.write_states(d.space, out / "states.txt")
    mio.write_transitions(d, out / "transitions.tsv")
    with mio.atomic_write(out / "nodes.tsv") as f:
        f.write("state\tcolor\n")
        for s, c in zip(d.space.states, g.node_color):
            f.write(f"{s}\t{c}\n")
    for v in ("link", "red", "blue"):
        mio.write_belief_matrix(build_theta(g, v).theta, d.space, out / f"theta_{v}.tsv")
    link = {"file": "theta_link.tsv"}
    red = {"file": "theta_red.tsv"}
    blue = {"file": "theta_blue.tsv"}
    specs = {
        "link": _spec("link", ["all"], "single", [link]),
        "link-color": _spec("link-color", ["red", "blue"], {"column": "walker_color"}, [link, link]),
        "color": _spec("color", ["red", "blue"], {"column": "walker_color"}, [red, blue]),
        "mem": _spec("mem", ["red", "blue", "draw"], {"column": "majority"}, [red, blue, link]),
        "violet": _spec("violet", ["red", "blue"], {"file": "gamma_violet.tsv"}, [red, blue]),
        "violet-naive": _spec("violet-naive", ["red", "blue"], {"file": "gamma_violet.tsv"}, [red, blue], True),
    }
    names = default_hypotheses(args.scenario)
    if "violet" in names:
        gamma = paper_hypotheses(g, d, ["violet"])[0].gamma
        mio.write_gamma(gamma, out / "gamma_violet.tsv")
    for name in names:
        mio.write_hypothesis_spec(out / f"hyp_{name}.json", specs[name])
    log.info("wrote %d transitions and %d hypothesis specs to %s", len(d), len(names), out)
    return 0


def cmd_plot(args) -> int:
    curves = mio.read_results(args.inp)
    try:
        svg = render_svg(curves, log_x=args.log_x, title=args.title or "")
    except ValueError as e:
        raise ValidationFailure(str(e)) from None
    with mio.atomic_write(args.out) as f:
        f.write(svg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixedtrails",
                                description="Compare hypotheses about heterogeneous sequence data.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compare", help="evidence curves of hypotheses on a transition dataset")
    c.add_argument("--data", required=True)
    c.add_argument("--hypothesis", action="append", required=True, help="hypothesis spec (repeatable)")
    c.add_argument("--kappas", default="grid", help='comma-separated list or "grid"')
    c.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    c.add_argument("--seed", type=int, default=None, help=f"defaults to ${SEED_ENV} or 0")
    c.add_argument("--exact-cap", type=int, default=DEFAULT_ENUMERATION_CAP,
                   help="enumerate exactly when at most this many group assignments exist (0 disables)")
    c.add_argument("--states", default=None, help="file listing the state space, one per line")
    c.add_argument("--out", default=None)
    c.add_argument("--jobs", type=int, default=1)
    c.set_defaults(func=cmd_compare)

    gen = sub.add_parser("generate", help="synthetic walker dataset plus matching hypotheses")
    gen.add_argument("--scenario", choices=SCENARIOS, required=True)
    gen.add_argument("--nodes", type=int, default=100)
    gen.add_argument("--attach", type=int, default=10)
    gen.add_argument("--walkers", type=int, default=10_000)
    gen.add_argument("--steps", type=int, default=10)
    gen.add_argument("--p-red", type=float, default=0.5)
    gen.add_argument("--seed", type=int, default=None, help=f"defaults to ${SEED_ENV} or 0")
    gen.add_argument("--outdir", required=True)
    gen.set_defaults(func=cmd_generate)

    pl = sub.add_parser("plot", help="render a results CSV as SVG")
    pl.add_argument("--in", dest="inp", required=True)
    pl.add_argument("--out", required=True)
    pl.add_argument("--log-x", action="store_true")
    pl.add_argument("--title", default=None)
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if getattr(args, "samples", 1) < 1 or getattr(args, "jobs", 1) < 1:
        print("error: --samples and --jobs must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return args.func(args)
    except (ValidationFailure, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

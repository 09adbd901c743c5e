"""Command-line interface: ``weakmodels <subcommand> MODEL [options]``.

Exit status is 0 on success, 1 on domain errors (one-line diagnostic on
stderr) and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import __version__
from .experiments import (
    ReconConfig,
    emit_curve,
    estimate_conditional_entropy_rate,
    fit_exponential_decay,
    run_reconstruction_experiment,
)
from .markov import (
    attach_probabilities,
    mean_absorption_times,
    mean_first_passage,
    mean_recurrence_time,
    stationary_distribution,
)
from .model import WeakModel, WeakModelError, parse_model, serialize_model, to_single_colored
from .structure import (
    ForkWitness,
    IntersectingCyclePair,
    classify_nodes,
    classify_trackability,
    hypothesis_bound,
)
from .tracking import enumerate_hypotheses, hypothesis_count, track, worst_case_growth


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return format(x, ".12g")


def _join(nodes) -> str:
    return ",".join(nodes)


def _load(path: str) -> WeakModel:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def _emit(lines: list[tuple[str, object]], machine: bool) -> None:
    for key, value in lines:
        if machine:
            print(f"{key}={value}")
        else:
            print(f"{key:<22} {value}")


def _chain(model: WeakModel):
    if not model.has_probabilities:
        raise WeakModelError("model file carries no edge probabilities")
    return attach_probabilities(model)


# -- subcommands ----------------------------------------------------------------


def cmd_analyze(args) -> int:
    model = _load(args.model)
    report = classify_trackability(model)
    nodes = classify_nodes(model)
    bound = hypothesis_bound(model)
    lines: list[tuple[str, object]] = [("regime", report.regime.value)]
    w = report.witness
    if isinstance(w, IntersectingCyclePair):
        lines += [("witness", "cycle_pair"), ("witness_first", _join(w.first)),
                  ("witness_second", _join(w.second))]
    elif isinstance(w, ForkWitness):
        lines += [("witness", "fork"), ("witness_pi1", _join(w.pi1)),
                  ("witness_pi2", _join(w.pi2)), ("witness_pi3", _join(w.pi3))]
    else:
        lines.append(("witness", "none"))
    lines.append(("strongly_connected", str(nodes.strongly_connected).lower()))
    lines.append(("recurrent_classes", len(nodes.recurrent_classes)))
    order = model.index
    for i, cls in enumerate(nodes.recurrent_classes, start=1):
        lines.append((f"class_{i}", _join(sorted(cls, key=order.get))))
        lines.append((f"period_{i}", nodes.period[cls]))
    lines.append(("transient", _join(sorted(nodes.transient, key=order.get)) or "-"))
    lines.append(("K", bound.K))
    lines += [(f"M_{v}", m) for v, m in bound.M.items()]
    lines += [("bound_known_start", bound.bound_known_start),
              ("bound_unknown_start", bound.bound_unknown_start),
              ("bounds_applicable", str(bound.applicable).lower())]
    _emit(lines, args.machine)
    return 0


def cmd_transform(args) -> int:
    single, _ = to_single_colored(_load(args.model))
    text = serialize_model(single)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _single(model: WeakModel, start: Optional[str]):
    """Single-colored model plus a way back to original ids."""
    if model.is_single_colored:
        return model, start, (lambda seq: seq)
    single, mapping = to_single_colored(model)
    if start is not None:
        if start not in model.index:
            raise WeakModelError(f"unknown start node {start!r}")
        if len(mapping.forward[start]) != 1:
            raise WeakModelError(f"start node {start!r} is multi-colored")
        start = mapping.forward[start][0]
    return single, start, mapping.to_original


def cmd_track(args) -> int:
    model, start, back = _single(_load(args.model), args.start)
    colors = [c for c in args.colors.split(",") if c]
    trellis = track(model, colors, start)
    print(f"count={hypothesis_count(trellis)}")
    if args.enumerate:
        result = enumerate_hypotheses(trellis, args.enumerate)
        for seq in result.sequences:
            print(f"hypothesis={_join(back(seq))}")
        print(f"truncated={str(result.truncated).lower()}")
    return 0


def cmd_growth(args) -> int:
    model, start, _ = _single(_load(args.model), args.start)
    profile = worst_case_growth(model, args.t_max, start)
    for t, (n, seq) in enumerate(zip(profile.n, profile.argmax_sequences), start=1):
        print(f"t={t} n={n} argmax={_join(seq) or '-'}")
    return 0


def cmd_bound(args) -> int:
    bound = hypothesis_bound(_load(args.model))
    lines: list[tuple[str, object]] = [("K", bound.K)]
    lines += [(f"M_{v}", m) for v, m in bound.M.items()]
    lines += [("bound_known_start", bound.bound_known_start),
              ("bound_unknown_start", bound.bound_unknown_start),
              ("strongly_connected", str(bound.strongly_connected).lower()),
              ("regime", bound.regime.value),
              ("bounds_applicable", str(bound.applicable).lower())]
    _emit(lines, args.machine)
    return 0


def cmd_mc(args) -> int:
    chain = _chain(_load(args.model))
    show_all = not (args.stationary or args.absorption or args.recurrence or args.first_passage)
    if args.stationary or show_all:
        for cls in chain.classification.recurrent_classes:
            for node, p in stationary_distribution(chain, cls).items():
                print(f"pi({node})={_fmt(p)}")
    if args.absorption or show_all:
        for node, mu in mean_absorption_times(chain).values.items():
            print(f"mu({node})={_fmt(mu)}")
    if args.first_passage:
        timing = mean_first_passage(chain, args.first_passage, args.within_class)
        for node, t in timing.values.items():
            print(f"t({node})={_fmt(t)}")
    if args.recurrence:
        print(f"t*={_fmt(mean_recurrence_time(chain, args.recurrence, args.within_class))}")
    return 0


def cmd_simulate_recon(args) -> int:
    chain = _chain(_load(args.model))
    start = args.start or chain.model.start or chain.model.nodes[0]
    config = ReconConfig(chain, start, args.traversals, args.steps, args.seed,
                         args.beta_max, args.threads)
    curve = run_reconstruction_experiment(config)
    if args.out:
        emit_curve(curve, args.out)
    print(f"alpha_0={_fmt(curve.alpha[0])}")
    fit = fit_exponential_decay(curve)
    print(f"A={_fmt(fit.A)}")
    print(f"tau={_fmt(fit.tau)}")
    return 0


def cmd_entropy(args) -> int:
    chain = _chain(_load(args.model))
    start = args.start or chain.model.start
    est = estimate_conditional_entropy_rate(chain, start, args.T, args.samples,
                                            args.seed, args.threads)
    if args.out:
        emit_curve(est, args.out)
    print(f"bits_per_step={_fmt(est.bits_per_step)}")
    print(f"stderr={_fmt(est.stderr)}")
    print(f"identity_bits_per_step={_fmt(est.identity_bits_per_step)}")
    print(f"identity_stderr={_fmt(est.identity_stderr)}")
    return 0


# -- parser -------------------------------------------------------------------------


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="weakmodels", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="regime, witness, node classes and hypothesis bounds")
    p.add_argument("model")
    p.add_argument("--machine", action="store_true", help="key=value output")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("transform", help="split multi-colored nodes; print the .wm result")
    p.add_argument("model")
    p.add_argument("--out")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("track", help="count (and list) hypotheses for a color sequence")
    p.add_argument("model")
    p.add_argument("--colors", required=True, help="comma-separated, e.g. B,R,B")
    p.add_argument("--start")
    p.add_argument("--enumerate", type=_positive, metavar="N")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("growth", help="worst-case hypothesis counts n_G(1..t_max)")
    p.add_argument("model")
    p.add_argument("--t-max", type=_positive, default=8)
    p.add_argument("--start")
    p.set_defaults(func=cmd_growth)

    p = sub.add_parser("bound", help="K, M_v and the hypothesis-set bounds")
    p.add_argument("model")
    p.add_argument("--machine", action="store_true")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("mc", help="Markov-chain timing quantities")
    p.add_argument("model")
    p.add_argument("--stationary", action="store_true")
    p.add_argument("--absorption", action="store_true")
    p.add_argument("--recurrence", metavar="NODE")
    p.add_argument("--first-passage", metavar="NODE")
    p.add_argument("--within-class", action="store_true",
                   help="restrict passage times to the node's recurrent class")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("simulate-recon", help="Viterbi reconstruction accuracy vs lag")
    p.add_argument("model")
    p.add_argument("--start")
    p.add_argument("--traversals", type=_positive, default=10000)
    p.add_argument("--steps", type=_positive, default=200)
    p.add_argument("--beta-max", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate_recon)

    p = sub.add_parser("entropy", help="conditional entropy rate estimate")
    p.add_argument("model")
    p.add_argument("--start")
    p.add_argument("--T", type=_positive, default=5000)
    p.add_argument("--samples", type=_positive, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_entropy)
    return parser


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (WeakModelError, OSError) as exc:
        message = " ".join(str(exc).split())
        print(f"error: {message}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())

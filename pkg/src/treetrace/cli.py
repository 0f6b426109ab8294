"""Command-line harness.

Subcommands: gen, trace, recon, enumerate, experiment, search, verify.
Spec files for `experiment` and `search` are flat key=value text, one key
per line, with keys named after the flags.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import channels, harness, instances, string_recon, tree_recon, trees
from .trees import SymbolString


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--model", choices=channels.MODELS, default="ted")
    p.add_argument("--q", type=float, default=0.1)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--traces", default="64",
                   help="trace count; a comma-separated grid for `experiment`; "
                        "the deletion count k for `enumerate --model lp`")
    p.add_argument("--family", choices=instances.FAMILIES, default="random")
    p.add_argument("--out", default=None)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--level", choices=["quick", "full"], default="quick")


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _instance_rng(seed: int):
    return harness.trial_rng(seed, 0, 0)


def make_instance(family: str, n: int, seed: int, q: float, delta: float,
                  planned_traces: int):
    """Instance for a family: (public knowledge, hidden truth, tree to trace).

    The hidden part is what a reconstruction has to recover; the public part
    is what the decoder may use.  Regenerating with the same arguments gives
    the same instance, which is how `trace` and `recon` stay in sync.
    """
    rng = _instance_rng(seed)
    if family == "path":
        # The bare construction A_n; experiment trials label it per trial.
        tree = instances.path_tree(n)
        return {"topology": tree}, tree, tree
    if family == "forked":
        tree = instances.forked_tree(n)
        return {}, tree, tree
    if family == "random":
        topo = instances.random_tree(n, rng)
        truth = instances.random_labels(topo, rng)
        return {"topology": topo}, truth, truth
    if family == "fuzzy":
        m = instances.fuzzy_degree(n, planned_traces, delta, q)
        truth = instances.random_fuzzy_tree(n, m, rng)
        return {"m": m}, truth, truth
    if family == "encoded":
        ell = instances.buffer_length(delta, planned_traces, q)
        rng_bits = rng.integers(0, 2, size=n)
        s = SymbolString("".join(str(int(b)) for b in rng_bits), "01")
        inst = instances.encode_string_as_tree(s, ell)
        return {"ell": ell}, s, inst.tree
    raise harness.UnknownFamilyError(family)


def _cmd_gen(args) -> int:
    _, _, tree = make_instance(args.family, args.n, args.seed, args.q,
                               args.delta, int(args.traces))
    _emit(trees.format_tree(tree) + "\n", args.out)
    return 0


def _cmd_trace(args) -> int:
    count = int(args.traces)
    rng = harness.trial_rng(args.seed, 1, 0)
    if args.model == "string":
        _, truth, _ = make_instance("random", args.n, args.seed, args.q,
                                    args.delta, count)
        if args.family != "random":
            print("model=string uses family=random", file=sys.stderr)
            return 2
        s = truth if isinstance(truth, SymbolString) else trees.preorder_label_string(truth)
        lines = [str(channels.string_trace(s, args.q, rng)) for _ in range(count)]
    else:
        _, _, tree = make_instance(args.family, args.n, args.seed, args.q,
                                   args.delta, count)
        sampler = channels.ted_trace if args.model == "ted" else channels.lp_trace
        lines = [trees.format_tree(sampler(tree, args.q, rng)) for _ in range(count)]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_recon(args) -> int:
    text = Path(args.tracefile).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    public, _, _ = make_instance(args.family, args.n, args.seed, args.q,
                                 args.delta, max(len(lines), 1))
    if args.model == "string":
        traces = [SymbolString(ln) for ln in lines]
        got = string_recon.ml_reconstruct(traces, args.n, args.q)
        _emit(str(got) + "\n", args.out)
        return 0
    traces = [trees.parse_tree(ln) for ln in lines]
    if args.family in ("path", "random"):
        got = tree_recon.reconstruct_labels_known_topology(
            public["topology"], traces, args.q
        )
        _emit(trees.format_tree(got) + "\n", args.out)
    elif args.family == "fuzzy":
        got = tree_recon.reconstruct_fuzzy(traces, args.n, public["m"], args.q)
        _emit(trees.format_tree(got) + "\n", args.out)
    elif args.family == "encoded":
        got = tree_recon.reconstruct_encoded(traces, args.n, public["ell"], args.q)
        _emit(str(got) + "\n", args.out)
    else:
        print(f"no reconstruction pipeline for family={args.family}", file=sys.stderr)
        return 2
    return 0


def _cmd_enumerate(args) -> int:
    _, _, tree = make_instance(args.family, args.n, args.seed, args.q,
                               args.delta, int(args.traces))
    if args.model == "lp":
        k = int(args.traces)
        out = sorted(t.canonical() for t in channels.lp_trace_set(tree, k))
        _emit("\n".join(out) + "\n", args.out)
    elif args.model == "ted":
        dist = channels.ted_trace_distribution(tree, args.q)
        lines = [
            f"{prob!r}\t{key}"
            for key, prob in sorted(dist.items(), key=lambda kv: (-kv[1], kv[0]))
        ]
        _emit("\n".join(lines) + "\n", args.out)
    else:
        print("enumerate expects --model lp or ted", file=sys.stderr)
        return 2
    return 0


def load_spec_file(path: str) -> dict[str, str]:
    """Flat key=value text, one key per line; blank lines ignored."""
    out: dict[str, str] = {}
    for i, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{i}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _merge_spec_file(args, parser: argparse.ArgumentParser):
    """Spec-file values fill in flags the user left at their defaults."""
    if not getattr(args, "specfile", None):
        return
    values = load_spec_file(args.specfile)
    defaults = {a.dest: a.default for a in parser._actions}
    casts = {"q": float, "n": int, "seed": int, "trials": int, "delta": float}
    for key, raw in values.items():
        if not hasattr(args, key):
            raise ValueError(f"unknown spec key {key!r}")
        if getattr(args, key) == defaults.get(key):
            setattr(args, key, casts.get(key, str)(raw))


def _cmd_experiment(args) -> int:
    grid = tuple(int(x) for x in str(args.traces).split(","))
    spec = harness.ExperimentSpec(
        family=args.family, n=args.n, q=args.q, model=args.model,
        trace_grid=grid, trials=args.trials, delta=args.delta,
        master_seed=args.seed, out=args.out,
    )
    rows = harness.run_experiment(spec, timing=args.timing)
    if not args.out:
        sys.stdout.write(harness.rows_to_csv(rows))
    return 0


def _cmd_search(args) -> int:
    target = 1.0 - args.delta
    try:
        found = harness.doubling_search(
            family=args.family, n=args.n, q=args.q, model=args.model,
            target_rate=target, trials=args.trials, delta=args.delta,
            master_seed=args.seed,
        )
    except harness.BudgetExceededError as exc:
        print(f"budget-exceeded: {exc}", file=sys.stderr)
        return 3
    _emit(f"{found}\n", args.out)
    return 0


def _cmd_verify(args) -> int:
    ok, results = harness.verify_suite(args.level)
    width = max(len(name) for name, _, _ in results)
    lines = []
    for name, passed, detail in results:
        status = "PASS" if passed else "FAIL"
        lines.append(f"{name:<{width}}  {status}  {detail}")
    lines.append(f"{'overall':<{width}}  {'PASS' if ok else 'FAIL'}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treetrace",
        description="Tree trace reconstruction experiments under node-deletion channels",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "gen": (_cmd_gen, "emit an instance as tree text"),
        "trace": (_cmd_trace, "sample traces to a file, one per line"),
        "recon": (_cmd_recon, "run a reconstruction pipeline on a trace file"),
        "enumerate": (_cmd_enumerate, "print lp_trace_set / ted_trace_distribution"),
        "experiment": (_cmd_experiment, "run an experiment sweep, emit CSV"),
        "search": (_cmd_search, "doubling search for the trace budget"),
        "verify": (_cmd_verify, "run the property-check battery"),
    }
    parsers = {}
    for name, (fn, help_text) in specs.items():
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        p.set_defaults(fn=fn, _parser=p)
        parsers[name] = p
    parsers["recon"].add_argument("tracefile", help="file of traces, one per line")
    parsers["experiment"].add_argument("specfile", nargs="?", default=None,
                                       help="flat key=value spec file")
    parsers["experiment"].add_argument("--timing", action="store_true",
                                       help="record wall times (breaks byte reproducibility)")
    parsers["search"].add_argument("specfile", nargs="?", default=None,
                                   help="flat key=value spec file")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "specfile"):
        _merge_spec_file(args, args._parser)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())

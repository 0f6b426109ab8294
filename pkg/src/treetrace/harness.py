"""Reproducible experiment runner: trials, sweeps, doubling search, verification.

Seed discipline: every trial draws from its own generator, seeded by the
64-bit FNV-1a hash of the text "master:grid:trial" (decimal renderings).
The generator is numpy's PCG64, so any run of the same spec reproduces the
same streams regardless of execution order or parallelism.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import channels, instances, string_recon, tree_recon, trees
from .trees import SymbolString, Tree

CSV_HEADER = "experiment,family,n,q,model,traces,trials,successes,rate,wall_time_ms,seed"
SEARCH_BUDGET_CAP = 2**20


class UnknownFamilyError(ValueError):
    """No experiment is defined for this family/model combination."""


class BudgetExceededError(RuntimeError):
    """The doubling search passed the trace budget cap without hitting the target."""


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a over the ASCII bytes of text."""
    h = 0xCBF29CE484222325
    for b in text.encode("ascii"):
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def trial_seed(master_seed: int, grid_index: int, trial_index: int) -> int:
    return fnv1a64(f"{master_seed}:{grid_index}:{trial_index}")


def trial_rng(master_seed: int, grid_index: int, trial_index: int):
    return np.random.Generator(np.random.PCG64(trial_seed(master_seed, grid_index, trial_index)))


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: a family, a channel, a trace-count grid, trials per point."""

    family: str
    n: int
    q: float
    model: str
    trace_grid: tuple[int, ...]
    trials: int
    delta: float = 0.05
    master_seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if self.family not in instances.FAMILIES:
            raise UnknownFamilyError(f"unknown family {self.family!r}")
        if self.model not in channels.MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        grid = tuple(self.trace_grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("trace_grid must be nonempty and strictly ascending")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        object.__setattr__(self, "trace_grid", grid)

    @property
    def experiment_id(self) -> str:
        return f"{self.family}-{self.model}-n{self.n}-q{self.q!r}"


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    family: str
    n: int
    q: float
    model: str
    traces: int
    trials: int
    successes: int
    rate: float
    wall_time_ms: int
    seed: int

    def __post_init__(self):
        if self.successes > self.trials:
            raise ValueError("successes cannot exceed trials")
        if self.rate != self.successes / self.trials:
            raise ValueError("rate must equal successes / trials")

    def as_csv(self) -> str:
        return ",".join(
            [
                self.experiment,
                self.family,
                str(self.n),
                repr(self.q),
                self.model,
                str(self.traces),
                str(self.trials),
                str(self.successes),
                repr(self.rate),
                str(self.wall_time_ms),
                str(self.seed),
            ]
        )


def _sample_tree_traces(tree: Tree, model: str, q: float, count: int, rng) -> list[Tree]:
    sampler = channels.ted_trace if model == "ted" else channels.lp_trace
    return [sampler(tree, q, rng) for _ in range(count)]


def _has_branching(t: Tree) -> bool:
    return any(len(t.children_of(v)) >= 2 for v in t.nodes)


_RECON_FAILURES = (
    string_recon.InconsistentTracesError,
    tree_recon.ReconstructionFailedError,
    tree_recon.MergeError,
    tree_recon.UndecidedPositionsError,
)


def _random_bits(n: int, rng) -> SymbolString:
    return SymbolString("".join(str(int(b)) for b in rng.integers(0, 2, size=n)), "01")


def run_trial(family: str, model: str, n: int, q: float, delta: float,
              n_traces: int, rng) -> bool:
    """One independent trial; success is exact recovery (or a correct guess)."""
    if family == "random" and model == "string":
        s = _random_bits(n, rng)
        traces = [channels.string_trace(s, q, rng) for _ in range(n_traces)]
        try:
            got = string_recon.ml_reconstruct(traces, n, q)
        except _RECON_FAILURES:
            return False
        return str(got) == str(s)

    if family in ("random", "path") and model in ("ted", "lp"):
        topology = (
            instances.random_tree(n, rng) if family == "random" else instances.path_tree(n)
        )
        truth = instances.random_labels(topology, rng)
        traces = _sample_tree_traces(truth, model, q, n_traces, rng)
        try:
            got = tree_recon.reconstruct_labels_known_topology(topology, traces, q)
        except _RECON_FAILURES:
            return False
        return trees.trees_equal(got, truth)

    if family == "forked" and model in ("ted", "lp"):
        # Distinguish A_n from B_n: only a branching trace reveals the fork.
        truth_is_fork = bool(rng.random() < 0.5)
        tree = instances.forked_tree(n) if truth_is_fork else instances.path_tree(n)
        traces = _sample_tree_traces(tree, model, q, n_traces, rng)
        guess_fork = any(_has_branching(tr) for tr in traces)
        return guess_fork == truth_is_fork

    if family == "fuzzy" and model == "ted":
        m = instances.fuzzy_degree(n, n_traces, delta, q)
        truth = instances.random_fuzzy_tree(n, m, rng)
        traces = [channels.ted_trace(truth, q, rng) for _ in range(n_traces)]
        try:
            got = tree_recon.reconstruct_fuzzy(traces, n, m, q)
        except _RECON_FAILURES:
            return False
        return trees.trees_equal(got, truth)

    if family == "encoded" and model == "ted":
        s = _random_bits(n, rng)
        ell = instances.buffer_length(delta, n_traces, q)
        inst = instances.encode_string_as_tree(s, ell)
        traces = [channels.ted_trace(inst.tree, q, rng) for _ in range(n_traces)]
        try:
            got = tree_recon.reconstruct_encoded(traces, n, ell, q)
        except _RECON_FAILURES:
            return False
        return str(got) == str(s)

    raise UnknownFamilyError(f"no experiment for family={family!r}, model={model!r}")


def run_experiment(spec: ExperimentSpec, timing: bool = False) -> list[ResultRow]:
    """Run the sweep; writes CSV to spec.out when set.

    wall_time_ms is 0 unless timing is requested: measured times would break
    the byte-identical reproducibility contract, so they are opt-in.
    """
    rows = []
    for gi, n_traces in enumerate(spec.trace_grid):
        start = time.perf_counter()
        successes = 0
        for ti in range(spec.trials):
            rng = trial_rng(spec.master_seed, gi, ti)
            if run_trial(spec.family, spec.model, spec.n, spec.q, spec.delta,
                         n_traces, rng):
                successes += 1
        elapsed_ms = int((time.perf_counter() - start) * 1000) if timing else 0
        rows.append(
            ResultRow(
                experiment=spec.experiment_id,
                family=spec.family,
                n=spec.n,
                q=spec.q,
                model=spec.model,
                traces=n_traces,
                trials=spec.trials,
                successes=successes,
                rate=successes / spec.trials,
                wall_time_ms=elapsed_ms,
                seed=spec.master_seed,
            )
        )
    if spec.out:
        Path(spec.out).write_text(rows_to_csv(rows))
    return rows


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    return "\n".join([CSV_HEADER] + [r.as_csv() for r in rows]) + "\n"


def doubling_search(
    family: str,
    n: int,
    q: float,
    model: str,
    target_rate: float,
    trials: int = 50,
    delta: float = 0.05,
    master_seed: int = 0,
    budget_cap: int = SEARCH_BUDGET_CAP,
) -> int:
    """Double the trace count from 1 until the empirical rate reaches the target.

    Grid index k seeds the trials of the 2^k point, so the result is a pure
    function of the arguments.  Raises BudgetExceededError past the cap.
    """
    if not 0.0 < target_rate < 1.0:
        raise ValueError("target rate must lie in (0, 1)")
    k = 0
    while (n_traces := 2**k) <= budget_cap:
        successes = 0
        for ti in range(trials):
            rng = trial_rng(master_seed, k, ti)
            if run_trial(family, model, n, q, delta, n_traces, rng):
                successes += 1
        if successes / trials >= target_rate:
            return n_traces
        k += 1
    raise BudgetExceededError(
        f"no trace count up to {budget_cap} reached rate {target_rate} "
        f"for {family}/{model} at n={n}, q={q}"
    )


def verify_suite(level: str = "quick"):
    """Run every registered property check; returns (all_passed, results)."""
    from . import verify

    results = list(verify.run_checks(level))
    return all(ok for _, ok, _ in results), results

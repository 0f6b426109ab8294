import math

import pytest

from treetrace.harness import (
    CSV_HEADER,
    BudgetExceededError,
    ExperimentSpec,
    ResultRow,
    UnknownFamilyError,
    doubling_search,
    fnv1a64,
    run_experiment,
    run_trial,
    trial_rng,
    trial_seed,
    verify_suite,
)
from conftest import make_rng


def test_fnv1a64_reference_values():
    # Standard FNV-1a 64 test vectors.
    assert fnv1a64("") == 0xCBF29CE484222325
    assert fnv1a64("a") == 0xAF63DC4C8601EC8C
    assert fnv1a64("foobar") == 0x85944171F73967E8


def test_trial_seed_is_stable():
    assert trial_seed(0, 0, 0) == fnv1a64("0:0:0")
    assert trial_seed(42, 3, 17) == fnv1a64("42:3:17")
    a = trial_rng(1, 2, 3).random(4)
    b = trial_rng(1, 2, 3).random(4)
    assert (a == b).all()


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec("random", 6, 0.1, "ted", (4, 2), 5)
    with pytest.raises(UnknownFamilyError):
        ExperimentSpec("bogus", 6, 0.1, "ted", (1,), 5)
    with pytest.raises(ValueError):
        ExperimentSpec("random", 6, 0.1, "ted", (1,), 0)


def test_result_row_validation():
    with pytest.raises(ValueError):
        ResultRow("e", "random", 6, 0.1, "ted", 1, 5, 6, 1.2, 0, 0)
    row = ResultRow("e", "random", 6, 0.1, "ted", 1, 5, 4, 0.8, 0, 0)
    assert row.as_csv().startswith("e,random,6,0.1,ted,1,5,4,0.8,")


def test_run_experiment_q0_rate_one():
    spec = ExperimentSpec("random", 6, 0.0, "ted", (1,), 4, master_seed=5)
    rows = run_experiment(spec)
    assert rows[0].rate == 1.0


def test_run_experiment_deterministic_bytes(tmp_path):
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    for out in (out_a, out_b):
        spec = ExperimentSpec("random", 7, 0.15, "ted", (1, 2, 4), 6,
                              master_seed=11, out=str(out))
        run_experiment(spec)
    assert out_a.read_bytes() == out_b.read_bytes()
    header = out_a.read_text().splitlines()[0]
    assert header == CSV_HEADER
    assert CSV_HEADER == (
        "experiment,family,n,q,model,traces,trials,successes,rate,wall_time_ms,seed"
    )


def test_run_experiment_timing_opt_in():
    spec = ExperimentSpec("random", 6, 0.1, "ted", (4,), 3, master_seed=1)
    rows = run_experiment(spec)
    assert rows[0].wall_time_ms == 0
    timed = run_experiment(spec, timing=True)
    assert timed[0].wall_time_ms >= 0


def test_success_rate_non_decreasing_in_traces():
    spec = ExperimentSpec("random", 10, 0.1, "ted", (1, 4, 16, 64), 40,
                          master_seed=3)
    rows = run_experiment(spec)
    rates = [r.rate for r in rows]
    sigma = math.sqrt(0.25 / spec.trials)
    for lo, hi in zip(rates, rates[1:]):
        assert hi >= lo - 2 * sigma
    assert rates[-1] >= 0.9


def test_trial_families_cover_spec_matrix():
    rng = make_rng("families")
    for family, model in [
        ("random", "string"), ("random", "ted"), ("random", "lp"),
        ("path", "ted"), ("path", "lp"),
        ("forked", "ted"), ("forked", "lp"),
        ("fuzzy", "ted"), ("encoded", "ted"),
    ]:
        n = 12 if family == "fuzzy" else 6
        assert run_trial(family, model, n, 0.0, 0.05, 2, rng) in (True, False)
    with pytest.raises(UnknownFamilyError):
        run_trial("fuzzy", "lp", 12, 0.1, 0.05, 2, rng)


def test_doubling_search_q0_returns_one():
    assert doubling_search("random", 6, 0.0, "ted", target_rate=0.95,
                           trials=5, master_seed=2) == 1


def test_doubling_search_budget_exceeded():
    # A tiny cap forces the error path deterministically.
    with pytest.raises(BudgetExceededError):
        doubling_search("forked", 12, 0.5, "lp", target_rate=0.95,
                        trials=10, master_seed=2, budget_cap=4)


def test_doubling_search_reproducible():
    kwargs = dict(family="random", n=8, q=0.2, model="ted",
                  target_rate=0.9, trials=20, master_seed=9)
    assert doubling_search(**kwargs) == doubling_search(**kwargs)


def test_forked_distinguisher_needs_branch_evidence():
    # Under LP only the deletion-free trace of B_n branches, so at one trace
    # and large q the success rate sits near 1/2 + small.
    rng = make_rng("fork-lp")
    hits = sum(run_trial("forked", "lp", 10, 0.5, 0.05, 1, rng) for _ in range(400))
    assert 0.4 < hits / 400 < 0.65


def test_verify_suite_quick_passes():
    ok, results = verify_suite("quick")
    failing = [name for name, passed, _ in results if not passed]
    assert ok, f"failing properties: {failing}"


def test_verify_detects_mutated_splice_order():
    # A broken TED that splices children in reverse order must be caught by
    # the traversal-preservation property.
    from treetrace.verify import check_traversal_preservation
    from treetrace.trees import Node, Tree, preorder

    def mutated(t, deleted):
        dels = set(deleted)
        if not dels:
            return t
        expand = {}
        for v in reversed(preorder(t)):
            if v in dels:
                block = []
                for c in reversed(t.nodes[v].children):  # wrong order
                    block.extend(expand[c])
                expand[v] = block
            else:
                expand[v] = [v]
        nodes = {}
        stack = [(t.root, None)]
        while stack:
            v, par = stack.pop()
            kids = []
            for c in t.nodes[v].children:
                kids.extend(expand[c])
            nodes[v] = Node(t.nodes[v].label, tuple(kids), par)
            stack.extend((c, v) for c in kids)
        return Tree(nodes, t.root, validate=False)

    ok, detail = check_traversal_preservation(max_n=5, ted_apply_fn=mutated)
    assert not ok

"""Exit criteria, one test per criterion at its stated tolerance."""
import time

import numpy as np
from hypothesis import given, settings
from scipy.stats import spearmanr

from strategies import traces
from test_space import P0_2000, P1_1600, P2_2400
from tiletuner.cli import main
from tiletuner.harness import Budget, SyntheticObjective, optimum_config, run_tuning, synthetic_objective
from tiletuner.kernels import KernelCase, gen_spd, residual
from tiletuner.persist import best_of, parse_trace, render_trace
from tiletuner.space import (
    ParamSpace,
    ParamSpec,
    all_configs,
    build_space,
    divisor_candidates,
    encode_many,
    random_config,
    space_size,
)
from tiletuner.surrogate import fit_boosted, fit_forest, predict_boosted, predict_forest

SEEDS = range(20)
LU_LARGE = build_space("lu", "large")


def brute_values(space):
    return sorted(synthetic_objective(space, c) for c in all_configs(space))


def test_c1_space_exactness(criterion):
    t0 = time.perf_counter()
    table = {
        ("lu", "large"): 400, ("lu", "extralarge"): 576,
        ("cholesky", "large"): 400, ("cholesky", "extralarge"): 576,
        ("mm3", "large"): 74_649_600, ("mm3", "extralarge"): 228_614_400,
    }
    got = {k: space_size(build_space(*k)) for k in table}
    dt = time.perf_counter() - t0
    criterion["detail"] = f"sizes={list(got.values())} in {dt:.3f}s"
    assert got == table
    assert dt < 1.0


def test_c2_candidate_fidelity(criterion):
    criterion["detail"] = "divisors of 2000/1600/2400 vs listed sequences"
    assert divisor_candidates(2000) == P0_2000
    assert divisor_candidates(1600) == P1_1600
    assert divisor_candidates(2400) == P2_2400


def test_c3_kernel_correctness(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    checked = 0
    for kernel in ("lu", "cholesky"):
        a = gen_spd(64, 3)
        case = KernelCase.of(kernel, "mini", seed=3)
        for cfg in all_configs(build_space(kernel, "mini")):
            worst = max(worst, residual(kernel, (a,), case.run(cfg, (a,))))
            checked += 1
    rng = np.random.default_rng(0)
    for size in ("mini", "small"):
        case = KernelCase.of("mm3", size, seed=1)
        inputs = case.inputs()
        sp = build_space("mm3", size)
        for _ in range(30):
            worst = max(worst, residual("mm3", inputs, case.run(random_config(sp, rng), inputs)))
            checked += 1
    dt = time.perf_counter() - t0
    criterion["detail"] = f"{checked} configs, max residual {worst:.2e}, {dt:.1f}s"
    assert worst <= 1e-10
    assert dt < 60.0


def test_c4_exhaustive_oracle(criterion):
    tr = run_tuning("grid", LU_LARGE, SyntheticObjective(LU_LARGE), Budget(10_000))
    cfg, rt = best_of(tr)
    star = optimum_config(LU_LARGE)
    criterion["detail"] = f"{len(tr.records)} evals, best {cfg} = {rt!r}, c*={star}"
    assert len(tr.records) == 400
    assert cfg == star == (40, 40)
    assert rt == 1.0


def first_hit(trace, threshold):
    return next((r.eval_index for r in trace.records if r.runtime_s <= threshold), float("inf"))


def test_c5_tuner_quality(criterion):
    t0 = time.perf_counter()
    threshold = brute_values(LU_LARGE)[3]  # rank <= 4 of 400
    obj = SyntheticObjective(LU_LARGE)
    best = {"bayesopt": [], "random": []}
    hits = []
    for kind in best:
        for s in SEEDS:
            tr = run_tuning(kind, LU_LARGE, obj, Budget(100), s)
            best[kind].append(tr.records[-1].best_so_far_s)
            if kind == "bayesopt":
                hits.append(first_hit(tr, threshold))
    dt = time.perf_counter() - t0
    med_bo, med_rand, med_hit = (float(np.median(x)) for x in (best["bayesopt"], best["random"], hits))
    criterion["detail"] = (f"median best bo={med_bo:.4f} random={med_rand:.4f}; "
                           f"bo median first top-1% hit at {med_hit}; {dt:.1f}s")
    assert med_bo <= med_rand
    assert med_hit <= 60
    assert dt < 30.0


def test_c6_grid_is_worst(criterion):
    obj = SyntheticObjective(LU_LARGE)
    grid = [run_tuning("grid", LU_LARGE, obj, Budget(100), s).records[-1].best_so_far_s for s in SEEDS]
    bo = [run_tuning("bayesopt", LU_LARGE, obj, Budget(100), s).records[-1].best_so_far_s for s in SEEDS]
    criterion["detail"] = f"median best grid={np.median(grid):.4f} bayesopt={np.median(bo):.4f}"
    assert np.median(grid) >= np.median(bo)


def test_c7_surrogate_quality(criterion):
    cfgs = all_configs(LU_LARGE)
    X = encode_many(LU_LARGE, cfgs)
    y = np.log([synthetic_objective(LU_LARGE, c) for c in cfgs])
    rhos = []
    for seed in range(10):
        perm = np.random.default_rng(seed).permutation(len(cfgs))
        tr, te = perm[:100], perm[100:200]
        mean, _ = predict_forest(fit_forest(X[tr], y[tr], seed=seed), X[te])
        rhos.append(spearmanr(mean, y[te]).statistic)
    boosted = fit_boosted(X[:100], y[:100])
    monotone = all(b <= a for a, b in zip(boosted.train_rmse, boosted.train_rmse[1:]))
    f1, f2 = fit_forest(X[:100], y[:100], seed=5), fit_forest(X[:100], y[:100], seed=5)
    same_forest = all(a.same_structure(b) for a, b in zip(f1.trees, f2.trees))
    same_boost = np.array_equal(predict_boosted(boosted, X), predict_boosted(fit_boosted(X[:100], y[:100]), X))
    criterion["detail"] = (f"median spearman {np.median(rhos):.3f}; boosted rmse monotone={monotone}; "
                           f"deterministic={same_forest and same_boost}")
    assert np.median(rhos) >= 0.5
    assert monotone
    assert same_forest and same_boost


@settings(max_examples=1000, deadline=None)
@given(traces())
def _roundtrip(tr):
    assert parse_trace(render_trace(tr)) == tr


def test_c8_determinism_and_persistence(criterion, tmp_path):
    for kind in ("random", "grid", "genetic", "boosted", "bayesopt"):
        paths = []
        for rep in ("a", "b"):
            path = tmp_path / f"{kind}-{rep}.csv"
            assert main(["tune", "lu", "large", "--tuner", kind, "--seed", "7", "--synthetic",
                         "--reproducible", "--out", str(path)]) == 0
            paths.append(path.read_bytes())
        assert paths[0] == paths[1], kind
    _roundtrip()
    criterion["detail"] = "5 tuners byte-identical; 1000 randomized round trips"


def test_c9_budget_semantics(criterion):
    tiny = ParamSpace("lu", "tiny", (ParamSpec.for_axis("P0", 2), ParamSpec.for_axis("P1", 3)))
    for space in (tiny, build_space("lu", "mini"), LU_LARGE):
        for n in (1, 5, 49, 100, 500):
            for kind in ("grid", "bayesopt"):
                tr = run_tuning(kind, space, SyntheticObjective(space), Budget(n))
                assert len(tr.records) == min(n, space_size(space))

    def slow(c):
        time.sleep(0.002)
        return synthetic_objective(LU_LARGE, c)

    tr = run_tuning("random", LU_LARGE, slow, Budget(1000, max_seconds=0.01))
    past = sum(r.elapsed_s >= 0.01 for r in tr.records)
    criterion["detail"] = f"wall-clock 0.01s: {len(tr.records)} evals, {past} finished past the bound"
    assert past <= 1 and tr.records[-1].elapsed_s >= 0.01

"""Acceptance checks for the whole package.

Each test covers one end-to-end guarantee and prints a single summary line
with the measured numbers (visible with pytest -s or in failure output):

 1. the three rootpath routes agree on random trees within 1e-9 relative
 2. the all-pairs kernel matches exhaustive path-pair enumeration to 1e-12
 3. every catalogued kernel produces a PSD Gram matrix on a synthetic corpus
 4. normalization fixes the diagonal to 1 and refuses degenerate kernels
 5. a fully separated two-class dataset attains the permutation p-value floor
 6. permutation p-values are uniform under the null (KS distance <= 0.15)
 7. the mean-distance statistic matches an eigendecomposition oracle to 1e-9
 8. measured scaling: the linear fast route stays near-linear in node count
    while the naive route grows at least quadratically
 9. CLI runs are byte-for-byte reproducible and thread-count invariant
10. on the depth-localized attribute shift, attributed path kernels classify
    well while the tree-mean attribute baseline cannot
"""

import json
import time
import warnings

import numpy as np
import pytest

import treekern as tk
from treekern import (
    KERNEL_NAMES,
    NodeKernelSpec,
    PathKernelSpec,
    assemble,
    build_kernel,
    mean_distance_statistic,
    normalize,
    permutation_test,
    psd_check,
)
from treekern.cli import benchmark_kernel, fit_slope, main
from treekern.generate import GeneratorConfig, generate_two_class_population, preset_configs

from conftest import random_tree, rel_close


def report(line: str) -> None:
    print(f"[acceptance] {line}")


@pytest.fixture(scope="module")
def corpus():
    """30 small attributed synthetic trees shared by the Gram criteria."""
    cfg = GeneratorConfig(seed=5, n=3, d=1, p_branch=0.3, p_stop=0.1, max_depth=6)
    return [tk.generate_tree(cfg, k) for k in range(30)]


def test_01_rootpath_routes_agree():
    rng = np.random.default_rng(101)
    specs = [
        NodeKernelSpec(form="linear"),
        NodeKernelSpec(form="gaussian"),
        NodeKernelSpec(form="linear", use_attributes=True),
        NodeKernelSpec(form="gaussian", use_attributes=True),
    ]
    started = time.perf_counter()
    worst = 0.0
    checked = 0
    for trial in range(200):
        d = int(rng.integers(0, 3))
        t1 = random_tree(rng, 50, n=3, d=d, tree_id=f"a{trial}")
        t2 = random_tree(rng, 50, n=3, d=d, tree_id=f"b{trial}")
        for spec in specs:
            if spec.use_attributes and d == 0:
                continue
            path_spec = PathKernelSpec(representation="node_path", node=spec)
            naive = tk.rootpath_kernel_naive(t1, t2, path_spec)
            routes = [tk.rootpath_kernel_decomposed(t1, t2, spec)]
            if spec.form == "linear":
                routes.append(tk.rootpath_kernel_linear_fast(t1, t2, spec))
            for other in routes:
                deviation = abs(naive - other) / max(1.0, abs(naive), abs(other))
                worst = max(worst, deviation)
                checked += 1
                assert rel_close(naive, other, 1e-9), (spec, naive, other)
    elapsed = time.perf_counter() - started
    report(
        f"route agreement: {checked} comparisons over 200 random pairs, "
        f"max relative deviation {worst:.3e}, {elapsed:.1f}s"
    )
    assert elapsed < 60.0


def test_02_all_pairs_matches_enumeration():
    rng = np.random.default_rng(202)
    worst = 0.0
    for trial in range(100):
        d = int(rng.integers(0, 3))
        t1 = random_tree(rng, 8, n=2, d=d, tree_id=f"e{trial}a")
        t2 = random_tree(rng, 8, n=2, d=d, tree_id=f"e{trial}b")
        if trial % 2:
            spec = PathKernelSpec(
                representation="node_path",
                node=NodeKernelSpec(
                    form="gaussian" if trial % 4 == 1 else "linear",
                    use_attributes=bool(d and trial % 3 == 0),
                ),
            )
        else:
            spec = PathKernelSpec(
                representation="embedded_landmarks",
                form="gaussian" if trial % 4 == 0 else "linear",
                landmarks=4,
            )
        expected = 0.0
        for i1 in range(t1.size):
            for j1 in range(t1.size):
                for i2 in range(t2.size):
                    for j2 in range(t2.size):
                        if spec.representation == "node_path":
                            p1 = t1.node_path(i1, j1)
                            p2 = t2.node_path(i2, j2)
                            if len(p1) != len(p2):
                                continue
                            expected += sum(
                                tk.node_kernel(t1, u, t2, v, spec.node)
                                for u, v in zip(p1.nodes, p2.nodes)
                            )
                        else:
                            expected += tk.landmark_path_kernel(
                                tk.sample_embedded_path(t1, i1, j1, 4),
                                tk.sample_embedded_path(t2, i2, j2, 4),
                                spec,
                                n=2,
                            )
        got = tk.all_pairs_kernel(t1, t2, spec)
        deviation = abs(got - expected) / max(1.0, abs(got), abs(expected))
        worst = max(worst, deviation)
        assert rel_close(got, expected, 1e-12), (trial, got, expected)
    report(f"all-pairs enumeration: 100 instances, max relative deviation {worst:.3e}")


def test_03_all_kernels_psd(corpus):
    worst_name, worst_ratio = None, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name in KERNEL_NAMES:
            gram = assemble(corpus, build_kernel(name), threads=8)
            result = psd_check(gram, tol=1e-8)
            ratio = result.min_eig / max(abs(result.max_eig), 1.0)
            if ratio < worst_ratio:
                worst_name, worst_ratio = name, ratio
            assert result.is_psd, (name, result)
    report(
        f"PSD: all {len(KERNEL_NAMES)} kernels over {len(corpus)} trees, "
        f"worst min/max eigenvalue ratio {worst_ratio:.3e} ({worst_name})"
    )


def test_04_normalization_contract(corpus):
    names = ["rootpath-node", "rootpath-embedded", "sp", "wl", "gbc", "aaw", "agaw"]
    if all(t.size > 1 for t in corpus):
        names.append("pointcloud")
    worst = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name in names:
            gram = normalize(assemble(corpus, build_kernel(name), threads=8))
            worst = max(worst, float(np.max(np.abs(np.diag(gram.values) - 1.0))))
            assert worst <= 1e-12, name
    for degenerate in (build_kernel("lbc"), build_kernel("aaw", form="linear")):
        gram = assemble(corpus, degenerate, threads=8)
        with pytest.raises(ValueError, match="degenerate"):
            normalize(gram)
    report(
        f"normalization: diagonal within {worst:.3e} of 1 for {len(names)} kernels; "
        "both scalar linear kernels refused"
    )


def test_05_separated_classes_hit_p_value_floor():
    cfg_a, cfg_b = preset_configs("branch-shift", seed=3)
    trees, labels = generate_two_class_population(cfg_a, cfg_b, 30, 30)
    sizes = np.array([t.size for t in trees])
    assert sizes[labels == 0].max() < sizes[labels == 1].min()  # fully separated
    gram = assemble(trees, build_kernel("gbc"), threads=8)
    res = permutation_test(
        gram, np.flatnonzero(labels == 0), np.flatnonzero(labels == 1),
        n_permutations=10000, seed=0,
    )
    report(
        f"p-value floor: statistic {res.statistic:.4f}, "
        f"p = {res.p_value:.6e} with 10000 permutations"
    )
    assert res.p_value == 1.0 / 10001


def test_06_null_p_values_are_uniform():
    stats = pytest.importorskip("scipy.stats")
    pvals = []
    for rep in range(200):
        cfg_a, cfg_b = preset_configs("null", seed=1000 + rep)
        trees, labels = generate_two_class_population(cfg_a, cfg_b, 10, 10)
        gram = assemble(trees, build_kernel("gbc"), threads=1)
        res = permutation_test(
            gram, np.flatnonzero(labels == 0), np.flatnonzero(labels == 1),
            n_permutations=199, seed=rep,
        )
        pvals.append(res.p_value)
    ks = stats.kstest(pvals, "uniform").statistic
    report(f"null calibration: 200 tests, KS distance to uniform {ks:.4f}")
    assert ks <= 0.15


def test_07_statistic_matches_eigen_oracle():
    rng = np.random.default_rng(707)
    worst = 0.0
    for _ in range(20):
        size = int(rng.integers(4, 21))
        a = rng.standard_normal((size, size + 3))
        values = a @ a.T
        split = int(rng.integers(1, size))
        perm = rng.permutation(size)
        idx_a, idx_b = perm[:split], perm[split:]
        got = mean_distance_statistic(values, idx_a, idx_b)
        w, v = np.linalg.eigh(values)
        feats = v * np.sqrt(np.clip(w, 0.0, None))[None, :]
        want = float(np.linalg.norm(feats[idx_a].mean(axis=0) - feats[idx_b].mean(axis=0)))
        worst = max(worst, abs(got - want) / max(1.0, want))
        assert abs(got - want) <= 1e-9 * max(1.0, want)
    report(f"feature-space oracle: 20 random PSD matrices, max deviation {worst:.3e}")


def test_08_scaling_slopes():
    sizes = [50, 100, 200, 400, 800]
    started = time.perf_counter()
    fast_rows = benchmark_kernel("rootpath-node-linear-fast", sizes, repeats=2, seed=0)
    naive_rows = benchmark_kernel("rootpath-node-naive", sizes, repeats=2, seed=0)
    elapsed = time.perf_counter() - started
    fast_slope = fit_slope(fast_rows)
    naive_slope = fit_slope(naive_rows)
    report(
        f"scaling: fast route slope {fast_slope:.2f} (limit 1.3), "
        f"naive route slope {naive_slope:.2f} (floor 1.7), {elapsed:.0f}s"
    )
    assert elapsed < 300.0
    assert fast_slope <= 1.3
    assert naive_slope >= 1.7


def test_09_cli_reproducibility(tmp_path):
    def pipeline(root):
        root.mkdir()
        data = root / "data"
        gram = root / "gram.csv"
        result = root / "result.json"
        argv = ["gen", "--out", str(data), "--preset", "null", "--size", "12", "--seed", "9"]
        assert main(argv) == 0
        argv = [
            "kernel", str(data / "trees.json"), "--kernel", "rootpath-node",
            "--use-attributes", "--normalize", "--out", str(gram),
        ]
        assert main(argv) == 0
        argv = [
            "test", str(gram), str(data / "labels.csv"),
            "--permutations", "500", "--seed", "1", "--out", str(result),
        ]
        assert main(argv) == 0
        return {
            "trees": (data / "trees.json").read_bytes(),
            "labels": (data / "labels.csv").read_bytes(),
            "gram": gram.read_bytes(),
            "meta": (root / "gram.csv.meta.json").read_bytes(),
            "result": result.read_bytes(),
        }

    first = pipeline(tmp_path / "r1")
    second = pipeline(tmp_path / "r2")
    assert first == second

    # the worker count cannot change the written matrix either
    data = tmp_path / "r1" / "data"
    for threads, out in ((1, "t1.csv"), (8, "t8.csv")):
        argv = [
            "kernel", str(data / "trees.json"), "--kernel", "rootpath-node",
            "--use-attributes", "--normalize", "--threads", str(threads),
            "--out", str(tmp_path / out),
        ]
        assert main(argv) == 0
    assert (tmp_path / "t1.csv").read_bytes() == (tmp_path / "t8.csv").read_bytes()
    report("CLI reproducibility: two full runs byte-identical; threads 1 == threads 8")


def test_10_attribute_shift_separation():
    cfg_a, cfg_b = preset_configs("attr-shift", seed=7)
    trees, labels = generate_two_class_population(cfg_a, cfg_b, 80, 80)
    idx_a = np.flatnonzero(labels == 0)
    idx_b = np.flatnonzero(labels == 1)

    def holdout_accuracy(gram):
        accs = []
        for seed in range(5):
            rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
            train, test = {}, {}
            for key, idx in (("a", idx_a), ("b", idx_b)):
                shuffled = idx[rng.permutation(len(idx))]
                k = max(1, round(0.2 * len(idx)))
                test[key], train[key] = sorted(shuffled[:k]), sorted(shuffled[k:])
            query = list(test["a"]) + list(test["b"])
            truth = np.array([0] * len(test["a"]) + [1] * len(test["b"]))
            pred = tk.nearest_mean_classify(gram, train["a"], train["b"], query)
            accs.append(float((pred == truth).mean()))
        return float(np.mean(accs))

    attributed = normalize(
        assemble(
            trees,
            build_kernel("rootpath-node", form="gaussian", use_attributes=True),
            threads=8,
        )
    )
    acc_path = holdout_accuracy(attributed)
    acc_mean = holdout_accuracy(assemble(trees, build_kernel("aaw"), threads=8))
    report(
        f"attribute shift: attributed rootpath accuracy {acc_path:.3f} (need >= 0.9), "
        f"tree-mean baseline {acc_mean:.3f} (need <= 0.75)"
    )
    assert acc_path >= 0.9
    assert acc_mean <= 0.75

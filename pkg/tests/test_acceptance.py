"""Acceptance suite: one test per criterion, one printed line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
pass/fail lines; each line carries the measured worst case next to the
bound it must meet.
"""

import itertools
import shutil
import time
from importlib import resources

import numpy as np
import pytest

import ergodyn
from ergodyn import (
    CheckReport,
    Measure,
    NoisySystem,
    Observable,
    apply_L,
    birkhoff_limit,
    check_corollary_inequalities,
    check_ergodic_limit,
    check_levelset_invariance,
    check_localization,
    check_maximal_inequality,
    check_periodic_pointwise,
    closed_classes,
    duality_gap,
    ergodic_decomposition,
    estimate_Lj_phi,
    integrate,
    invariant_sets,
    is_ergodic,
    kernel_power,
    make_uniform_partition,
    maximal_set,
    periodic_measures,
    positive_part,
    stationary_measures,
    support,
    ulam_discretize,
)
from ergodyn.cli import main as cli_main

from conftest import (
    cyclic_kernel,
    random_kernel,
    random_measure,
    random_observable,
    reducible_kernel,
    swap_kernel,
)


def report(num, name, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {num:02d}] {status} {name}: {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


def mixture(ms, partition):
    return Measure(sum(m.weights for m in ms) / len(ms), partition)


def test_criterion_01_duality_identity():
    rng = np.random.default_rng(1)
    # warm the compiled kernels so the timed loop measures the algorithm
    warm = random_kernel(rng, 8)
    duality_gap(warm, random_observable(rng, warm.partition), random_measure(rng, warm.partition))
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        k = int(rng.integers(1, 51))
        P = random_kernel(rng, k, density=float(rng.uniform(0.3, 1.0)))
        gap = duality_gap(
            P, random_observable(rng, P.partition), random_measure(rng, P.partition)
        )
        worst = max(worst, gap)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-12 and elapsed < 2.0
    report(1, "duality identity", ok, f"max gap {worst:.3e} (<1e-12), {elapsed:.2f}s (<2s)")


def test_criterion_02_operator_axioms():
    rng = np.random.default_rng(2)
    worst_pos, worst_norm, worst_one = 0.0, 0.0, 0.0
    for _ in range(1000):
        k = int(rng.integers(1, 51))
        P = random_kernel(rng, k, density=float(rng.uniform(0.3, 1.0)))
        nonneg = Observable(rng.random(k), P.partition)
        worst_pos = max(worst_pos, -float(apply_L(P, nonneg).values.min()))
        phi = random_observable(rng, P.partition)
        out = apply_L(P, phi).values
        worst_norm = max(worst_norm, float(np.abs(out).max() - np.abs(phi.values).max()))
        ones = Observable(np.ones(k), P.partition)
        worst_one = max(worst_one, float(np.abs(apply_L(P, ones).values - 1.0).max()))
    ok = worst_pos <= 1e-12 and worst_norm <= 1e-12 and worst_one <= 1e-12
    report(
        2, "operator axioms", ok,
        f"positivity {worst_pos:.1e}, sup-norm {worst_norm:.1e}, L1=1 {worst_one:.1e} (all <=1e-12)",
    )


def test_criterion_03_lemma1_lemma2():
    rng = np.random.default_rng(3)
    worst1, worst2 = 0.0, 0.0
    for _ in range(1000):
        k = int(rng.integers(2, 65))
        P = random_kernel(rng, k)
        phi = random_observable(rng, P.partition)
        gap = apply_L(P, positive_part(phi)).values - np.maximum(apply_L(P, phi).values, 0.0)
        worst1 = max(worst1, -float(gap.min()))
        mu = stationary_measures(P)[0]
        lphi = apply_L(P, phi).values
        lhs = float(phi.values[phi.values > 0] @ mu.weights[phi.values > 0])
        rhs = float(lphi[lphi > 0] @ mu.weights[lphi > 0])
        worst2 = max(worst2, rhs - lhs)
    ok = worst1 <= 1e-12 and worst2 <= 1e-10
    report(
        3, "lemma 1 and lemma 2", ok,
        f"pointwise slack {worst1:.1e} (<=1e-12), integral slack {worst2:.1e} (<=1e-10)",
    )


def test_criterion_04_maximal_ergodic_theorem():
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    worst = np.inf
    for _ in range(1000):
        k = int(rng.integers(2, 65))
        P = random_kernel(rng, k, density=float(rng.uniform(0.3, 1.0)))
        mu = stationary_measures(P)[0]
        phi = random_observable(rng, P.partition)
        E = maximal_set(P, phi, 64)
        lhs = float(phi.values[E] @ mu.weights[E])
        worst = min(worst, lhs)
    elapsed = time.perf_counter() - t0
    ok = worst >= -1e-10 and elapsed < 30.0
    report(
        4, "maximal ergodic theorem", ok,
        f"min integral {worst:.3e} (>=-1e-10) over 1000 trials, {elapsed:.1f}s (<30s)",
    )


def test_criterion_05_corollaries():
    rng = np.random.default_rng(5)
    worst_c, worst_b = np.inf, np.inf
    for _ in range(500):
        sizes = [int(s) for s in rng.integers(1, 6, size=int(rng.integers(1, 4)))]
        P = reducible_kernel(rng, sizes, n_transient=int(rng.integers(0, 4)))
        ms = stationary_measures(P)
        mu = mixture(ms, P.partition)
        phi = random_observable(rng, P.partition)
        dense = P.to_dense()
        cur = phi.values.copy()
        total = cur.copy()
        hi = total.copy()
        lo = total.copy()
        for n in range(2, 33):
            cur = dense @ cur
            total = total + cur
            np.maximum(hi, total / n, out=hi)
            np.minimum(lo, total / n, out=lo)
        for A in closed_classes(P):
            alpha = float(hi[A].min()) - 0.05
            beta = float(lo[A].max()) + 0.05
            rc, rb = check_corollary_inequalities(P, mu, phi, alpha, beta, A, 32, 1e-10)
            worst_c = min(worst_c, rc.lhs - rc.rhs)
            worst_b = min(worst_b, rb.rhs - rb.lhs)
            assert rc.passed and rb.passed
    ok = worst_c >= -1e-10 and worst_b >= -1e-10
    report(
        5, "average bounds on invariant sets", ok,
        f"min alpha margin {worst_c:.3e}, min beta margin {worst_b:.3e} (>=-1e-10), 500 trials",
    )


def test_criterion_06_kakutani_and_ergodic_value():
    rng = np.random.default_rng(6)
    worst_dev = 0.0
    worst_res = 0.0
    for _ in range(200):
        k = int(rng.integers(2, 65))
        P = random_kernel(rng, k)
        mu = stationary_measures(P)[0]
        phi = random_observable(rng, P.partition)
        tilde, rep = birkhoff_limit(P, phi, mu, tol=1e-8, n_cap=2**20)
        assert rep.passed
        worst_res = max(worst_res, rep.lhs)
        supp = support(mu)
        dev = float(np.abs(tilde.values[supp] - integrate(phi, mu)).max())
        worst_dev = max(worst_dev, dev)
    ok = worst_res <= 1e-8 and worst_dev <= 1e-6
    report(
        6, "pointwise limit and ergodic value", ok,
        f"max residual {worst_res:.2e} (<=1e-8), max |limit - mean| {worst_dev:.2e} (<=1e-6)",
    )


def test_criterion_07_periodic_theorem():
    rng = np.random.default_rng(7)
    # exact two-state example: averages of the two-step kernel stay at phi
    P = swap_kernel()
    phi = Observable([1.0, -2.0], P.partition)
    delta0 = Measure([1.0, 0.0], P.partition)
    rep = check_periodic_pointwise(P, 2, phi, delta0, 1e-12)
    exact_ok = rep.passed and rep.lhs == 0.0
    # random cyclic chains
    cyc_ok = True
    for trial in range(100):
        p = int(rng.integers(2, 5))
        P = cyclic_kernel(rng, p, int(rng.integers(2, 8)))
        phi = random_observable(rng, P.partition)
        for nu, d in periodic_measures(P, p):
            assert d == p
            r = check_periodic_pointwise(P, p, phi, nu, 1e-8)
            cyc_ok = cyc_ok and r.passed
    # p = 1 delegation is literally the ergodic-limit report
    same_ok = True
    for _ in range(20):
        k = int(rng.integers(2, 33))
        Q = random_kernel(rng, k)
        mu = stationary_measures(Q)[0]
        phi = random_observable(rng, Q.partition)
        same_ok = same_ok and (
            check_periodic_pointwise(Q, 1, phi, mu, 1e-9)
            == check_ergodic_limit(Q, phi, mu, 1e-9)
        )
    ok = exact_ok and cyc_ok and same_ok
    report(
        7, "periodic pointwise theorem", ok,
        f"swap exact {exact_ok}, 100 cyclic chains {cyc_ok}, p=1 reports identical {same_ok}",
    )


def _brute_invariant_masks(dense_supp, tol):
    s = dense_supp.shape[0]
    masks = ((np.arange(2**s)[:, None] >> np.arange(s)[None, :]) & 1).astype(float)
    into = masks @ dense_supp.T
    ok = np.where(masks == 1, into >= 1 - tol, into <= tol).all(axis=1)
    return masks[ok]


def test_criterion_08_invariant_set_machinery():
    rng = np.random.default_rng(8)
    enum_ok = True
    for _ in range(200):
        sizes = [int(s) for s in rng.integers(1, 5, size=int(rng.integers(1, 4)))]
        while sum(sizes) > 12:
            sizes = sizes[:-1]
        P = reducible_kernel(rng, sizes, n_transient=int(rng.integers(0, 3)))
        ms = stationary_measures(P)
        mu = mixture(ms, P.partition)
        supp = support(mu)
        assert supp.size <= 12
        rep = invariant_sets(P, mu, 1e-10)
        gens = [frozenset(int(i) for i in g) for g in rep.generators]
        expected = set()
        for r in range(len(gens) + 1):
            for combo in itertools.combinations(gens, r):
                expected.add(frozenset().union(*combo) if combo else frozenset())
        dense_supp = P.to_dense()[np.ix_(supp, supp)]
        got = set()
        for mask in _brute_invariant_masks(dense_supp, 1e-10):
            got.add(frozenset(int(supp[i]) for i in np.flatnonzero(mask)))
        enum_ok = enum_ok and (got == expected) and rep.lattice_size == len(got)

    eig_ok = True
    for _ in range(50):
        P = reducible_kernel(rng, [int(s) for s in rng.integers(1, 5, size=2)],
                             n_transient=int(rng.integers(0, 3)))
        ms = stationary_measures(P)
        mu = mixture(ms, P.partition)
        values = np.zeros(P.K)
        for j, cls in enumerate(closed_classes(P)):
            values[cls] = float(j)
        phi = Observable(values, P.partition)
        eig_ok = eig_ok and check_levelset_invariance(P, mu, phi, 0.5, 1e-10).passed
        psi = random_observable(rng, P.partition)
        for A in closed_classes(P):
            eig_ok = eig_ok and check_localization(P, mu, A, psi, 1e-10).passed

    dim_ok = True
    for trial in range(200):
        if trial % 2 == 0:
            P = random_kernel(rng, int(rng.integers(2, 20)))
            ms = stationary_measures(P)
            mu = ms[0]
        else:
            P = reducible_kernel(rng, [int(s) for s in rng.integers(1, 5, size=int(rng.integers(2, 4)))])
            ms = stationary_measures(P)
            mu = mixture(ms, P.partition)
        supp = support(mu)
        sub = P.to_dense()[np.ix_(supp, supp)]
        eigvals = np.linalg.eigvals(sub)
        dim = int(np.sum(np.abs(eigvals - 1.0) < 1e-8))
        dim_ok = dim_ok and ((dim == 1) == is_ergodic(P, mu, 1e-10))

    ok = enum_ok and eig_ok and dim_ok
    report(
        8, "invariant-set machinery", ok,
        f"subset enumeration {enum_ok}, eigenfunction checks {eig_ok}, fixed-space dim iff ergodic {dim_ok}",
    )


def test_criterion_09_ulam_fidelity():
    part = make_uniform_partition("circle", 256)
    worst_col = 0.0
    worst_l1 = 0.0
    for system in (
        NoisySystem("rotation", {"alpha": 0.37}, "uniform", {"half_width": 0.1}),
        NoisySystem("doubling", {}, "uniform", {"half_width": 0.1}),
    ):
        P = ulam_discretize(system, part, 16)
        dense = P.to_dense()
        worst_col = max(worst_col, float(np.abs(dense.sum(axis=0) - 1.0).max()))
        ms = stationary_measures(P, tol=1e-12, max_iter=100000)
        assert len(ms) == 1
        worst_l1 = max(worst_l1, float(np.abs(ms[0].weights - 1.0 / 256).sum()))
    ok = worst_col <= 1e-9 and worst_l1 <= 1e-8
    report(
        9, "ulam fidelity", ok,
        f"max column-sum dev {worst_col:.2e} (<=1e-9), stationary vs uniform l1 {worst_l1:.2e} (<=1e-8)",
    )


def test_criterion_10_monte_carlo_consistency():
    P = ergodyn.kernel_from_rows([[0.9, 0.1], [0.2, 0.8]])
    phi = Observable([1.0, 0.0], P.partition)
    exact = float((kernel_power(P, 5).to_dense() @ phi.values)[0])
    hits = 0
    for seed in range(100):
        est = estimate_Lj_phi(P, phi, 0, 5, 100000, seed=seed)
        if abs(est.mean - exact) <= 4 * est.stderr:
            hits += 1
    a = estimate_Lj_phi(P, phi, 0, 5, 100000, seed=7)
    b = estimate_Lj_phi(P, phi, 0, 5, 100000, seed=7)
    bytes_a = f"{a.mean:.17g},{a.stderr:.17g},{a.n_samples}".encode()
    bytes_b = f"{b.mean:.17g},{b.stderr:.17g},{b.n_samples}".encode()
    identical = bytes_a == bytes_b
    ok = hits >= 95 and identical
    report(
        10, "monte carlo consistency", ok,
        f"{hits}/100 within 4 stderr (>=95), identical-seed bytes equal {identical}",
    )


def test_criterion_11_cli_contract(tmp_path):
    data = resources.files("ergodyn") / "data"
    for name in ("swap.cfg", "swap.kernel", "rotation_uniform.cfg"):
        with resources.as_file(data / name) as p:
            shutil.copy(p, tmp_path / name)

    codes = {}
    for sub, cfg in (("s1", "swap.cfg"), ("s2", "swap.cfg"), ("r1", "rotation_uniform.cfg")):
        codes[sub] = cli_main([
            "verify", "--config", str(tmp_path / cfg), "--seed", "42",
            "--trials", "25", "--out", str(tmp_path / sub),
        ])
    suite_ok = all(c == 0 for c in codes.values())

    bad = tmp_path / "corrupt.kernel"
    bad.write_text("ergodyn-kernel 1\nK 2\ngarbage\n")
    corrupt_ok = cli_main(["verify", "--kernel", str(bad)]) == 3

    mfile = tmp_path / "m.txt"
    mfile.write_text("ergodyn-measure 1\nK 2\n0.9\n0.1\n")
    nonstat_ok = (
        cli_main([
            "verify", "--kernel", str(tmp_path / "swap.kernel"),
            "--measure", str(mfile), "--checks", "maximal",
            "--out", str(tmp_path / "ns"),
        ])
        == 5
    )

    rep_a = (tmp_path / "s1" / "verify_report.txt").read_bytes()
    rep_b = (tmp_path / "s2" / "verify_report.txt").read_bytes()
    identical = rep_a == rep_b

    ok = suite_ok and corrupt_ok and nonstat_ok and identical
    report(
        11, "cli contract", ok,
        f"bundled suite exit0 {suite_ok}, corrupt->3 {corrupt_ok}, "
        f"non-stationary->5 {nonstat_ok}, byte-identical reports {identical}",
    )

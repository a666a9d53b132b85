"""Time the compiled kernels against the pure-NumPy fallback.

Runs each hot loop on both implementations and prints a speedup table.
The trajectory samplers must also agree bit for bit; this is asserted
before timing. Invoke as ``python benchmarks/bench_backends.py``.
"""

import time

import numpy as np

import ergodyn._backend as backend
from ergodyn import NoisySystem, kernel_from_rows, make_uniform_partition
from ergodyn.kernel import ulam_discretize


def timeit(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def make_kernel(rng, k, density):
    rows = rng.random((k, k)) * (rng.random((k, k)) < density)
    empty = rows.sum(axis=1) == 0
    rows[empty, 0] = 1.0
    rows /= rows.sum(axis=1, keepdims=True)
    return kernel_from_rows(rows)


def main():
    if not backend._HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(0)
    rows = []

    k = 512
    P = make_kernel(rng, k, 0.2)
    x = rng.uniform(-1, 1, k)
    args = (P.indptr, P.indices, P.data, x)
    backend._nb_matvec(*args)  # compile
    loops = 2000

    def np_mat():
        for _ in range(loops):
            backend._np_matvec(*args)

    def nb_mat():
        for _ in range(loops):
            backend._nb_matvec(*args)

    rows.append(("csr_matvec (K=512, 2000x)", timeit(np_mat), timeit(nb_mat)))

    argsr = (P.indptr, P.indices, P.data, rng.random(k), k)
    backend._nb_rmatvec(*argsr)

    def np_rmat():
        for _ in range(loops):
            backend._np_rmatvec(*argsr)

    def nb_rmat():
        for _ in range(loops):
            backend._nb_rmatvec(*argsr)

    rows.append(("csr_rmatvec (K=512, 2000x)", timeit(np_rmat), timeit(nb_rmat)))

    indptr, indices, cumdata = P.csr_with_cum()
    dense_cum, last = P.dense_cum()
    n_samples, steps = 20000, 10
    ref_np = backend._np_sample_endpoints(dense_cum, last, 0, steps, 42, n_samples)
    ref_nb = backend._nb_sample_endpoints(indptr, indices, cumdata, 0, steps, 42, n_samples)
    assert np.array_equal(ref_np, ref_nb), "samplers disagree"
    rows.append((
        f"sample_endpoints ({n_samples}x{steps} steps)",
        timeit(backend._np_sample_endpoints, dense_cum, last, 0, steps, 42, n_samples),
        timeit(backend._nb_sample_endpoints, indptr, indices, cumdata, 0, steps, 42, n_samples),
    ))

    seed = np.uint64(7)
    n_path = 200000
    a = backend._np_sample_path(indptr, indices, cumdata, 0, 1000, seed)
    b = backend._nb_sample_path(indptr, indices, cumdata, 0, 1000, seed)
    assert np.array_equal(a, b), "path samplers disagree"
    rows.append((
        f"sample_path ({n_path} steps)",
        timeit(backend._np_sample_path, indptr, indices, cumdata, 0, n_path, seed, repeat=2),
        timeit(backend._nb_sample_path, indptr, indices, cumdata, 0, n_path, seed, repeat=2),
    ))

    part = make_uniform_partition("circle", 256)
    system = NoisySystem("doubling", {}, "uniform", {"half_width": 0.1})
    boundaries = part.boundaries
    offs = (np.arange(16) + 0.5) / 16
    pts = boundaries[:-1, None] + np.diff(boundaries)[:, None] * offs[None, :]
    images = np.mod(system.map_values(pts.ravel()).reshape(256, 16), 1.0)
    backend._nb_ulam_rows(boundaries, images, 1, 0.1, True)
    rows.append((
        "ulam_rows (K=256, q=16, uniform)",
        timeit(backend._np_ulam_rows, boundaries, images, 1, 0.1, True),
        timeit(backend._nb_ulam_rows, boundaries, images, 1, 0.1, True),
    ))

    P_ulam_np = backend._np_ulam_rows(boundaries, images, 1, 0.1, True)
    P_ulam_nb = backend._nb_ulam_rows(boundaries, images, 1, 0.1, True)
    assert np.abs(P_ulam_np - P_ulam_nb).max() < 1e-13

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'numpy':>10}  {'numba':>10}  {'speedup':>8}")
    for name, t_np, t_nb in rows:
        print(f"{name:<{width}}  {t_np:>9.4f}s  {t_nb:>9.4f}s  {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()

"""Transition kernels: validated ingestion, Ulam discretization, powers.

A kernel is a K x K row-stochastic matrix stored in CSR form; row i is the
one-step transition law out of cell i. Kernels come either from raw matrix
data (``kernel_from_rows``) or from a noisy dynamical system declaration
(``ulam_discretize``): a base map on [0,1] composed with a noise law, whose
cell-to-cell mass is averaged over midpoint sample points per cell.

Row entry (i, j) of the Ulam matrix approximates

    (1 / |I_i|) * integral over I_i of  noise-mass(I_j around T(x)) dx,

where the noise mass is an exact CDF difference at the cell edges. On a
uniform partition with a grid-compatible map (rotation, doubling, tent) the
midpoint average is exact, so Lebesgue-preserving maps yield doubly
stochastic matrices to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import _backend
from .errors import DimensionError, InvalidArgumentError, InvalidKernelError
from .space import (
    SUM_EXACT_BAND,
    SUM_RENORM_BAND,
    Partition,
    make_uniform_partition,
)

BASE_MAPS = ("rotation", "doubling", "logistic", "piecewise_linear")
NOISE_KINDS = ("uniform", "wrapped_gaussian", "none")
BOUNDARY_KINDS = ("wrap", "clamp")

_NOISE_CODE = {"none": 0, "uniform": 1, "wrapped_gaussian": 2}


@dataclass(frozen=True, eq=False)
class NoisySystem:
    """Declarative description of a base map plus a noise law.

    base_map: one of rotation(alpha), doubling, logistic(r),
    piecewise_linear(breakpoints, slopes). The piecewise-linear map is
    continuous and anchored at T(0) = 0. ``boundary`` says how mass leaving
    [0,1] is treated: ``wrap`` folds it around the circle, ``clamp`` piles
    it onto the boundary cells.
    """

    base_map: str
    map_params: Mapping = field(default_factory=dict)
    noise: str = "none"
    noise_params: Mapping = field(default_factory=dict)
    boundary: str = "wrap"

    def __post_init__(self):
        if self.base_map not in BASE_MAPS:
            raise InvalidArgumentError(f"unknown base map {self.base_map!r}")
        if self.noise not in NOISE_KINDS:
            raise InvalidArgumentError(f"unknown noise law {self.noise!r}")
        if self.boundary not in BOUNDARY_KINDS:
            raise InvalidArgumentError(f"unknown boundary mode {self.boundary!r}")
        object.__setattr__(self, "map_params", dict(self.map_params))
        object.__setattr__(self, "noise_params", dict(self.noise_params))

        if self.base_map == "rotation":
            a = float(self._param(self.map_params, "alpha"))
            if not (0.0 <= a < 1.0):
                raise InvalidArgumentError("rotation angle must lie in [0,1)")
        elif self.base_map == "logistic":
            r = float(self._param(self.map_params, "r"))
            if not (0.0 <= r <= 4.0):
                raise InvalidArgumentError("logistic parameter must lie in [0,4]")
        elif self.base_map == "piecewise_linear":
            bp = np.asarray(self._param(self.map_params, "breakpoints"), dtype=np.float64)
            sl = np.asarray(self._param(self.map_params, "slopes"), dtype=np.float64)
            if sl.size != bp.size + 1:
                raise InvalidArgumentError("need one slope per segment (breakpoints+1)")
            if bp.size and not (
                np.all(np.diff(bp) > 0) and bp[0] > 0.0 and bp[-1] < 1.0
            ):
                raise InvalidArgumentError("breakpoints must increase strictly inside (0,1)")
            if not (np.all(np.isfinite(bp)) and np.all(np.isfinite(sl))):
                raise InvalidArgumentError("piecewise-linear parameters must be finite")

        if self.noise == "uniform":
            d = float(self._param(self.noise_params, "half_width"))
            if d == 0.0:
                raise InvalidArgumentError("half_width 0 is degenerate; use noise='none'")
            if d < 0.0:
                raise InvalidArgumentError("half_width must be positive")
        elif self.noise == "wrapped_gaussian":
            s = float(self._param(self.noise_params, "sigma"))
            if s <= 0.0:
                raise InvalidArgumentError("sigma must be positive")
        else:  # noise-free dynamics must stay inside the domain
            if self.boundary != "wrap" and not self._range_inside_unit():
                raise InvalidArgumentError(
                    "noise='none' requires boundary='wrap' or a map with range in [0,1]"
                )

    @staticmethod
    def _param(params, key):
        try:
            return params[key]
        except KeyError:
            raise InvalidArgumentError(f"missing parameter {key!r}") from None

    def _range_inside_unit(self) -> bool:
        if self.base_map == "rotation":
            return float(self.map_params["alpha"]) == 0.0
        if self.base_map == "doubling":
            return False
        if self.base_map == "logistic":
            return True
        verts = self._pl_vertices()
        return bool(np.all((verts >= 0.0) & (verts <= 1.0)))

    def _pl_vertices(self) -> np.ndarray:
        bp = np.asarray(self.map_params["breakpoints"], dtype=np.float64)
        sl = np.asarray(self.map_params["slopes"], dtype=np.float64)
        xs = np.concatenate(([0.0], bp, [1.0]))
        vals = np.empty_like(xs)
        vals[0] = 0.0
        for k in range(sl.size):
            vals[k + 1] = vals[k] + sl[k] * (xs[k + 1] - xs[k])
        return vals

    def map_values(self, x: np.ndarray) -> np.ndarray:
        """Raw base-map images (before wrap/clamp)."""
        x = np.asarray(x, dtype=np.float64)
        if self.base_map == "rotation":
            return x + float(self.map_params["alpha"])
        if self.base_map == "doubling":
            return 2.0 * x
        if self.base_map == "logistic":
            r = float(self.map_params["r"])
            return r * x * (1.0 - x)
        bp = np.asarray(self.map_params["breakpoints"], dtype=np.float64)
        sl = np.asarray(self.map_params["slopes"], dtype=np.float64)
        starts = np.concatenate(([0.0], bp))
        vals = self._pl_vertices()[:-1]
        seg = np.clip(np.searchsorted(starts, x, side="right") - 1, 0, sl.size - 1)
        return vals[seg] + sl[seg] * (x - starts[seg])


@dataclass(frozen=True, eq=False)
class TransitionKernel:
    """Row-stochastic K x K matrix in CSR storage, bound to a partition."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    partition: Partition

    def __post_init__(self):
        indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        k = self.partition.cell_count
        if indptr.size != k + 1 or indptr[0] != 0 or indptr[-1] != indices.size:
            raise InvalidKernelError("inconsistent CSR index pointers")
        if indices.size != data.size:
            raise InvalidKernelError("indices and data length mismatch")
        if indices.size and (indices.min() < 0 or indices.max() >= k):
            raise InvalidKernelError("column index out of range")
        if np.any(np.diff(indptr) < 1):
            raise InvalidKernelError("every row needs at least one transition")
        if np.any(data < 0.0) or not np.all(np.isfinite(data)):
            raise InvalidKernelError("entries must be finite and nonnegative")
        sums = np.add.reduceat(data, indptr[:-1])
        if np.max(np.abs(sums - 1.0)) > 1e-12:
            raise InvalidKernelError("row sums must equal 1 within 1e-12")
        for name, arr in (("indptr", indptr), ("indices", indices), ("data", data)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "_cache", {})

    def __repr__(self):
        return f"TransitionKernel(K={self.K}, nnz={self.nnz})"

    @property
    def K(self) -> int:
        return self.partition.cell_count

    @property
    def nnz(self) -> int:
        return int(self.data.size)

    def to_dense(self) -> np.ndarray:
        cache = self._cache
        if "dense" not in cache:
            k = self.K
            dense = np.zeros((k, k))
            rows = np.repeat(np.arange(k), np.diff(self.indptr))
            dense[rows, self.indices] = self.data
            dense.setflags(write=False)
            cache["dense"] = dense
        return cache["dense"]

    def row(self, i: int):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Row action: (P x)_i = sum_j P_ij x_j."""
        return _backend.matvec(self.indptr, self.indices, self.data, np.asarray(x, dtype=np.float64))

    def rmatvec(self, x: np.ndarray) -> np.ndarray:
        """Column action: (x P)_j = sum_i x_i P_ij."""
        return _backend.rmatvec(self.indptr, self.indices, self.data, np.asarray(x, dtype=np.float64), self.K)

    def restrict(self, states: np.ndarray) -> np.ndarray:
        """Dense submatrix over the given states (rows and columns)."""
        states = np.asarray(states, dtype=np.int64)
        return self.to_dense()[np.ix_(states, states)]

    def csr_with_cum(self):
        cache = self._cache
        if "cumdata" not in cache:
            # per-row cumsum, bitwise equal to cumsum of the dense row
            # (interleaved zeros are exact no-ops), so both sampling
            # backends search identical partial sums
            cumdata = np.empty_like(self.data)
            for i in range(self.K):
                lo, hi = self.indptr[i], self.indptr[i + 1]
                cumdata[lo:hi] = np.cumsum(self.data[lo:hi])
            cumdata.setflags(write=False)
            cache["cumdata"] = cumdata
        return self.indptr, self.indices, cache["cumdata"]

    def dense_cum(self):
        cache = self._cache
        if "dense_cum" not in cache:
            k = self.K
            dense = np.zeros((k, k))
            rows = np.repeat(np.arange(k), np.diff(self.indptr))
            dense[rows, self.indices] = self.data
            dc = np.cumsum(dense, axis=1)
            last = np.empty(k, dtype=np.int64)
            for i in range(k):
                last[i] = self.indices[self.indptr[i + 1] - 1]
            dc.setflags(write=False)
            cache["dense_cum"] = (dc, last)
        return cache["dense_cum"]


def _rows_to_kernel(rows: np.ndarray, partition: Partition, what: str) -> TransitionKernel:
    """Validate dense rows under the shared tolerance policy and sparsify."""
    rows = np.asarray(rows, dtype=np.float64)
    k = partition.cell_count
    if rows.shape != (k, k):
        raise DimensionError(f"{what}: expected a {k}x{k} matrix, got {rows.shape}")
    if not np.all(np.isfinite(rows)):
        raise InvalidKernelError(f"{what}: non-finite entry")
    if np.any(rows < 0.0):
        raise InvalidKernelError(f"{what}: negative entry {rows.min()}")
    sums = rows.sum(axis=1)
    dev = np.abs(sums - 1.0)
    worst = dev.max() if dev.size else 0.0
    if worst > SUM_RENORM_BAND:
        i = int(dev.argmax())
        raise InvalidKernelError(f"{what}: row {i} sums to {float(sums[i])!r}, off by {worst:g}")
    fix = dev > SUM_EXACT_BAND
    if np.any(fix):
        rows = rows.copy()
        rows[fix] /= sums[fix, None]
    mask = rows > 0.0
    counts = mask.sum(axis=1)
    indptr = np.concatenate(([0], np.cumsum(counts)))
    indices = np.nonzero(mask)[1]
    data = rows[mask]
    return TransitionKernel(indptr, indices, data, partition)


def kernel_from_rows(rows, partition: Partition | None = None) -> TransitionKernel:
    """Ingest a square nonnegative matrix as a transition kernel.

    Rows off 1 by at most 1e-9 are renormalised; farther off is rejected.
    Without an explicit partition a uniform unit-interval partition of
    matching size is attached.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] != rows.shape[1]:
        raise DimensionError(f"kernel data must be square, got {rows.shape}")
    if partition is None:
        partition = make_uniform_partition("unit_interval", rows.shape[0])
    return _rows_to_kernel(rows, partition, "kernel_from_rows")


def ulam_discretize(
    system: NoisySystem,
    partition: Partition,
    quadrature_points: int = 16,
) -> TransitionKernel:
    """Discretize a noisy system onto a partition by cell averaging.

    Every cell contributes ``quadrature_points`` midpoint sample images;
    each image spreads its noise mass over the cells through exact CDF
    differences, wrapped or clamped per the system's boundary mode.
    """
    if quadrature_points < 1:
        raise InvalidArgumentError("quadrature_points must be positive")
    b = partition.boundaries
    k = partition.cell_count
    offs = (np.arange(quadrature_points) + 0.5) / quadrature_points
    pts = b[:-1, None] + np.diff(b)[:, None] * offs[None, :]
    raw = system.map_values(pts.ravel()).reshape(k, quadrature_points)
    wrap = system.boundary == "wrap"
    images = np.mod(raw, 1.0) if wrap else np.clip(raw, 0.0, 1.0)
    code = _NOISE_CODE[system.noise]
    if system.noise == "uniform":
        param = float(system.noise_params["half_width"])
    elif system.noise == "wrapped_gaussian":
        param = float(system.noise_params["sigma"])
    else:
        param = 0.0
    rows = _backend.ulam_rows(b, np.ascontiguousarray(images), code, param, wrap)
    return _rows_to_kernel(rows, partition, "ulam_discretize")


def kernel_power(P: TransitionKernel, p: int) -> TransitionKernel:
    """Matrix power P^p (binary powering on the dense form)."""
    if p < 1:
        raise InvalidArgumentError("power must be a positive integer")
    if p == 1:
        return P
    base = np.array(P.to_dense())
    result = None
    e = int(p)
    while e:
        if e & 1:
            result = base.copy() if result is None else result @ base
        e >>= 1
        if e:
            base = base @ base
    return _rows_to_kernel(result, P.partition, "kernel_power")

"""Stationary and periodic measures, invariant sets, ergodic structure.

Stationary measures are fixed points of the dual operator. On a finite
space each closed communicating class of the kernel carries exactly one,
and it is ergodic; general stationary measures are mixtures. The solver is
a Cesaro-averaged power iteration per class: iterates are averaged over one
graph period of the class, which removes the rotating spectrum exactly and
converges geometrically (a full-history average would only converge like
1/n and could not meet tight residual tolerances).

"Almost everywhere" statements are evaluated on the support of the measure:
a set A is mu-a.e. invariant when every supported state of A sends all its
mass into A and every supported state outside sends none.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ConvergenceError, InvalidArgumentError, NotStationaryError
from .kernel import TransitionKernel, kernel_power
from .space import Measure


@dataclass(frozen=True, eq=False)
class InvariantSetReport:
    """Minimal invariant sets on the support of a stationary measure.

    generators are disjoint index sets; every a.e.-invariant set equals a
    union of them up to null sets, so lattice_size = 2 ** len(generators).
    """

    generators: tuple
    lattice_size: int


@dataclass(frozen=True, eq=False)
class ErgodicDecomposition:
    """Convex split of a stationary measure into ergodic components."""

    components: tuple  # of (weight, Measure) pairs


def support(mu: Measure, threshold: float = 0.0) -> np.ndarray:
    """Indices carrying mass above the threshold (default: any mass)."""
    if not (0.0 <= threshold < 1.0):
        raise InvalidArgumentError("threshold must lie in [0, 1)")
    return np.flatnonzero(mu.weights > threshold)


def _edge_lists(P: TransitionKernel, edge_threshold: float):
    rows = np.repeat(np.arange(P.K), np.diff(P.indptr))
    keep = P.data > edge_threshold
    return rows[keep], P.indices[keep]


def _closed_classes_on(P, states, edge_threshold):
    """Closed strongly connected classes of the digraph restricted to states."""
    states = np.asarray(states, dtype=np.int64)
    pos = -np.ones(P.K, dtype=np.int64)
    pos[states] = np.arange(states.size)
    rows, cols = _edge_lists(P, edge_threshold)
    keep = (pos[rows] >= 0) & (pos[cols] >= 0)
    r, c = pos[rows[keep]], pos[cols[keep]]
    n = states.size
    adj = csr_matrix((np.ones(r.size), (r, c)), shape=(n, n))
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    is_closed = np.ones(n_comp, dtype=bool)
    crossing = labels[r] != labels[c]
    is_closed[np.unique(labels[r[crossing]])] = False
    classes = [
        states[np.flatnonzero(labels == comp)]
        for comp in range(n_comp)
        if is_closed[comp]
    ]
    classes.sort(key=lambda cls: int(cls.min()))
    return classes


def closed_classes(P: TransitionKernel, edge_threshold: float = 0.0) -> list:
    """Closed communicating classes: strongly connected, no outgoing edge.

    The digraph has an edge i -> j when P_ij exceeds edge_threshold (use a
    small positive value for kernels polluted by quadrature noise). Classes
    come back sorted by their smallest state.
    """
    if not (0.0 <= edge_threshold < 1.0):
        raise InvalidArgumentError("edge_threshold must lie in [0, 1)")
    return _closed_classes_on(P, np.arange(P.K), edge_threshold)


def _graph_period(sub: np.ndarray) -> int:
    """Period of a strongly connected 0/1 digraph (gcd of cycle lengths)."""
    n = sub.shape[0]
    level = -np.ones(n, dtype=np.int64)
    level[0] = 0
    frontier = [0]
    order = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.flatnonzero(sub[u]):
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(int(v))
                    order.append(int(v))
        frontier = nxt
    g = 0
    for u in order:
        for v in np.flatnonzero(sub[u]):
            g = math.gcd(g, int(level[u]) + 1 - int(level[v]))
    return g if g > 0 else 1


def _solve_class(sub: np.ndarray, tol: float, max_iter: int):
    """Stationary row vector of an irreducible row-stochastic block.

    Power iteration averaged over one graph period: the window mean kills
    the rotating eigenvalues exactly, so the averaged iterates converge
    geometrically even for periodic classes.
    """
    m = sub.shape[0]
    if m == 1:
        return np.ones(1), 1
    d = _graph_period(sub > 0.0)
    x = np.full(m, 1.0 / m)
    res = math.inf
    for it in range(1, max_iter + 1):
        acc = np.zeros(m)
        cur = x
        for _ in range(d):
            acc += cur
            cur = cur @ sub
        avg = acc / d
        avg /= avg.sum()
        res = float(np.abs(avg @ sub - avg).sum())
        if res <= tol:
            return avg, it
        x = cur
    raise ConvergenceError(
        f"class solve stalled at residual {res:.3e} after {max_iter} windows",
        residual=res,
    )


def stationary_measures(
    P: TransitionKernel, tol: float = 1e-12, max_iter: int = 100000
) -> list:
    """All ergodic measures fixed by the dual operator, one per closed class."""
    if tol <= 0.0:
        raise InvalidArgumentError("tol must be positive")
    out = []
    for cls in closed_classes(P):
        local, _ = _solve_class(P.restrict(cls), tol, max_iter)
        weights = np.zeros(P.K)
        weights[cls] = local
        out.append(Measure(weights, P.partition))
    return out


def require_stationary(P: TransitionKernel, mu: Measure, tol: float) -> None:
    """Raise NotStationaryError unless ||L* mu - mu||_1 <= tol."""
    res = float(np.abs(P.rmatvec(mu.weights) - mu.weights).sum())
    if res > tol:
        raise NotStationaryError(
            f"measure is not fixed by the dual operator: residual {res:.3e} > {tol:g}",
            residual=res,
        )


def invariance_violation(P: TransitionKernel, mu: Measure, A) -> float:
    """Max over supp mu of |chi_A(i) - P(i, A)|; 0 means a.e. invariant."""
    mask = np.zeros(P.K)
    A = np.asarray(A, dtype=np.int64)
    mask[A] = 1.0
    in_mass = P.matvec(mask)
    supp = support(mu)
    if supp.size == 0:
        return 0.0
    return float(np.abs(mask[supp] - in_mass[supp]).max())


def invariant_sets(P: TransitionKernel, mu: Measure, tol: float = 1e-10) -> InvariantSetReport:
    """Generators of the lattice of mu-a.e. invariant sets.

    Requires mu stationary within tol. The generators are the closed
    classes of the kernel restricted to supp mu; each invariant set equals
    a union of them modulo mu-null differences.
    """
    require_stationary(P, mu, tol)
    gens = _closed_classes_on(P, support(mu), 0.0)
    return InvariantSetReport(tuple(gens), 2 ** len(gens))


def is_ergodic(P: TransitionKernel, mu: Measure, tol: float = 1e-10) -> bool:
    """True when every a.e.-invariant set has measure 0 or 1."""
    return len(invariant_sets(P, mu, tol).generators) == 1


def ergodic_decomposition(
    P: TransitionKernel, mu: Measure, tol: float = 1e-10
) -> ErgodicDecomposition:
    """Split a stationary measure into its ergodic components.

    Component k has weight mu(generator_k) and measure mu conditioned on
    generator_k; the weighted sum reconstructs mu.
    """
    report = invariant_sets(P, mu, tol)
    comps = []
    for gen in report.generators:
        w = float(mu.weights[gen].sum())
        if w <= 0.0:
            continue
        cond = np.zeros(P.K)
        cond[gen] = mu.weights[gen] / w
        comps.append((w, Measure(cond, P.partition)))
    return ErgodicDecomposition(tuple(comps))


def periodic_measures(
    P: TransitionKernel, p: int, tol: float = 1e-12, max_iter: int = 100000
) -> list:
    """Ergodic fixed points of the p-th dual power, with minimal periods.

    Solves the stationary problem for P^p and scans d = 1..p for the least
    d with ||(L*)^d nu - nu||_1 <= tol; that minimal period always divides p.
    """
    if p < 1:
        raise InvalidArgumentError("period must be a positive integer")
    fixed = stationary_measures(kernel_power(P, p), tol, max_iter)
    out = []
    for nu in fixed:
        w = nu.weights
        minimal = p
        for d in range(1, p + 1):
            w = P.rmatvec(w)
            if float(np.abs(w - nu.weights).sum()) <= tol:
                minimal = d
                break
        out.append((nu, minimal))
    return out

"""Command-line driver: build kernels, solve measures, verify, simulate.

Commands
--------
kernel-build   discretize a configured noisy system and write a kernel file
measure        stationary/periodic measures and decompositions, as a report
verify         run named checks against a kernel, one report per run
simulate       sample trajectories and operator estimates to CSV

Exit codes: 0 success (verify: all checks passed), 1 a check failed,
2 invalid configuration, 3 invalid kernel data, 4 an iterative solve did
not converge, 5 a check precondition (including stationarity) was violated.

File formats are plain text and deterministic: reruns with the same seed
and configuration are byte-identical. Floats are written with 17
significant digits, which round-trips IEEE doubles exactly.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import io
import sys
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .errors import (
    ConvergenceError,
    ErgodynError,
    InvalidArgumentError,
    InvalidKernelError,
    InvalidMeasureError,
    NotStationaryError,
    PreconditionError,
)
from .kernel import NoisySystem, TransitionKernel, kernel_from_rows, ulam_discretize
from .measures import (
    closed_classes,
    ergodic_decomposition,
    is_ergodic,
    periodic_measures,
    require_stationary,
    stationary_measures,
)
from .mc import estimate_Lj_phi, sample_trajectory
from .space import Measure, Observable, Partition, make_uniform_partition
from .theorems import (
    check_corollary_b,
    check_corollary_c,
    check_duality,
    check_ergodic_limit,
    check_lemma1,
    check_lemma2,
    check_levelset_invariance,
    check_localization,
    check_maximal_inequality,
    check_nonconvergence_set_empty,
    check_periodic_pointwise,
    birkhoff_limit,
    sublevel_sets,
)
from .transfer import stationarity_residual

CHECK_NAMES = (
    "duality",
    "lemma1",
    "lemma2",
    "maximal",
    "corollary_c",
    "corollary_b",
    "birkhoff",
    "ergodic_limit",
    "periodic",
    "localization",
    "levelsets",
    "nonconvergence_empty",
)

#: checks that square dense matrices per trial get a reduced trial count
_EXPENSIVE = {"birkhoff", "ergodic_limit", "periodic", "nonconvergence_empty"}

KERNEL_MAGIC = "ergodyn-kernel 1"
MEASURE_MAGIC = "ergodyn-measure 1"
REPORT_MAGIC = "ergodyn-report 1"


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


# ---------------------------------------------------------------------------
# Kernel and measure files
# ---------------------------------------------------------------------------

def save_kernel(P: TransitionKernel, path) -> None:
    lines = [KERNEL_MAGIC]
    lines.append(f"K {P.K}")
    lines.append(f"domain {P.partition.domain_kind}")
    lines.append("boundaries " + " ".join(_fmt(b) for b in P.partition.boundaries))
    lines.append(f"nnz {P.nnz}")
    for i in range(P.K):
        cols, probs = P.row(i)
        for c, p in zip(cols, probs):
            lines.append(f"{i} {c} {_fmt(p)}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_kernel(path) -> TransitionKernel:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InvalidKernelError(f"cannot read kernel file {path}: {e}") from None
    try:
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if lines[0] != KERNEL_MAGIC:
            raise ValueError(f"bad header {lines[0]!r}")
        k = int(lines[1].split()[1])
        domain = lines[2].split()[1]
        boundaries = np.array([float(t) for t in lines[3].split()[1:]])
        nnz = int(lines[4].split()[1])
        entries = lines[5:]
        if len(entries) != nnz:
            raise ValueError(f"expected {nnz} entries, found {len(entries)}")
        rows = np.zeros((k, k))
        for ln in entries:
            r, c, p = ln.split()
            rows[int(r), int(c)] = float(p)
        partition = Partition(domain, boundaries)
    except (ValueError, IndexError) as e:
        raise InvalidKernelError(f"malformed kernel file {path}: {e}") from None
    return kernel_from_rows(rows, partition)


def save_measure(mu: Measure, path) -> None:
    lines = [MEASURE_MAGIC, f"K {mu.weights.size}"]
    lines += [_fmt(w) for w in mu.weights]
    Path(path).write_text("\n".join(lines) + "\n")


def load_measure(path, partition: Partition) -> Measure:
    try:
        lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
        if lines[0] != MEASURE_MAGIC:
            raise ValueError(f"bad header {lines[0]!r}")
        k = int(lines[1].split()[1])
        weights = np.array([float(t) for t in lines[2 : 2 + k]])
        if weights.size != k:
            raise ValueError("weight count mismatch")
    except (OSError, ValueError, IndexError) as e:
        raise InvalidMeasureError(f"malformed measure file {path}: {e}") from None
    return Measure(weights, partition)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

_SCHEMA = {
    "system": {
        "map": str,
        "alpha": float,
        "r": float,
        "breakpoints": "floats",
        "slopes": "floats",
        "noise": str,
        "half_width": float,
        "sigma": float,
        "boundary": str,
        "quadrature": int,
    },
    "kernel": {"path": str},
    "partition": {"domain": str, "cells": int},
    "solver": {"tol": float, "max_iter": int},
    "checks": {
        "names": str,
        "n_max": int,
        "alpha": float,
        "beta": float,
        "p": int,
        "n_cap": int,
        "trials": int,
        "tol": float,
        "edge_threshold": float,
    },
    "mc": {
        "start": int,
        "steps": int,
        "trajectories": int,
        "n_samples": int,
        "master_seed": int,
        "observable": str,
    },
    "output": {"dir": str, "formats": str},
}

_DEFAULTS = {
    ("solver", "tol"): 1e-12,
    ("solver", "max_iter"): 100000,
    ("checks", "names"): "all",
    ("checks", "n_max"): 64,
    ("checks", "p"): 2,
    ("checks", "n_cap"): 2**20,
    ("checks", "trials"): 100,
    ("checks", "tol"): 1e-10,
    ("checks", "edge_threshold"): 1e-14,
    ("system", "quadrature"): 16,
    ("system", "boundary"): "wrap",
    ("mc", "start"): 0,
    ("mc", "steps"): 5,
    ("mc", "trajectories"): 1,
    ("mc", "n_samples"): 10000,
    ("mc", "master_seed"): 0,
    ("mc", "observable"): "coordinate",
    ("output", "dir"): "out",
    ("output", "formats"): "report,csv",
}


class ConfigError(ErgodynError, ValueError):
    """Configuration file cannot be parsed or validated."""


def load_config(path) -> dict:
    """Parse and validate an INI-style run configuration.

    Unknown sections or keys are hard errors so typos cannot silently
    change a run.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        read = parser.read(path)
    except configparser.Error as e:
        raise ConfigError(f"cannot parse config {path}: {e}") from None
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    cfg: dict = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        cfg[section] = {}
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            kind = _SCHEMA[section][key]
            try:
                if kind == "floats":
                    value = tuple(float(t) for t in raw.split())
                elif kind is int:
                    value = int(raw)
                elif kind is float:
                    value = float(raw)
                else:
                    value = raw.strip()
            except ValueError:
                raise ConfigError(
                    f"key {key!r} in [{section}]: cannot parse {raw!r}"
                ) from None
            cfg[section][key] = value
    if "system" in cfg and "kernel" in cfg:
        raise ConfigError("config must name exactly one of [system] or [kernel]")
    for (section, key), default in _DEFAULTS.items():
        if section in cfg and key not in cfg[section]:
            cfg[section][key] = default
    for section, key in (("solver", "tol"), ("checks", "tol")):
        if section in cfg and not cfg[section][key] > 0.0:
            raise ConfigError(f"{key} in [{section}] must be positive")
    return cfg


def _cfg_get(cfg, section, key):
    if section in cfg and key in cfg[section]:
        return cfg[section][key]
    return _DEFAULTS[(section, key)]


def config_hash(cfg: dict, seed: int) -> str:
    """Stable digest of the resolved configuration plus the master seed."""
    parts = [f"seed={seed}"]
    for section in sorted(cfg):
        for key in sorted(cfg[section]):
            parts.append(f"{section}.{key}={cfg[section][key]!r}")
    return hashlib.sha256("\n".join(parts).encode()).hexdigest()[:16]


def _system_from_config(cfg) -> tuple[NoisySystem, Partition, int]:
    sys_cfg = cfg["system"]
    part_cfg = cfg.get("partition", {})
    if "map" not in sys_cfg:
        raise ConfigError("section [system] needs a 'map' key")
    if "domain" not in part_cfg or "cells" not in part_cfg:
        raise ConfigError("section [partition] needs 'domain' and 'cells'")
    name = sys_cfg["map"]
    map_params = {}
    if name == "rotation":
        if "alpha" not in sys_cfg:
            raise ConfigError("rotation needs key 'alpha'")
        map_params["alpha"] = sys_cfg["alpha"]
    elif name == "logistic":
        if "r" not in sys_cfg:
            raise ConfigError("logistic needs key 'r'")
        map_params["r"] = sys_cfg["r"]
    elif name == "piecewise_linear":
        if "breakpoints" not in sys_cfg or "slopes" not in sys_cfg:
            raise ConfigError("piecewise_linear needs 'breakpoints' and 'slopes'")
        map_params["breakpoints"] = sys_cfg["breakpoints"]
        map_params["slopes"] = sys_cfg["slopes"]
    elif name != "doubling":
        raise ConfigError(f"unknown map {name!r}")
    noise = sys_cfg.get("noise", "none")
    noise_params = {}
    if noise == "uniform":
        if "half_width" not in sys_cfg:
            raise ConfigError("uniform noise needs key 'half_width'")
        noise_params["half_width"] = sys_cfg["half_width"]
    elif noise == "wrapped_gaussian":
        if "sigma" not in sys_cfg:
            raise ConfigError("wrapped_gaussian noise needs key 'sigma'")
        noise_params["sigma"] = sys_cfg["sigma"]
    elif noise != "none":
        raise ConfigError(f"unknown noise {noise!r}")
    try:
        system = NoisySystem(name, map_params, noise, noise_params, sys_cfg["boundary"])
        partition = make_uniform_partition(part_cfg["domain"], part_cfg["cells"])
    except InvalidArgumentError as e:
        raise ConfigError(str(e)) from None
    return system, partition, sys_cfg["quadrature"]


def _obtain_kernel(cfg, args, config_dir: Path) -> TransitionKernel:
    if getattr(args, "kernel", None):
        return load_kernel(args.kernel)
    if "kernel" in cfg:
        if "path" not in cfg["kernel"]:
            raise ConfigError("section [kernel] needs a 'path' key")
        return load_kernel((config_dir / cfg["kernel"]["path"]))
    if "system" in cfg:
        system, partition, quad = _system_from_config(cfg)
        return ulam_discretize(system, partition, quad)
    raise ConfigError("no kernel source: give --kernel or [kernel]/[system] config")


# ---------------------------------------------------------------------------
# Report writing
# ---------------------------------------------------------------------------

class ReportWriter:
    def __init__(self, command: str, seed: int, cfg_hash: str):
        self.buf = io.StringIO()
        w = self.buf.write
        w(REPORT_MAGIC + "\n")
        w(f"version={__version__}\n")
        w(f"command={command}\n")
        w(f"backend={_backend.BACKEND}\n")
        w(f"generator={_backend.GENERATOR_NAME}\n")
        w(f"master_seed={seed}\n")
        w(f"config_hash={cfg_hash}\n")

    def kv(self, key, value):
        self.buf.write(f"{key}={value}\n")

    def section(self, title):
        self.buf.write(f"\n[{title}]\n")

    def check(self, title, rep):
        self.section(f"check {title}")
        self.kv("name", rep.name)
        self.kv("passed", "true" if rep.passed else "false")
        self.kv("lhs", _fmt(rep.lhs))
        self.kv("rhs", _fmt(rep.rhs))
        self.kv("slack", _fmt(rep.slack))
        wit = "-" if rep.witnesses is None else ",".join(str(i) for i in rep.witnesses)
        self.kv("witnesses", wit)
        self.kv("iterations_used", rep.iterations_used)

    def save(self, path):
        Path(path).write_text(self.buf.getvalue())


# ---------------------------------------------------------------------------
# verify drivers
# ---------------------------------------------------------------------------

def _random_observable(rng, partition) -> Observable:
    return Observable(rng.uniform(-1.0, 1.0, partition.cell_count), partition)


def _random_measure(rng, partition) -> Measure:
    w = rng.random(partition.cell_count) + 1e-3
    return Measure(w / w.sum(), partition)


def _mixture_measure(measures) -> Measure:
    w = sum(m.weights for m in measures) / len(measures)
    return Measure(w, measures[0].partition)


def _class_eigenfunction(P, classes) -> Observable:
    values = np.zeros(P.K)
    for k, cls in enumerate(classes):
        values[cls] = float(k)
    return Observable(values, P.partition)


_LE_CHECKS = {
    "duality", "corollary_b", "birkhoff", "ergodic_limit",
    "localization", "levelsets", "nonconvergence_empty",
}


def _worst(reports):
    """Aggregate trial reports into one: smallest margin wins the slot."""
    def margin(r):
        diff = r.lhs - r.rhs
        return -diff if r.name in _LE_CHECKS else diff

    failed = [r for r in reports if not r.passed]
    pool = failed if failed else reports
    worst = min(pool, key=margin)
    return type(worst)(
        worst.name, all(r.passed for r in reports), worst.lhs, worst.rhs,
        worst.slack, worst.witnesses, len(reports),
    )


def run_check(name, P, stationaries, cfg, master_seed) -> "CheckReport":
    """Run one named check with seeded randomness and aggregate trials."""
    idx = CHECK_NAMES.index(name)
    rng = np.random.default_rng(np.random.SeedSequence([int(master_seed) & ((1 << 64) - 1), idx]))
    trials = int(_cfg_get(cfg, "checks", "trials"))
    if name in _EXPENSIVE:
        trials = min(trials, 20)
    n_max = int(_cfg_get(cfg, "checks", "n_max"))
    tol = float(_cfg_get(cfg, "checks", "tol"))
    n_cap = int(_cfg_get(cfg, "checks", "n_cap"))
    p = int(_cfg_get(cfg, "checks", "p"))
    alpha = cfg.get("checks", {}).get("alpha")
    beta = cfg.get("checks", {}).get("beta")
    part = P.partition
    mix = _mixture_measure(stationaries)
    classes = closed_classes(P, float(_cfg_get(cfg, "checks", "edge_threshold")))
    reports = []

    if name == "duality":
        for _ in range(trials):
            reports.append(check_duality(P, _random_observable(rng, part), _random_measure(rng, part)))
    elif name == "lemma1":
        for _ in range(trials):
            reports.append(check_lemma1(P, _random_observable(rng, part)))
    elif name == "lemma2":
        for _ in range(trials):
            reports.append(check_lemma2(P, mix, _random_observable(rng, part), tol))
    elif name == "maximal":
        for _ in range(trials):
            reports.append(check_maximal_inequality(P, mix, _random_observable(rng, part), n_max, tol))
    elif name in ("corollary_c", "corollary_b"):
        for _ in range(max(1, trials // max(1, len(classes)))):
            phi = _random_observable(rng, part)
            hi, lo = _running_average_extremes(P, phi, n_max)
            for A in classes:
                if name == "corollary_c":
                    a = alpha if alpha is not None else float(hi[A].min()) - 0.1
                    reports.append(check_corollary_c(P, mix, phi, a, A, n_max, tol))
                else:
                    b = beta if beta is not None else float(lo[A].max()) + 0.1
                    reports.append(check_corollary_b(P, mix, phi, b, A, n_max, tol))
    elif name == "birkhoff":
        for _ in range(trials):
            _, rep = birkhoff_limit(P, _random_observable(rng, part), mix, tol, n_cap)
            reports.append(rep)
    elif name == "ergodic_limit":
        for _ in range(trials):
            reports.append(check_ergodic_limit(P, _random_observable(rng, part), stationaries[0], tol, n_cap))
    elif name == "periodic":
        fixed = periodic_measures(P, p, float(_cfg_get(cfg, "solver", "tol")),
                                  int(_cfg_get(cfg, "solver", "max_iter")))
        for _ in range(trials):
            phi = _random_observable(rng, part)
            for nu, _d in fixed:
                reports.append(check_periodic_pointwise(P, p, phi, nu, tol, n_cap))
    elif name == "localization":
        for _ in range(trials):
            phi = _random_observable(rng, part)
            for A in classes:
                reports.append(check_localization(P, mix, A, phi, tol))
    elif name == "levelsets":
        phi = _class_eigenfunction(P, classes)
        a = alpha if alpha is not None else 0.5
        reports.append(check_levelset_invariance(P, mix, phi, a, tol))
    elif name == "nonconvergence_empty":
        a = alpha if alpha is not None else 0.05
        b = beta if beta is not None else -0.05
        for _ in range(trials):
            reports.append(check_nonconvergence_set_empty(P, _random_observable(rng, part), a, b, n_cap))
    else:
        raise ConfigError(f"unknown check {name!r}")
    return _worst(reports)


def _running_average_extremes(P, phi, n_max):
    """Per-state max and min of S_n / n over n <= n_max."""
    cur = phi.values.copy()
    total = cur.copy()
    hi = total.copy()
    lo = total.copy()
    for n in range(2, n_max + 1):
        cur = P.matvec(cur)
        total += cur
        avg = total / n
        np.maximum(hi, avg, out=hi)
        np.minimum(lo, avg, out=lo)
    return hi, lo


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _out_dir(cfg, args) -> Path:
    out = Path(getattr(args, "out", None) or _cfg_get(cfg, "output", "dir"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_kernel_build(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    if "system" not in cfg:
        raise ConfigError("kernel-build needs a config with a [system] section")
    system, partition, quad = _system_from_config(cfg)
    P = ulam_discretize(system, partition, quad)
    out = _out_dir(cfg, args)
    path = out / "kernel.txt"
    save_kernel(P, path)
    sums = np.add.reduceat(P.data, P.indptr[:-1])
    dev = float(np.abs(sums - 1.0).max())
    print(f"kernel-build: K={P.K} nnz={P.nnz} max_row_dev={dev:.3e} -> {path}")
    return 0


def cmd_measure(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    config_dir = Path(args.config).parent if args.config else Path.cwd()
    P = _obtain_kernel(cfg, args, config_dir)
    seed = args.seed if args.seed is not None else _cfg_get(cfg, "mc", "master_seed")
    tol = args.tol if args.tol is not None else _cfg_get(cfg, "solver", "tol")
    max_iter = int(_cfg_get(cfg, "solver", "max_iter"))
    p = int(_cfg_get(cfg, "checks", "p"))
    ms = stationary_measures(P, tol, max_iter)
    writer = ReportWriter("measure", seed, config_hash(cfg, seed))
    writer.kv("kernel_K", P.K)
    writer.kv("kernel_nnz", P.nnz)
    writer.kv("stationary_count", len(ms))
    for k, mu in enumerate(ms):
        writer.section(f"stationary {k}")
        writer.kv("residual", _fmt(stationarity_residual(P, mu)))
        writer.kv("ergodic", "true" if is_ergodic(P, mu, max(tol, 1e-10)) else "false")
        writer.kv("support", ",".join(str(i) for i in np.flatnonzero(mu.weights > 0)))
        writer.kv("weights", " ".join(_fmt(w) for w in mu.weights))
    if args.measure:
        mu = load_measure(args.measure, P.partition)
        dec = ergodic_decomposition(P, mu, max(tol, 1e-10))
        writer.section("decomposition")
        writer.kv("components", len(dec.components))
        for k, (w, nu) in enumerate(dec.components):
            writer.kv(f"weight_{k}", _fmt(w))
            writer.kv(f"support_{k}", ",".join(str(i) for i in np.flatnonzero(nu.weights > 0)))
    per = periodic_measures(P, p, tol, max_iter)
    writer.section(f"periodic p={p}")
    writer.kv("count", len(per))
    for k, (nu, d) in enumerate(per):
        writer.kv(f"minimal_period_{k}", d)
        writer.kv(f"support_{k}", ",".join(str(i) for i in np.flatnonzero(nu.weights > 0)))
    out = _out_dir(cfg, args)
    path = out / "measure_report.txt"
    writer.save(path)
    print(f"measure: {len(ms)} stationary, {len(per)} periodic(p={p}) -> {path}")
    return 0


def cmd_verify(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    config_dir = Path(args.config).parent if args.config else Path.cwd()
    P = _obtain_kernel(cfg, args, config_dir)
    seed = args.seed if args.seed is not None else _cfg_get(cfg, "mc", "master_seed")
    if args.tol is not None:
        cfg.setdefault("checks", {})["tol"] = args.tol
    if args.n_max is not None:
        cfg.setdefault("checks", {})["n_max"] = args.n_max
    if args.trials is not None:
        cfg.setdefault("checks", {})["trials"] = args.trials
    names = args.checks or _cfg_get(cfg, "checks", "names")
    requested = [t.strip() for t in names.split(",") if t.strip()]
    if requested == ["all"]:
        requested = list(CHECK_NAMES)
    unknown = [t for t in requested if t not in CHECK_NAMES]
    if unknown:
        raise ConfigError(f"unknown checks: {', '.join(unknown)}")
    solver_tol = float(_cfg_get(cfg, "solver", "tol"))
    max_iter = int(_cfg_get(cfg, "solver", "max_iter"))
    stationaries = stationary_measures(P, solver_tol, max_iter)
    if args.measure:
        mu = load_measure(args.measure, P.partition)
        require_stationary(P, mu, float(_cfg_get(cfg, "checks", "tol")))
        stationaries = [mu] + stationaries
    writer = ReportWriter("verify", seed, config_hash(cfg, seed))
    writer.kv("kernel_K", P.K)
    writer.kv("kernel_nnz", P.nnz)
    writer.kv("checks", ",".join(requested))
    writer.kv("trials", _cfg_get(cfg, "checks", "trials"))
    results = []
    for name in requested:
        rep = run_check(name, P, stationaries, cfg, seed)
        results.append(rep)
        writer.check(name, rep)
    n_pass = sum(r.passed for r in results)
    writer.section("summary")
    writer.kv("passed", n_pass)
    writer.kv("total", len(results))
    out = _out_dir(cfg, args)
    path = out / "verify_report.txt"
    writer.save(path)
    print(f"verify: {n_pass}/{len(results)} checks passed -> {path}")
    return 0 if n_pass == len(results) else 1


def cmd_simulate(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    config_dir = Path(args.config).parent if args.config else Path.cwd()
    P = _obtain_kernel(cfg, args, config_dir)
    seed = args.seed if args.seed is not None else _cfg_get(cfg, "mc", "master_seed")
    start = int(_cfg_get(cfg, "mc", "start"))
    steps = int(_cfg_get(cfg, "mc", "steps"))
    n_traj = args.trials if args.trials is not None else int(_cfg_get(cfg, "mc", "trajectories"))
    n_samples = int(_cfg_get(cfg, "mc", "n_samples"))
    obs_spec = str(_cfg_get(cfg, "mc", "observable"))
    if obs_spec == "coordinate":
        phi = Observable(P.partition.midpoints(), P.partition)
    elif obs_spec.startswith("indicator:"):
        k = int(obs_spec.split(":", 1)[1])
        values = np.zeros(P.K)
        values[k] = 1.0
        phi = Observable(values, P.partition)
    else:
        raise ConfigError(f"unknown observable spec {obs_spec!r}")
    out = _out_dir(cfg, args)

    traj_path = out / "trajectories.csv"
    with open(traj_path, "w") as fh:
        fh.write("trial,step,state\n")
        for t in range(n_traj):
            traj = sample_trajectory(P, start, steps, _backend.trajectory_seed(seed, t))
            for s, state in enumerate(traj.states):
                fh.write(f"{t},{s},{state}\n")

    est_path = out / "estimates.csv"
    cur = phi.values.copy()
    with open(est_path, "w") as fh:
        fh.write("j,mean,stderr,exact,z\n")
        for j in range(steps + 1):
            est = estimate_Lj_phi(P, phi, start, j, n_samples, seed)
            exact = float(cur[start])
            z = (est.mean - exact) / est.stderr if est.stderr > 0 else 0.0
            fh.write(
                f"{j},{_fmt(est.mean)},{_fmt(est.stderr)},{_fmt(exact)},{_fmt(z)}\n"
            )
            cur = P.matvec(cur)
    print(f"simulate: {n_traj} trajectories, {steps + 1} estimates -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ergodyn",
        description="Transfer-operator ergodic theory toolkit for noisy systems",
    )
    ap.add_argument("--version", action="version", version=f"ergodyn {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration file (INI)")
    common.add_argument("--kernel", help="kernel file path (overrides config)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=lambda s: int(s, 0), default=None, help="master seed (u64)")
    common.add_argument("--tol", type=float, default=None, help="check tolerance")
    common.add_argument("--n-max", dest="n_max", type=int, default=None, help="sup truncation horizon")
    common.add_argument("--trials", type=int, default=None, help="randomized trial count")
    common.add_argument("--measure", help="measure file to use/decompose")
    common.add_argument("--checks", help="comma list of check names or 'all'")
    sub.add_parser("kernel-build", parents=[common], help="discretize a configured system")
    sub.add_parser("measure", parents=[common], help="solve stationary/periodic measures")
    sub.add_parser("verify", parents=[common], help="run theorem checks")
    sub.add_parser("simulate", parents=[common], help="sample trajectories and estimates")
    return ap


_COMMANDS = {
    "kernel-build": cmd_kernel_build,
    "measure": cmd_measure,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, InvalidArgumentError) as e:
        print(f"error: invalid configuration: {e}", file=sys.stderr)
        return 2
    except (InvalidKernelError, InvalidMeasureError) as e:
        print(f"error: invalid data: {e}", file=sys.stderr)
        return 3
    except ConvergenceError as e:
        print(f"error: no convergence: {e}", file=sys.stderr)
        return 4
    except (PreconditionError, NotStationaryError) as e:
        print(f"error: precondition violated: {e}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())

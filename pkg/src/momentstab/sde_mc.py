"""Seeded Euler-Maruyama ensembles for linear Ito SDEs.

Paths are simulated in fixed blocks; block ``b`` draws its Wiener increments
from ``Philox(SeedSequence([seed, b]))`` in ``(step, path, driver)`` order,
so a trace depends only on the config (including ``block_size``) and never
on execution order.  Per-block statistics are merged in block order.

Norm moments ``E||x||^p`` are accumulated as ``exp(c) * mean(exp(p log||x|| - c))``
with a per-block shift ``c`` so that high degrees do not overflow early.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .core_model import LinearSDESystem, validate_system
from .errors import (InsufficientSamples, NonPositiveMoment, OverflowDetected,
                     SpecError)


@dataclass(frozen=True)
class EnsembleConfig:
    system: LinearSDESystem
    initial_state: tuple
    dt: float
    horizon: float
    paths: int
    seed: int = 0
    moment_degrees: tuple = (2,)
    monomials: tuple = ()
    samples: int = 512
    block_size: int = 16384

    def __post_init__(self):
        object.__setattr__(self, "initial_state",
                           tuple(float(v) for v in np.atleast_1d(self.initial_state)))
        object.__setattr__(self, "moment_degrees",
                           tuple(float(p) for p in self.moment_degrees))
        object.__setattr__(self, "monomials",
                           tuple(tuple(int(k) for k in t) for t in self.monomials))

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def check(self) -> None:
        problems = validate_system(self.system)
        n = self.system.dim
        if len(self.initial_state) != n:
            problems.append(f"initial_state has length {len(self.initial_state)}, expected {n}")
        if not (self.dt > 0 and self.horizon > 0 and self.dt < self.horizon):
            problems.append("need 0 < dt < horizon")
        if self.paths < 2:
            problems.append("paths must be >= 2")
        if self.samples < 2:
            problems.append("samples must be >= 2")
        if self.block_size < 1:
            problems.append("block_size must be >= 1")
        if any(p <= 0 for p in self.moment_degrees):
            problems.append("moment degrees must be positive")
        for t in self.monomials:
            if any(k < 0 or k >= n for k in t):
                problems.append(f"monomial {t} has indices outside 0..{n - 1}")
        if problems:
            raise SpecError("; ".join(problems))
        if not problems and self.dt * np.linalg.norm(self.system.drift, 2) >= 0.5:
            warnings.warn("dt * ||drift|| >= 0.5: explicit scheme may be inaccurate",
                          RuntimeWarning, stacklevel=2)

    def to_dict(self) -> dict:
        return {
            "system": self.system.to_dict(),
            "initial_state": list(self.initial_state),
            "dt": self.dt,
            "horizon": self.horizon,
            "paths": self.paths,
            "seed": self.seed,
            "moment_degrees": list(self.moment_degrees),
            "monomials": [list(t) for t in self.monomials],
            "samples": self.samples,
            "block_size": self.block_size,
        }


@dataclass(frozen=True, eq=False)
class MomentTrace:
    """Ensemble estimates on the sample grid.

    ``values[d, t]`` estimates ``E||x(t)||^p`` for ``p = degrees[d]``
    (Euclidean norm); ``mean`` is ``E[x(t)]`` with shape ``(times, n)``;
    ``monomial_values[j, t]`` estimates ``E[prod_k x^k]`` for
    ``monomials[j]``.  Every estimate has a matching standard error.
    If ``overflow`` is set the grid stops before the first non-finite sample.
    """

    times: np.ndarray
    degrees: tuple
    values: np.ndarray
    stderr: np.ndarray
    mean: np.ndarray
    mean_stderr: np.ndarray
    monomials: tuple = ()
    monomial_values: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    monomial_stderr: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    overflow: bool = False
    paths: int = 0

    def degree_index(self, p) -> int:
        for i, q in enumerate(self.degrees):
            if q == p:
                return i
        raise KeyError(f"degree {p} not tracked (have {self.degrees})")

    def moment(self, p) -> tuple[np.ndarray, np.ndarray]:
        i = self.degree_index(p)
        return self.values[i], self.stderr[i]

    def rows(self):
        for d, p in enumerate(self.degrees):
            for t, v, s in zip(self.times, self.values[d], self.stderr[d]):
                yield t, p, v, s

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "p", "estimate", "stderr"])
            for t, p, v, s in self.rows():
                w.writerow([f"{t:.17g}", f"{p:.17g}", f"{v:.17g}", f"{s:.17g}"])


class _Welford:
    """Streaming mean / M2 merged block by block (Chan et al.)."""

    def __init__(self, shape):
        self.n = 0
        self.mean = np.zeros(shape)
        self.m2 = np.zeros(shape)

    def merge(self, n, mean, m2):
        if self.n == 0:
            self.n, self.mean, self.m2 = n, mean.copy(), m2.copy()
            return
        tot = self.n + n
        delta = mean - self.mean
        self.mean = self.mean + delta * (n / tot)
        self.m2 = self.m2 + m2 + delta ** 2 * (self.n * n / tot)
        self.n = tot

    def stderr(self):
        var = self.m2 / max(self.n - 1, 1)
        return np.sqrt(np.maximum(var, 0.0) / self.n)


def _sample_steps(steps: int, samples: int) -> np.ndarray:
    return np.unique(np.rint(np.linspace(0, steps, samples)).astype(np.int64))


def _sample_stats(cfg, x, degrees):
    with np.errstate(divide="ignore"):
        logr = np.log(np.linalg.norm(x, axis=1))
    scaled = degrees[:, None] * logr[None, :]
    shift = scaled.max(axis=1)
    shift = np.where(np.isfinite(shift), shift, 0.0)
    vals = np.exp(scaled - shift[:, None])
    mean = vals.mean(axis=1)
    m2 = ((vals - mean[:, None]) ** 2).sum(axis=1)
    xm = x.mean(axis=0)
    xm2 = ((x - xm) ** 2).sum(axis=0)
    if cfg.monomials:
        mono = np.stack([np.prod(x[:, list(t)], axis=1) for t in cfg.monomials])
        mm = mono.mean(axis=1)
        mm2 = ((mono - mm[:, None]) ** 2).sum(axis=1)
    else:
        mm = mm2 = np.zeros(0)
    return shift, mean, m2, xm, xm2, mm, mm2


def _simulate_block(cfg, block, size, sample_steps):
    """Run one block; returns per-sample statistics and the first bad sample index."""
    sys = cfg.system
    n, count = sys.dim, sys.noise_count
    dt = cfg.dt
    sqdt = math.sqrt(dt)
    degrees = np.asarray(cfg.moment_degrees)
    step_matrix = np.eye(n) + dt * sys.drift
    drivers = [np.ascontiguousarray(sys.noise[:, :, a]) for a in range(count)]
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([cfg.seed, block])))

    # state stored as (n, paths) so each update is a small-by-wide matmul
    x = np.tile(np.asarray(cfg.initial_state, dtype=float)[:, None], (1, size))
    K = len(sample_steps)
    per_sample = []
    first_bad = K
    step = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for s_idx, target in enumerate(sample_steps):
            seg = int(target - step)
            if seg > 0:
                if count:
                    dW = rng.standard_normal((seg, size, count)) * sqdt
                for i in range(seg):
                    nxt = step_matrix @ x
                    for a in range(count):
                        nxt += (drivers[a] @ x) * dW[i, :, a]
                    x = nxt
                step = target
            if not np.all(np.isfinite(x)):
                first_bad = s_idx
                break
            per_sample.append(_sample_stats(cfg, x.T, degrees))
    if not per_sample:
        return size, None, first_bad
    cols = list(zip(*per_sample))
    shift, mean, m2 = (np.stack(c, axis=1) for c in cols[:3])  # (D, K)
    xm, xm2 = (np.stack(c) for c in cols[3:5])  # (K, n)
    mm, mm2 = (np.stack(c, axis=1) for c in cols[5:])  # (M, K)
    return size, ((shift, mean, m2), (xm, xm2), (mm, mm2)), first_bad


def simulate_ensemble(cfg: EnsembleConfig, strict: bool = False) -> MomentTrace:
    """Euler-Maruyama ensemble ``x <- x + A x dt + sum_a rho_a x dW_a``.

    Returns a :class:`MomentTrace` on ``cfg.samples`` uniform sample times.
    On a non-finite state the trace is truncated and ``overflow`` is set;
    with ``strict=True`` an :class:`OverflowDetected` carrying that trace is
    raised instead.
    """
    cfg.check()
    n = cfg.system.dim
    sample_steps = _sample_steps(cfg.steps, cfg.samples)
    K = len(sample_steps)
    D = len(cfg.moment_degrees)

    blocks = []
    cutoff = K
    nblocks = -(-cfg.paths // cfg.block_size)
    for b in range(nblocks):
        size = min(cfg.block_size, cfg.paths - b * cfg.block_size)
        size, st, first_bad = _simulate_block(cfg, b, size, sample_steps)
        cutoff = min(cutoff, first_bad)
        if cutoff == 0:
            break
        blocks.append((size,) + st)

    K = cutoff
    overflow = K < len(sample_steps)
    times = sample_steps[:K] * cfg.dt
    if K == 0:
        empty = np.zeros((D, 0))
        trace = MomentTrace(times, cfg.moment_degrees, empty, empty,
                            np.zeros((0, n)), np.zeros((0, n)), cfg.monomials,
                            np.zeros((len(cfg.monomials), 0)),
                            np.zeros((len(cfg.monomials), 0)), True, cfg.paths)
    else:
        shifts = np.stack([blk[1][0][:, :K] for blk in blocks])
        top = shifts.max(axis=0)
        norm_acc = _Welford((D, K))
        mean_acc = _Welford((K, n))
        mono_acc = _Welford((len(cfg.monomials), K))
        for blk, shift in zip(blocks, shifts):
            size, (_, bm, bm2), (xm, xm2), (mm, mm2) = blk
            mm = mm.reshape(len(cfg.monomials), len(xm))
            mm2 = mm2.reshape(len(cfg.monomials), len(xm))
            factor = np.exp(shift - top)
            norm_acc.merge(size, bm[:, :K] * factor, bm2[:, :K] * factor ** 2)
            mean_acc.merge(size, xm[:K], xm2[:K])
            mono_acc.merge(size, mm[:, :K], mm2[:, :K])
        with np.errstate(over="ignore"):
            scale = np.exp(top)
            values = norm_acc.mean * scale
            err = norm_acc.stderr() * scale
        bad = ~(np.isfinite(values) & np.isfinite(err))
        if bad.any():
            K2 = int(np.argmax(bad.any(axis=0)))
            overflow = True
            times, values, err = times[:K2], values[:, :K2], err[:, :K2]
            K = K2
        trace = MomentTrace(times, cfg.moment_degrees, values, err,
                            mean_acc.mean[:K], mean_acc.stderr()[:K], cfg.monomials,
                            mono_acc.mean[:, :K], mono_acc.stderr()[:, :K],
                            overflow, cfg.paths)
    if overflow and strict:
        raise OverflowDetected(
            f"non-finite state or moment after t = {trace.times[-1] if K else 0.0}", trace)
    return trace


@dataclass(frozen=True)
class GrowthFit:
    rate: float
    stderr: float
    samples: int

    def __iter__(self):
        return iter((self.rate, self.stderr))


def fit_log_slope(times, values, window: float = 0.5, min_samples: int = 10) -> GrowthFit:
    """Least-squares slope of ``log(values)`` over the trailing ``window`` of ``times``."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if not 0 < window <= 1:
        raise ValueError("window must be in (0, 1]")
    if len(times) == 0:
        raise InsufficientSamples("empty trace")
    t0, t1 = times[0], times[-1]
    sel = times >= t1 - window * (t1 - t0) - 1e-12 * abs(t1)
    t, v = times[sel], values[sel]
    if len(t) < min_samples:
        raise InsufficientSamples(f"{len(t)} samples in window, need {min_samples}")
    if not np.all(v > 0):
        raise NonPositiveMoment(
            f"moment is non-positive at t = {t[np.argmax(~(v > 0))]:.6g}")
    fit = stats.linregress(t, np.log(v))
    return GrowthFit(float(fit.slope), float(fit.stderr), int(len(t)))


def fit_growth_rate(trace: MomentTrace, degree, window: float = 0.5) -> GrowthFit:
    """Exponential rate of ``E||x||^p``; divide by ``p`` to compare with ``lambda_p``."""
    values, _ = trace.moment(degree)
    return fit_log_slope(trace.times, values, window)

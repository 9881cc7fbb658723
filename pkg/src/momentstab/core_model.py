"""Linear SDE systems with multiplicative noise.

The state obeys the Ito equation

    dx^i = A^i_j x^j dt + rho^i_{j,a} x^j dw^a,

with ``A`` an ``n x n`` drift matrix, ``rho`` an ``n x n x A`` noise tensor
stored as ``noise[i, j, a]`` and ``w^a`` independent standard Wiener
processes.  ``noise_count == 0`` is the deterministic system.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import InconsistentSpec, NonFiniteEvaluation, SpecError


@dataclass(frozen=True, eq=False)
class LinearSDESystem:
    """Drift matrix and noise tensor of a linear multiplicative-noise SDE.

    Construction does not validate; call :func:`validate_system` (or
    :meth:`checked`) to get the full list of problems at once.
    """

    drift: np.ndarray
    noise: np.ndarray

    def __post_init__(self):
        drift = np.array(self.drift, dtype=float, copy=True)
        noise = np.array(self.noise, dtype=float, copy=True)
        if drift.ndim == 0:
            drift = drift.reshape(1, 1)
        if noise.ndim == 2:
            # a single driver given as one n x n matrix
            noise = noise[:, :, None]
        drift.setflags(write=False)
        noise.setflags(write=False)
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "noise", noise)

    @property
    def dim(self) -> int:
        return self.drift.shape[0] if self.drift.ndim == 2 else 0

    @property
    def noise_count(self) -> int:
        return self.noise.shape[2] if self.noise.ndim == 3 else 0

    @classmethod
    def from_drivers(cls, drift, drivers) -> "LinearSDESystem":
        """Build from a list of ``n x n`` matrices, one per Wiener driver."""
        drift = np.atleast_2d(np.asarray(drift, dtype=float))
        n = drift.shape[0]
        drivers = [np.atleast_2d(np.asarray(d, dtype=float)) for d in drivers]
        if drivers:
            noise = np.stack(drivers, axis=-1)
        else:
            noise = np.zeros((n, n, 0))
        return cls(drift, noise)

    @classmethod
    def scalar(cls, a: float, rho: float) -> "LinearSDESystem":
        """The one-dimensional model ``dx = (-a dt + rho dw) x``."""
        return cls([[-a]], [[[rho]]])

    def drivers(self) -> list[np.ndarray]:
        return [self.noise[:, :, a] for a in range(self.noise_count)]

    def checked(self) -> "LinearSDESystem":
        problems = validate_system(self)
        if problems:
            raise SpecError("; ".join(problems))
        return self

    def __eq__(self, other):
        if not isinstance(other, LinearSDESystem):
            return NotImplemented
        return (self.drift.shape == other.drift.shape
                and self.noise.shape == other.noise.shape
                and np.array_equal(self.drift, other.drift)
                and np.array_equal(self.noise, other.noise))

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "noise_count": self.noise_count,
            "drift": self.drift.tolist(),
            "noise": [d.tolist() for d in self.drivers()],
        }


@dataclass(frozen=True, eq=False)
class CorrelationTensor:
    """Correlation tensor of the matrix-valued Brownian driver.

    ``values[i, j, m, n] = sum_a noise[i, j, a] * noise[m, n, a]``, so
    ``E[(dB x)^i (dB y)^m] = values[i, j, m, n] x^j y^n dt``.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def grouped(self) -> np.ndarray:
        """The ``n^2 x n^2`` matrix with rows ``(i, m)`` and columns ``(j, n)``."""
        n = self.dim
        return self.values.transpose(0, 2, 1, 3).reshape(n * n, n * n)

    def gram(self) -> np.ndarray:
        """Rows ``(i, j)``, columns ``(m, n)``: the Gram matrix of the drivers.

        This is the grouping under which the tensor is positive semidefinite.
        """
        n = self.dim
        return self.values.reshape(n * n, n * n)

    def apply(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Action on a product vector: ``C (x (x) y)`` as an ``n x n`` array."""
        return np.einsum("ijmn,j,n->im", self.values, x, y)

    def is_psd(self, rtol: float = 1e-12) -> bool:
        g = self.gram()
        g = 0.5 * (g + g.T)
        w = np.linalg.eigvalsh(g)
        scale = max(np.linalg.norm(g, 2), 1.0)
        return bool(w.min() >= -rtol * scale)


@dataclass(frozen=True, eq=False)
class DiagonalNoiseSpec:
    """Diagonal noise ``rho^i_{j,a} = delta^i_j r^i_a``.

    ``pair_matrix`` is ``rates @ rates.T``; when omitted it is computed.
    """

    rates: np.ndarray
    pair_matrix: np.ndarray | None = None

    def __post_init__(self):
        r = np.atleast_2d(np.array(self.rates, dtype=float, copy=True))
        if self.pair_matrix is None:
            v = r @ r.T
        else:
            v = np.atleast_2d(np.array(self.pair_matrix, dtype=float, copy=True))
        r.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "rates", r)
        object.__setattr__(self, "pair_matrix", v)

    @property
    def dim(self) -> int:
        return self.rates.shape[0]

    def check(self, rtol: float = 1e-12) -> None:
        n = self.dim
        if self.pair_matrix.shape != (n, n):
            raise InconsistentSpec(
                f"pair_matrix has shape {self.pair_matrix.shape}, expected {(n, n)}")
        gram = self.rates @ self.rates.T
        scale = max(1.0, float(np.abs(gram).max(initial=0.0)))
        err = float(np.abs(self.pair_matrix - gram).max(initial=0.0))
        if not err <= rtol * scale:
            raise InconsistentSpec(
                f"pair_matrix differs from rates @ rates.T by {err:.3e}")

    def full_system(self, drift) -> LinearSDESystem:
        n, count = self.rates.shape
        noise = np.zeros((n, n, count))
        idx = np.arange(n)
        noise[idx, idx, :] = self.rates
        return LinearSDESystem(drift, noise)


def validate_system(sys: LinearSDESystem) -> list[str]:
    """Every invariant violation of ``sys``, as readable strings.

    An empty list means the system is accepted by all other operations.
    """
    problems = []
    drift, noise = sys.drift, sys.noise
    if drift.ndim != 2 or drift.shape[0] != drift.shape[1]:
        problems.append(f"drift must be a square matrix, got shape {drift.shape}")
        return problems
    n = drift.shape[0]
    if n < 1:
        problems.append("dim must be >= 1")
        return problems
    if noise.ndim != 3 or noise.shape[:2] != (n, n):
        problems.append(
            f"noise must have shape ({n}, {n}, A), got {noise.shape}")
    for i, j in zip(*np.nonzero(~np.isfinite(drift))):
        problems.append(f"drift[{i}][{j}] is not finite ({drift[i, j]})")
    if noise.ndim == 3:
        for i, j, a in zip(*np.nonzero(~np.isfinite(noise))):
            problems.append(
                f"noise[{a}][{i}][{j}] (driver {a}) is not finite ({noise[i, j, a]})")
    return problems


def correlation_from_noise(sys: LinearSDESystem) -> CorrelationTensor:
    return CorrelationTensor(np.einsum("ija,mna->ijmn", sys.noise, sys.noise))


class NoiseLinearization(NamedTuple):
    alpha: float
    beta: float
    slope: float


def linearize_noise_coupling(F: Callable[[float, float], float], step: float = 1e-5,
                             noise_value: float = 1.0) -> NoiseLinearization:
    """Central-difference linearization of a response ``F(u, v)`` at the origin.

    Returns ``alpha = dF/du``, ``beta = dF/dv`` and the multiplicative slope
    ``d/du [F(u, v) - F(u, 0)]`` at ``u = 0`` for ``v = noise_value``.
    The additive part ``F(0, v)`` is left to the caller.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    h = float(step)
    samples = {}
    for u, v in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h),
                 (h, noise_value), (-h, noise_value)]:
        val = float(F(u, v))
        if not math.isfinite(val):
            raise NonFiniteEvaluation(f"F({u}, {v}) = {val}")
        samples[u, v] = val
    alpha = (samples[h, 0.0] - samples[-h, 0.0]) / (2 * h)
    beta = (samples[0.0, h] - samples[0.0, -h]) / (2 * h)
    du_at_v = (samples[h, noise_value] - samples[-h, noise_value]) / (2 * h)
    return NoiseLinearization(alpha, beta, du_at_v - alpha)


def _field_error(path, message):
    return SpecError(f"field '{path}': {message}")


def system_from_dict(doc: dict) -> LinearSDESystem:
    """Parse the canonical spec document.

    Keys: ``dim``, ``noise_count``, ``drift`` (row-major ``n x n``) and
    ``noise`` (a list of ``n x n`` matrices, one per driver).  Errors name
    the offending field.
    """
    if not isinstance(doc, dict):
        raise SpecError("spec document must be an object")
    for key in ("dim", "drift"):
        if key not in doc:
            raise _field_error(key, "missing")
    dim = doc["dim"]
    if isinstance(dim, bool) or not isinstance(dim, int):
        raise _field_error("dim", f"must be an integer, got {dim!r}")
    if dim < 1:
        raise _field_error("dim", "must be >= 1")
    noise_list = doc.get("noise", [])
    count = doc.get("noise_count", len(noise_list))
    if isinstance(count, bool) or not isinstance(count, int) or count < 0:
        raise _field_error("noise_count", f"must be a nonnegative integer, got {count!r}")
    if not isinstance(noise_list, list) or len(noise_list) != count:
        got = len(noise_list) if isinstance(noise_list, list) else type(noise_list).__name__
        raise _field_error("noise", f"expected {count} driver matrices, got {got}")

    def matrix(value, path):
        try:
            arr = np.array(value, dtype=float)
        except (TypeError, ValueError) as exc:
            raise _field_error(path, f"not a numeric matrix ({exc})") from None
        if arr.shape != (dim, dim):
            raise _field_error(path, f"expected shape ({dim}, {dim}), got {arr.shape}")
        return arr

    drift = matrix(doc["drift"], "drift")
    drivers = [matrix(d, f"noise[{a}]") for a, d in enumerate(noise_list)]
    sys = LinearSDESystem.from_drivers(drift, drivers)
    problems = validate_system(sys)
    if problems:
        raise SpecError("; ".join(problems))
    return sys


def load_system(path) -> LinearSDESystem:
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return system_from_dict(doc)
    except SpecError as exc:
        raise SpecError(f"{path}: {exc}") from None


def dump_system(sys: LinearSDESystem, path) -> None:
    with open(path, "w") as fh:
        json.dump(sys.to_dict(), fh, indent=2)
        fh.write("\n")

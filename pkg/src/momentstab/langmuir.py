"""Langmuir waves in a randomly modulated background.

All quantities are dimensionless (lengths rescaled by ``sqrt(3) V_thermal``,
``m`` is the plasma frequency).  Second moments of the Klein-Gordon field
``phi_tt = phi_xx - (m^2 + zeta) phi`` with multiplicative white-in-time
noise ``zeta`` are studied through

* the constant-correlation quartic
  ``l^4 + 2 l^2 (e1^2 + e2^2) + (e1^2 - e2^2)^2 = 2 l sigma^2``,
* the 1D spatio-temporal white noise relation
  ``sigma^4 = 4 (l^2 + k^2)(l^2 + 4 m^2 + k^2)``,
* and, for positive decaying correlations ``C(x)``, a ground-state problem
  ``-s psi'' - C psi / (2 l) = E psi`` matched to ``E = -(m^2 + k^2/4 + l^2/4)``
  with stiffness ``s = 1 + (k/l)^2``.

The bound-state problems are solved in one spatial dimension; for ``k > 0``
this drops the transverse Laplacian of the 3D problem.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.linalg as sla
from scipy import optimize
from scipy.special import erf

from .core_model import LinearSDESystem
from .errors import BracketNotFound, GridTooCoarse, NoBoundState, SpecError

UNITS_NOTE = "dimensionless units: x in sqrt(3)*V_thermal, frequencies in omega_pe"
REDUCTION_NOTE = "1D reduction: transverse Laplacian dropped, k along z"

CLASSIFY_TOL = 1e-10
MAX_HALF_WIDTH = 1 << 10
# Dirichlet walls shift the level by about 4 kappa^2 exp(-2 kappa L)
DECAY_LENGTHS = 8.0
PROFILE_KINDS = ("constant", "delta", "gaussian", "exponential", "rectangular")
LOCALIZED_KINDS = ("gaussian", "exponential", "rectangular")


@dataclass(frozen=True)
class CorrelationProfile:
    """Homogeneous spatial correlation ``C(x)`` with ``C(0) = amplitude``.

    gaussian ``c exp(-x^2 / (2 w^2))``, exponential ``c exp(-|x| / w)``,
    rectangular ``c`` on ``|x| <= w``.  ``delta`` is ``c delta(x)`` and
    ``constant`` is ``c`` everywhere; neither uses ``width``.
    """

    kind: str
    amplitude: float
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise SpecError(f"unknown correlation kind {self.kind!r}, expected one of {PROFILE_KINDS}")
        if not self.amplitude >= 0:
            raise SpecError(f"amplitude must be >= 0, got {self.amplitude}")
        if self.kind in LOCALIZED_KINDS and not self.width > 0:
            raise SpecError(f"width must be > 0, got {self.width}")

    def with_amplitude(self, c: float) -> "CorrelationProfile":
        return CorrelationProfile(self.kind, c, self.width)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        c, w = self.amplitude, self.width
        if self.kind == "gaussian":
            return c * np.exp(-0.5 * (x / w) ** 2)
        if self.kind == "exponential":
            return c * np.exp(-np.abs(x) / w)
        if self.kind == "rectangular":
            return np.where(np.abs(x) <= w, c, 0.0)
        if self.kind == "constant":
            return np.full_like(x, c)
        raise ValueError("delta correlation has no pointwise values")

    def _antiderivative(self, x):
        # odd primitive of C/c, so integrals over [a, b] are F(b) - F(a)
        w = self.width
        if self.kind == "gaussian":
            return w * math.sqrt(math.pi / 2) * erf(x / (math.sqrt(2) * w))
        if self.kind == "exponential":
            return np.sign(x) * w * -np.expm1(-np.abs(x) / w)
        if self.kind == "rectangular":
            return np.clip(x, -w, w)
        if self.kind == "constant":
            return x
        return 0.5 * np.sign(x)

    def integral(self) -> float:
        """``int C(x) dx`` over the real line."""
        if self.kind == "constant":
            return math.inf
        return self.amplitude * float(2 * self._antiderivative(np.inf))

    def cell_average(self, centers, h: float):
        """Mean of ``C`` over ``[x - h/2, x + h/2]`` for each center ``x``."""
        centers = np.asarray(centers, dtype=float)
        F = self._antiderivative
        return self.amplitude * (F(centers + h / 2) - F(centers - h / 2)) / h


@dataclass(frozen=True)
class LangmuirProblem:
    plasma_mass: float
    sigma2: float = 0.0
    correlation: CorrelationProfile = field(
        default_factory=lambda: CorrelationProfile("gaussian", 1.0, 1.0))

    def __post_init__(self):
        if not self.plasma_mass > 0:
            raise SpecError(f"plasma_mass must be > 0, got {self.plasma_mass}")
        if not self.sigma2 >= 0:
            raise SpecError(f"sigma2 must be >= 0, got {self.sigma2}")


@dataclass(frozen=True, eq=False)
class DispersionRoots:
    roots: np.ndarray
    max_real: float
    classification: str


def classify(max_real: float, tol: float = CLASSIFY_TOL) -> str:
    if max_real > tol:
        return "unstable"
    if max_real < -tol:
        return "stable"
    return "marginal"


def _make_roots(roots, classification=None) -> DispersionRoots:
    roots = np.asarray(roots, dtype=complex)
    roots = roots[np.lexsort((-roots.imag, -roots.real))]
    max_real = float(roots.real.max())
    return DispersionRoots(roots, max_real, classification or classify(max_real))


def epsilon_k(m: float, k: float) -> float:
    """Langmuir frequency ``sqrt(m^2 + k^2)``."""
    if not m > 0:
        raise SpecError(f"plasma mass must be > 0, got {m}")
    return math.hypot(m, k)


def dispersion_zero_noise(m: float, k1: float, k2: float) -> np.ndarray:
    """The four two-point frequencies ``+-e1 +- e2``, descending."""
    e1, e2 = epsilon_k(m, k1), epsilon_k(m, k2)
    return np.sort([e1 + e2, e1 - e2, e2 - e1, -e1 - e2])[::-1]


def companion_roots(coeffs) -> np.ndarray:
    """Roots of ``c0 x^d + c1 x^(d-1) + ... + cd`` from the companion matrix."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "f")
    if len(c) < 2:
        return np.zeros(0, dtype=complex)
    c = c / c[0]
    d = len(c) - 1
    comp = np.zeros((d, d))
    comp[0, :] = -c[1:]
    comp[1:, :-1] = np.eye(d - 1)
    return sla.eigvals(comp)


def quartic_coefficients(e1: float, e2: float, sigma2: float) -> np.ndarray:
    return np.array([1.0, 0.0, 2 * (e1 ** 2 + e2 ** 2), -2 * sigma2, (e1 ** 2 - e2 ** 2) ** 2])


def quartic_residual(lam, e1, e2, sigma2):
    lam = np.asarray(lam, dtype=complex)
    return np.abs(np.polyval(quartic_coefficients(e1, e2, sigma2), lam))


def dispersion_complete_correlation(m: float, k1: float, k2: float, sigma2: float) -> DispersionRoots:
    """Growth rates of the two-point correlation for constant ``C = sigma2``."""
    if not sigma2 >= 0:
        raise SpecError(f"sigma2 must be >= 0, got {sigma2}")
    e1, e2 = epsilon_k(m, k1), epsilon_k(m, k2)
    return _make_roots(companion_roots(quartic_coefficients(e1, e2, sigma2)))


def dominant_mode_cubic_roots(m: float, k: float, sigma2: float) -> np.ndarray:
    """Roots of ``l^3 + 4 l e^2 = 2 sigma2`` (the ``k1 = k2`` modes with ``l != 0``)."""
    e = epsilon_k(m, k)
    return companion_roots([1.0, 0.0, 4 * e * e, -2 * sigma2])


def asymptotic_growth_large_k(m: float, k: float, sigma2: float) -> float:
    """Leading-order growth ``sigma2 / (2 e_k^2)``; warns outside ``e_k^2 > 10 sigma2``."""
    e2 = epsilon_k(m, k) ** 2
    if sigma2 > 0 and not e2 > 10 * sigma2:
        warnings.warn(f"e_k^2 = {e2:.4g} is not >> sigma2 = {sigma2:.4g}; "
                      "asymptotic growth rate is unreliable", RuntimeWarning, stacklevel=2)
    return sigma2 / (2 * e2)


def white_noise_threshold(m: float, k: float) -> float:
    """Critical ``sigma^4 = 4 k^2 (4 m^2 + k^2)``."""
    return 4 * k * k * (4 * m * m + k * k)


def white_noise_decay(lam, m: float, k: float, sigma2: float):
    """Decay constant ``alpha`` of ``psi(x) = exp(-alpha |x|)`` from the jump condition."""
    lam = np.asarray(lam, dtype=complex)
    B = 4 * (lam ** 2 + k * k)
    return lam * sigma2 / B


def white_noise_growth(m: float, k: float, sigma2: float, rtol: float = 1e-12) -> DispersionRoots:
    """Admissible (``Re l >= 0``) roots for 1D delta-correlated noise.

    ``l^2 = -(2 m^2 + k^2) +- sqrt(4 m^4 + sigma^4 / 4)``.  The verdict comes
    from comparing ``sigma^4`` with the threshold: below it every root is
    imaginary (stable), at it the top root is zero (marginal).
    """
    if not m > 0:
        raise SpecError(f"plasma mass must be > 0, got {m}")
    if not sigma2 >= 0:
        raise SpecError(f"sigma2 must be >= 0, got {sigma2}")
    s4 = sigma2 * sigma2
    thr = white_noise_threshold(m, k)
    root = math.sqrt(4 * m ** 4 + s4 / 4)
    base = 2 * m * m + k * k
    # upper branch rewritten to avoid cancellation near the threshold
    u_plus = (s4 - thr) / 4 / (root + base)
    u_minus = -base - root
    lams = []
    for u in (u_plus, u_minus):
        r = np.sqrt(complex(u))
        lams.extend([r, -r])
    lams = np.array(lams)
    admissible = lams[lams.real >= 0]
    if abs(s4 - thr) <= rtol * max(s4, thr) or (s4 == 0 and thr == 0):
        verdict = "marginal"
    elif s4 > thr:
        verdict = "unstable"
    else:
        verdict = "stable"
    return _make_roots(admissible, verdict)


def appendix_matrix(eps1: float, eps2: float, sigma2: float) -> np.ndarray:
    """``E(e1) (x) 1 + 1 (x) E(e2) + sigma2 a (x) a`` on the 4-dim space of ``v_{i1 i2}``."""
    E1 = np.array([[0.0, 1.0], [-eps1 ** 2, 0.0]])
    E2 = np.array([[0.0, 1.0], [-eps2 ** 2, 0.0]])
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    one = np.eye(2)
    return np.kron(E1, one) + np.kron(one, E2) + sigma2 * np.kron(a, a)


def appendix_identities(eps: float) -> dict:
    """Max-abs defects of the 2x2 identities used to reduce the 4x4 problem."""
    E = np.array([[0.0, 1.0], [-eps ** 2, 0.0]])
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    u1 = np.diag([1.0, 0.0])
    u2 = np.diag([0.0, 1.0])
    one = np.eye(2)
    return {
        "E^2 = -eps^2": float(np.abs(E @ E + eps ** 2 * one).max()),
        "a^2 = 0": float(np.abs(a @ a).max()),
        "E a = u1": float(np.abs(E @ a - u1).max()),
        "a E = u2": float(np.abs(a @ E - u2).max()),
        "u1 + u2 = 1": float(np.abs(u1 + u2 - one).max()),
    }


def appendix_dispersion_check(eps1: float, eps2: float, sigma2: float) -> float:
    """Largest residual of ``4 e1^2 e2^2 + 2 i w s2 = (e1^2 + e2^2 - w^2)^2`` over
    the eigenvalues ``i w`` of :func:`appendix_matrix`."""
    mu = sla.eigvals(appendix_matrix(eps1, eps2, sigma2))
    w = -1j * mu
    lhs = 4 * eps1 ** 2 * eps2 ** 2 + 2j * w * sigma2
    rhs = (eps1 ** 2 + eps2 ** 2 - w ** 2) ** 2
    return float(np.abs(lhs - rhs).max())


# ---------------------------------------------------------------------------
# bound states


def _lowest_level(profile: CorrelationProfile, lam: float, half_width: float,
                  points: int, stiffness: float = 1.0) -> float:
    """Lowest Dirichlet eigenvalue of ``-s d^2/dz^2 - C(z) / (2 lam)`` on ``[-L, L]``.

    Solved in ``y = z / sqrt(s)`` (so the kinetic term is ``-d^2/dy^2``) with
    ``points`` intervals; the potential is the exact cell average of ``C``,
    which keeps wells narrower than a cell at their correct strength.
    """
    root_s = math.sqrt(stiffness)
    Ly = half_width / root_s
    h = 2 * Ly / points
    y = -Ly + h * np.arange(1, points)
    V = -profile.cell_average(root_s * y, root_s * h) / (2 * lam)
    off = np.full(points - 2, -1.0 / h ** 2)
    w = sla.eigh_tridiagonal(2.0 / h ** 2 + V, off, eigvals_only=True,
                             select="i", select_range=(0, 0))
    return float(w[0])


def _converged_level(profile, lam, half_width, points, stiffness=1.0, tol=1e-6,
                     max_points=1 << 20):
    """Double the grid until the lowest level moves by at most ``tol``."""
    e = _lowest_level(profile, lam, half_width, points, stiffness)
    while True:
        if 2 * points > max_points:
            raise GridTooCoarse(
                f"lowest level not converged to {tol:g} at {points} points "
                f"(lambda = {lam:.6g})")
        finer = _lowest_level(profile, lam, half_width, 2 * points, stiffness)
        points *= 2
        if abs(finer - e) <= tol:
            return finer, points
        e = finer


def _check_localized(profile):
    if profile.kind not in LOCALIZED_KINDS:
        raise SpecError(
            f"bound-state problems need a positive decaying correlation, got {profile.kind!r}")


def bound_state_energy(profile: CorrelationProfile, lam: float, half_width: float | None = None,
                       points: int = 4096, tol: float = 1e-6, bound_tol: float = 1e-10,
                       adaptive: bool = True) -> float:
    """Ground-state energy ``E_lam`` of ``-psi'' - C(x) psi / (2 lam)``.

    Second-order finite differences with Dirichlet walls at ``+-half_width``
    (default: start at ``10 * width`` and widen until the walls are
    ``DECAY_LENGTHS`` decay lengths of the ground state away).  With ``adaptive`` the grid is doubled until
    ``E`` changes by at most ``tol``.  Raises :class:`NoBoundState` when the
    level is not below ``-bound_tol``.
    """
    _check_localized(profile)
    if not lam > 0:
        raise SpecError(f"lambda must be > 0, got {lam}")
    L = 10 * profile.width if half_width is None else half_width
    if L < 10 * profile.width * (1 - 1e-12):
        raise SpecError(f"half_width {L} is below 10 * width = {10 * profile.width}")
    if points < 512:
        raise SpecError(f"need at least 512 grid points, got {points}")

    def level(L, npts):
        if adaptive:
            return _converged_level(profile, lam, L, npts, tol=tol)[0]
        return _lowest_level(profile, lam, L, npts)

    if profile.amplitude == 0:
        raise NoBoundState("zero correlation amplitude has no bound state")
    e = level(L, points)
    if half_width is None:
        # weak wells have wide ground states: grow the box (at fixed spacing)
        # until the walls sit DECAY_LENGTHS decay lengths 1/sqrt(-E) out
        while (e >= 0 or L * math.sqrt(-e) < DECAY_LENGTHS) and L < MAX_HALF_WIDTH * profile.width:
            L *= 2
            points *= 2
            e = level(L, points)
    if e >= -bound_tol:
        raise NoBoundState(f"lowest level {e:.3e} >= 0 at lambda = {lam:.6g}")
    return e


def square_well_energy(depth: float, half_width: float) -> float:
    """Even ground state of a 1D square well ``-depth`` on ``|x| < half_width``.

    Root of ``q tan(q a) = kappa`` with ``q = sqrt(depth - |E|)`` and
    ``kappa = sqrt(|E|)``.
    """
    a = half_width
    # q in (0, min(sqrt(depth), pi / (2a))), where q tan(qa) - sqrt(depth - q^2) is increasing
    qmax = min(math.sqrt(depth), math.pi / (2 * a))

    def f(q):
        return q * math.tan(q * a) - math.sqrt(max(depth - q * q, 0.0))

    hi = qmax * (1 - 1e-15)
    if f(hi) < 0:
        hi = qmax
    q = optimize.brentq(f, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return -(depth - q * q)


@dataclass(frozen=True)
class GrowthRate:
    lam: float
    energy: float
    residual: float
    grid_points: int
    half_width: float


def _matching_half_width(profile, m, k=0.0, stiffness=1.0):
    # states at the matching energy decay at least like exp(-sqrt(|T| / s) |z|)
    target = m * m + k * k / 4
    return max(10 * profile.width, 20 * math.sqrt(stiffness / target))


def find_growth_rate_k0(problem: LangmuirProblem, points: int = 4096, xtol: float = 1e-12,
                        grid_tol: float = 1e-6, lam_min: float | None = None,
                        max_grow: int = 60) -> GrowthRate:
    """The unique ``lam > 0`` with ``E_lam = -(m^2 + lam^2 / 4)`` for ``k = 0``.

    ``g(lam) = E_lam + m^2 + lam^2 / 4`` is increasing, negative as
    ``lam -> 0`` and positive for large ``lam``; the root is bracketed by
    geometric growth from ``1e-6 m`` and bisected.  The grid is then refined
    until ``E`` at the root is stable to ``grid_tol`` and the root re-solved.
    """
    profile = problem.correlation
    _check_localized(profile)
    m = problem.plasma_mass
    if profile.amplitude <= 0:
        raise BracketNotFound("zero correlation amplitude: no growing mode")
    L = _matching_half_width(profile, m)
    lo = 1e-6 * m if lam_min is None else lam_min

    def solve(npts):
        def g(lam):
            return _lowest_level(profile, lam, L, npts) + m * m + lam * lam / 4

        g_lo = g(lo)
        hi = max(2 * lo, m)
        g_hi = g(hi)
        grows = 0
        while g_hi <= 0 and grows < max_grow:
            hi *= 2
            g_hi = g(hi)
            grows += 1
        if not (g_lo < 0 < g_hi):
            raise BracketNotFound(
                f"no sign change: g({lo:.3g}) = {g_lo:.6g}, g({hi:.3g}) = {g_hi:.6g}")
        lam = optimize.bisect(g, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
        return lam, g

    lam, g = solve(points)
    _, fine = _converged_level(profile, lam, L, points, tol=grid_tol)
    if fine != 2 * points:
        # converged only on a finer grid than the one used for the root
        points = fine // 2
        lam, g = solve(points)
    energy = _lowest_level(profile, lam, L, points)
    return GrowthRate(lam, energy, abs(g(lam)), points, L)


def growth_matching_scan(problem: LangmuirProblem, lams: Iterable[float], k: float = 0.0,
                         points: int = 4096) -> list[tuple[float, float, float]]:
    """Rows ``(lambda, E_lambda, matching_residual)`` for diagnostics output."""
    profile = problem.correlation
    _check_localized(profile)
    m = problem.plasma_mass
    rows = []
    for lam in lams:
        s = 1 + (k / lam) ** 2
        L = _matching_half_width(profile, m, k, s)
        e = _lowest_level(profile, lam, L, points, s)
        rows.append((float(lam), e, e + m * m + k * k / 4 + lam * lam / 4))
    return rows


@dataclass(frozen=True)
class ThresholdResult:
    k: float
    critical_amplitude: float
    amplitude: float
    verdict: str
    lam: float | None
    grid_points: int
    note: str = REDUCTION_NOTE


class _KMode:
    """Matching function ``h(lam) = E_lam + m^2 + k^2/4 + lam^2/4`` at fixed ``k``."""

    def __init__(self, profile, m, k, points, scan_points=32, lam_floor=1e-6):
        self.profile = profile
        self.m = m
        self.k = k
        self.points = points
        self.scan_points = scan_points
        self.lam_floor = lam_floor * min(m, k)

    def h(self, c, lam):
        s = 1 + (self.k / lam) ** 2
        prof = self.profile.with_amplitude(c)
        L = _matching_half_width(prof, self.m, self.k, s)
        e = _lowest_level(prof, lam, L, self.points, s)
        return e + self.m ** 2 + self.k ** 2 / 4 + lam ** 2 / 4

    def lam_ceiling(self, c):
        # E >= -c / (2 lam), so h > 0 once lam^3 >= 2 c
        return max((2 * c) ** (1 / 3), 2 * self.lam_floor)

    def minimum(self, c):
        """``(lam, h)`` at the minimum of ``h`` over ``lam > 0``."""
        lams = np.geomspace(self.lam_floor, self.lam_ceiling(c), self.scan_points)
        vals = np.array([self.h(c, lam) for lam in lams])
        i = int(np.argmin(vals))
        if i == 0:
            return float(lams[0]), float(vals[0])
        lo = lams[i - 1]
        hi = lams[min(i + 1, len(lams) - 1)]
        res = optimize.minimize_scalar(lambda t: self.h(c, math.exp(t)),
                                       bounds=(math.log(lo), math.log(hi)),
                                       method="bounded", options={"xatol": 1e-6})
        if res.fun < vals[i]:
            return float(math.exp(res.x)), float(res.fun)
        return float(lams[i]), float(vals[i])

    def unstable(self, c):
        return self.minimum(c)[1] < 0

    def root(self, c):
        lam_min, h_min = self.minimum(c)
        if h_min >= 0:
            return None
        hi = self.lam_ceiling(c)
        return optimize.bisect(lambda lam: self.h(c, lam), lam_min, hi, xtol=1e-10)


def stability_threshold_k(problem: LangmuirProblem, k: float, points: int = 1024,
                          rtol: float = 1e-4, max_points: int = 1 << 16,
                          max_bracket: int = 60) -> ThresholdResult:
    """Critical correlation amplitude ``c*`` for the mode ``k > 0``.

    At amplitude ``c`` the mode is unstable when some ``lam > 0`` makes
    ``h(lam) = E_lam + m^2 + k^2/4 + lam^2/4`` negative, where ``E_lam`` is the
    ground level of ``-(1 + (k/lam)^2) d^2/dz^2 - C(z) / (2 lam)``.
    Deeper wells only lower ``E_lam``, so the verdict is monotone in ``c`` and
    ``c*`` is found by bisection to relative tolerance ``rtol``.  The grid is
    doubled until ``c*`` moves by less than ``rtol``.  The verdict and growth
    rate are reported for ``problem.correlation.amplitude``.
    """
    profile = problem.correlation
    _check_localized(profile)
    if not k > 0:
        raise SpecError(f"k must be > 0, got {k}")
    m = problem.plasma_mass

    def critical(npts, guess):
        mode = _KMode(profile, m, k, npts)
        c_lo = c_hi = guess
        step = 2.0
        if guess != profile.amplitude:
            # warm start from a coarser grid
            c_lo, c_hi, step = guess * (1 - 8 * rtol), guess * (1 + 8 * rtol), 1 + 64 * rtol
        tries = 0
        while mode.unstable(c_lo):
            c_lo /= step
            tries += 1
            if tries > max_bracket:
                raise BracketNotFound(f"unstable for every amplitude down to {c_lo:.3g}")
        tries = 0
        while not mode.unstable(c_hi):
            c_hi *= step
            tries += 1
            if tries > max_bracket:
                raise BracketNotFound(f"stable for every amplitude up to {c_hi:.3g}")
        while (c_hi - c_lo) > rtol * c_hi / 4:
            mid = 0.5 * (c_lo + c_hi)
            if mode.unstable(mid):
                c_hi = mid
            else:
                c_lo = mid
        return 0.5 * (c_lo + c_hi), mode

    start = profile.amplitude if profile.amplitude > 0 else 1.0
    c_star, mode = critical(points, start)
    while True:
        if 2 * points > max_points:
            raise GridTooCoarse(f"c* not converged to rtol {rtol:g} at {points} points")
        finer, fine_mode = critical(2 * points, c_star)
        points *= 2
        converged = abs(finer - c_star) <= rtol * finer
        c_star, mode = finer, fine_mode
        if converged:
            break

    c = profile.amplitude
    lam = mode.root(c) if c > 0 else None
    verdict = "unstable" if lam is not None else "stable"
    return ThresholdResult(k, c_star, c, verdict, lam, points)


def stability_verdict_k(problem: LangmuirProblem, k: float, points: int = 2048):
    """``(verdict, lam)`` for the mode ``k > 0`` at the problem's amplitude."""
    profile = problem.correlation
    _check_localized(profile)
    if not k > 0:
        raise SpecError(f"k must be > 0, got {k}")
    mode = _KMode(profile, problem.plasma_mass, k, points)
    lam = mode.root(profile.amplitude)
    return ("unstable" if lam is not None else "stable"), lam


# ---------------------------------------------------------------------------
# grid scans and discretized fields


def parse_grid(spec: str) -> np.ndarray:
    """``"start:stop:count"`` -> ``linspace(start, stop, count)``."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise SpecError(f"grid {spec!r} must be start:stop:count")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise SpecError(f"grid {spec!r} must be start:stop:count") from None
    if count < 1:
        raise SpecError(f"grid {spec!r} needs count >= 1")
    return np.linspace(start, stop, count)


def stability_map(m: float, ks, sigma2s, model: str = "constant"):
    """Rows ``(k, sigma2, max_real_lambda, verdict)`` sorted by ``(k, sigma2)``.

    ``model`` is ``"constant"`` (quartic with ``k1 = k2 = k``) or ``"white"``.
    """
    rows = []
    for k in sorted(float(v) for v in ks):
        for s2 in sorted(float(v) for v in sigma2s):
            if model == "constant":
                r = dispersion_complete_correlation(m, k, k, s2)
            elif model == "white":
                r = white_noise_growth(m, k, s2)
            else:
                raise SpecError(f"unknown model {model!r}")
            rows.append((k, s2, r.max_real, r.classification))
    return rows


def periodic_field_system(m: float, sigma2: float, points: int, length: float) -> LinearSDESystem:
    """Periodic-grid discretization of ``d phi = p dt``, ``d p = -(m^2 - D2) phi dt + phi dw``.

    Constant correlation ``C = sigma2`` means one Wiener driver shared by all
    grid points.  State order is ``(phi_0..phi_{N-1}, p_0..p_{N-1})``.
    """
    h = length / points
    lap = (np.roll(np.eye(points), 1, axis=1) + np.roll(np.eye(points), -1, axis=1)
           - 2 * np.eye(points)) / h ** 2
    K = m * m * np.eye(points) - lap
    zero = np.zeros((points, points))
    drift = np.block([[zero, np.eye(points)], [-K, zero]])
    rho = np.block([[zero, zero], [math.sqrt(sigma2) * np.eye(points), zero]])
    return LinearSDESystem.from_drivers(drift, [rho])


def periodic_epsilons(m: float, points: int, length: float) -> np.ndarray:
    """``e_k`` of the discrete Laplacian for every grid wavenumber."""
    h = length / points
    k = 2 * np.pi * np.fft.fftfreq(points, d=h)
    return np.sqrt(m * m + (4 / h ** 2) * np.sin(k * h / 2) ** 2)


def periodic_max_growth(m: float, sigma2: float, points: int, length: float) -> float:
    """Largest ``Re l`` of the quartic over all wavenumber pairs of the grid."""
    eps = np.unique(np.round(periodic_epsilons(m, points, length), 12))
    best = -math.inf
    for e1 in eps:
        for e2 in eps:
            roots = companion_roots(quartic_coefficients(e1, e2, sigma2))
            best = max(best, float(roots.real.max()))
    return best

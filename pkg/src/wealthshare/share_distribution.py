"""Distribution of the share ``omega = x1 / (x1 + x2)`` of two i.i.d. draws.

Two independent evaluators are provided:

* :func:`share_density_closed` -- closed forms for the bounded and the
  exponentially tempered laws;
* :func:`share_density_integral` -- direct quadrature of
  ``(1-omega)**-2 * int x psi(omega x / (1-omega)) psi(x) dx``, valid for any
  parental density and used as an oracle for the closed forms.
"""

from dataclasses import dataclass
import math

import numpy as np

from .ensembles import EnsembleSpec, Kind, density
from .errors import DomainError
from .special_functions import QuadratureSpec, bessel_k, integrate

__all__ = [
    "ShareDensity",
    "MinMaxPair",
    "min_max_pair",
    "support",
    "share_density_closed",
    "share_density_integral",
    "share_density",
    "share_mean",
    "normalization",
    "total_mass",
    "tabulate",
    "write_table_csv",
]

_ORACLE_QUAD = QuadratureSpec(atol=1e-300, rtol=1e-12, max_subdivisions=4000)
_MOMENT_QUAD = QuadratureSpec(atol=1e-15, rtol=1e-13, max_subdivisions=4000)
# beyond this many units of the cut-off scale the tempering factor underflows
_TAIL_FACTOR = 800.0


@dataclass(frozen=True)
class MinMaxPair:
    m: float
    M: float


def min_max_pair(omega):
    """``m = min(1/omega, 1/(1-omega))`` and ``M = max(...)``."""
    a, b = 1.0 / omega, 1.0 / (1.0 - omega)
    return MinMaxPair(m=min(a, b), M=max(a, b))


def support(spec):
    """Closed support ``(low, high)`` of P(omega); ``(0, 1)`` for the exponential kind."""
    if spec.kind is Kind.BOUNDED:
        d = spec.delta
        edge = d / (1.0 + d)
        return edge, 1.0 - edge
    return 0.0, 1.0


def normalization(spec):
    """Constant prefactor of the closed form."""
    a, d = spec.alpha, spec.delta
    if spec.kind is Kind.BOUNDED:
        return a / (2.0 * math.expm1(a * math.log(d)) ** 2)
    return 1.0 / (2.0 * bessel_k(a, 2.0 * math.sqrt(d)) ** 2)


def _as_omega(omega):
    w = np.asarray(omega, dtype=float)
    if np.any(~((w > 0) & (w < 1))):
        raise DomainError("omega must lie strictly inside (0, 1)")
    return w


def share_density_closed(spec, omega):
    """Closed-form P(omega) for scalar or array ``omega`` in (0, 1).

    Both kinds are evaluated on ``w = min(omega, 1 - omega)`` so the result is
    symmetric by construction. Bounded kind, with ``w <= 1/2`` so that
    ``M = 1/w`` and ``m = 1/(1-w)``::

        C (w (1-w))**(-1-a) * (w**(2a) - delta**(2a) (1-w)**(2a)),
        C = a / (2 (1 - delta**a)**2),

    and zero below ``w_c = delta / (1 + delta)``. Exponential kind::

        K_{2a}(2 sqrt(delta / (w (1-w)))) / (2 K_a(2 sqrt(delta))**2 w (1-w)).
    """
    w = _as_omega(omega)
    scalar = w.ndim == 0
    w = np.minimum(w, 1.0 - w)
    a, d = spec.alpha, spec.delta
    c = normalization(spec)
    s = w * (1.0 - w)
    if spec.kind is Kind.BOUNDED:
        edge = d / (1.0 + d)
        with np.errstate(under="ignore"):
            bracket = w ** (2 * a) - d ** (2 * a) * (1.0 - w) ** (2 * a)
            out = c * s ** (-1.0 - a) * np.maximum(bracket, 0.0)
        out = np.where(w < edge, 0.0, out)
    else:
        z = 2.0 * np.sqrt(d / np.atleast_1d(s))
        with np.errstate(under="ignore"):
            out = c * bessel_k(2 * a, z) / np.atleast_1d(s)
        out = out.reshape(w.shape)
    return float(out) if scalar else out


def _oracle_integrand(spec, r):
    def f(u):
        x = np.exp(u)
        return x * x * density(spec, r * x) * density(spec, x)
    return f


def share_density_integral(spec, omega, quad=None):
    """P(omega) by quadrature of the two-density overlap integral.

    The integral runs over ``u = log x``. For the bounded kind it is limited
    to the exact overlap of the two supports, ``[max(L, L/r), min(H, H/r)]``
    with ``r = omega / (1 - omega)``; for the exponential kind it is cut where
    both tempering factors are below ``exp(-800)`` and seeded with
    breakpoints at every cut-off scale.
    """
    w = float(omega)
    if not 0 < w < 1:
        raise DomainError("omega must lie strictly inside (0, 1)")
    quad = quad or _ORACLE_QUAD
    r = w / (1.0 - w)
    lo_cut, hi_cut = spec.lower_cutoff, spec.upper_cutoff
    f = _oracle_integrand(spec, r)
    if spec.kind is Kind.BOUNDED:
        a = max(lo_cut, lo_cut / r)
        b = min(hi_cut, hi_cut / r)
        if not a < b:
            return 0.0
        value = integrate(f, math.log(a), math.log(b), quad)
    else:
        scales = sorted({lo_cut, lo_cut / r, hi_cut, hi_cut / r})
        a = math.log(scales[0] / _TAIL_FACTOR)
        b = math.log(scales[-1] * _TAIL_FACTOR)
        points = [math.log(s) for s in scales]
        value = integrate(f, a, b, quad, points=points)
    return value / (1.0 - w) ** 2


@dataclass(frozen=True)
class ShareDensity:
    """P(omega) for one ensemble, with its support and closed-form prefactor."""

    ensemble: EnsembleSpec

    @property
    def support(self):
        return support(self.ensemble)

    @property
    def norm_constant(self):
        return normalization(self.ensemble)

    def __call__(self, omega):
        return share_density_closed(self.ensemble, omega)

    def oracle(self, omega, quad=None):
        return share_density_integral(self.ensemble, omega, quad)


def share_density(spec):
    return ShareDensity(spec)


def _breakpoints(spec, lo):
    """Geometric breakpoints between the support edge and 1/2."""
    d = spec.delta
    pts = []
    step = max(d, 1e-14)
    while lo + step < 0.5:
        pts.append(lo + step)
        step *= 4.0
    return pts


def _half_integral(density_, weight, quad):
    spec = density_.ensemble
    lo, _ = density_.support
    pts = _breakpoints(spec, lo)

    def left(w):
        return weight(w) * density_(w)

    def right(w):
        return weight(1.0 - w) * density_(w)

    # right half mirrored onto the left: P is symmetric
    return integrate(left, lo, 0.5, quad, pts), integrate(right, lo, 0.5, quad, pts)


def total_mass(density_, quad=None):
    """Quadrature of P over its support (should be 1)."""
    if isinstance(density_, EnsembleSpec):
        density_ = ShareDensity(density_)
    left, right = _half_integral(density_, lambda w: np.ones_like(w), quad or _MOMENT_QUAD)
    return left + right


def share_mean(density_, quad=None):
    """Mean share ``int omega P(omega) d omega`` by quadrature.

    The two halves are integrated separately, the right one mirrored, which
    keeps the cusp of the bounded kind at an interval endpoint.
    """
    if isinstance(density_, EnsembleSpec):
        density_ = ShareDensity(density_)
    left, right = _half_integral(density_, lambda w: w, quad or _MOMENT_QUAD)
    return left + right


def tabulate(density_, grid_points):
    """``(omega, P)`` pairs on a uniform grid for plotting.

    Bounded kind: the grid spans the closed support ``[w_c, 1 - w_c]``, where
    the endpoint values are the one-sided limits (zero). Exponential kind: the
    support is open, so the grid is ``k / (N + 1)`` for ``k = 1..N``.
    """
    if isinstance(density_, EnsembleSpec):
        density_ = ShareDensity(density_)
    n = int(grid_points)
    if n < 2:
        raise DomainError("grid_points must be >= 2")
    spec = density_.ensemble
    if spec.kind is Kind.BOUNDED:
        lo, hi = density_.support
        omega = np.linspace(lo, hi, n)
        # mirror the right half so the grid itself is symmetric
        omega[n - n // 2:] = 1.0 - omega[: n // 2][::-1]
    else:
        omega = np.arange(1, n + 1) / (n + 1.0)
        omega[n - n // 2:] = 1.0 - omega[: n // 2][::-1]
    p = np.asarray(density_(omega), dtype=float)
    # P is symmetric; copying the left half keeps the table exactly so
    p[n - n // 2:] = p[: n // 2][::-1]
    return list(zip(omega.tolist(), p.tolist()))


def write_table_csv(fh, density_, rows, oracle=None):
    """Write a tabulation as ``omega,p_omega[,p_omega_oracle]`` CSV."""
    spec = density_.ensemble if isinstance(density_, ShareDensity) else density_
    fh.write(
        f"# kind={spec.kind.value} alpha={spec.alpha!r} delta={spec.delta!r} "
        f"grid={len(rows)}\n"
    )
    if oracle is None:
        fh.write("omega,p_omega\n")
        for w, p in rows:
            fh.write(f"{w:.17g},{p:.17g}\n")
    else:
        fh.write("omega,p_omega,p_omega_oracle\n")
        for (w, p), q in zip(rows, oracle):
            fh.write(f"{w:.17g},{p:.17g},{q:.17g}\n")

"""Extrema, modal shape and critical cut-off ratios of P(omega).

P is symmetric about 1/2, so every search runs on the left half
``(support_low, 1/2]`` and is mirrored. Extrema are bracketed by sign changes
of the discrete first difference on a scan grid and then refined by bisection
on a central-difference derivative.

The scan grid is the union of three point sets, each of ``resolution``
points: uniform on the half-support, geometric in the distance from the
support edge (features near the edge shrink with delta), and geometric in the
distance from 1/2 (the off-centre maxima of the exponential kind emerge from
1/2 as delta crosses its critical value).
"""

from dataclasses import dataclass, field
from enum import Enum
import math
import warnings

import numpy as np
from scipy.optimize import minimize_scalar

from .ensembles import EnsembleSpec, Kind
from .errors import (
    DomainError,
    KindError,
    NoSignChangeError,
    NoTransitionError,
    ResolutionWarning,
)
from .share_distribution import share_density_closed, support
from .special_functions import BracketSolverSpec, bessel_k_ratio, find_root

__all__ = [
    "ExtremumKind",
    "ModalClass",
    "Extremum",
    "ModalProfile",
    "CriticalThresholds",
    "find_extrema",
    "classify",
    "curvature_coefficient",
    "critical_delta_exponential",
    "critical_delta_bounded",
    "critical_delta_by_classification",
    "critical_thresholds",
    "bounded_half_alpha_extrema",
    "BOUNDED_HALF_ALPHA_DELTA_C",
    "BOUNDED_HALF_ALPHA_DELTA_CC",
]

DEFAULT_RESOLUTION = 4096
_MAX_RESOLUTION_FACTOR = 32
# discrete differences below this fraction of P are treated as flat
_NOISE = 1e-13
# values this far below the peak are underflow debris, not structure
_TAIL_FLOOR = 1e-200
_DERIVATIVE_STEP = 1e-7
_CURVATURE_STEP = 1e-4
_CUSP_SLOPE = 1e-6
_EDGE_GEOMETRIC_FLOOR = 1e-12
_CENTRE_GEOMETRIC_FLOOR = 1e-7
_LN_DELTA_BRACKET = (math.log(1e-12), math.log(0.99))

BOUNDED_HALF_ALPHA_DELTA_C = 1.0 / (17.0 + 12.0 * math.sqrt(2.0))
BOUNDED_HALF_ALPHA_DELTA_CC = (
    259.0 + 144.0 * math.sqrt(3.0) - 12.0 * math.sqrt(897.0 + 518.0 * math.sqrt(3.0))
) / 11.0


class ExtremumKind(str, Enum):
    MAXIMUM = "Maximum"
    MINIMUM = "Minimum"
    CUSP = "Cusp"


class ModalClass(str, Enum):
    UNIMODAL = "Unimodal"
    W_CENTER_DOMINANT = "WCenterDominant"
    W_EDGE_DOMINANT = "WEdgeDominant"
    M_SHAPED = "MShaped"
    NEAR_UNIFORM = "NearUniform"


@dataclass(frozen=True)
class Extremum:
    location: float
    value: float
    kind: ExtremumKind

    @property
    def is_peak(self):
        return self.kind is not ExtremumKind.MINIMUM

    def as_dict(self):
        return {"location": self.location, "value": self.value, "kind": self.kind.value}


@dataclass(frozen=True)
class ModalProfile:
    """Extrema of P ordered by location, and the modal-shape label.

    ``near_uniform`` flags profiles whose spread over the central 80% of the
    support is below 1% of their mean level; the label itself still reflects
    the extrema.
    """

    ensemble: EnsembleSpec
    extrema: tuple
    modal_class: ModalClass
    near_uniform: bool = False

    @property
    def maxima(self):
        return [e for e in self.extrema if e.is_peak]

    @property
    def minima(self):
        return [e for e in self.extrema if not e.is_peak]

    @property
    def centre(self):
        return min(self.extrema, key=lambda e: abs(e.location - 0.5))

    def as_dict(self):
        return {
            "ensemble": self.ensemble.as_dict(),
            "modal_class": self.modal_class.value,
            "near_uniform": self.near_uniform,
            "extrema": [e.as_dict() for e in self.extrema],
        }


@dataclass(frozen=True)
class CriticalThresholds:
    alpha: float
    kind: Kind
    delta_c: float = None
    delta_cc: float = None
    method: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.delta_c is not None and self.delta_cc is not None:
            if not self.delta_cc < self.delta_c:
                raise DomainError(
                    f"inconsistent thresholds: delta_cc={self.delta_cc} >= delta_c={self.delta_c}"
                )

    def as_dict(self):
        out = {"alpha": self.alpha, "kind": self.kind.value, "delta_c": self.delta_c}
        if self.kind is Kind.BOUNDED:
            out["delta_cc"] = self.delta_cc
        if self.method:
            out["method"] = dict(self.method)
        return out


# ---------------------------------------------------------------------------
# extrema
# ---------------------------------------------------------------------------

def _scan_grid(lo, resolution):
    span = 0.5 - lo
    uniform = lo + span * np.arange(1, resolution + 1) / resolution
    from_edge = lo + span * np.geomspace(_EDGE_GEOMETRIC_FLOOR, 1.0, resolution)
    to_centre = 0.5 - span * np.geomspace(_CENTRE_GEOMETRIC_FLOOR, 1.0, resolution)
    grid = np.unique(np.concatenate([uniform, from_edge, to_centre, [0.5]]))
    return grid[(grid > lo) & (grid <= 0.5)]


def _sign_changes(values):
    """Index pairs (i, j) of consecutive non-flat differences with opposite sign.

    The extremum lies between grid points ``i`` and ``j + 1``.
    """
    diff = np.diff(values)
    scale = np.maximum(np.abs(values[:-1]), np.abs(values[1:]))
    floor = _TAIL_FLOOR * np.max(np.abs(values))
    flat = np.abs(diff) <= np.maximum(_NOISE * scale, floor)
    sign = np.where(flat, 0, np.sign(diff)).astype(int)
    idx = np.flatnonzero(sign)
    out = []
    for i, j in zip(idx[:-1], idx[1:]):
        if sign[i] != sign[j]:
            out.append((int(i), int(j), sign[i] > 0))
    return out


def _derivative(p, lo, width):
    h0 = _DERIVATIVE_STEP * width

    def dp(w):
        h = min(h0, 0.5 * (w - lo), 0.5 * (0.5 - w)) if w < 0.5 else h0
        if h <= 0:
            return 0.0
        return (p(w + h) - p(w - h)) / (2.0 * h)
    return dp


def _refine(p, dp, a, b, is_max):
    try:
        return find_root(dp, BracketSolverSpec(a, b, xtol=1e-14 * max(1.0, b), max_iterations=200))
    except NoSignChangeError:
        sign = -1.0 if is_max else 1.0
        res = minimize_scalar(lambda w: sign * p(w), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-14})
        return float(res.x)


def _centre_kind(spec, p, width):
    if spec.kind is Kind.BOUNDED:
        h = _DERIVATIVE_STEP * width
        centre = p(0.5)
        left = (centre - p(0.5 - h)) / h
        right = (p(0.5 + h) - centre) / h
        if left * right < 0 and min(abs(left), abs(right)) > _CUSP_SLOPE:
            return ExtremumKind.CUSP if left > 0 else ExtremumKind.MINIMUM
    h = _CURVATURE_STEP * width
    second = p(0.5 - h) + p(0.5 + h) - 2.0 * p(0.5)
    return ExtremumKind.MINIMUM if second > 0 else ExtremumKind.MAXIMUM


def _scan(spec, resolution):
    lo, _ = support(spec)
    width = 1.0 - 2.0 * lo
    grid = _scan_grid(lo, resolution)
    values = share_density_closed(spec, grid)
    return grid, values, _sign_changes(values) if len(grid) > 2 else []


def _extrema_from_scan(spec, grid, values, changes):
    lo, _ = support(spec)
    width = 1.0 - 2.0 * lo

    def p(w):
        return share_density_closed(spec, w)

    dp = _derivative(p, lo, width)
    left = []
    for i, j, is_max in changes:
        a, b = float(grid[i]), float(min(grid[j + 1], 0.5))
        loc = _refine(p, dp, a, b, is_max)
        kind = ExtremumKind.MAXIMUM if is_max else ExtremumKind.MINIMUM
        if left and loc - left[-1].location <= 1e-12:
            # a maximum/minimum pair merging into an inflection point
            warnings.warn(
                f"refined extrema collide near omega={loc:.6g}; dropping the pair",
                ResolutionWarning,
                stacklevel=3,
            )
            left.pop()
            continue
        left.append(Extremum(loc, p(loc), kind))

    centre_kind = _centre_kind(spec, p, width)
    centre = Extremum(0.5, p(0.5), centre_kind)

    # a minimum at 1/2 needs a peak to its left; when the scan cannot resolve
    # it (delta within noise of the transition), take the best grid point
    if centre_kind is ExtremumKind.MINIMUM and not any(e.is_peak for e in left):
        inner = values[:-1]
        k = int(np.argmax(inner))
        if inner[k] > centre.value:
            left.append(Extremum(float(grid[k]), float(inner[k]), ExtremumKind.MAXIMUM))

    mirrored = [Extremum(1.0 - e.location, e.value, e.kind) for e in reversed(left)]
    return left + [centre] + mirrored


def _signature(extrema):
    return tuple(e.kind for e in extrema)


def find_extrema(spec, resolution=DEFAULT_RESOLUTION, adaptive=True):
    """Extrema of P(omega) on its support, ordered by location.

    The scan resolution doubles until the extrema pattern is unchanged over
    two successive doublings (or ``32 * resolution`` is reached) when
    ``adaptive`` is true.

    Returns
    -------
    list of Extremum
        Off-centre extrema come in mirrored pairs ``(w, 1 - w)`` with equal
        values; the point ``w = 1/2`` is always reported, as a ``Cusp`` for the
        bounded kind's peak and as a smooth ``Maximum``/``Minimum`` otherwise.
    """
    resolution = int(resolution)
    if resolution < 64:
        raise DomainError("resolution must be >= 64")
    grid, values, changes = _scan(spec, resolution)
    extrema = _extrema_from_scan(spec, grid, values, changes)
    if not adaptive:
        return extrema
    history = [_signature(extrema)]
    res = resolution
    while res < _MAX_RESOLUTION_FACTOR * resolution:
        if len(history) >= 3 and history[-1] == history[-2] == history[-3]:
            break
        res *= 2
        grid, values, changes = _scan(spec, res)
        extrema = _extrema_from_scan(spec, grid, values, changes)
        history.append(_signature(extrema))
    return extrema


def _is_near_uniform(spec):
    lo, hi = support(spec)
    width = hi - lo
    w = np.linspace(lo + 0.1 * width, hi - 0.1 * width, 401)
    p = share_density_closed(spec, w)
    return bool(p.max() - p.min() < 0.01 * p.mean())


def _label(extrema):
    centre = min(extrema, key=lambda e: abs(e.location - 0.5))
    left = [e for e in extrema if e.location < centre.location]
    peaks = [e for e in left if e.is_peak]
    troughs = [e for e in left if not e.is_peak]
    if centre.is_peak:
        if not peaks:
            return ModalClass.UNIMODAL
        edge = max(e.value for e in peaks)
        if edge > centre.value:
            return ModalClass.W_EDGE_DOMINANT
        return ModalClass.W_CENTER_DOMINANT
    if peaks and len(troughs) == 0:
        return ModalClass.M_SHAPED
    # more structure than the known phases; fall back on the centre's role
    warnings.warn(
        f"unexpected extrema pattern {[e.kind.value for e in extrema]}",
        ResolutionWarning,
        stacklevel=3,
    )
    return ModalClass.M_SHAPED


def classify(spec, resolution=DEFAULT_RESOLUTION):
    """Modal profile of P(omega) for one ensemble."""
    extrema = find_extrema(spec, resolution)
    return ModalProfile(
        ensemble=spec,
        extrema=tuple(extrema),
        modal_class=_label(extrema),
        near_uniform=_is_near_uniform(spec),
    )


# ---------------------------------------------------------------------------
# critical cut-off ratios
# ---------------------------------------------------------------------------

def curvature_coefficient(spec):
    """Sign-carrying quadratic coefficient of P about 1/2 (exponential kind).

    ``1 - alpha - 2 sqrt(delta) K_{2alpha-1}(4 sqrt(delta)) / K_{2alpha}(4 sqrt(delta))``;
    a positive prefactor is dropped, so only the sign is meaningful.
    """
    if spec.kind is not Kind.EXPONENTIAL:
        raise KindError("curvature_coefficient is defined for the exponential kind only")
    return _curvature(spec.alpha, spec.delta)


def _curvature(alpha, delta):
    root = math.sqrt(delta)
    return 1.0 - alpha - 2.0 * root * bessel_k_ratio(2 * alpha - 1, 2 * alpha, 4.0 * root)


def _check_alpha(alpha):
    alpha = float(alpha)
    if not 0 < alpha < 1:
        raise NoTransitionError(
            f"P(omega) has no modality transition for alpha={alpha}; need 0 < alpha < 1"
        )
    return alpha


def critical_delta_exponential(alpha, xtol=1e-12):
    """delta_c where the curvature of P at 1/2 vanishes, exponential kind.

    Solves ``1 - alpha = 2 sqrt(d) K_{2alpha-1}(4 sqrt(d)) / K_{2alpha}(4 sqrt(d))``
    by bisection in ``ln d`` over ``[ln 1e-12, ln 0.99]``.
    """
    alpha = _check_alpha(alpha)
    lo, hi = _LN_DELTA_BRACKET
    try:
        ln_root = find_root(
            lambda u: _curvature(alpha, math.exp(u)),
            BracketSolverSpec(lo, hi, xtol=xtol, max_iterations=400),
        )
    except NoSignChangeError as exc:
        raise NoTransitionError(
            f"curvature equation has no root in delta in [1e-12, 0.99] for alpha={alpha}"
        ) from exc
    return math.exp(ln_root)


def _bisect_ln_delta(predicate, lo, hi, rtol):
    """Bisection in ln(delta); ``predicate(lo)`` is True and ``predicate(hi)`` False."""
    with warnings.catch_warnings():
        # extrema merge at the transition itself; collisions are expected there
        warnings.simplefilter("ignore", ResolutionWarning)
        while hi - lo > rtol:
            mid = 0.5 * (lo + hi)
            if predicate(math.exp(mid)):
                lo = mid
            else:
                hi = mid
    return lo, hi


def _has_off_centre_extrema(kind, alpha, resolution):
    def predicate(delta):
        spec = EnsembleSpec.from_delta(kind, alpha, delta)
        extrema = find_extrema(spec, resolution)
        return any(e.location < 0.5 - 1e-12 for e in extrema)
    return predicate


def _edge_dominates(alpha, resolution):
    def predicate(delta):
        spec = EnsembleSpec.from_delta(Kind.BOUNDED, alpha, delta)
        extrema = find_extrema(spec, resolution)
        peaks = [e for e in extrema if e.is_peak and e.location < 0.5 - 1e-12]
        if not peaks:
            return False
        return max(e.value for e in peaks) > share_density_closed(spec, 0.5)
    return predicate


def critical_delta_bounded(alpha, resolution=DEFAULT_RESOLUTION, rtol=1e-9):
    """delta_c and delta_cc of the bounded kind by bisection on delta.

    delta_c is where off-centre extrema first appear as delta decreases;
    delta_cc is where the off-centre maxima overtake P(1/2). Both are bisected
    in ``ln delta`` to relative width ``rtol`` (1e-9 gives an absolute
    accuracy far below 1e-8 for delta < 1). ``delta_cc`` is ``None`` when the
    edge maxima still do not dominate at delta = 1e-12.
    """
    alpha = _check_alpha(alpha)
    lo, hi = _LN_DELTA_BRACKET
    has_w = _has_off_centre_extrema(Kind.BOUNDED, alpha, resolution)
    if has_w(math.exp(hi)) or not has_w(math.exp(lo)):
        raise NoTransitionError(
            f"no extrema-count transition in delta in [1e-12, 0.99] for alpha={alpha}"
        )
    c_lo, c_hi = _bisect_ln_delta(has_w, lo, hi, rtol)
    delta_c = math.exp(0.5 * (c_lo + c_hi))

    method = {"delta_c": "extrema-count bisection", "delta_cc": "equal-height bisection"}
    edge = _edge_dominates(alpha, resolution)
    if edge(math.exp(lo)):
        cc_lo, cc_hi = _bisect_ln_delta(edge, lo, c_lo, rtol)
        delta_cc = math.exp(0.5 * (cc_lo + cc_hi))
    else:
        delta_cc = None
        method["delta_cc"] = "absent: below the 1e-12 search floor"
    return CriticalThresholds(
        alpha=alpha, kind=Kind.BOUNDED, delta_c=delta_c, delta_cc=delta_cc, method=method
    )


def critical_delta_by_classification(kind, alpha, resolution=DEFAULT_RESOLUTION, rtol=1e-9):
    """delta_c located by bisecting on ``classify(...) != Unimodal``.

    Independent of the curvature equation: it only looks at the shape of the
    closed-form density.
    """
    alpha = _check_alpha(alpha)
    kind = Kind.parse(kind)

    def not_unimodal(delta):
        spec = EnsembleSpec.from_delta(kind, alpha, delta)
        return _label(find_extrema(spec, resolution)) is not ModalClass.UNIMODAL

    lo, hi = _LN_DELTA_BRACKET
    if not_unimodal(math.exp(hi)) or not not_unimodal(math.exp(lo)):
        raise NoTransitionError(
            f"no modality transition in delta in [1e-12, 0.99] for alpha={alpha}"
        )
    a, b = _bisect_ln_delta(not_unimodal, lo, hi, rtol)
    return math.exp(0.5 * (a + b))


def critical_thresholds(kind, alpha, resolution=DEFAULT_RESOLUTION):
    """Thresholds for either kind; both are absent when ``alpha >= 1``."""
    kind = Kind.parse(kind)
    alpha = float(alpha)
    if not alpha > 0:
        raise DomainError(f"alpha must be > 0, got {alpha}")
    if alpha >= 1:
        return CriticalThresholds(alpha=alpha, kind=kind,
                                  method={"delta_c": "absent: no transition for alpha >= 1"})
    if kind is Kind.BOUNDED:
        return critical_delta_bounded(alpha, resolution)
    return CriticalThresholds(
        alpha=alpha,
        kind=kind,
        delta_c=critical_delta_exponential(alpha),
        method={"delta_c": "curvature equation root"},
    )


def bounded_half_alpha_extrema(delta):
    """Closed-form off-centre (maximum, minimum) on the left half, alpha = 1/2.

    Valid for ``delta < (17 + 12 sqrt 2)**-1``.
    """
    disc = 1.0 - 34.0 * delta + delta * delta
    if disc <= 0:
        raise DomainError(f"no off-centre extrema for delta={delta} >= delta_c")
    root = math.sqrt(disc)
    denom = 8.0 * (1.0 + delta)
    return (1.0 + 7.0 * delta - root) / denom, (1.0 + 7.0 * delta + root) / denom

"""Modal-shape phase diagram over the (alpha, ln delta) plane."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import math
import os

import numpy as np

from . import __version__
from .ensembles import RNG_ALGORITHM, EnsembleSpec, Kind
from .errors import DomainError
from .modality import (
    DEFAULT_RESOLUTION,
    ModalClass,
    classify,
    critical_delta_bounded,
    critical_delta_by_classification,
)

__all__ = ["SweepSpec", "Cell", "Boundary", "PhaseDiagramGrid", "sweep", "export"]

# alpha values this close to 1 are the separating column itself
_ALPHA_ONE_TOL = 1e-9


@dataclass(frozen=True)
class SweepSpec:
    kind: Kind
    alpha_range: tuple = (0.05, 2.5)
    ln_delta_range: tuple = (-10.0, -0.05)
    alpha_steps: int = 20
    delta_steps: int = 20
    resolution: int = DEFAULT_RESOLUTION

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind.parse(self.kind))
        a0, a1 = map(float, self.alpha_range)
        l0, l1 = map(float, self.ln_delta_range)
        if not 0 < a0 < a1:
            raise DomainError(f"alpha_range must satisfy 0 < min < max, got {self.alpha_range}")
        if not l0 < l1 < 0:
            raise DomainError(f"ln_delta_range must satisfy min < max < 0, got {self.ln_delta_range}")
        if int(self.alpha_steps) < 2 or int(self.delta_steps) < 2:
            raise DomainError("alpha_steps and delta_steps must be >= 2")
        object.__setattr__(self, "alpha_range", (a0, a1))
        object.__setattr__(self, "ln_delta_range", (l0, l1))
        object.__setattr__(self, "alpha_steps", int(self.alpha_steps))
        object.__setattr__(self, "delta_steps", int(self.delta_steps))

    @property
    def alphas(self):
        a = np.linspace(*self.alpha_range, self.alpha_steps)
        a[np.abs(a - 1.0) < _ALPHA_ONE_TOL] = 1.0
        return a

    @property
    def ln_deltas(self):
        return np.linspace(*self.ln_delta_range, self.delta_steps)


@dataclass(frozen=True)
class Cell:
    alpha: float
    ln_delta: float
    modal_class: ModalClass = None
    error: str = None

    @property
    def label(self):
        return self.modal_class.value if self.modal_class is not None else "Error"


@dataclass(frozen=True)
class Boundary:
    alpha: float
    ln_delta_c: float = None
    ln_delta_cc: float = None
    error: str = None


@dataclass(frozen=True)
class PhaseDiagramGrid:
    spec: SweepSpec
    cells: tuple = field(repr=False)
    boundaries: tuple = field(repr=False)

    def column(self, alpha):
        """Cells of the column closest to ``alpha``, ordered by ln delta."""
        alphas = np.array([c.alpha for c in self.cells])
        nearest = alphas[np.argmin(np.abs(alphas - alpha))]
        return [c for c in self.cells if c.alpha == nearest]

    def boundary(self, alpha):
        return min(self.boundaries, key=lambda b: abs(b.alpha - alpha))

    def class_matrix(self):
        """Labels as an ``(alpha_steps, delta_steps)`` array."""
        labels = np.array([c.label for c in self.cells], dtype=object)
        return labels.reshape(self.spec.alpha_steps, self.spec.delta_steps)


def _classify_cell(kind, alpha, ln_delta, resolution):
    try:
        spec = EnsembleSpec.from_delta(kind, alpha, math.exp(ln_delta))
        profile = classify(spec, resolution)
    except (ArithmeticError, ValueError) as exc:
        return Cell(alpha, ln_delta, None, f"{type(exc).__name__}: {exc}")
    label = profile.modal_class
    if alpha == 1.0 and kind is Kind.EXPONENTIAL and profile.near_uniform:
        label = ModalClass.NEAR_UNIFORM
    return Cell(alpha, ln_delta, label)


def _column_boundary(kind, alpha, resolution):
    try:
        if kind is Kind.BOUNDED:
            th = critical_delta_bounded(alpha, resolution)
            ln_cc = math.log(th.delta_cc) if th.delta_cc is not None else None
            return Boundary(alpha, math.log(th.delta_c), ln_cc)
        delta_c = critical_delta_by_classification(kind, alpha, resolution)
        return Boundary(alpha, math.log(delta_c))
    except (ArithmeticError, ValueError) as exc:
        return Boundary(alpha, error=f"{type(exc).__name__}: {exc}")


def _run(task):
    what, args = task
    return _classify_cell(*args) if what == "cell" else _column_boundary(*args)


def sweep(spec, n_jobs=1):
    """Classify every grid cell and locate delta_c (and delta_cc) per column.

    Columns with ``alpha >= 1`` have no boundary. Cell and column failures are
    recorded in the result rather than raised. With ``n_jobs > 1`` the tasks
    run in worker processes; results are placed by grid position, so the
    output does not depend on scheduling.
    """
    tasks = [
        ("cell", (spec.kind, float(a), float(ld), spec.resolution))
        for a in spec.alphas
        for ld in spec.ln_deltas
    ]
    tasks += [
        ("boundary", (spec.kind, float(a), spec.resolution))
        for a in spec.alphas
        if a < 1.0
    ]
    if n_jobs == 1:
        results = [_run(t) for t in tasks]
    else:
        workers = n_jobs if n_jobs and n_jobs > 0 else os.cpu_count()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run, tasks, chunksize=4))
    n_cells = spec.alpha_steps * spec.delta_steps
    return PhaseDiagramGrid(spec, tuple(results[:n_cells]), tuple(results[n_cells:]))


def _fmt(value):
    return "" if value is None else f"{value:.17g}"


def _header(grid, what):
    s = grid.spec
    return (
        f"# {what} kind={s.kind.value} alpha_range={s.alpha_range[0]!r}:{s.alpha_range[1]!r} "
        f"ln_delta_range={s.ln_delta_range[0]!r}:{s.ln_delta_range[1]!r} "
        f"alpha_steps={s.alpha_steps} delta_steps={s.delta_steps} "
        f"resolution={s.resolution} version=wealthshare {__version__} rng={RNG_ALGORITHM}\n"
    )


def export(grid, path):
    """Write ``<path>_cells.csv`` and ``<path>_boundaries.csv``.

    Returns the two file paths.
    """
    path = os.fspath(path)
    cells_path = f"{path}_cells.csv"
    bounds_path = f"{path}_boundaries.csv"
    bounded = grid.spec.kind is Kind.BOUNDED
    try:
        with open(cells_path, "w", newline="") as fh:
            fh.write(_header(grid, "cells"))
            fh.write("alpha,ln_delta,class\n")
            for c in grid.cells:
                fh.write(f"{c.alpha:.17g},{c.ln_delta:.17g},{c.label}\n")
        with open(bounds_path, "w", newline="") as fh:
            fh.write(_header(grid, "boundaries"))
            fh.write("alpha,ln_delta_c,ln_delta_cc\n" if bounded else "alpha,ln_delta_c\n")
            for b in grid.boundaries:
                row = f"{b.alpha:.17g},{_fmt(b.ln_delta_c)}"
                if bounded:
                    row += f",{_fmt(b.ln_delta_cc)}"
                fh.write(row + "\n")
    except OSError as exc:
        raise OSError(f"cannot write phase diagram to {exc.filename or path}: {exc.strerror}") from exc
    return cells_path, bounds_path

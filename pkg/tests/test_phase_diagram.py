import pytest

from wealthshare.errors import DomainError
from wealthshare.phase_diagram import SweepSpec, export, sweep


def _small(kind="bounded", **kw):
    args = dict(alpha_range=(0.5, 1.5), ln_delta_range=(-6.0, -1.0), alpha_steps=2,
                delta_steps=2, resolution=1024)
    args.update(kw)
    return SweepSpec(kind, **args)


def test_spec_validation():
    with pytest.raises(DomainError):
        SweepSpec("bounded", alpha_range=(1.0, 0.5))
    with pytest.raises(DomainError):
        SweepSpec("bounded", ln_delta_range=(-1.0, 0.5))
    with pytest.raises(DomainError):
        SweepSpec("bounded", alpha_steps=1)


def test_alpha_one_is_snapped():
    spec = SweepSpec("exp", alpha_range=(0.5, 1.5), alpha_steps=3)
    assert spec.alphas[1] == 1.0


def test_two_by_two_export(tmp_path):
    grid = sweep(_small())
    cells, bounds = export(grid, tmp_path / "pd")
    rows = [l for l in open(cells).read().splitlines() if not l.startswith("#")]
    assert rows[0] == "alpha,ln_delta,class"
    assert len(rows) == 5
    brows = [l for l in open(bounds).read().splitlines() if not l.startswith("#")]
    assert brows[0] == "alpha,ln_delta_c,ln_delta_cc"
    # only the alpha < 1 column has a boundary
    assert len(brows) == 2 and brows[1].startswith("0.5,")


def test_export_is_byte_identical(tmp_path):
    grid = sweep(_small())
    a = [open(p, "rb").read() for p in export(grid, tmp_path / "a")]
    b = [open(p, "rb").read() for p in export(sweep(_small()), tmp_path / "b")]
    assert a == b


def test_parallel_matches_serial():
    spec = _small("exp")
    assert sweep(spec, n_jobs=2) == sweep(spec, n_jobs=1)


def test_cells_consistent_with_boundary():
    spec = SweepSpec("exp", alpha_range=(0.5, 0.6), ln_delta_range=(-5.0, -0.5),
                     alpha_steps=2, delta_steps=6, resolution=1024)
    grid = sweep(spec)
    b = grid.boundary(0.5)
    for cell in grid.column(0.5):
        unimodal = cell.label == "Unimodal"
        assert unimodal == (cell.ln_delta > b.ln_delta_c)


def test_export_reports_unwritable_path(tmp_path):
    grid = sweep(_small())
    with pytest.raises(OSError):
        export(grid, tmp_path / "missing" / "pd")


def test_failures_recorded_not_raised(monkeypatch):
    from wealthshare import phase_diagram
    from wealthshare.errors import ConvergenceError

    def boom(*args, **kwargs):
        raise ConvergenceError("forced", estimate=0.0, error=1.0)

    monkeypatch.setattr(phase_diagram, "classify", boom)
    monkeypatch.setattr(phase_diagram, "critical_delta_bounded", boom)
    grid = sweep(_small())
    assert all(c.label == "Error" and "forced" in c.error for c in grid.cells)
    assert grid.boundaries[0].error is not None and grid.boundaries[0].ln_delta_c is None

import io
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import special

from wealthshare.ensembles import EnsembleSpec, Kind
from wealthshare.errors import DomainError
from wealthshare.share_distribution import (
    ShareDensity,
    min_max_pair,
    share_density_closed,
    share_density_integral,
    share_mean,
    support,
    tabulate,
    total_mass,
    write_table_csv,
)


def test_bounded_centre_value_by_hand():
    # alpha=1/2, delta=0.1 at omega=1/2: C * 4**1.5 * (1/2 - delta/2)
    c = 0.5 / (2 * (1 - math.sqrt(0.1)) ** 2)
    spec = EnsembleSpec.from_delta("bounded", 0.5, 0.1)
    assert share_density_closed(spec, 0.5) == pytest.approx(c * 8 * 0.45, rel=1e-14)


def test_exponential_centre_value_half_alpha():
    # K_{1/2}(z)**2 = pi / (2 z) exp(-2 z), so P(1/2) = 2 K_1(4 sqrt d) / K_{1/2}(2 sqrt d)**2
    d = 0.04
    z = 2 * math.sqrt(d)
    expected = 2 * special.kv(1, 2 * z) / (math.pi / (2 * z) * math.exp(-2 * z))
    spec = EnsembleSpec.from_delta("exp", 0.5, d)
    assert share_density_closed(spec, 0.5) == pytest.approx(expected, rel=1e-12)


def test_min_max_pair():
    p = min_max_pair(0.25)
    assert (p.m, p.M) == pytest.approx((4 / 3, 4.0))


def test_support():
    assert support(EnsembleSpec.from_delta("bounded", 1, 0.25)) == pytest.approx((0.2, 0.8))
    assert support(EnsembleSpec.from_delta("exp", 1, 0.25)) == (0.0, 1.0)


def test_zero_outside_bounded_support():
    spec = EnsembleSpec.from_delta("bounded", 1.0, 0.25)
    assert share_density_closed(spec, 0.19) == 0.0
    assert share_density_closed(spec, 0.81) == 0.0
    assert share_density_integral(spec, 0.19) == 0.0


@pytest.mark.parametrize("w", [0.0, 1.0, -0.2, 1.3])
def test_rejects_omega_outside_unit_interval(w):
    spec = EnsembleSpec.from_delta("exp", 1.0, 0.1)
    with pytest.raises(DomainError):
        share_density_closed(spec, w)
    with pytest.raises(DomainError):
        share_density_integral(spec, w)


def test_scale_invariance():
    a = EnsembleSpec("exp", 0.8, 0.03, 1.0)
    b = EnsembleSpec("exp", 0.8, 0.3, 10.0)
    w = np.linspace(0.01, 0.99, 33)
    np.testing.assert_allclose(share_density_closed(a, w), share_density_closed(b, w), rtol=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(list(Kind)), st.floats(0.1, 3), st.floats(1e-4, 0.9), st.floats(1e-3, 0.999))
def test_symmetry_and_nonnegativity(kind, alpha, delta, w):
    # mirror pairs that are exact in floating point
    assume(1.0 - (1.0 - w) == w)
    spec = EnsembleSpec.from_delta(kind, alpha, delta)
    p = share_density_closed(spec, w)
    assert p >= 0
    assert p == share_density_closed(spec, 1.0 - w)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(list(Kind)), st.floats(0.2, 2.5), st.floats(1e-3, 0.7), st.floats(0.02, 0.49))
def test_closed_form_matches_oracle(kind, alpha, delta, w):
    spec = EnsembleSpec.from_delta(kind, alpha, delta)
    lo, _ = support(spec)
    if kind is Kind.BOUNDED and w < lo * (1 + 1e-6):
        return
    closed = share_density_closed(spec, w)
    oracle = share_density_integral(spec, w)
    assert closed == pytest.approx(oracle, rel=1e-9)


@pytest.mark.parametrize("kind", list(Kind))
def test_mass_and_mean(kind):
    spec = EnsembleSpec.from_delta(kind, 0.5, 0.01)
    assert total_mass(spec) == pytest.approx(1.0, abs=1e-10)
    assert share_mean(spec) == pytest.approx(0.5, abs=1e-10)


def test_vectorised_shape_preserved():
    spec = EnsembleSpec.from_delta("exp", 1.2, 0.2)
    w = np.full((3, 4), 0.3)
    assert share_density_closed(spec, w).shape == (3, 4)
    assert isinstance(share_density_closed(spec, 0.3), float)


def test_tabulate_bounded_grid_spans_support_and_is_symmetric():
    spec = EnsembleSpec.from_delta("bounded", 0.5, 0.1)
    rows = tabulate(spec, 11)
    w = np.array([r[0] for r in rows])
    p = np.array([r[1] for r in rows])
    assert w[0] == pytest.approx(1 / 11) and w[-1] == pytest.approx(10 / 11)
    assert p[0] == 0.0 and p[-1] == 0.0
    assert np.array_equal(p, p[::-1])
    assert w[5] == 0.5


def test_tabulate_exponential_grid_is_open():
    rows = tabulate(EnsembleSpec.from_delta("exp", 2.0, 0.1), 4)
    assert [r[0] for r in rows] == pytest.approx([0.2, 0.4, 0.6, 0.8])


def test_tabulate_needs_two_points():
    with pytest.raises(DomainError):
        tabulate(EnsembleSpec.from_delta("exp", 2.0, 0.1), 1)


def test_table_csv_layout():
    density = ShareDensity(EnsembleSpec.from_delta("exp", 2.0, 0.1))
    rows = tabulate(density, 3)
    buf = io.StringIO()
    write_table_csv(buf, density, rows, oracle=[density.oracle(w) for w, _ in rows])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# kind=exponential alpha=2.0 delta=0.1 grid=3"
    assert lines[1] == "omega,p_omega,p_omega_oracle"
    w, p, q = map(float, lines[3].split(","))
    assert w == 0.5 and p == pytest.approx(q, rel=1e-10)

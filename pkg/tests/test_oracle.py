import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from qi_spoof.fock import PortParams, closed_form_components, component_values
from qi_spoof.oracle import (
    beamsplitter_column,
    detected_distribution,
    mixing_operator_distribution,
    unitary_components,
)

UNCHANGED = ("vac_p", "vac_o", "vac_both", "vac_none", "a_o_click", "a_none")


@given(st.integers(0, 4), st.integers(0, 60), st.floats(0.0, 1.0))
def test_column_is_unit_norm(m, n, t):
    assert math.isclose(float(np.sum(beamsplitter_column(m, n, t) ** 2)), 1.0, rel_tol=1e-10)


def test_column_single_photon():
    amp = beamsplitter_column(1, 0, 0.3)
    assert np.allclose(amp ** 2, [0.7, 0.3])


def test_hong_ou_mandel_dip():
    # two photons on a balanced beamsplitter never exit one per port
    amp = beamsplitter_column(1, 1, 0.5)
    assert abs(amp[1]) < 1e-15


@given(st.floats(0.0, 0.9), st.floats(0.0, 0.5), st.integers(0, 2))
def test_detected_distribution_normalised(t, n, m):
    d = detected_distribution(PortParams("H", t, n), m)
    assert math.isclose(d.sum(), 1.0, rel_tol=1e-12)


@given(st.floats(0.0, 0.9), st.floats(0.0, 0.5), st.floats(0.0, 0.9), st.floats(0.0, 0.5))
def test_unitary_agrees_on_noise_and_dark_terms(tp, np_, to, no):
    a, b = PortParams("H", tp, np_), PortParams("V", to, no)
    u, s = unitary_components(a, b), component_values(a, b)
    for k in UNCHANGED:
        assert math.isclose(getattr(u, k), getattr(s, k), rel_tol=1e-9, abs_tol=1e-15), k


@given(st.floats(0.0, 0.9), st.floats(0.0, 0.5), st.floats(0.0, 0.9), st.floats(0.0, 0.5))
def test_click_row_discrepancy_is_interference_term(tp, np_, to, no):
    # the source model's click row exceeds the unitary one by 2 n r^2 t^2
    a, b = PortParams("H", tp, np_), PortParams("V", to, no)
    u, s = unitary_components(a, b), component_values(a, b)
    extra = 2 * a.noise_eff * a.reflect * a.transmit
    assert math.isclose(u.trace, 1.0, rel_tol=1e-12, abs_tol=1e-13)
    assert math.isclose(s.trace - u.trace, extra, rel_tol=1e-9, abs_tol=1e-13)
    o0 = s.vac_none + s.vac_p  # dark probability of mode O
    assert math.isclose(s.a_p_click - u.a_p_click, extra * o0, rel_tol=1e-8, abs_tol=1e-13)


@given(st.floats(0.0, 0.9), st.floats(0.0, 0.5))
def test_mixing_distribution_matches_series(t, n):
    p = PortParams("H", t, n)
    dist = mixing_operator_distribution(p)
    c = closed_form_components(p, PortParams("V", 1.0, 0.0))
    assert math.isclose(dist.sum(), c.trace, rel_tol=1e-12)
    assert math.isclose(dist[0], c.a_none, rel_tol=1e-10, abs_tol=1e-300)


def test_noise_free_unitary_equals_series():
    a, b = PortParams("H", 0.4, 0.0), PortParams("V", 0.9, 0.0)
    u, s = unitary_components(a, b).as_dict(), component_values(a, b).as_dict()
    for k in u:
        assert math.isclose(u[k], s[k], rel_tol=1e-12, abs_tol=1e-15)

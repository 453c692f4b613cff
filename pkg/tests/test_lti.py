import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from antipassive import ensembles, lti
from antipassive.errors import DimensionError, IllPosed, NotStable, SingularResolvent
from antipassive.lti import StateSpaceSystem

from conftest import lag1, lag2_cayley_tf, lag2_diag, lag2_scalar, lag2_tf, resolvent_response

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def integrator():
    return StateSpaceSystem([[0.0]], [[1.0]], [[1.0]], [[0.0]])


def double_integrator():
    return StateSpaceSystem([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]], [[1.0, 0.0]], [[0.0]])


# ------------------------------------------------------------ construction --


def test_dimension_mismatch_rejected():
    with pytest.raises(DimensionError):
        StateSpaceSystem(np.eye(2), np.ones((3, 1)), np.ones((1, 2)), np.zeros((1, 1)))


def test_static_system_has_constant_response():
    G = StateSpaceSystem.static([[1.0, 2.0], [3.0, 4.0]])
    assert G.n == 0
    for w in (0.0, 1.0, 1e3):
        np.testing.assert_array_equal(lti.eval_frequency(G, w), [[1.0, 2.0], [3.0, 4.0]])


def test_arrays_are_read_only():
    G = lag1()
    with pytest.raises(ValueError):
        G.A[0, 0] = 5.0


def test_negation_and_series():
    G = lag2_scalar()
    np.testing.assert_allclose(lti.eval_frequency(-G, 0.7), -lag2_tf(0.7), atol=1e-14)
    H = lti.series(lag1(), lag1())  # 1/(s+1)^2
    np.testing.assert_allclose(lti.eval_frequency(H, 2.0), [[1 / (1 + 2j) ** 2]], atol=1e-14)


def test_block_diag_stacks_channels():
    G = lti.block_diag(lag2_scalar(), lag1())
    R = lti.eval_frequency(G, 0.5)
    np.testing.assert_allclose(np.diag(R), [lag2_tf(0.5), 1 / (1 + 0.5j)], atol=1e-14)
    assert R[0, 1] == 0 and R[1, 0] == 0


# --------------------------------------------------------------- frequency --


def test_integrator_at_unit_frequency():
    assert lti.eval_frequency(integrator(), 1.0)[0, 0] == pytest.approx(-1j)


def test_integrator_at_dc_is_singular():
    with pytest.raises(SingularResolvent):
        lti.eval_frequency(integrator(), 0.0)


@pytest.mark.parametrize("w, expected", [(0.0, 2 / 3), (1.0, -1j / 3)])
def test_lag2_response(w, expected):
    assert lti.eval_frequency(lag2_scalar(), w)[0, 0] == pytest.approx(expected, abs=1e-14)
    assert lti.eval_frequency(lag2_scalar(), w)[0, 0] == pytest.approx(lag2_tf(w), abs=1e-14)


def test_freqresp_matches_resolvent_oracle(rng):
    G = ensembles.random_stable(rng, 4, 3)
    ws = np.logspace(-2, 2, 17)
    batch = lti.freqresp(G, ws)
    for w, Gw in zip(ws, batch):
        np.testing.assert_allclose(Gw, resolvent_response(G, w), atol=1e-12)


def test_grid_size_env_override(monkeypatch):
    monkeypatch.setenv(lti.GRID_ENV, "37")
    assert lti.frequency_grid().size == 37
    monkeypatch.delenv(lti.GRID_ENV)
    grid = lti.frequency_grid()
    assert grid.size == lti.DEFAULT_GRID_POINTS
    assert grid[0] == pytest.approx(1e-3) and grid[-1] == pytest.approx(1e3)


# --------------------------------------------------------------- stability --


def test_hurwitz_examples():
    assert lti.is_hurwitz(lag1())
    assert not lti.is_hurwitz(double_integrator())
    block = StateSpaceSystem([[0.0, -0.8608], [1.0, -1.0791]], np.zeros((2, 1)), np.zeros((1, 2)), [[0.0]])
    roots = np.roots([1.0, 1.0791, 0.8608])
    assert np.all(roots.real < 0)
    assert lti.is_hurwitz(block)


def test_static_system_is_hurwitz():
    assert lti.is_hurwitz(StateSpaceSystem.static([[2.0]]))


# -------------------------------------------------------------------- hinf --


def test_hinf_first_order_lag():
    h = lti.hinf_norm(lag1())
    assert h.norm == pytest.approx(1.0, rel=1e-9)
    assert h.peak_freq == 0.0


def test_hinf_lag2_peaks_at_dc():
    h = lti.hinf_norm(lag2_scalar())
    assert h.norm == pytest.approx(2 / 3, rel=1e-9)
    assert h.peak_freq == 0.0


def test_hinf_of_cayley_image_matches_dense_grid_oracle():
    ws = np.linspace(1.0, 3.0, 200001)
    mags = np.abs(lag2_cayley_tf(ws))
    k = int(np.argmax(mags))
    h = lti.hinf_norm(lti.cayley_G_to_S(lag2_diag()))
    assert h.norm == pytest.approx(mags[k], rel=1e-9)
    assert h.peak_freq == pytest.approx(ws[k], abs=1e-4)
    # sqrt(3) is where Re G is most negative, not where |S| peaks
    assert abs(lag2_cayley_tf(math.sqrt(3))) ** 2 == pytest.approx(43 / 31, rel=1e-12)
    assert h.norm > math.sqrt(43 / 31)


def test_hinf_requires_stability():
    with pytest.raises(NotStable):
        lti.hinf_norm(double_integrator())


def test_hinf_static_is_largest_singular_value():
    D = np.array([[1.0, 2.0], [0.0, -1.0]])
    h = lti.hinf_norm(StateSpaceSystem.static(D))
    assert h.norm == pytest.approx(np.linalg.svd(D, compute_uv=False)[0], rel=1e-12)


def test_hinf_lightly_damped_resonance():
    z, wn = 0.01, 5.0
    G = StateSpaceSystem([[0.0, 1.0], [-wn**2, -2 * z * wn]], [[0.0], [wn**2]], [[1.0, 0.0]], [[0.0]])
    exact = 1.0 / (2 * z * math.sqrt(1 - z**2))
    h = lti.hinf_norm(G)
    assert h.norm == pytest.approx(exact, rel=1e-8)
    assert h.peak_freq == pytest.approx(wn * math.sqrt(1 - 2 * z**2), rel=1e-6)


@settings(max_examples=25, deadline=None)
@given(seed=seeds, n=st.integers(1, 5), m=st.integers(1, 3))
def test_hinf_bounds_random_frequency_samples(seed, n, m):
    rng = np.random.default_rng(seed)
    G = ensembles.random_stable(rng, n, m)
    h = lti.hinf_norm(G)
    ws = np.concatenate([[0.0], 10 ** rng.uniform(-3, 3, 1000)])
    sampled = np.linalg.svd(lti.freqresp(G, ws), compute_uv=False)[:, 0]
    assert np.all(sampled <= h.norm * (1 + 1e-9))
    assert h.norm >= np.linalg.svd(G.D, compute_uv=False)[0] - 1e-12
    # the reported peak attains the norm
    at_peak = np.linalg.svd(lti.eval_frequency(G, h.peak_freq), compute_uv=False)[0] if math.isfinite(h.peak_freq) else np.linalg.svd(G.D, compute_uv=False)[0]
    assert at_peak == pytest.approx(h.norm, rel=1e-8)


# ------------------------------------------------------------------ cayley --


def test_cayley_static_examples():
    S0 = lti.cayley_G_to_S(StateSpaceSystem.static(np.zeros((2, 2))))
    np.testing.assert_array_equal(S0.D, -np.eye(2))
    S3 = lti.cayley_G_to_S(StateSpaceSystem.static([[3.0]]))
    assert S3.D[0, 0] == pytest.approx(0.5)


def test_cayley_lag2_dc():
    S = lti.cayley_G_to_S(lag2_scalar())
    assert S.n == 2
    assert lti.eval_frequency(S, 0.0)[0, 0] == pytest.approx(-0.2, abs=1e-14)


def test_inverse_cayley_examples():
    R0 = lti.cayley_S_to_R(StateSpaceSystem.static(np.zeros((3, 3))))
    np.testing.assert_allclose(R0.D, np.eye(3))
    R = lti.cayley_S_to_R(StateSpaceSystem.static([[-0.2]]))
    assert R.D[0, 0] == pytest.approx(2 / 3)


def test_cayley_ill_posed():
    with pytest.raises(IllPosed):
        lti.cayley_G_to_S(StateSpaceSystem.static(-np.eye(2)))
    with pytest.raises(IllPosed):
        lti.cayley_S_to_R(StateSpaceSystem.static(np.eye(2)))


def test_cayley_round_trip_lag2():
    ws = np.logspace(-3, 3, 100)
    G = lag2_diag()
    back = lti.cayley_S_to_R(lti.cayley_G_to_S(G))
    np.testing.assert_allclose(lti.freqresp(back, ws), lti.freqresp(G, ws), atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, n=st.integers(0, 5), m=st.integers(1, 3))
def test_cayley_maps_match_pointwise_formulas(seed, n, m):
    rng = np.random.default_rng(seed)
    G = ensembles.random_stable(rng, n, m) if n else StateSpaceSystem.static(rng.normal(size=(m, m)))
    I = np.eye(m)
    ws = np.logspace(-3, 3, 40)
    try:
        S = lti.cayley_G_to_S(G)
        R = lti.cayley_S_to_R(S)
    except IllPosed:
        return
    for w in ws:
        Gw = lti.eval_frequency(G, w)
        try:
            expected = (Gw - I) @ np.linalg.inv(Gw + I)
        except np.linalg.LinAlgError:
            continue
        if np.linalg.cond(Gw + I) > 1e8:
            continue
        np.testing.assert_allclose(lti.eval_frequency(S, w), expected, atol=1e-8 * np.linalg.cond(Gw + I))
        np.testing.assert_allclose(lti.eval_frequency(R, w), Gw, atol=1e-8 * np.linalg.cond(Gw + I))


# --------------------------------------------------------------- passivity --


def test_first_order_lag_is_passive():
    c = lti.is_passive(lag1())
    assert c.verdict == lti.PASSIVE
    assert not c.conflict


def test_lag2_not_passive_with_analytic_witness():
    c = lti.is_passive(lag2_scalar())
    assert c.verdict == lti.NOT_PASSIVE
    # Re G(jw) = (2/3)(1 - w^2)/(1 + w^2)^2 is smallest at w = sqrt(3), value -1/12
    assert c.witness_freq == pytest.approx(math.sqrt(3), abs=1e-4)
    assert c.min_real_eig == pytest.approx(2 * (-1 / 12), abs=1e-9)
    assert c.min_real_eig < 0


def test_double_integrator_not_applicable():
    c = lti.is_passive(double_integrator())
    assert c.verdict in (lti.NOT_APPLICABLE, lti.NOT_PASSIVE)
    assert not c.passive
    assert c.min_real_eig < 0  # Re 1/(jw)^2 = -1/w^2


def test_unstable_system_not_passive():
    G = StateSpaceSystem([[1.0]], [[1.0]], [[1.0]], [[1.0]])
    assert lti.is_passive(G).verdict == lti.NOT_PASSIVE


def test_passivity_needs_square_system():
    with pytest.raises(DimensionError):
        lti.is_passive(StateSpaceSystem([[-1.0]], [[1.0, 1.0]], [[1.0]], [[0.0, 0.0]]))


@pytest.mark.parametrize("G", [lag1(), lag2_scalar(), double_integrator()])
def test_delta_passivity_matches_passivity(G):
    assert lti.is_delta_passive(G) == lti.is_passive(G)


def test_delta_passivity_agrees_on_twenty_systems():
    rng = np.random.default_rng(20)
    for k in range(20):
        G = ensembles.random_stable(rng, int(rng.integers(1, 5)), 2 + k % 2)
        assert lti.is_delta_passive(G).verdict == lti.is_passive(G).verdict


def test_small_gain_equivalence_twenty_systems():
    rng = np.random.default_rng(7)
    seen = set()
    for k in range(20):
        m = 1 + k % 3
        G = ensembles.random_passive(rng, 3, m) if k % 2 else ensembles.random_stable(rng, 3, m)
        c = lti.is_passive(G)
        S = lti.cayley_G_to_S(G)
        small_gain = lti.is_hurwitz(S) and lti.hinf_norm(S).norm <= 1 + lti.EPS_PR
        assert c.passive == small_gain
        assert not c.conflict
        seen.add(c.verdict)
    assert seen == {lti.PASSIVE, lti.NOT_PASSIVE}


@settings(max_examples=20, deadline=None)
@given(seed=seeds, n=st.integers(1, 5), m=st.integers(1, 3))
def test_kyp_construction_always_passive(seed, n, m):
    G = ensembles.random_passive(np.random.default_rng(seed), n, m)
    assert lti.is_passive(G).verdict == lti.PASSIVE


# ---------------------------------------------------------------- feedback --


def test_negative_feedback_integrator_unit_gain():
    closed = lti.feedback_interconnect(integrator(), StateSpaceSystem.static([[1.0]]), sign=-1)
    for w in (0.0, 0.5, 3.0):
        assert lti.eval_frequency(closed, w)[0, 0] == pytest.approx(1 / (1 + 1j * w), abs=1e-14)


def test_positive_feedback_double_integrator_cubic():
    game = StateSpaceSystem([[-1.0]], [[1.0]], [[-1.0]], [[0.0]])  # -1/(s+1)
    closed = lti.feedback_interconnect(double_integrator(), game, sign=+1)
    np.testing.assert_allclose(np.poly(closed.A), [1.0, 1.0, 0.0, 1.0], atol=1e-12)
    eigs = np.linalg.eigvals(closed.A)
    roots = np.roots([1.0, 1.0, 0.0, 1.0])
    np.testing.assert_allclose(np.sort_complex(eigs), np.sort_complex(roots), atol=1e-10)
    assert eigs.real.max() > 0


def test_feedback_algebraic_loop_singular():
    one = StateSpaceSystem.static([[1.0]])
    with pytest.raises(IllPosed):
        lti.feedback_interconnect(one, one, sign=+1)


@settings(max_examples=25, deadline=None)
@given(seed=seeds, sign=st.sampled_from([-1, 1]))
def test_feedback_matches_frequency_formula(seed, sign):
    rng = np.random.default_rng(seed)
    G1 = ensembles.random_stable(rng, 3, 2)
    G2 = ensembles.random_stable(rng, 2, 2)
    try:
        closed = lti.feedback_interconnect(G1, G2, sign=sign)
    except IllPosed:
        return
    for w in (0.1, 1.3, 7.0):
        g1, g2 = resolvent_response(G1, w), resolvent_response(G2, w)
        M = np.eye(2) - sign * g1 @ g2
        if np.linalg.cond(M) > 1e8:
            continue
        try:
            got = lti.eval_frequency(closed, w)
        except SingularResolvent:
            continue
        np.testing.assert_allclose(got, np.linalg.solve(M, g1), atol=1e-8 * np.linalg.cond(M))


@settings(max_examples=30, deadline=None)
@given(seed=seeds, n=st.integers(0, 4), m=st.integers(1, 3), w=st.floats(1e-3, 1e3))
def test_conjugate_symmetry(seed, n, m, w):
    rng = np.random.default_rng(seed)
    G = StateSpaceSystem(rng.normal(size=(n, n)), rng.normal(size=(n, m)), rng.normal(size=(m, n)), rng.normal(size=(m, m)))
    try:
        plus = lti.eval_frequency(G, w)
    except SingularResolvent:
        return
    np.testing.assert_allclose(lti.eval_frequency(G, -w), np.conj(plus), rtol=1e-12, atol=1e-12)

import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from delayed_choice_qkd import oracle
from delayed_choice_qkd.optics import (
    LOST,
    NORM_TOL,
    U_S,
    U_S_PRIME,
    DetectionEvent,
    PhotonState,
    Route,
    alice_splitter_state,
    apply_bob_splitter,
    apply_loss,
    exact_distribution,
    measure_detectors,
    prepare_route,
)

from _bounds import describe, within_sigma

H = 1 / math.sqrt(2)


def exact_to_complex(v):
    return tuple(complex(float(a.re), float(a.im)) for a in v)


angles = st.floats(0, 2 * math.pi, allow_nan=False)


@st.composite
def states(draw):
    theta = draw(st.floats(0, math.pi / 2))
    phi_a, phi_b = draw(angles), draw(angles)
    return PhotonState(math.cos(theta) * cmath.exp(1j * phi_a), math.sin(theta) * cmath.exp(1j * phi_b))


class TestSplitters:
    @pytest.mark.parametrize("u", [U_S, U_S_PRIME])
    def test_unitary(self, u):
        assert np.allclose(u.conj().T @ u, np.eye(2), atol=1e-12, rtol=0)

    @pytest.mark.parametrize("u", [U_S, U_S_PRIME])
    def test_balanced(self, u):
        assert np.allclose(np.abs(u) ** 2, 0.5, atol=1e-12, rtol=0)

    def test_bob_undoes_alice(self):
        assert np.allclose(U_S_PRIME @ U_S, np.eye(2), atol=1e-12, rtol=0)

    def test_matches_exact_matrices(self):
        for num, exact in ((U_S, oracle.ALICE_SPLITTER), (U_S_PRIME, oracle.BOB_SPLITTER)):
            ref = np.array([[complex(float(a.re), float(a.im)) for a in row] for row in exact])
            assert np.allclose(num, ref, atol=1e-15, rtol=0)


class TestPhotonState:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            PhotonState(1, 1)

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            PhotonState(float("nan"), 0)

    def test_lost_is_singleton(self):
        import pickle

        assert pickle.loads(pickle.dumps(LOST)) is LOST


class TestPreparation:
    def test_route_a(self):
        s = prepare_route(Route.A)
        assert (s.amp_a, s.amp_b) == (1 + 0j, 0j)

    def test_route_b(self):
        s = prepare_route(Route.B)
        assert (s.amp_a, s.amp_b) == (0j, 1 + 0j)

    def test_route_a_without_bob_splitter_lights_detector1(self):
        assert exact_distribution(prepare_route(Route.A)).as_tuple() == (1.0, 0.0, 0.0)

    def test_splitter_state_matches_exact_product(self):
        expected = exact_to_complex(oracle.alice_state(oracle.AliceChoice.SPLITTER_IN))
        s = alice_splitter_state()
        assert abs(s.amp_a - expected[0]) < 1e-15 and abs(s.amp_b - expected[1]) < 1e-15
        assert abs(s.amp_a - H) < 1e-15 and abs(s.amp_b - 1j * H) < 1e-15

    def test_splitter_state_balanced(self):
        s = alice_splitter_state()
        assert abs(abs(s.amp_a) ** 2 - 0.5) < 1e-12
        assert abs(abs(s.amp_b) ** 2 - 0.5) < 1e-12
        assert abs(abs(s.amp_a) ** 2 + abs(s.amp_b) ** 2 - 1.0) < 1e-12

    def test_both_splitters_always_detector1(self):
        d = exact_distribution(apply_bob_splitter(alice_splitter_state()))
        assert d.p_det1 == pytest.approx(1.0, abs=1e-12)
        assert d.p_det2 == pytest.approx(0.0, abs=1e-12)
        assert d.p_noclick == 0.0


class TestBobSplitter:
    def test_undoes_alice(self):
        out = apply_bob_splitter(alice_splitter_state())
        assert out.isclose(PhotonState(1, 0))

    def test_route_a_gives_first_column(self):
        out = apply_bob_splitter(prepare_route(Route.A))
        assert out.isclose(PhotonState(H, -1j * H))
        assert exact_distribution(out).as_tuple() == pytest.approx((0.5, 0.5, 0.0), abs=1e-12)

    def test_lost_passes(self):
        assert apply_bob_splitter(LOST) is LOST

    @given(states())
    def test_norm_preserved(self, s):
        out = apply_bob_splitter(s)
        assert abs(abs(out.amp_a) ** 2 + abs(out.amp_b) ** 2 - 1.0) < NORM_TOL


class TestLoss:
    def test_zero_loss_is_identity(self, rng):
        s = alice_splitter_state()
        assert all(apply_loss(s, 0.0, rng) is s for _ in range(1000))

    def test_certain_loss(self, rng):
        assert apply_loss(prepare_route(Route.B), 1.0, rng) is LOST

    def test_lost_stays_lost(self, rng):
        assert apply_loss(LOST, 0.0, rng) is LOST

    @pytest.mark.parametrize("p", [-0.1, 1.5, float("nan")])
    def test_rejects_bad_probability(self, rng, p):
        with pytest.raises(ValueError):
            apply_loss(prepare_route(Route.A), p, rng)

    def test_empirical_rate(self, rng):
        n = 100_000
        s = prepare_route(Route.A)
        lost = sum(apply_loss(s, 0.3, rng) is LOST for _ in range(n))
        assert within_sigma(lost, n, 0.3), describe(lost, n, 0.3)


class TestMeasurement:
    def test_basis_state(self, rng):
        s = PhotonState(1, 0)
        assert {measure_detectors(s, rng) for _ in range(1000)} == {DetectionEvent.DETECTOR1}

    def test_lost_never_clicks(self, rng):
        assert measure_detectors(LOST, rng) is DetectionEvent.NO_CLICK

    def test_balanced_state(self, rng):
        n = 100_000
        s = alice_splitter_state()
        det1 = sum(measure_detectors(s, rng) is DetectionEvent.DETECTOR1 for _ in range(n))
        assert within_sigma(det1, n, 0.5), describe(det1, n, 0.5)

    def test_exact_distribution_values(self):
        assert exact_distribution(PhotonState(H, -1j * H)).as_tuple() == pytest.approx((0.5, 0.5, 0))
        assert exact_distribution(LOST).as_tuple() == (0.0, 0.0, 1.0)


class TestProperties:
    @given(states())
    def test_unitarity_total_probability(self, s):
        for out in (s, apply_bob_splitter(s)):
            d = exact_distribution(out)
            assert abs(d.p_det1 + d.p_det2 - 1.0) < 1e-12
            assert d.p_noclick == 0.0

    @given(states(), angles)
    def test_global_phase_invariance(self, s, phi):
        g = cmath.exp(1j * phi)
        rotated = PhotonState(g * s.amp_a, g * s.amp_b)
        for a, b in ((s, rotated), (apply_bob_splitter(s), apply_bob_splitter(rotated))):
            assert exact_distribution(a).as_tuple() == pytest.approx(exact_distribution(b).as_tuple(), abs=1e-12)

    def test_single_splitter_uniformity(self):
        one_alice = exact_distribution(alice_splitter_state())
        one_bob = [exact_distribution(apply_bob_splitter(prepare_route(r))) for r in Route]
        for d in [one_alice, *one_bob]:
            assert d.p_det1 == pytest.approx(0.5, abs=1e-12)

    def test_no_splitter_faithfulness(self):
        assert exact_distribution(prepare_route(Route.A)).p_det1 == 1.0
        assert exact_distribution(prepare_route(Route.B)).p_det2 == 1.0

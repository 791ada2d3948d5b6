"""Certificate tests: gain bounds, Lyapunov solves, reaching audits."""

from __future__ import annotations

import numpy as np
import pytest

from dfig_smc.errors import (
    LengthMismatch,
    NonPositiveWeight,
    SingularCB,
    SingularLyapunov,
    TooShortTrace,
    ValidationError,
)
from dfig_smc.multimodel import linearize_submodel
from dfig_smc.plant import MachineParams
from dfig_smc.stability import (
    NonlinearBound,
    StabilityCertificate,
    certify_bank,
    full_order_feedback,
    gain_bound,
    lyapunov_check,
    nonquadratic_V,
    reaching_monitor,
    regular_form_reduction,
)

PAR = MachineParams()
ALPHA_D = np.array([1.0, 0.0, 1.0, 0.0]) / np.sqrt(2.0)
ALPHA_Q = np.array([0.0, 1.0, 0.0, 1.0]) / np.sqrt(2.0)


def random_hurwitz(rng, n):
    r = rng.normal(size=(n, n))
    shift = max(np.linalg.eigvals(r).real.max(), 0.0) + 1.0
    return r - shift * np.eye(n)


class TestGainBound:
    def test_scalar_reduction(self):
        assert gain_bound(np.array([[-3.0]]), np.array([1.0]), np.array([2.0])) == 1.5

    def test_monotone_in_disturbance_bound(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(4, 4))
        prev = -np.inf
        for m in (0.0, 0.5, 1.0, 5.0, 50.0):
            k = gain_bound(a, ALPHA_D, np.array([0.0, 0.0, 1.0, 0.0]), m)
            assert k >= prev
            prev = k

    def test_scale_consistency(self):
        a = np.diag([-1.0, -2.0])
        alpha = np.array([1.0, 1.0])
        b = np.array([0.0, 1.0])
        assert np.isclose(
            gain_bound(a, alpha, 2.0 * b), 0.5 * gain_bound(a, alpha, b), rtol=1e-14
        )

    def test_no_authority_raises(self):
        with pytest.raises(SingularCB):
            gain_bound(np.eye(2), np.array([1.0, 0.0]), np.array([0.0, 1.0]))

    def test_negative_disturbance_bound_rejected(self):
        with pytest.raises(ValidationError):
            gain_bound(np.eye(2), np.array([1.0, 1.0]), np.array([0.0, 1.0]), -1.0)


class TestLyapunovCheck:
    def test_identity_loop(self):
        p, me = lyapunov_check(-np.eye(2))
        np.testing.assert_allclose(p, 0.5 * np.eye(2), rtol=0, atol=1e-14)
        assert np.isclose(me, 0.5, rtol=0, atol=1e-14)

    def test_unstable_scalar(self):
        p, me = lyapunov_check(np.array([[1.0]]))
        assert np.isclose(p[0, 0], -0.5, rtol=0, atol=1e-14)
        assert me < 0

    def test_hand_solved_oracle(self):
        # A = [[0,1],[-2,-3]]: solving the three independent entries by hand
        # gives P = [[1.25, 0.25], [0.25, 0.25]], eigs (1.5 +- sqrt(1.25))/2
        p, me = lyapunov_check(np.array([[0.0, 1.0], [-2.0, -3.0]]))
        np.testing.assert_allclose(
            p, [[1.25, 0.25], [0.25, 0.25]], rtol=0, atol=1e-12
        )
        assert np.isclose(me, (1.5 - np.sqrt(1.25)) / 2.0, rtol=0, atol=1e-12)

    def test_feedback_path_matches_closed_loop(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            a = rng.normal(size=(3, 3))
            b = rng.normal(size=3)
            l = rng.normal(size=3)
            acl = a - np.outer(b, l)
            if np.linalg.eigvals(acl).real.max() > -0.05:
                continue
            p1, me1 = lyapunov_check(a, b, l)
            p2, me2 = lyapunov_check(acl)
            np.testing.assert_allclose(p1, p2, rtol=1e-12, atol=1e-12)
            assert me1 == me2

    def test_residual_and_symmetry(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(2, 5))
            acl = random_hurwitz(rng, n)
            p, me = lyapunov_check(acl)
            assert me > 0
            assert np.max(np.abs(p - p.T)) <= 1e-10
            res = acl.T @ p + p @ acl + np.eye(n)
            assert np.linalg.norm(res) <= 1e-8

    def test_marginal_pair_raises(self):
        with pytest.raises(SingularLyapunov):
            lyapunov_check(np.array([[0.0, 1.0], [-1.0, 0.0]]))  # eigs +-i
        with pytest.raises(SingularLyapunov):
            lyapunov_check(np.diag([0.0, -1.0]))  # zero eigenvalue


class TestRegularForm:
    def test_double_integrator_reduced_pole(self):
        # surface x2 = -c x1 leaves dx1/dt = -c x1
        a = np.array([[0.0, 1.0], [0.0, 0.0]])
        b = np.array([0.0, 1.0])
        for c in (0.5, 1.0, 3.0):
            a11, a12, l_red = regular_form_reduction(a, b, np.array([c, 1.0]))
            acl = np.atleast_2d(a11) - np.outer(a12, l_red)
            assert np.isclose(acl[0, 0], -c, rtol=0, atol=1e-12)

    def test_machine_rows_match_hand_elimination(self):
        # for b along a state axis the constraint s = 0 can be eliminated by
        # hand; compare eigenvalue multisets (basis-independent)
        from dfig_smc.plant import derive_coefficients, em_input_matrix, em_state_matrix

        c = derive_coefficients(PAR)
        w = -2.0
        a = em_state_matrix(PAR, w)
        bmat = em_input_matrix(PAR)

        a11, a12, l_red = regular_form_reduction(a, bmat[:, 0], ALPHA_D)
        acl = a11 - np.outer(a12, l_red)
        hand_d = np.array(
            [
                [-c.b - c.a, -PAR.p * w, 0.0],
                [PAR.p * w, -c.b, c.a],
                [-c.gamma3 * w, -c.gamma2, -c.gamma1],
            ]
        )
        np.testing.assert_allclose(
            np.sort_complex(np.linalg.eigvals(acl)),
            np.sort_complex(np.linalg.eigvals(hand_d)),
            rtol=1e-9,
            atol=1e-9,
        )

        a11, a12, l_red = regular_form_reduction(a, bmat[:, 1], ALPHA_Q)
        acl = a11 - np.outer(a12, l_red)
        hand_q = np.array(
            [
                [-c.b, -PAR.p * w, c.a],
                [PAR.p * w, -c.b - c.a, 0.0],
                [-c.gamma2, c.gamma3 * w, -c.gamma1],
            ]
        )
        np.testing.assert_allclose(
            np.sort_complex(np.linalg.eigvals(acl)),
            np.sort_complex(np.linalg.eigvals(hand_q)),
            rtol=1e-9,
            atol=1e-9,
        )

    def test_orthogonal_surface_raises(self):
        a = np.zeros((2, 2))
        with pytest.raises(SingularCB):
            regular_form_reduction(a, np.array([0.0, 1.0]), np.array([1.0, 0.0]))


class TestFullOrderFeedback:
    def test_surface_row_maps_to_minus_k(self):
        # alpha (A - b L) = -k alpha exactly
        rng = np.random.default_rng(11)
        for _ in range(20):
            n = int(rng.integers(2, 5))
            a = rng.normal(size=(n, n))
            b = rng.normal(size=n)
            alpha = rng.normal(size=n)
            if abs(alpha @ b) < 1e-2:
                continue
            k = float(rng.uniform(0.5, 5.0))
            l_full = full_order_feedback(a, b, alpha, k)
            acl = a - np.outer(b, l_full)
            np.testing.assert_allclose(alpha @ acl, -k * alpha, rtol=1e-9, atol=1e-9)

    def test_spectrum_is_reduced_plus_minus_k(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            n = int(rng.integers(2, 5))
            a = rng.normal(size=(n, n))
            b = rng.normal(size=n)
            alpha = rng.normal(size=n)
            if abs(alpha @ b) < 1e-2 or np.linalg.norm(b) < 1e-2:
                continue
            k = float(rng.uniform(0.5, 5.0))
            a11, a12, l_red = regular_form_reduction(a, b, alpha)
            reduced = np.linalg.eigvals(
                np.atleast_2d(a11) - np.outer(a12, l_red)
            )
            l_full = full_order_feedback(a, b, alpha, k)
            full = np.linalg.eigvals(a - np.outer(b, l_full))
            np.testing.assert_allclose(
                np.sort_complex(full),
                np.sort_complex(np.append(reduced, -k)),
                rtol=1e-7,
                atol=1e-7,
            )

    def test_validation(self):
        with pytest.raises(SingularCB):
            full_order_feedback(np.eye(2), np.array([0.0, 1.0]), np.array([1.0, 0.0]), 1.0)
        with pytest.raises(ValidationError):
            full_order_feedback(np.eye(2), np.array([0.0, 1.0]), np.array([1.0, 1.0]), 0.0)


class TestNonquadraticV:
    def test_direct_evaluation(self):
        assert nonquadratic_V(np.array([1.0, 1.0]), np.array([1.0, 2.0])) == 5.0

    def test_zero_surfaces(self):
        assert nonquadratic_V(np.ones(3), np.zeros(3)) == 0.0

    def test_nonnegative(self):
        rng = np.random.default_rng(17)
        for _ in range(30):
            n = int(rng.integers(1, 6))
            p = rng.uniform(0.1, 5.0, size=n)
            s = rng.normal(size=n)
            assert nonquadratic_V(p, s) >= 0.0

    def test_nonpositive_weight_rejected(self):
        with pytest.raises(NonPositiveWeight):
            nonquadratic_V(np.array([1.0, 0.0]), np.array([1.0, 1.0]))

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            nonquadratic_V(np.ones(2), np.ones(3))


class TestReachingMonitor:
    def test_linear_decay_has_no_violations(self):
        t = np.linspace(0.0, 0.9, 10)
        rep = reaching_monitor(t, 1.0 - t, eta=0.5)
        assert rep.violation_fraction == 0.0
        assert rep.violation_times.size == 0
        assert rep.n_eligible == 10

    def test_growing_surface_all_flagged(self):
        t = np.linspace(0.0, 1.0, 20)
        rep = reaching_monitor(t, 1.0 + t, eta=1.0)
        assert rep.violation_fraction == 1.0
        assert rep.n_eligible == 20
        np.testing.assert_allclose(rep.violation_times, t)

    def test_sliding_phase_excluded(self):
        t = np.linspace(0.0, 1.0, 50)
        rep = reaching_monitor(t, np.zeros_like(t), eta=1.0, omega_layer=0.5)
        assert rep.n_eligible == 0
        assert rep.violation_fraction == 0.0

    def test_layer_keeps_outer_samples(self):
        t = np.linspace(0.0, 1.0, 11)
        s = 2.0 - 1.5 * t  # crosses the layer boundary
        rep = reaching_monitor(t, s, eta=0.5, omega_layer=1.0)
        assert rep.n_eligible == int((np.abs(s) >= 1.0).sum())
        assert rep.violation_fraction == 0.0

    def test_validation(self):
        with pytest.raises(TooShortTrace):
            reaching_monitor(np.array([0.0]), np.array([1.0]))
        with pytest.raises(ValidationError):
            reaching_monitor(np.array([0.0, 1.0]), np.array([1.0, 1.0]), eta=0.0)
        with pytest.raises(LengthMismatch):
            reaching_monitor(np.array([0.0, 1.0]), np.array([1.0]))


def default_bank(k_gain=45.0):
    bank = []
    for i, w in enumerate((-1.0, -2.0, -3.0)):
        bank.append(linearize_submodel(PAR, w, ALPHA_D, k_gain, index=2 * i))
        bank.append(linearize_submodel(PAR, w, ALPHA_Q, k_gain, index=2 * i + 1))
    return bank


class TestCertifyBank:
    def test_default_bank_certifies(self):
        cert = certify_bank(default_bank())
        assert all(cert.gain_ok)
        assert all(me > 0 for me in cert.min_eig_p)
        assert all(me > 0 for me in cert.full_order_min_eig)
        assert cert.ok

    def test_residual_bound_on_bank(self):
        for model in default_bank():
            from dfig_smc.stability import regular_form_reduction

            a11, a12, l_red = regular_form_reduction(
                model.a_mat, model.b_col, model.alpha
            )
            acl = a11 - np.outer(a12, l_red)
            p, _ = lyapunov_check(acl)
            res = acl.T @ p + p @ acl + np.eye(3)
            assert np.linalg.norm(res) <= 1e-8

    def test_undersized_gain_fails_certificate(self):
        cert = certify_bank(default_bank(k_gain=1.0))
        assert not any(cert.gain_ok)
        assert not cert.ok

    def test_reaching_fraction_folds_in(self):
        cert = certify_bank(default_bank(), reaching_violation_fraction=0.5)
        assert not cert.ok


class TestCertificateType:
    def test_asymmetric_p_rejected(self):
        with pytest.raises(ValidationError):
            StabilityCertificate(
                gain_ok=(True,),
                lyapunov_p=(np.array([[1.0, 0.5], [0.0, 1.0]]),),
                min_eig_p=(1.0,),
                full_order_min_eig=(1.0,),
            )

    def test_inconsistent_min_eig_rejected(self):
        with pytest.raises(ValidationError):
            StabilityCertificate(
                gain_ok=(True,),
                lyapunov_p=(np.eye(2),),
                min_eig_p=(0.25,),
                full_order_min_eig=(1.0,),
            )

    def test_fraction_range_checked(self):
        with pytest.raises(ValidationError):
            StabilityCertificate(
                gain_ok=(True,),
                lyapunov_p=(np.eye(2),),
                min_eig_p=(1.0,),
                full_order_min_eig=(1.0,),
                reaching_violation_fraction=1.5,
            )


class TestNonlinearBound:
    def test_zero_allowed(self):
        assert NonlinearBound().m == 0.0

    def test_negative_rejected(self):
        with pytest.raises(ValidationError):
            NonlinearBound(m=-0.1)

"""Certificates: impedance/scattering, continuous/discrete, proper passivity,
and the verdict-preservation properties of the Cayley and reciprocal maps."""

import numpy as np
import pytest

from conftest import (
    random_conservative,
    random_impedance_passive,
    random_resistance,
)

from passivenet.core import DiscreteSystem, StateSpaceSystem
from passivenet.passivity import (
    CONSERVATIVE,
    NOT_PASSIVE,
    STRICTLY_PASSIVE,
    discrete_impedance_certificate,
    discrete_scattering_certificate,
    impedance_certificate,
    properly_impedance_passive,
    scattering_conservative_check,
    scattering_passive_via_cayley,
)
from passivenet.pipelines import pi_circuit_system, pi_scattering_system
from passivenet.transforms import (
    ResistanceMatrix,
    external_cayley,
    full_inversion,
    internal_cayley,
    internal_reciprocal,
    inverse_external_cayley,
)
from passivenet.feedback import regularize


class TestImpedanceCertificate:
    def test_pi_circuit_conservative(self):
        cert = impedance_certificate(pi_circuit_system(2.2e-9, 3.4e-9, 14e-6))
        assert cert.verdict == CONSERVATIVE

    def test_strictly_passive(self):
        sys = StateSpaceSystem(-np.eye(3), np.zeros((3, 2)), np.zeros((2, 3)),
                               np.eye(2), split=(1, 1))
        cert = impedance_certificate(sys)
        assert cert.verdict == STRICTLY_PASSIVE and cert.margin < 0

    def test_constructed_passive(self, rng):
        # A^T + A = -W W^T, C = B^T, D = I/2 forces the test matrix <= 0
        W = rng.standard_normal((4, 2))
        S = rng.standard_normal((4, 4))
        A = (S - S.T) - 0.5 * W @ W.T
        B = rng.standard_normal((4, 2))
        sys = StateSpaceSystem(A, B, B.T.copy(), 0.5 * np.eye(2), split=(1, 1))
        cert = impedance_certificate(sys)
        assert cert.passive
        M = np.block([[A.T + A, B - B.T.T], [B.T - B.T, -np.eye(2)]])
        assert np.linalg.eigvalsh(0.5 * (M + M.T)).max() <= 1e-12

    def test_not_passive(self):
        sys = StateSpaceSystem(np.array([[1.0]]), np.ones((1, 1)), np.ones((1, 1)),
                               np.zeros((1, 1)), split=(1, 0))
        assert impedance_certificate(sys).verdict == NOT_PASSIVE


class TestScatteringConservative:
    def test_pi_scattering_form(self):
        sys = pi_scattering_system(2.2e-9, 3.4e-9, 14e-6, 50.0, 50.0)
        assert scattering_conservative_check(sys).verdict == CONSERVATIVE

    def test_rotation_feedthrough(self):
        th = 0.7
        D = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        sys = StateSpaceSystem(np.zeros((0, 0)), np.zeros((0, 2)), np.zeros((2, 0)),
                               D, split=(1, 1))
        assert scattering_conservative_check(sys).verdict == CONSERVATIVE

    def test_half_identity_residual(self):
        sys = StateSpaceSystem(np.zeros((0, 0)), np.zeros((0, 2)), np.zeros((2, 0)),
                               0.5 * np.eye(2), split=(1, 1))
        cert = scattering_conservative_check(sys)
        assert cert.verdict == NOT_PASSIVE
        assert cert.margin == pytest.approx(0.75)  # |D^T D - I| = 3/4


class TestDiscreteCertificates:
    def test_zero_quadruple_strictly_passive(self):
        phi = DiscreteSystem(np.zeros((1, 1)), np.zeros((1, 2)), np.zeros((2, 1)),
                             np.zeros((2, 2)), sigma=1.0, split=(1, 1))
        assert discrete_scattering_certificate(phi).verdict == STRICTLY_PASSIVE

    def test_cayley_of_pi_scattering_conservative(self):
        sys = pi_scattering_system(2.2e-9, 3.4e-9, 14e-6, 50.0, 50.0)
        phi = internal_cayley(sys, 88200.0)
        assert discrete_scattering_certificate(phi).verdict == CONSERVATIVE

    def test_random_contraction_passive(self, rng):
        # scale a random block matrix to spectral norm < 1: passive by construction
        S = rng.standard_normal((5, 5))
        S *= 0.9 / np.linalg.svd(S, compute_uv=False)[0]
        phi = DiscreteSystem(S[:3, :3], S[:3, 3:], S[3:, :3], S[3:, 3:],
                             sigma=1.0, split=(1, 1))
        cert = discrete_scattering_certificate(phi)
        assert cert.verdict == STRICTLY_PASSIVE
        assert np.linalg.svd(S, compute_uv=False)[0] < 1.0  # oracle

    def test_identity_shift_conservative(self):
        phi = DiscreteSystem(np.eye(2), np.zeros((2, 1)), np.zeros((1, 2)),
                             np.zeros((1, 1)), sigma=1.0, split=(1, 0))
        assert discrete_impedance_certificate(phi).verdict == CONSERVATIVE

    def test_cayley_of_conservative_is_conservative_all_sigma(self, rng):
        sys = random_conservative(rng, 4, 1, 1)
        for sigma in (1.0, 10.0, 1000.0):
            phi = internal_cayley(sys, sigma)
            assert discrete_impedance_certificate(phi).verdict == CONSERVATIVE

    def test_random_impedance_passive_discrete(self, rng):
        sys = random_impedance_passive(rng, 4, 1, 1)
        phi = internal_cayley(sys, 7.0)
        cert = discrete_impedance_certificate(phi)
        assert cert.passive
        M = np.block([[np.eye(4) - phi.Ad.T @ phi.Ad, phi.Cd.T - phi.Ad.T @ phi.Bd],
                      [phi.Cd - phi.Bd.T @ phi.Ad,
                       phi.Dd + phi.Dd.T - phi.Bd.T @ phi.Bd]])
        assert np.linalg.eigvalsh(0.5 * (M + M.T)).min() >= -1e-10 * (1 + np.linalg.norm(M))


class TestViaCayley:
    def test_pi_scattering_conservative(self):
        sys = pi_scattering_system(2.2e-9, 3.4e-9, 14e-6, 50.0, 50.0)
        assert scattering_passive_via_cayley(sys, 88200.0).verdict == CONSERVATIVE

    def test_dissipative_diagonal(self):
        sys = StateSpaceSystem(-np.eye(2), np.zeros((2, 1)), np.zeros((1, 2)),
                               np.zeros((1, 1)), split=(1, 0))
        assert scattering_passive_via_cayley(sys, 3.0).verdict == STRICTLY_PASSIVE

    def test_verdict_independent_of_sigma(self, rng):
        sys = random_impedance_passive(rng, 4, 1, 1)
        scat = external_cayley(sys, random_resistance(rng, 1, 1))
        verdicts = {scattering_passive_via_cayley(scat, s).verdict
                    for s in (1.0, 10.0, 1000.0)}
        assert len(verdicts) == 1


class TestProperlyPassive:
    def test_pi_circuit_not_proper(self):
        ok, margin = properly_impedance_passive(pi_circuit_system(2.2e-9, 3.4e-9, 14e-6))
        assert not ok and margin == 0.0

    def test_identity_shift_proper(self, rng):
        sys = random_conservative(rng, 3, 1, 1)
        ok, margin = properly_impedance_passive(regularize(sys, 1.0))
        assert ok and margin == pytest.approx(2.0)

    def test_regularised_pi_proper(self):
        sys = regularize(pi_circuit_system(2.2e-9, 3.4e-9, 14e-6), 1e-3)
        ok, margin = properly_impedance_passive(sys)
        assert ok and margin == pytest.approx(2e-3)


class TestTransformPreservation:
    def test_proper_passive_chain(self, rng):
        # properly passive => external Cayley feedthrough strictly inside the disk
        for _ in range(100):
            n = int(rng.integers(1, 6))
            sys = random_impedance_passive(rng, n, 1, 1, proper=True)
            R = random_resistance(rng, 1, 1)
            scat = external_cayley(sys, R)
            assert np.linalg.norm(scat.D, 2) < 1.0
            assert np.abs(np.linalg.eigvals(scat.D)).max() < 1.0

    def test_ext_cayley_verdict_agreement(self, rng):
        for strict in (True, False):
            sys = random_impedance_passive(rng, 4, 1, 1, strict=strict)
            base = impedance_certificate(sys).passive
            for _ in range(3):
                scat = external_cayley(sys, random_resistance(rng, 1, 1))
                # scattering passivity decided through the discrete test
                assert discrete_scattering_certificate(
                    internal_cayley(scat, 5.0)).passive == base

    def test_ext_cayley_conservative_to_conservative(self, rng):
        sys = random_conservative(rng, 4, 1, 1)
        scat = external_cayley(sys, random_resistance(rng, 1, 1))
        assert scattering_conservative_check(scat).verdict == CONSERVATIVE

    def test_reciprocal_verdicts_match(self, rng):
        sys = random_impedance_passive(rng, 4, 1, 1, proper=True)
        verdict = impedance_certificate(sys).verdict
        assert impedance_certificate(internal_reciprocal(sys)).verdict == verdict
        assert impedance_certificate(full_inversion(sys)).verdict == verdict
        cons = random_conservative(rng, 3, 1, 1)  # skew A is invertible iff n even
        cons = random_conservative(rng, 4, 1, 1)
        assert impedance_certificate(internal_reciprocal(cons)).verdict == CONSERVATIVE

    def test_rotation_counterexample_recovers_zero_block(self):
        # scattering-conservative pure rotation: the impedance feedthrough is
        # skew with structurally zero diagonal, so its (2,2) entry cannot be
        # inverted (the hybrid transform never exists here).  tau = sqrt(1-rho^2)
        # is irrational, so the cancellation leaves an eps-level residue.
        for rho in (-0.5, 0.0, 0.4, 0.9):
            tau = np.sqrt(1 - rho**2)
            D = np.array([[rho, -tau], [tau, rho]])
            sys = StateSpaceSystem(np.zeros((0, 0)), np.zeros((0, 2)),
                                   np.zeros((2, 0)), D, split=(1, 1))
            imp = inverse_external_cayley(sys, ResistanceMatrix(np.eye(1), np.eye(1)))
            scale = max(np.abs(imp.D).max(), 1.0)
            assert abs(imp.D[1, 1]) <= 1e-14 * scale
            assert abs(imp.D[0, 0]) <= 1e-14 * scale
            assert imp.D[1, 0] == pytest.approx(tau / (1 - rho))

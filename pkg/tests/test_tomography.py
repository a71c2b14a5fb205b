"""Operator basis properties, measurement, and state reconstruction."""

import numpy as np
import pytest

from conftest import random_density
from qrchaos.exceptions import StateError
from qrchaos.tomography import OperatorBasis, measure_all, reconstruct, su_generators

SQ3 = 1.0 / np.sqrt(3.0)

# antisymmetric generators follow the -i(E_l^j - E_j^l) convention with
# l > j (upper-triangle entry +i): the negatives of the more common
# textbook sign, which changes nothing about orthogonality or tomography
PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, 1j], [-1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

# the eight 3x3 generators, transcribed entry by entry
GELL_MANN = np.array(
    [
        [[0, 1, 0], [1, 0, 0], [0, 0, 0]],
        [[0, 1j, 0], [-1j, 0, 0], [0, 0, 0]],
        [[1, 0, 0], [0, -1, 0], [0, 0, 0]],
        [[0, 0, 1], [0, 0, 0], [1, 0, 0]],
        [[0, 0, 1j], [0, 0, 0], [-1j, 0, 0]],
        [[0, 0, 0], [0, 0, 1], [0, 1, 0]],
        [[0, 0, 0], [0, 0, 1j], [0, -1j, 0]],
        [[SQ3, 0, 0], [0, SQ3, 0], [0, 0, -2 * SQ3]],
    ],
    dtype=complex,
)


class TestGenerators:
    def test_d2_is_pauli(self):
        np.testing.assert_allclose(su_generators(2), PAULI, atol=1e-15)

    def test_d3_is_gell_mann(self):
        np.testing.assert_allclose(su_generators(3), GELL_MANN, atol=1e-15)

    @pytest.mark.parametrize("d", [2, 3, 4, 8, 16])
    def test_algebraic_properties(self, d):
        gens = su_generators(d)
        assert gens.shape == (d * d - 1, d, d)
        for g in gens:
            np.testing.assert_allclose(g, g.conj().T, atol=1e-14)  # Hermitian
            assert abs(np.trace(g)) < 1e-13  # traceless
        # orthonormality tr(a b) = 2 delta_ab
        gram = np.einsum("aij,bji->ab", gens, gens)
        np.testing.assert_allclose(gram, 2.0 * np.eye(d * d - 1), atol=1e-12)

    def test_d1_rejected(self):
        with pytest.raises(ValueError):
            su_generators(1)


class TestBasis:
    def test_identity_first_and_cached(self):
        basis = OperatorBasis.build(4)
        assert len(basis) == 16
        np.testing.assert_array_equal(basis.operators[0], np.eye(4))
        assert OperatorBasis.build(4) is basis
        assert not basis.operators.flags.writeable


class TestMeasureReconstruct:
    @pytest.mark.parametrize("d", [2, 3, 4, 8, 16])
    def test_round_trip(self, d, rng):
        basis = OperatorBasis.build(d)
        for _ in range(50):
            rho = random_density(rng, d)
            r = measure_all(rho, basis)
            assert r[0] == pytest.approx(1.0, abs=1e-12)
            np.testing.assert_allclose(reconstruct(r, basis), rho, atol=1e-10)

    def test_bloch_norm_bounded_by_purity(self, rng):
        # sum of squared generator expectations equals 2(tr rho^2 - 1/d)
        d = 4
        basis = OperatorBasis.build(d)
        for _ in range(20):
            rho = random_density(rng, d)
            r = measure_all(rho, basis)
            purity = np.trace(rho @ rho).real
            assert np.sum(r[1:] ** 2) == pytest.approx(
                2.0 * (purity - 1.0 / d), abs=1e-10
            )
            assert np.sum(r[1:] ** 2) <= 2.0 * (1.0 - 1.0 / d) + 1e-10

    def test_measurement_is_linear(self, rng):
        d = 3
        basis = OperatorBasis.build(d)
        a, b = random_density(rng, d), random_density(rng, d)
        mix = 0.3 * a + 0.7 * b
        np.testing.assert_allclose(
            measure_all(mix, basis),
            0.3 * measure_all(a, basis) + 0.7 * measure_all(b, basis),
            atol=1e-12,
        )

    def test_maximally_mixed_measures_zero(self):
        d = 8
        basis = OperatorBasis.build(d)
        r = measure_all(np.eye(d, dtype=complex) / d, basis)
        assert r[0] == pytest.approx(1.0)
        np.testing.assert_allclose(r[1:], 0.0, atol=1e-14)

    def test_non_hermitian_rejected(self, rng):
        basis = OperatorBasis.build(3)
        bad = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        with pytest.raises(StateError):
            measure_all(bad, basis)

    def test_reconstruct_validation(self):
        basis = OperatorBasis.build(2)
        with pytest.raises(ValueError, match="identity"):
            reconstruct(np.array([0.9, 0.0, 0.0, 0.0]), basis)
        with pytest.raises(ValueError, match="coefficients"):
            reconstruct(np.zeros(3), basis)

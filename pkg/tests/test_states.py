import json

import numpy as np
import pytest

from memsim import qmat, states
from memsim.errors import InvalidState, OutOfRange

from conftest import concurrence_bruteforce, random_states


class TestConstructors:
    def test_mems_r1_is_bell(self):
        np.testing.assert_allclose(
            states.mems(1.0), states.ket_dm(states.bell_state("hh+vv")), atol=1e-15
        )

    def test_subclasses_coincide_at_boundary(self):
        r = 2.0 / 3.0
        np.testing.assert_allclose(states.mems_i(r), states.mems_ii(r), atol=1e-15)
        expected = np.diag([1 / 3, 1 / 3, 0, 1 / 3]).astype(complex)
        expected[0, 3] = expected[3, 0] = 1 / 3
        np.testing.assert_allclose(states.mems(r), expected, atol=1e-15)

    def test_mems_0778_entries(self):
        rho = states.mems(0.778)
        np.testing.assert_allclose(np.diag(rho).real, [0.389, 0.222, 0.0, 0.389])
        assert rho[0, 3] == pytest.approx(0.389)

    @pytest.mark.parametrize("r,subclass", [(0.5, "I"), (0.9, "II"), (-0.1, "II"), (1.1, "I")])
    def test_mems_range_errors(self, r, subclass):
        with pytest.raises(OutOfRange):
            states.mems(r, subclass)

    def test_werner_limits(self):
        np.testing.assert_allclose(states.werner(0.0), np.eye(4) / 4.0)
        np.testing.assert_allclose(
            states.werner(1.0), states.ket_dm(states.bell_state("hh+vv"))
        )
        with pytest.raises(OutOfRange):
            states.werner(1.5)

    def test_werner_separability_threshold(self):
        w = states.werner(1.0 / 3.0)
        assert states.tangle(w) == pytest.approx(0.0, abs=1e-12)
        assert states.linear_entropy(w) == pytest.approx(8.0 / 9.0, abs=1e-12)

    def test_nonmax_pure(self):
        np.testing.assert_allclose(
            states.nonmax_pure(np.pi / 4.0), states.bell_state("hh+vv"), atol=1e-15
        )
        assert states.concurrence(states.ket_dm(states.nonmax_pure(0.0))) == pytest.approx(0.0, abs=1e-12)
        # concurrence of cos t |HH> + sin t |VV> is |sin 2t|
        c = states.concurrence(states.ket_dm(states.nonmax_pure(np.pi / 6.0)))
        assert c == pytest.approx(np.sqrt(3.0) / 2.0, abs=1e-12)

    def test_constructors_satisfy_invariants(self):
        for rho in (states.mems(0.3), states.mems(0.9), states.werner(0.5),
                    states.ket_dm(states.nonmax_pure(0.7, 0.3))):
            states.validate_density_matrix(rho)

    def test_ginibre_states_valid(self):
        for rho in random_states(20, seed=5):
            states.validate_density_matrix(rho)


class TestConcurrence:
    @pytest.mark.parametrize("r", [0.2, 0.5, 2.0 / 3.0, 0.778, 1.0])
    def test_mems_parameterization(self, r):
        assert states.concurrence(states.mems(r)) == pytest.approx(r, abs=1e-9)

    def test_maximally_mixed(self):
        assert states.concurrence(np.eye(4) / 4.0) == 0.0

    @pytest.mark.parametrize("p", [0.2, 0.5, 0.9])
    def test_werner_closed_form(self, p):
        expected = max(0.0, (3.0 * p - 1.0) / 2.0)
        assert states.concurrence(states.werner(p)) == pytest.approx(expected, abs=1e-9)

    def test_agrees_with_bruteforce_route(self):
        for rho in random_states(200, seed=42):
            a = states.concurrence(rho)
            b = concurrence_bruteforce(rho)
            assert a == pytest.approx(b, abs=1e-7)


class TestTangleAndEntropy:
    def test_tangle_boundary_mems(self):
        assert states.tangle(states.mems_i(2.0 / 3.0)) == pytest.approx(4.0 / 9.0, abs=1e-12)

    def test_tangle_bell(self):
        assert states.tangle(states.ket_dm(states.bell_state())) == pytest.approx(1.0, abs=1e-12)

    def test_tangle_mems_ii_03651(self):
        assert states.tangle(states.mems_ii(0.3651)) == pytest.approx(0.1333, abs=1e-4)

    def test_linear_entropy_limits(self):
        assert states.linear_entropy(states.ket_dm(states.bell_state())) == pytest.approx(0.0, abs=1e-12)
        assert states.linear_entropy(np.eye(4) / 4.0) == pytest.approx(1.0, abs=1e-12)
        assert states.linear_entropy(states.mems_i(2.0 / 3.0)) == pytest.approx(16.0 / 27.0, abs=1e-12)

    def test_local_unitary_invariance(self, rng):
        for rho in random_states(20, seed=9):
            u1 = qmat.haar_random_unitary(2, rng)
            u2 = qmat.haar_random_unitary(2, rng)
            u = np.kron(u1, u2)
            moved = u @ rho @ u.conj().T
            assert states.tangle(moved) == pytest.approx(states.tangle(rho), abs=1e-9)
            assert states.linear_entropy(moved) == pytest.approx(
                states.linear_entropy(rho), abs=1e-9
            )


class TestFidelity:
    def test_self_fidelity(self):
        for rho in random_states(20, seed=1):
            assert states.fidelity(rho, rho) == pytest.approx(1.0, abs=1e-10)

    def test_pure_pure_reduces_to_overlap(self, rng):
        for _ in range(20):
            psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            chi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            psi /= np.linalg.norm(psi)
            chi /= np.linalg.norm(chi)
            expected = abs(np.vdot(psi, chi)) ** 2
            got = states.fidelity(states.ket_dm(psi), states.ket_dm(chi))
            assert got == pytest.approx(expected, abs=1e-10)

    def test_rotated_boundary_mems_vs_bell(self):
        from memsim.concentrate import rotate_for_filtering

        rot = rotate_for_filtering(states.mems_i(2.0 / 3.0))
        target = states.ket_dm(states.bell_state("hv+vh"))
        assert states.fidelity(rot, target) == pytest.approx(2.0 / 3.0, abs=1e-9)

    def test_symmetry_including_rank_deficient(self):
        pairs = list(zip(random_states(10, seed=2), random_states(10, seed=3)))
        pairs += [(states.mems(0.8), states.ket_dm(states.bell_state()))]
        pairs += [(states.mems_ii(0.2), states.mems_i(0.9))]
        for a, b in pairs:
            assert states.fidelity(a, b) == pytest.approx(states.fidelity(b, a), abs=1e-9)

    def test_unity_iff_equal(self):
        a, b = random_states(2, seed=8)
        assert states.fidelity(a, b) < 1.0 - 1e-6
        assert states.fidelity(a, a.copy()) == pytest.approx(1.0, abs=1e-10)


class TestEntanglementOfFormation:
    def test_mems_0778(self):
        assert states.entanglement_of_formation(states.mems(0.778)) == pytest.approx(
            0.69, abs=0.005
        )

    def test_unit_concurrence(self):
        assert states.ef_from_concurrence(1.0) == pytest.approx(1.0)

    def test_werner_at_bell_fidelity_0778(self):
        p = states.werner_mixing_from_bell_fidelity(0.778)
        assert states.entanglement_of_formation(states.werner(p)) == pytest.approx(
            0.418, abs=0.002
        )

    def test_monotone_in_concurrence(self):
        grid = [states.ef_from_concurrence(c) for c in np.linspace(0.0, 1.0, 101)]
        assert all(b >= a for a, b in zip(grid, grid[1:]))

    def test_binary_entropy_endpoints(self):
        assert states.binary_entropy(0.0) == 0.0
        assert states.binary_entropy(1.0) == 0.0
        assert states.binary_entropy(0.5) == pytest.approx(1.0)


class TestSmallMeasures:
    def test_purity(self):
        assert states.purity(np.eye(4) / 4.0) == pytest.approx(0.25)
        assert states.purity(states.ket_dm(states.bell_state())) == pytest.approx(1.0)

    @pytest.mark.parametrize("p", [0.0, 0.4, 1.0])
    def test_bell_overlap_werner(self, p):
        assert states.bell_overlap(states.werner(p), "hh+vv") == pytest.approx(
            (1.0 + 3.0 * p) / 4.0
        )

    def test_bell_overlap_bad_label(self):
        with pytest.raises(OutOfRange):
            states.bell_overlap(np.eye(4) / 4.0, "nope")


def test_mems_dominates_werner_at_equal_entropy():
    # tangle at fixed linear entropy: MEMS curve sits on or above Werner's
    for p in np.linspace(1.0 / 3.0, 1.0, 100):
        w = states.werner(p)
        s_l = states.linear_entropy(w)
        from memsim.analysis import mems_r_at_entropy

        r, subclass = mems_r_at_entropy(s_l)
        t_mems = states.tangle(states.mems(r, subclass))
        assert t_mems >= states.tangle(w) - 1e-9


class TestJsonFormat:
    def test_round_trip(self):
        rho = states.mems(0.7)
        text = states.density_matrix_to_json(rho)
        doc = json.loads(text)
        assert doc["basis"] == "HH,HV,VH,VV"
        np.testing.assert_allclose(states.density_matrix_from_json(text), rho, atol=1e-15)

    def test_extra_keys_ignored(self):
        text = states.density_matrix_to_json(states.werner(0.5), extra={"meta": {"x": 1}})
        states.density_matrix_from_json(text)

    def test_rejects_naming_invariant(self):
        rho = states.mems(0.7)
        bad = json.loads(states.density_matrix_to_json(rho))
        bad["im"][0][3] = 0.5  # breaks hermiticity
        with pytest.raises(InvalidState, match="Hermitian"):
            states.density_matrix_from_json(json.dumps(bad))

        bad = json.loads(states.density_matrix_to_json(rho))
        bad["re"][0][0] = 0.9  # breaks the trace
        with pytest.raises(InvalidState, match="trace"):
            states.density_matrix_from_json(json.dumps(bad))

        bad = json.loads(states.density_matrix_to_json(rho))
        bad["re"][0][3] = bad["re"][3][0] = 0.9  # indefinite matrix
        with pytest.raises(InvalidState, match="eigenvalue"):
            states.density_matrix_from_json(json.dumps(bad))

    def test_rejects_missing_key(self):
        with pytest.raises(InvalidState, match="missing key"):
            states.density_matrix_from_json('{"dim": 4}')

    def test_rejects_garbage(self):
        with pytest.raises(InvalidState):
            states.density_matrix_from_json("not json at all")

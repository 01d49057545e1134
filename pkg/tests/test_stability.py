import io
import math

import numpy as np
import pytest

from rotochain import lumped, stability
from rotochain.params import ChainParams, ParamPoint
from rotochain.shooting import nth_zero

P = ChainParams(length=0.76, linear_density=0.1)


class TestJacobian:
    def test_position_rows_are_velocity_selectors(self):
        tpl = lumped.LumpedChain.from_params(P, n_masses=5, omega=4.0,
                                             attach_radius=0.05, aero=True)
        eq = lumped.equilibrium_shape(ParamPoint(1.0, 6.0), P, tpl)
        jac = stability.jacobian(eq.chain, eq.state)
        n = 5
        for i in range(n):
            rows = slice(6 * i, 6 * i + 3)
            expected = np.zeros((3, 6 * n))
            expected[:, 6 * i + 3: 6 * i + 6] = np.eye(3)
            np.testing.assert_array_equal(jac[rows], expected)

    def test_hanging_spectrum_purely_imaginary(self):
        # omega = 0, no aero: conservative system, eigenvalues on the axis
        tpl = lumped.LumpedChain.from_params(P, n_masses=6)
        eq = lumped.equilibrium_shape(ParamPoint(1e-9, 3.0), P, tpl)
        from dataclasses import replace
        chain = replace(eq.chain, omega=0.0)
        jac = stability.jacobian(chain, eq.state)
        eig = np.linalg.eigvals(jac)
        assert np.max(np.abs(eig.real)) <= 1e-3 * np.max(np.abs(eig))

    def test_central_difference_second_order(self):
        tpl = lumped.LumpedChain.from_params(P, n_masses=4, aero=True)
        eq = lumped.equilibrium_shape(ParamPoint(1.5, 8.0), P, tpl)
        length = tpl.total_length
        js = {s: stability.jacobian(eq.chain, eq.state,
                                    h_pos=s * length,
                                    h_vel=s * math.sqrt(9.81 * length))
              for s in (4e-3, 2e-3, 1e-3)}
        e1 = np.linalg.norm(js[4e-3] - js[2e-3])
        e2 = np.linalg.norm(js[2e-3] - js[1e-3])
        assert 1.7 < math.log2(e1 / e2) < 2.3

    def test_conjugate_pairing(self):
        tpl = lumped.LumpedChain.from_params(P, n_masses=6, aero=True)
        eq = lumped.equilibrium_shape(ParamPoint(2.0, 10.0), P, tpl)
        eig = np.linalg.eigvals(stability.jacobian(eq.chain, eq.state))
        conj = np.conj(eig)
        for lam in eig:
            assert np.min(np.abs(conj - lam)) < 1e-8 * max(1.0, abs(lam))


class TestLambdaMax:
    def test_diagonal(self):
        assert stability.lambda_max(np.diag([-1.0, -2.0, 3.0])) == pytest.approx(3.0)

    def test_rotation_generator(self):
        assert stability.lambda_max(np.array([[0.0, -1.0], [1.0, 0.0]])) == \
            pytest.approx(0.0, abs=1e-12)

    def test_companion_matrix_against_chosen_roots(self):
        # polynomial built from chosen roots: the oracle is the construction
        roots = np.array([1.0, -2.0, 2j, -2j, -0.5 + 1j, -0.5 - 1j])
        coeffs = np.poly(roots)
        n = roots.size
        comp = np.zeros((n, n))
        comp[1:, :-1] = np.eye(n - 1)
        comp[:, -1] = -coeffs[1:][::-1]
        assert stability.lambda_max(comp) == pytest.approx(1.0, rel=1e-9)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            stability.lambda_max(np.zeros((2, 3)))


class TestStabilityPoint:
    def test_no_aero_marginal(self):
        tpl = lumped.LumpedChain.from_params(P, n_masses=10)
        res = stability.stability_point(ParamPoint(2.0, 10.0), P, tpl)
        assert res.valid
        assert not res.aero_enabled
        assert abs(res.lambda_max) < 1e-4

    def test_aero_signs_around_first_locus(self):
        tpl = lumped.LumpedChain.from_params(P, n_masses=10, aero=True)
        z1 = nth_zero(2.0, 1, 10.0)
        left = stability.stability_point(ParamPoint(2.0, z1 - 0.8), P, tpl)
        right = stability.stability_point(ParamPoint(2.0, z1 + 0.8), P, tpl)
        assert left.lambda_max < 0
        assert right.lambda_max > 0.1

    def test_classify_bands(self):
        assert stability.classify(-1e-2) == "stable"
        assert stability.classify(5e-4) == "marginal"
        assert stability.classify(0.2) == "unstable"


@pytest.fixture(scope="module")
def small_map():
    tpl = lumped.LumpedChain.from_params(P, n_masses=10, aero=True)
    return stability.stability_map(P, tpl, a_max=3.0, lbar_max=12.0,
                                   na=12, nl=24)


class TestStabilityMap:
    def test_grid_layout(self, small_map):
        assert small_map.lam.shape == (12, 24)
        assert small_map.a_values[0] == pytest.approx(3.0 / 24)
        assert small_map.lbar_values[-1] == pytest.approx(12.0 - 0.25)

    def test_mostly_valid(self, small_map):
        assert small_map.fraction_invalid < 0.05

    def test_lookup_matches_cell_centers(self, small_map):
        i, j = 5, 10
        point = ParamPoint(float(small_map.a_values[i]), float(small_map.lbar_values[j]))
        assert small_map.lookup(point) == pytest.approx(small_map.lam[i, j], rel=1e-9)
        assert math.isinf(small_map.lookup(ParamPoint(100.0, 5.0)))

    def test_threads_give_identical_map(self):
        tpl = lumped.LumpedChain.from_params(P, n_masses=10, aero=True)
        one = stability.stability_map(P, tpl, a_max=2.0, lbar_max=6.0, na=4, nl=6)
        two = stability.stability_map(P, tpl, a_max=2.0, lbar_max=6.0, na=4, nl=6,
                                      threads=2)
        np.testing.assert_array_equal(one.lam, two.lam)
        np.testing.assert_array_equal(one.valid, two.valid)

    def test_csv_round_trip(self, small_map, tmp_path):
        path = tmp_path / "map.csv"
        small_map.to_csv(path)
        again = stability.StabilityMap.from_csv(path)
        np.testing.assert_allclose(again.lam, small_map.lam, rtol=1e-6)
        np.testing.assert_array_equal(again.valid, small_map.valid)
        np.testing.assert_allclose(again.a_values, small_map.a_values, rtol=1e-9)
        assert again.aero_enabled == small_map.aero_enabled

    def test_pm3d_block_shape(self, small_map):
        buf = io.StringIO()
        small_map.write_pm3d(buf)
        lines = buf.getvalue().splitlines()
        assert lines.count("") == 12  # one separator per a-row
        assert len([ln for ln in lines if ln]) == 12 * 24

    def test_sharp_transitions_at_loci(self, small_map):
        # along a fixed-a slice, each zero-radius locus sits within one cell
        # of a sharp jump in lambda_max (the unstable lobes start there)
        i = int(np.argmin(np.abs(small_map.a_values - 2.125)))
        a = float(small_map.a_values[i])
        jumps = np.abs(np.diff(small_map.lam[i]))
        edges = 0.5 * (small_map.lbar_values[:-1] + small_map.lbar_values[1:])
        cell = small_map.lbar_values[1] - small_map.lbar_values[0]
        big = jumps.max()
        for locus_i in (1, 2):
            z = nth_zero(a, locus_i, 12.0)
            near = np.abs(edges - z) <= cell + 1e-9
            assert jumps[near].max() > 0.2 * big

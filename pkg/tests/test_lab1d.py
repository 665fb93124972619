import numpy as np
import pytest

from landscape_hp import lab1d

PI = np.pi


@pytest.fixture(scope="module")
def free_particle():
    return lab1d.solve_1d(lab1d.ZERO_POTENTIAL, 2048, 12)


def test_zero_potential_eigenvalues(free_particle):
    # -(d/dx)^2 on (0,1), Dirichlet: lambda_n = (n pi)^2
    n = np.arange(1, 13)
    assert np.allclose(free_particle.pairs.values, (n * PI) ** 2, rtol=1e-4)


def test_zero_potential_landscape_is_torsion(free_particle):
    # -u'' = 1 -> u = x(1-x)/2, max 1/8 at the midpoint
    u = free_particle.u
    x = free_particle.x
    assert np.allclose(u, x * (1 - x) / 2, atol=1e-6)
    assert u.max() == pytest.approx(0.125, abs=1e-6)


def test_envelope_inequality_zero_potential(free_particle):
    # |psi|/(lambda ||psi||_inf) <= u; for the ground state the peak gives
    # 1/pi^2 <= 1/8
    assert lab1d.envelope_check(free_particle) <= 1e-10
    assert 1 / PI ** 2 <= 0.125


def test_fourier_coefficients_analytic(free_particle):
    # u = sum c_n psi_n with c_n = 2 sqrt(2)/(n^3 pi^3) for odd n, 0 even
    c, _ = lab1d.fourier_reconstruct(free_particle, 9)
    for n in range(1, 10):
        exact = 2 * np.sqrt(2) / (n * PI) ** 3 if n % 2 else 0.0
        assert c[n - 1] == pytest.approx(exact, abs=1e-6)


def test_reconstruction_error_monotone(free_particle):
    errs = lab1d.reconstruction_errors(free_particle, 12)
    assert all(errs[i + 1] <= errs[i] + 1e-15 for i in range(len(errs) - 1))


def test_envelope_inequality_random_potentials():
    for seed in range(3):
        V = lab1d.random_potential(32, 0.0, 8000.0, seed)
        res = lab1d.solve_1d(V, 2048, 25)
        assert lab1d.envelope_check(res) <= 1e-3 * res.u.max()


def test_two_well_potential_census():
    # two deep wells -> two dominant landscape peaks matched to the two
    # lowest eigenvectors, each localized in its own well
    vals = [6000.0] * 16
    vals[3] = vals[4] = 0.0       # left well
    vals[11] = vals[12] = 0.0     # right well
    V = lab1d.Potential1D(tuple(vals))
    res = lab1d.solve_1d(V, 2048, 6)
    census = lab1d.ground_state_census(res)
    assert len(census) == 2
    matched = {m.pair_index for m in census}
    assert matched == {0, 1}
    for m in census:
        assert m.distance < 1.0 / 16.0


def test_potential_evaluation_piecewise_constant():
    V = lab1d.Potential1D((1.0, 5.0))
    x = np.array([0.1, 0.6, 0.999])
    assert np.allclose(V(x), [1.0, 5.0, 5.0])


def test_solve_requires_resolution():
    with pytest.raises(ValueError):
        lab1d.solve_1d(lab1d.ZERO_POTENTIAL, 100, 50)


def test_figure_data_shapes(free_particle):
    data = lab1d.figure_data(free_particle, n_show=3, N_partial=(1, 5))
    hdr, env = data["envelope"]
    assert env.shape[1] == len(hdr.split(","))
    hdr, four = data["fourier"]
    assert hdr.split(",") == ["x", "u", "partial1", "partial5"]

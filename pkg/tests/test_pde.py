import numpy as np
import pytest

from tsrm import airy, marginals, pde
from tsrm.errors import ConfigurationError, RangeError


@pytest.fixture(scope="module")
def field():
    return pde.solve_phi()


def test_initial_condition(field):
    np.testing.assert_allclose(field.values[0, :-1], airy.u(field.h_grid[:-1]), rtol=0, atol=1e-15)


def test_boundary_value_is_w(field):
    sel = field.x_grid <= 3.0
    dev = np.abs(field.values[sel, 0] - marginals.w_of_x(field.x_grid[sel]))
    assert dev.max() <= 1e-3


def test_maximum_principle(field):
    assert field.values.min() >= 0.0
    assert field.values.max() <= 1.0
    # nonincreasing in x up to the O(dh^2) truncation of the steady state
    assert np.diff(field.values, axis=0).max() <= 1e-8


def test_neumann(field):
    r = pde.neumann_residual(field)
    assert r.max() < 1e-3
    coarse = pde.neumann_residual(pde.solve_phi(dh=0.02))
    i, ic = np.searchsorted(field.x_grid[1:], 1.0), np.searchsorted(field.x_grid[1:], 1.0)
    assert coarse[ic] > 3.0 * r[i]


def test_total_mass(field):
    assert pde.pde_total_mass(field) == pytest.approx(1.0, abs=1e-3)


def test_joint_density(field):
    for h in (0.0, 0.7, 2.0):
        assert pde.joint_nu_hat(field, 0.0, h) == pytest.approx(airy.u(h) ** 2, abs=1e-12)
    assert pde.joint_nu_hat(field, -0.5, 1.0) == pde.joint_nu_hat(field, 0.5, 1.0)


def test_height_marginal(field):
    H = pde.pde_height_marginal(field)
    for h in (0.0, 0.5, 1.0, 2.0):
        j = int(round(h / field.dh))
        assert H[j] == pytest.approx(marginals.nu2_hat(h), abs=1e-3)


def test_position_marginal(field):
    P = pde.pde_position_marginal(field)
    for x in (0.25, 0.5, 1.0, 2.0):
        i = int(round(x / field.dx))
        assert P[i] == pytest.approx(marginals.nu1_hat(x), abs=1e-3)


def test_second_order_convergence():
    xs, hs = (0.5, 1.0, 2.0), np.arange(0, 4.0001, 0.08)

    def sample(f):
        return np.array([[pde.interpolate(f, x, h) for h in hs] for x in xs])

    ref = sample(pde.solve_phi(x_max=2.0, dx=0.00125, dh=0.0025))
    errs = [np.abs(sample(pde.solve_phi(x_max=2.0, dx=dx, dh=dh)) - ref).max()
            for dx, dh in ((0.02, 0.04), (0.01, 0.02), (0.005, 0.01))]
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 3.0) & (ratios < 5.5))


def test_nu_hat_residual(field):
    assert pde.nu_hat_pde_residual(field, 0.5, 1.0) <= field.dx ** 2 + field.dh ** 2
    assert pde.nu_hat_pde_residual(field, 2.0, 0.01) <= field.dx ** 2 + field.dh ** 2
    with pytest.raises(RangeError):
        pde.nu_hat_pde_residual(field, 0.5, 0.0)
    with pytest.raises(RangeError):
        pde.nu_hat_pde_residual(field, field.x_grid[-1], 1.0)


def test_out_of_grid(field):
    with pytest.raises(RangeError):
        pde.interpolate(field, 5.0, 1.0)
    with pytest.raises(RangeError):
        pde.interpolate(field, 1.0, -0.1)


@pytest.mark.parametrize("kw", [
    {"dx": -0.01},
    {"h_max": 8.0},
    {"dx": 0.003},
    {"dh": 0.001, "dx": 0.05},
    {"dh": float("nan")},
])
def test_bad_grids(kw):
    with pytest.raises(ConfigurationError):
        pde.solve_phi(**kw)


def test_csv(tmp_path):
    f = pde.solve_phi(x_max=0.5, dx=0.05, dh=0.05)
    path = tmp_path / "field.csv"
    f.to_csv(path, header="grid test")
    assert path.read_text().startswith("# grid test\n")
    table = np.loadtxt(path, delimiter=",")
    np.testing.assert_array_equal(table[0, 1:], f.h_grid)
    np.testing.assert_array_equal(table[1:, 0], f.x_grid)
    np.testing.assert_array_equal(table[1:, 1:], f.values)

import numpy as np
import pytest

from bsphases.errors import TransversalityError, UnsupportedConfigurationError, WindowError
from bsphases.model import HamiltonianFamily, Polynomial, builtin_family
from bsphases.spectral import avoided_params, find_crossings


def poly(d):
    return Polynomial.from_dict(d)


def test_paper_example_crossings():
    cs = find_crossings(builtin_family("paper_example"))
    assert [round(c.t_star, 12) for c in cs] == [-1.0, 1.0]
    for c in cs:
        assert abs(c.lambda_star - 1) < 1e-12
        assert c.branch_pair == (0, 1)
        assert abs(c.slope_gap - 4) < 1e-9


def test_linear_lz_crossing():
    (c,) = find_crossings(builtin_family("linear_lz"))
    assert abs(c.t_star) < 1e-12
    assert sorted([c.slope_minus, c.slope_plus]) == pytest.approx([-1, 1], abs=1e-12)
    # the branch entering lower rises
    assert c.slope_minus > c.slope_plus


def test_three_level_chain_crossings():
    cs = find_crossings(builtin_family("three_level_chain"))
    assert [(round(c.t_star, 10), c.branch_pair) for c in cs] == [(-1.0, (1, 2)), (1.0, (0, 1))]


def test_no_crossing():
    f = HamiltonianFamily(2, 1, (-2, 2), {(0, 0): poly({(1, 0): 1}), (1, 1): poly({(1, 0): 1, (0, 0): 1})})
    assert find_crossings(f) == []


def test_off_grid_crossing_and_grid_robustness():
    # branches t and 0.3 cross at t = 0.3 / 1.0001 (off any grid)
    f = HamiltonianFamily(
        2, 1, (-1, 1), {(0, 0): poly({(1, 0): 1.0001}), (1, 1): poly({(0, 0): 0.3}), (0, 1): poly({(0, 1): 1})}
    )
    t_ref = 0.3 / 1.0001
    (c1,) = find_crossings(f)
    (c2,) = find_crossings(f, points_per_unit=1024)
    assert abs(c1.t_star - t_ref) < 1e-11
    assert abs(c1.t_star - c2.t_star) <= 1e-10


def test_slopes_match_finite_differences():
    f = builtin_family("three_level_chain")
    mat = f.at([0.0])
    for c in find_crossings(f):
        j = c.branch_pair[0]
        eps = 1e-4
        before = np.linalg.eigvalsh(mat(np.array([c.t_star - 2 * eps, c.t_star - eps])))
        after = np.linalg.eigvalsh(mat(np.array([c.t_star + eps, c.t_star + 2 * eps])))
        # entering lower branch continues as the upper one
        s_in_lower = (before[1, j] - before[0, j]) / eps
        s_out_upper = (after[1, j + 1] - after[0, j + 1]) / eps
        assert abs(s_in_lower - c.slope_minus) < 1e-6
        assert abs(s_out_upper - c.slope_minus) < 1e-6
        assert abs((before[1, j + 1] - before[0, j + 1]) / eps - c.slope_plus) < 1e-6


def test_tangential_crossing_rejected():
    f = HamiltonianFamily(2, 1, (-1, 1), {(0, 0): poly({(2, 0): 1}), (1, 1): poly({(3, 0): -1})})
    with pytest.raises((TransversalityError, UnsupportedConfigurationError)):
        find_crossings(f)


def test_triple_degeneracy_rejected():
    f = HamiltonianFamily(
        3, 1, (-1, 1), {(0, 0): poly({(1, 0): 1}), (1, 1): poly({(1, 0): -1}), (2, 2): poly({(1, 0): 2})}
    )
    with pytest.raises(UnsupportedConfigurationError):
        find_crossings(f)


@pytest.mark.parametrize("name,coef,slope", [("paper_example", 0.25, 4), ("linear_lz", 0.5, 2)])
def test_gamma0_closed_form(name, coef, slope):
    f = builtin_family(name)
    for c in find_crossings(f):
        for mu in np.geomspace(1e-3, 0.3, 12):
            ap = avoided_params(f, c, [mu])
            assert abs(ap.gap - 2 * mu) <= 1e-9 * 2 * mu
            assert abs(ap.gamma0 - coef * mu * mu) <= 1e-9 * coef * mu * mu
            assert ap.gamma0 >= 0
            ap_neg = avoided_params(f, c, [-mu])
            assert ap_neg.gamma0 == pytest.approx(ap.gamma0, rel=1e-12)


def test_zero_mu_exact():
    for name in ("paper_example", "linear_lz", "three_level_chain"):
        f = builtin_family(name)
        for c in find_crossings(f):
            ap = avoided_params(f, c, [0.0])
            assert ap.gap == 0.0 and ap.gamma0 == 0.0


def test_window_error():
    f = builtin_family("three_level_chain")
    c = find_crossings(f)[0]
    with pytest.raises(WindowError):
        avoided_params(f, c, [3.0], window=0.05)

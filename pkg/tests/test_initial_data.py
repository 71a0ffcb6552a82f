import math

import numpy as np
import pytest

from radks.errors import AdmissibilityError, ConfigurationError, ResolutionError
from radks.grid import constant_field, integrate, make_grid
from radks.helmholtz import build_solver
from radks.initial_data import (
    FamilyParams,
    base_data,
    build_family,
    eta_star,
    family_energy_scan,
    l1_distance,
    mollifier_spec,
    mollifier_value,
    w22_norm,
)

# Frozen regression constants (independent oracles in the companion tests):
# - normalization of the unit-mass bump in R^5, from adaptive quadrature of
#   exp(-1/(1-r^2)) r^4 (scipy.integrate.quad at 1e-14 tolerance)
C5_NORMALIZATION = 3.230410698920738
# - admissibility threshold for (iota=1, gamma=1.5, n=5, volume=8 pi^2/15),
#   from root-finding on s^3 exp(-s/2) = 1/2 in s = ln(1/eta)
ETA_STAR_REFERENCE = 5.186097735342984e-09
# - family energies on the N=2048 unit-ball grid at eta_star/{4,8,16,32}
#   over the unit base pair; validated against the closed-form cell-1
#   oracle in test_family_energy_decreasing_with_closed_form_oracle
FAMILY_F_REFERENCE = (
    7.9566310167383305,
    5.581143285062944,
    3.717406573321508,
    2.2612387335381268,
)

BALL_VOLUME = 8 * math.pi**2 / 15


def test_mollifier_normalization_frozen():
    spec = mollifier_spec(5)
    assert spec.normalization == pytest.approx(C5_NORMALIZATION, rel=1e-10)


def test_mollifier_unit_integral_quadrature():
    # integrate phi over the unit ball with an independent midpoint rule;
    # the rule is O(h^2), so a fine mesh reaches the 1e-10 tolerance
    spec = mollifier_spec(5)
    g = make_grid(5, 1.0, 262144)
    vals = np.where(
        g.centers < 1.0,
        spec.normalization * np.exp(-1.0 / (1.0 - np.minimum(g.centers, 1 - 1e-9) ** 2)),
        0.0,
    )
    assert math.fsum(vals * g.volumes) == pytest.approx(1.0, abs=1e-10)


def test_mollifier_support_and_monotonicity():
    spec = mollifier_spec(5)
    assert mollifier_value(spec, 1.0) == 0.0
    assert mollifier_value(spec, 1.7) == 0.0
    assert mollifier_value(spec, 0.0) == pytest.approx(
        spec.normalization * math.exp(-1.0), rel=1e-14
    )
    assert mollifier_value(spec, 0.3) >= mollifier_value(spec, 0.7)
    with pytest.raises(ConfigurationError):
        mollifier_value(spec, -0.1)


def test_eta_star_frozen_regression():
    got = eta_star(1.0, 1.5, 5, BALL_VOLUME)
    assert got == pytest.approx(ETA_STAR_REFERENCE, rel=1e-9)


def test_eta_star_defining_conditions_hold_below():
    star = eta_star(1.0, 1.5, 5, BALL_VOLUME)
    for k in (2.0, 10.0, 100.0):
        eta = star / k
        psi = eta ** 0.5 * math.log(1.0 / eta) ** 3
        assert psi < BALL_VOLUME * 1.0
        assert 2.0 * psi < 1.0


def test_eta_star_vanishing_small_scale_limit():
    # psi -> 0 as eta -> 0 (the power beats the logarithm for n >= 5)
    psis = [e**0.5 * math.log(1.0 / e) ** 3 for e in (1e-10, 1e-20, 1e-40)]
    assert psis[0] > psis[1] > psis[2]
    assert psis[2] < 1e-12


def test_eta_star_bisection_stability():
    # the bisection is run to relative machine tolerance; perturbing the
    # volume at the 1e-12 level moves the threshold by far less than 1e-10
    a = eta_star(1.0, 1.5, 5, BALL_VOLUME)
    b = eta_star(1.0, 1.5, 5, BALL_VOLUME * (1 + 1e-12))
    assert abs(a - b) < 1e-10


def test_eta_star_rejects_bad_inputs():
    with pytest.raises(ConfigurationError):
        eta_star(1.0, 1.0, 5, BALL_VOLUME)  # gamma must exceed 1
    with pytest.raises(ConfigurationError):
        eta_star(0.0, 1.5, 5, BALL_VOLUME)
    with pytest.raises(ConfigurationError):
        eta_star(1.0, 1.5, 4, BALL_VOLUME)  # needs n >= 5


@pytest.fixture(scope="module")
def fine_grid():
    return make_grid(5, 1.0, 2048)


@pytest.fixture(scope="module")
def fine_solver(fine_grid):
    return build_solver(fine_grid)


@pytest.fixture(scope="module")
def family_rows(fine_grid, fine_solver):
    u0 = constant_field(fine_grid, 1.0)
    v0 = constant_field(fine_grid, 1.0)
    star = eta_star(1.0, 1.5, 5, fine_grid.ball_volume)
    etas = [star / 4, star / 8, star / 16, star / 32]
    return u0, v0, family_energy_scan(u0, v0, 1.5, etas, fine_grid, fine_solver)


def test_family_exact_mass(family_rows, fine_grid):
    u0, _, rows = family_rows
    m0 = integrate(u0)
    for row in rows:
        assert abs(row.mass - m0) <= 1e-12 * m0


def test_family_positivity_and_v_ordering(family_rows, fine_grid):
    u0, v0, rows = family_rows
    for row in rows:
        assert row.min_u > 0.0
        assert np.all(row.v.values >= v0.values)


def test_family_l1_distance_decreasing_with_scale_oracle(family_rows, fine_grid):
    # closed form: the bump carries mass psi(eta) and the corrector removes
    # the same mass uniformly, so |u_eta - u0|_{L1} ~ 2 psi(eta)
    u0, _, rows = family_rows
    dists = [l1_distance(row.u, u0) for row in rows]
    assert all(b < a for a, b in zip(dists, dists[1:]))
    for row, dist in zip(rows, dists):
        s = -math.log(row.eta)
        psi = math.exp(0.5 * math.log(row.eta) + 3.0 * math.log(s))
        # bump mass psi leaves cell 1 positive and lowers every other cell
        assert dist == pytest.approx(
            2.0 * psi * (1 - fine_grid.volumes[0] / fine_grid.ball_volume), rel=1e-9
        )


def test_family_energy_decreasing_with_closed_form_oracle(family_rows, fine_grid):
    # at sub-cell scales the whole bump mass lands in the first cell, so F
    # has a closed form in psi(eta), the cell volume, and the ball volume
    u0, v0, rows = family_rows
    F = [row.F for row in rows]
    assert all(b < a for a, b in zip(F, F[1:]))
    V1 = float(fine_grid.volumes[0])
    vol = fine_grid.ball_volume
    for row in rows:
        s = -math.log(row.eta)
        psi = math.exp(0.5 * math.log(row.eta) + 3.0 * math.log(s))
        c = psi / vol
        u1 = 1.0 + psi / V1 - c
        entropy = V1 * u1 * math.log(u1) + (vol - V1) * (1 - c) * math.log(1 - c)
        oracle = entropy - vol + 0.5 * vol
        assert row.F == pytest.approx(oracle, abs=1e-6)


def test_family_energy_frozen_regression(family_rows):
    _, _, rows = family_rows
    for row, frozen in zip(rows, FAMILY_F_REFERENCE):
        assert row.F == pytest.approx(frozen, rel=1e-9)


def test_family_requires_admissible_scale(fine_grid):
    u0 = constant_field(fine_grid, 1.0)
    v0 = constant_field(fine_grid, 1.0)
    star = eta_star(1.0, 1.5, 5, fine_grid.ball_volume)
    with pytest.raises(AdmissibilityError):
        build_family(FamilyParams(u0=u0, v0=v0, gamma=1.5, eta=2 * star), fine_grid)


def test_family_strict_resolution_flag(fine_grid):
    u0 = constant_field(fine_grid, 1.0)
    v0 = constant_field(fine_grid, 1.0)
    star = eta_star(1.0, 1.5, 5, fine_grid.ball_volume)
    with pytest.raises(ResolutionError):
        build_family(
            FamilyParams(u0=u0, v0=v0, gamma=1.5, eta=star / 4),
            fine_grid,
            strict_resolution=True,
        )


def test_bump_fractions_unit_mass_any_scale():
    from radks.initial_data import bump_cell_fractions

    g = make_grid(5, 1.0, 512)
    for eta in (0.9, 0.125, 3.3e-3, 1e-9):
        fr = bump_cell_fractions(g, eta)
        assert math.fsum(fr) == pytest.approx(1.0, abs=1e-12)
        assert np.all(fr >= 0.0)


def test_bump_fractions_subcell_land_in_first_cell():
    from radks.initial_data import bump_cell_fractions

    g = make_grid(5, 1.0, 512)
    fr = bump_cell_fractions(g, 1e-9)
    assert fr[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(fr[1:] == 0.0)


def test_bump_fractions_match_pointwise_profile_when_resolved():
    # cell averages track phi(r/eta) V_i / eta^n at a well-resolved scale
    from radks.initial_data import bump_cell_fractions

    g = make_grid(5, 1.0, 512)
    eta = 0.25
    spec = mollifier_spec(5)
    fr = bump_cell_fractions(g, eta)
    inside = g.centers < 0.8 * eta
    expected = (
        np.array([mollifier_value(spec, r / eta) for r in g.centers[inside]])
        * g.volumes[inside]
        / eta**g.n
    )
    # cell averaging differs from the center value at O(h^2/eta^2)
    assert np.max(np.abs(fr[inside] - expected)) <= 5e-4 * np.max(expected)


def test_base_data_constant():
    g = make_grid(5, 1.0, 64)
    u0, v0 = base_data("constant", g, value=1.0)
    assert np.all(u0.values == 1.0) and np.all(v0.values == 1.0)


def test_base_data_bump_degenerate():
    g = make_grid(5, 1.0, 64)
    u0, v0 = base_data("bump", g, baseline=2.0, amplitude=0.0, width=0.3)
    assert np.allclose(u0.values, 2.0) and np.allclose(v0.values, 2.0)


def test_base_data_rejects_nonpositive():
    g = make_grid(5, 1.0, 64)
    with pytest.raises(AdmissibilityError):
        base_data("constant", g, value=0.0)
    with pytest.raises(AdmissibilityError):
        base_data("bump", g, baseline=1.0, amplitude=-2.0, width=0.3)


def test_base_data_custom_roundtrip(tmp_path):
    from radks.energy import compute_f, compute_g
    from radks.helmholtz import solve
    from radks.snapshots import write_snapshot

    g = make_grid(5, 1.0, 64)
    s = build_solver(g)
    u0, v0 = base_data("bump", g, baseline=1.0, amplitude=0.5, width=0.3)
    w = solve(s, u0)
    f = compute_f(u0, v0, s)
    gf = compute_g(u0, v0)
    path = tmp_path / "snap.csv"
    write_snapshot(path, g, u0, v0, w, f, 0.5 * (gf[:-1] + gf[1:]), t=0.25)
    u1, v1 = base_data("custom", g, path=str(path))
    assert np.array_equal(u1.values, u0.values)
    assert np.array_equal(v1.values, v0.values)


def test_w22_norm_constant():
    g = make_grid(5, 1.0, 64)
    f = constant_field(g, 2.0)
    assert w22_norm(f) == pytest.approx(2.0 * math.sqrt(g.ball_volume), rel=1e-12)

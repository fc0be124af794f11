from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from models.errors import ComputationFailed, DegenerateSample, NoTangentBall, NonInterior, NotFound
from models.reports import MCEstimate
from services import verify
from services.diffop import apply_operator, sub_laplacian
from services.domain import Domain
from services.fields import ScalarField
from services.group import GroupElement, gauge_coords, sample_gauge_ball
from services.poly import StratifiedPolynomial
from services.verify import (
    ball_volume_ratio,
    barrier_check,
    barrier_function,
    boundary_data_range,
    characteristic_scan,
    decay_exponent,
    distance_comparison_probe,
    holder_seminorm,
    manufactured_decay,
    manufactured_solution,
    maximum_principle_holds,
    mc_dirichlet,
    nontangential_point,
    sample_domain_ball,
    tangent_ball_centre,
)

IDENTITY = [[1.0, 0.0], [0.0, 1.0]]


def test_holder_seminorm_of_a_horizontal_coordinate(h1, rng):
    points = sample_gauge_ball(h1, 1.0, 60, rng)
    estimate = holder_seminorm(ScalarField.from_expression("x", h1), points, 1.0)
    assert 0.0 < estimate <= 1.0 + 1e-9
    assert holder_seminorm(ScalarField.constant(2, h1), points, 0.5) == 0.0


def test_holder_seminorm_errors(h1, rng):
    f = ScalarField.from_expression("x", h1)
    points = sample_gauge_ball(h1, 1.0, 10, rng)
    for alpha in (0.0, 1.5):
        with pytest.raises(DegenerateSample):
            holder_seminorm(f, points, alpha)
    with pytest.raises(DegenerateSample):
        holder_seminorm(f, points[:, :1], 0.5)


def test_sample_domain_ball(h1, rng):
    domain = Domain.graph("t^2", h1)
    cloud = sample_domain_ball(domain, 0.5, 80, rng)
    assert cloud.shape == (3, 80)
    assert np.all(np.asarray(domain.contains(list(cloud)), dtype=bool))
    assert np.all(np.asarray(gauge_coords(list(cloud), h1)) <= 0.5 + 1e-12)


def test_decay_of_a_polynomial_is_reproduced(h1):
    u = ScalarField.from_expression("x*y + t", h1)
    report = decay_exponent(u, "x*y + t", Domain.flat(h1), radii=[0.5, 0.25], n_samples=50)
    assert report.reproduced
    assert report.slope is None
    assert report.passes(0.0)


def test_manufactured_decay_slope(h1):
    report = manufactured_decay(h1, 2, alpha=0.5, seed=5, n_samples=100)
    assert report.target == 2.5
    assert report.passes(0.5)
    assert report.at_least(2.0)


def test_manufactured_solution_feeds_the_solver(h1):
    d, P_true, f, u = manufactured_solution(h1, 3, alpha=0.5, seed=5)
    assert P_true.weighted_degree() <= 2
    assert f == apply_operator(sub_laplacian(h1), d.poly_part * P_true).truncate(1)
    point = [0.2, 0.3, -0.1]
    expected = float((d.poly_part * P_true).evaluate_coords(point)) + 0.3 * gauge_coords(point, h1) ** 2.5
    assert u(point) == pytest.approx(expected)


def test_manufactured_decay_rejects_a_wrong_polynomial(h1):
    d, P_true, f, u = manufactured_solution(h1, 2, alpha=0.5, seed=5)
    wrong = P_true + StratifiedPolynomial.constant(h1, 1)
    report = decay_exponent(u, d.poly_part * wrong, Domain.flat(h1), n_samples=100, seed=5, target=2.5)
    assert not report.passes(0.5)
    assert report.slope < 2.0


def test_manufactured_decay_fails_when_the_solver_drifts(h1, monkeypatch):
    solve = verify.solve_approximating

    def drifting(*args, **kwargs):
        result = solve(*args, **kwargs)
        return replace(result, P=result.P + StratifiedPolynomial.constant(h1, 1))

    monkeypatch.setattr(verify, "solve_approximating", drifting)
    with pytest.raises(ComputationFailed):
        manufactured_decay(h1, 2, seed=5, n_samples=50)


def test_tangent_ball_centre_of_the_flat_boundary(h1):
    centre = tangent_ball_centre(Domain.flat(h1), [0.0, 0.0, 0.0], 0.5)
    assert np.allclose(centre, [0.0, -0.5, 0.0])
    g = barrier_function(Domain.flat(h1), [0.0, 0.0, 0.0], 0.5, 2, 1.0)
    assert g([0.0, 0.0, 0.0]) == pytest.approx(0.0)
    assert g([0.0, 0.5, 0.0]) > 0.0


def test_barrier_scan_on_the_flat_boundary(h1):
    report = barrier_check(Domain.flat(h1), IDENTITY, 1.0, [0.0, 0.0, 0.0], 0.5, n_samples=100, seed=2)
    assert report.k_found is not None
    assert report.margin >= 0.0
    assert report.tangency_value == pytest.approx(0.0, abs=1e-9)
    assert report.scanned[-1][0] == report.k_found


def test_barrier_needs_an_exterior_ball(h1):
    domain = Domain.graph("-x^2", h1)
    with pytest.raises(NoTangentBall):
        barrier_check(domain, IDENTITY, 1.0, [0.0, 0.0, 0.0], 2.0, n_samples=50)


def test_mc_rejects_exterior_start(h1):
    with pytest.raises(NonInterior):
        mc_dirichlet(Domain.flat(h1), "x*y", None, [0.0, -0.1, 0.0], n_paths=10, dt=1e-2)


def test_mc_is_reproducible(h1):
    domain = Domain.flat(h1, radius=1.0)
    kwargs = dict(n_paths=200, dt=1e-3, block_size=64)
    first = mc_dirichlet(domain, "x*y", None, [0.1, 0.05, 0.0], seed=3, **kwargs)
    second = mc_dirichlet(domain, "x*y", None, [0.1, 0.05, 0.0], seed=3, **kwargs)
    other = mc_dirichlet(domain, "x*y", None, [0.1, 0.05, 0.0], seed=4, **kwargs)
    assert first == second
    assert first.mean != other.mean
    assert first.n_paths == 200


def test_mc_paths_do_not_depend_on_the_batching(h1):
    domain = Domain.flat(h1, radius=1.0)
    kwargs = dict(n_paths=150, dt=1e-3, seed=3)
    estimates = [mc_dirichlet(domain, "x*y", None, [0.1, 0.05, 0.0], block_size=size, **kwargs)
                 for size in (1, 64, 100, None)]
    assert all(estimate == estimates[0] for estimate in estimates[1:])


def test_each_path_has_its_own_stream():
    generators = verify._path_generators(3, 5, 2)
    expected = np.random.default_rng(np.random.SeedSequence(entropy=3, spawn_key=(6,)))
    assert np.array_equal(generators[1].standard_normal(4), expected.standard_normal(4))


def test_mc_constant_boundary_data(h1):
    estimate = mc_dirichlet(Domain.flat(h1, radius=0.5), "1", None, [0.0, 0.1, 0.0], n_paths=50, dt=1e-3, seed=7)
    assert estimate.mean == pytest.approx(1.0)
    assert estimate.std_error == pytest.approx(0.0)


@pytest.mark.slow
def test_mc_matches_a_harmonic_polynomial(h1):
    domain = Domain.flat(h1, radius=1.0)
    estimate = mc_dirichlet(domain, "x*y", None, [0.3, 0.2, 0.0], n_paths=20_000, dt=1e-4, seed=11)
    assert abs(estimate.mean - 0.06) <= 4 * estimate.std_error + 0.01


def test_maximum_principle_check():
    assert maximum_principle_holds(MCEstimate(0.5, 0.01, 100, 7), 0.0, 1.0)
    assert maximum_principle_holds(MCEstimate(1.02, 0.01, 100, 7), 0.0, 1.0)
    assert not maximum_principle_holds(MCEstimate(1.2, 0.01, 100, 7), 0.0, 1.0)


def test_boundary_data_range(h1):
    low, high = boundary_data_range(Domain.flat(h1), "y", n=200, seed=1)
    assert low == pytest.approx(0.0, abs=1e-9)
    assert 0.0 < high <= 1.0 + 1e-9


def test_characteristic_scan(h1):
    flat = characteristic_scan(Domain.flat(h1), n=100, seed=1)
    assert flat.min_grad == pytest.approx(1.0)
    assert not flat.characteristic
    level = characteristic_scan(Domain.from_input("phi:t", h1), n=50, seed=1)
    assert level.characteristic
    assert level.argmin == [0.0, 0.0, 0.0]


def test_nontangential_point_on_the_flat_boundary(h1):
    p3 = nontangential_point(Domain.flat(h1), GroupElement.identity(h1), Fraction(1, 8))
    assert list(p3.coords) == [0, Fraction(1, 16), 0]


def test_nontangential_point_failures(h1):
    with pytest.raises(NotFound):
        nontangential_point(Domain.flat(h1), GroupElement.of(h1, [0, 1, 0]), Fraction(1, 8))
    with pytest.raises(NotFound):
        nontangential_point(Domain.level_set("-t", h1), GroupElement.identity(h1), Fraction(1, 8))


def test_distance_comparison_probe(h1):
    report = distance_comparison_probe(Domain.flat(h1), n_pairs=300, seed=1)
    assert report.epsilon == 0.5
    assert report.pairs > 0
    assert 0.0 < report.c1 < np.inf
    assert 0.0 < report.c2 < np.inf


@pytest.mark.slow
def test_ball_volume_ratio(h1):
    report = ball_volume_ratio(h1, n=200_000, seed=1)
    assert report.expected == 16.0
    assert report.relative_error < 0.05

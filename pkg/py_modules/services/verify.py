"""
Numerical verification harness
Hölder seminorms, boundary-decay slopes, the Lipschitz barrier scan, the Monte Carlo Dirichlet oracle,
characteristic scans, non-tangential points and the distance and volume probes
"""
import math
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

import runtime
from constants import BARRIER, DEFAULTS, GEOMETRY, MONTE_CARLO, SAMPLING, TOLERANCES
from models.errors import (
    ComputationFailed,
    DegenerateSample,
    EmptyShell,
    NoTangentBall,
    NonInterior,
    NotElliptic,
    NotFound,
    OffTriangular,
    StuckPath,
)
from models.reports import BarrierReport, DecayReport, MCEstimate, ProbeReport, ScanReport, VolumeReport
from services import linalg
from services.algebra import Stratification
from services.approximator import assemble_system, distance_expansion, solve_approximating
from services.diffop import apply_operator, horizontal_derivative, sub_laplacian
from services.domain import Domain
from services.fields import (
    ScalarField,
    fd_horizontal_derivative,
    field_from_input,
    gauge_field,
    product_field,
    sum_field,
)
from services.group import (
    GroupElement,
    bch_coords,
    euclidean_distance_coords,
    gauge_coords,
    gauge_distance_coords,
    sample_gauge_ball,
)
from services.poly import StratifiedPolynomial, monomial_basis
from services.taylor import decay_slope, default_radii, radius_generator

Points = Union[np.ndarray, Sequence[GroupElement]]


def _as_columns(points: Points, group: Stratification) -> np.ndarray:
    """(N, n) float array from an array or a list of GroupElements"""
    if isinstance(points, np.ndarray):
        return points.astype(float)
    return np.array([[float(c) for c in p.coords] for p in points], dtype=float).reshape(-1, group.N).T


def _values(field: ScalarField, coords: Sequence, size: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(field(list(coords)), dtype=float), (size,))


# ---------------------------
# Hölder seminorm and decay
# ---------------------------

def holder_seminorm(f: ScalarField, points: Points, alpha: float, seed: int = DEFAULTS["SEED"]) -> float:
    """max |f(p) - f(p')| / d(p, p')^alpha over sampled pairs, a lower bound for the seminorm"""
    if not 0 < alpha <= 1:
        raise DegenerateSample(f"Hölder exponent must lie in (0, 1], got {alpha}", {"alpha": alpha})
    group = f.group
    cloud = _as_columns(points, group)
    n = cloud.shape[1]
    if n < 2:
        raise DegenerateSample(f"need at least two points, got {n}")

    if n * (n - 1) // 2 <= SAMPLING["HOLDER_MAX_PAIRS"]:
        first, second = np.triu_indices(n, k=1)
    else:
        rng = np.random.default_rng(seed)
        first = rng.integers(0, n, SAMPLING["HOLDER_MAX_PAIRS"])
        second = rng.integers(0, n, SAMPLING["HOLDER_MAX_PAIRS"])

    values = _values(f, cloud, n)
    distances = np.asarray(gauge_distance_coords(list(cloud[:, first]), list(cloud[:, second]), group), dtype=float)
    apart = distances > 0
    if not np.any(apart):
        raise DegenerateSample("all sampled pairs coincide")
    ratios = np.abs(values[first] - values[second])[apart] / distances[apart] ** alpha
    estimate = float(ratios.max())
    runtime.logger.debug(f"Hölder seminorm of {f.label} (alpha={alpha}) over {int(apart.sum())} pairs: {estimate:.6g}")
    return estimate


def sample_domain_ball(domain: Domain, radius: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Up to n uniform samples of Omega ∩ B(radius), shape (N, count)"""
    group = domain.group
    kept: List[np.ndarray] = []
    count = 0
    for _ in range(SAMPLING["MAX_REJECTION_ROUNDS"]):
        batch = sample_gauge_ball(group, radius, n, rng)
        inside = np.asarray(domain.contains(list(batch)), dtype=bool)
        kept.append(batch[:, inside])
        count += int(inside.sum())
        if count >= n:
            break
    if count == 0:
        raise EmptyShell(f"no samples of {domain.label} inside B({radius:g})", {"radius": radius})
    return np.concatenate(kept, axis=1)[:, :n]


def decay_exponent(u: ScalarField, P_e, domain: Domain, radii: Optional[Sequence[float]] = None,
                   n_samples: Optional[int] = None, seed: int = DEFAULTS["SEED"],
                   target: Optional[float] = None) -> DecayReport:
    """sup |u - P_e| over Omega ∩ B(rho) per radius, with the log-log slope"""
    group = domain.group
    radii = list(radii or default_radii())
    n_samples = n_samples or SAMPLING["SAMPLES_PER_RADIUS"]
    P_e = field_from_input(P_e, group)
    unbounded = domain.with_radius(None)

    sups = []
    for index, rho in enumerate(radii):
        cloud = sample_domain_ball(unbounded, rho, n_samples, radius_generator(seed, index))
        size = cloud.shape[1]
        residual = np.abs(_values(u, cloud, size) - _values(P_e, cloud, size))
        sups.append(float(residual.max()))

    reproduced = max(sups) <= TOLERANCES["POLY_REPRODUCTION"]
    slope = None if reproduced else decay_slope(radii, sups)
    runtime.logger.info(f"Boundary decay of {u.label} on {domain.label}: slope {slope}, reproduced {reproduced}")
    return DecayReport(radii, sups, slope, n_samples, reproduced, target, label=f"decay:{u.label}")


def manufactured_solution(group: Stratification, k: int, alpha: float = DEFAULTS["ALPHA"],
                          seed: int = DEFAULTS["SEED"], domain: Optional[Domain] = None):
    """(d, P_true, f, u) with u = d P_true + d |p|^(k-1+alpha) and f = L(d P_true) truncated at k-2

    P_true has random rational coefficients on every monomial of degree <= k-1, so its
    free coefficients take part too.
    """
    rng = np.random.default_rng(seed)
    domain = domain or Domain.flat(group)
    P_true = StratifiedPolynomial(group, {
        J.exponents: Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 4))) for J in monomial_basis(group, k - 1)
    })
    d = distance_expansion(domain, k)
    f = apply_operator(sub_laplacian(group), d.poly_part * P_true).truncate(k - 2)

    exponent = k - 1 + alpha
    distance = ScalarField.from_polynomial(d.poly_part)
    u = sum_field(ScalarField.from_polynomial(d.poly_part * P_true),
                  product_field(distance, gauge_field(group, exponent)))
    return d, P_true, f, u


def manufactured_decay(group: Stratification, k: int, alpha: float = DEFAULTS["ALPHA"], seed: int = DEFAULTS["SEED"],
                       domain: Optional[Domain] = None, radii: Optional[Sequence[float]] = None,
                       n_samples: Optional[int] = None) -> DecayReport:
    """Recover P_true from f = L(d P_true) and its free coefficients, then report the decay of u - d P

    The target slope is k + alpha.
    """
    domain = domain or Domain.flat(group)
    d, P_true, f, u = manufactured_solution(group, k, alpha, seed, domain)
    laplacian = sub_laplacian(group)
    system = assemble_system(laplacian, d, k)
    free = {key: P_true.coefficient(key) for key in system.free_keys()}
    try:
        result = solve_approximating(laplacian, d, f, k, free_assignment=free, mode="triangular")
    except OffTriangular:
        result = solve_approximating(laplacian, d, f, k, free_assignment=free, mode="general")
    if result.P != P_true:
        raise ComputationFailed(f"solver returned {result.P}, expected {P_true}", {"k": k, "seed": seed})

    report = decay_exponent(u, d.poly_part * result.P, domain, radii, n_samples, seed, target=k + alpha)
    runtime.logger.info(f"Manufactured decay on {group!r} at k={k}, alpha={alpha}: slope {report.slope}")
    return report


# ---------------------------
# Lipschitz barrier
# ---------------------------

def _euclidean_normal(domain: Domain, p0: Sequence[float]) -> np.ndarray:
    """Outward unit normal of {phi < 0} at p0 in exponential coordinates"""
    point = [np.array([c]) for c in p0]
    grad = np.array([float(np.asarray(domain.partial(domain.phi, c)(point), dtype=float).ravel()[0])
                     for c in range(domain.group.N)])
    norm = float(np.linalg.norm(grad))
    if norm <= TOLERANCES["CHARACTERISTIC"]:
        raise NoTangentBall(f"{domain.label} has a degenerate normal at {p0}", {"point": p0})
    return grad / norm


def _ball_samples(center: np.ndarray, radius: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """n uniform samples of the Euclidean ball, shape (N, n)"""
    dim = center.size
    directions = rng.standard_normal((dim, n))
    directions /= np.linalg.norm(directions, axis=0)
    radii = radius * rng.uniform(0.0, 1.0, n) ** (1.0 / dim)
    return center[:, None] + directions * radii


def tangent_ball_centre(domain: Domain, p0: Sequence[float], r1: float) -> np.ndarray:
    """p~ = p0 + r1 * outward normal, centre of the exterior Euclidean ball touching the boundary at p0"""
    p0 = np.array([float(c) for c in p0])
    return p0 + r1 * _euclidean_normal(domain, p0)


def barrier_function(domain: Domain, p0: Sequence[float], r1: float, k: int, f_bound: float,
                     boundary_bound: Optional[float] = None) -> ScalarField:
    """g = (M + f_bound)(1 - (r1^2 / psi)^k), psi(q) = |q - p~|^2 for the exterior tangent ball centre p~"""
    boundary_bound = BARRIER["BOUNDARY_BOUND"] if boundary_bound is None else boundary_bound
    centre = tangent_ball_centre(domain, p0, r1)
    scale = boundary_bound + f_bound

    def g(coords):
        psi = 0.0
        for c, x in enumerate(coords):
            psi = psi + (np.asarray(x, dtype=float) - centre[c]) ** 2
        return scale * (1.0 - (r1 * r1 / psi) ** k)

    return ScalarField.from_callable(g, domain.group, label=f"barrier(k={k}, r1={r1:g})")


def _check_tangent_ball(domain: Domain, centre: np.ndarray, r1: float, rng: np.random.Generator):
    inner = _ball_samples(centre, r1 * (1.0 - 1e-3), BARRIER["TANGENT_BALL_SAMPLES"], rng)
    intruders = int(np.count_nonzero(np.asarray(domain.with_radius(None).contains(list(inner)), dtype=bool)))
    if intruders:
        raise NoTangentBall(
            f"the exterior ball of radius {r1:g} meets {domain.label} at {intruders} sampled points",
            {"r1": r1, "centre": centre.tolist()},
        )


def barrier_check(domain: Domain, A: Sequence[Sequence[float]], f_bound: float, p0: Sequence[float], r1: float,
                  k_max: Optional[int] = None, seed: int = DEFAULTS["SEED"], boundary_bound: Optional[float] = None,
                  n_samples: Optional[int] = None, h_step: Optional[float] = None) -> BarrierReport:
    """Least k with sum a_ij X_i X_j g <= -f_bound on sampled Omega ∩ B_e(p0, r1)"""
    group = domain.group
    k_max = k_max or BARRIER["K_MAX"]
    n_samples = n_samples or BARRIER["SAMPLES"]
    h_step = h_step or BARRIER["FD_STEP"]
    boundary_bound = BARRIER["BOUNDARY_BOUND"] if boundary_bound is None else boundary_bound
    A = np.asarray(A, dtype=float)
    rng = np.random.default_rng(seed)
    unbounded = domain.with_radius(None)

    _check_tangent_ball(domain, tangent_ball_centre(domain, p0, r1), r1, rng)

    base = np.array([float(c) for c in p0])
    cloud = _ball_samples(base, r1, 4 * n_samples, rng)
    cloud = cloud[:, np.asarray(unbounded.contains(list(cloud)), dtype=bool)][:, :n_samples]
    if cloud.shape[1] == 0:
        raise EmptyShell(f"no samples of {domain.label} inside the Euclidean ball B_e(p0, {r1:g})")
    points = list(cloud)

    scanned = []
    k_found = None
    margin = -math.inf
    for k in range(1, k_max + 1):
        g = barrier_function(domain, p0, r1, k, f_bound, boundary_bound)
        Lg = 0.0
        for i in range(group.m):
            for j in range(group.m):
                if A[i, j] != 0:
                    Lg = Lg + A[i, j] * np.asarray(fd_horizontal_derivative((i + 1, j + 1), g, points, h_step))
        slack = float(np.min(-f_bound - np.asarray(Lg, dtype=float)))
        scanned.append((k, slack))
        runtime.logger.debug(f"barrier k={k}: worst slack {slack:.6g}")
        if slack >= 0:
            k_found, margin = k, slack
            break
        margin = max(margin, slack)

    tangency = float(np.asarray(barrier_function(domain, p0, r1, k_found or 1, f_bound, boundary_bound)(
        [np.array([c]) for c in base]), dtype=float).ravel()[0])
    runtime.logger.info(f"Barrier scan on {domain.label}: k_found={k_found}, margin={margin:.6g}")
    return BarrierReport(k_found, margin, cloud.shape[1], r1, f_bound, boundary_bound, tangency, scanned)


# ---------------------------
# Monte Carlo Dirichlet oracle
# ---------------------------

def _diffusion_factor(A: Optional[Sequence[Sequence[float]]], m: int) -> Optional[np.ndarray]:
    """Symmetric square root of a constant coefficient matrix"""
    if A is None:
        return None
    A = np.asarray(A, dtype=float)
    if A.shape != (m, m) or not np.allclose(A, A.T):
        raise NotElliptic(f"coefficient matrix must be symmetric {m}x{m}")
    eigenvalues, vectors = np.linalg.eigh(A)
    if eigenvalues.min() <= TOLERANCES["ELLIPTIC_SLACK"]:
        raise NotElliptic(f"coefficient matrix has eigenvalue {eigenvalues.min():.3g}")
    return vectors @ np.diag(np.sqrt(eigenvalues)) @ vectors.T


def _path_generators(seed: int, first: int, count: int) -> List[np.random.Generator]:
    """Path i draws from SeedSequence(seed, spawn_key=(i,))"""
    return [np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(i,)))
            for i in range(first, first + count)]


def _simulate_batch(domain: Domain, boundary_data: ScalarField, f: Optional[ScalarField], start: Sequence[float],
                    generators: List[np.random.Generator], dt: float, factor: Optional[np.ndarray],
                    max_steps: int):
    """Payoffs g(exit) - (1/2) sum dt f(path) and exit steps for one batch of paths

    Each path takes its normals from its own generator in chunks of DRAW_CHUNK steps,
    so a path sees the same increments whatever batch it runs in.
    """
    group = domain.group
    size = len(generators)
    chunk = MONTE_CARLO["DRAW_CHUNK"]
    position = [np.full(size, c) for c in start]
    alive = np.arange(size)
    payoff = np.zeros(size)
    integral = np.zeros(size)
    steps = np.zeros(size, dtype=np.int64)
    normals = np.empty((size, group.m, chunk))
    root_dt = math.sqrt(dt)
    padding = group.N - group.m

    for step in range(1, max_steps + 1):
        cursor = (step - 1) % chunk
        if cursor == 0:
            for i in alive:
                normals[i] = generators[i].standard_normal((group.m, chunk))
        current = [c[alive] for c in position]
        if f is not None:
            integral[alive] += dt * _values(f, current, alive.size)
        zeta = normals[alive, :, cursor].T
        if factor is not None:
            zeta = factor @ zeta
        increment = [root_dt * zeta[i] for i in range(group.m)] + [np.zeros(alive.size)] * padding
        moved = [np.asarray(c, dtype=float) for c in bch_coords(current, increment, group)]
        inside = np.asarray(domain.contains(moved), dtype=bool)

        exited = alive[~inside]
        if exited.size:
            payoff[exited] = _values(boundary_data, [c[~inside] for c in moved], exited.size)
            steps[exited] = step
        for c in range(group.N):
            position[c][alive] = moved[c]
        alive = alive[inside]
        if alive.size == 0:
            return payoff - MONTE_CARLO["GENERATOR_FACTOR"] * integral, steps
    raise StuckPath(f"{alive.size} paths still inside {domain.label} after {max_steps} steps",
                    {"max_steps": max_steps, "dt": dt})


def _simulate(domain: Domain, boundary_data: ScalarField, f: Optional[ScalarField], start: Sequence[float],
              n_paths: int, block_size: int, dt: float, seed: int, factor: Optional[np.ndarray],
              max_steps: int):
    """Runs the paths in batches of block_size; the batching does not change any payoff"""
    payoffs, exit_steps = [], []
    for first in range(0, n_paths, block_size):
        count = min(block_size, n_paths - first)
        payoff, steps = _simulate_batch(domain, boundary_data, f, start, _path_generators(seed, first, count),
                                        dt, factor, max_steps)
        payoffs.append(payoff)
        exit_steps.append(steps)
        runtime.logger.debug(f"Monte Carlo paths {first}..{first + count - 1} done")
    return np.concatenate(payoffs), np.concatenate(exit_steps)


def mc_dirichlet(domain: Domain, boundary_data, f, p, n_paths: Optional[int] = None, dt: Optional[float] = None,
                 seed: int = DEFAULTS["SEED"], A: Optional[Sequence[Sequence[float]]] = None,
                 max_steps: Optional[int] = None, block_size: Optional[int] = None) -> MCEstimate:
    """u(p) = E[g(exit)] - (1/2) E[int f dt] for the walk p <- p o exp(sqrt(dt) A^(1/2) zeta)

    The walk has generator (1/2) sum a_ij X_i X_j, so the estimate solves
    sum a_ij X_i X_j u = f with u = g on the boundary. Path i is driven by
    SeedSequence(seed, spawn_key=(i,)), whatever the block_size.
    """
    group = domain.group
    n_paths = n_paths or MONTE_CARLO["DEFAULT_PATHS"]
    dt = dt or MONTE_CARLO["DEFAULT_DT"]
    max_steps = max_steps or MONTE_CARLO["MAX_STEPS"]
    block_size = block_size or MONTE_CARLO["BLOCK_SIZE"]
    if domain.radius is None:
        runtime.logger.warning(f"{domain.label} is unbounded, intersecting with B({DEFAULTS['GAUGE_BALL_RADIUS']})")
        domain = domain.with_radius(DEFAULTS["GAUGE_BALL_RADIUS"])

    start = [float(c) for c in (p.coords if isinstance(p, GroupElement) else p)]
    if not bool(np.asarray(domain.contains([np.array([c]) for c in start]), dtype=bool).ravel()[0]):
        raise NonInterior(f"starting point {start} is not inside {domain.label}", {"point": start})

    boundary_data = field_from_input(boundary_data, group)
    f = field_from_input(f, group) if f is not None else None
    if f is not None and f.polynomial is not None and f.polynomial.is_zero():
        f = None
    factor = _diffusion_factor(A, group.m)

    payoff, steps = _simulate(domain, boundary_data, f, start, n_paths, block_size, dt, seed, factor, max_steps)
    mean = float(payoff.mean())
    std_error = float(payoff.std(ddof=1) / math.sqrt(payoff.size)) if payoff.size > 1 else 0.0
    estimate = MCEstimate(mean, std_error, int(payoff.size), seed, dt, float(steps.mean()))
    runtime.logger.info(f"Monte Carlo estimate at {start}: {mean:.6g} ± {std_error:.2g} ({payoff.size} paths)")
    return estimate


# ---------------------------
# Boundary geometry
# ---------------------------

def characteristic_scan(domain: Domain, n: Optional[int] = None, seed: int = DEFAULTS["SEED"],
                        half_width: Optional[float] = None) -> ScanReport:
    """Minimum of |grad_H phi| over boundary samples near e"""
    group = domain.group
    n = n or SAMPLING["BOUNDARY_SAMPLES"]
    rng = np.random.default_rng(seed)
    samples = [np.asarray(c, dtype=float) for c in domain.boundary_samples(n, rng, radius=half_width)]
    origin = [0.0] * group.N
    if abs(float(np.asarray(domain.phi(origin), dtype=float))) <= TOLERANCES["POLY_REPRODUCTION"]:
        samples = [np.concatenate(([0.0], c)) for c in samples]

    norms = np.asarray(domain.horizontal_gradient_norm(samples), dtype=float)
    index = int(np.argmin(norms))
    min_grad = float(norms[index])
    report = ScanReport(min_grad, [float(c[index]) for c in samples], int(norms.size),
                        min_grad <= TOLERANCES["CHARACTERISTIC"])
    runtime.logger.info(f"Characteristic scan of {domain.label}: min |grad_H phi| = {min_grad:.6g}")
    return report


def _inward_horizontal_normal(domain: Domain, p1: GroupElement) -> List:
    """-grad_H phi / |grad_H phi| at p1, exact when phi is polynomial and the norm is rational"""
    group = domain.group
    P = domain.phi.polynomial
    if P is not None and not any(isinstance(c, float) for c in p1.coords):
        gradient = [horizontal_derivative((i,), P).evaluate_coords(p1.coords) for i in range(1, group.m + 1)]
        norm = linalg.exact_sqrt(sum(g * g for g in gradient))
        if norm is not None:
            if norm == 0:
                raise NotFound(f"{domain.label} is characteristic at {p1}", {"point": str(p1)})
            return [-g / norm for g in gradient]
    point = [np.array([float(c)]) for c in p1.coords]
    gradient = [float(np.asarray(g, dtype=float).ravel()[0]) for g in domain.horizontal_gradient(point)]
    norm = math.sqrt(sum(g * g for g in gradient))
    if norm <= TOLERANCES["CHARACTERISTIC"]:
        raise NotFound(f"{domain.label} is characteristic at {p1}", {"point": str(p1)})
    return [-g / norm for g in gradient]


def nontangential_point(domain: Domain, p1: GroupElement, t, a: Optional[float] = None,
                        seed: int = DEFAULTS["SEED"]) -> GroupElement:
    """p3 = p1 o (s t nu) with d(p3, p1) / t and d(p3, boundary) / t both in [a, 1/a]"""
    group = domain.group
    a = a or GEOMETRY["NONTANGENTIAL_A"]
    if abs(domain.phi.at(p1)) > TOLERANCES["GRAPH_NORMALIZATION"]:
        raise NotFound(f"{p1} is not on the boundary of {domain.label}")
    normal = _inward_horizontal_normal(domain, p1)
    t = Fraction(t) if isinstance(t, (int, Fraction)) else t
    rng = np.random.default_rng(seed)
    t_float = float(t)

    for offset in GEOMETRY["NONTANGENTIAL_OFFSETS"]:
        s = Fraction(offset).limit_denominator(1000) if isinstance(t, Fraction) else offset
        step = [s * t * nu for nu in normal] + [0 * s for _ in range(group.N - group.m)]
        p3 = p1 * GroupElement.of(group, step)
        if not domain.contains_point(p3):
            continue
        to_p1 = float(gauge_distance_coords([float(c) for c in p3.coords], [float(c) for c in p1.coords], group))
        to_boundary = domain.distance_to_boundary(p3, rng)
        ratios = (to_p1 / t_float, to_boundary / t_float)
        runtime.logger.debug(f"non-tangential offset {offset}: ratios {ratios}")
        if all(a <= r <= 1.0 / a for r in ratios):
            return p3
    raise NotFound(f"no non-tangential point at scale {t} near {p1} on {domain.label}", {"t": str(t)})


# ---------------------------
# Probes
# ---------------------------

def distance_comparison_probe(domain: Domain, n_pairs: Optional[int] = None, seed: int = DEFAULTS["SEED"]) -> ProbeReport:
    """C1 = max d_e / d and C2 = max d / d_e^(1/r) over pairs in Omega ∩ B(1)"""
    group = domain.group
    n_pairs = n_pairs or SAMPLING["PROBE_PAIRS"]
    rng = np.random.default_rng(seed)
    cloud = sample_domain_ball(domain.with_radius(None), 1.0, 2 * n_pairs, rng)
    half = cloud.shape[1] // 2
    if half == 0:
        raise DegenerateSample(f"too few samples of {domain.label} for a distance probe")
    p, q = list(cloud[:, :half]), list(cloud[:, half:2 * half])
    gauge_d = np.asarray(gauge_distance_coords(p, q, group), dtype=float)
    euclid = np.asarray(euclidean_distance_coords(p, q), dtype=float)
    apart = (gauge_d > 0) & (euclid > 0)
    epsilon = 1.0 / group.step
    report = ProbeReport(
        c1=float(np.max(euclid[apart] / gauge_d[apart])),
        c2=float(np.max(gauge_d[apart] / euclid[apart] ** epsilon)),
        epsilon=epsilon,
        pairs=int(apart.sum()),
    )
    runtime.logger.info(f"Distance probe on {domain.label}: C1={report.c1:.4g}, C2={report.c2:.4g}")
    return report


def _ball_volume(group: Stratification, radius: float, n: int, rng: np.random.Generator) -> float:
    """Box volume times the fraction of box samples inside B(radius)"""
    half_widths = np.array([radius ** j for j in group.layer_of], dtype=float)
    hits = 0
    chunk = 100_000
    for first in range(0, n, chunk):
        size = min(chunk, n - first)
        box = rng.uniform(-1.0, 1.0, size=(group.N, size)) * half_widths[:, None]
        hits += int(np.count_nonzero(np.asarray(gauge_coords(list(box), group)) <= radius))
    return float(np.prod(2 * half_widths)) * hits / n


def ball_volume_ratio(group: Stratification, radius: float = 1.0, n: Optional[int] = None,
                      seed: int = DEFAULTS["SEED"]) -> VolumeReport:
    """|B(2R)| / |B(R)| from independent samples per ball; should be 2^Q"""
    n = n or SAMPLING["VOLUME_SAMPLES"]
    small = _ball_volume(group, radius, n, radius_generator(seed, 0))
    large = _ball_volume(group, 2 * radius, n, radius_generator(seed, 1))
    if small == 0:
        raise DegenerateSample(f"no samples landed in B({radius:g})")
    expected = float(2 ** group.Q)
    ratio = large / small
    report = VolumeReport(ratio, expected, abs(ratio - expected) / expected, n)
    runtime.logger.info(f"Ball volume ratio on {group!r}: {ratio:.4g} (expected {expected:g})")
    return report


def maximum_principle_holds(estimate: MCEstimate, low: float, high: float, sigmas: float = 3.0) -> bool:
    """Estimate with f = 0 lies in [min g, max g] up to a few standard errors"""
    slack = sigmas * estimate.std_error + 1e-12
    return low - slack <= estimate.mean <= high + slack


def boundary_data_range(domain: Domain, boundary_data, n: Optional[int] = None,
                        seed: int = DEFAULTS["SEED"]) -> Tuple[float, float]:
    """Sampled (min, max) of the boundary data over the boundary of Omega ∩ B(R)"""
    group = domain.group
    n = n or SAMPLING["BOUNDARY_SAMPLES"]
    radius = domain.radius or DEFAULTS["GAUGE_BALL_RADIUS"]
    boundary_data = field_from_input(boundary_data, group)
    rng = np.random.default_rng(seed)

    cloud = sample_gauge_ball(group, radius, n, rng)
    norms = np.maximum(np.asarray(gauge_coords(list(cloud), group), dtype=float), 1e-300)
    sphere = [c * (radius / norms) ** j for c, j in zip(cloud, group.layer_of)]
    sphere = [c[np.asarray(domain.phi(sphere), dtype=float) <= 0] for c in sphere]

    flat = domain.boundary_samples(n, rng, radius=radius)
    within = np.asarray(gauge_coords(flat, group), dtype=float) <= radius
    flat = [np.asarray(c, dtype=float)[within] for c in flat]

    values = np.concatenate([_values(boundary_data, part, part[0].size) for part in (sphere, flat) if part[0].size])
    return float(values.min()), float(values.max())

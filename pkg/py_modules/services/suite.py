"""
Acceptance battery
Shards run as asyncio tasks in the default executor, bounded by a semaphore, and merge in shard order
"""
import asyncio
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional

import numpy as np

import runtime
from constants import CONCURRENCY, SAMPLING, SUITE, TOLERANCES
from models import validate_suite_row
from models.errors import CarnotError
from models.serialization import dumps_report
from services import linalg
from services.algebra import builtin_group
from services.approximator import (
    DistanceModel,
    assemble_system,
    companion_nullity,
    distance_expansion,
    harmonic_companions,
    in_companion_span,
    solve_approximating,
)
from services.diffop import (
    bracket_generation_rank,
    horizontal_derivative,
    horizontal_fields,
    operator_from_matrix,
    sub_laplacian,
)
from services.domain import Domain
from services.fields import ScalarField
from services.group import (
    GroupElement,
    bch_coords,
    dilate,
    inverse,
    random_rational_element,
    random_rational_lambda,
)
from services.poly import StratifiedPolynomial, left_translate, random_polynomial
from services.taylor import (
    check_taylor_inequality,
    derivative_matrix,
    radius_generator,
    reflection_coefficients,
    taylor_poly,
)
from services.verify import (
    ball_volume_ratio,
    boundary_data_range,
    characteristic_scan,
    decay_exponent,
    manufactured_decay,
    maximum_principle_holds,
    mc_dirichlet,
)

Row = Dict[str, Any]


def _row(criterion: int, check: str, passed: bool, detail: Any = "") -> Row:
    return {"criterion": criterion, "check": check, "passed": bool(passed), "detail": str(detail)}


class AcceptanceSuite:
    """The acceptance battery; `quick` shrinks trial counts and sample sizes for smoke runs"""

    def __init__(self, seed: int, quick: bool = False, workers: Optional[int] = None):
        self.seed = seed
        self.quick = quick
        self.workers = workers or CONCURRENCY["MAX_SHARDS"]
        self.groups = [builtin_group(name) for name in SUITE["GROUPS"]]

    def _size(self, full: int, quick: int) -> int:
        return quick if self.quick else full

    def _rng(self, shard: int) -> np.random.Generator:
        return radius_generator(self.seed, shard)

    # ---------------------------
    # Shards
    # ---------------------------

    def group_law(self) -> List[Row]:
        rng = self._rng(1)
        rows = []
        trials = self._size(SUITE["LAW_TRIALS"], 10)
        for group in self.groups:
            e = GroupElement.identity(group)
            ok = {"associativity": True, "identity": True, "inverse": True, "dilation": True}
            for _ in range(trials):
                p, q, r = (random_rational_element(group, rng) for _ in range(3))
                lam = random_rational_lambda(rng)
                ok["associativity"] &= (p * q) * r == p * (q * r)
                ok["identity"] &= p * e == p and e * p == p
                ok["inverse"] &= (p * inverse(p)).is_identity() and (inverse(p) * p).is_identity()
                ok["dilation"] &= dilate(lam, p * q) == dilate(lam, p) * dilate(lam, q)
            rows.extend(_row(1, f"{name} {group.name}", passed, f"{trials} trials") for name, passed in ok.items())

        h1 = builtin_group("heisenberg1")
        x, y, t, x2, y2, t2 = StratifiedPolynomial.variables(h1, 6)
        law = bch_coords([x, y, t], [x2, y2, t2], h1)
        closed = [x + x2, y + y2, t + t2 + (x * y2 - y * x2) / 2]
        rows.append(_row(1, "closed-form BCH heisenberg1", all(a == b for a, b in zip(law, closed)),
                         ", ".join(str(c) for c in law)))
        return rows

    def vector_fields(self) -> List[Row]:
        rng = self._rng(2)
        rows = []
        trials = self._size(SUITE["FIELD_TRIALS"], 5)
        for group in self.groups:
            fields = horizontal_fields(group)
            graded = True
            for X in fields:
                for c, coeff in enumerate(X.coefficients):
                    layer = group.layer_of[c]
                    graded &= coeff.is_zero() or coeff.is_homogeneous(layer - 1)
                    graded &= not any(coeff.depends_on(v) for v in range(group.N) if group.layer_of[v] >= layer)
            rows.append(_row(2, f"coefficient grading {group.name}", graded))

            invariant = homogeneous = True
            for _ in range(trials):
                P = random_polynomial(group, 3, rng)
                g = random_rational_element(group, rng, bound=2)
                lam = random_rational_lambda(rng)
                i = int(rng.integers(1, group.m + 1))
                j = int(rng.integers(1, group.m + 1))
                invariant &= horizontal_derivative((i,), left_translate(P, g)) == \
                    left_translate(horizontal_derivative((i,), P), g)
                homogeneous &= horizontal_derivative((i,), P.dilate(lam)) == \
                    horizontal_derivative((i,), P).dilate(lam) * lam
                homogeneous &= horizontal_derivative((i, j), P.dilate(lam)) == \
                    horizontal_derivative((i, j), P).dilate(lam) * lam ** 2
            rows.append(_row(2, f"left invariance {group.name}", invariant, f"{trials} trials"))
            rows.append(_row(2, f"degree-1/degree-2 homogeneity {group.name}", homogeneous, f"{trials} trials"))
        return rows

    def bracket_generation(self) -> List[Row]:
        return [_row(3, f"bracket generation {g.name}", bracket_generation_rank(g) == g.N,
                     f"rank {bracket_generation_rank(g)} of {g.N}") for g in self.groups]

    def taylor(self) -> List[Row]:
        rng = self._rng(4)
        rows = []
        top = self._size(4, 3)
        for group in self.groups:
            full_rank = all(linalg.rank(derivative_matrix(group, k)[2]) == len(derivative_matrix(group, k)[1])
                            for k in range(top + 1))
            rows.append(_row(4, f"full column rank k<={top} {group.name}", full_rank))

            k = 2
            P = random_polynomial(group, k + 1, rng)
            g0 = random_rational_element(group, rng, bound=1)
            e = GroupElement.identity(group)
            projection = taylor_poly(P.truncate(k), e, k) == P.truncate(k)
            covariance = taylor_poly(P, g0, k) == left_translate(P, g0).truncate(k)
            rows.append(_row(4, f"projection {group.name}", projection))
            rows.append(_row(4, f"translation covariance {group.name}", covariance))

        exact = True
        for k in range(9):
            c = reflection_coefficients(k)
            exact &= all(sum(ci * Fraction(-1, i) ** j for i, ci in enumerate(c, start=1)) == 1 for j in range(k + 2))
        rows.append(_row(4, "reflection coefficients k<=8", exact))
        rows.append(_row(4, "reflection coefficients k=0", reflection_coefficients(0) == [Fraction(-3), Fraction(4)],
                         reflection_coefficients(0)))
        return rows

    def algorithm(self) -> List[Row]:
        rng = self._rng(5)
        rows = []
        trials = self._size(SUITE["APPROX_TRIALS"], 2)
        orders = SUITE["APPROX_ORDERS"] if not self.quick else (2, 3)
        for name in SUITE["APPROX_GROUPS"]:
            group = builtin_group(name)
            m = group.m
            identity = [[Fraction(int(i == j)) for j in range(m)] for i in range(m)]
            laplacian = sub_laplacian(group)
            for k in orders:
                flat = DistanceModel.flat(group, k)
                domains = [flat] + [
                    distance_expansion(Domain.graph(random_polynomial(group, k, rng, n_terms=2, min_degree=2,
                                                                      exclude=(group.x_m,)), group), k)
                    for _ in range(SUITE["DISTANCE_PERTURBATIONS"])
                ]
                perturbation = random_polynomial(group, 1, rng, n_terms=2, min_degree=1) / 8
                perturbed = [[identity[i][j] + (perturbation if i == j else 0) for j in range(m)] for i in range(m)]
                operators = [laplacian, operator_from_matrix(perturbed, group)]

                certified = True
                failures = []
                for trial in range(trials):
                    d = domains[trial % len(domains)]
                    L = operators[(trial // len(domains)) % len(operators)]
                    f = random_polynomial(group, k - 2, rng)
                    mode = "triangular" if d is flat and L is laplacian else "general"
                    try:
                        result = solve_approximating(L, d, f, k, mode=mode)
                        certified &= result.certified
                    except CarnotError as e:
                        certified = False
                        failures.append(e.name)
                rows.append(_row(5, f"certified solves {group.name} k={k}", certified,
                                 f"{trials} trials" + (f", failures {failures}" if failures else "")))

                system = assemble_system(laplacian, flat, k)
                rows.append(_row(5, f"flat triangularity {group.name} k={k}", not system.off_order_entries()))
                rows.append(_row(5, f"diagonal formula {group.name} k={k}",
                                 system.diagonal() == system.expected_diagonal()))

        h1 = builtin_group("heisenberg1")
        x, y, _ = StratifiedPolynomial.variables(h1)
        worked = solve_approximating(sub_laplacian(h1), DistanceModel.flat(h1, 3), x, 3)
        rows.append(_row(5, "worked instance heisenberg1 k=3 f=x", worked.P == x * y / 2, worked.P))
        return rows

    def companions(self) -> List[Row]:
        group = builtin_group("heisenberg1")
        y = StratifiedPolynomial.variable(group, group.x_m)
        rows = []
        for kappa, expected in ((0, 1), (1, 2), (2, 4)):
            basis = harmonic_companions(group, kappa)
            harmonic = all(
                sum((horizontal_derivative((i, i), y * Q) for i in range(1, group.m + 1)),
                    StratifiedPolynomial.zero(group)).is_zero()
                for Q in basis
            )
            rows.append(_row(6, f"companion dimension kappa={kappa}",
                             len(basis) == expected == companion_nullity(group, kappa),
                             ", ".join(str(Q) for Q in basis)))
            rows.append(_row(6, f"companions harmonic kappa={kappa}", harmonic))

        # solutions with different free coefficients differ by a companion
        laplacian, flat = sub_laplacian(group), DistanceModel.flat(group)
        rng = np.random.default_rng(self.seed)
        f = random_polynomial(group, 2, rng)
        base = solve_approximating(laplacian, flat, f, 4)
        free_keys = assemble_system(laplacian, flat, 4).free_keys()
        for trial in range(SUITE["COMPANION_PAIRS"]):
            free = {key: Fraction(int(rng.integers(-3, 4)), int(rng.integers(1, 3))) for key in free_keys}
            other = solve_approximating(laplacian, flat, f, 4, free_assignment=free)
            rows.append(_row(6, f"companion difference pair {trial}", in_companion_span(base.P - other.P, 3)))
        return rows

    def slopes(self) -> List[Row]:
        h1 = builtin_group("heisenberg1")
        e = GroupElement.identity(h1)
        half_space = Domain.flat(h1)
        n = self._size(SAMPLING["SAMPLES_PER_RADIUS"], 60)
        rows = []

        report = check_taylor_inequality(ScalarField.from_expression("sin(x)", h1), e, 2, n_samples=n,
                                         seed=self.seed, target=3)
        rows.append(_row(7, "taylor slope sin(x) k=2", report.passes(SUITE["SLOPE_TOLERANCE"]), report.slope))

        report = decay_exponent(ScalarField.from_expression("y*x^3", h1), StratifiedPolynomial.zero(h1), half_space,
                                n_samples=n, seed=self.seed, target=4)
        rows.append(_row(7, "decay slope y*x^3", report.passes(SUITE["SLOPE_TOLERANCE"]), report.slope))

        report = decay_exponent(ScalarField.from_expression("y*sin(t)", h1), "y*t", half_space,
                                n_samples=n, seed=self.seed, target=7)
        rows.append(_row(7, "decay slope y*sin(t)", report.passes(SUITE["SLOPE_TOLERANCE_WIDE"]), report.slope))

        for name in ("heisenberg1", "engel"):
            for k in (2, 3):
                report = manufactured_decay(builtin_group(name), k, seed=self.seed, n_samples=n)
                bound = report.target - SUITE["SLOPE_TOLERANCE"]
                rows.append(_row(7, f"manufactured decay {name} k={k}", report.at_least(bound), report.slope))
        return rows

    def monte_carlo(self) -> List[Row]:
        h1 = builtin_group("heisenberg1")
        domain = Domain.flat(h1, radius=1.0)
        paths = self._size(SUITE["MC_PATHS"], 4000)
        dt = SUITE["MC_DT"] if not self.quick else 1e-3
        start = [0.2, 0.3, 0.0]
        rows = []

        estimate = mc_dirichlet(domain, "x*y", None, start, n_paths=paths, dt=dt, seed=self.seed)
        rows.append(_row(8, "half-space cap u=xy", estimate.within(0.06), f"{estimate.mean:.6f} ± {estimate.std_error:.2g}"))
        low, high = boundary_data_range(domain, "x*y", seed=self.seed)
        rows.append(_row(8, "maximum principle u=xy", maximum_principle_holds(estimate, low, high),
                         f"[{low:.4f}, {high:.4f}]"))

        constant = mc_dirichlet(domain, "1", None, start, n_paths=self._size(10_000, 500), dt=dt, seed=self.seed)
        rows.append(_row(8, "constant data", constant.mean == 1.0 and constant.std_error == 0.0, constant.mean))
        return rows

    def geometry(self) -> List[Row]:
        h1 = builtin_group("heisenberg1")
        rows = []
        scan = characteristic_scan(Domain.level_set("x - y*t", h1), seed=self.seed)
        rows.append(_row(9, "phi = x - y*t non-characteristic", scan.min_grad >= 1 - TOLERANCES["FD_DATA"],
                         scan.min_grad))
        scan = characteristic_scan(Domain.level_set("-t", h1), seed=self.seed)
        rows.append(_row(9, "{t > 0} characteristic at e", scan.characteristic, scan.min_grad))

        n = self._size(SAMPLING["VOLUME_SAMPLES"], 100_000)
        tolerance = SUITE["VOLUME_TOLERANCE"] if not self.quick else 0.15
        for group in self.groups:
            report = ball_volume_ratio(group, 1.0, n, seed=self.seed)
            rows.append(_row(9, f"volume ratio {group.name}", report.relative_error <= tolerance,
                             f"{report.ratio:.4g} vs {report.expected:g}"))
        return rows

    def determinism(self) -> List[Row]:
        h1 = builtin_group("heisenberg1")
        field = ScalarField.from_expression("y*x^3", h1)

        def once():
            return dumps_report(decay_exponent(field, "0", Domain.flat(h1), n_samples=50, seed=self.seed).to_dict())

        return [_row(10, "repeated decay report is byte-identical", once() == once())]

    # ---------------------------
    # Runner
    # ---------------------------

    def shards(self) -> List[Callable[[], List[Row]]]:
        return [self.group_law, self.vector_fields, self.bracket_generation, self.taylor, self.algorithm,
                self.companions, self.slopes, self.monte_carlo, self.geometry, self.determinism]

    async def _run_shard(self, semaphore: asyncio.Semaphore, shard: Callable[[], List[Row]]) -> List[Row]:
        async with semaphore:
            runtime.logger.info(f"Suite shard {shard.__name__} started")
            loop = asyncio.get_event_loop()
            try:
                rows = await loop.run_in_executor(None, shard)
            except CarnotError as e:
                runtime.logger.error(f"Suite shard {shard.__name__} failed: {e.name}: {e.message}")
                rows = [_row(0, shard.__name__, False, e.to_record()["error"])]
            except Exception as e:
                runtime.logger.error(f"Suite shard {shard.__name__} crashed: {e}")
                rows = [_row(0, shard.__name__, False, f"{type(e).__name__}: {e}")]
            runtime.logger.info(f"Suite shard {shard.__name__} finished: "
                                f"{sum(r['passed'] for r in rows)}/{len(rows)} passed")
            return rows

    async def run(self) -> Dict[str, Any]:
        semaphore = asyncio.Semaphore(self.workers)
        results = await asyncio.gather(*(self._run_shard(semaphore, shard) for shard in self.shards()))
        rows = [validate_suite_row(row) for shard_rows in results for row in shard_rows]
        return {
            "seed": self.seed,
            "quick": self.quick,
            "rows": rows,
            "passed": all(r["passed"] for r in rows),
        }


def run_suite(seed: int, quick: bool = False, workers: Optional[int] = None) -> Dict[str, Any]:
    return asyncio.run(AcceptanceSuite(seed, quick, workers).run())


def format_table(report: Dict[str, Any]) -> str:
    """One line per check: criterion, verdict, name and detail"""
    lines = []
    for row in report["rows"]:
        mark = "PASS" if row["passed"] else "FAIL"
        detail = f"  ({row['detail']})" if row["detail"] else ""
        lines.append(f"[{row['criterion']:>2}] {mark}  {row['check']}{detail}")
    total = sum(r["passed"] for r in report["rows"])
    lines.append(f"{total}/{len(report['rows'])} checks passed")
    return "\n".join(lines)

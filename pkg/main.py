"""
Main toolkit class that orchestrates all services
Command-line front door: one subcommand per computation, a structured report on stdout
"""
import argparse
import asyncio
import json
import sys
import traceback
from pathlib import Path
from typing import Any, Dict, List, Optional

sys.path.insert(0, str(Path(__file__).resolve().parent / "py_modules"))

import runtime  # noqa: E402
from constants import BARRIER, DEFAULTS, MONTE_CARLO  # noqa: E402
from models import validate_decay_report, validate_mc_estimate  # noqa: E402
from models.errors import CarnotError, UsageError  # noqa: E402
from models.serialization import dumps_report, format_coords, parse_coords, parse_fraction  # noqa: E402
from services.algebra import Stratification, builtin_group, dump_group, load_group_file  # noqa: E402
from services.approximator import (  # noqa: E402
    DistanceModel,
    assemble_system,
    companion_nullity,
    distance_expansion,
    harmonic_companions,
    solve_approximating,
)
from services.cache import ReportFileService  # noqa: E402
from services.diffop import apply_operator, bracket_generation_rank, operator_from_matrix, sub_laplacian  # noqa: E402
from services.domain import Domain  # noqa: E402
from services.fields import ScalarField  # noqa: E402
from services.group import GroupElement, bch_product  # noqa: E402
from services.settings import RunConfig, SettingsService  # noqa: E402
from services.suite import AcceptanceSuite, format_table  # noqa: E402
from services.taylor import check_taylor_inequality, symbolic_jet, taylor_poly  # noqa: E402
from services.verify import barrier_check, characteristic_scan, decay_exponent, mc_dirichlet  # noqa: E402

USAGE_ERRORS = {"UsageError", "ArityMismatch", "ParseError", "NotPolynomial", "UnknownName", "BadWord", "FreeKeyInvalid"}
SUBCOMMANDS = ("group-info", "bch", "apply", "taylor", "approximate", "companions", "verify-decay",
               "verify-barrier", "mc-solve", "char-scan", "suite")
RANDOMIZED = {"verify-decay", "verify-barrier", "mc-solve", "char-scan", "suite"}


class ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgumentError(message)


def _parse_matrix(text: Optional[str], group: Stratification, exact: bool = True) -> Optional[List[List[Any]]]:
    """Rows separated by ';', entries by ','; entries may be polynomial expressions"""
    if not text:
        return None
    rows = [row.split(",") for row in text.split(";")]
    if exact:
        return [[ScalarField.from_expression(entry, group).require_polynomial() for entry in row] for row in rows]
    return [[float(parse_fraction(entry)) for entry in row] for row in rows]


def _require(args, name: str) -> str:
    value = getattr(args, name)
    if value is None:
        raise UsageError(f"{args.command} needs --{name}")
    return value


def _point(group: Stratification, text: Optional[str]) -> GroupElement:
    if not text:
        return GroupElement.identity(group)
    return GroupElement.of(group, parse_coords(text))


class Toolkit:
    """
    Main toolkit class
    Resolves the group, runs one computation and returns its report
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.group: Optional[Stratification] = None
        self.report_service = ReportFileService()

    def _group(self) -> Stratification:
        if self.group is None:
            if self.config.group_file:
                self.group = load_group_file(Path(self.config.group_file))
            else:
                self.group = builtin_group(self.config.group)
            runtime.logger.info(f"Using group {self.group!r}")
        return self.group

    def _domain(self, text: Optional[str], radius: Optional[float] = None) -> Domain:
        return Domain.from_input(text or "flat", self._group(), radius)

    def _distance(self, text: Optional[str], k: int) -> DistanceModel:
        """'flat', 'graph:<h>' or a polynomial distance expression"""
        group = self._group()
        text = (text or "flat").strip()
        if text == "flat":
            return DistanceModel.flat(group, k)
        if text.startswith("graph:"):
            return distance_expansion(Domain.graph(text[6:], group), k)
        return DistanceModel.from_polynomial(ScalarField.from_expression(text, group).require_polynomial(), k)

    def _free(self, text: Optional[str]) -> Optional[Dict]:
        """'zero' or a JSON file of {"monomial": [...], "value": "p/q"} entries"""
        if not text or text == "zero":
            return None
        try:
            with open(text, "r") as f:
                entries = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read free-coefficient file {text}: {e}") from e
        return {tuple(entry["monomial"]): parse_fraction(entry["value"]) for entry in entries}

    # ==================== Algebra and group ====================

    async def group_info(self, args) -> Dict:
        try:
            group = self._group()
            return {
                "group": dump_group(group),
                "coordinates": list(group.coordinate_names),
                "N": group.N,
                "Q": group.Q,
                "step": group.step,
                "m": group.m,
                "bracket_rank": bracket_generation_rank(group),
            }
        except CarnotError as e:
            runtime.logger.error(f"group-info failed: {e.name}: {e.message}")
            return e.to_record()

    async def bch(self, args) -> Dict:
        try:
            group = self._group()
            p, q = _point(group, args.p), _point(group, args.q)
            product = bch_product(p, q)
            return {"p": format_coords(p.coords), "q": format_coords(q.coords), "product": format_coords(product.coords)}
        except CarnotError as e:
            runtime.logger.error(f"bch failed: {e.name}: {e.message}")
            return e.to_record()

    # ==================== Operators and Taylor ====================

    async def apply(self, args) -> Dict:
        try:
            group = self._group()
            P = ScalarField.from_expression(_require(args, "f"), group).require_polynomial()
            A = _parse_matrix(args.A, group)
            L = operator_from_matrix(A, group) if A else sub_laplacian(group)
            result = apply_operator(L, P)
            return {"f": str(P), "operator": L.to_dict(), "result": str(result), "poly": result.to_dict()}
        except CarnotError as e:
            runtime.logger.error(f"apply failed: {e.name}: {e.message}")
            return e.to_record()

    async def taylor(self, args) -> Dict:
        try:
            group = self._group()
            field = ScalarField.from_expression(_require(args, "f"), group)
            g0 = _point(group, args.at)
            if field.polynomial is not None:
                P = taylor_poly(field.polynomial, g0, args.k)
            else:
                P = taylor_poly(symbolic_jet(field, g0, args.k), tolerance=args.tolerance)
            report = {"f": field.text, "at": format_coords(g0.coords), "k": args.k, "P": str(P), "poly": P.to_dict()}
            if args.check:
                decay = check_taylor_inequality(field, g0, args.k, radii=self.config.radii,
                                                seed=self._seed(args), target=args.target)
                report["check"] = validate_decay_report(decay.to_dict())
            return report
        except CarnotError as e:
            runtime.logger.error(f"taylor failed: {e.name}: {e.message}")
            return e.to_record()

    # ==================== Approximating polynomials ====================

    async def approximate(self, args) -> Dict:
        try:
            group = self._group()
            f = ScalarField.from_expression(_require(args, "f"), group).require_polynomial()
            d = self._distance(args.d, args.k)
            A = _parse_matrix(args.A, group)
            L = operator_from_matrix(A, group) if A else sub_laplacian(group)
            result = solve_approximating(L, d, f, args.k, self._free(args.free), mode=args.mode)
            report = {"k": args.k, "mode": args.mode, "f": str(f), "d": d.to_dict(), **result.to_dict()}
            if args.show_system:
                report["system"] = assemble_system(L, d, args.k).to_dict()
            return report
        except CarnotError as e:
            runtime.logger.error(f"approximate failed: {e.name}: {e.message}")
            return e.to_record()

    async def companions(self, args) -> Dict:
        try:
            group = self._group()
            basis = harmonic_companions(group, args.k)
            return {
                "kappa": args.k,
                "dimension": len(basis),
                "nullity": companion_nullity(group, args.k),
                "companions": [str(Q) for Q in basis],
            }
        except CarnotError as e:
            runtime.logger.error(f"companions failed: {e.name}: {e.message}")
            return e.to_record()

    # ==================== Verification ====================

    def _seed(self, args) -> int:
        return args.seed if args.seed is not None else self.config.default_seed

    async def verify_decay(self, args) -> Dict:
        try:
            group = self._group()
            u = ScalarField.from_expression(_require(args, "f"), group)
            report = decay_exponent(u, args.P or "0", self._domain(args.d), radii=self.config.radii,
                                    n_samples=args.samples, seed=self._seed(args), target=args.target)
            return validate_decay_report(report.to_dict())
        except CarnotError as e:
            runtime.logger.error(f"verify-decay failed: {e.name}: {e.message}")
            return e.to_record()

    async def verify_barrier(self, args) -> Dict:
        try:
            group = self._group()
            A = _parse_matrix(args.A, group, exact=False) or [[float(i == j) for j in range(group.m)]
                                                                for i in range(group.m)]
            p0 = [float(c) for c in _point(group, args.p).coords]
            report = barrier_check(self._domain(args.d), A, args.f_bound, p0, args.r1, args.k_max,
                                   seed=self._seed(args), boundary_bound=args.boundary_bound)
            return report.to_dict()
        except CarnotError as e:
            runtime.logger.error(f"verify-barrier failed: {e.name}: {e.message}")
            return e.to_record()

    async def mc_solve(self, args) -> Dict:
        try:
            group = self._group()
            A = _parse_matrix(args.A, group, exact=False)
            estimate = mc_dirichlet(self._domain(args.d, args.radius), args.g, args.f, _point(group, args.p),
                                    n_paths=args.n_paths, dt=args.dt, seed=self._seed(args), A=A,
                                    max_steps=self.config.mc_max_steps)
            return validate_mc_estimate(estimate.to_dict())
        except CarnotError as e:
            runtime.logger.error(f"mc-solve failed: {e.name}: {e.message}")
            return e.to_record()

    async def char_scan(self, args) -> Dict:
        try:
            report = characteristic_scan(self._domain(args.d), n=args.samples, seed=self._seed(args))
            return report.to_dict()
        except CarnotError as e:
            runtime.logger.error(f"char-scan failed: {e.name}: {e.message}")
            return e.to_record()

    async def suite(self, args) -> Dict:
        try:
            suite = AcceptanceSuite(self._seed(args), quick=args.quick, workers=self.config.workers)
            report = await suite.run()
            print(format_table(report), file=sys.stderr)
            return report
        except CarnotError as e:
            runtime.logger.error(f"suite failed: {e.name}: {e.message}")
            return e.to_record()

    async def dispatch(self, args) -> Dict:
        handler = getattr(self, args.command.replace("-", "_"))
        report = await handler(args)
        if self.config.out and "error" not in report:
            await self.report_service.write(Path(self.config.out), report)
        return report


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="carnot-schauder", description="Boundary Schauder machinery on Carnot groups")
    parser.add_argument("command", choices=SUBCOMMANDS)
    parser.add_argument("--group", help="heisenberg1, heisenberg(n), engel, free_step2(m)")
    parser.add_argument("--group-file", help="JSON group definition")
    parser.add_argument("--k", type=int, default=3)
    parser.add_argument("--f", help="expression: scalar field, source term or polynomial")
    parser.add_argument("--g", default="0", help="boundary data expression for mc-solve")
    parser.add_argument("--P", help="comparison polynomial for verify-decay")
    parser.add_argument("--d", help="flat, graph:<h> or a distance polynomial (approximate); flat, h or phi:<expr> (verify)")
    parser.add_argument("--A", help="coefficient matrix, rows separated by ';'")
    parser.add_argument("--free", default="zero", help="zero or a JSON file of free coefficients")
    parser.add_argument("--mode", choices=("triangular", "general"), default="triangular")
    parser.add_argument("--p", help="point as comma-separated rationals")
    parser.add_argument("--q", help="second point for bch")
    parser.add_argument("--at", help="base point for taylor")
    parser.add_argument("--tolerance", type=float, default=1e-6)
    parser.add_argument("--check", action="store_true", help="taylor: also run the decay regression")
    parser.add_argument("--target", type=float)
    parser.add_argument("--show-system", action="store_true")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--samples", type=int)
    parser.add_argument("--n-paths", type=int, default=MONTE_CARLO["DEFAULT_PATHS"])
    parser.add_argument("--dt", type=float, default=MONTE_CARLO["DEFAULT_DT"])
    parser.add_argument("--radius", type=float, default=DEFAULTS["GAUGE_BALL_RADIUS"])
    parser.add_argument("--f-bound", type=float, default=1.0)
    parser.add_argument("--boundary-bound", type=float, default=BARRIER["BOUNDARY_BOUND"])
    parser.add_argument("--r1", type=float, default=0.5)
    parser.add_argument("--k-max", type=int, default=BARRIER["K_MAX"])
    parser.add_argument("--radii", help="comma-separated radii for decay regressions")
    parser.add_argument("--quick", action="store_true", help="suite: reduced sizes")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--out", help="also write the report to this path")
    parser.add_argument("--config", help="settings JSON file")
    parser.add_argument("--verbose", action="store_true")
    parser.add_argument("--quiet", action="store_true")
    return parser


async def _load_config(args) -> RunConfig:
    settings_service = SettingsService(runtime.SETTINGS_DIR, Path(args.config) if args.config else None)
    if args.config and not Path(args.config).exists():
        raise UsageError(f"settings file {args.config} does not exist")
    settings = await settings_service.load()
    if args.command in RANDOMIZED and args.seed is None and "default_seed" not in settings:
        raise UsageError(f"{args.command} needs --seed")
    level = "DEBUG" if args.verbose else "WARNING" if args.quiet else None
    radii = [float(parse_fraction(r)) for r in args.radii.split(",")] if args.radii else None
    return settings_service.run_config(log_level=level, radii=radii, workers=args.workers, group=args.group,
                                       group_file=args.group_file, out=args.out)


def _fail(record: Dict, code: int) -> int:
    print(record["error"], file=sys.stderr)
    for key, value in record.get("context", {}).items():
        print(f"  {key}: {value}", file=sys.stderr)
    return code


def run(argv: Optional[List[str]] = None) -> int:
    """0 on success, 2 on usage errors, 1 on computation errors"""
    try:
        args = build_parser().parse_args(argv)
        config = asyncio.run(_load_config(args))
    except ArgumentError as e:
        return _fail({"error": f"UsageError: {e}"}, 2)
    except CarnotError as e:
        return _fail(e.to_record(), 2 if e.name in USAGE_ERRORS else 1)

    runtime.configure_logging(config.log_level)
    try:
        report = asyncio.run(Toolkit(config).dispatch(args))
    except Exception as e:
        runtime.logger.error(f"{args.command} crashed: {e}")
        runtime.logger.error(traceback.format_exc())
        return _fail({"error": f"ComputationFailed: {e}"}, 1)

    if "error" in report:
        name = report["error"].split(":", 1)[0]
        return _fail(report, 2 if name in USAGE_ERRORS else 1)
    print(dumps_report(report))
    if args.command == "suite" and not report.get("passed", False):
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(run())

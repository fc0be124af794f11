"""
Report validation before emission
"""
from typing import Dict

import runtime


def validate_decay_report(data: Dict) -> Dict:
    """Coerce a decay report to plain JSON types"""
    try:
        validated = {
            "radii": [float(r) for r in data.get("radii", [])],
            "sup_residuals": [float(v) for v in data.get("sup_residuals", [])],
            "slope": None if data.get("slope") is None else float(data["slope"]),
            "samples": int(data.get("samples", 0)),
            "reproduced": bool(data.get("reproduced", False)),
            "target": None if data.get("target") is None else float(data["target"]),
            "label": str(data.get("label", "")),
        }

        if "error" in data:
            validated["error"] = data["error"]

        runtime.logger.debug(
            f"Validated decay report: slope {validated['slope']} over {len(validated['radii'])} radii"
        )
        return validated

    except (TypeError, ValueError) as e:
        runtime.logger.error(f"Failed to validate decay report: {e}")
        return {
            "radii": [],
            "sup_residuals": [],
            "slope": None,
            "samples": 0,
            "reproduced": False,
            "target": None,
            "label": "",
            "error": f"Report validation failed: {str(e)}",
        }


def validate_mc_estimate(data: Dict) -> Dict:
    try:
        validated = {
            "mean": float(data["mean"]),
            "std_error": float(data["std_error"]),
            "n_paths": int(data["n_paths"]),
            "seed": int(data["seed"]),
            "dt": float(data.get("dt", 0.0)),
            "mean_steps": float(data.get("mean_steps", 0.0)),
        }
        if validated["std_error"] < 0 or validated["n_paths"] <= 0:
            raise ValueError("std_error must be nonnegative and n_paths positive")
        return validated
    except (KeyError, TypeError, ValueError) as e:
        runtime.logger.error(f"Failed to validate Monte Carlo estimate: {e}")
        return {"mean": 0.0, "std_error": 0.0, "n_paths": 0, "seed": 0, "error": f"Report validation failed: {str(e)}"}


def validate_suite_row(data: Dict) -> Dict:
    try:
        validated = {
            "criterion": int(data.get("criterion", 0)),
            "check": str(data["check"]),
            "passed": bool(data["passed"]),
            "detail": str(data.get("detail", "")),
        }
        if "error" in data:
            validated["error"] = data["error"]
        return validated
    except (KeyError, TypeError, ValueError) as e:
        runtime.logger.error(f"Failed to validate suite row: {e}")
        return {"criterion": 0, "check": str(data.get("check", "?")), "passed": False, "detail": "",
                "error": f"Report validation failed: {str(e)}"}

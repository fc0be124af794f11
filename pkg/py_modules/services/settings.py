"""
Settings management service
Persistent defaults for runs, overridden by command-line flags
"""
import asyncio
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import runtime
from constants import CONCURRENCY, DEFAULTS, MONTE_CARLO
from models.errors import UsageError
from services.taylor import default_radii

ALLOWED_KEYS = ("log_level", "default_seed", "radii", "mc_max_steps", "workers")


@dataclass
class RunConfig:
    """Effective configuration of one invocation"""
    log_level: str = DEFAULTS["LOG_LEVEL"]
    default_seed: int = DEFAULTS["SEED"]
    radii: List[float] = field(default_factory=default_radii)
    mc_max_steps: int = MONTE_CARLO["MAX_STEPS"]
    workers: int = CONCURRENCY["MAX_SHARDS"]
    group: str = "heisenberg1"
    group_file: Optional[str] = None
    out: Optional[str] = None

    @classmethod
    def from_settings(cls, settings: Dict[str, Any], **overrides) -> "RunConfig":
        """Settings file values first, then non-None overrides"""
        merged = {**settings, **{k: v for k, v in overrides.items() if v is not None}}
        config = cls()
        if "log_level" in merged:
            config.log_level = str(merged["log_level"]).upper()
        if "default_seed" in merged:
            config.default_seed = int(merged["default_seed"])
        if "radii" in merged:
            config.radii = [float(r) for r in merged["radii"]]
        if "mc_max_steps" in merged:
            config.mc_max_steps = int(merged["mc_max_steps"])
        if "workers" in merged:
            config.workers = max(1, int(merged["workers"]))
        for key in ("group", "group_file", "out"):
            if key in merged:
                setattr(config, key, merged[key])
        return config


class SettingsService:
    """Handles all settings operations"""

    def __init__(self, settings_dir: Path, settings_file: Optional[Path] = None):
        self.settings_dir = Path(settings_dir)
        self.settings_file = Path(settings_file) if settings_file else self.settings_dir / "settings.json"
        self.settings: Dict[str, Any] = {}

    @staticmethod
    def check_keys(settings: Dict[str, Any]):
        unknown = sorted(set(settings) - set(ALLOWED_KEYS))
        if unknown:
            raise UsageError(f"unknown settings keys: {', '.join(unknown)}", {"allowed": ", ".join(ALLOWED_KEYS)})

    async def load(self) -> Dict[str, Any]:
        """Load settings; a missing file means defaults, unknown keys are a usage error"""
        if not self.settings_file.exists():
            runtime.logger.debug("No settings file found, using defaults")
            self.settings = {}
            return {}
        try:
            loop = asyncio.get_event_loop()

            def read_file():
                with open(self.settings_file, "r") as f:
                    return f.read()

            content = await loop.run_in_executor(None, read_file)
            settings = json.loads(content)
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read settings file {self.settings_file}: {e}") from e
        if not isinstance(settings, dict):
            raise UsageError(f"settings file {self.settings_file} must hold an object")
        self.check_keys(settings)
        self.settings = settings
        runtime.logger.info(f"Settings loaded from {self.settings_file}: {sorted(settings)}")
        return settings

    async def save(self, settings: Dict[str, Any]) -> bool:
        self.check_keys(settings)
        try:
            self.settings_file.parent.mkdir(parents=True, exist_ok=True)
            loop = asyncio.get_event_loop()
            content = json.dumps(settings, indent=2)

            def write_file():
                with open(self.settings_file, "w") as f:
                    f.write(content)

            await loop.run_in_executor(None, write_file)
            self.settings = settings
            runtime.logger.info(f"Settings saved to {self.settings_file}")
            return True
        except OSError as e:
            runtime.logger.error(f"Failed to save settings: {e}")
            return False

    async def set_value(self, key: str, value: Any) -> bool:
        settings = dict(self.settings)
        settings[key] = value
        return await self.save(settings)

    async def clear_value(self, key: str) -> bool:
        settings = dict(self.settings)
        settings.pop(key, None)
        return await self.save(settings)

    def run_config(self, **overrides) -> RunConfig:
        return RunConfig.from_settings(self.settings, **overrides)

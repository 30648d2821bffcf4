"""
Loading and emitting YAML configs for runs and sweeps
"""
import hashlib
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

import yaml
from pydantic import BaseModel, ValidationError

from conflict_network.config import settings
from conflict_network.models import RunManifest, SimConfig, SweepSpec

logger = logging.getLogger(__name__)

ConfigModel = Union[SimConfig, SweepSpec]


class ConfigError(ValueError):
    """Config file missing, malformed or violating a model rule"""


def _format_validation_error(error: ValidationError) -> str:
    lines = []
    for detail in error.errors():
        field = ".".join(str(part) for part in detail["loc"]) or "<root>"
        if detail["type"] == "extra_forbidden":
            lines.append(f"{field}: unknown key")
        else:
            lines.append(f"{field}: {detail['msg']}")
    return "; ".join(lines)


def parse_overrides(pairs: Iterable[str]) -> Dict[str, Any]:
    """Turn ["delta=0.02", "payoffs.x1=0.3"] into a dotted-key dict with YAML-typed values"""
    overrides: Dict[str, Any] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"Override '{pair}' must look like key=value")
        key, raw = pair.split("=", 1)
        overrides[key.strip()] = yaml.safe_load(raw)
    return overrides


def apply_overrides(document: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Set dotted keys inside a nested mapping"""
    for dotted, value in overrides.items():
        target = document
        parts = dotted.split(".")
        for part in parts[:-1]:
            child = target.get(part)
            if child is None:
                child = target[part] = {}
            if not isinstance(child, dict):
                raise ConfigError(f"Override '{dotted}': '{part}' is not a mapping")
            target = child
        target[parts[-1]] = value
    return document


def _is_manifest(document: Dict[str, Any]) -> bool:
    return "config" in document and "tool_version" in document


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Any]] = None,
    document: Optional[Dict[str, Any]] = None,
) -> ConfigModel:
    """
    Load a run config or sweep spec.

    Args:
        path: YAML file; a manifest file yields its embedded config
        overrides: dotted keys applied before validation
        document: inline mapping used instead of a file

    Returns:
        SimConfig, or SweepSpec when the document has a `grid` section

    Raises:
        ConfigError: missing file, malformed YAML, unknown key or rule violation
    """
    if document is None:
        if path is None:
            raise ConfigError("Either a config path or an inline document is required")
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Config file not found: {path}")
        try:
            document = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Malformed YAML in {path}: {e}") from e
    else:
        document = json.loads(json.dumps(document))

    if not isinstance(document, dict):
        raise ConfigError("Config document must be a mapping")

    if _is_manifest(document):
        try:
            manifest = RunManifest.model_validate(document)
        except ValidationError as e:
            raise ConfigError(f"Invalid manifest: {_format_validation_error(e)}") from e
        document = manifest.config.model_dump(mode="json")

    if overrides:
        document = apply_overrides(document, overrides)

    model = SweepSpec if "grid" in document else SimConfig
    try:
        config = model.model_validate(document)
    except ValidationError as e:
        raise ConfigError(_format_validation_error(e)) from e

    logger.info(f"Loaded {model.__name__}" + (f" from {path}" if path else ""))
    return config


def dump_config(config: BaseModel) -> str:
    """YAML text of a resolved config with every default materialized"""
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False)


def config_digest(config: ConfigModel) -> str:
    """sha256 of the canonical JSON form of a resolved config"""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def build_manifest(config: ConfigModel) -> RunManifest:
    """Fresh manifest for an output directory"""
    return RunManifest(
        kind="sweep" if isinstance(config, SweepSpec) else "run",
        tool_version=settings.TOOL_VERSION,
        config_digest=config_digest(config),
        created_at=datetime.now(timezone.utc),
        config=config,
    )


def dump_manifest(manifest: RunManifest) -> str:
    return yaml.safe_dump(manifest.model_dump(mode="json"), sort_keys=False)

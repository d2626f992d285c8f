"""
Loading experiment configs.

Configs are YAML documents validated into ExperimentConfig. Every parse or
validation problem surfaces as ConfigError so the CLI can exit with code 2.
"""

from __future__ import annotations

import logging
import os
from typing import Any, Optional

import yaml
from pydantic import ValidationError

from conewave.cross_section import CrossSection, build_cross_section, load_potential_samples
from conewave.errors import ConfigError
from conewave.models import ExperimentConfig

logger = logging.getLogger(__name__)


def _format_validation(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        where = ".".join(str(p) for p in err.get("loc", ())) or "<root>"
        parts.append(f"{where}: {err.get('msg')}")
    return "; ".join(parts)


def parse_config(document: Any, base_dir: str = ".") -> ExperimentConfig:
    if not isinstance(document, dict):
        raise ConfigError("config must be a mapping at the top level")
    try:
        config = ExperimentConfig.model_validate(document)
    except ValidationError as exc:
        raise ConfigError(f"invalid config: {_format_validation(exc)}") from exc
    section = config.cross_section
    if section is not None and section.v0_samples_file is not None:
        path = section.v0_samples_file
        if not os.path.isabs(path):
            path = os.path.normpath(os.path.join(base_dir, path))
        config = config.model_copy(
            update={"cross_section": section.model_copy(update={"v0_samples_file": path})}
        )
    return config


def load_config(path: str, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Read and validate a YAML config; `overrides` are applied as top-level and nested updates."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            document = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if overrides and isinstance(document, dict):
        document = _merge(document, overrides)
    config = parse_config(document, os.path.dirname(os.path.abspath(path)))
    logger.info("loaded %s config from %s", config.scenario, path)
    return config


def _prune(overrides: dict) -> dict:
    """Drop unset (None) values and sections left empty by that."""
    pruned = {}
    for key, value in overrides.items():
        if isinstance(value, dict):
            value = _prune(value)
            if not value:
                continue
        elif value is None:
            continue
        pruned[key] = value
    return pruned


def _merge(document: dict, overrides: dict) -> dict:
    merged = dict(document)
    for key, value in _prune(overrides).items():
        if isinstance(value, dict):
            merged[key] = _merge(merged.get(key) or {}, value)
        else:
            merged[key] = value
    return merged


def cross_section_from_config(config: ExperimentConfig) -> CrossSection:
    section = config.cross_section
    if section is None:
        raise ConfigError(f"scenario {config.scenario} needs a cross_section")
    samples = None
    if section.kind == "circle_with_potential":
        if section.v0_samples_file is not None:
            try:
                samples = load_potential_samples(section.v0_samples_file)
            except (OSError, ValueError) as exc:
                raise ConfigError(f"cannot read potential samples {section.v0_samples_file}: {exc}") from exc
        else:
            samples = section.v0_samples
    return build_cross_section(
        section.kind, section.n, section.v0, section.rho0, samples, section.differentiation
    )

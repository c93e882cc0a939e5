"""Experiment driver: configuration, presets, Monte-Carlo runner, complexity."""

from .complexity import ComplexityEstimate, complexity_estimate
from .config import (
    PRESET_NAMES,
    ScenarioConfig,
    config_from_items,
    config_to_items,
    parse_config_text,
    preset,
    serialize_config,
)
from .runner import SEReport, SERow, parse_report, run_experiment, serialize_report

__all__ = [
    "ComplexityEstimate",
    "complexity_estimate",
    "PRESET_NAMES",
    "ScenarioConfig",
    "config_from_items",
    "config_to_items",
    "parse_config_text",
    "preset",
    "serialize_config",
    "SEReport",
    "SERow",
    "parse_report",
    "run_experiment",
    "serialize_report",
]

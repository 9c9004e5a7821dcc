"""Commanded-versus-achieved accuracy statistics.

Accuracy is reported per control mode as the mean absolute error between
commanded and achieved values and the standard deviation of those
absolute errors (population form, since the samples are the whole
measured session, not a draw from a larger one).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import ConfigError


@dataclass(frozen=True)
class AccuracySample:
    """One commanded/achieved pair on a named channel of one mode."""

    mode: int
    channel: str
    commanded: float
    achieved: float

    @property
    def absolute_error(self) -> float:
        return abs(self.commanded - self.achieved)


@dataclass(frozen=True)
class ModeAccuracy:
    mode: int
    count: int
    mae: float
    std: float


def accuracy_report(samples) -> dict[int, ModeAccuracy]:
    """Group samples by mode and compute MAE and error spread for each.

    Raises ConfigError when any mode has fewer than two samples; a
    single pair has no spread to report.
    """
    by_mode: dict[int, list[float]] = {}
    for sample in samples:
        by_mode.setdefault(sample.mode, []).append(sample.absolute_error)
    if not by_mode:
        raise ConfigError("no accuracy samples to report")
    report: dict[int, ModeAccuracy] = {}
    for mode, errors in sorted(by_mode.items()):
        if len(errors) < 2:
            raise ConfigError(
                f"mode {mode} has {len(errors)} sample(s); need at least 2"
            )
        mae = sum(errors) / len(errors)
        variance = sum((e - mae) ** 2 for e in errors) / len(errors)
        report[mode] = ModeAccuracy(
            mode=mode, count=len(errors), mae=mae, std=math.sqrt(variance)
        )
    return report

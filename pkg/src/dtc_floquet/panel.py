# -*- coding: utf-8 -*-
""" Per-qubit time series of <Z_i(t)> with provenance
"""
import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from dtc_floquet.errors import InvalidConfigError

logger = logging.getLogger(__name__)

RAW_TOLERANCE = 0.05


class Stage(str, Enum):
    RAW = "raw"
    MEASUREMENT_CORRECTED = "measurement-corrected"
    FULLY_MITIGATED = "fully-mitigated"


class Observable(str, Enum):
    POLARIZATION = "polarization"
    AUTOCORRELATOR = "autocorrelator"


@dataclass(frozen=True)
class TimeSeriesPanel:
    """Values indexed as values[qubit, t] for t = 0..n_steps"""

    values: np.ndarray
    initial_bits: Tuple[int, ...]
    stage: Stage = Stage.RAW
    observable: Observable = Observable.POLARIZATION
    retained: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise InvalidConfigError(f"Panel values must be 2-D, got {values.shape}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "initial_bits", tuple(int(b) for b in self.initial_bits))
        object.__setattr__(self, "stage", Stage(self.stage))
        object.__setattr__(self, "observable", Observable(self.observable))
        if len(self.initial_bits) != values.shape[0]:
            raise InvalidConfigError(
                f"{len(self.initial_bits)} initial bits for {values.shape[0]} qubits"
            )
        if self.stage == Stage.RAW and np.any(np.abs(values) > 1 + RAW_TOLERANCE):
            raise InvalidConfigError("Raw polarizations outside [-1, 1]")
        if self.retained is not None:
            if self.stage != Stage.FULLY_MITIGATED:
                raise InvalidConfigError("Retained flags belong to fully mitigated panels")
            object.__setattr__(self, "retained", np.asarray(self.retained, dtype=bool))

    @property
    def n_qubits(self) -> int:
        return self.values.shape[0]

    @property
    def n_steps(self) -> int:
        return self.values.shape[1] - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.shape[1])

    @property
    def z_signs(self) -> np.ndarray:
        return 1.0 - 2.0 * np.asarray(self.initial_bits, dtype=float)

    def retained_mask(self) -> np.ndarray:
        if self.retained is None:
            return np.ones(self.n_qubits, dtype=bool)
        return self.retained

    def evolve(self, values: np.ndarray, **changes) -> "TimeSeriesPanel":
        """Copy of the panel carrying new values and updated provenance"""
        return replace(self, values=values, **changes)

    def to_frame(self) -> pd.DataFrame:
        n_qubits, n_times = self.values.shape
        return pd.DataFrame(
            {
                "step": np.tile(np.arange(n_times), n_qubits),
                "qubit": np.repeat(np.arange(n_qubits), n_times),
                "value": self.values.ravel(),
                "stage": self.stage.value,
                "retained": np.repeat(self.retained_mask(), n_times),
            }
        )

    def to_csv(self, filepath: Path) -> None:
        self.to_frame().to_csv(filepath, index=False, float_format="%.12g")
        logger.info("Panel %s written to %s", self.stage.value, filepath)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stage": self.stage.value,
            "observable": self.observable.value,
            "initial_bits": list(self.initial_bits),
            "retained": None if self.retained is None else self.retained.tolist(),
            "values": self.values.tolist(),
            "metadata": self.metadata,
        }

    def to_json(self, filepath: Path) -> None:
        filepath.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TimeSeriesPanel":
        return cls(
            values=np.asarray(data["values"], dtype=float),
            initial_bits=data["initial_bits"],
            stage=Stage(data["stage"]),
            observable=Observable(data.get("observable", Observable.POLARIZATION.value)),
            retained=data.get("retained"),
            metadata=data.get("metadata", {}),
        )

    @classmethod
    def from_json(cls, filepath: Path) -> "TimeSeriesPanel":
        return cls.from_dict(json.loads(filepath.read_text()))


def stack_series(series: Sequence[Sequence[float]], initial_bits: Sequence[int]) -> TimeSeriesPanel:
    """Raw panel built from one sequence per qubit"""
    return TimeSeriesPanel(values=np.asarray(series, dtype=float), initial_bits=tuple(initial_bits))

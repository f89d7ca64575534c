"""In-memory recording container shared by the toolkit."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

EPOCH_S = 20.0  # hypnogram epoch length

STAGES = ("W", "N1", "N2", "N3", "REM")
NREM_STAGES = ("N2", "N3")


@dataclass
class EegRecording:
    samples: np.ndarray          # microvolts
    fs: float                    # Hz
    label: str = "EEG"
    start_time: float = 0.0      # unix seconds, 0 when unknown
    hypnogram: Optional[list] = None  # one stage string per 20 s epoch

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.fs

    def stage_mask(self, stages) -> np.ndarray:
        """Boolean per-sample mask of the given hypnogram stages."""
        mask = np.zeros(len(self.samples), dtype=bool)
        if not self.hypnogram:
            return mask
        epoch_n = int(round(EPOCH_S * self.fs))
        for i, stage in enumerate(self.hypnogram):
            if stage in stages:
                mask[i * epoch_n:(i + 1) * epoch_n] = True
        return mask

    def nrem_mask(self) -> np.ndarray:
        return self.stage_mask(NREM_STAGES)

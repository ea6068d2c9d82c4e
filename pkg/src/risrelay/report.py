"""Result containers shared by the iterative optimizers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class SolveReport:
    """Outcome of one optimizer run (phase loop, alternating or joint)."""

    status: str                      # converged | max-outer | infeasible
    objective: float                 # criterion value at the returned point
    near_rate: float
    far_rate: float
    objective_trace: list = field(default_factory=list)   # per outer iteration
    outer_iterations: int = 0
    inner_iterations: int = 0
    conic_solves: int = 0
    penalty_residual: float = np.nan   # max_t (nuclear - spectral) at the end
    recon_error: float = np.nan        # rank-one extraction relative error
    kkt_stationarity: float = np.nan
    wall_time_s: float = 0.0
    split: Optional[object] = None     # PowerSplit
    phases: Optional[object] = None    # PhaseConfig
    W1: Optional[np.ndarray] = None
    W2: Optional[np.ndarray] = None
    degraded: bool = False
    notes: list = field(default_factory=list)

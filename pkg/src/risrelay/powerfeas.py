"""Feasible power-allocation region and exhaustive grid search.

With the RIS phases held fixed, the only free variables are alpha_n (AP
power share of the near user) and, for the full-NOMA protocol, beta_d
(relay power share of the far user).  The QoS targets carve a box out of
[0, 1/2]^2 whose edges have closed forms; the search enumerates that box
on a kappa-spaced grid and keeps the best candidate under the requested
criterion.  Ties break toward the smallest alpha_n, then smallest beta_d.

Max-min runs drop the QoS constraints entirely, so the search box is the
full [0, 1/2]^2 (or [0, 1/2] for hybrid relaying).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ratemodel import (
    FULL,
    HYBRID,
    EffectiveGains,
    PhaseConfig,
    PowerSplit,
    ProtocolRates,
    canon_protocol,
    effective_gains,
    min_sinr_target,
    rates_from_effective_gains,
    rates_from_gains,
)
from .scenario import ChannelRealization, ScenarioConfig

_TINY = 1e-300


def alpha_bounds(gains: EffectiveGains, gamma_min_n: float, gamma_min_d: float):
    """[alpha_n lower, upper] from the relay's two decode requirements.

    The relay must decode the near signal (alpha_n * G_ar >= gamma_n) and,
    treating it as interference, the far signal  — giving
    alpha_n <= (G_ar - gamma_d) / (G_ar (gamma_d + 1)).  An empty interval
    (lo > hi) means the stage is infeasible; G_ar == 0 is always infeasible.
    """
    g_ar = gains.ap_relay
    if g_ar <= _TINY:
        return np.inf, -np.inf
    lo = gamma_min_n / g_ar
    hi = min(0.5, (g_ar - gamma_min_d) / (g_ar * (gamma_min_d + 1.0)))
    return lo, hi


def beta_bounds(alpha_n, gains: EffectiveGains, gamma_min_n: float, gamma_min_d: float):
    """[beta_d lower, upper] for each alpha_n (scalar or array).

    Lower edge: the far user's MRC target net of its stage-1 SINR.  Upper
    edge: the largest far-user share that still lets the near user reach
    gamma_n by MRC; +inf (clamped to 1/2) once stage 1 alone serves the
    near user.
    """
    an = np.asarray(alpha_n, dtype=float)
    g_ad, g_rn, g_rd = gains.ap_far, gains.relay_near, gains.relay_far

    residual_d = gamma_min_d - (1.0 - an) * g_ad / (an * g_ad + 1.0)
    if g_rd <= _TINY:
        lo = np.where(residual_d <= 0.0, 0.0, np.inf)
    else:
        lo = np.maximum(0.0, residual_d / g_rd)

    g = gamma_min_n - an * gains.ap_near   # target left for stage 2
    if g_rn <= _TINY:
        hi = np.where(g <= 0.0, 0.5, -np.inf)
    else:
        with np.errstate(divide="ignore"):
            raw = (g_rn - g) / ((g + 1.0) * g_rn)
        hi = np.minimum(0.5, np.where(g + 1.0 <= 0.0, np.inf, raw))
    return lo, hi


@dataclass
class FeasibleRegion:
    """Theorem-style feasibility summary at fixed phases."""

    alpha_min: float
    alpha_max: float
    gamma_min_n: float
    gamma_min_d: float
    gains: EffectiveGains
    feasible: bool

    def beta_interval(self, alpha_n):
        return beta_bounds(alpha_n, self.gains, self.gamma_min_n, self.gamma_min_d)


def feasible_region(
    gains: EffectiveGains, gamma_min_n: float, gamma_min_d: float, probe: int = 2048
) -> FeasibleRegion:
    """Evaluate both feasibility conditions; condition 2 is probed on a fine
    alpha grid because the beta interval depends on alpha."""
    lo, hi = alpha_bounds(gains, gamma_min_n, gamma_min_d)
    cond1 = lo <= hi
    feasible = False
    if cond1:
        a = np.linspace(max(lo, 0.0), min(hi, 0.5), probe)
        b_lo, b_hi = beta_bounds(a, gains, gamma_min_n, gamma_min_d)
        feasible = bool(np.any(b_lo <= b_hi))
    return FeasibleRegion(
        alpha_min=float(lo), alpha_max=float(hi),
        gamma_min_n=gamma_min_n, gamma_min_d=gamma_min_d,
        gains=gains, feasible=feasible,
    )


@dataclass
class GridSearchResult:
    feasible: bool
    split: Optional[PowerSplit]
    objective: float
    rates: Optional[ProtocolRates]
    n_candidates: int


def _grid_points(lo: float, hi: float, kappa: float) -> np.ndarray:
    """kappa-spaced points of the global lattice inside [lo, hi], plus the
    interval endpoints so narrow intervals still yield a candidate."""
    lo = max(lo, 0.0)
    hi = min(hi, 0.5)
    if lo > hi:
        return np.empty(0)
    k0 = int(np.ceil(lo / kappa - 1e-9))
    k1 = int(np.floor(hi / kappa + 1e-9))
    pts = kappa * np.arange(k0, k1 + 1) if k1 >= k0 else np.empty(0)
    pts = np.unique(np.concatenate([pts, [lo, hi]]))
    return pts[(pts >= lo - 1e-15) & (pts <= hi + 1e-15)]


def grid_search(
    channels: ChannelRealization,
    phases: PhaseConfig,
    config: ScenarioConfig,
    protocol: str,
    criterion: str = "sum",
) -> GridSearchResult:
    """Exhaustive power-split search at fixed phases.

    criterion: "sum" maximizes the sum rate subject to both QoS targets;
    "min" maximizes the worse user's rate with QoS dropped.
    """
    protocol = canon_protocol(protocol)
    if criterion not in ("sum", "min"):
        raise ValueError(f"unknown criterion {criterion!r}")
    gains = effective_gains(channels, phases, config)
    kappa = config.grid_step_kappa
    gam_n = min_sinr_target(config.R_min_n)
    gam_d = min_sinr_target(config.R_min_d)

    if criterion == "min":
        a_pts = _grid_points(0.0, 0.5, kappa)
        if protocol == HYBRID:
            b_sets = [np.array([0.5])]
        else:
            b_sets = [_grid_points(0.0, 0.5, kappa)] * len(a_pts)
    elif protocol == HYBRID:
        a_pts = _hybrid_feasible_alphas(gains, gam_n, gam_d, kappa)
        b_sets = [np.array([0.5])] * len(a_pts)
    else:
        lo, hi = alpha_bounds(gains, gam_n, gam_d)
        a_pts = _grid_points(lo, hi, kappa)
        b_lo, b_hi = beta_bounds(a_pts, gains, gam_n, gam_d)
        b_sets = [_grid_points(lo_i, hi_i, kappa) for lo_i, hi_i in zip(b_lo, b_hi)]

    best_val = -np.inf
    best: Optional[tuple] = None
    n_cand = 0
    for a, b_pts in zip(a_pts, b_sets):
        if b_pts.size == 0:
            continue
        n_cand += b_pts.size
        near, far = rates_from_gains(gains, a, b_pts, protocol)
        vals = near + far if criterion == "sum" else np.minimum(near, far)
        j = int(np.argmax(vals))           # first max -> smallest beta_d
        if vals[j] > best_val:             # strict -> smallest alpha_n on ties
            best_val = float(vals[j])
            best = (float(a), float(b_pts[j]))

    if best is None:
        return GridSearchResult(False, None, np.nan, None, 0)
    split = PowerSplit(alpha_n=best[0], beta_d=best[1])
    r = rates_from_effective_gains(gains, split, protocol)
    return GridSearchResult(True, split, best_val, r, n_cand)


def _hybrid_feasible_alphas(
    gains: EffectiveGains, gam_n: float, gam_d: float, kappa: float
) -> np.ndarray:
    """One-dimensional feasible set for hybrid relaying, by direct evaluation
    of the three QoS requirements (near stage-1, relay decode, far MRC)."""
    a = _grid_points(0.0, 0.5, kappa)
    ad = 1.0 - a
    ok_near = a * gains.ap_near >= gam_n
    ok_relay = ad * gains.ap_relay / (a * gains.ap_relay + 1.0) >= gam_d
    ok_far = ad * gains.ap_far / (a * gains.ap_far + 1.0) + gains.relay_far >= gam_d
    return a[ok_near & ok_relay & ok_far]

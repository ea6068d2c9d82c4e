"""SINR and achievable-rate expressions for both relaying protocols.

Transmission runs in two half-slots: the AP broadcasts a two-user NOMA
superposition (stage 1), then the decode-and-forward relay retransmits
(stage 2).  Under the "hybrid" protocol the relay forwards only the far
user's signal at full power; under "full" it sends a fresh NOMA
superposition for both users.  Receivers maximal-ratio-combine their two
stage observations, and each final rate is capped by the relay's own
decode rate.

Everything here is a pure function of effective channel gains, so the
power-allocation grid search can broadcast over numpy arrays of candidate
coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import ChannelRealization, ScenarioConfig

HYBRID = "hybrid"
FULL = "full"

_ALIASES = {"h": HYBRID, "hybrid": HYBRID, "f": FULL, "full": FULL}


def canon_protocol(protocol: str) -> str:
    try:
        return _ALIASES[protocol.lower()]
    except KeyError:
        raise ValueError(f"unknown protocol {protocol!r}; use 'hybrid' or 'full'")


@dataclass
class PhaseConfig:
    """Per-stage RIS phase angles in radians, stored as M-vectors."""

    theta1: np.ndarray
    theta2: np.ndarray

    def __post_init__(self):
        self.theta1 = np.mod(np.asarray(self.theta1, dtype=float), 2.0 * np.pi)
        self.theta2 = np.mod(np.asarray(self.theta2, dtype=float), 2.0 * np.pi)

    @property
    def v1(self) -> np.ndarray:
        return np.exp(1j * self.theta1)

    @property
    def v2(self) -> np.ndarray:
        return np.exp(1j * self.theta2)

    @property
    def w1(self) -> np.ndarray:
        """Augmented stage-1 vector [v1, 1] pairing with the stacked cascades."""
        return np.append(self.v1, 1.0 + 0.0j)

    @property
    def w2(self) -> np.ndarray:
        return np.append(self.v2, 1.0 + 0.0j)


def lift(w: np.ndarray) -> np.ndarray:
    """Rank-one PSD lift W = w^H w of a row vector; unit diagonal for unit-modulus w."""
    return np.outer(np.conj(w), w)


@dataclass
class PowerSplit:
    """NOMA power-allocation coefficients at the AP (alpha) and relay (beta)."""

    alpha_n: float
    beta_d: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.alpha_n <= 0.5 + 1e-12:
            raise ValueError(f"alpha_n={self.alpha_n} outside [0, 1/2]")
        if not 0.0 <= self.beta_d <= 0.5 + 1e-12:
            raise ValueError(f"beta_d={self.beta_d} outside [0, 1/2]")

    @property
    def alpha_d(self) -> float:
        return 1.0 - self.alpha_n

    @property
    def beta_n(self) -> float:
        return 1.0 - self.beta_d


@dataclass
class EffectiveGains:
    """Power-normalized composite gains P * |direct + cascade|^2 / sigma^2."""

    ap_relay: float   # AP -> relay, stage 1
    ap_near: float    # AP -> near user, stage 1
    ap_far: float     # AP -> far user, stage 1 (no direct link)
    relay_near: float  # relay -> near user, stage 2
    relay_far: float   # relay -> far user, stage 2


def effective_gains(
    channels: ChannelRealization, phases: PhaseConfig, config: ScenarioConfig
) -> EffectiveGains:
    v1, v2 = phases.v1, phases.v2
    c = channels

    def g(link: str, v: np.ndarray, power: float, noise: float) -> float:
        return power * abs(c.composite(link, v)) ** 2 / noise

    return EffectiveGains(
        ap_relay=g("AR", v1, config.P_a, config.noise_r),
        ap_near=g("An", v1, config.P_a, config.noise_n),
        ap_far=g("Ad", v1, config.P_a, config.noise_d),
        relay_near=g("Rn", v2, config.P_r, config.noise_n),
        relay_far=g("Rd", v2, config.P_r, config.noise_d),
    )


def stage1_sinrs(gains: EffectiveGains, alpha_n):
    """Broadcast-stage SINRs; `alpha_n` may be a scalar or numpy array.

    Returns a dict with keys: near_decodes_far (SIC step at the near user),
    near_own, far_own, relay_decodes_far, relay_decodes_near.
    """
    an = np.asarray(alpha_n, dtype=float)
    ad = 1.0 - an
    g = gains
    return {
        "near_decodes_far": ad * g.ap_near / (an * g.ap_near + 1.0),
        "near_own": an * g.ap_near,
        "far_own": ad * g.ap_far / (an * g.ap_far + 1.0),
        "relay_decodes_far": ad * g.ap_relay / (an * g.ap_relay + 1.0),
        "relay_decodes_near": an * g.ap_relay,
    }


def stage2_sinrs(gains: EffectiveGains, beta_d, protocol: str):
    """Relaying-stage SINRs.  For the hybrid protocol beta_d is ignored
    (the relay spends its whole budget on the far user)."""
    protocol = canon_protocol(protocol)
    g = gains
    if protocol == HYBRID:
        return {"far_own": np.asarray(g.relay_far, dtype=float)}
    bd = np.asarray(beta_d, dtype=float)
    bn = 1.0 - bd
    return {
        "far_decodes_near": bn * g.relay_far / (bd * g.relay_far + 1.0),
        "far_own": bd * g.relay_far,
        "near_own": bn * g.relay_near / (bd * g.relay_near + 1.0),
    }


def half_rate(sinr):
    """Half-slot spectral efficiency 0.5 * log2(1 + SINR)."""
    return 0.5 * np.log2(1.0 + np.asarray(sinr, dtype=float))


@dataclass
class ProtocolRates:
    """Final per-user rates plus the intermediate quantities they came from."""

    protocol: str
    near_rate: float
    far_rate: float
    relay_decode_near: float
    relay_decode_far: float
    near_mrc: float
    far_mrc: float

    @property
    def sum_rate(self) -> float:
        return self.near_rate + self.far_rate

    @property
    def min_rate(self) -> float:
        return min(self.near_rate, self.far_rate)


def rates_from_gains(gains: EffectiveGains, alpha_n, beta_d, protocol: str):
    """(near_rate, far_rate) with numpy broadcasting over alpha_n/beta_d grids."""
    protocol = canon_protocol(protocol)
    s1 = stage1_sinrs(gains, alpha_n)
    s2 = stage2_sinrs(gains, beta_d, protocol)
    r_rd = half_rate(s1["relay_decodes_far"])
    far_mrc = half_rate(s1["far_own"] + s2["far_own"])
    far = np.minimum(r_rd, far_mrc)
    if protocol == HYBRID:
        near = half_rate(s1["near_own"])
    else:
        r_rn = half_rate(s1["relay_decodes_near"])
        near_mrc = half_rate(s1["near_own"] + s2["near_own"])
        near = np.minimum(r_rn, near_mrc)
    return near, far


def rates(
    channels: ChannelRealization,
    phases: PhaseConfig,
    split: PowerSplit,
    protocol: str,
    config: ScenarioConfig,
) -> ProtocolRates:
    protocol = canon_protocol(protocol)
    gains = effective_gains(channels, phases, config)
    return rates_from_effective_gains(gains, split, protocol)


def rates_from_effective_gains(
    gains: EffectiveGains, split: PowerSplit, protocol: str
) -> ProtocolRates:
    protocol = canon_protocol(protocol)
    s1 = stage1_sinrs(gains, split.alpha_n)
    s2 = stage2_sinrs(gains, split.beta_d, protocol)
    r_rn = float(half_rate(s1["relay_decodes_near"]))
    r_rd = float(half_rate(s1["relay_decodes_far"]))
    far_mrc = float(half_rate(s1["far_own"] + s2["far_own"]))
    if protocol == HYBRID:
        near_mrc = float(half_rate(s1["near_own"]))
        near = near_mrc
    else:
        near_mrc = float(half_rate(s1["near_own"] + s2["near_own"]))
        near = min(r_rn, near_mrc)
    far = min(r_rd, far_mrc)
    return ProtocolRates(
        protocol=protocol,
        near_rate=near,
        far_rate=far,
        relay_decode_near=r_rn,
        relay_decode_far=r_rd,
        near_mrc=near_mrc,
        far_mrc=far_mrc,
    )


def min_sinr_target(r_min: float) -> float:
    """SINR needed over a half slot to hit rate r_min: 2**(2 r_min) - 1."""
    return 2.0 ** (2.0 * r_min) - 1.0


@dataclass
class QosReport:
    satisfied: bool
    slack_near: float
    slack_far: float
    gamma_min_near: float
    gamma_min_far: float


def qos_satisfied(r: ProtocolRates, config: ScenarioConfig) -> QosReport:
    slack_n = r.near_rate - config.R_min_n
    slack_d = r.far_rate - config.R_min_d
    return QosReport(
        satisfied=bool(slack_n >= 0.0 and slack_d >= 0.0),
        slack_near=float(slack_n),
        slack_far=float(slack_d),
        gamma_min_near=min_sinr_target(config.R_min_n),
        gamma_min_far=min_sinr_target(config.R_min_d),
    )

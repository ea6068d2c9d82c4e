"""Scenario configuration and stochastic channel synthesis.

One `ScenarioConfig` describes the full downlink deployment: an access point
(AP) serving a near user over a direct link and a far user whose direct link
is blocked, helped by a passive reflecting surface (RIS) with M elements and
an active decode-and-forward relay.  `synthesize` draws one Monte Carlo
realization of every channel segment plus the cascaded per-element vectors
used by the optimizers.

Conventions
-----------
* All quantities are stored in linear units (watts, linear gains).  Convert
  from dB once, at config creation (`db2lin`, `dbm2watt` helpers).
* Distances are 3-D Euclidean; the RIS sits at z = 1.5 m by default, all
  other nodes on the ground.
* Direct (scalar) links are Rayleigh; RIS-segment links are Rician whose
  line-of-sight part is a deterministic phase ramp from a uniform linear
  array with half-wavelength spacing along x.  The array geometry is a
  stand-in: it is reproducible and geometry-consistent, nothing more.
* Trial i of a batch uses the stream seeded by SeedSequence([rng_seed, i]).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

Vec3 = tuple[float, float, float]


def db2lin(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def dbm2watt(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


@dataclass
class ScenarioConfig:
    """Deployment geometry, power/QoS targets and solver knobs.

    Defaults reproduce the reference desk-scale setup: AP at the origin,
    RIS and relay at x = 32 m, users randomly dropped in 2 m disks around
    (20, 30, 0) and (40, 30, 0), 20 dBm transmit powers, -90 dBm noise.
    """

    ap_pos: Vec3 = (0.0, 0.0, 0.0)
    ris_pos: Vec3 = (32.0, 0.0, 1.5)
    relay_pos: Vec3 = (32.0, 0.0, 0.0)
    user_n_center: Vec3 = (20.0, 30.0, 0.0)
    user_d_center: Vec3 = (40.0, 30.0, 0.0)
    user_radius: float = 2.0

    M: int = 30
    P_a: float = dbm2watt(20.0)
    P_r: float = dbm2watt(20.0)
    sigma2: float = dbm2watt(-90.0)
    # Optional per-receiver overrides; None means "use sigma2".
    sigma2_n: Optional[float] = None
    sigma2_d: Optional[float] = None
    sigma2_r: Optional[float] = None

    R_min_n: float = 0.4
    R_min_d: float = 0.4

    rho0: float = db2lin(-30.0)
    alpha_direct: float = 3.5
    alpha_ris: float = 2.2
    K_rician: float = db2lin(3.0)

    # Penalty / convergence knobs.  penalty_eta0 weights the rank-one
    # penalty as 1/eta; it starts small-pressure and the schedule
    # eta <- c * eta tightens it each outer round.
    penalty_eta0: float = 4.0
    penalty_scale_c: float = 0.5
    eps_violation: float = 1e-7
    eps_objective: float = 1e-3
    r_max_inner: int = 30
    grid_step_kappa: float = 1e-3

    rng_seed: int = 0

    def __post_init__(self):
        if min(self.P_a, self.P_r, self.sigma2, self.rho0) <= 0.0:
            raise ValueError("powers, sigma2 and rho0 must be strictly positive")
        for s in (self.sigma2_n, self.sigma2_d, self.sigma2_r):
            if s is not None and s <= 0.0:
                raise ValueError("per-receiver noise overrides must be positive")
        if not 0.0 < self.penalty_scale_c < 1.0:
            raise ValueError("penalty_scale_c must lie in (0, 1)")
        if not 0.0 < self.grid_step_kappa <= 0.5:
            raise ValueError("grid_step_kappa must lie in (0, 0.5]")
        if self.M < 1:
            raise ValueError("M must be at least 1")
        if self.user_radius < 0.0:
            raise ValueError("user_radius must be nonnegative")
        if self.K_rician < 0.0:
            raise ValueError("K_rician must be nonnegative")

    @property
    def noise_n(self) -> float:
        return self.sigma2 if self.sigma2_n is None else self.sigma2_n

    @property
    def noise_d(self) -> float:
        return self.sigma2 if self.sigma2_d is None else self.sigma2_d

    @property
    def noise_r(self) -> float:
        return self.sigma2 if self.sigma2_r is None else self.sigma2_r

    def replace(self, **kwargs) -> "ScenarioConfig":
        d = asdict(self)
        d.update(kwargs)
        for key in ("ap_pos", "ris_pos", "relay_pos", "user_n_center", "user_d_center"):
            d[key] = tuple(d[key])
        return ScenarioConfig(**d)

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, path) -> "ScenarioConfig":
        with open(path) as fh:
            d = json.load(fh)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        for key in ("ap_pos", "ris_pos", "relay_pos", "user_n_center", "user_d_center"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def trial_rng(master_seed: int, *indices: int) -> np.random.Generator:
    """RNG stream for one trial: seeded by SeedSequence([master_seed, *indices])."""
    return np.random.default_rng(np.random.SeedSequence([master_seed, *indices]))


@dataclass
class ChannelRealization:
    """One draw of all channel segments plus derived cascade vectors.

    Scalar direct links: r_An (AP to near user), r_AR (AP to relay),
    r_Rn / r_Rd (relay to users); r_Ad is identically 0 (blocked).
    M-vectors: G_AI (AP to RIS), G_RI (relay to RIS), h_IR (RIS to relay),
    h_In / h_Id (RIS to users).

    Cascades: Q_i[m] = conj(h_i[m]) * G[m], and Z_i stacks [Q_i; r_i] so
    that for w = [v, 1] with v the per-element phase factors,
    w @ Z_i == r_i + h_i^H diag(v) G exactly.
    """

    M: int
    user_n_pos: np.ndarray
    user_d_pos: np.ndarray

    r_An: complex
    r_AR: complex
    r_Rn: complex
    r_Rd: complex
    r_Ad: complex

    G_AI: np.ndarray
    G_RI: np.ndarray
    h_IR: np.ndarray
    h_In: np.ndarray
    h_Id: np.ndarray

    Q_AR: np.ndarray = field(init=False)
    Q_An: np.ndarray = field(init=False)
    Q_Ad: np.ndarray = field(init=False)
    Q_Rn: np.ndarray = field(init=False)
    Q_Rd: np.ndarray = field(init=False)

    Z_AR: np.ndarray = field(init=False)
    Z_An: np.ndarray = field(init=False)
    Z_Ad: np.ndarray = field(init=False)
    Z_Rn: np.ndarray = field(init=False)
    Z_Rd: np.ndarray = field(init=False)

    def __post_init__(self):
        self.Q_AR = np.conj(self.h_IR) * self.G_AI
        self.Q_An = np.conj(self.h_In) * self.G_AI
        self.Q_Ad = np.conj(self.h_Id) * self.G_AI
        self.Q_Rn = np.conj(self.h_In) * self.G_RI
        self.Q_Rd = np.conj(self.h_Id) * self.G_RI
        self.Z_AR = np.append(self.Q_AR, self.r_AR)
        self.Z_An = np.append(self.Q_An, self.r_An)
        self.Z_Ad = np.append(self.Q_Ad, self.r_Ad)
        self.Z_Rn = np.append(self.Q_Rn, self.r_Rn)
        self.Z_Rd = np.append(self.Q_Rd, self.r_Rd)

    def composite(self, which: str, v: np.ndarray) -> complex:
        """Direct-plus-reflected channel r + h^H diag(v) G for one link."""
        z = getattr(self, "Z_" + which)
        return complex(np.sum(v * z[:-1]) + z[-1])

    def zero_ris(self) -> "ChannelRealization":
        """Copy with every RIS segment nulled (relay-only baseline)."""
        zeros = np.zeros(self.M, dtype=complex)
        return ChannelRealization(
            M=self.M, user_n_pos=self.user_n_pos, user_d_pos=self.user_d_pos,
            r_An=self.r_An, r_AR=self.r_AR, r_Rn=self.r_Rn, r_Rd=self.r_Rd,
            r_Ad=self.r_Ad, G_AI=zeros, G_RI=zeros.copy(), h_IR=zeros.copy(),
            h_In=zeros.copy(), h_Id=zeros.copy(),
        )


def path_loss(d: float, alpha_exp: float, rho0: float) -> float:
    """Distance-dependent power gain rho0 * d**(-alpha_exp); valid for d >= 1 m."""
    if d < 1.0:
        raise ValueError(f"path loss model invalid below 1 m reference (d={d})")
    return rho0 * d ** (-alpha_exp)


def sample_rayleigh(rng: np.random.Generator, gain: float) -> complex:
    """Circularly-symmetric complex Gaussian scalar with E|h|^2 = gain."""
    if gain < 0.0:
        raise ValueError("gain must be nonnegative")
    s = np.sqrt(gain / 2.0)
    re, im = rng.standard_normal(2)
    return complex(s * re, s * im)


_K_CAP = 1e12


def sample_rician(
    rng: np.random.Generator, K: float, gain: float, los_component: np.ndarray
) -> np.ndarray:
    """Rician M-vector: sqrt(gain) * (sqrt(K/(K+1)) * los + sqrt(1/(K+1)) * scatter).

    Total per-entry power E|h_m|^2 equals `gain` for every K; `los_component`
    must have unit per-entry modulus.
    """
    K = min(K, _K_CAP)
    M = los_component.shape[0]
    scatter = (rng.standard_normal(M) + 1j * rng.standard_normal(M)) / np.sqrt(2.0)
    return np.sqrt(gain) * (
        np.sqrt(K / (K + 1.0)) * los_component + np.sqrt(1.0 / (K + 1.0)) * scatter
    )


def ula_steering(ris_pos: Sequence[float], node_pos: Sequence[float], M: int) -> np.ndarray:
    """Unit-modulus phase ramp of a half-wavelength ULA along x toward `node_pos`."""
    u = np.asarray(node_pos, dtype=float) - np.asarray(ris_pos, dtype=float)
    cos_psi = u[0] / np.linalg.norm(u)
    return np.exp(1j * np.pi * cos_psi * np.arange(M))


def _dist(a: Sequence[float], b: Sequence[float]) -> float:
    return float(np.linalg.norm(np.asarray(a, float) - np.asarray(b, float)))


def _disk_point(rng: np.random.Generator, center: Sequence[float], radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.uniform())
    phi = rng.uniform(0.0, 2.0 * np.pi)
    c = np.asarray(center, dtype=float)
    return c + np.array([r * np.cos(phi), r * np.sin(phi), 0.0])


def synthesize(config: ScenarioConfig, rng: np.random.Generator) -> ChannelRealization:
    """Draw one complete channel realization.

    Draw order is fixed (positions, direct links, RIS segments) so a given
    generator state always yields a bit-identical realization.
    """
    pos_n = _disk_point(rng, config.user_n_center, config.user_radius)
    pos_d = _disk_point(rng, config.user_d_center, config.user_radius)

    a1, a2, rho0 = config.alpha_direct, config.alpha_ris, config.rho0

    r_An = sample_rayleigh(rng, path_loss(_dist(config.ap_pos, pos_n), a1, rho0))
    r_AR = sample_rayleigh(rng, path_loss(_dist(config.ap_pos, config.relay_pos), a1, rho0))
    r_Rn = sample_rayleigh(rng, path_loss(_dist(config.relay_pos, pos_n), a1, rho0))
    r_Rd = sample_rayleigh(rng, path_loss(_dist(config.relay_pos, pos_d), a1, rho0))

    M, K = config.M, config.K_rician
    ris = config.ris_pos

    def ris_link(node_pos):
        g = path_loss(_dist(ris, node_pos), a2, rho0)
        return sample_rician(rng, K, g, ula_steering(ris, node_pos, M))

    G_AI = ris_link(config.ap_pos)
    G_RI = ris_link(config.relay_pos)
    h_IR = ris_link(config.relay_pos)
    h_In = ris_link(pos_n)
    h_Id = ris_link(pos_d)

    return ChannelRealization(
        M=M, user_n_pos=pos_n, user_d_pos=pos_d,
        r_An=r_An, r_AR=r_AR, r_Rn=r_Rn, r_Rd=r_Rd, r_Ad=0.0 + 0.0j,
        G_AI=G_AI, G_RI=G_RI, h_IR=h_IR, h_In=h_In, h_Id=h_Id,
    )

"""Scenario geometry and per-coherence-block channel realizations.

Three link types: device-AP direct (Rayleigh), device-IRS (Rician with
line-of-sight steering component), IRS-AP (deterministic rank-1
line-of-sight, never materialized as a matrix).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .numerics import RngStream, array_response, as_generator

__all__ = [
    "SystemConfig",
    "Geometry",
    "ChannelRealization",
    "pathloss",
    "make_geometry",
    "sample_channels",
    "effective_scalar_channel",
]


@dataclass
class SystemConfig:
    """Scalar protocol and scenario parameters.

    Powers are in watts, angles in radians, positions in meters.
    ``rician_delta`` is the linear line-of-sight to scattered power
    ratio of the device-IRS links; ``pure_los`` replaces those links by
    their line-of-sight component exactly (the delta -> infinity limit).
    ``ref_loss_linear`` is the attenuation at the 1 m reference distance.
    Angle fields left at None are drawn uniformly from (-pi/2, pi/2)
    when the geometry is built; setting them pins the draw (regression
    scenarios).
    """

    M: int = 10
    N: int = 256
    K: int = 20
    L: int = 2
    Pmax: float = 0.1          # 20 dBm
    sigma2: float = 1e-11      # -80 dBm
    rician_delta: float = 10.0  # 10 dB
    spacing_ratio: float = 0.5
    pathloss_exponent_reflected: float = 2.2
    pathloss_exponent_direct: float = 3.8
    ref_loss_linear: float = 1e-3  # 30 dB at 1 m
    pure_los: bool = False
    block_direct: bool = False
    ap_position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    irs_position: tuple[float, float, float] = (0.0, 0.0, 10.0)
    device_center: tuple[float, float, float] = (200.0, 0.0, 0.0)
    device_radius: float = 20.0
    phi_r: float | None = None
    phi_t: float | None = None
    nu: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if min(self.M, self.N, self.K, self.L) < 1:
            raise ValueError("M, N, K, L must all be >= 1")
        if self.Pmax <= 0:
            raise ValueError("Pmax must be positive")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be non-negative")
        if self.rician_delta < 0:
            raise ValueError("rician_delta must be non-negative")
        if self.spacing_ratio <= 0:
            raise ValueError("spacing_ratio must be positive")
        if min(self.pathloss_exponent_reflected, self.pathloss_exponent_direct) < 0:
            raise ValueError("path loss exponents must be non-negative")
        if not 0.0 < self.ref_loss_linear <= 1.0:
            raise ValueError("ref_loss_linear must be in (0, 1]")
        if self.device_radius < 0:
            raise ValueError("device_radius must be non-negative")
        if self.nu is not None and len(self.nu) != self.K:
            raise ValueError("nu override must provide one angle per device")


@dataclass(frozen=True)
class Geometry:
    """Static node placement, angles, and large-scale path losses."""

    ap_position: np.ndarray
    irs_position: np.ndarray
    device_positions: np.ndarray  # (K, 3)
    phi_r: float                  # IRS -> AP angle of arrival
    phi_t: float                  # IRS -> AP angle of departure
    nu: np.ndarray                # (K,) device -> IRS angles of arrival
    rho_1: float                  # IRS-AP path loss
    rho_d: np.ndarray             # (K,) direct path losses (0 when blocked)
    rho_r: np.ndarray             # (K,) device-IRS path losses
    spacing_ratio: float = 0.5

    @property
    def num_devices(self) -> int:
        return self.nu.shape[0]


@dataclass(frozen=True)
class ChannelRealization:
    """One coherence block: direct vectors (K, M) and device-IRS vectors (K, N).

    The IRS-AP link is rank-1 deterministic and lives in the geometry
    (rho_1, phi_r, phi_t); it is expanded on the fly, never stored.
    """

    h_direct: np.ndarray
    h_reflect: np.ndarray
    geometry: Geometry = field(repr=False)

    @property
    def num_devices(self) -> int:
        return self.h_direct.shape[0]


def pathloss(distance: float, exponent: float, ref_loss_linear: float) -> float:
    """Large-scale power attenuation ref_loss_linear * distance**(-exponent).

    Distances under the 1 m reference are clamped to 1 m with a warning
    (near-field guard).
    """
    if ref_loss_linear <= 0:
        raise ValueError("ref_loss_linear must be positive")
    if distance < 1.0:
        warnings.warn(
            f"distance {distance} m inside 1 m reference, clamping",
            stacklevel=2,
        )
        distance = 1.0
    return ref_loss_linear * float(distance) ** (-exponent)


def make_geometry(
    config: SystemConfig, stream: RngStream | np.random.Generator
) -> Geometry:
    """Draw the static scenario: device positions on a disk plus link angles.

    Devices are uniform over the disk of radius ``device_radius`` around
    ``device_center`` in the z = 0 plane.  Path losses follow 3-D
    Euclidean distances (reflected exponent for AP-IRS and IRS-device
    links, direct exponent for device-AP links).  Angles are drawn
    uniformly from (-pi/2, pi/2) unless pinned in the config; the draws
    always happen so that pinning one angle never shifts the rest of the
    stream.
    """
    gen = as_generator(stream)
    K = config.K
    ap = np.asarray(config.ap_position, dtype=float)
    irs = np.asarray(config.irs_position, dtype=float)
    center = np.asarray(config.device_center, dtype=float)

    radii = config.device_radius * np.sqrt(gen.uniform(0.0, 1.0, K))
    azimuth = gen.uniform(0.0, 2.0 * np.pi, K)
    positions = np.column_stack(
        [
            center[0] + radii * np.cos(azimuth),
            center[1] + radii * np.sin(azimuth),
            np.zeros(K),
        ]
    )

    phi_r_draw = gen.uniform(-np.pi / 2, np.pi / 2)
    phi_t_draw = gen.uniform(-np.pi / 2, np.pi / 2)
    nu_draw = gen.uniform(-np.pi / 2, np.pi / 2, K)
    phi_r = config.phi_r if config.phi_r is not None else float(phi_r_draw)
    phi_t = config.phi_t if config.phi_t is not None else float(phi_t_draw)
    nu = np.asarray(config.nu, dtype=float) if config.nu is not None else nu_draw

    exp_r = config.pathloss_exponent_reflected
    exp_d = config.pathloss_exponent_direct
    ref = config.ref_loss_linear
    rho_1 = pathloss(float(np.linalg.norm(irs - ap)), exp_r, ref)
    dist_ap = np.linalg.norm(positions - ap, axis=1)
    dist_irs = np.linalg.norm(positions - irs, axis=1)
    if config.block_direct:
        rho_d = np.zeros(K)
    else:
        rho_d = np.array([pathloss(d, exp_d, ref) for d in dist_ap])
    rho_r = np.array([pathloss(d, exp_r, ref) for d in dist_irs])

    return Geometry(
        ap_position=ap,
        irs_position=irs,
        device_positions=positions,
        phi_r=phi_r,
        phi_t=phi_t,
        nu=nu,
        rho_1=rho_1,
        rho_d=rho_d,
        rho_r=rho_r,
        spacing_ratio=config.spacing_ratio,
    )


def sample_channels(
    geometry: Geometry,
    config: SystemConfig,
    stream: RngStream | np.random.Generator,
) -> ChannelRealization:
    """Draw one coherence block of small-scale fading.

    Direct links: sqrt(rho_d) times an i.i.d. unit-variance complex
    Gaussian vector.  Device-IRS links mix the steering-vector
    line-of-sight component with an i.i.d. scattered component at the
    configured Rician ratio; with ``pure_los`` the scattered part is
    dropped exactly.  Draws are independent across devices and streams.
    """
    gen = as_generator(stream)
    K, M, N = config.K, config.M, config.N
    delta = config.rician_delta

    g_direct = (gen.standard_normal((K, M)) + 1j * gen.standard_normal((K, M))) / np.sqrt(2.0)
    h_direct = np.sqrt(geometry.rho_d)[:, None] * g_direct

    los = np.exp(
        2j * np.pi * geometry.spacing_ratio
        * np.sin(geometry.nu)[:, None] * np.arange(N)[None, :]
    )
    if config.pure_los:
        h_reflect = np.sqrt(geometry.rho_r)[:, None] * los
    else:
        g_reflect = (gen.standard_normal((K, N)) + 1j * gen.standard_normal((K, N))) / np.sqrt(2.0)
        los_amp = np.sqrt(geometry.rho_r * delta / (delta + 1.0))[:, None]
        nlos_amp = np.sqrt(geometry.rho_r / (delta + 1.0))[:, None]
        h_reflect = los_amp * los + nlos_amp * g_reflect

    return ChannelRealization(h_direct=h_direct, h_reflect=h_reflect, geometry=geometry)


def effective_scalar_channel(realization: ChannelRealization, v: np.ndarray, theta) -> np.ndarray:
    """Per-device scalar channel seen after receive combining and reflection.

    Returns, for each device k, v^H (h_direct_k + G Theta h_reflect_k)
    where G is the rank-1 IRS-AP link.  The rank-1 structure is
    exploited: v^H a_M(phi_r) is computed once and the reflection is
    applied as an N-vector inner product, O(M + N) per device.
    """
    geo = realization.geometry
    K, M = realization.h_direct.shape
    N = realization.h_reflect.shape[1]
    v = np.asarray(v)
    if v.shape != (M,):
        raise ValueError(f"v must have shape ({M},), got {v.shape}")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"v must be unit norm, got ||v|| = {norm}")
    if theta.phases.shape != (N,):
        raise ValueError(
            f"phase-shift vector has {theta.phases.shape[0]} elements, expected {N}"
        )

    a_m = array_response(M, geo.phi_r, geo.spacing_ratio)
    a_n = array_response(N, geo.phi_t, geo.spacing_ratio)
    combiner_gain = np.vdot(v, a_m)  # v^H a_M(phi_r), scalar
    # row vector a_N^H(phi_t) Theta, applied to every device's IRS link
    reflect_row = a_n.conj() * np.exp(1j * theta.phases)
    reflected = np.sqrt(geo.rho_1) * combiner_gain * (realization.h_reflect @ reflect_row)
    direct = realization.h_direct @ v.conj()
    return direct + reflected

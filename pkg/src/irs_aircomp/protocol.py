"""The multi-timescale protocol.

Long-term stage: a static receive beamformer from the IRS arrival angle
and a discrete IRS phase configuration built from per-device phase
projections fused by majority vote.  Short-term stage: per-block optimal
transmit power control with its denoising factor, the channel-inversion
baseline, exact MSE evaluation, and an independent 1-D search oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, effective_scalar_channel
from .numerics import array_response

__all__ = [
    "DegenerateChannelError",
    "PhaseShiftVector",
    "PowerSolution",
    "receive_beamformer",
    "quantize_phase",
    "per_device_phases",
    "majority_vote",
    "optimal_power_control",
    "channel_inversion_power_control",
    "evaluate_mse",
    "evaluate_mse_general",
    "oracle_power_control",
]

TWO_PI = 2.0 * np.pi


class DegenerateChannelError(ValueError):
    """A device has zero effective channel; power control would divide by it."""


@dataclass(frozen=True, eq=False)
class PhaseShiftVector:
    """N discrete IRS phases, each an exact integer multiple of 2*pi/levels.

    Stored as integer level indices so equality of phases is exact.
    """

    indices: np.ndarray
    levels: int

    def __post_init__(self) -> None:
        idx = np.asarray(self.indices, dtype=np.int64)
        object.__setattr__(self, "indices", idx)
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if idx.ndim != 1 or np.any(idx < 0) or np.any(idx >= self.levels):
            raise ValueError("indices must be a 1-D array of values in [0, levels)")

    @property
    def num_elements(self) -> int:
        return int(self.indices.shape[0])

    @property
    def phases(self) -> np.ndarray:
        return self.indices * (TWO_PI / self.levels)

    @classmethod
    def zero(cls, n_elements: int, levels: int) -> "PhaseShiftVector":
        """All-zero phases (the fixed, non-configured surface)."""
        return cls(indices=np.zeros(n_elements, dtype=np.int64), levels=levels)


@dataclass(frozen=True, eq=False)
class PowerSolution:
    """Per-device transmit powers, the denoising factor, and the achieved MSE.

    ``critical_number`` counts devices transmitting at exactly Pmax
    under the weakest-first ordering.
    """

    powers: np.ndarray
    eta: float
    critical_number: int
    mse: float
    scheme_label: str = "optimal"

    def __post_init__(self) -> None:
        p = np.asarray(self.powers, dtype=float)
        object.__setattr__(self, "powers", p)
        if np.any(p < 0):
            raise ValueError("powers must be non-negative")
        if np.any(p > 0) and not self.eta > 0:
            raise ValueError("eta must be positive when any device transmits")
        if not 0 <= self.critical_number <= p.shape[0]:
            raise ValueError("critical_number must lie in [0, K]")


def receive_beamformer(phi_r: float, M: int, spacing_ratio: float = 0.5) -> np.ndarray:
    """Static unit-norm receive beamformer: the IRS-arrival steering vector / sqrt(M)."""
    return array_response(M, phi_r, spacing_ratio) / np.sqrt(M)


def _quantize_indices(theta: np.ndarray, levels: int) -> np.ndarray:
    """Nearest level index by circular distance; ties go to the smaller phase value."""
    x = np.mod(np.asarray(theta, dtype=float), TWO_PI) * (levels / TWO_PI)
    lo = np.floor(x)
    d_lo = x - lo
    lo_idx = lo.astype(np.int64) % levels
    hi_idx = (lo.astype(np.int64) + 1) % levels
    idx = np.where(d_lo < 0.5, lo_idx, hi_idx)
    tie = d_lo == 0.5
    if np.any(tie):
        idx = np.where(tie, np.minimum(lo_idx, hi_idx), idx)
    return idx


def quantize_phase(theta: float, levels: int) -> float:
    """Project a phase onto the discrete set {0, 2*pi/L, ..., (L-1)*2*pi/L}.

    Minimizes circular distance; exact ties resolve to the smaller set
    element.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    idx = _quantize_indices(np.array([theta]), levels)[0]
    return float(idx * (TWO_PI / levels))


def per_device_phases(
    phi_t: float,
    nu_k: float,
    n_elements: int,
    levels: int,
    spacing_ratio: float = 0.5,
    sin_projection: bool = True,
) -> PhaseShiftVector:
    """Device k's preferred discrete phases.

    The continuous optimum at element m is
    2*pi*spacing_ratio*m*(sin(phi_t) - sin(nu_k)), which conjugates the
    two steering vectors exactly (their inner product reaches N when
    unquantized); each element is then projected onto the discrete set.
    With ``sin_projection=False`` the raw angle difference with 1-based
    element indexing is used instead, kept only for A/B comparison
    against that alternative convention.
    """
    if sin_projection:
        m = np.arange(n_elements)
        diff = np.sin(phi_t) - np.sin(nu_k)
    else:
        m = np.arange(1, n_elements + 1)
        diff = phi_t - nu_k
    theta_cont = np.mod(TWO_PI * spacing_ratio * m * diff, TWO_PI)
    return PhaseShiftVector(indices=_quantize_indices(theta_cont, levels), levels=levels)


def majority_vote(per_device, levels: int | None = None) -> PhaseShiftVector:
    """Fuse per-device phase preferences element-wise by plurality.

    For each element the discrete phase with the most votes wins; ties
    resolve to the smaller phase value.
    """
    per_device = list(per_device)
    if not per_device:
        raise ValueError("majority_vote needs at least one device")
    n = per_device[0].num_elements
    if levels is None:
        levels = per_device[0].levels
    for psv in per_device:
        if psv.num_elements != n or psv.levels != levels:
            raise ValueError("all phase-shift vectors must share N and levels")

    counts = np.zeros((levels, n), dtype=np.int64)
    cols = np.arange(n)
    for psv in per_device:
        np.add.at(counts, (psv.indices, cols), 1)
    # argmax returns the first (smallest-phase) maximizer
    return PhaseShiftVector(indices=counts.argmax(axis=0), levels=levels)


def _gamma_magnitudes(gammas) -> np.ndarray:
    g = np.abs(np.asarray(gammas, dtype=complex))
    if g.ndim != 1 or g.shape[0] < 1:
        raise ValueError("gammas must be a non-empty 1-D array")
    if np.any(g == 0.0):
        raise DegenerateChannelError("zero effective channel, power control undefined")
    return g


def _alignment_mse(g: np.ndarray, powers: np.ndarray, eta: float, sigma2: float) -> float:
    """Sum of (sqrt(p_k)|gamma_k|/sqrt(eta) - 1)^2 plus sigma^2/eta.

    Compensated summation: near-optimal solutions cancel catastrophically
    term by term.
    """
    misalign = np.sqrt(powers) * g / math.sqrt(eta) - 1.0
    return math.fsum([*(misalign**2).tolist(), sigma2 / eta])


def optimal_power_control(
    gammas, Pmax: float, sigma2: float, scheme_label: str = "optimal"
) -> PowerSolution:
    """MSE-optimal per-block power control and denoising factor.

    Devices sorted ascending by |gamma|^2 (stable, original index breaks
    ties) transmit at Pmax up to the critical index and channel-invert
    beyond it; the denoising factor is the smallest of the per-prefix
    candidates, smallest index on ties.
    """
    if Pmax <= 0:
        raise ValueError("Pmax must be positive")
    if sigma2 < 0:
        raise ValueError("sigma2 must be non-negative")
    g = _gamma_magnitudes(gammas)
    K = g.shape[0]
    order = np.argsort(g**2, kind="stable")
    gs = g[order]

    amp_sum = np.cumsum(np.sqrt(Pmax) * gs)
    power_sum = sigma2 + np.cumsum(Pmax * gs**2)
    eta_candidates = (power_sum / amp_sum) ** 2
    kt = int(np.argmin(eta_candidates))  # first minimizer
    eta = float(eta_candidates[kt])

    p_sorted = np.where(np.arange(K) <= kt, Pmax, eta / gs**2)
    powers = np.empty(K)
    powers[order] = p_sorted
    mse = _alignment_mse(g, powers, eta, sigma2)
    return PowerSolution(
        powers=powers,
        eta=eta,
        critical_number=kt + 1,
        mse=mse,
        scheme_label=scheme_label,
    )


def channel_inversion_power_control(gammas, Pmax: float, sigma2: float) -> PowerSolution:
    """Channel-inversion baseline: all effective amplitudes aligned exactly.

    The denoising factor is Pmax times the weakest |gamma|^2, so the
    weakest device transmits at exactly Pmax and the MSE reduces to
    sigma^2/eta.
    """
    if Pmax <= 0:
        raise ValueError("Pmax must be positive")
    if sigma2 < 0:
        raise ValueError("sigma2 must be non-negative")
    g = _gamma_magnitudes(gammas)
    g2 = g**2
    weakest = int(np.argmin(g2))
    eta = Pmax * float(g2[weakest])
    powers = eta / g2
    powers[weakest] = Pmax  # exact, not Pmax*g2min/g2min
    return PowerSolution(
        powers=powers,
        eta=eta,
        critical_number=1,
        mse=sigma2 / eta,
        scheme_label="channel_inversion",
    )


def evaluate_mse(gammas, solution: PowerSolution, sigma2: float) -> float:
    """MSE of a power solution on the scalar effective channels."""
    if not solution.eta > 0:
        raise ValueError("eta must be positive")
    g = np.abs(np.asarray(gammas, dtype=complex))
    return _alignment_mse(g, solution.powers, solution.eta, sigma2)


def evaluate_mse_general(
    v: np.ndarray,
    theta: PhaseShiftVector,
    b,
    eta: float,
    realization: ChannelRealization,
    sigma2: float,
) -> float:
    """MSE for arbitrary complex transmit scalars b_k, from the vector channels.

    Equals :func:`evaluate_mse` whenever b_k = sqrt(p_k) * conj(gamma_k)/|gamma_k|.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    b = np.asarray(b, dtype=complex)
    gam = effective_scalar_channel(realization, v, theta)
    if b.shape != gam.shape:
        raise ValueError(f"b must have shape {gam.shape}, got {b.shape}")
    z = gam * b / math.sqrt(eta)
    v_norm_sq = float(np.linalg.norm(v) ** 2)
    terms = ((z.real - 1.0) ** 2 + z.imag**2).tolist()
    return math.fsum([*terms, sigma2 * v_norm_sq / eta])


def _clipped_inversion_mse(g2: np.ndarray, g: np.ndarray, eta, Pmax, sigma2):
    """MSE over a grid of eta values with the per-eta-optimal feasible powers."""
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    p = np.minimum(Pmax, eta[:, None] / g2[None, :])
    misalign = np.sqrt(p) * g[None, :] / np.sqrt(eta)[:, None] - 1.0
    return (misalign**2).sum(axis=1) + sigma2 / eta


def oracle_power_control(
    gammas, Pmax: float, sigma2: float, eta_grid_resolution: int = 2048
) -> PowerSolution:
    """Independent verification oracle for the optimal power control.

    For fixed eta the MSE-minimizing feasible power is
    min(Pmax, eta/|gamma_k|^2); the oracle scans a dense geometric grid
    of eta values up to the largest prefix candidate and refines the
    best bracket by golden-section search.
    """
    if eta_grid_resolution < 3:
        raise ValueError("eta_grid_resolution must be >= 3")
    g = _gamma_magnitudes(gammas)
    g2 = g**2
    gs2 = np.sort(g2)
    gs = np.sqrt(gs2)
    amp_sum = np.cumsum(np.sqrt(Pmax) * gs)
    power_sum = sigma2 + np.cumsum(Pmax * gs2)
    eta_candidates = (power_sum / amp_sum) ** 2

    eta_hi = float(eta_candidates.max())
    # reach below the exact-inversion knee so the sigma2 = 0 optimum is covered
    eta_lo = 1e-4 * min(float(eta_candidates.min()), Pmax * float(gs2[0]))
    grid = np.geomspace(eta_lo, eta_hi, eta_grid_resolution)
    mse_grid = _clipped_inversion_mse(g2, g, grid, Pmax, sigma2)
    best = int(np.argmin(mse_grid))

    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, grid.shape[0] - 1)]
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    while (b - a) > 1e-13 * b:
        fc = _clipped_inversion_mse(g2, g, c, Pmax, sigma2)[0]
        fd = _clipped_inversion_mse(g2, g, d, Pmax, sigma2)[0]
        if fc < fd:
            b = d
        else:
            a = c
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
    eta_star = float((a + b) / 2.0)

    candidates = np.append(grid[max(best - 1, 0) : best + 2], eta_star)
    mse_cand = _clipped_inversion_mse(g2, g, candidates, Pmax, sigma2)
    eta_best = float(candidates[int(np.argmin(mse_cand))])

    powers = np.minimum(Pmax, eta_best / g2)
    mse = _alignment_mse(g, powers, eta_best, sigma2)
    return PowerSolution(
        powers=powers,
        eta=eta_best,
        critical_number=int(np.count_nonzero(eta_best / g2 >= Pmax)),
        mse=mse,
        scheme_label="oracle",
    )

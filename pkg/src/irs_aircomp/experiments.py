"""Scheme registry, Monte Carlo engine, parameter sweeps, and persistence.

Long-term quantities (beamformer, voted phases) are computed once per
geometry; channels are redrawn per trial.  Every trial owns a
counter-based stream derived from (master seed, point index, trial
index), so runs are a pure function of the configuration and seed and
schemes evaluated at the same sweep coordinate share channel draws.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import AsymptoticParams, mse_upper_bound, n_threshold
from .channel import (
    ChannelRealization,
    Geometry,
    SystemConfig,
    make_geometry,
    sample_channels,
)
from .numerics import RngStream, as_generator
from .protocol import (
    DegenerateChannelError,
    PhaseShiftVector,
    channel_inversion_power_control,
    effective_scalar_channel,
    majority_vote,
    optimal_power_control,
    per_device_phases,
    receive_beamformer,
)

__all__ = [
    "ConfigError",
    "Scheme",
    "SchemeSpec",
    "SCHEMES",
    "ExperimentConfig",
    "LongTermState",
    "SweepRow",
    "SweepResult",
    "TrialCounters",
    "compute_long_term",
    "run_trial",
    "run_sweep",
    "write_csv",
    "load_config",
]

CSV_HEADER = (
    "scheme,N,M,K,trials,mean_mse,stderr_mse,mean_ktilde,bound_mse,n_threshold"
)

_MAX_REDRAWS = 100


class ConfigError(ValueError):
    """Configuration file or experiment setup is invalid."""


class Scheme(str, enum.Enum):
    OPT_PC_IRS = "OPT_PC_IRS"
    INV_PC_IRS = "INV_PC_IRS"
    OPT_PC_NO_IRS = "OPT_PC_NO_IRS"
    INV_PC_NO_IRS = "INV_PC_NO_IRS"
    FIXED_PHASE_OPT_PC = "FIXED_PHASE_OPT_PC"


@dataclass(frozen=True)
class SchemeSpec:
    id: Scheme
    description: str


SCHEMES: dict[Scheme, SchemeSpec] = {
    Scheme.OPT_PC_IRS: SchemeSpec(
        Scheme.OPT_PC_IRS, "optimal power control, voted IRS phases"
    ),
    Scheme.INV_PC_IRS: SchemeSpec(
        Scheme.INV_PC_IRS, "channel-inversion power control, voted IRS phases"
    ),
    Scheme.OPT_PC_NO_IRS: SchemeSpec(
        Scheme.OPT_PC_NO_IRS, "optimal power control, direct links only"
    ),
    Scheme.INV_PC_NO_IRS: SchemeSpec(
        Scheme.INV_PC_NO_IRS, "channel-inversion power control, direct links only"
    ),
    Scheme.FIXED_PHASE_OPT_PC: SchemeSpec(
        Scheme.FIXED_PHASE_OPT_PC, "optimal power control, all-zero IRS phases"
    ),
}


@dataclass
class ExperimentConfig:
    """A sweep: the system under test plus trial counts, seed, and output."""

    system: SystemConfig = field(default_factory=SystemConfig)
    n_sweep: tuple[int, ...] = (64, 128, 256, 512)
    trials: int = 10_000
    seed: int = 0
    epsilon: float = 0.9
    redraw_geometry_per_trial: bool = False
    output: str | None = None

    def __post_init__(self) -> None:
        self.n_sweep = tuple(int(n) for n in self.n_sweep)
        if len(self.n_sweep) < 1 or any(n < 1 for n in self.n_sweep):
            raise ConfigError("n_sweep must contain positive element counts")
        if any(b <= a for a, b in zip(self.n_sweep, self.n_sweep[1:])):
            raise ConfigError("n_sweep must be strictly increasing")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError("epsilon must be in (0, 1)")


@dataclass(frozen=True)
class LongTermState:
    """Per-geometry long-term variables: beamformer and phase configurations."""

    v: np.ndarray
    theta_voted: PhaseShiftVector
    theta_fixed: PhaseShiftVector


@dataclass
class TrialCounters:
    rejected: int = 0


@dataclass(frozen=True)
class SweepRow:
    scheme: str
    N: int
    M: int
    K: int
    trials: int
    mean_mse: float
    stderr_mse: float
    mean_ktilde: float
    bound_mse: float | None = None
    n_threshold: float | None = None


@dataclass
class SweepResult:
    rows: list[SweepRow]
    rejected_trials: int = 0


def compute_long_term(geometry: Geometry, config: SystemConfig) -> LongTermState:
    """Static beamformer plus voted and all-zero phase configurations."""
    v = receive_beamformer(geometry.phi_r, config.M, geometry.spacing_ratio)
    preferred = [
        per_device_phases(
            geometry.phi_t, geometry.nu[k], config.N, config.L, geometry.spacing_ratio
        )
        for k in range(geometry.num_devices)
    ]
    return LongTermState(
        v=v,
        theta_voted=majority_vote(preferred),
        theta_fixed=PhaseShiftVector.zero(config.N, config.L),
    )


def _dominant_direct_combiner(realization: ChannelRealization) -> np.ndarray:
    """Unit-norm combiner matched to the strongest direction of the direct channels."""
    H = realization.h_direct  # (K, M)
    corr = H.T @ H.conj()  # sum_k h_k h_k^H
    _, vecs = np.linalg.eigh(corr)
    return vecs[:, -1]


def _scheme_gammas(
    realization: ChannelRealization,
    config: SystemConfig,
    scheme: Scheme,
    long_term: LongTermState,
) -> np.ndarray:
    if scheme in (Scheme.OPT_PC_NO_IRS, Scheme.INV_PC_NO_IRS):
        v = _dominant_direct_combiner(realization)
        return realization.h_direct @ v.conj()
    theta = (
        long_term.theta_fixed
        if scheme is Scheme.FIXED_PHASE_OPT_PC
        else long_term.theta_voted
    )
    return effective_scalar_channel(realization, long_term.v, theta)


def run_trial(
    config: SystemConfig,
    geometry: Geometry,
    scheme: Scheme | SchemeSpec,
    stream: RngStream | np.random.Generator,
    long_term: LongTermState | None = None,
    counters: TrialCounters | None = None,
) -> tuple[float, int]:
    """One coherence block under one scheme: (mse, critical_number).

    Degenerate all-zero channels are rejected and redrawn from the same
    stream; rejections are tallied in ``counters`` when given.
    """
    if isinstance(scheme, SchemeSpec):
        scheme = scheme.id
    scheme = Scheme(scheme)
    if long_term is None:
        long_term = compute_long_term(geometry, config)
    gen = as_generator(stream)
    for _ in range(_MAX_REDRAWS):
        realization = sample_channels(geometry, config, gen)
        gammas = _scheme_gammas(realization, config, scheme, long_term)
        if np.all(np.abs(gammas) > 0.0):
            if scheme in (Scheme.INV_PC_IRS, Scheme.INV_PC_NO_IRS):
                sol = channel_inversion_power_control(gammas, config.Pmax, config.sigma2)
            else:
                sol = optimal_power_control(gammas, config.Pmax, config.sigma2)
            return sol.mse, sol.critical_number
        if counters is not None:
            counters.rejected += 1
    raise DegenerateChannelError(
        f"{scheme.value}: degenerate channel persisted through {_MAX_REDRAWS} redraws"
    )


def _trial_streams(seed: int, point: int, trial: int, trials: int) -> tuple[RngStream, RngStream]:
    """(geometry stream, channel stream) for one (point, trial) coordinate."""
    base = point * trials + trial
    return RngStream(seed, 2 + 2 * base), RngStream(seed, 3 + 2 * base)


def run_sweep(config: ExperimentConfig, schemes) -> SweepResult:
    """Monte Carlo means over the sweep axis for each scheme.

    Geometry is drawn once from stream 0 and held fixed (it does not
    depend on N), matching the multi-timescale split: long-term
    variables per geometry, channels per trial.  With
    ``redraw_geometry_per_trial`` each trial draws its own geometry,
    for studies whose randomness lives in the static angles.
    """
    schemes = [Scheme(s.id if isinstance(s, SchemeSpec) else s) for s in schemes]
    if not schemes:
        raise ConfigError("at least one scheme is required")
    T = config.trials
    base_system = config.system

    reference_geometry = make_geometry(base_system, RngStream(config.seed, 0))
    rho_min = reference_geometry.rho_1 * float(np.min(reference_geometry.rho_r))

    rows: list[SweepRow] = []
    counters = TrialCounters()
    for p, N in enumerate(config.n_sweep):
        system = replace(base_system, N=N)
        fixed_long_term = None
        if not config.redraw_geometry_per_trial:
            fixed_long_term = compute_long_term(reference_geometry, system)

        mses: dict[Scheme, list[float]] = {s: [] for s in schemes}
        ktildes: dict[Scheme, list[int]] = {s: [] for s in schemes}
        for t in range(T):
            geo_stream, chan_stream = _trial_streams(config.seed, p, t, T)
            if config.redraw_geometry_per_trial:
                geometry = make_geometry(system, geo_stream)
                long_term = compute_long_term(geometry, system)
            else:
                geometry = reference_geometry
                long_term = fixed_long_term
            for s in schemes:
                mse, kt = run_trial(system, geometry, s, chan_stream, long_term, counters)
                mses[s].append(mse)
                ktildes[s].append(kt)

        bound = threshold = None
        if system.L == 2:
            params = AsymptoticParams(
                M=system.M,
                N=N,
                K=system.K,
                Pmax=system.Pmax,
                sigma2=system.sigma2,
                rho_min=rho_min,
                epsilon=config.epsilon,
            )
            bound = mse_upper_bound(params)
            threshold = n_threshold(params, rho_min)
        for s in schemes:
            vals = mses[s]
            mean = math.fsum(vals) / T
            stderr = float(np.std(vals, ddof=1) / math.sqrt(T)) if T > 1 else 0.0
            with_irs = s in (Scheme.OPT_PC_IRS, Scheme.INV_PC_IRS)
            rows.append(
                SweepRow(
                    scheme=s.value,
                    N=N,
                    M=system.M,
                    K=system.K,
                    trials=T,
                    mean_mse=mean,
                    stderr_mse=stderr,
                    mean_ktilde=math.fsum(ktildes[s]) / T,
                    bound_mse=bound if with_irs else None,
                    n_threshold=threshold if with_irs else None,
                )
            )

    rows.sort(key=lambda r: (r.scheme, r.N))
    return SweepResult(rows=rows, rejected_trials=counters.rejected)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)  # full round-trip precision
    return str(value)


def write_csv(result: SweepResult, path) -> None:
    """UTF-8 CSV, fixed header, rows sorted by (scheme, N), round-trip floats."""
    rows = sorted(result.rows, key=lambda r: (r.scheme, r.N))
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER.split(","))
            for r in rows:
                writer.writerow(
                    [
                        r.scheme,
                        r.N,
                        r.M,
                        r.K,
                        r.trials,
                        _format_cell(r.mean_mse),
                        _format_cell(r.stderr_mse),
                        _format_cell(r.mean_ktilde),
                        _format_cell(r.bound_mse),
                        _format_cell(r.n_threshold),
                    ]
                )
    except OSError as exc:
        raise OSError(f"failed writing sweep CSV to {path}: {exc}") from exc


_SYSTEM_KEYS = {
    "m": ("M", int),
    "n": ("N", int),
    "k": ("K", int),
    "l": ("L", int),
    "pmax": ("Pmax", float),
    "sigma2": ("sigma2", float),
    "rician_delta": ("rician_delta", float),
    "spacing_ratio": ("spacing_ratio", float),
    "pathloss_exponent_reflected": ("pathloss_exponent_reflected", float),
    "pathloss_exponent_direct": ("pathloss_exponent_direct", float),
    "ref_loss_linear": ("ref_loss_linear", float),
    "pure_los": ("pure_los", bool),
    "block_direct": ("block_direct", bool),
    "device_radius": ("device_radius", float),
    "phi_r": ("phi_r", float),
    "phi_t": ("phi_t", float),
}
_TRIPLE_KEYS = {"ap_position", "irs_position", "device_center"}
_EXPERIMENT_KEYS = {
    "trials": ("trials", int),
    "seed": ("seed", int),
    "epsilon": ("epsilon", float),
    "redraw_geometry_per_trial": ("redraw_geometry_per_trial", bool),
    "output": ("output", str),
}
_DBM_KEYS = {"pmax_dbm": "pmax", "sigma2_dbm": "sigma2"}


def _parse_bool(raw: str, key: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def _parse_value(raw: str, key: str, kind):
    if kind is bool:
        return _parse_bool(raw, key)
    try:
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from exc


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def load_config(path) -> ExperimentConfig:
    """Parse a flat ``key = value`` config file; unspecified keys take defaults.

    ``#`` starts a comment.  Recognized keys:

    system     -- m, n, k, l, pmax, sigma2, rician_delta, spacing_ratio,
                  pathloss_exponent_reflected, pathloss_exponent_direct,
                  ref_loss_linear, pure_los, block_direct, device_radius,
                  phi_r, phi_t, nu (comma-separated radians, one per device),
                  ap_position, irs_position, device_center (comma triples, m)
    experiment -- n_sweep (comma-separated, strictly increasing), trials,
                  seed, epsilon, redraw_geometry_per_trial, output
    dBm forms  -- pmax_dbm, sigma2_dbm (converted via W = 10^((dBm-30)/10))

    Unknown keys, duplicate keys, unparsable values, or violated
    invariants raise ConfigError.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc

    system_kwargs: dict = {}
    experiment_kwargs: dict = {}
    seen: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {text!r}")
        key, raw = (part.strip() for part in text.split("=", 1))
        key = key.lower()
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)

        if key in _DBM_KEYS:
            base = _DBM_KEYS[key]
            if base in seen:
                raise ConfigError(f"{key} conflicts with {base}")
            seen.add(base)
            field_name, _ = _SYSTEM_KEYS[base]
            system_kwargs[field_name] = dbm_to_watts(_parse_value(raw, key, float))
        elif key in _SYSTEM_KEYS:
            field_name, kind = _SYSTEM_KEYS[key]
            system_kwargs[field_name] = _parse_value(raw, key, kind)
        elif key in _TRIPLE_KEYS:
            parts = [_parse_value(p, key, float) for p in raw.split(",")]
            if len(parts) != 3:
                raise ConfigError(f"{key}: expected three comma-separated coordinates")
            system_kwargs[key] = tuple(parts)
        elif key == "nu":
            system_kwargs["nu"] = tuple(
                _parse_value(p, key, float) for p in raw.split(",")
            )
        elif key == "n_sweep":
            experiment_kwargs["n_sweep"] = tuple(
                _parse_value(p, key, int) for p in raw.split(",")
            )
        elif key in _EXPERIMENT_KEYS:
            field_name, kind = _EXPERIMENT_KEYS[key]
            experiment_kwargs[field_name] = _parse_value(raw, key, kind)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")

    try:
        system = SystemConfig(**system_kwargs)
        return ExperimentConfig(system=system, **experiment_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def config_field_names() -> tuple[str, ...]:
    """Documented config keys, for CLI help and error messages."""
    keys = (
        list(_SYSTEM_KEYS)
        + list(_TRIPLE_KEYS)
        + ["nu", "n_sweep"]
        + list(_EXPERIMENT_KEYS)
        + list(_DBM_KEYS)
    )
    return tuple(sorted(keys))

"""Command-line interface: sweep, bounds, validate, single.

Exit codes: 0 success, 1 validation failure, 2 configuration or I/O
error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace

import numpy as np

from .analysis import (
    AsymptoticParams,
    approx_array_gain,
    expected_channel_power_gain,
    min_gamma_sq_approx,
    mse_lower_bound,
    mse_upper_bound,
    n_threshold,
)
from .channel import SystemConfig, effective_scalar_channel, make_geometry, sample_channels
from .experiments import (
    CSV_HEADER,
    ConfigError,
    Scheme,
    compute_long_term,
    load_config,
    run_sweep,
    write_csv,
)
from .numerics import RngStream, sinc_normalized
from .protocol import (
    channel_inversion_power_control,
    evaluate_mse,
    evaluate_mse_general,
    optimal_power_control,
    oracle_power_control,
)


def _parse_schemes(raw: str) -> list[Scheme]:
    out = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            out.append(Scheme(part))
        except ValueError:
            valid = ", ".join(s.value for s in Scheme)
            raise ConfigError(f"unknown scheme {part!r}; valid: {valid}") from None
    if not out:
        raise ConfigError("no schemes given")
    return out


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    if args.trials is not None:
        config = replace(config, trials=args.trials)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    schemes = _parse_schemes(args.schemes) if args.schemes else list(Scheme)
    result = run_sweep(config, schemes)
    write_csv(result, args.out)
    if result.rejected_trials:
        print(f"rejected and redrew {result.rejected_trials} degenerate trials", file=sys.stderr)
    print(f"wrote {len(result.rows)} rows to {args.out}")
    return 0


def _cmd_bounds(args) -> int:
    config = load_config(args.config)
    system = config.system
    geometry = make_geometry(system, RngStream(config.seed, 0))
    rho_min = geometry.rho_1 * float(np.min(geometry.rho_r))
    try:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                [
                    "N",
                    "approx_array_gain",
                    "min_gamma_sq_approx",
                    "mse_upper_bound",
                    "n_threshold",
                    "mse_lower_bound",
                ]
            )
            for N in config.n_sweep:
                params = AsymptoticParams(
                    M=system.M,
                    N=N,
                    K=system.K,
                    Pmax=system.Pmax,
                    sigma2=system.sigma2,
                    rho_min=rho_min,
                    epsilon=config.epsilon,
                )
                gamma1_sq = min_gamma_sq_approx(params, rho_min)
                writer.writerow(
                    [
                        N,
                        repr(approx_array_gain(N, system.K)),
                        repr(gamma1_sq),
                        repr(mse_upper_bound(params)),
                        repr(n_threshold(params, rho_min)),
                        repr(mse_lower_bound(gamma1_sq, system.Pmax, system.sigma2)),
                    ]
                )
    except OSError as exc:
        raise ConfigError(f"failed writing bounds CSV to {args.out}: {exc}") from exc
    print(f"wrote bounds for {len(config.n_sweep)} element counts to {args.out}")
    return 0


def _cmd_single(args) -> int:
    config = load_config(args.config)
    schemes = _parse_schemes(args.scheme)
    if len(schemes) != 1:
        raise ConfigError("single takes exactly one scheme")
    single = replace(config, n_sweep=(args.n,))
    result = run_sweep(single, schemes)
    row = result.rows[0]
    print(CSV_HEADER)
    cells = [
        row.scheme,
        str(row.N),
        str(row.M),
        str(row.K),
        str(row.trials),
        repr(row.mean_mse),
        repr(row.stderr_mse),
        repr(row.mean_ktilde),
        "" if row.bound_mse is None else repr(row.bound_mse),
        "" if row.n_threshold is None else repr(row.n_threshold),
    ]
    print(",".join(cells))
    return 0


def _check(name: str, ok: bool, detail: str, failures: list[str]) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"  [{status}] {name}: {detail}")
    if not ok:
        failures.append(name)


def _validate_power_control(rng: np.random.Generator, instances: int, failures) -> None:
    worst_gap = 0.0
    worst_rel = 0.0
    feasible = True
    permutation_ok = True
    for _ in range(instances):
        K = int(rng.integers(1, 6))
        gammas = 10.0 ** rng.uniform(-2.0, 2.0, K) * np.exp(
            1j * rng.uniform(0.0, 2 * np.pi, K)
        )
        sigma2 = float(rng.choice([0.0, 1.0]))
        opt = optimal_power_control(gammas, 1.0, sigma2)
        oracle = oracle_power_control(gammas, 1.0, sigma2)
        scale = max(opt.mse, oracle.mse, 1e-12)
        worst_gap = max(worst_gap, (opt.mse - oracle.mse) / scale)
        worst_rel = max(worst_rel, abs(opt.mse - oracle.mse) / scale)
        if np.any(opt.powers < 0) or np.any(opt.powers > 1.0 + 1e-12):
            feasible = False
        perm = rng.permutation(K)
        opt_perm = optimal_power_control(gammas[perm], 1.0, sigma2)
        if not (
            np.allclose(opt_perm.powers, opt.powers[perm], rtol=1e-12, atol=1e-15)
            and abs(opt_perm.eta - opt.eta) <= 1e-12 * opt.eta
        ):
            permutation_ok = False
    _check(
        "power control never beats nor trails the search oracle",
        worst_gap <= 1e-9 and worst_rel <= 1e-7,
        f"worst signed gap {worst_gap:.3e}, worst |rel diff| {worst_rel:.3e}",
        failures,
    )
    _check("power feasibility 0 <= p <= Pmax", feasible, f"{instances} instances", failures)
    _check("permutation invariance", permutation_ok, f"{instances} instances", failures)


def _validate_dominance(rng: np.random.Generator, instances: int, failures) -> None:
    ok = True
    for _ in range(instances):
        K = int(rng.integers(2, 8))
        gammas = 10.0 ** rng.uniform(-1.5, 1.5, K)
        sigma2 = float(rng.uniform(0.1, 2.0))
        opt = optimal_power_control(gammas, 1.0, sigma2)
        inv = channel_inversion_power_control(gammas, 1.0, sigma2)
        lb = mse_lower_bound(float(np.min(np.abs(gammas) ** 2)), 1.0, sigma2)
        if not (opt.mse <= inv.mse + 1e-12 and opt.mse >= lb - 1e-12 and inv.mse >= lb - 1e-12):
            ok = False
    _check(
        "optimal <= inversion MSE and both >= realization lower bound",
        ok,
        f"{instances} instances",
        failures,
    )


def _validate_identity(rng: np.random.Generator, instances: int, failures) -> None:
    worst = 0.0
    for i in range(instances):
        cfg = SystemConfig(
            M=int(rng.integers(1, 5)),
            N=int(rng.integers(2, 9)),
            K=int(rng.integers(1, 5)),
            L=2,
            Pmax=1.0,
            sigma2=float(rng.uniform(0.0, 1.0)),
            ref_loss_linear=1.0,
            pathloss_exponent_reflected=0.0,
            pathloss_exponent_direct=0.0,
        )
        geometry = make_geometry(cfg, RngStream(7, i))
        realization = sample_channels(geometry, cfg, RngStream(11, i))
        lt = compute_long_term(geometry, cfg)
        gammas = effective_scalar_channel(realization, lt.v, lt.theta_voted)
        if np.any(np.abs(gammas) == 0):
            continue
        sol = optimal_power_control(gammas, cfg.Pmax, cfg.sigma2)
        b = np.sqrt(sol.powers) * gammas.conj() / np.abs(gammas)
        general = evaluate_mse_general(lt.v, lt.theta_voted, b, sol.eta, realization, cfg.sigma2)
        reduced = evaluate_mse(gammas, sol, cfg.sigma2)
        worst = max(worst, abs(general - reduced) / max(reduced, 1e-12))
    _check(
        "vector-channel MSE equals scalar-channel MSE for phase-aligned b",
        worst <= 1e-12,
        f"worst relative difference {worst:.3e}",
        failures,
    )


def _validate_sinc(rng: np.random.Generator, samples: int, failures) -> None:
    theta = rng.uniform(-np.pi / 2, np.pi / 2, samples)
    mc = np.abs(np.mean(np.exp(1j * theta)))
    target = sinc_normalized(0.5)
    rel = abs(mc - target) / target
    _check(
        "Monte Carlo phase average matches sinc(1/2)",
        rel <= 0.01,
        f"relative error {rel:.4f} at {samples} samples",
        failures,
    )


def _validate_channel_power(rng: np.random.Generator, draws: int, failures) -> None:
    worst = 0.0
    for i in range(3):
        copies = 200
        nu = float(rng.uniform(-np.pi / 2, np.pi / 2))
        cfg = SystemConfig(
            M=int(rng.choice([1, 4, 10])),
            N=int(rng.choice([8, 64])),
            K=copies,
            L=2,
            rician_delta=float(rng.choice([1.0, 10.0])),
            nu=(nu,) * copies,
            device_radius=0.0,
        )
        geometry = make_geometry(cfg, RngStream(23, i))
        lt = compute_long_term(geometry, cfg)
        theta = lt.theta_voted
        expected = expected_channel_power_gain(geometry, cfg, theta)[0]
        total = 0.0
        calls = max(1, draws // copies)
        for j in range(calls):
            realization = sample_channels(geometry, cfg, RngStream(29 + i, j))
            gam = effective_scalar_channel(realization, lt.v, theta)
            total += float(np.mean(np.abs(gam) ** 2))
        rel = abs(total / calls - expected) / expected
        worst = max(worst, rel)
    _check(
        "Monte Carlo effective channel power matches closed form",
        worst <= 0.02,
        f"worst relative error {worst:.4f}",
        failures,
    )


def _cmd_validate(args) -> int:
    fast = args.fast
    print(f"validation suite ({'fast' if fast else 'full'})")
    failures: list[str] = []
    rng = np.random.default_rng(2024)
    _validate_power_control(rng, 50 if fast else 200, failures)
    _validate_dominance(rng, 50 if fast else 200, failures)
    _validate_identity(rng, 25 if fast else 100, failures)
    _validate_sinc(rng, 10**5 if fast else 10**6, failures)
    _validate_channel_power(rng, 2 * 10**4 if fast else 10**5, failures)
    if failures:
        print(f"{len(failures)} check(s) failed")
        return 1
    print("all checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irs-aircomp",
        description="Link-level simulator for IRS-aided over-the-air computation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run Monte Carlo sweeps and write a CSV")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--schemes", help="comma-separated scheme ids (default: all)")
    p_sweep.add_argument("--trials", type=int)
    p_sweep.add_argument("--seed", type=int)
    p_sweep.add_argument("--out", required=True)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_bounds = sub.add_parser("bounds", help="emit closed-form reference curves only")
    p_bounds.add_argument("--config", required=True)
    p_bounds.add_argument("--out", required=True)
    p_bounds.set_defaults(func=_cmd_bounds)

    p_validate = sub.add_parser("validate", help="run the oracle and invariant suites")
    p_validate.add_argument("--fast", action="store_true")
    p_validate.set_defaults(func=_cmd_validate)

    p_single = sub.add_parser("single", help="run one sweep point and print the row")
    p_single.add_argument("--config", required=True)
    p_single.add_argument("--n", type=int, required=True)
    p_single.add_argument("--scheme", required=True)
    p_single.set_defaults(func=_cmd_single)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())

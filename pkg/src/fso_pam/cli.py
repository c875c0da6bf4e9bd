"""Command-line front end: config parsing, experiment execution, CSV output.

Configs are line-oriented ``key = value`` files with sections; powers may be
given in dBm or watts.  Flags override file values.  Every CSV starts with a
``#`` comment header embedding the resolved configuration and master seed, so
any row can be reproduced from the file alone.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from dataclasses import replace

import numpy as np
from scipy import integrate, stats

from .analytics import genie_bound, pam_bep
from .channel import (
    ChannelModel,
    GammaGammaParams,
    PointingParams,
    pdf_composite,
)
from .simcore import (
    DfbSpec,
    MlsdSpec,
    PcsiSpec,
    SimConfig,
    N0_DEFAULT,
    dbm_to_watt,
    run_ber_point,
    run_estimator_trace,
    watt_to_dbm,
)

THREADS_ENV = "FSO_PAM_THREADS"

__all__ = ["main", "load_spec", "SpecError"]


class SpecError(ValueError):
    """Configuration file failed schema validation."""


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_powers(s: str) -> tuple[float, ...]:
    s = s.strip()
    if ":" in s:
        parts = s.split(":")
        if len(parts) != 3:
            raise ValueError("power range must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("power range step must be positive")
        return tuple(np.arange(start, stop + step / 2, step).tolist())
    return tuple(float(p) for p in s.split(","))


def _parse_receivers(s: str) -> tuple:
    out = []
    for token in s.split(","):
        parts = token.strip().lower().split(":")
        kind = parts[0]
        if kind == "pcsi":
            if len(parts) != 1:
                raise ValueError(f"pcsi takes no parameters: {token!r}")
            out.append(PcsiSpec())
        elif kind == "dfb":
            if len(parts) not in (2, 3):
                raise ValueError(f"dfb needs dfb:L_m or dfb:L_m:alpha, got {token!r}")
            L_m = int(parts[1])
            alpha = int(parts[2]) if len(parts) == 3 else None
            out.append(DfbSpec(L_m=L_m, alpha_sel=alpha))
        elif kind == "mlsd":
            if len(parts) != 2:
                raise ValueError(f"mlsd needs mlsd:L, got {token!r}")
            out.append(MlsdSpec(L=int(parts[1])))
        else:
            raise ValueError(f"unknown receiver {kind!r}")
    if not out:
        raise ValueError("receiver list is empty")
    return tuple(out)


_SCHEMA = {
    "system": {
        "m": int,
        "data_rate_bps": float,
        "responsivity": float,
        "n0": float,
    },
    "channel": {
        "model": str,  # none | gamma_gamma | pointing | gamma_gamma_pointing
        "alpha": float,
        "beta": float,
        "a0": float,
        "gamma": float,
        "normalize_mean": _parse_bool,
        "coherence_length": int,
    },
    "receivers": {
        "list": _parse_receivers,
    },
    "sweep": {
        "power_dbm": _parse_powers,
        "power_w": _parse_powers,
        "min_errors": int,
        "max_bits": int,
    },
    "run": {
        "seed": int,
        "streams": int,
        "blocks_per_wave": int,
        "stream_blocks": int,
        "trace_symbols": int,
        "samples": int,
    },
}

_DEFAULTS = {
    ("system", "responsivity"): 1.0,
    ("system", "n0"): N0_DEFAULT,
    ("channel", "model"): "none",
    ("channel", "normalize_mean"): True,
    ("channel", "coherence_length"): 10_000,
    ("sweep", "min_errors"): 100,
    ("sweep", "max_bits"): 10_000_000,
    ("run", "seed"): 0,
    ("run", "streams"): 4,
    ("run", "blocks_per_wave"): 8,
    ("run", "trace_symbols"): 20_000,
    ("run", "samples"): 100_000,
}


def _find_line(path: str, name: str) -> str:
    """Best-effort line number of a section or key for diagnostics."""
    try:
        with open(path) as fh:
            for i, line in enumerate(fh, 1):
                token = line.split("=")[0].strip().strip("[]").lower()
                if token == name.lower():
                    return f"{path}:{i}"
    except OSError:
        pass
    return path


def load_spec(path: str) -> dict:
    """Parse and schema-validate a config file into a flat {(sec, key): value}."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh, source=path)
    except OSError as exc:
        raise SpecError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise SpecError(f"malformed config: {exc}") from exc

    values = dict(_DEFAULTS)
    for section in cp.sections():
        sec = section.lower()
        if sec not in _SCHEMA:
            raise SpecError(f"unknown section [{section}] at {_find_line(path, section)}")
        for key, raw in cp.items(section):
            k = key.lower()
            if k not in _SCHEMA[sec]:
                raise SpecError(
                    f"unknown key {key!r} in [{section}] at {_find_line(path, key)}"
                )
            try:
                values[(sec, k)] = _SCHEMA[sec][k](raw)
            except ValueError as exc:
                raise SpecError(
                    f"bad value for {section}.{key} at {_find_line(path, key)}: {exc}"
                ) from exc

    for sec, key in (("system", "m"), ("system", "data_rate_bps")):
        if (sec, key) not in values:
            raise SpecError(f"missing required key {sec}.{key}")
    return values


def _build_channel(values: dict) -> ChannelModel:
    model = values[("channel", "model")].lower()
    gg = pe = None
    if model in ("gamma_gamma", "gamma_gamma_pointing"):
        try:
            gg = GammaGammaParams(values[("channel", "alpha")], values[("channel", "beta")])
        except KeyError as exc:
            raise SpecError(f"channel model {model!r} requires alpha and beta") from exc
    if model in ("pointing", "gamma_gamma_pointing"):
        try:
            pe = PointingParams(values[("channel", "a0")], values[("channel", "gamma")])
        except KeyError as exc:
            raise SpecError(f"channel model {model!r} requires a0 and gamma") from exc
    if model not in ("none", "gamma_gamma", "pointing", "gamma_gamma_pointing"):
        raise SpecError(f"unknown channel model {model!r}")
    return ChannelModel(
        gg=gg,
        pe=pe,
        normalize_mean=values[("channel", "normalize_mean")],
        Lc=values[("channel", "coherence_length")],
    )


def _powers_dbm(values: dict) -> tuple[float, ...]:
    if ("sweep", "power_dbm") in values and ("sweep", "power_w") in values:
        raise SpecError("give either sweep.power_dbm or sweep.power_w, not both")
    if ("sweep", "power_dbm") in values:
        return values[("sweep", "power_dbm")]
    if ("sweep", "power_w") in values:
        return tuple(watt_to_dbm(p) for p in values[("sweep", "power_w")])
    raise SpecError("missing sweep.power_dbm (or sweep.power_w)")


def _build_config(values: dict, receiver) -> SimConfig:
    try:
        return SimConfig(
            M=values[("system", "m")],
            data_rate_bps=values[("system", "data_rate_bps")],
            channel=_build_channel(values),
            receiver=receiver,
            powers_dbm=_powers_dbm(values),
            N0=values[("system", "n0")],
            responsivity=values[("system", "responsivity")],
            min_errors=values[("sweep", "min_errors")],
            max_bits=values[("sweep", "max_bits")],
            seed=values[("run", "seed")],
            n_streams=values[("run", "streams")],
            blocks_per_wave=values[("run", "blocks_per_wave")],
            stream_blocks=values.get(("run", "stream_blocks")),
        )
    except ValueError as exc:
        raise SpecError(str(exc)) from exc


def _apply_overrides(values: dict, args) -> dict:
    values = dict(values)
    if args.seed is not None:
        values[("run", "seed")] = args.seed
    if getattr(args, "max_bits", None) is not None:
        values[("sweep", "max_bits")] = args.max_bits
    if getattr(args, "min_errors", None) is not None:
        values[("sweep", "min_errors")] = args.min_errors
    return values


def _header_lines(values: dict, command: str) -> list[str]:
    lines = [f"# command = {command}"]
    for (sec, key) in sorted(values):
        v = values[(sec, key)]
        if isinstance(v, tuple):
            v = ",".join(getattr(r, "name", str(r)) + _rx_suffix(r) if hasattr(r, "name") else str(r) for r in v)
        lines.append(f"# config: {sec}.{key} = {v}")
    lines.append(f"# seed = {values[('run', 'seed')]}")
    return lines


def _rx_suffix(rx) -> str:
    if isinstance(rx, DfbSpec):
        alpha = "" if rx.alpha_sel is None else f":{rx.alpha_sel}"
        return f":{rx.L_m}{alpha}"
    if isinstance(rx, MlsdSpec):
        return f":{rx.L}"
    return ""


def _rx_label(rx) -> str:
    return rx.name


def _rx_lm(rx) -> str:
    if isinstance(rx, DfbSpec):
        return str(rx.L_m)
    return ""


def _emit(out_path, lines):
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get(THREADS_ENV)
    return int(env) if env else 1


def cmd_ber_sweep(args) -> int:
    values = _apply_overrides(load_spec(args.config), args)
    receivers = values.get(("receivers", "list"))
    if not receivers:
        raise SpecError("missing receivers.list")
    configs = [_build_config(values, rx) for rx in receivers]
    powers = configs[0].powers_dbm
    threads = _threads(args)

    lines = _header_lines(values, "ber-sweep")
    lines.append("power_dbm,receiver,M,L_m,data_rate_bps,si,ber,ci95,bits,errors,seed")
    failures = []
    from concurrent.futures import ThreadPoolExecutor

    def one(task):
        power, cfg = task
        return run_ber_point(cfg, power)

    tasks = [(p, cfg) for p in powers for cfg in configs]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, tasks))
    else:
        results = [one(t) for t in tasks]

    cfg0 = configs[0]
    si = cfg0.channel.scintillation_index()
    for (power, cfg), est in zip(tasks, results):
        rx = cfg.receiver
        lines.append(
            f"{power},{_rx_label(rx)},{cfg.M},{_rx_lm(rx)},{cfg.data_rate_bps},"
            f"{si},{est.ber},{est.ci95},{est.bits},{est.errors},{cfg.seed}"
        )
        if args.genie_bound and cfg is configs[-1]:
            try:
                d2 = cfg.two_d(dbm_to_watt(power)) ** 2 / cfg.N0
                bep = genie_bound(d2, cfg.M, cfg.channel)
                lines.append(
                    f"{power},genie,{cfg.M},,{cfg.data_rate_bps},{si},{bep},0.0,0,0,{cfg.seed}"
                )
            except Exception as exc:  # noqa: BLE001 - reported as a partial failure
                failures.append(f"genie bound at {power} dBm: {exc}")

    _emit(args.out, lines)
    for f in failures:
        print(f"failed: {f}", file=sys.stderr)
    return 1 if failures else 0


def cmd_genie_bound(args) -> int:
    values = _apply_overrides(load_spec(args.config), args)
    cfg = _build_config(values, PcsiSpec())
    lines = _header_lines(values, "genie-bound")
    lines.append("power_dbm,M,si,bep")
    failures = []
    si = cfg.channel.scintillation_index()
    for power in cfg.powers_dbm:
        try:
            d2 = cfg.two_d(dbm_to_watt(power)) ** 2 / cfg.N0
            bep = genie_bound(d2, cfg.M, cfg.channel)
            lines.append(f"{power},{cfg.M},{si},{bep}")
        except Exception as exc:  # noqa: BLE001
            failures.append(f"{power} dBm: {exc}")
    _emit(args.out, lines)
    for f in failures:
        print(f"failed: {f}", file=sys.stderr)
    return 1 if failures else 0


def _numeric_cdf(model: ChannelModel, samples: np.ndarray):
    """CDF on a dense grid by trapezoid integration of the model pdf."""
    hi = float(samples.max()) * 1.05
    lo = min(float(samples.min()) * 0.5, 1e-6)
    grid = np.concatenate([[0.0], np.geomspace(lo, hi, 6000)])
    pdf = np.concatenate([[0.0], model.pdf(grid[1:])])
    cdf = integrate.cumulative_trapezoid(pdf, grid, initial=0.0)

    def cdf_fn(x):
        return np.interp(x, grid, cdf)

    return cdf_fn, float(cdf[-1])


def cmd_channel_stats(args) -> int:
    values = _apply_overrides(load_spec(args.config), args)
    model = _build_channel(values)
    if model.is_deterministic:
        raise SpecError("channel-stats needs a fading channel model")
    n = values[("run", "samples")]
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([values[("run", "seed")], 0])))
    samples = np.atleast_1d(model.sample(rng, size=n))

    si_emp = float(np.var(samples) / np.mean(samples) ** 2) if model.gg is not None else float("nan")
    si_analytic = model.scintillation_index()

    if model.gg is None:
        # pointing only: closed-form CDF on the (possibly normalized) scale
        s = model.mean_gain_raw() if model.normalize_mean else 1.0
        g2 = model.pe.gamma**2
        bound = model.pe.A0 / s

        def cdf_fn(x):
            return np.clip(x / bound, 0.0, 1.0) ** g2

        norm_total = 1.0
    else:
        cdf_fn, norm_total = _numeric_cdf(model, samples)

    ks = stats.kstest(samples, cdf_fn)
    ks_crit = 1.628 / math.sqrt(n)

    if model.gg is not None and model.pe is None:
        total, _ = integrate.quad(lambda h: model.pdf(h), 0, np.inf, limit=400)
        norm_resid = abs(total - 1.0)
    else:
        norm_resid = abs(norm_total - 1.0)

    lines = _header_lines(values, "channel-stats")
    lines.append(
        "n_samples,mean,si_empirical,si_analytic,ks_stat,ks_critical_1pct,pdf_norm_residual,max_sample"
    )
    lines.append(
        f"{n},{float(np.mean(samples))},{si_emp},{si_analytic},{float(ks.statistic)},"
        f"{ks_crit},{norm_resid},{float(np.max(samples))}"
    )
    _emit(args.out, lines)
    return 0


def cmd_estimator_trace(args) -> int:
    values = _apply_overrides(load_spec(args.config), args)
    receivers = values.get(("receivers", "list"))
    if not receivers:
        raise SpecError("missing receivers.list")
    dfb = next((r for r in receivers if isinstance(r, DfbSpec)), None)
    if dfb is None:
        raise SpecError("estimator-trace requires a dfb receiver in receivers.list")
    cfg = _build_config(values, dfb)
    trace = run_estimator_trace(cfg, values[("run", "trace_symbols")])

    lines = _header_lines(values, "estimator-trace")
    lines.append("k,a_true,a_hat,detected_level,fed_back_error_flag")
    for k, at, ah, det, flag in zip(
        trace["k"], trace["a_true"], trace["a_hat"], trace["detected_level"], trace["fed_back_error_flag"]
    ):
        lines.append(f"{k},{at},{ah},{det},{flag}")
    _emit(args.out, lines)
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="experiment config file")
    p.add_argument("--seed", type=int, default=None, help="master seed override")
    p.add_argument("--out", default=None, help="output CSV path (default stdout)")
    p.add_argument("--threads", type=int, default=None, help=f"worker threads (default ${THREADS_ENV} or 1)")
    p.add_argument("--max-bits", type=int, default=None, help="stopping cap override")
    p.add_argument("--min-errors", type=int, default=None, help="stopping target override")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fso-pam",
        description="M-PAM over free-space optical IM/DD: BER simulation and analytics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ber-sweep", help="Monte Carlo BER vs average receive power")
    _add_common(p)
    p.add_argument("--genie-bound", action="store_true", help="append analytic Genie Bound rows")
    p.set_defaults(func=cmd_ber_sweep)

    p = sub.add_parser("genie-bound", help="analytic perfect-CSI average BEP")
    _add_common(p)
    p.set_defaults(func=cmd_genie_bound)

    p = sub.add_parser("channel-stats", help="fading sampler diagnostics")
    _add_common(p)
    p.set_defaults(func=cmd_channel_stats)

    p = sub.add_parser("estimator-trace", help="amplitude-estimate time series")
    _add_common(p)
    p.set_defaults(func=cmd_estimator_trace)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

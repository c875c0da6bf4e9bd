"""Monte Carlo engine: transmitter, fading, noise and receivers wired into
reproducible BER experiments.

Randomness is counter-based (Philox) with one substream per (power point,
stream), so results are bit-identical regardless of how many workers execute
the sweep.  Each stream bootstraps the DFB estimator once with exactly L_m
pilot symbols; pilots are excluded from the error count.
"""

from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from . import _kernels
from .channel import ChannelModel
from .constellation import hamming_table, min_distance_from_power

__all__ = [
    "PcsiSpec",
    "DfbSpec",
    "MlsdSpec",
    "SimConfig",
    "BerEstimate",
    "run_ber_point",
    "run_sweep",
    "run_estimator_trace",
    "dbm_to_watt",
    "watt_to_dbm",
    "N0_DEFAULT",
]

# Thermal noise floor used throughout: -174 dBm/Hz into a 50 ohm front end,
# one-sided, in A^2/Hz.
N0_DEFAULT = 1.59e-22

_Z95 = 1.959963984540054


def dbm_to_watt(p_dbm: float) -> float:
    return 1e-3 * 10.0 ** (p_dbm / 10.0)


def watt_to_dbm(p_w: float) -> float:
    if p_w <= 0:
        raise ValueError("power must be positive")
    return 10.0 * math.log10(p_w / 1e-3)


@dataclass(frozen=True)
class PcsiSpec:
    """Detection with perfect CSI (the per-block gain is handed to the slicer)."""

    name = "pcsi"


@dataclass(frozen=True)
class DfbSpec:
    """Decision-feedback receiver with selective-store estimation."""

    L_m: int
    alpha_sel: int | None = None
    genie_feedback: bool = False  # test mode: store true levels, not decisions

    name = "dfb"


@dataclass(frozen=True)
class MlsdSpec:
    """Brute-force GLRT-MLSD reference over non-overlapping windows of L."""

    L: int

    name = "mlsd"


ReceiverSpec = Union[PcsiSpec, DfbSpec, MlsdSpec]


@dataclass(frozen=True)
class SimConfig:
    """Full description of one BER experiment."""

    M: int
    data_rate_bps: float
    channel: ChannelModel
    receiver: ReceiverSpec
    powers_dbm: tuple[float, ...]
    N0: float = N0_DEFAULT
    responsivity: float = 1.0
    min_errors: int = 100
    max_bits: int = 10_000_000
    seed: int = 0
    n_streams: int = 4
    blocks_per_wave: int = 8
    # Re-bootstrap the DFB estimator with fresh pilots every stream_blocks
    # coherence blocks.  None keeps one bootstrap per stream; with mutually
    # independent block gains a large downward jump can freeze the
    # selective-store estimator (nothing is detected at >= alpha_sel any
    # more), so quasi-static operation is emulated with stream_blocks=1.
    stream_blocks: int | None = None

    def __post_init__(self):
        if self.M < 2 or (self.M & (self.M - 1)) != 0:
            raise ValueError("M must be a power of two >= 2")
        if self.data_rate_bps <= 0:
            raise ValueError("data_rate_bps must be positive")
        if self.N0 < 0:
            raise ValueError("N0 must be non-negative")
        if self.responsivity <= 0:
            raise ValueError("responsivity must be positive")
        if not self.powers_dbm:
            raise ValueError("powers_dbm must be non-empty")
        if any(b >= a for a, b in zip(self.powers_dbm[1:], self.powers_dbm)):
            raise ValueError("power sweep must be strictly increasing")
        if self.min_errors < 1:
            raise ValueError("min_errors must be >= 1")
        if self.max_bits < 1:
            raise ValueError("max_bits must be >= 1")
        if self.n_streams < 1 or self.blocks_per_wave < 1:
            raise ValueError("n_streams and blocks_per_wave must be >= 1")
        rx = self.receiver
        if isinstance(rx, DfbSpec):
            if rx.L_m < 1:
                raise ValueError("L_m must be >= 1")
            alpha = rx.alpha_sel if rx.alpha_sel is not None else self.M - 1
            if not 1 <= alpha <= self.M - 1:
                raise ValueError("alpha_sel must be in {1..M-1}")
            if self.channel.Lc > 1 and rx.L_m * self.M / (self.M - alpha) >= self.channel.Lc / 10:
                warnings.warn(
                    "selective-store window L_m*M/(M-alpha) is not far below Lc/10; "
                    "estimator tracking may lag the fading",
                    stacklevel=2,
                )
        elif isinstance(rx, MlsdSpec):
            if rx.L < 1:
                raise ValueError("MLSD window L must be >= 1")
            if self.M**rx.L > 10**6:
                raise ValueError("M^L exceeds the exhaustive MLSD budget")

    @property
    def Ts(self) -> float:
        return math.log2(self.M) / self.data_rate_bps

    def two_d(self, power_w: float) -> float:
        return min_distance_from_power(power_w, self.Ts, self.responsivity, self.M)


@dataclass(frozen=True)
class BerEstimate:
    """Bit-error tally with a Wilson 95% interval half-width."""

    errors: int
    bits: int
    ber: float
    ci95: float
    pilot_symbols: int = 0
    data_symbols: int = 0

    @classmethod
    def from_counts(cls, errors: int, bits: int, pilot_symbols: int = 0, data_symbols: int = 0):
        ber = errors / bits if bits else 0.0
        return cls(errors, bits, ber, _wilson_halfwidth(errors, bits), pilot_symbols, data_symbols)


def _wilson_halfwidth(errors: int, n: int, z: float = _Z95) -> float:
    if n == 0:
        return 0.0
    p = errors / n
    denom = 1.0 + z * z / n
    return z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom


def _stream_rng(seed: int, power_dbm: float, stream: int) -> np.random.Generator:
    pow_bits = int(np.float64(power_dbm).view(np.uint64))
    ss = np.random.SeedSequence([int(seed), pow_bits, int(stream)])
    return np.random.Generator(np.random.Philox(ss))


def _pcsi_detect_array(r: np.ndarray, A: np.ndarray, M: int) -> np.ndarray:
    det = np.floor(r / A + 0.5)
    det = np.where(r < 0, 0.0, det)
    return np.clip(det, 0, M - 1).astype(np.int64)


def _mlsd_hypotheses(M: int, L: int) -> np.ndarray:
    hyp = np.array(list(itertools.product(range(M), repeat=L)), dtype=np.float64)
    return hyp[1:]  # drop the all-zero subsequence


def _mlsd_detect_block(r_block: np.ndarray, M: int, L: int, hyp_cache: dict) -> np.ndarray:
    out = np.empty(r_block.size, dtype=np.int64)
    n_full = r_block.size // L
    for length, sl in ((L, slice(0, n_full * L)), (r_block.size - n_full * L, slice(n_full * L, None))):
        if length == 0:
            continue
        if length not in hyp_cache:
            hyp_cache[length] = _mlsd_hypotheses(M, length)
        hyp = hyp_cache[length]
        windows = r_block[sl].reshape(-1, length)
        metric = (windows @ hyp.T) ** 2 / np.sum(hyp * hyp, axis=1)
        idx = np.argmax(metric, axis=1)  # first max = lexicographically smallest
        out[sl] = hyp[idx].astype(np.int64).reshape(-1)
    return out


class _Stream:
    """One independent symbol stream: own RNG substream and receiver state."""

    def __init__(self, config: SimConfig, power_dbm: float, stream_id: int):
        self.cfg = config
        self.rng = _stream_rng(config.seed, power_dbm, stream_id)
        self.two_d = config.two_d(dbm_to_watt(power_dbm))
        self.sigma = math.sqrt(config.N0 / 2.0) if config.N0 > 0 else 0.0
        self.started = False
        self.blocks_done = 0
        rx = config.receiver
        if isinstance(rx, DfbSpec):
            self.alpha = rx.alpha_sel if rx.alpha_sel is not None else config.M - 1
            self.buf_r = np.zeros(rx.L_m, dtype=np.float64)
            self.buf_m = np.zeros(rx.L_m, dtype=np.int64)
            self.istate = np.zeros(1, dtype=np.int64)
            self.fstate = np.zeros(1, dtype=np.float64)
        self.hyp_cache: dict = {}

    def _draw_wave(self, n_blocks: int, n_symbols: int | None = None):
        cfg = self.cfg
        Lc = cfg.channel.Lc
        n = n_blocks * Lc if n_symbols is None else min(n_blocks * Lc, n_symbols)
        gains = np.atleast_1d(cfg.channel.sample(self.rng, size=n_blocks))
        counts = np.minimum(np.maximum(n - Lc * np.arange(n_blocks), 0), Lc)
        h = np.repeat(gains, counts)
        levels = self.rng.integers(0, cfg.M, size=n)
        noise = self.rng.normal(0.0, self.sigma, size=n) if self.sigma > 0 else np.zeros(n)
        return h, levels, noise

    def _bootstrap_from(self, r: np.ndarray, sl: slice) -> None:
        rx = self.cfg.receiver
        self.buf_r[:] = r[sl]
        self.buf_m[:] = self.cfg.M - 1
        self.fstate[0] = float(r[sl].sum()) / (rx.L_m * (self.cfg.M - 1))
        self.istate[0] = 0

    def run_wave(self, ham: np.ndarray, n_blocks: int):
        """Simulate n_blocks coherence blocks; returns (bit_errors, data_symbols, pilots)."""
        cfg = self.cfg
        rx = cfg.receiver
        Lc = cfg.channel.Lc
        h, levels, noise = self._draw_wave(n_blocks)

        boot_blocks: set[int] = set()
        if isinstance(rx, DfbSpec):
            for b in range(n_blocks):
                first = not self.started and b == 0
                periodic = (
                    cfg.stream_blocks is not None
                    and (self.blocks_done + b) % cfg.stream_blocks == 0
                )
                if first or periodic:
                    boot_blocks.add(b)
                    levels[b * Lc : b * Lc + rx.L_m] = cfg.M - 1

        A = self.two_d * h
        r = A * levels + noise
        pilot_mask = np.zeros(levels.size, dtype=bool)

        if isinstance(rx, PcsiSpec):
            det = _pcsi_detect_array(r, A, cfg.M)
        elif isinstance(rx, MlsdSpec):
            det = np.empty_like(levels)
            for b in range(n_blocks):
                sl = slice(b * Lc, (b + 1) * Lc)
                det[sl] = _mlsd_detect_block(r[sl], cfg.M, rx.L, self.hyp_cache)
        else:
            det = np.empty_like(levels)
            for b in range(n_blocks):
                start = b * Lc
                if b in boot_blocks:
                    psl = slice(start, start + rx.L_m)
                    self._bootstrap_from(r, psl)
                    det[psl] = cfg.M - 1
                    pilot_mask[psl] = True
                    body = slice(start + rx.L_m, start + Lc)
                else:
                    body = slice(start, start + Lc)
                det[body], _, _, _ = _kernels.dfb_stream(
                    r[body],
                    levels[body],
                    cfg.M,
                    rx.L_m,
                    self.alpha,
                    rx.genie_feedback,
                    self.buf_r,
                    self.buf_m,
                    self.istate,
                    self.fstate,
                )

        self.started = True
        self.blocks_done += n_blocks
        data = ~pilot_mask
        pilots = int(pilot_mask.sum())
        errors = int(ham[levels[data], det[data]].sum())
        return errors, levels.size - pilots, pilots


def run_ber_point(config: SimConfig, power_dbm: float) -> BerEstimate:
    """Monte Carlo BER at one average receive power, per the stopping rule."""
    ham = hamming_table(config.M)
    bps = int(math.log2(config.M))
    streams = [_Stream(config, power_dbm, s) for s in range(config.n_streams)]
    errors = 0
    bits = 0
    pilots = 0
    data_symbols = 0
    while errors < config.min_errors and bits < config.max_bits:
        for st in streams:
            e, nd, np_ = st.run_wave(ham, config.blocks_per_wave)
            errors += e
            data_symbols += nd
            bits += nd * bps
            pilots += np_
    return BerEstimate.from_counts(errors, bits, pilot_symbols=pilots, data_symbols=data_symbols)


def run_sweep(config: SimConfig, threads: int = 1) -> list[tuple[float, BerEstimate]]:
    """One run_ber_point per power; rows independent, order-stable, and
    identical for any thread count."""
    if threads <= 1 or len(config.powers_dbm) == 1:
        return [(p, run_ber_point(config, p)) for p in config.powers_dbm]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(lambda p: run_ber_point(config, p), config.powers_dbm))
    return list(zip(config.powers_dbm, results))


def run_estimator_trace(config: SimConfig, n_symbols: int):
    """Amplitude-estimate time series for the DFB receiver (no genie feedback
    unless the config asks for it).

    Returns a dict of equal-length arrays: k, a_true, a_hat, detected_level,
    fed_back_error_flag.  The first L_m rows are the bootstrap pilots.
    """
    rx = config.receiver
    if not isinstance(rx, DfbSpec):
        raise ValueError("estimator traces require a DFB receiver")
    if n_symbols <= rx.L_m:
        raise ValueError("n_symbols must exceed the pilot count L_m")

    power_dbm = config.powers_dbm[0]
    st = _Stream(config, power_dbm, 0)
    cfg = config
    Lc = cfg.channel.Lc
    n_blocks = -(-n_symbols // Lc)
    h, levels, noise = st._draw_wave(n_blocks, n_symbols=n_symbols)
    levels[: rx.L_m] = cfg.M - 1
    A = st.two_d * h
    r = A * levels + noise

    st.buf_r[:] = r[: rx.L_m]
    st.buf_m[:] = cfg.M - 1
    st.fstate[0] = float(r[: rx.L_m].sum()) / (rx.L_m * (cfg.M - 1))
    st.istate[0] = 0

    det_body, a_body, _, stored = _kernels.dfb_stream(
        r[rx.L_m :],
        levels[rx.L_m :],
        cfg.M,
        rx.L_m,
        st.alpha,
        rx.genie_feedback,
        st.buf_r,
        st.buf_m,
        st.istate,
        st.fstate,
    )
    # running partial estimate while the pilots arrive
    a_pilot = np.cumsum(r[: rx.L_m]) / ((np.arange(rx.L_m) + 1) * (cfg.M - 1))
    detected = np.concatenate([np.full(rx.L_m, cfg.M - 1, dtype=np.int64), det_body])
    a_hat = np.concatenate([a_pilot, a_body])
    fed_back_error = np.concatenate(
        [
            np.zeros(rx.L_m, dtype=np.uint8),
            (stored.astype(bool) & (det_body != levels[rx.L_m :])).astype(np.uint8),
        ]
    )
    return {
        "k": np.arange(n_symbols),
        "a_true": A,
        "a_hat": a_hat,
        "detected_level": detected,
        "fed_back_error_flag": fed_back_error,
    }

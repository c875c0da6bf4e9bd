#!/usr/bin/env python3
"""Measure the DFB receiver's power gap to the perfect-CSI bound at BER 1e-3.

Both receivers are run on identical channel and noise substreams (common
random numbers), so the BER ratio isolates the estimation penalty; the local
slope of the analytic bound curve converts it into dB.

Example:
    python3 scripts/gap_to_bound.py --regime weak --m 2 4 --lm 12
"""

import argparse
import math

import numpy as np
from scipy.optimize import brentq

from fso_pam.analytics import genie_bound
from fso_pam.channel import ChannelModel, GammaGammaParams
from fso_pam.simcore import (
    DfbSpec,
    N0_DEFAULT,
    PcsiSpec,
    SimConfig,
    dbm_to_watt,
    run_ber_point,
)

REGIMES = {
    "weak": GammaGammaParams(17.13, 16.04),
    "strong": GammaGammaParams(2.23, 1.54),
}
RATE = 1e10


def d2_over_N0(p_dbm: float, M: int) -> float:
    Ts = math.log2(M) / RATE
    return (2.0 * math.sqrt(Ts) * dbm_to_watt(p_dbm) / (M - 1)) ** 2 / N0_DEFAULT


def bound_crossing(M: int, model: ChannelModel, target: float) -> float:
    def f(p):
        return math.log10(genie_bound(d2_over_N0(p, M), M, model)) - math.log10(target)

    prev, fprev = -60.0, None
    for p in np.arange(-60.0, 0.1, 1.0):
        fp = f(p)
        if fprev is not None and min(fprev, fp) <= 0.0 <= max(fprev, fp):
            return brentq(f, prev, p)
        prev, fprev = p, fp
    raise RuntimeError("bound never reaches the target BER in the scanned range")


def measure_gap(M: int, L_m: int, model: ChannelModel, target: float, seed: int) -> float:
    pstar = bound_crossing(M, model, target)
    d = 0.05
    slope = (
        math.log10(genie_bound(d2_over_N0(pstar + d, M), M, model))
        - math.log10(genie_bound(d2_over_N0(pstar - d, M), M, model))
    ) / (2 * d)

    def ber(receiver):
        cfg = SimConfig(
            M=M,
            data_rate_bps=RATE,
            channel=model,
            receiver=receiver,
            powers_dbm=(pstar,),
            min_errors=30_000,
            max_bits=40_000_000,
            seed=seed,
            blocks_per_wave=64,
            stream_blocks=1,
        )
        return run_ber_point(cfg, pstar).ber

    return (math.log10(ber(DfbSpec(L_m=L_m))) - math.log10(ber(PcsiSpec()))) / (-slope)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--regime", choices=REGIMES, default="weak")
    ap.add_argument("--m", type=int, nargs="+", default=[2, 4])
    ap.add_argument("--lm", type=int, default=12)
    ap.add_argument("--target-ber", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()

    model = ChannelModel(gg=REGIMES[args.regime], Lc=1000)
    print(f"{args.regime} turbulence, L_m={args.lm}, target BER {args.target_ber:g}")
    for M in args.m:
        gap = measure_gap(M, args.lm, model, args.target_ber, args.seed)
        print(f"  M={M}: gap to bound {gap:.3f} dB")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

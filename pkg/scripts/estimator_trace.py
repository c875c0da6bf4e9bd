#!/usr/bin/env python3
"""Amplitude-estimate traces at A^2/N0 = 20 dB for several memory lengths.

Reproduces the qualitative estimator behaviour: the trace standard deviation
shrinks as 1/sqrt(L_m) while the time mean stays on the true amplitude.

Example:
    python3 scripts/estimator_trace.py --lm 1 2 8 --symbols 20000 --out-prefix /tmp/trace
"""

import argparse
import math

import numpy as np

from fso_pam.channel import ChannelModel
from fso_pam.simcore import DfbSpec, PcsiSpec, SimConfig, run_estimator_trace, watt_to_dbm


def config_for(L_m: int, a2_over_n0_db: float, N0: float, rate: float) -> SimConfig:
    A = math.sqrt(N0 * 10 ** (a2_over_n0_db / 10))
    Ts = 1.0 / rate  # OOK: one bit per symbol
    p_w = A / (2 * math.sqrt(Ts))
    return SimConfig(
        M=2,
        data_rate_bps=rate,
        channel=ChannelModel(Lc=10**9),  # fixed gain over the whole trace
        receiver=DfbSpec(L_m=L_m),
        powers_dbm=(watt_to_dbm(p_w),),
        N0=N0,
    )


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lm", type=int, nargs="+", default=[1, 2, 8])
    ap.add_argument("--symbols", type=int, default=20_000)
    ap.add_argument("--snr-db", type=float, default=20.0, help="A^2/N0 in dB")
    ap.add_argument("--n0", type=float, default=1e-20)
    ap.add_argument("--rate", type=float, default=1e10)
    ap.add_argument("--out-prefix", default=None, help="write <prefix>_Lm<k>.csv per run")
    args = ap.parse_args()

    print(f"{'L_m':>4} {'mean(A_hat)/A':>14} {'std(A_hat)/A':>13} {'fed-back errors':>16}")
    for L_m in args.lm:
        cfg = config_for(L_m, args.snr_db, args.n0, args.rate)
        tr = run_estimator_trace(cfg, args.symbols)
        A = tr["a_true"][0]
        body = tr["a_hat"][L_m:]
        print(
            f"{L_m:>4} {body.mean() / A:>14.5f} {body.std() / A:>13.5f} "
            f"{int(tr['fed_back_error_flag'].sum()):>16}"
        )
        if args.out_prefix:
            path = f"{args.out_prefix}_Lm{L_m}.csv"
            cols = np.column_stack([tr["k"], tr["a_true"], tr["a_hat"], tr["detected_level"]])
            np.savetxt(path, cols, delimiter=",", header="k,a_true,a_hat,detected_level")
            print(f"     wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

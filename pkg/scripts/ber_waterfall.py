#!/usr/bin/env python3
"""Run a BER-vs-power sweep from a config file and print the table alongside
the analytic perfect-CSI bound.

Example:
    python3 scripts/ber_waterfall.py --config scripts/configs/weak_ook.cfg --threads 4
"""

import argparse
import math
import sys

from fso_pam.analytics import genie_bound
from fso_pam.channel import QuadratureError
from fso_pam.cli import _build_config, load_spec
from fso_pam.simcore import dbm_to_watt, run_sweep


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args()

    values = load_spec(args.config)
    if args.seed is not None:
        values[("run", "seed")] = args.seed
    receivers = values.get(("receivers", "list"))
    if not receivers:
        print("config has no receivers.list", file=sys.stderr)
        return 2

    print(f"{'power_dbm':>10} {'receiver':>10} {'ber':>12} {'ci95':>10} {'bound':>12}")
    for rx in receivers:
        cfg = _build_config(values, rx)
        label = rx.name + (f"({rx.L_m})" if hasattr(rx, "L_m") else "")
        for power, est in run_sweep(cfg, threads=args.threads):
            try:
                d2 = cfg.two_d(dbm_to_watt(power)) ** 2 / cfg.N0
                bound = f"{genie_bound(d2, cfg.M, cfg.channel):.4e}"
            except QuadratureError:
                bound = "n/a"
            print(f"{power:>10.2f} {label:>10} {est.ber:>12.4e} {est.ci95:>10.2e} {bound:>12}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

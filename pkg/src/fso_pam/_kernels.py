"""Numba-compiled inner loop for the decision-feedback receiver stream.

The DFB receiver is inherently sequential (each decision feeds the next
estimate), so the per-symbol loop is compiled.  State is carried in small
arrays so a stream can be processed in waves without losing the estimator
memory across coherence blocks.
"""

from __future__ import annotations

import numpy as np
from numba import njit

A_HAT_EPS = 1e-12


@njit(cache=True, nogil=True)
def dfb_stream(
    r,
    true_levels,
    M,
    L_m,
    alpha_sel,
    genie_feedback,
    buf_r,
    buf_m,
    istate,
    fstate,
):
    """Run the DFB detect/selective-store loop over one chunk of samples.

    buf_r/buf_m are circular buffers of length L_m; istate = [write position],
    fstate = [A_hat].  Returns (detected, a_hat_trace, fail_flags, stored_flags);
    a_hat_trace holds the estimate after processing each symbol.
    """
    n = r.shape[0]
    detected = np.empty(n, np.int64)
    a_trace = np.empty(n, np.float64)
    fail = np.zeros(n, np.uint8)
    stored = np.zeros(n, np.uint8)

    pos = istate[0]
    a_hat = fstate[0]
    top = M - 1

    for k in range(n):
        rk = r[k]
        if a_hat < A_HAT_EPS:
            det = 0
            fail[k] = 1
        elif rk < 0.0:
            det = 0
        elif rk > top * a_hat:
            det = top
        else:
            det = int(np.floor(rk / a_hat + 0.5))
            if det > top:
                det = top
        detected[k] = det

        fb = true_levels[k] if genie_feedback else det
        if fb >= alpha_sel:
            buf_r[pos] = rk
            buf_m[pos] = fb
            pos += 1
            if pos == L_m:
                pos = 0
            stored[k] = 1
            if alpha_sel == top:
                s = 0.0
                for i in range(L_m):
                    s += buf_r[i]
                a_hat = s / (L_m * top)
            else:
                num = 0.0
                den = 0.0
                for i in range(L_m):
                    num += buf_r[i] * buf_m[i]
                    den += buf_m[i] * buf_m[i]
                a_hat = num / den if den > 0.0 else 0.0
        a_trace[k] = a_hat

    istate[0] = pos
    fstate[0] = a_hat
    return detected, a_trace, fail, stored

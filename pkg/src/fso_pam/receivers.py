"""Detectors: perfect-CSI threshold, decision-feedback symbol-by-symbol with
selective-store channel estimation, and the brute-force GLRT-MLSD reference.

The DFB receiver detects each symbol with the floor rule using the current
amplitude estimate A_hat, then (selective-store strategy) keeps only the L_m
most recent samples detected at level >= alpha_sel to refresh the estimate.
With alpha_sel = M-1 the estimate is sum(r_i)/(L_m*(M-1)); for lower
thresholds the stored levels are retained and the least-squares estimate
sum(r_i*m_i)/sum(m_i^2) is used instead.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ReceivedSample",
    "DfbReceiverState",
    "pcsi_detect",
    "glrt_metric",
    "glrt_amplitude_estimate",
    "mlsd_search",
    "dfb_detect",
    "sss_update",
    "bootstrap_pilots",
    "A_HAT_EPS",
]

# Below this the amplitude estimate counts as an estimation failure: the
# receiver outputs level 0 and flags the symbol instead of dividing by ~0.
A_HAT_EPS = 1e-12

_MLSD_BUDGET = 10**6


@dataclass(frozen=True)
class ReceivedSample:
    """One integrate-and-sample observable r(k) = A*m(k) + n(k)."""

    r: float
    k: int = 0

    def __post_init__(self):
        if not math.isfinite(self.r):
            raise ValueError(f"received sample must be finite, got {self.r}")


def pcsi_detect(r: float, A: float, M: int) -> int:
    """Nearest-level decision with the true amplitude A (perfect CSI)."""
    if A <= 0:
        raise ValueError("amplitude A must be positive")
    if r < 0:
        return 0
    if r > (M - 1) * A:
        return M - 1
    return min(int(math.floor(r / A + 0.5)), M - 1)


def _as_vectors(r_window, m_hypothesis):
    r = np.asarray(r_window, dtype=float)
    m = np.asarray(m_hypothesis, dtype=float)
    if r.shape != m.shape or r.ndim != 1:
        raise ValueError("r_window and m_hypothesis must be 1-D and equal length")
    if not np.any(m):
        raise ValueError("all-zero hypothesis: metric/estimate undefined")
    return r, m


def glrt_metric(r_window, m_hypothesis) -> float:
    """GLRT decision metric (r . m)^2 / ||m||^2."""
    r, m = _as_vectors(r_window, m_hypothesis)
    return float(np.dot(r, m) ** 2 / np.dot(m, m))


def glrt_amplitude_estimate(r_window, m_hypothesis) -> float:
    """ML amplitude estimate (r . m) / ||m||^2 for a hypothesized subsequence."""
    r, m = _as_vectors(r_window, m_hypothesis)
    return float(np.dot(r, m) / np.dot(m, m))


def mlsd_search(r_window, M: int, L: int | None = None) -> tuple[int, ...]:
    """Exhaustive GLRT-MLSD over all M^L level subsequences.

    The all-zero hypothesis is excluded (its metric is undefined); ties are
    broken toward the lexicographically smallest subsequence.
    """
    r = np.asarray(r_window, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("r_window must be a non-empty 1-D sequence")
    if L is None:
        L = r.size
    if L != r.size:
        raise ValueError("window length L must match len(r_window)")
    if M**L > _MLSD_BUDGET:
        raise ValueError(f"M^L = {M}**{L} exceeds the exhaustive-search budget")

    best: tuple[int, ...] | None = None
    best_metric = -math.inf
    for hyp in itertools.product(range(M), repeat=L):
        if not any(hyp):
            continue
        m = np.array(hyp, dtype=float)
        metric = np.dot(r, m) ** 2 / np.dot(m, m)
        if metric > best_metric:
            best_metric = metric
            best = hyp
    assert best is not None
    return best


@dataclass
class DfbReceiverState:
    """Selective-store buffer plus the current amplitude estimate.

    With alpha_sel = M-1 only the sample values are stored; otherwise the
    detected levels are stored alongside (memory 2*L_m).
    """

    M: int
    L_m: int
    alpha_sel: int | None = None
    buffer_r: deque = field(default_factory=deque)
    buffer_m: deque = field(default_factory=deque)
    A_hat: float = 0.0
    bootstrapped: bool = False
    estimation_failure: bool = False

    def __post_init__(self):
        if self.M < 2 or (self.M & (self.M - 1)) != 0:
            raise ValueError("M must be a power of two >= 2")
        if self.L_m < 1:
            raise ValueError("L_m must be >= 1")
        if self.alpha_sel is None:
            self.alpha_sel = self.M - 1
        if not 1 <= self.alpha_sel <= self.M - 1:
            raise ValueError("alpha_sel must be in {1..M-1}")
        self.buffer_r = deque(self.buffer_r, maxlen=self.L_m)
        self.buffer_m = deque(self.buffer_m, maxlen=self.L_m)

    def window_guard_ok(self, Lc: int) -> bool:
        """Selection guideline: observation window ~ L_m*M/(M-alpha) < Lc/10."""
        return self.L_m * self.M / (self.M - self.alpha_sel) < Lc / 10


def _recompute_estimate(state: DfbReceiverState) -> None:
    if state.alpha_sel == state.M - 1:
        state.A_hat = sum(state.buffer_r) / (state.L_m * (state.M - 1))
    else:
        num = sum(r * m for r, m in zip(state.buffer_r, state.buffer_m))
        den = sum(m * m for m in state.buffer_m)
        state.A_hat = num / den if den > 0 else 0.0


def bootstrap_pilots(state: DfbReceiverState, pilot_samples) -> DfbReceiverState:
    """Initialize the estimator from exactly L_m pilots known to carry M-1."""
    pilots = [float(p) for p in pilot_samples]
    if len(pilots) != state.L_m:
        raise ValueError(f"expected exactly {state.L_m} pilot samples, got {len(pilots)}")
    state.buffer_r.clear()
    state.buffer_m.clear()
    state.buffer_r.extend(pilots)
    state.buffer_m.extend([state.M - 1] * state.L_m)
    state.A_hat = sum(pilots) / (state.L_m * (state.M - 1))
    state.bootstrapped = state.A_hat >= A_HAT_EPS
    return state


def dfb_detect(state: DfbReceiverState, r: float) -> int:
    """Floor-rule decision with the current estimate A_hat.

    Equivalent to argmin over m of (r - A_hat*m)^2.  If the estimate has
    collapsed below the guard the symbol is flagged as an estimation failure
    and level 0 is returned.
    """
    if not state.bootstrapped:
        raise RuntimeError("DFB receiver used before pilot bootstrap")
    if state.A_hat < A_HAT_EPS:
        state.estimation_failure = True
        return 0
    state.estimation_failure = False
    M, A = state.M, state.A_hat
    if r < 0:
        return 0
    if r > (M - 1) * A:
        return M - 1
    return min(int(math.floor(r / A + 0.5)), M - 1)


def sss_update(state: DfbReceiverState, r: float, detected_level: int) -> DfbReceiverState:
    """Selective-store update: keep the sample only if detected >= alpha_sel."""
    if not 0 <= detected_level < state.M:
        raise ValueError(f"detected level must be in 0..{state.M - 1}")
    if detected_level >= state.alpha_sel:
        state.buffer_r.append(float(r))
        state.buffer_m.append(int(detected_level))
        _recompute_estimate(state)
    return state

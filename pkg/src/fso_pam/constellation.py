"""M-PAM signal model: Gray mapping and power/distance/energy conversions.

All electrical quantities live on the receiver side after the integrate-and-
sample front end, so the minimum signal distance at unit channel gain is
``2d = 2*sqrt(Ts)*R*Pbar/(M-1)`` (units A*s^1/2) and the noise term is AWGN
with variance N0/2 per sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Constellation",
    "GrayMap",
    "min_distance_from_power",
    "gray_encode",
    "gray_decode",
    "gray_levels",
    "hamming_table",
    "optical_energy_per_bit",
    "power_delta_for_rate_scaling",
]


def _check_order(M: int) -> int:
    """Validate the modulation order (power of two, 2..32)."""
    if not isinstance(M, (int, np.integer)):
        raise ValueError(f"modulation order must be an integer, got {M!r}")
    M = int(M)
    if M < 2 or (M & (M - 1)) != 0:
        raise ValueError(f"modulation order must be a power of two >= 2, got {M}")
    return M


def min_distance_from_power(Pbar: float, Ts: float, R: float, M: int) -> float:
    """Receiver-side electrical minimum signal distance 2d at h=1.

    2d = 2*sqrt(Ts)*R*Pbar/(M-1), with Pbar the average transmit optical
    power, Ts the symbol duration and R the photodetector responsivity.
    """
    M = _check_order(M)
    if Pbar <= 0 or Ts <= 0 or R <= 0:
        raise ValueError("Pbar, Ts and R must all be positive")
    return 2.0 * math.sqrt(Ts) * R * Pbar / (M - 1)


def power_from_min_distance(two_d: float, Ts: float, R: float, M: int) -> float:
    """Inverse of :func:`min_distance_from_power`."""
    M = _check_order(M)
    if two_d <= 0 or Ts <= 0 or R <= 0:
        raise ValueError("two_d, Ts and R must all be positive")
    return two_d * (M - 1) / (2.0 * math.sqrt(Ts) * R)


def optical_energy_per_bit(Pbar: float, Ts: float, M: int) -> float:
    """Optical-domain energy per bit, Pbar*Ts/log2(M)."""
    M = _check_order(M)
    if Pbar <= 0 or Ts <= 0:
        raise ValueError("Pbar and Ts must be positive")
    return Pbar * Ts / math.log2(M)


def power_delta_for_rate_scaling(K: float) -> float:
    """Transmit-power increase (dB) keeping d and N0 fixed when Ts -> Ts/K.

    Scaling the bandwidth by K scales the noise power by K; holding the
    electrical SNR then needs sqrt(K) more optical power: 10*log10(sqrt(K)).
    """
    if K <= 0:
        raise ValueError("rate multiplier K must be positive")
    return 10.0 * math.log10(math.sqrt(K))


def gray_encode(bits) -> int:
    """Map a Gray codeword (MSB-first bit block) to its level in {0..M-1}.

    The mapping is the binary-reflected Gray code: the level is the position
    of the codeword in the reflected sequence (00, 01, 11, 10 for M=4).
    """
    bits = tuple(int(b) for b in bits)
    if not bits or any(b not in (0, 1) for b in bits):
        raise ValueError(f"bits must be a non-empty block of 0/1, got {bits!r}")
    g = 0
    for b in bits:
        g = (g << 1) | b
    level = g
    mask = g >> 1
    while mask:
        level ^= mask
        mask >>= 1
    return level


def gray_decode(level: int, M: int) -> tuple[int, ...]:
    """Inverse of :func:`gray_encode`: level -> MSB-first Gray codeword."""
    M = _check_order(M)
    if not 0 <= level < M:
        raise ValueError(f"level must be in 0..{M - 1}, got {level}")
    k = int(math.log2(M))
    g = level ^ (level >> 1)
    return tuple((g >> (k - 1 - i)) & 1 for i in range(k))


def gray_levels(M: int) -> np.ndarray:
    """Gray codeword (as integer) of each level, indexed by level."""
    M = _check_order(M)
    lv = np.arange(M)
    return lv ^ (lv >> 1)


def hamming_table(M: int) -> np.ndarray:
    """M x M table of bit errors between true and detected levels."""
    g = gray_levels(M)
    xor = g[:, None] ^ g[None, :]
    return np.array([[bin(int(v)).count("1") for v in row] for row in xor], dtype=np.int64)


@dataclass(frozen=True)
class GrayMap:
    """Bijection between bit blocks and PAM levels (binary-reflected Gray)."""

    M: int

    def __post_init__(self):
        _check_order(self.M)

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.M))

    def level_of_bits(self, bits) -> int:
        bits = tuple(int(b) for b in bits)
        if len(bits) != self.bits_per_symbol:
            raise ValueError(
                f"expected {self.bits_per_symbol} bits for M={self.M}, got {len(bits)}"
            )
        return gray_encode(bits)

    def bits_of_level(self, level: int) -> tuple[int, ...]:
        return gray_decode(level, self.M)


@dataclass(frozen=True)
class Constellation:
    """M-PAM constellation tied to the physical link parameters.

    two_d is derived from (Pbar, Ts, R, M); the invariant
    two_d == 2*sqrt(Ts)*R*Pbar/(M-1) holds exactly among the stored fields.
    """

    M: int
    Ts: float
    R: float
    Pbar: float
    two_d: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "two_d", min_distance_from_power(self.Pbar, self.Ts, self.R, self.M)
        )

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.M))

    @property
    def intensity_step(self) -> float:
        """Minimum optical intensity distance I = 2d/(sqrt(Ts)*R)."""
        return self.two_d / (math.sqrt(self.Ts) * self.R)

    def gray_map(self) -> GrayMap:
        return GrayMap(self.M)

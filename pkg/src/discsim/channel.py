"""BPSK modulation, link budgets and the two-hop channel realizations.

Noise variances are total complex variances (half per real dimension).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class ChannelMode(str, enum.Enum):
    AWGN = "awgn"
    RAYLEIGH = "rayleigh"


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=np.float64) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class LinkBudget:
    """Powers, pathlosses and noise variance of the relay network."""

    p_s: float
    p_r: float
    l_sr: tuple[float, ...]
    l_r: float
    sigma2_n: float = 1.0

    def __post_init__(self):
        l_sr = tuple(float(x) for x in self.l_sr)
        object.__setattr__(self, "l_sr", l_sr)
        for name, v in (("p_s", self.p_s), ("p_r", self.p_r), ("l_r", self.l_r),
                        ("sigma2_n", self.sigma2_n)) + tuple(("l_sr", x) for x in l_sr):
            if not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")

    @classmethod
    def from_snr_db(cls, snr_sr_db: Sequence[float], snr_rd_db: float,
                    sigma2_n: float = 1.0) -> "LinkBudget":
        """Unit transmit powers, pathlosses chosen to hit the average SNRs."""
        l_sr = tuple(float(x) * sigma2_n for x in db_to_linear(list(snr_sr_db)))
        return cls(1.0, 1.0, l_sr, float(db_to_linear(snr_rd_db)) * sigma2_n, sigma2_n)

    @property
    def k(self) -> int:
        return len(self.l_sr)

    @property
    def snr_sr(self) -> np.ndarray:
        return self.p_s * np.array(self.l_sr) / self.sigma2_n

    @property
    def snr_rd(self) -> float:
        return self.p_r * self.l_r / self.sigma2_n

    @property
    def amp_sr(self) -> np.ndarray:
        return np.sqrt(self.p_s * np.array(self.l_sr))


@dataclass(frozen=True)
class ChannelRealization:
    h_sr: np.ndarray
    h_rd: np.ndarray
    mode: ChannelMode


def bpsk_modulate(bits):
    """0 -> +1, 1 -> -1."""
    return 1.0 - 2.0 * np.asarray(bits, dtype=np.float64)


def complex_noise(rng: np.random.Generator, shape, sigma2: float):
    shape = (shape,) if isinstance(shape, int) else tuple(shape)
    z = rng.standard_normal((*shape, 2))
    return np.sqrt(sigma2 / 2.0) * (z[..., 0] + 1j * z[..., 1])


def transmit(symbols, amp, h, sigma2, rng: np.random.Generator):
    """``amp*h*symbols + eta`` with circularly-symmetric complex noise of variance sigma2."""
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    symbols = np.asarray(symbols, dtype=np.float64)
    return amp * h * symbols + complex_noise(rng, symbols.shape, sigma2)


def draw_realization(mode, k: int, rng: np.random.Generator) -> ChannelRealization:
    """One quasi-static draw per link: unit gains for AWGN, CN(0, 1) for Rayleigh."""
    mode = ChannelMode(mode)
    if mode is ChannelMode.AWGN:
        ones = np.ones(k, dtype=np.complex128)
        return ChannelRealization(ones, ones.copy(), mode)
    h = complex_noise(rng, (2, k), 1.0)
    return ChannelRealization(h[0], h[1], mode)

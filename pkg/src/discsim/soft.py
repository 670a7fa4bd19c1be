"""Soft-information algebra: SBE/LLR maps, the SISO encoder and SBE noise statistics.

Arrays follow the convention that the last axis is time; leading axes are
batch dimensions and broadcast through every function here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import GeneratorSequence


def sbe_from_llr(llr):
    """Soft bit estimate ``tanh(l/2)``; infinite LLRs map to +-1."""
    return np.tanh(np.asarray(llr, dtype=np.float64) / 2.0)


def llr_from_sbe(x):
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return 2.0 * np.arctanh(x)


def llr_bpsk(r, h, amp, sigma2):
    """Matched-filter LLR of a BPSK symbol seen as ``amp*h*x + noise``.

    ``sigma2`` is the total complex noise variance (``sigma2/2`` per real
    dimension), which gives ``4*amp*Re(conj(h)*r)/sigma2``.
    """
    if np.any(np.asarray(sigma2) <= 0):
        raise ValueError("sigma2 must be positive")
    r = np.asarray(r)
    h = np.asarray(h)
    return 4.0 * amp * np.real(np.conj(h) * r) / sigma2


def siso_encode(frame, g: GeneratorSequence):
    """Soft encoder output ``x_c(n) = prod_j x_b(n - j)`` over the taps of ``g``.

    The encoder starts in the all-zero state, so taps reaching before the
    frame contribute a factor of +1.
    """
    frame = np.asarray(frame, dtype=np.float64)
    n = frame.shape[-1]
    out = np.ones_like(frame)
    for j, t in enumerate(g.taps):
        if t and j < n:
            out[..., j:] *= frame[..., :n - j]
    return out


def siso_encode_log(frame, g: GeneratorSequence):
    """Same map computed through complex logarithms and a GF-free convolution.

    ``ln x = ln|x| + j*pi`` for negative ``x``; the taps are applied as an
    ordinary sum in the complex field and the result is exponentiated.
    Zero inputs are not representable here.
    """
    frame = np.asarray(frame, dtype=np.float64)
    logs = np.log(frame.astype(np.complex128))
    n = frame.shape[-1]
    acc = np.zeros_like(logs)
    for j, t in enumerate(g.taps):
        if t and j < n:
            acc[..., j:] += logs[..., :n - j]
    return np.exp(acc).real


def prob_inference_encode(probs, g: GeneratorSequence, atol: float = 1e-9):
    """Code-bit probabilities by forward recursion over encoder states.

    ``probs`` has shape (N, 2) with columns ``(Pr0, Pr1)``. The state
    distribution starts at state 0 with probability one; each output
    probability sums the branch probabilities whose code bit equals q.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[1] != 2:
        raise ValueError("probs must have shape (N, 2)")
    if np.any(np.abs(probs.sum(axis=1) - 1.0) > atol):
        raise ValueError("each probability pair must sum to 1")
    m = g.memory
    n_states = 1 << m
    smask = n_states - 1
    mask = g.mask
    state_p = np.zeros(n_states)
    state_p[0] = 1.0
    out = np.zeros_like(probs)
    for n in range(probs.shape[0]):
        new = np.zeros(n_states)
        for s in range(n_states):
            if state_p[s] == 0.0:
                continue
            for u in (0, 1):
                reg = (s << 1) | u
                q = bin(reg & mask).count("1") & 1
                w = probs[n, u] * state_p[s]
                out[n, q] += w
                new[reg & smask] += w
        state_p = new
    return out


def boxplus_llr(ls):
    """LLR of the XOR of independent bits: ``ln((1+P)/(1-P))``, ``P = prod tanh(l/2)``."""
    ls = np.atleast_1d(np.asarray(ls, dtype=np.float64))
    if ls.size == 0:
        raise ValueError("boxplus needs at least one LLR")
    p = np.prod(np.tanh(ls / 2.0))
    return float(llr_from_sbe(p))


@dataclass(frozen=True)
class SbeNoiseStats:
    """Equivalent-noise description ``x_tilde = alpha*x + w_in`` of an SBE frame."""

    mu_w: float
    sigma2_w: float
    alpha: float
    sigma2_in: float

    @property
    def gamma_sr_in(self) -> float:
        if self.sigma2_in == 0.0:
            return np.inf if self.alpha != 0 else 0.0
        return self.alpha**2 / self.sigma2_in

    @property
    def degenerate(self) -> bool:
        return self.alpha <= 0.0


@dataclass(frozen=True)
class EncoderOutputStats:
    p_x: float
    sigma2_out: float
    beta: float


def noise_moments(frame, truth):
    """Vectorized ``(mu_w, sigma2_w, alpha, sigma2_in)`` along the last axis."""
    frame = np.asarray(frame, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if frame.shape != truth.shape:
        raise ValueError("frame and truth lengths differ")
    w = 1.0 - truth * frame
    mu = w.mean(axis=-1)
    sigma2 = ((w - mu[..., None]) ** 2).mean(axis=-1)
    alpha = 1.0 - mu
    w_in = frame - alpha[..., None] * truth
    sigma2_in = (w_in**2).mean(axis=-1)
    return mu, sigma2, alpha, sigma2_in


def sbe_noise_stats(frame, truth) -> SbeNoiseStats:
    """Genie statistics of one SBE frame against the true BPSK symbols."""
    mu, s2, a, s2in = noise_moments(frame, truth)
    return SbeNoiseStats(float(mu), float(s2), float(a), float(s2in))


def encoder_output_stats(s: SbeNoiseStats, d: int, p_r: float) -> EncoderOutputStats:
    """Power, output-noise variance and power normalization after a weight-d encoder."""
    if s.degenerate:
        raise ValueError("degenerate SBE statistics (alpha <= 0)")
    p_x = (s.alpha**2 + s.sigma2_in) ** d
    if p_x <= 0.0:
        raise ValueError("encoder output power is zero")
    return EncoderOutputStats(p_x, p_x - s.alpha ** (2 * d), float(np.sqrt(p_r / p_x)))


_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite_e.hermegauss(96)
_GH_WEIGHTS = _GH_WEIGHTS / _GH_WEIGHTS.sum()


def sbe_stats_analytic(snr) -> SbeNoiseStats:
    """Expected SBE statistics for BPSK over AWGN at linear SNR ``snr``.

    Given x = +1 the channel LLR is Gaussian with mean ``4*snr`` and variance
    ``8*snr``; the moments of ``tanh(L/2)`` come from Gauss-Hermite quadrature.
    """
    snr = float(snr)
    if snr <= 0:
        return SbeNoiseStats(1.0, 0.0, 0.0, 0.0)
    mean, std = 4.0 * snr, np.sqrt(8.0 * snr)
    x = np.tanh((mean + std * _GH_NODES) / 2.0)
    m1 = float(_GH_WEIGHTS @ x)
    m2 = float(_GH_WEIGHTS @ x**2)
    mu = 1.0 - m1
    sigma2 = max(m2 - m1**2, 0.0)
    return SbeNoiseStats(mu, sigma2, m1, sigma2)

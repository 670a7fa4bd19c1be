"""End-to-end frame pipelines for DISC, SIR and DF over the two-hop network.

Every routine works on a batch axis in front of time so that many frames
can be pushed through numpy and the compiled BCJR at once. Randomness is
always drawn per frame from that frame's own generator, in a fixed order,
so a frame's outcome does not depend on which batch it travels in.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .channel import ChannelMode, LinkBudget, bpsk_modulate, complex_noise, draw_realization
from .codes import (
    CodeEnsemble,
    GeneratorSequence,
    PairingAssignment,
    conv_encode,
    gsw,
    is_noncatastrophic,
)
from .soft import llr_bpsk, noise_moments, sbe_stats_analytic

IDENTITY = GeneratorSequence((1,))


class Scheme(str, enum.Enum):
    DISC = "DISC"
    SIR = "SIR"
    DF = "DF"


class SbeMode(str, enum.Enum):
    GENIE = "genie"
    ANALYTIC = "analytic"


class Termination(str, enum.Enum):
    ZERO_TAIL = "zero"
    NONE = "none"


@dataclass(frozen=True)
class SchemeConfig:
    scheme: Scheme
    k: int
    ensemble: CodeEnsemble | None = None
    pairing: PairingAssignment | None = None
    frame_len: int = 130
    sbe_mode: SbeMode = SbeMode.GENIE
    label: str = ""
    termination: Termination = Termination.ZERO_TAIL

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "sbe_mode", SbeMode(self.sbe_mode))
        object.__setattr__(self, "termination", Termination(self.termination))
        if self.scheme is Scheme.SIR:
            object.__setattr__(self, "ensemble", CodeEnsemble((IDENTITY,) * self.k))
        if self.ensemble is None:
            raise ValueError(f"{self.scheme.value} needs an ensemble")
        if len(self.ensemble) != self.k:
            raise ValueError(f"ensemble has {len(self.ensemble)} codes for {self.k} relays")
        if self.pairing is None:
            object.__setattr__(self, "pairing", PairingAssignment.identity(self.k))
        if len(self.pairing.perm) != self.k:
            raise ValueError("pairing size differs from relay count")
        if self.scheme is not Scheme.SIR and not is_noncatastrophic(self.ensemble):
            raise ValueError(f"ensemble {[str(c) for c in self.ensemble.codes]} is catastrophic")
        if self.frame_len < self.ensemble.constraint_length:
            raise ValueError("frame_len shorter than the constraint length")
        if not self.label:
            object.__setattr__(self, "label", self.scheme.value)

    @property
    def tail(self) -> int:
        """Known zero bits appended by the relays to flush the encoders."""
        if self.termination is Termination.NONE:
            return 0
        return self.ensemble.memory

    @property
    def relay_ensemble(self) -> CodeEnsemble:
        """The ensemble reordered so that entry k is the code used by relay k."""
        return CodeEnsemble(tuple(self.pairing.relay_codes(self.ensemble)))


@dataclass
class RelayOutput:
    """Transmitted frame and the statistics behind its normalization.

    ``alpha``, ``sigma2_in`` and ``degenerate`` are per frame; ``p_x`` and
    ``beta`` are per symbol, following ``d_n``, the number of noisy SBE
    factors in each output symbol (``d`` inside the frame, fewer at the
    edges where the taps reach the known initial state or the zero tail).
    """

    tx: np.ndarray
    alpha: np.ndarray
    sigma2_in: np.ndarray
    p_x: np.ndarray
    beta: np.ndarray
    degenerate: np.ndarray
    d: int
    d_n: np.ndarray


@dataclass
class DestinationSideInfo:
    """Effective amplitude and equivalent noise variance of each relay stream.

    Shapes are either the received shape without time (one value per
    stream) or the full received shape (one value per symbol).
    """

    amp: np.ndarray
    sigma2: np.ndarray
    degenerate: np.ndarray = field(default=None)

    def __post_init__(self):
        self.amp = np.asarray(self.amp, dtype=np.complex128)
        self.sigma2 = np.asarray(self.sigma2, dtype=np.float64)
        if self.degenerate is None:
            self.degenerate = np.zeros(self.amp.shape, dtype=bool)


@dataclass
class FrameOutcome:
    bit_errors: int
    frame_error: bool
    decoded_bits: np.ndarray


def _relay_sbe(rx, amp, h_sr, sigma2):
    h = np.asarray(h_sr)[..., None] if np.ndim(h_sr) else h_sr
    return np.tanh(llr_bpsk(rx, h, amp, sigma2) / 2.0)


def relay_process_disc(rx, g: GeneratorSequence, amp: float, h_sr, sigma2: float,
                       p_r: float, truth=None, sbe_mode=SbeMode.GENIE,
                       tail: int = 0) -> RelayOutput:
    """LLR -> SBE -> SISO encode with ``g`` -> scale to power ``p_r``.

    ``truth`` (BPSK source symbols) feeds the genie noise statistics; the
    analytic mode derives them from the instantaneous input SNR instead.
    Frames with ``alpha <= 0`` are normalized by their empirical power and
    flagged as degenerate. ``tail`` known zero bits (SBE +1) are appended
    before encoding; they do not enter the noise statistics. The power law
    is applied per symbol with that symbol's count of noisy factors.
    """
    rx = np.asarray(rx)
    sbe = _relay_sbe(rx, amp, h_sr, sigma2)
    if SbeMode(sbe_mode) is SbeMode.GENIE:
        if truth is None:
            raise ValueError("genie statistics need the true symbols")
        _, _, alpha, s2in = noise_moments(sbe, np.broadcast_to(truth, sbe.shape))
    else:
        snr = amp**2 * np.abs(np.asarray(h_sr)) ** 2 / sigma2
        st = [sbe_stats_analytic(x) for x in np.atleast_1d(snr).ravel()]
        alpha = np.array([s.alpha for s in st]).reshape(np.shape(snr))
        s2in = np.array([s.sigma2_in for s in st]).reshape(np.shape(snr))
    d = gsw(g)
    n_in = sbe.shape[-1]
    offsets = [j for j, t in enumerate(g.taps) if t]
    if tail:
        sbe = np.concatenate([sbe, np.ones(sbe.shape[:-1] + (tail,))], axis=-1)
    coded = kernels.sliding_product(sbe, offsets)
    pos = np.arange(n_in + tail)
    d_n = sum(((pos >= j) & (pos - j < n_in)).astype(np.int64) for j in offsets)
    alpha = np.asarray(alpha, dtype=np.float64)
    s2in = np.asarray(s2in, dtype=np.float64)
    degenerate = alpha <= 0.0
    p_x = (alpha**2 + s2in)[..., None] ** d_n
    if np.any(degenerate):
        emp = np.maximum((coded**2).mean(axis=-1), 1e-300)
        p_x = np.where(degenerate[..., None], emp[..., None], p_x)
    beta = np.sqrt(p_r / p_x)
    return RelayOutput(beta * coded, alpha, s2in, p_x, beta, degenerate, d, d_n)


def relay_process_sir(rx, amp, h_sr, sigma2, p_r, truth=None,
                      sbe_mode=SbeMode.GENIE) -> RelayOutput:
    """Forward the power-normalized SBE frame (the weight-1 identity code)."""
    return relay_process_disc(rx, IDENTITY, amp, h_sr, sigma2, p_r, truth, sbe_mode)


def relay_process_df(rx, g: GeneratorSequence, h_sr, p_r: float, tail: int = 0):
    """Hard-detect, append ``tail`` zeros, re-encode in GF(2), BPSK-map, scale."""
    rx = np.asarray(rx)
    h = np.asarray(h_sr)[..., None] if np.ndim(h_sr) else h_sr
    bits = (np.real(np.conj(h) * rx) < 0).astype(np.int8)
    if tail:
        bits = np.concatenate([bits, np.zeros(bits.shape[:-1] + (tail,), np.int8)], axis=-1)
    return np.sqrt(p_r) * bpsk_modulate(conv_encode(bits, g))


def side_info_soft(out: RelayOutput, h_rd, budget: LinkBudget) -> tuple[np.ndarray, np.ndarray]:
    """Per-symbol effective amplitude and equivalent noise variance of one relay."""
    deg = out.degenerate[..., None]
    ad = np.where(deg, 0.0, np.maximum(out.alpha, 0.0)[..., None] ** out.d_n)
    h = np.asarray(h_rd)[..., None]
    amp = np.sqrt(budget.l_r) * h * out.beta * ad
    s2out = np.where(deg, out.p_x, out.p_x - ad**2)
    sigma2 = budget.sigma2_n + budget.l_r * np.abs(h) ** 2 * out.beta**2 * s2out
    return amp, sigma2


def channel_llrs(rx_frames, side: DestinationSideInfo):
    """``4*Re(conj(a_k)*y_k)/sigma2_k`` per stream; shape follows ``rx_frames``."""
    rx = np.asarray(rx_frames)
    a, s2 = side.amp, side.sigma2
    if a.ndim < rx.ndim:
        a, s2 = a[..., None], s2[..., None]
    return 4.0 * np.real(np.conj(a) * rx) / s2


def joint_bcjr_decode(rx_frames, side: DestinationSideInfo, e: CodeEnsemble,
                      pairing: PairingAssignment | None = None, tail: int = 0,
                      backend=None):
    """MAP decoding of the distributed rate-1/K codeword on one joint trellis.

    ``rx_frames`` has shape (K, N) or (B, K, N). With ``tail > 0`` the last
    ``tail`` symbols flush the encoders, the trellis ends in state zero and
    only the first ``N - tail`` bits are returned. Returns APP LLRs of the
    source bits (positive favours bit 0) and the hard decisions.
    """
    rx = np.asarray(rx_frames)
    k = rx.shape[-2]
    if len(e) != k:
        raise ValueError(f"{k} received streams but {len(e)} codes")
    if side.amp.shape not in (rx.shape[:-1], rx.shape):
        raise ValueError("side information does not match the received frames")
    if pairing is not None:
        e = CodeEnsemble(tuple(pairing.relay_codes(e)))
    next_state, outputs = e.trellis()
    lc = channel_llrs(rx, side)
    app = kernels.bcjr_app(lc, next_state, outputs, terminated=tail > 0, backend=backend)
    if tail:
        app = app[..., :-tail]
    return app, (app < 0).astype(np.int8)


def mrc_combine_decide(rx_frames, side: DestinationSideInfo):
    """Maximum ratio combining of uncoded relay streams and a sign decision."""
    lc = channel_llrs(rx_frames, side)
    return (lc.sum(axis=-2) < 0).astype(np.int8)


@dataclass
class _Draws:
    bits: np.ndarray
    h_sr: np.ndarray
    h_rd: np.ndarray
    n_sr: np.ndarray
    n_rd: np.ndarray


def _draw(rngs: Sequence[np.random.Generator], k: int, n: int, tail: int,
          mode: ChannelMode, sigma2: float) -> _Draws:
    nb = len(rngs)
    bits = np.empty((nb, n), dtype=np.int8)
    h_sr = np.empty((nb, k), dtype=np.complex128)
    h_rd = np.empty((nb, k), dtype=np.complex128)
    n_sr = np.empty((nb, k, n), dtype=np.complex128)
    n_rd = np.empty((nb, k, n + tail), dtype=np.complex128)
    for i, rng in enumerate(rngs):
        bits[i] = rng.integers(0, 2, n, dtype=np.int8)
        real = draw_realization(mode, k, rng)
        h_sr[i] = real.h_sr
        h_rd[i] = real.h_rd
        # one draw for both hops; the stream is consumed as two consecutive draws would
        z = complex_noise(rng, k * (2 * n + tail), sigma2)
        n_sr[i] = z[: k * n].reshape(k, n)
        n_rd[i] = z[k * n:].reshape(k, n + tail)
    return _Draws(bits, h_sr, h_rd, n_sr, n_rd)


@dataclass
class BatchTrace:
    """Internals of a simulated batch, kept for noise and power studies."""

    bits: np.ndarray
    x_b: np.ndarray
    rx_dest: np.ndarray
    tx: np.ndarray
    side: DestinationSideInfo
    relay_outputs: list
    h_rd: np.ndarray
    decoded: np.ndarray


def simulate_batch(config: SchemeConfig, budget: LinkBudget, mode,
                   rngs: Sequence[np.random.Generator], backend=None) -> BatchTrace:
    """Run both hops and the destination decoder for one frame per generator."""
    mode = ChannelMode(mode)
    if budget.k != config.k:
        raise ValueError(f"budget has {budget.k} relays, scheme has {config.k}")
    n, k, m = config.frame_len, config.k, config.tail
    dr = _draw(rngs, k, n, m, mode, budget.sigma2_n)
    x_b = bpsk_modulate(dr.bits)
    amp_sr = budget.amp_sr
    codes = config.pairing.relay_codes(config.ensemble)

    tx = np.empty((len(rngs), k, n + m))
    side_amp = np.empty((len(rngs), k, n + m), dtype=np.complex128)
    side_s2 = np.empty((len(rngs), k, n + m))
    degenerate = np.zeros((len(rngs), k), dtype=bool)
    outputs = []
    for r in range(k):
        rx = amp_sr[r] * dr.h_sr[:, r, None] * x_b + dr.n_sr[:, r]
        if config.scheme is Scheme.DF:
            tx[:, r] = relay_process_df(rx, codes[r], dr.h_sr[:, r], budget.p_r, m)
            side_amp[:, r] = np.sqrt(budget.l_r * budget.p_r) * dr.h_rd[:, r, None]
            side_s2[:, r] = budget.sigma2_n
        else:
            out = relay_process_disc(rx, codes[r], amp_sr[r], dr.h_sr[:, r], budget.sigma2_n,
                                     budget.p_r, truth=x_b, sbe_mode=config.sbe_mode, tail=m)
            outputs.append(out)
            tx[:, r] = out.tx
            side_amp[:, r], side_s2[:, r] = side_info_soft(out, dr.h_rd[:, r], budget)
            degenerate[:, r] = out.degenerate
    rx_dest = np.sqrt(budget.l_r) * dr.h_rd[:, :, None] * tx + dr.n_rd
    side = DestinationSideInfo(side_amp, side_s2, degenerate)
    if config.scheme is Scheme.SIR:
        decoded = mrc_combine_decide(rx_dest, side)
    else:
        _, decoded = joint_bcjr_decode(rx_dest, side, CodeEnsemble(tuple(codes)), tail=m,
                                       backend=backend)
    return BatchTrace(dr.bits, x_b, rx_dest, tx, side, outputs, dr.h_rd, decoded)


def run_batch(config: SchemeConfig, budget: LinkBudget, mode,
              rngs: Sequence[np.random.Generator], backend=None) -> np.ndarray:
    """Bit-error count of each frame in the batch."""
    trace = simulate_batch(config, budget, mode, rngs, backend=backend)
    return (trace.decoded != trace.bits).sum(axis=1)


def run_frame(config: SchemeConfig, budget: LinkBudget, mode,
              rng: np.random.Generator, backend=None) -> FrameOutcome:
    trace = simulate_batch(config, budget, mode, [rng], backend=backend)
    errors = int((trace.decoded[0] != trace.bits[0]).sum())
    return FrameOutcome(errors, errors > 0, trace.decoded[0])

"""Generator-sequence algebra for rate-1 non-recursive constituent codes.

Covers generator weights, minimum Hamming distance (exact and bounded),
the catastrophic-code test, the high-SNR ``rho`` metric and the
code-to-relay pairing rules built on it.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment


class NonConvergenceError(RuntimeError):
    """Raised when the distance search has not settled at the requested depth."""


@dataclass(frozen=True)
class GeneratorSequence:
    """Binary taps ``(g_1, ..., g_L)``; ``g_1`` multiplies the current input bit."""

    taps: tuple[int, ...]

    def __post_init__(self):
        taps = tuple(int(t) for t in self.taps)
        if not taps or any(t not in (0, 1) for t in taps):
            raise ValueError(f"taps must be a nonempty 0/1 sequence, got {self.taps!r}")
        if not any(taps):
            raise ValueError("generator needs at least one nonzero tap")
        first = taps.index(1)
        last = len(taps) - 1 - taps[::-1].index(1)
        if first > 0 or last < len(taps) - 1:
            warnings.warn(
                f"trimming zero taps from generator {''.join(map(str, taps))}",
                stacklevel=3,
            )
            taps = taps[first:last + 1]
        object.__setattr__(self, "taps", taps)

    @classmethod
    def parse(cls, text: str) -> "GeneratorSequence":
        """Parse ``"101"`` (binary) or ``"5"`` / ``"0o5"`` (octal, MSB = first tap).

        Strings made only of 0/1 are read as binary unless prefixed ``0o``.
        """
        s = text.strip().lower().replace("_", "")
        if s.startswith("0b"):
            digits = s[2:]
        elif s.startswith("0o"):
            digits = bin(int(s[2:], 8))[2:]
        elif s and set(s) <= {"0", "1"}:
            digits = s
        else:
            try:
                digits = bin(int(s, 8))[2:]
            except ValueError:
                raise ValueError(f"cannot parse generator {text!r}") from None
        if not digits or set(digits) - {"0", "1"}:
            raise ValueError(f"cannot parse generator {text!r}")
        return cls(tuple(int(c) for c in digits))

    @property
    def length(self) -> int:
        return len(self.taps)

    @property
    def memory(self) -> int:
        return len(self.taps) - 1

    @property
    def mask(self) -> int:
        """Bit ``j`` is set when the tap on ``b(n - j)`` is 1."""
        return sum(1 << j for j, t in enumerate(self.taps) if t)

    def octal(self) -> str:
        return format(int("".join(map(str, self.taps)), 2), "o")

    def __str__(self):
        return "".join(map(str, self.taps))


@dataclass(frozen=True)
class CodeEnsemble:
    """The K constituent codes of a rate-1/K distributed code.

    Members shorter than the longest one are zero-padded on their oldest
    taps so that every relay shares one joint trellis.
    """

    codes: tuple[GeneratorSequence, ...]

    def __post_init__(self):
        codes = tuple(
            c if isinstance(c, GeneratorSequence) else GeneratorSequence(tuple(c))
            for c in self.codes
        )
        if not codes:
            raise ValueError("ensemble needs at least one code")
        object.__setattr__(self, "codes", codes)

    @classmethod
    def parse(cls, texts: Sequence[str] | str) -> "CodeEnsemble":
        if isinstance(texts, str):
            texts = [t for t in texts.replace("/", ",").split(",") if t.strip()]
        return cls(tuple(GeneratorSequence.parse(t) for t in texts))

    def __len__(self):
        return len(self.codes)

    @property
    def constraint_length(self) -> int:
        return max(c.length for c in self.codes)

    @property
    def memory(self) -> int:
        return self.constraint_length - 1

    @property
    def n_states(self) -> int:
        return 1 << self.memory

    @property
    def uniform(self) -> bool:
        return len({c.length for c in self.codes}) == 1

    def trellis(self) -> tuple[np.ndarray, np.ndarray]:
        """Joint trellis tables.

        Returns ``next_state`` with shape (S, 2) and ``outputs`` with shape
        (S, 2, K) holding the BPSK image (+1 for bit 0) of each code bit.
        State bit ``j`` holds ``b(n - 1 - j)``.
        """
        m = self.memory
        n_states = 1 << m
        smask = n_states - 1
        masks = [c.mask for c in self.codes]
        next_state = np.zeros((n_states, 2), dtype=np.intp)
        outputs = np.zeros((n_states, 2, len(masks)), dtype=np.float64)
        for s in range(n_states):
            for u in (0, 1):
                reg = (s << 1) | u
                next_state[s, u] = reg & smask
                for k, mk in enumerate(masks):
                    outputs[s, u, k] = 1.0 - 2.0 * (bin(reg & mk).count("1") & 1)
        return next_state, outputs

    def encode(self, bits: np.ndarray) -> np.ndarray:
        """Binary encoding of ``bits`` (last axis is time), shape (..., K, N)."""
        return np.stack([conv_encode(bits, c) for c in self.codes], axis=-2)


def conv_encode(bits: np.ndarray, g: GeneratorSequence) -> np.ndarray:
    """Rate-1 GF(2) convolution from the all-zero state, unterminated."""
    bits = np.asarray(bits, dtype=np.int8)
    out = np.zeros_like(bits)
    n = bits.shape[-1]
    for j, t in enumerate(g.taps):
        if t and j < n:
            out[..., j:] ^= bits[..., :n - j]
    return out


@dataclass(frozen=True)
class PairingAssignment:
    """``perm[code_index] = relay_index``."""

    perm: tuple[int, ...]

    def __post_init__(self):
        perm = tuple(int(p) for p in self.perm)
        if sorted(perm) != list(range(len(perm))):
            raise ValueError(f"pairing must be a permutation, got {self.perm!r}")
        object.__setattr__(self, "perm", perm)

    @classmethod
    def identity(cls, k: int) -> "PairingAssignment":
        return cls(tuple(range(k)))

    def code_for_relay(self) -> tuple[int, ...]:
        inv = [0] * len(self.perm)
        for code, relay in enumerate(self.perm):
            inv[relay] = code
        return tuple(inv)

    def relay_codes(self, ensemble: CodeEnsemble) -> list[GeneratorSequence]:
        """Generators in relay order."""
        return [ensemble.codes[c] for c in self.code_for_relay()]


@dataclass(frozen=True)
class LinkSnrProfile:
    """Per-relay SISO-encoder input SNRs and relay-to-destination SNRs (linear)."""

    snr_in: tuple[float, ...]
    snr_rd: tuple[float, ...]

    def __post_init__(self):
        snr_in = tuple(float(x) for x in self.snr_in)
        snr_rd = tuple(float(x) for x in self.snr_rd)
        if len(snr_in) != len(snr_rd):
            raise ValueError("snr_in and snr_rd must have equal length")
        for x in snr_in + snr_rd:
            if not (x > 0 and math.isfinite(x)):
                raise ValueError(f"SNRs must be positive and finite, got {x}")
        object.__setattr__(self, "snr_in", snr_in)
        object.__setattr__(self, "snr_rd", snr_rd)

    @classmethod
    def equal_rd(cls, snr_in: Sequence[float], snr_rd: float) -> "LinkSnrProfile":
        return cls(tuple(snr_in), (snr_rd,) * len(snr_in))

    def __len__(self):
        return len(self.snr_in)


def gsw(g: GeneratorSequence) -> int:
    """Generator sequence weight: the number of 1-taps."""
    return sum(g.taps)


def mhd_bound(e: CodeEnsemble) -> tuple[tuple[int, ...], int]:
    """Weight of the impulse-response codeword, per code and in total."""
    per_code = tuple(gsw(c) for c in e.codes)
    return per_code, sum(per_code)


def exact_mhd(e: CodeEnsemble, search_depth: int | None = None) -> int:
    """Free distance of the joint rate-1/K code.

    Viterbi-style lowest-weight search over paths that leave the zero state
    and remerge with it. Raises :class:`NonConvergenceError` when some
    unmerged path is still lighter than the best remerged one at
    ``search_depth`` trellis steps (default ``10 * L``).
    """
    L = e.constraint_length
    if search_depth is None:
        search_depth = 10 * L
    next_state, outputs = e.trellis()
    weights = (outputs < 0).sum(axis=2)
    n_states = next_state.shape[0]
    inf = np.iinfo(np.int64).max // 4

    best = inf
    dist = np.full(n_states, inf, dtype=np.int64)
    s1 = next_state[0, 1]
    w1 = weights[0, 1]
    if s1 == 0:
        best = int(w1)
    else:
        dist[s1] = w1
    for _ in range(search_depth):
        live = dist[1:] if n_states > 1 else dist[:0]
        if live.size == 0 or live.min() >= best:
            return int(best)
        new = np.full(n_states, inf, dtype=np.int64)
        for s in range(1, n_states):
            if dist[s] >= inf:
                continue
            for u in (0, 1):
                t = next_state[s, u]
                w = dist[s] + weights[s, u]
                if t == 0:
                    best = min(best, int(w))
                elif w < new[t]:
                    new[t] = w
        dist = new
    live = dist[1:] if n_states > 1 else dist[:0]
    if live.size and live.min() < best:
        raise NonConvergenceError(
            f"minimum distance not settled after {search_depth} steps "
            f"(best remerged {best}, open path {int(live.min())})"
        )
    return int(best)


def _gf2_degree(p: int) -> int:
    return p.bit_length() - 1


def _gf2_mod(a: int, b: int) -> int:
    db = _gf2_degree(b)
    while a and _gf2_degree(a) >= db:
        a ^= b << (_gf2_degree(a) - db)
    return a


def gf2_gcd(a: int, b: int) -> int:
    """GCD of GF(2)[D] polynomials packed as ints (bit i = coefficient of D^i)."""
    while b:
        a, b = b, _gf2_mod(a, b)
    return a


def is_noncatastrophic(e: CodeEnsemble) -> bool:
    """Massey-Sain test: the generator gcd must be a power of D."""
    g = 0
    for c in e.codes:
        g = gf2_gcd(g, c.mask) if g else c.mask
    return g & (g - 1) == 0


def destination_snr(d: int, snr_rd: float, snr_in: float, exact: bool = False) -> float:
    """Per-relay destination SNR of the soft-encoded stream."""
    if exact:
        q = (1.0 + 1.0 / snr_in) ** d
        return snr_rd / ((q - 1.0) * snr_rd + q)
    return snr_rd * snr_in / (d * snr_rd + snr_in)


def rho(d: int, snr_rd: float, snr_in: float, exact: bool = False) -> float:
    """Exponent contribution ``d * gamma_srd`` of one relay.

    The default is the high-SNR form ``snr_rd*snr_in / (snr_in/d + snr_rd)``.
    """
    if d <= 0:
        raise ValueError("d must be positive")
    return d * destination_snr(d, snr_rd, snr_in, exact=exact)


def _rho_sum(perm: Sequence[int], d: Sequence[int], p: LinkSnrProfile, exact=False) -> float:
    return sum(rho(d[c], p.snr_rd[r], p.snr_in[r], exact) for c, r in enumerate(perm))


def pairing_metric(
    assignment: PairingAssignment, e: CodeEnsemble, p: LinkSnrProfile, exact: bool = False
) -> float:
    """Sum of ``rho`` over relays for a given pairing."""
    if len(assignment.perm) != len(e) or len(e) != len(p):
        raise ValueError("assignment, ensemble and profile sizes differ")
    d, _ = mhd_bound(e)
    return _rho_sum(assignment.perm, d, p, exact)


def ber_approx(
    assignment: PairingAssignment,
    e: CodeEnsemble,
    p: LinkSnrProfile,
    b_dfree: float = 1.0,
    exact: bool = False,
) -> float:
    """``0.5 * B_dfree * exp(-sum rho_k)`` with the GSW standing in for d_min,k."""
    return 0.5 * b_dfree * math.exp(-pairing_metric(assignment, e, p, exact))


def sir_ber_approx(p: LinkSnrProfile, b_dfree: float = 1.0) -> float:
    total = sum(rho(1, rd, si) for si, rd in zip(p.snr_in, p.snr_rd))
    return 0.5 * b_dfree * math.exp(-total)


def _rank_match(keys_codes: Sequence[float], keys_relays: Sequence[float]) -> list[int]:
    k = len(keys_codes)
    code_order = sorted(range(k), key=lambda i: -keys_codes[i])
    relay_order = sorted(range(k), key=lambda i: -keys_relays[i])
    perm = [0] * k
    for c, r in zip(code_order, relay_order):
        perm[c] = r
    # relays with equal SNR are interchangeable; hand their codes out in index order
    for _, grp in itertools.groupby(relay_order, key=lambda i: keys_relays[i]):
        relays = sorted(grp)
        codes = sorted(c for c in range(k) if perm[c] in relays)
        for c, r in zip(codes, relays):
            perm[c] = r
    return perm


def optimal_pairing(
    e: CodeEnsemble, p: LinkSnrProfile, exact: bool = False
) -> PairingAssignment:
    """Largest GSW to the largest input SNR, rank for rank.

    The rank rule needs a common relay-to-destination SNR; otherwise the
    pairing is solved as a linear assignment on ``rho``.
    """
    if len(e) != len(p):
        raise ValueError("ensemble and profile sizes differ")
    d, _ = mhd_bound(e)
    if len(set(p.snr_rd)) == 1 and not exact:
        return PairingAssignment(tuple(_rank_match(d, p.snr_in)))
    k = len(e)
    gain = np.array(
        [[rho(d[c], p.snr_rd[r], p.snr_in[r], exact) for r in range(k)] for c in range(k)]
    )
    rows, cols = linear_sum_assignment(gain, maximize=True)
    perm = [0] * k
    for c, r in zip(rows, cols):
        perm[c] = int(r)
    return PairingAssignment(tuple(perm))


def reversed_pairing(e: CodeEnsemble, p: LinkSnrProfile) -> PairingAssignment:
    """Largest GSW to the smallest input SNR (the un-ordered reference)."""
    d, _ = mhd_bound(e)
    return PairingAssignment(tuple(_rank_match(d, [-x for x in p.snr_in])))


def pairing_oracle(e: CodeEnsemble, p: LinkSnrProfile, exact: bool = False) -> PairingAssignment:
    """Exhaustive search over all K! pairings for the largest sum of ``rho``."""
    k = len(e)
    if k != len(p):
        raise ValueError("ensemble and profile sizes differ")
    if k > 8:
        raise ValueError(f"exhaustive pairing limited to K <= 8, got {k}")
    d, _ = mhd_bound(e)
    best, best_val = None, -math.inf
    for perm in itertools.permutations(range(k)):
        val = _rho_sum(perm, d, p, exact)
        if val > best_val:
            best, best_val = perm, val
    return PairingAssignment(best)


def example2_gains(gamma_gap: float, alpha0: float, gamma_sr1_in: float) -> tuple[float, float]:
    """Closed-form exponent gains of optimal pairing for codes (101), (111).

    Relay 1 has input SNR ``gamma_sr1_in = gamma_gap * gamma_rd`` and relay 2
    has ``gamma_sr1_in / alpha0``. Returns the gain over the reversed pairing
    and over plain soft-information relaying.
    """
    if not gamma_gap > 0 or not alpha0 > 1:
        raise ValueError("need gamma_gap > 0 and alpha0 > 1")
    g, a = gamma_gap, alpha0
    over_unordered = (
        g * (a - 1) * (5 * g + 6 * (1 + a))
        / ((g + 3) * (g + 2 * a) * (g + 2) * (g + 3 * a))
        * gamma_sr1_in
    )
    over_sir = (
        g * (3 * g**2 + (4 + 6 * a) * g + (4 * a**2 + 3))
        / ((g + 3) * (g + 2 * a) * (g + 1) * (g + a))
        * gamma_sr1_in
    )
    return over_unordered, over_sir

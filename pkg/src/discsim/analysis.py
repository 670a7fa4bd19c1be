"""Post-processing: FER curves, destination-noise histograms, slopes and dB gains."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .channel import LinkBudget, bpsk_modulate, db_to_linear
from .codes import CodeEnsemble, LinkSnrProfile, PairingAssignment, ber_approx, conv_encode
from .relay import SchemeConfig, simulate_batch
from .soft import sbe_stats_analytic
from .streams import frame_rngs


class AnalysisError(ValueError):
    pass


@dataclass
class CurvePoint:
    snr_db: float
    frames: int
    frame_errors: int
    bit_errors: int
    frame_len: int = 130
    hit_max_frames: bool = False
    tx_power: float = float("nan")

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.frames * self.frame_len) if self.frames else 0.0


@dataclass
class FerCurve:
    label: str
    points: list[CurvePoint] = field(default_factory=list)

    def __post_init__(self):
        snrs = [p.snr_db for p in self.points]
        if any(b <= a for a, b in zip(snrs, snrs[1:])):
            raise AnalysisError("snr_db must be strictly increasing")

    @classmethod
    def from_arrays(cls, label, snr_db, fer, frames=10**6, frame_len=130) -> "FerCurve":
        """Synthetic curve with the given FER values (used for checks and tests)."""
        pts = [CurvePoint(float(s), frames, int(round(f * frames)), int(round(f * frames)),
                          frame_len) for s, f in zip(snr_db, fer)]
        return cls(label, pts)

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([p.snr_db for p in self.points])

    @property
    def fer(self) -> np.ndarray:
        return np.array([p.fer for p in self.points])

    def fer_interval(self, z: float = 1.96) -> np.ndarray:
        """Wilson score interval per point, shape (n, 2)."""
        out = []
        for p in self.points:
            n, k = p.frames, p.frame_errors
            if n == 0:
                out.append((0.0, 1.0))
                continue
            phat = k / n
            den = 1 + z**2 / n
            mid = (phat + z**2 / (2 * n)) / den
            half = z * np.sqrt(phat * (1 - phat) / n + z**2 / (4 * n**2)) / den
            out.append((max(mid - half, 0.0), min(mid + half, 1.0)))
        return np.array(out)


def snr_at_fer(curve: FerCurve, target_fer: float) -> float:
    """SNR where the curve crosses ``target_fer``, log-linear interpolation.

    The curve must cross the target exactly once.
    """
    snr, fer = curve.snr_db, curve.fer
    crossings = []
    for i in range(len(fer) - 1):
        a, b = fer[i], fer[i + 1]
        if (a - target_fer) * (b - target_fer) < 0 or (a == target_fer and b != a):
            crossings.append(i)
    if not crossings and len(fer) and fer[-1] == target_fer:
        return float(snr[-1])
    if not crossings:
        raise AnalysisError(f"curve {curve.label!r} does not cross FER {target_fer}")
    if len(crossings) > 1:
        raise AnalysisError(f"curve {curve.label!r} is not monotone around FER {target_fer}")
    i = crossings[0]
    a, b = fer[i], fer[i + 1]
    if a <= 0 or b <= 0:
        raise AnalysisError(f"curve {curve.label!r} has no errors next to the crossing")
    la, lb, lt = np.log10(a), np.log10(b), np.log10(target_fer)
    return float(snr[i] + (lt - la) / (lb - la) * (snr[i + 1] - snr[i]))


def gain_at_fer(curve_a: FerCurve, curve_b: FerCurve, target_fer: float) -> float:
    """``snr_b - snr_a`` in dB at the target FER; positive when ``a`` is better."""
    return snr_at_fer(curve_b, target_fer) - snr_at_fer(curve_a, target_fer)


def diversity_slope(curve: FerCurve, window: tuple[float, float] = (1e-1, 1e-3)) -> float:
    """Negative least-squares slope of log10(FER) against SNR/10 inside the window."""
    hi, lo = max(window), min(window)
    fer = curve.fer
    sel = (fer <= hi) & (fer >= lo) & (fer > 0)
    if sel.sum() < 2:
        raise AnalysisError(f"curve {curve.label!r} has fewer than 2 points in {window}")
    x = curve.snr_db[sel] / 10.0
    y = np.log10(fer[sel])
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)


def analytic_overlay(e: CodeEnsemble, pairing: PairingAssignment, snr_db: Sequence[float],
                     sr_offsets_db: Sequence[float], rd_offset_db: float = 0.0,
                     b_dfree: float = 1.0) -> np.ndarray:
    """High-SNR BER approximation over an SNR sweep, rows ``(snr_db, ber)``.

    Encoder input SNRs come from the expected SBE statistics of each source
    relay link at its average SNR.
    """
    rows = []
    for s in snr_db:
        snr_in = []
        for off in sr_offsets_db:
            st = sbe_stats_analytic(float(db_to_linear(s + off)))
            snr_in.append(st.gamma_sr_in)
        rd = float(db_to_linear(s + rd_offset_db))
        prof = LinkSnrProfile.equal_rd(snr_in, rd)
        rows.append((float(s), ber_approx(pairing, e, prof, b_dfree)))
    return np.array(rows)


@dataclass
class Histogram:
    edges: np.ndarray
    density: np.ndarray
    condition: str
    samples: int
    variance: float
    excess_kurtosis: float
    ks_distance: float

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def integral(self) -> float:
        return float((self.density * np.diff(self.edges)).sum())


def histogram(values, condition: str, bins: int = 101, span: float = 5.0) -> Histogram:
    """Density over ``bins`` uniform bins covering mean +- ``span`` std."""
    v = np.asarray(values, dtype=np.float64)
    mu, sd = v.mean(), v.std()
    lo, hi = mu - span * sd, mu + span * sd
    inside = v[(v >= lo) & (v <= hi)]
    dens, edges = np.histogram(inside, bins=bins, range=(lo, hi), density=True)
    ks = stats.kstest((v - mu) / sd, "norm").statistic if sd > 0 else 0.0
    return Histogram(edges, dens, condition, v.size, float(v.var()),
                     float(stats.kurtosis(v)), float(ks))


@dataclass
class NoisePdfResult:
    hist_pos: Histogram
    hist_neg: Histogram
    empirical_var: float
    predicted_var: float
    empirical_out_var: float
    predicted_out_var: float
    noise_real: np.ndarray = field(repr=False)


def noise_pdf(snr_db: float, frames: int = 1000, frame_len: int = 130, seed: int = 0,
              generators: str = "5,7", snr_sr_db: float | None = None,
              relay: int = 0, batch: int = 500) -> NoisePdfResult:
    """Empirical overall destination noise of a 4-state DISC relay.

    Two relays with equal average SNRs; ``snr_sr_db`` overrides the
    source-relay SNR (a very large value gives a perfect relay). The noise
    ``y - a*x_c`` is rotated onto the signal axis and histogrammed per sign
    of ``x_c``; its complex variance is compared with the closed form.
    """
    e = CodeEnsemble.parse(generators)
    k = len(e)
    cfg = SchemeConfig("DISC", k, e, PairingAssignment.identity(k), frame_len=frame_len,
                       termination="none")
    sr = snr_db if snr_sr_db is None else snr_sr_db
    budget = LinkBudget.from_snr_db([sr] * k, snr_db)
    g = cfg.relay_ensemble.codes[relay]

    noise_re, xc_all, w_all = [], [], []
    pred_var, pred_out, emp_out = [], [], []
    for start in range(0, frames, batch):
        rngs = frame_rngs(seed, "noise-pdf", 0, start, min(batch, frames - start))
        tr = simulate_batch(cfg, budget, "awgn", rngs)
        out = tr.relay_outputs[relay]
        x_c = bpsk_modulate(conv_encode(tr.bits, g))
        a = tr.side.amp[:, relay]
        w = tr.rx_dest[:, relay] - a * x_c
        rot = np.conj(a) / np.maximum(np.abs(a), 1e-300)
        noise_re.append(np.real(rot * w).ravel())
        xc_all.append(x_c.ravel())
        w_all.append(w.ravel())
        pred_var.append(tr.side.sigma2[:, relay].ravel())
        ad = out.alpha[:, None] ** out.d_n
        pred_out.append((out.p_x - ad**2).ravel())
        coded = out.tx / out.beta
        emp_out.append(((coded - ad * x_c) ** 2).ravel())
    nr = np.concatenate(noise_re)
    xc = np.concatenate(xc_all)
    w = np.concatenate(w_all)
    return NoisePdfResult(
        hist_pos=histogram(nr[xc > 0], "+1"),
        hist_neg=histogram(nr[xc < 0], "-1"),
        empirical_var=float(np.mean(np.abs(w) ** 2)),
        predicted_var=float(np.concatenate(pred_var).mean()),
        empirical_out_var=float(np.concatenate(emp_out).mean()),
        predicted_out_var=float(np.concatenate(pred_out).mean()),
        noise_real=nr,
    )

"""Scenario definitions, presets, the seeded Monte Carlo driver and result files."""

from __future__ import annotations

import csv
import io
import json
import logging
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, kernels
from .analysis import CurvePoint, FerCurve, NoisePdfResult
from .channel import ChannelMode, LinkBudget, db_to_linear
from .codes import (
    CodeEnsemble,
    LinkSnrProfile,
    PairingAssignment,
    optimal_pairing,
    reversed_pairing,
)
from .relay import SbeMode, Scheme, SchemeConfig, Termination, simulate_batch
from .streams import frame_rngs

log = logging.getLogger(__name__)

CSV_HEADER = ["scheme", "scenario", "snr_db", "frames", "frame_errors", "bit_errors",
              "fer", "ber", "seed"]
HIST_HEADER = ["bin_center", "density", "condition"]


class SpecError(ValueError):
    """Invalid scenario field; the message starts with the field name."""


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    schemes: tuple[str, ...]
    k: int
    mode: str = "awgn"
    generators: tuple[str, ...] = ()
    pairing: str = "opt"
    sr_offsets_db: tuple[float, ...] = ()
    rd_offset_db: float = 0.0
    sweep: tuple[float, float, float] = (0.0, 10.0, 1.0)
    frame_len: int = 130
    min_frame_errors: int = 100
    max_frames: int = 2_000_000
    seed: int = 1
    sbe_mode: str = "genie"
    batch_size: int = 500
    termination: str = "zero"

    def validate(self) -> "ScenarioSpec":
        if self.k < 1:
            raise SpecError(f"k: must be >= 1, got {self.k}")
        if not self.schemes:
            raise SpecError("schemes: empty")
        if len(self.sr_offsets_db) != self.k:
            raise SpecError(f"sr_offsets_db: need {self.k} values, got {len(self.sr_offsets_db)}")
        try:
            ChannelMode(self.mode)
        except ValueError:
            raise SpecError(f"mode: unknown channel mode {self.mode!r}") from None
        try:
            SbeMode(self.sbe_mode)
        except ValueError:
            raise SpecError(f"sbe_mode: unknown mode {self.sbe_mode!r}") from None
        try:
            Termination(self.termination)
        except ValueError:
            raise SpecError(f"termination: expected 'zero' or 'none', got {self.termination!r}") from None
        if not self.snr_points():
            raise SpecError(f"sweep: empty sweep {self.sweep}")
        if self.sweep[2] <= 0:
            raise SpecError("sweep: step must be positive")
        if self.min_frame_errors < 0:
            raise SpecError("min_frame_errors: must be >= 0")
        if self.max_frames < 1:
            raise SpecError("max_frames: must be >= 1")
        if self.batch_size < 1:
            raise SpecError("batch_size: must be >= 1")
        for tok in self.schemes:
            cfg = scheme_config(replace(self, frame_len=1 << 30), tok, 0.0)
            if self.frame_len < cfg.ensemble.constraint_length:
                raise SpecError(f"frame_len: shorter than the constraint length of {tok}")
        return self

    def snr_points(self) -> list[float]:
        start, stop, step = self.sweep
        if step <= 0:
            return []
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(max(n, 0))]

    def budget(self, snr_db: float) -> LinkBudget:
        return LinkBudget.from_snr_db([snr_db + o for o in self.sr_offsets_db],
                                      snr_db + self.rd_offset_db)


@dataclass
class RunResult:
    spec: ScenarioSpec
    curves: dict[str, FerCurve]
    wall_clock: float = 0.0
    version: str = __version__
    backend: str = kernels.BACKEND

    @property
    def seed(self) -> int:
        return self.spec.seed


_TOKEN = re.compile(r"^(DISC|SIR|DF)(?::([^:]*))?(?::([^:]*))?$", re.IGNORECASE)


def scheme_config(spec: ScenarioSpec, token: str, snr_db: float) -> SchemeConfig:
    """Build the scheme for one curve token.

    Tokens read ``KIND[:GENS[:PAIRING]]`` with generators separated by ``/``
    and pairing ``opt``, ``unord``, ``id`` or ``perm=i-j-...`` (code -> relay).
    Missing parts fall back to the scenario defaults.
    """
    m = _TOKEN.match(token.strip())
    if not m:
        raise SpecError(f"schemes: cannot parse {token!r}")
    kind = Scheme(m.group(1).upper())
    if kind is Scheme.SIR:
        return SchemeConfig(kind, spec.k, frame_len=spec.frame_len, sbe_mode=spec.sbe_mode,
                            label=token, termination=spec.termination)
    gens = m.group(2) or ",".join(spec.generators)
    if not gens:
        raise SpecError(f"generators: none given for {token!r}")
    try:
        ens = CodeEnsemble.parse(gens)
    except ValueError as exc:
        raise SpecError(f"generators: {exc}") from None
    if len(ens) != spec.k:
        raise SpecError(f"generators: {token!r} has {len(ens)} codes for {spec.k} relays")
    mode = (m.group(3) or spec.pairing).strip().lower()
    # average SNRs stand in for the input SNRs; their order is all the rank rule uses
    prof = LinkSnrProfile.equal_rd(
        [float(db_to_linear(snr_db + o)) for o in spec.sr_offsets_db],
        float(db_to_linear(snr_db + spec.rd_offset_db)),
    )
    if mode == "opt":
        pairing = optimal_pairing(ens, prof)
    elif mode == "unord":
        pairing = reversed_pairing(ens, prof)
    elif mode == "id":
        pairing = PairingAssignment.identity(spec.k)
    elif mode.startswith("perm="):
        try:
            pairing = PairingAssignment(tuple(int(x) for x in mode[5:].split("-")))
        except ValueError as exc:
            raise SpecError(f"pairing: {exc}") from None
    else:
        raise SpecError(f"pairing: unknown mode {mode!r}")
    try:
        return SchemeConfig(kind, spec.k, ens, pairing, frame_len=spec.frame_len,
                            sbe_mode=spec.sbe_mode, label=token,
                            termination=spec.termination)
    except ValueError as exc:
        raise SpecError(f"schemes: {token!r}: {exc}") from None


_SCHEMES_2 = ("DISC:3/1:opt", "DISC:5/7:opt", "DISC:5/7:unord", "DISC:15/17:opt",
              "SIR", "DF:3/1", "DF:5/7", "DF:15/17")
_SCHEMES_2_FADING = ("DISC:3/1:opt", "DISC:5/7:opt", "DISC:15/17:opt", "SIR", "DF:3/1",
                     "DF:5/7", "DF:15/17")
_SCHEMES_3 = ("DISC:3/3/1:opt", "DISC:5/7/7:opt", "DISC:5/7/7:unord", "DISC:13/15/17:opt",
              "SIR", "DF:3/3/1", "DF:5/7/7", "DF:13/15/17")
_SCHEMES_3_FADING = ("DISC:3/3/1:opt", "DISC:5/7/7:opt", "DISC:13/15/17:opt", "SIR",
                     "DF:3/3/1", "DF:5/7/7", "DF:13/15/17")

PRESETS: dict[str, ScenarioSpec] = {
    "fig5": ScenarioSpec("fig5", _SCHEMES_2, 2, "awgn", ("5", "7"), "opt", (0.0, 3.0), 0.0,
                         (0.0, 12.0, 1.0)),
    "fig6": ScenarioSpec("fig6", _SCHEMES_2, 2, "awgn", ("5", "7"), "opt", (0.0, 3.0), -3.0,
                         (0.0, 14.0, 1.0)),
    "fig7": ScenarioSpec("fig7", _SCHEMES_2_FADING, 2, "rayleigh", ("5", "7"), "opt",
                         (0.0, 0.0), 0.0, (0.0, 36.0, 3.0)),
    "fig8": ScenarioSpec("fig8", _SCHEMES_2_FADING, 2, "rayleigh", ("5", "7"), "opt",
                         (0.0, 0.0), -10.0, (0.0, 40.0, 3.0)),
    "fig9": ScenarioSpec("fig9", _SCHEMES_3, 3, "awgn", ("5", "7", "7"), "opt",
                         (0.0, 2.0, 4.0), 0.0, (0.0, 12.0, 1.0)),
    "fig10": ScenarioSpec("fig10", _SCHEMES_3, 3, "awgn", ("5", "7", "7"), "opt",
                          (0.0, 2.0, 4.0), -3.0, (0.0, 14.0, 1.0)),
    "fig11": ScenarioSpec("fig11", _SCHEMES_3_FADING, 3, "rayleigh", ("5", "7", "7"), "opt",
                          (0.0, 0.0, 0.0), 0.0, (0.0, 36.0, 3.0)),
    "fig12": ScenarioSpec("fig12", _SCHEMES_3_FADING, 3, "rayleigh", ("5", "7", "7"), "opt",
                          (0.0, 0.0, 0.0), -10.0, (0.0, 40.0, 3.0)),
}

PRESET_CAPTIONS = {
    "fig5": "2 relays, AWGN, sr2 = sr1 + 3 dB, rd = sr1",
    "fig6": "2 relays, AWGN, sr2 = sr1 + 3 dB, rd = sr1 - 3 dB",
    "fig7": "2 relays, Rayleigh, sr1 = sr2, rd = sr",
    "fig8": "2 relays, Rayleigh, sr1 = sr2, rd = sr - 10 dB",
    "fig9": "3 relays, AWGN, sr2 = sr1 + 2 dB, sr3 = sr1 + 4 dB, rd = sr1",
    "fig10": "3 relays, AWGN, sr2 = sr1 + 2 dB, sr3 = sr1 + 4 dB, rd = sr1 - 3 dB",
    "fig11": "3 relays, Rayleigh, equal sr, rd = sr",
    "fig12": "3 relays, Rayleigh, equal sr, rd = sr - 10 dB",
}


def list_presets() -> dict[str, ScenarioSpec]:
    return dict(PRESETS)


def get_preset(name: str) -> ScenarioSpec:
    try:
        return PRESETS[name]
    except KeyError:
        raise SpecError(f"preset: unknown preset {name!r}; known: {', '.join(PRESETS)}") from None


# --- config files -----------------------------------------------------------

_FIELD_TYPES = {
    "name": str, "schemes": (tuple, str), "k": int, "mode": str, "generators": (tuple, str),
    "pairing": str, "sr_offsets_db": (tuple, float), "rd_offset_db": float,
    "sweep": (tuple, float), "frame_len": int, "min_frame_errors": int, "max_frames": int,
    "seed": int, "sbe_mode": str, "batch_size": int, "termination": str,
}


def parse_config(text: str, base: ScenarioSpec | None = None) -> ScenarioSpec:
    """Flat ``key = value`` lines, lists in brackets, ``#`` comments.

    A ``preset = NAME`` line starts from that preset; later keys override it.
    """
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key == "preset":
            base = get_preset(val)
            continue
        if key not in _FIELD_TYPES:
            raise SpecError(f"{key}: unknown field (line {lineno})")
        typ = _FIELD_TYPES[key]
        try:
            if isinstance(typ, tuple):
                if not (val.startswith("[") and val.endswith("]")):
                    raise ValueError("list values need brackets")
                items = [v.strip() for v in val[1:-1].split(",") if v.strip()]
                values[key] = tuple(typ[1](v) for v in items)
            else:
                values[key] = typ(val)
        except ValueError as exc:
            raise SpecError(f"{key}: {exc} (line {lineno})") from None
    if base is not None:
        spec = replace(base, **values)
    else:
        missing = {"name", "schemes", "k", "sr_offsets_db"} - values.keys()
        if missing:
            raise SpecError(f"{sorted(missing)[0]}: required field missing")
        spec = ScenarioSpec(**values)
    if len(spec.sweep) != 3:
        raise SpecError("sweep: need [start, stop, step]")
    return spec.validate()


def format_config(spec: ScenarioSpec) -> str:
    lines = []
    for key in _FIELD_TYPES:
        v = getattr(spec, key)
        if isinstance(v, tuple):
            v = "[" + ", ".join(str(x) for x in v) + "]"
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


# --- Monte Carlo driver -----------------------------------------------------

def _batch_job(args):
    spec, token, snr_db, point, start, count = args
    cfg = scheme_config(spec, token, snr_db)
    rngs = frame_rngs(spec.seed, token, point, start, count)
    trace = simulate_batch(cfg, spec.budget(snr_db), spec.mode, rngs)
    errs = (trace.decoded != trace.bits).sum(axis=1)
    return errs, (trace.tx**2).mean(axis=2)


def simulate_point(spec: ScenarioSpec, token: str, snr_db: float, point: int,
                   executor=None, workers: int = 1) -> CurvePoint:
    """Frames for one (scheme, SNR) pair under the stopping rule.

    Batches are issued in index order and the stop is placed at the exact
    frame where the error target is reached, so the count does not depend
    on how many batches were in flight. ``min_frame_errors = 0`` disables
    the error target.
    """
    frames = frame_err = bit_err = 0
    power = np.zeros(spec.k)
    target = spec.min_frame_errors
    next_start = 0
    done = False
    while not done and next_start < spec.max_frames:
        jobs = []
        for _ in range(max(workers, 1)):
            if next_start >= spec.max_frames:
                break
            count = min(spec.batch_size, spec.max_frames - next_start)
            jobs.append((spec, token, snr_db, point, next_start, count))
            next_start += count
        results = executor.map(_batch_job, jobs) if executor else map(_batch_job, jobs)
        for errs, pw in results:
            if done:
                continue
            n_used = len(errs)
            if target:
                hit = np.nonzero(np.cumsum(errs > 0) + frame_err >= target)[0]
                if len(hit):
                    n_used = int(hit[0]) + 1
                    done = True
            frames += n_used
            frame_err += int((errs[:n_used] > 0).sum())
            bit_err += int(errs[:n_used].sum())
            power += pw[:n_used].sum(axis=0)
    return CurvePoint(snr_db, frames, frame_err, bit_err, spec.frame_len,
                      hit_max_frames=not done,
                      tx_power=float(power.mean() / frames) if frames else float("nan"))


def run_scenario(spec: ScenarioSpec, workers: int = 1, progress=None) -> RunResult:
    """Simulate every scheme at every sweep point.

    Frame ``i`` at point ``p`` of scheme ``s`` draws from the stream keyed by
    ``(seed, s, p)`` at counter ``i``; results are therefore identical for
    any number of workers.
    """
    spec.validate()
    t0 = time.perf_counter()
    curves = {}
    executor = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for token in spec.schemes:
            pts = []
            for p, snr in enumerate(spec.snr_points()):
                pt = simulate_point(spec, token, snr, p, executor, workers)
                pts.append(pt)
                log.info("%s %s %.2f dB: %d/%d frames in error", spec.name, token, snr,
                         pt.frame_errors, pt.frames)
                if progress:
                    progress(token, pt)
            curves[token] = FerCurve(token, pts)
    finally:
        if executor:
            executor.shutdown()
    return RunResult(spec, curves, wall_clock=time.perf_counter() - t0)


# --- output files -----------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def results_csv(result: RunResult | None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    if result is not None:
        for token, curve in result.curves.items():
            for p in curve.points:
                w.writerow([token, result.spec.name, _fmt(p.snr_db), p.frames, p.frame_errors,
                            p.bit_errors, _fmt(p.fer), _fmt(p.ber), result.spec.seed])
    return buf.getvalue()


def histogram_csv(res: NoisePdfResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HIST_HEADER)
    for h in (res.hist_pos, res.hist_neg):
        for c, d in zip(h.centers, h.density):
            w.writerow([_fmt(c), _fmt(d), h.condition])
    return buf.getvalue()


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def emit(result: RunResult | None, out_dir, name: str | None = None) -> list[Path]:
    """Write ``<name>.csv``, one ``<name>__<scheme>.dat`` per curve and metadata."""
    out = Path(out_dir)
    name = name or (result.spec.name if result else "empty")
    files = [_write(out / f"{name}.csv", results_csv(result))]
    if result is None:
        return files
    for token, curve in result.curves.items():
        safe = re.sub(r"[^A-Za-z0-9_.-]+", "_", token)
        lines = ["# snr_db fer ber frames frame_errors"]
        lines += [f"{p.snr_db!r} {p.fer!r} {p.ber!r} {p.frames} {p.frame_errors}"
                  for p in curve.points]
        files.append(_write(out / f"{name}__{safe}.dat", "\n".join(lines) + "\n"))
    meta = {
        "spec": asdict(result.spec),
        "version": result.version,
        "backend": result.backend,
        "stopping_rule": {"min_frame_errors": result.spec.min_frame_errors,
                          "max_frames": result.spec.max_frames},
        "points": {
            token: [{"snr_db": p.snr_db, "hit_max_frames": p.hit_max_frames,
                     "tx_power": p.tx_power} for p in c.points]
            for token, c in result.curves.items()
        },
    }
    files.append(_write(out / f"{name}.meta.json", json.dumps(meta, indent=2) + "\n"))
    return files


def emit_histograms(res: NoisePdfResult, out_dir, name: str = "noise_pdf") -> Path:
    return _write(Path(out_dir) / f"{name}.csv", histogram_csv(res))


def read_results_csv(path) -> dict[str, FerCurve]:
    """Curves from a results CSV, keyed by scheme label."""
    rows: dict[str, list[CurvePoint]] = {}
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        if r.fieldnames != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {r.fieldnames}")
        for row in r:
            frames = int(row["frames"])
            fe = int(row["frame_errors"])
            be = int(row["bit_errors"])
            ber = float(row["ber"])
            n = int(round(be / (ber * frames))) if ber > 0 else 130
            rows.setdefault(row["scheme"], []).append(
                CurvePoint(float(row["snr_db"]), frames, fe, be, n))
    return {k: FerCurve(k, sorted(v, key=lambda p: p.snr_db)) for k, v in rows.items()}

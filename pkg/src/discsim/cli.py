"""Command-line entry point: ``discsim <command> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, kernels
from .analysis import AnalysisError, diversity_slope, noise_pdf, snr_at_fer
from .channel import db_to_linear
from .codes import (
    CodeEnsemble,
    LinkSnrProfile,
    NonConvergenceError,
    exact_mhd,
    gsw,
    is_noncatastrophic,
    mhd_bound,
    optimal_pairing,
    pairing_metric,
)
from .sim import (
    PRESET_CAPTIONS,
    SpecError,
    emit,
    emit_histograms,
    get_preset,
    list_presets,
    parse_config,
    read_results_csv,
    run_scenario,
)


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace("/", ",").split(",") if x.strip()]


def _cmd_run(args) -> int:
    if args.config:
        spec = parse_config(Path(args.config).read_text())
    else:
        spec = get_preset(args.preset)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.min_frame_errors is not None:
        overrides["min_frame_errors"] = args.min_frame_errors
    if args.max_frames is not None:
        overrides["max_frames"] = args.max_frames
    spec = replace(spec, **overrides).validate()

    def progress(token, pt):
        flag = " (max frames)" if pt.hit_max_frames else ""
        print(f"{token:>18s} {pt.snr_db:6.2f} dB  FER {pt.fer:.3e}  "
              f"{pt.frame_errors}/{pt.frames}{flag}", file=sys.stderr)

    result = run_scenario(spec, workers=args.workers, progress=None if args.quiet else progress)
    for path in emit(result, args.out, args.name):
        print(path)
    return 0


def _cmd_list(args) -> int:
    for name, spec in list_presets().items():
        print(f"{name:6s} K={spec.k} {spec.mode:8s} {PRESET_CAPTIONS[name]}")
    return 0


def _cmd_noise_pdf(args) -> int:
    res = noise_pdf(args.snr_db, frames=args.frames, seed=args.seed,
                    snr_sr_db=args.snr_sr_db, generators=args.generators)
    path = emit_histograms(res, args.out, args.name)
    print(path)
    print(f"destination noise variance: empirical {res.empirical_var:.6g}, "
          f"closed form {res.predicted_var:.6g}")
    print(f"encoder output noise variance: empirical {res.empirical_out_var:.6g}, "
          f"closed form {res.predicted_out_var:.6g}")
    return 0


def _load_curves(files):
    curves = {}
    for f in files:
        for label, c in read_results_csv(f).items():
            key = label if label not in curves else f"{Path(f).stem}:{label}"
            curves[key] = c
    if not curves:
        raise AnalysisError("no curves in the given files")
    return curves


def _cmd_analyze(args) -> int:
    curves = _load_curves(args.files)
    if args.what == "slope":
        window = (args.window[0], args.window[1]) if args.window else (1e-1, 1e-3)
        for label, c in curves.items():
            try:
                print(f"{label}\t{diversity_slope(c, window):.3f}")
            except AnalysisError as exc:
                print(f"{label}\tn/a ({exc})")
        return 0
    if args.target_fer is None:
        raise AnalysisError("gain needs --target-fer")
    ref = args.ref or ("SIR" if "SIR" in curves else next(iter(curves)))
    if ref not in curves:
        raise AnalysisError(f"reference curve {ref!r} not found")
    ref_snr = snr_at_fer(curves[ref], args.target_fer)
    print(f"reference {ref}: {ref_snr:.3f} dB at FER {args.target_fer:g}")
    for label, c in curves.items():
        try:
            s = snr_at_fer(c, args.target_fer)
            print(f"{label}\t{s:.3f} dB\tgain {ref_snr - s:+.3f} dB")
        except AnalysisError as exc:
            print(f"{label}\tn/a ({exc})")
    return 0


def _cmd_codes(args) -> int:
    e = CodeEnsemble.parse(args.generators)
    if args.what == "mhd":
        d, bound = mhd_bound(e)
        print(f"generators: {' '.join(c.octal() for c in e.codes)}")
        print(f"GSW: {list(d)}  bound: {bound}")
        print(f"noncatastrophic: {is_noncatastrophic(e)}")
        try:
            print(f"exact MHD: {exact_mhd(e)}")
        except NonConvergenceError as exc:
            print(f"exact MHD: not resolved ({exc})")
        return 0
    if not args.snrs:
        raise ValueError("pair needs --snrs (encoder input SNRs in dB, one per relay)")
    snrs = _floats(args.snrs)
    if len(snrs) != len(e):
        raise ValueError(f"--snrs has {len(snrs)} values for {len(e)} codes")
    prof = LinkSnrProfile.equal_rd([float(db_to_linear(s)) for s in snrs],
                                   float(db_to_linear(args.rd_snr)))
    pairing = optimal_pairing(e, prof)
    for code, relay in enumerate(pairing.perm):
        c = e.codes[code]
        print(f"code {c.octal()} (GSW {gsw(c)}) -> relay {relay} ({snrs[relay]:g} dB)")
    print(f"sum rho: {pairing_metric(pairing, e, prof):.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="discsim", description=__doc__)
    p.add_argument("--version", action="version",
                   version=f"%(prog)s {__version__} ({kernels.BACKEND} kernels)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a preset or config file")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset")
    src.add_argument("--config")
    r.add_argument("--seed", type=int)
    r.add_argument("--out", default="results")
    r.add_argument("--name")
    r.add_argument("--min-frame-errors", type=int)
    r.add_argument("--max-frames", type=int)
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("-q", "--quiet", action="store_true")
    r.set_defaults(func=_cmd_run)

    sub.add_parser("list-presets", help="show the built-in scenarios").set_defaults(func=_cmd_list)

    n = sub.add_parser("noise-pdf", help="destination noise histograms of a 4-state relay")
    n.add_argument("--snr-db", type=float, required=True)
    n.add_argument("--snr-sr-db", type=float)
    n.add_argument("--frames", type=int, default=1000)
    n.add_argument("--generators", default="5,7")
    n.add_argument("--seed", type=int, default=0)
    n.add_argument("--out", default="results")
    n.add_argument("--name", default="noise_pdf")
    n.set_defaults(func=_cmd_noise_pdf)

    a = sub.add_parser("analyze", help="dB gains or diversity slopes from result CSVs")
    a.add_argument("what", choices=["gain", "slope"])
    a.add_argument("files", nargs="+")
    a.add_argument("--target-fer", type=float)
    a.add_argument("--ref")
    a.add_argument("--window", type=float, nargs=2, metavar=("HI", "LO"))
    a.set_defaults(func=_cmd_analyze)

    c = sub.add_parser("codes", help="distance and pairing of a code ensemble")
    c.add_argument("what", choices=["mhd", "pair"])
    c.add_argument("--generators", required=True)
    c.add_argument("--snrs")
    c.add_argument("--rd-snr", type=float, default=10.0)
    c.set_defaults(func=_cmd_codes)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (SpecError, AnalysisError, ValueError, OSError) as exc:
        print(f"discsim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

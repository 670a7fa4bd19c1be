"""Acceptance criteria 1 to 12.

Each test carries a ``criterion`` marker; conftest prints one PASS/FAIL line
per criterion at the end of the run, with the measured values attached.
The Monte Carlo reproductions are marked ``slow`` and run by default.
"""
import math
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import norm

from discsim import kernels
from discsim.analysis import diversity_slope, gain_at_fer, noise_pdf, snr_at_fer
from discsim.codes import (
    CodeEnsemble,
    GeneratorSequence,
    LinkSnrProfile,
    example2_gains,
    exact_mhd,
    mhd_bound,
    optimal_pairing,
    pairing_oracle,
)
from discsim.sim import emit, get_preset, run_scenario
from discsim.soft import prob_inference_encode, siso_encode
from oracles import (
    best_rho_sum_exact,
    brute_force_app,
    pairing_gains_direct,
    rearrangement_holds,
    rho_exact,
    to_probs,
)

SEED = 20240601
ALL_GENS_L4 = [GeneratorSequence(tuple(int(c) for c in bin(m)[2:])) for m in range(1, 16, 2)]


# --- 1 to 7: algebra, oracles and closed forms --------------------------------

@pytest.mark.criterion(1, "SISO encoder equals probability-inference encoder")
def test_c01_siso_oracle(report):
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for i in range(10_000):
        g = ALL_GENS_L4[i % len(ALL_GENS_L4)]
        x = rng.uniform(-1.0, 1.0, rng.integers(1, 33))
        pr = prob_inference_encode(to_probs(x), g)
        worst = max(worst, float(np.max(np.abs(siso_encode(x, g) - (pr[:, 0] - pr[:, 1])))))
    report(f"max abs error {worst:.1e} over 1e4 frames")
    assert worst < 1e-9


@pytest.mark.criterion(2, "three-tap all-ones generator gives the exact SBE product")
def test_c02_three_tap_product(report):
    rng = np.random.default_rng(SEED)
    x = rng.uniform(-1.0, 1.0, 64)
    got = siso_encode(x, GeneratorSequence((1, 1, 1)))
    padded = np.concatenate([[1.0, 1.0], x])
    want = padded[2:] * padded[1:-1] * padded[:-2]
    report("bitwise equal" if np.array_equal(got, want) else "mismatch")
    assert np.array_equal(got, want)


@pytest.mark.criterion(3, "GSW bound on the minimum Hamming distance")
@pytest.mark.parametrize("gens, expected", [("101,111", 5), ("111,111,101", 8)])
def test_c03_mhd_bound(gens, expected, report):
    e = CodeEnsemble.parse(gens)
    _, bound = mhd_bound(e)
    exact = exact_mhd(e)
    report(f"{{{gens}}} exact {exact} bound {bound}")
    assert exact == expected and bound == expected
    assert exact <= bound and bound - exact <= 1


@pytest.mark.criterion(4, "optimal pairing attains the exhaustive maximum; rearrangement inequality")
def test_c04_pairing_optimal(report):
    rng = np.random.default_rng(SEED)
    for _ in range(1000):
        k = int(rng.integers(2, 7))
        masks = 2 * rng.integers(0, 8, k) + 1
        e = CodeEnsemble(tuple(GeneratorSequence(tuple(int(c) for c in bin(int(m))[2:]))
                               for m in masks))
        p = LinkSnrProfile.equal_rd(10 ** rng.uniform(-1, 2, k), 10 ** rng.uniform(-1, 2))
        d, _ = mhd_bound(e)
        best, table = best_rho_sum_exact(d, p.snr_in, p.snr_rd)
        got = sum(table[c][r] for c, r in enumerate(optimal_pairing(e, p).perm))
        oracle = sum(table[c][r] for c, r in enumerate(pairing_oracle(e, p).perm))
        assert got == best and oracle == best
    report("1000 profiles equal to the exact maximum")


@pytest.mark.criterion(4, "optimal pairing attains the exhaustive maximum; rearrangement inequality")
def test_c04_rearrangement(report):
    rng = np.random.default_rng(SEED + 1)
    v = 10 ** rng.uniform(-3, 3, (100_000, 2))
    t = 10 ** rng.uniform(-3, 3, (100_000, 2))
    v.sort(axis=1)
    t.sort(axis=1)
    keep = (v[:, 1] > v[:, 0]) & (t[:, 1] > t[:, 0])
    bad = sum(not rearrangement_holds(v1, v2, t1, t2)
              for (v2, v1), (t2, t1) in zip(v[keep], t[keep]))
    report(f"inequality on {int(keep.sum())} quadruples, {bad} violations")
    assert keep.sum() >= 99_000 and bad == 0


@pytest.mark.criterion(5, "closed-form pairing gains for codes 101 and 111")
def test_c05_closed_form_gains(report):
    worst = Fraction(0)
    for g in np.geomspace(0.1, 100.0, 13):
        for a in np.geomspace(1.01, 10.0, 11):
            for s1 in (0.5, 10.0, 1000.0):
                got = example2_gains(float(g), float(a), s1)
                ref = pairing_gains_direct(float(g), float(a), s1, rho_exact)
                assert all(x > 0 for x in got)
                for x, y in zip(got, ref):
                    worst = max(worst, abs(Fraction(x) - y) / max(1, abs(y)))
    report(f"max error {float(worst):.1e}")
    assert worst < 1e-12


@pytest.mark.criterion(6, "variance law at 10 dB, 4-state code")
@pytest.mark.slow
def test_c06_variance_law(report):
    res = noise_pdf(10.0, frames=10_000, generators="5,7", seed=SEED)
    out_err = res.empirical_out_var / res.predicted_out_var - 1
    dest_err = res.empirical_var / res.predicted_var - 1
    report(f"encoder output {out_err:+.2%}, destination noise {dest_err:+.2%}")
    assert abs(out_err) < 0.03 and abs(dest_err) < 0.03


@pytest.mark.criterion(7, "joint BCJR equals exhaustive marginalization")
@pytest.mark.parametrize("gens", ["7", "5,7", "15,17", "13,15,17"])
@pytest.mark.parametrize("backend", ["python", None])
def test_c07_bcjr_oracle(gens, backend, report):
    e = CodeEnsemble.parse(gens)
    ns, out = e.trellis()
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for n in range(1, 11):
        lc = rng.normal(0.5, 2.0, (len(e), n))
        app = kernels.bcjr_app(lc, ns, out, backend=backend)
        worst = max(worst, float(np.max(np.abs(app - brute_force_app(lc, e)))))
        lct = rng.normal(0.5, 2.0, (len(e), n + e.memory))
        app = kernels.bcjr_app(lct, ns, out, terminated=True, backend=backend)[:n]
        worst = max(worst, float(np.max(np.abs(app - brute_force_app(lct, e, tail=e.memory)))))
    report(f"{gens} ({backend or kernels.BACKEND}) {worst:.0e}")
    assert worst < 1e-9


# --- 8 to 11: Monte Carlo reproductions -------------------------------------

TARGET_FER = 1e-3


def run_curves(preset, sweeps, min_frame_errors, max_frames):
    """One FER curve per scheme token, each on its own SNR grid."""
    curves = {}
    for token, sweep in sweeps.items():
        spec = replace(get_preset(preset), schemes=(token,), sweep=sweep,
                       min_frame_errors=min_frame_errors, max_frames=max_frames,
                       batch_size=2000, seed=SEED)
        curves[token] = run_scenario(spec).curves[token]
    return curves


def point_at(curve, snr_db):
    return curve.points[int(np.argmin(np.abs(curve.snr_db - snr_db)))]


def worse_p_value(worse, better, snr_db):
    """One-sided two-proportion z-test p-value for FER(worse) > FER(better) at one SNR."""
    a, b = point_at(worse, snr_db), point_at(better, snr_db)
    pooled = (a.frame_errors + b.frame_errors) / (a.frames + b.frames)
    se = math.sqrt(pooled * (1 - pooled) * (1 / a.frames + 1 / b.frames))
    if se == 0:
        return 1.0
    return float(norm.sf((a.fer - b.fer) / se))


def high_snr_point(worse, better, min_errors=20):
    """Highest SNR on both grids where the worse curve still has enough errors."""
    common = sorted(set(np.round(worse.snr_db, 6)) & set(np.round(better.snr_db, 6)))
    ok = [s for s in common if point_at(worse, s).frame_errors >= min_errors]
    if not ok:
        raise AssertionError(f"no common SNR with {min_errors} errors for {worse.label}")
    return ok[-1]


def ordered_at_95(worse, better, report):
    snr = high_snr_point(worse, better)
    p = worse_p_value(worse, better, snr)
    report(f"{better.label} < {worse.label} at {snr:g} dB p={p:.1e}")
    return p < 0.05


@pytest.fixture(scope="module")
def fig5_curves():
    curves = run_curves("fig5", {
        "DISC:5/7:opt": (5.5, 7.5, 0.5),
        "DF:3/1": (6.5, 8.5, 0.5),
        "DF:5/7": (7.0, 9.0, 0.5),
        "DF:15/17": (7.5, 9.5, 0.5),
    }, min_frame_errors=300, max_frames=300_000)
    # un-ordered pairing and SIR stay within a few tenths of a dB of each other,
    # so their high-SNR points need a larger frame budget
    curves.update(run_curves("fig5", {
        "DISC:5/7:unord": (7.5, 9.5, 0.5),
        "SIR": (7.5, 9.5, 0.5),
    }, min_frame_errors=300, max_frames=1_000_000))
    return curves


@pytest.fixture(scope="module")
def fig6_curves():
    return run_curves("fig6", {
        "DISC:3/1:opt": (7.25, 8.75, 0.25),
        "DISC:5/7:opt": (7.0, 8.25, 0.25),
        "DISC:15/17:opt": (7.0, 8.25, 0.25),
        "SIR": (9.25, 10.25, 0.25),
    }, min_frame_errors=400, max_frames=500_000)


@pytest.mark.criterion(8, "preset fig5: optimal beats un-ordered pairing by 2 +- 0.7 dB; "
                          "opt <= unord <= SIR at high SNR")
@pytest.mark.slow
def test_c08_pairing_gain(fig5_curves, report):
    opt, unord, sir = (fig5_curves[t] for t in ("DISC:5/7:opt", "DISC:5/7:unord", "SIR"))
    gain = gain_at_fer(opt, unord, TARGET_FER)
    need = [snr_at_fer(c, TARGET_FER) for c in (opt, unord, sir)]
    report(f"gain {gain:.2f} dB")
    report("SNR at FER 1e-3: " + ", ".join(f"{x:.2f}" for x in need))
    ok_opt = ordered_at_95(unord, opt, report)
    ok_sir = ordered_at_95(sir, unord, report)
    assert abs(gain - 2.0) <= 0.7
    assert need[0] < need[1] <= need[2]
    assert ok_opt and ok_sir


@pytest.mark.criterion(9, "preset fig6: DISC gains over SIR near 1.7/2.4/2.5 dB, monotone in states")
@pytest.mark.slow
def test_c09_state_gains(fig6_curves, report):
    sir = fig6_curves["SIR"]
    gains = [gain_at_fer(fig6_curves[t], sir, TARGET_FER)
             for t in ("DISC:3/1:opt", "DISC:5/7:opt", "DISC:15/17:opt")]
    report("2/4/8-state gains " + "/".join(f"{g:.2f}" for g in gains) + " dB")
    for got, want in zip(gains, (1.7, 2.4, 2.5)):
        assert abs(got - want) <= 0.7
    assert gains[0] < gains[1] < gains[2]


@pytest.mark.criterion(10, "preset fig5: DF degrades with constraint length")
@pytest.mark.slow
def test_c10_df_propagation(fig5_curves, report):
    df2, df4, df8 = (fig5_curves[t] for t in ("DF:3/1", "DF:5/7", "DF:15/17"))
    loss4 = gain_at_fer(df2, df4, TARGET_FER)
    loss8 = gain_at_fer(df2, df8, TARGET_FER)
    soft = abs(loss4 - 0.5) <= 0.5 and abs(loss8 - 0.7) <= 0.5
    report(f"4/8-state loss {loss4:.2f}/{loss8:.2f} dB "
           f"(soft target 0.5/0.7 +- 0.5 {'met' if soft else 'missed'})")
    ok = [ordered_at_95(df4, df2, report), ordered_at_95(df8, df2, report),
          ordered_at_95(df8, df4, report)]
    assert all(ok)


FADING_GRIDS = {
    "fig7": {"soft": (9.0, 27.0, 1.5), "df": (15.0, 42.0, 3.0)},
    "fig8": {"soft": (12.0, 33.0, 1.5), "df": (15.0, 45.0, 3.0)},
    "fig11": {"soft": (6.0, 21.0, 1.5)},
    "fig12": {"soft": (9.0, 25.5, 1.5)},
}


def fading_curves(preset):
    """DISC, SIR and DF curves for two relays; DISC only for three."""
    spec = get_preset(preset)
    grids = FADING_GRIDS[preset]
    sweeps = {}
    for token in spec.schemes:
        if token.startswith("DF"):
            if "df" in grids:
                sweeps[token] = grids["df"]
        elif spec.k == 2 or token.startswith("DISC"):
            sweeps[token] = grids["soft"]
    return run_curves(preset, sweeps, min_frame_errors=200, max_frames=100_000)


@pytest.mark.criterion(11, "Rayleigh diversity slopes in FER window (1e-1, 1e-3): "
                           "2 relays DISC/SIR in [1.7, 2.3], DF in [0.8, 1.3]; 3 relays DISC >= 2.5")
@pytest.mark.slow
@pytest.mark.parametrize("preset", ["fig7", "fig8", "fig11", "fig12"])
def test_c11_diversity(preset, report):
    curves = fading_curves(preset)
    slopes = {t: diversity_slope(c) for t, c in curves.items()}
    report(f"{preset} " + ", ".join(f"{t} {v:.2f}" for t, v in slopes.items()))
    for token, slope in slopes.items():
        if get_preset(preset).k == 3:
            assert slope >= 2.5, token
        elif token.startswith("DF"):
            assert 0.8 <= slope <= 1.3, token
        else:
            assert 1.7 <= slope <= 2.3, token


# --- 12: determinism ----------------------------------------------------------

@pytest.mark.criterion(12, "byte-identical CSV at 1, 4 and 8 workers")
@pytest.mark.slow
def test_c12_determinism(tmp_path, report):
    spec = replace(get_preset("fig5"), schemes=("DISC:5/7:opt", "DISC:15/17:unord", "SIR", "DF:5/7"),
                   sweep=(0.0, 6.0, 2.0), min_frame_errors=30, max_frames=3000, batch_size=128,
                   seed=SEED)
    blobs = {}
    for workers in (1, 4, 8):
        out = tmp_path / f"w{workers}"
        emit(run_scenario(spec, workers=workers), out)
        blobs[workers] = (out / "fig5.csv").read_bytes()
    report(f"{len(blobs[1])} bytes, identical: {blobs[1] == blobs[4] == blobs[8]}")
    assert blobs[1] == blobs[4] == blobs[8]

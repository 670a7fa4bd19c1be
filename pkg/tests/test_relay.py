import numpy as np
import pytest

from discsim import kernels
from discsim.channel import LinkBudget, bpsk_modulate
from discsim.codes import CodeEnsemble, GeneratorSequence, PairingAssignment, conv_encode
from discsim.relay import (
    DestinationSideInfo,
    SchemeConfig,
    channel_llrs,
    joint_bcjr_decode,
    mrc_combine_decide,
    relay_process_df,
    relay_process_disc,
    relay_process_sir,
    run_batch,
    run_frame,
    simulate_batch,
)
from discsim.streams import frame_rng, frame_rngs
from oracles import brute_force_app


@pytest.mark.parametrize("gens", ["5", "5,7", "15,17", "3,1", "7,7,5", "13,15,17"])
@pytest.mark.parametrize("backend", ["python", None])
def test_bcjr_matches_exhaustive(gens, backend):
    e = CodeEnsemble.parse(gens)
    ns, out = e.trellis()
    rng = np.random.default_rng(len(gens))
    for n in (1, 4, 10):
        lc = rng.normal(0.5, 2.0, (len(e), n))
        app = kernels.bcjr_app(lc, ns, out, backend=backend)
        assert np.max(np.abs(app - brute_force_app(lc, e))) < 1e-9
        m = e.memory
        if m:
            lct = rng.normal(0.5, 2.0, (len(e), n + m))
            app = kernels.bcjr_app(lct, ns, out, terminated=True, backend=backend)[:n]
            assert np.max(np.abs(app - brute_force_app(lct, e, tail=m))) < 1e-9


def test_bcjr_backends_agree_on_long_frames():
    e = CodeEnsemble.parse("13,15,17")
    ns, out = e.trellis()
    lc = np.random.default_rng(0).normal(1.0, 3.0, (30, 3, 133))
    a = kernels.bcjr_app(lc, ns, out, backend="python")
    b = kernels.bcjr_app(lc, ns, out)
    assert np.allclose(a, b, atol=1e-9)


def test_single_identity_stream_is_symbolwise_map():
    e = CodeEnsemble.parse("1")
    rng = np.random.default_rng(1)
    rx = rng.normal(size=(1, 20)) + 1j * rng.normal(size=(1, 20))
    side = DestinationSideInfo(np.array([0.9 + 0.2j]), np.array([1.3]))
    app, bits = joint_bcjr_decode(rx, side, e)
    assert np.allclose(app, channel_llrs(rx, side)[0])
    assert np.array_equal(bits, mrc_combine_decide(rx, side))


def test_noiseless_decoding_recovers_bits():
    e = CodeEnsemble.parse("15,17")
    rng = np.random.default_rng(2)
    bits = rng.integers(0, 2, 40)
    tx = bpsk_modulate(e.encode(np.concatenate([bits, np.zeros(3, int)])))
    side = DestinationSideInfo(np.ones(2), np.full(2, 0.01))
    _, dec = joint_bcjr_decode(tx, side, e, tail=3)
    assert np.array_equal(dec, bits)
    _, dec = joint_bcjr_decode(tx[:, :40], side, e)
    assert np.array_equal(dec, bits)


def test_pairing_reorders_codes():
    e = CodeEnsemble.parse("5,7")
    bits = np.random.default_rng(3).integers(0, 2, 30)
    # relay 0 carries code 7, relay 1 carries code 5
    tx = bpsk_modulate(CodeEnsemble.parse("7,5").encode(bits))
    side = DestinationSideInfo(np.ones(2), np.full(2, 0.05))
    _, dec = joint_bcjr_decode(tx, side, e, pairing=PairingAssignment((1, 0)))
    assert np.array_equal(dec, bits)


def test_relay_noiseless_outputs():
    bits = np.random.default_rng(4).integers(0, 2, 50)
    x = bpsk_modulate(bits)
    g = GeneratorSequence.parse("7")
    ref = 2.0 * bpsk_modulate(conv_encode(bits, g))
    out = relay_process_disc(1e3 * x, g, 1e3, 1.0, 1.0, 4.0, truth=x)
    assert np.allclose(out.tx, ref)
    assert out.alpha == pytest.approx(1.0) and out.sigma2_in == pytest.approx(0.0)
    assert np.allclose(relay_process_df(x, g, 1.0, 4.0), ref)
    sir = relay_process_sir(1e3 * x, 1e3, 1.0, 1.0, 4.0, truth=x)
    assert np.allclose(sir.tx, 2.0 * x)


def test_relay_tail_is_known_zero():
    bits = np.random.default_rng(5).integers(0, 2, 20)
    x = bpsk_modulate(bits)
    g = GeneratorSequence.parse("15")
    padded = np.concatenate([bits, np.zeros(3, int)])
    out = relay_process_disc(1e3 * x, g, 1e3, 1.0, 1.0, 1.0, truth=x, tail=3)
    assert np.allclose(out.tx, bpsk_modulate(conv_encode(padded, g)))
    assert np.allclose(relay_process_df(x, g, 1.0, 1.0, tail=3),
                       bpsk_modulate(conv_encode(padded, g)))


def test_disc_with_identity_codes_equals_sir():
    budget = LinkBudget.from_snr_db([2.0, 4.0], 1.0)
    ident = CodeEnsemble.parse("1,1")
    disc = SchemeConfig("DISC", 2, ident)
    sir = SchemeConfig("SIR", 2)
    a = run_batch(disc, budget, "awgn", frame_rngs(1, "same", 0, 0, 200))
    b = run_batch(sir, budget, "awgn", frame_rngs(1, "same", 0, 0, 200))
    assert np.array_equal(a, b)


@pytest.mark.parametrize("scheme,gens", [("DISC", "5,7"), ("DISC", "15,17"), ("SIR", None),
                                         ("DF", "5,7")])
@pytest.mark.parametrize("mode", ["awgn", "rayleigh"])
def test_average_transmit_power(scheme, gens, mode):
    cfg = SchemeConfig(scheme, 2, CodeEnsemble.parse(gens) if gens else None)
    budget = LinkBudget.from_snr_db([3.0, 6.0], 3.0)
    tr = simulate_batch(cfg, budget, mode, frame_rngs(2, "power", 0, 0, 2000))
    assert np.mean(tr.tx**2) == pytest.approx(budget.p_r, rel=0.01)


def test_extreme_snrs():
    cfg = SchemeConfig("DISC", 2, CodeEnsemble.parse("5,7"))
    quiet = LinkBudget.from_snr_db([60.0, 60.0], 60.0)
    assert run_batch(cfg, quiet, "awgn", frame_rngs(0, "x", 0, 0, 50)).sum() == 0
    for scheme in ("SIR", "DF"):
        c = SchemeConfig(scheme, 2, CodeEnsemble.parse("5,7"))
        assert run_batch(c, quiet, "awgn", frame_rngs(0, "x", 0, 0, 50)).sum() == 0
    loud = LinkBudget.from_snr_db([-60.0, -60.0], -60.0)
    errs = run_batch(cfg, loud, "awgn", frame_rngs(0, "x", 0, 0, 200))
    assert errs.sum() / (200 * 130) == pytest.approx(0.5, abs=0.02)


def test_run_frame_is_reproducible():
    cfg = SchemeConfig("DISC", 2, CodeEnsemble.parse("5,7"))
    budget = LinkBudget.from_snr_db([0.0, 3.0], 0.0)
    a = run_frame(cfg, budget, "rayleigh", frame_rng(5, "f", 0, 17))
    b = run_frame(cfg, budget, "rayleigh", frame_rng(5, "f", 0, 17))
    assert a.bit_errors == b.bit_errors
    assert np.array_equal(a.decoded_bits, b.decoded_bits)
    # a frame's outcome does not depend on the batch it runs in
    errs = run_batch(cfg, budget, "rayleigh", frame_rngs(5, "f", 0, 10, 10))
    assert errs[7] == a.bit_errors


def test_df_propagates_relay_errors():
    # a perfect second hop exposes the relay's hard decision errors
    g = GeneratorSequence.parse("7")
    rng = np.random.default_rng(6)
    bits = rng.integers(0, 2, 130)
    x = bpsk_modulate(bits)
    rx = x.copy()
    rx[40] = -rx[40]
    tx = relay_process_df(rx, g, 1.0, 1.0)
    wrong = tx != bpsk_modulate(conv_encode(bits, g))
    assert wrong.sum() == 3 and list(np.nonzero(wrong)[0]) == [40, 41, 42]


def test_destination_snr_formula():
    # effective per-relay SNR |a|^2 / sigma2 against the closed form for a 4-state relay
    cfg = SchemeConfig("DISC", 2, CodeEnsemble.parse("5,7"), termination="none")
    budget = LinkBudget.from_snr_db([4.0, 4.0], 4.0)
    tr = simulate_batch(cfg, budget, "awgn", frame_rngs(3, "snr", 0, 0, 3000))
    out = tr.relay_outputs[1]  # code 7, d = 3
    snr_in = out.alpha**2 / out.sigma2_in
    rd = budget.snr_rd
    q = (1 + 1 / snr_in) ** 3
    closed = rd / ((q - 1) * rd + q)
    # interior symbols carry all d factors
    got = np.abs(tr.side.amp[:, 1, 10]) ** 2 / tr.side.sigma2[:, 1, 10]
    assert np.allclose(got, closed, rtol=1e-9)
    # the measured noise of the received stream agrees with the side information
    xc = bpsk_modulate(conv_encode(tr.bits, GeneratorSequence.parse("7")))
    w = tr.rx_dest[:, 1] - tr.side.amp[:, 1] * xc
    assert np.mean(np.abs(w) ** 2) == pytest.approx(np.mean(tr.side.sigma2[:, 1]), rel=0.02)


def test_edge_symbols_use_fewer_factors():
    g = GeneratorSequence.parse("15")  # taps at 0, 1, 3
    x = bpsk_modulate(np.random.default_rng(8).integers(0, 2, 10))
    out = relay_process_disc(0.8 * x, g, 1.0, 1.0, 1.0, 1.0, truth=x, tail=3)
    assert list(out.d_n) == [1, 2, 2, 3, 3, 3, 3, 3, 3, 3, 2, 1, 1]
    power = out.alpha**2 + out.sigma2_in
    assert np.allclose(out.p_x, power**out.d_n)


def test_config_validation():
    with pytest.raises(ValueError):
        SchemeConfig("DISC", 2, CodeEnsemble.parse("7,7"))
    with pytest.raises(ValueError):
        SchemeConfig("DISC", 3, CodeEnsemble.parse("5,7"))
    with pytest.raises(ValueError):
        SchemeConfig("DISC", 2)
    with pytest.raises(ValueError):
        SchemeConfig("DISC", 2, CodeEnsemble.parse("15,17"), frame_len=3)
    assert SchemeConfig("SIR", 3).tail == 0
    assert SchemeConfig("DF", 2, CodeEnsemble.parse("15,17")).tail == 3

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from raptor_mma import rng as rs
from raptor_mma.codec import AdapterStream, RaptorCode, RaptorCodeSpec, RatelessResult
from raptor_mma.msd import (
    BITS_PER_USE,
    CapacityGenie,
    app_llr,
    decode_multistage,
    ideal_uses,
    modulate,
    required_rbs,
    transmit_layers,
)
from raptor_mma.superposition import LayeredFrame, effective_snrs, exw_optimal_weights, grw_profile, superpose


def _setup(profile, k, n_uses, seed=1):
    L = profile.n_devices
    codes = [RaptorCode(RaptorCodeSpec(k=k, graph_seed=rs.device_seed(i, 1, base=seed))) for i in range(L)]
    adapters = [AdapterStream(rs.device_seed(i, 1, base=seed)) for i in range(L)]
    msgs = [rs.seed_stream(seed, i, rs.LANE_MESSAGE).integers(0, 2, k).astype(np.uint8) for i in range(L)]
    frame = transmit_layers(msgs, codes, adapters, profile, n_uses, rs.seed_stream(seed, 0, rs.LANE_CHANNEL))
    return codes, adapters, msgs, frame


def test_app_llr():
    assert app_llr(np.array([0.0]), 0.7, 0.3)[0] == 0
    assert app_llr(np.array([3.0]), 1.0, 2.0)[0] == pytest.approx(3.0)
    assert app_llr(np.array([3.0]), 0.5, 2.0, "paper")[0] == pytest.approx(2 * 0.25 * 3 / 2)
    with pytest.raises(ValueError):
        app_llr(np.array([1.0]), 1.0, 1.0, "other")


@given(st.floats(-50, 50), st.floats(1e-3, 5), st.floats(1e-3, 10))
def test_llr_sign(y, w, s2):
    assert np.sign(app_llr(np.array([y]), w, s2)[0]) == np.sign(y)


def test_required_rbs():
    assert required_rbs(1024, 1.024) == 1
    assert required_rbs(1024, 0.1) == 11
    assert required_rbs(1024, 0.0) == math.inf
    assert required_rbs(1024, 0.5, 1e6, 1e-3) == math.ceil(1024 / (1e3 * 0.5))


def test_two_exw_layers_with_genie():
    prof = exw_optimal_weights(2, 0.1)
    k = 1024
    cap = int(CapacityGenie().efficiency * 4 * ideal_uses(k, 0.1)) + 64
    codes, adapters, msgs, frame = _setup(prof, k, cap)
    rep = decode_multistage(frame, codes, adapters, msgs, decoder=CapacityGenie())
    assert not rep.outage
    for s in rep.per_stage:
        assert s.effective_snr == pytest.approx(0.1, rel=1e-12)
        assert s.realized_rate == pytest.approx(math.log2(1.1), rel=0.01)
        assert s.realized_rate <= math.log2(1.1)
    assert rep.min_rate == min(s.realized_rate for s in rep.per_stage)
    assert rep.rbs_required == required_rbs(k, rep.min_rate)
    assert sum(math.log2(1 + s.effective_snr) for s in rep.per_stage) == pytest.approx(math.log2(1 + prof.total_snr),
                                                                                        rel=1e-9)


def test_failed_stage_stays_as_interference():
    prof = exw_optimal_weights(3, 0.2)
    codes, adapters, msgs, frame = _setup(prof, 64, 400)

    def fail_first(code, llrs, truth, snr, _seen=[]):
        _seen.append(snr)
        if len(_seen) == 1:
            return RatelessResult(False, llrs.size, np.zeros(code.k, np.uint8), [])
        return CapacityGenie()(code, llrs, truth, snr)

    rep = decode_multistage(frame, codes, adapters, msgs, decoder=fail_first)
    w2 = prof.device_weights ** 2
    assert rep.outage and not rep.per_stage[0].success
    assert rep.per_stage[1].effective_snr == pytest.approx(w2[1] / (w2[0] + w2[2] + prof.noise_variance))
    assert rep.per_stage[2].effective_snr == pytest.approx(w2[2] / (w2[0] + prof.noise_variance))
    assert rep.to_csv().splitlines()[1].startswith("0,0,0,")


def test_single_device_near_noiseless():
    prof = exw_optimal_weights(1, 1e9)
    codes, adapters, msgs, frame = _setup(prof, 128, 400)
    rep = decode_multistage(frame, codes, adapters, msgs, cap_factor=1e9)
    s = rep.per_stage[0]
    assert s.success and BITS_PER_USE * s.symbols_consumed >= 128
    assert (BITS_PER_USE * s.symbols_consumed) % codes[0].spec.block_size == 0


def test_perfect_sic_residual_power():
    prof = exw_optimal_weights(4, 0.3)
    rng = rs.seed_stream(3)
    x = modulate(rng.integers(0, 2, (4, 100_000)))
    fr = superpose(x, prof, rng)
    w = prof.device_weights
    residual = fr.received.copy()
    for i in range(4):
        residual -= w[i] * x[i]
        expected = np.sum(w[i + 1:] ** 2) + prof.noise_variance
        assert abs(np.mean(residual ** 2) / expected - 1) < 0.02


def test_uses_grow_with_noise():
    # one noise shape scaled to three levels
    k = 128
    code = RaptorCode(RaptorCodeSpec(k=k, graph_seed=5))
    ad = AdapterStream(5)
    msg = rs.seed_stream(5).integers(0, 2, k).astype(np.uint8)
    shape = rs.seed_stream(6).standard_normal(BITS_PER_USE * 2000)
    used = []
    for snr in (2.0, 0.5, 0.125):
        prof = exw_optimal_weights(1, snr)
        x = modulate(code.encode(msg, shape.size))
        z = shape * math.sqrt(prof.noise_variance)
        frame = LayeredFrame(x[None, :], x + z, prof, z)
        rep = decode_multistage(frame, [code], [ad], [msg])
        used.append(rep.per_stage[0].symbols_consumed)
    assert used == sorted(used)


def test_grw_four_devices_efficiency_floor():
    prof = grw_profile([1, 2, 1], 0.1)
    k = 1024
    snr = effective_snrs(prof)
    cap = int(math.ceil(4 * ideal_uses(k, snr.min())))
    codes, adapters, msgs, frame = _setup(prof, k, cap, seed=2)
    rep = decode_multistage(frame, codes, adapters, msgs)
    assert not rep.outage
    for s, g in zip(rep.per_stage, snr):
        assert s.effective_snr == pytest.approx(g)
        assert s.realized_rate >= 0.6 * math.log2(1 + g)

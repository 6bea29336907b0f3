import math
import random
from fractions import Fraction

import pytest

import le3d


def ecdf_gap(a, b):
    points = sorted(set(a) | set(b))
    best = Fraction(0)
    for x in points:
        fa = Fraction(sum(1 for v in a if v <= x), len(a))
        fb = Fraction(sum(1 for v in b if v <= x), len(b))
        best = max(best, abs(fa - fb))
    return best


def test_ks_gap_matches_fraction_oracle():
    rng = random.Random(7)
    for _ in range(200):
        a = [rng.randint(0, 6) for _ in range(rng.randint(1, 12))]
        b = [rng.randint(0, 6) for _ in range(rng.randint(1, 12))]
        num, den = le3d.ks_two_sample_gap(a, b)
        assert Fraction(num, den) == ecdf_gap(a, b)
        assert le3d.ks_two_sample(a, b).statistic_d == pytest.approx(float(ecdf_gap(a, b)), abs=1e-12)


def test_ks_rejects_empty_and_nan():
    with pytest.raises(le3d.InputError):
        le3d.ks_two_sample([], [1.0])
    with pytest.raises(le3d.InputError):
        le3d.ks_two_sample([math.nan], [1.0])


def test_adwin_flags_noiseless_step():
    adwin = le3d.Adwin()
    flagged = [i for i in range(2000) if adwin.update(0.0 if i < 1000 else 1.0)]
    assert flagged and 1000 <= flagged[0] <= 1010
    assert adwin.width < 2000


def test_estimators_quiet_on_constant_stream():
    pht = le3d.PageHinkley()
    kswin = le3d.Kswin()
    assert not any(pht.update(5.0) for _ in range(1000))
    assert not any(kswin.update(5.0) for _ in range(1000))


def test_static_threshold_bounds_inclusive():
    t = le3d.StaticThreshold(low=0.0, high=1.0)
    assert [t.update(v) for v in (-0.1, 0.0, 1.0, 1.1)] == [True, False, False, True]


def test_detector_flags_emulated_step():
    profile = le3d.StreamProfile(mean=20.0, stddev=0.15, sample_period_ms=100, seed=1, sensor_type="temperature")
    emu = le3d.Emulator(profile, "s1", "site-a")
    det = le3d.Detector("det-a", "site-a")
    det.register_stream("s1", vote_window=100)
    decisions = []
    for i in range(1200):
        now = i * 100
        if i == 600:
            ack = emu.apply_drift("s1", "step", 1.0, issued_at=now)
            assert ack.accepted
        d = det.ingest(emu.next_sample(now))
        if d is not None:
            decisions.append(d)
    assert decisions and decisions[0].drifting
    assert decisions[0].seq_at_decision >= 600
    assert set(decisions[0].votes) == {"adwin", "pht", "kswin"}


def test_decision_payload_carries_no_values():
    det = le3d.Detector("det-a", "site-a")
    det.register_stream("s1")
    for i in range(50):
        det.ingest(le3d.Sample("s1", "site-a", i, 1.0, i))
    payload = le3d.encode_decision(det.status("s1"))
    assert le3d.decode_kind(payload) == "decision"
    assert le3d.payload_is_private(payload)
    assert le3d.decode_decision(payload).stream_id == "s1"


def test_sample_codec_roundtrip_and_errors():
    s = le3d.Sample("s9", "site-b", 1234, 3.25, 7, sensor_type="humidity", unit="%")
    back = le3d.decode_sample(le3d.encode_sample(s))
    assert (back.stream_id, back.timestamp, back.value, back.seq, back.sensor_type) == ("s9", 1234, 3.25, 7, "humidity")
    with pytest.raises(le3d.DecodeError) as info:
        le3d.decode_sample("{}")
    assert info.value.field == "schema_version"


def test_fit_profile():
    rows = [(0, 1.0), (1000, 2.0), (3000, 3.0)]
    p = le3d.fit_profile(rows)
    assert p.mean == pytest.approx(2.0)
    assert p.stddev == pytest.approx(1.0)
    assert p.sample_period_ms == 1500


def test_config_errors():
    with pytest.raises(le3d.ConfigError):
        le3d.Adwin(delta=0.0)
    with pytest.raises(le3d.ConfigError):
        le3d.run_scenario("sideways")


@pytest.mark.parametrize("script,seed", [("natural", 3), ("abnormal", 4)])
def test_scenario(script, seed):
    result = le3d.run_scenario(script, seed)
    assert result["correct"], result["detail"]
    assert result["privacy_violations"] == 0
    assert result["payloads"] > 0

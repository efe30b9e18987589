import math

import numpy as np
import pytest

from bondtca.calendars import BusinessCalendar
from bondtca.impact import empirical_signature, estimate_correlation, estimate_response
from bondtca.ingest import parse_trace_csv
from bondtca.synthgen import (
    KernelSpec,
    SignProcess,
    SynthConfig,
    generate_tim_series,
    generate_trace_fixture,
    market_context_rows,
    reference_rows,
)


class TestKernelSpec:
    def test_exponential_values(self):
        k = KernelSpec("exponential", 25.0, beta=0.4)
        vals = k.values(3)
        assert vals[0] == 25.0
        assert vals[1] == pytest.approx(25.0 * math.exp(-0.4))

    def test_power_law_values(self):
        k = KernelSpec("power_law", 10.0, gamma=1.0)
        assert k.values(3)[2] == pytest.approx(10.0 / 3.0)

    def test_constant(self):
        assert np.allclose(KernelSpec("constant", 7.0).values(5), 7.0)


class TestTimSeries:
    def test_single_event_constant_kernel(self):
        cfg = SynthConfig(
            seed=0, n_events=1, kernel_buy=KernelSpec("constant", 5.0), noise_sd_bp=0.0,
            volume_round=0.0, volume_log_sd=0.0, volume_log_mean=0.0,
        )
        s, _ = generate_tim_series(cfg)
        assert s.mid[0] == pytest.approx(5.0 * s.epsilon[0])

    def test_one_jump_then_flat(self):
        cfg = SynthConfig(
            seed=1, n_events=50, kernel_buy=KernelSpec("constant", 5.0), noise_sd_bp=0.0,
        )
        s, _ = generate_tim_series(cfg)
        # constant kernel: mid is 5 * cumulative signed flow (alpha = 0)
        assert np.allclose(s.mid, 5.0 * np.cumsum(s.epsilon))

    def test_pure_noise_random_walk(self):
        cfg = SynthConfig(
            seed=2, n_events=100_000, kernel_buy=KernelSpec("constant", 0.0), noise_sd_bp=3.0,
        )
        s, _ = generate_tim_series(cfg)
        sig = empirical_signature(s.mid, 10)
        for l in range(10):
            assert abs(sig.d[l] - 9.0) < 4 * sig.se[l]

    def test_sample_statistics_match_analytic(self):
        cfg = SynthConfig(
            seed=3, n_events=200_000, kernel_buy=KernelSpec("exponential", 25.0, beta=0.4),
            noise_sd_bp=5.0,
        )
        s, manifest = generate_tim_series(cfg)
        corr = estimate_correlation(s, range(-3, 4))
        assert corr(0) == pytest.approx(1.0)
        for n in (1, 2, 3):
            assert abs(corr(n)) < 3.5 / math.sqrt(s.t)
        resp = estimate_response(s, 5)
        truth = np.array(manifest.truth_kernels["+1"])
        se = float(np.std(s.returns)) / math.sqrt(s.t)
        for l in range(1, 6):
            assert resp(l) == pytest.approx(truth[l] - truth[l - 1], abs=3.5 * se)

    def test_markov_autocorrelation(self):
        cfg = SynthConfig(
            seed=4, n_events=100_000, sign=SignProcess("markov", flip_prob=0.25),
            kernel_buy=KernelSpec("constant", 0.0), noise_sd_bp=1.0,
        )
        s, _ = generate_tim_series(cfg)
        corr = estimate_correlation(s, range(0, 6))
        for n in range(6):
            assert corr(n) == pytest.approx(0.5**n, abs=3.5 / math.sqrt(s.t))

    def test_bit_exact_reproducibility(self):
        cfg = SynthConfig(seed=5, n_events=5000)
        s1, _ = generate_tim_series(cfg)
        s2, _ = generate_tim_series(cfg)
        assert np.array_equal(s1.mid, s2.mid)
        assert np.array_equal(s1.volume, s2.volume)

    def test_bond_streams_differ(self):
        cfg = SynthConfig(seed=5, n_events=5000)
        s1, _ = generate_tim_series(cfg, bond_index=0)
        s2, _ = generate_tim_series(cfg, bond_index=1)
        assert not np.array_equal(s1.epsilon, s2.epsilon)


class TestTraceFixture:
    def test_bytes_reproducible(self):
        cfg = SynthConfig(seed=6, n_events=500, rpt_fraction=0.1, cancel_rate=0.05)
        t1, _ = generate_trace_fixture(cfg)
        t2, _ = generate_trace_fixture(cfg)
        assert t1 == t2

    def test_prices_straddle_mid_exactly(self):
        cfg = SynthConfig(seed=7, n_events=300, half_spread_bp=30.0)
        tape, _ = generate_trace_fixture(cfg)
        reports = parse_trace_csv(tape)
        s, _ = generate_tim_series(cfg)
        half_price = cfg.base_price * cfg.half_spread_bp / 1e4
        for k, r in enumerate(reports[: s.t]):
            mid_price = cfg.base_price * (1.0 + s.mid[k] / 1e4)
            expect = mid_price + (half_price if s.epsilon[k] > 0 else -half_price)
            assert r.price == pytest.approx(expect, abs=1e-9)
        buys = [r for r in reports if r.customer_side == "customer_buy"]
        sells = [r for r in reports if r.customer_side == "customer_sell"]
        assert buys and sells

    def test_timestamps_in_session_and_business_days(self):
        cal = BusinessCalendar()
        cfg = SynthConfig(seed=8, n_events=2000, rpt_fraction=0.1)
        tape, _ = generate_trace_fixture(cfg, cal)
        for r in parse_trace_csv(tape):
            assert cal.is_business_day(r.timestamp.date())
            assert 8 * 3600 <= (
                r.timestamp.hour * 3600 + r.timestamp.minute * 60 + r.timestamp.second
            ) <= 17 * 3600 + 15 * 60

    def test_manifest_counts(self):
        cfg = SynthConfig(seed=9, n_events=1000, cancel_rate=0.1)
        tape, manifest = generate_trace_fixture(cfg)
        reports = parse_trace_csv(tape)
        cancels = sum(1 for r in reports if r.kind == "cancel")
        assert cancels == manifest.lifecycle_counts.get("cancels", 0)
        assert cancels == pytest.approx(100, abs=35)

    def test_reference_and_context_cover_bonds_and_weeks(self):
        cfg = SynthConfig(seed=10, n_events=200, n_bonds=3)
        refs = reference_rows(cfg)
        assert [r["cusip"] for r in refs] == ["SYN00000X", "SYN00001X", "SYN00002X"]
        from bondtca.calendars import IsoWeek

        weeks = [IsoWeek(2015, w) for w in range(2, 6)]
        ctx = market_context_rows(cfg, weeks)
        assert len(ctx) == 4
        assert all(0.0 < r["libor_ois"] < 1.0 for r in ctx)

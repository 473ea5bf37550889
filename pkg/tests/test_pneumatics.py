import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pneunet.pneumatics import (
    ControllerGains,
    ControllerState,
    Kind,
    ReferenceWaveform,
    SupplyLine,
    Valve,
    lowpass_step,
    pwm_step,
    run_closed_loop,
    staircase,
    tracking_error,
    triangle,
)


class TestStaircase:
    def test_default_protocol(self):
        s = staircase(5, 10, 50, 400)
        assert s.size == 11 * 4000
        levels = s.reshape(11, 4000)
        assert np.all(levels == levels[:, :1])
        np.testing.assert_array_equal(levels[:, 0], np.arange(0, 55, 5))

    def test_two_levels(self):
        assert set(staircase(50, 1, 50, 400).tolist()) == {0.0, 50.0}

    def test_final_sample(self):
        assert staircase(5, 10, 50, 400)[-1] == 50.0

    def test_step_must_divide(self):
        with pytest.raises(ValueError):
            staircase(7, 10, 50, 400)

    def test_hold_must_be_whole_samples(self):
        with pytest.raises(ValueError):
            staircase(5, 0.0001, 50, 400)


class TestTriangle:
    def test_low_frequency_trial(self):
        t = triangle(0.0625, 45, 12, 400)
        assert t.size / 400 == 192.0
        assert t.max() == 45.0

    def test_single_fast_cycle(self):
        t = triangle(0.25, 40, 1, 400)
        assert t.size / 400 == 4.0
        assert t.max() == 40.0

    @given(st.sampled_from([0.0625, 0.125, 0.25, 0.5, 1.0]), st.floats(1, 80), st.integers(1, 5))
    def test_every_cycle_peaks_and_repeats(self, f, pkpk, cycles):
        t = triangle(f, pkpk, cycles, 400)
        per = t.reshape(cycles, -1)
        assert np.all(per.max(axis=1) == pkpk)
        assert per[:, 0].max() == 0.0
        np.testing.assert_allclose(per[1:], per[:-1], rtol=0, atol=1e-12)

    def test_needs_a_cycle(self):
        with pytest.raises(ValueError):
            triangle(0.25, 40, 0)

    def test_nyquist(self):
        with pytest.raises(ValueError):
            triangle(300.0, 40, 1, 400)


class TestReferenceWaveform:
    def test_invariants(self):
        with pytest.raises(ValueError):
            ReferenceWaveform(Kind.TRIANGLE, 0.0, 400, 0.25)
        with pytest.raises(ValueError):
            ReferenceWaveform(Kind.TRIANGLE, 40, 400, None)

    def test_round_trip(self):
        for ref in (ReferenceWaveform("triangle", 45, 400, 0.0625, 3),
                    ReferenceWaveform("staircase", 50, 400, step_kPa=5, hold_s=10)):
            assert ReferenceWaveform.from_dict(ref.to_dict()) == ref

    def test_sample_grid(self):
        t, v = ReferenceWaveform("triangle", 40, 400, 0.25, 2).sample()
        assert t.size == v.size == 3200
        assert t[1] == 1 / 400

    def test_kind_specific_properties(self):
        tri = ReferenceWaveform("triangle", 40, 400, 0.25, 2)
        assert tri.samples_per_cycle == 1600
        with pytest.raises(ValueError):
            tri.samples_per_level
        st_ = ReferenceWaveform("staircase", 50, 400)
        assert st_.samples_per_level == 4000
        with pytest.raises(ValueError):
            st_.samples_per_cycle


class TestLowpass:
    def test_dc_gain(self):
        fc, dt = 5.0, 1 / 400
        y = 0.0
        for _ in range(int(math.ceil(5 / (2 * math.pi * fc) / dt))):
            y = lowpass_step(y, 10.0, fc, dt)
        assert abs(y - 10.0) <= 0.1

    def test_fixed_point(self):
        assert lowpass_step(3.25, 3.25, 5.0, 0.0025) == 3.25

    def test_step_rise_time(self):
        # analytic first-order response reaches 1 - 1/e at t = 1 / (2 pi fc)
        fc, dt = 5.0, 1 / 400
        y, k = 0.0, 0
        while y < 1 - math.exp(-1):
            y = lowpass_step(y, 1.0, fc, dt)
            k += 1
        assert abs(k - 1 / (2 * math.pi * fc) / dt) <= 1

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=50), st.floats(-100, 100))
    def test_bounded_by_input_range(self, xs, y0):
        y = y0
        lo, hi = y0, y0
        for x in xs:
            y = lowpass_step(y, x, 5.0, 0.0025)
            lo, hi = min(lo, x), max(hi, x)
            assert lo - 1e-9 <= y <= hi + 1e-9

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            lowpass_step(0, 1, 5.0, 0.0)


class TestPwm:
    gains = ControllerGains()

    def test_balanced_error_gives_zero_duty(self):
        st_, sched = pwm_step(ControllerState(20.0), 20.0, 20.0, self.gains)
        assert st_.duty == 0.0
        assert sched == ((Valve.EXHAUST, self.gains.dt),)

    def test_saturated_inflate(self):
        st_, sched = pwm_step(ControllerState(), 50.0, 0.0, self.gains)
        assert st_.duty == 1.0
        assert sched == ((Valve.INFLATE, self.gains.dt),)

    @given(st.floats(0, 80), st.floats(0, 80), st.floats(0, 80), st.integers(0, 100))
    def test_schedule_covers_sample_exclusively(self, ref, sensed, filt, k):
        st_, sched = pwm_step(ControllerState(filt, 0.0, Valve.EXHAUST, k), ref, sensed, self.gains)
        assert 0.0 <= st_.duty <= 1.0
        assert sum(h for _, h in sched) == pytest.approx(self.gains.dt, rel=1e-12)
        assert [v for v, _ in sched] in ([Valve.INFLATE], [Valve.EXHAUST],
                                         [Valve.INFLATE, Valve.EXHAUST])

    def test_duty_spreads_over_carrier(self):
        # 50 % duty on a 4-sample carrier: inlet open for the first two samples
        ctrl = ControllerState(0.0)
        opened = []
        for _ in range(4):
            ctrl, sched = pwm_step(ctrl, 0.25, 0.0, ControllerGains(gain=2.0))
            ctrl = ControllerState(0.0, ctrl.duty, ctrl.valve_state, ctrl.sample)
            opened.append(sum(h for v, h in sched if v is Valve.INFLATE))
        np.testing.assert_allclose(opened, [0.0025, 0.0025, 0.0, 0.0], atol=1e-15)

    def test_carrier_must_fit_samples(self):
        with pytest.raises(ValueError):
            ControllerGains(pwm_period_s=0.011)

    def test_state_invariant(self):
        with pytest.raises(ValueError):
            ControllerState(duty=1.5)

    def test_inlined_loop_matches_step_functions(self):
        ref = triangle(0.25, 55.0, 1)
        line = SupplyLine()
        trace = run_closed_loop(ref, self.gains, line)
        ctrl, p = ControllerState(), 0.0
        for k, r in enumerate(ref):
            ctrl, sched = pwm_step(ctrl, float(r), p, self.gains)
            p = line.apply(p, sched)
            assert trace.measured[k] == ctrl.filtered_pressure
            assert trace.line[k] == p
            assert trace.duty[k] == ctrl.duty

    def test_tracks_fast_triangle(self):
        ref = triangle(0.25, 55.0, 12)
        _, nrmse = tracking_error(ref, run_closed_loop(ref).measured)
        assert nrmse <= 0.01

    def test_supply_line_limits(self):
        line = SupplyLine(100.0, 0.2)
        assert line.step(0.0, Valve.INFLATE, 100.0) == pytest.approx(100.0)
        assert line.step(60.0, Valve.EXHAUST, 100.0) == pytest.approx(0.0, abs=1e-12)
        with pytest.raises(ValueError):
            SupplyLine(0.0)


class TestTrackingError:
    def test_perfect(self):
        ref = triangle(0.25, 55, 1)
        assert tracking_error(ref, ref) == (0.0, 0.0)

    def test_constant_offset(self):
        ref = triangle(0.25, 55, 1)
        rmse, nrmse = tracking_error(ref, ref + 0.4)
        assert rmse == pytest.approx(0.4, rel=1e-12)
        assert nrmse == pytest.approx(0.4 / 55, rel=1e-12)
        assert round(100 * nrmse, 3) == 0.727

    def test_undefined(self):
        with pytest.raises(ValueError):
            tracking_error([3.0, 3.0], [3.0, 3.1])
        with pytest.raises(ValueError):
            tracking_error([], [])
        with pytest.raises(ValueError):
            tracking_error([1.0, 2.0], [1.0])

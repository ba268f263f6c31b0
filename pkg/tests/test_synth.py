import numpy as np
import pytest

from campaigntrends import InvalidInputError, piecewise_linear, synth_values


class TestPiecewiseLinear:
    def test_exact_triangle(self):
        signal = piecewise_linear(61, [30], [1.0, -1.0])
        assert signal[0] == 0.0
        assert signal[30] == 30.0
        assert signal[60] == 0.0
        assert np.array_equal(signal[:31], np.arange(31.0))

    def test_no_knots_is_one_ramp(self):
        assert np.array_equal(piecewise_linear(5, [], [2.0]), [0.0, 2.0, 4.0, 6.0, 8.0])

    def test_knot_outside_interior_rejected(self):
        with pytest.raises(InvalidInputError):
            piecewise_linear(10, [0], [1.0, 2.0])
        with pytest.raises(InvalidInputError):
            piecewise_linear(10, [9], [1.0, 2.0])

    def test_slope_count_mismatch_rejected(self):
        with pytest.raises(InvalidInputError):
            piecewise_linear(10, [5], [1.0])

    def test_unsorted_knots_rejected(self):
        with pytest.raises(InvalidInputError):
            piecewise_linear(20, [9, 4], [1.0, 2.0, 3.0])


class TestSynthValues:
    def test_zero_noise_is_exact_signal(self):
        assert np.array_equal(
            synth_values(61, [30], [1.0, -1.0], 0.0, 123),
            piecewise_linear(61, [30], [1.0, -1.0]),
        )

    def test_seed_determinism(self):
        a = synth_values(90, [30, 60], [1.0, -0.5, 2.0], 0.7, 7)
        b = synth_values(90, [30, 60], [1.0, -0.5, 2.0], 0.7, 7)
        assert np.array_equal(a, b)

    def test_different_seeds_differ(self):
        a = synth_values(90, [30, 60], [1.0, -0.5, 2.0], 0.7, 7)
        b = synth_values(90, [30, 60], [1.0, -0.5, 2.0], 0.7, 8)
        assert not np.array_equal(a, b)

    def test_negative_noise_rejected(self):
        with pytest.raises(InvalidInputError):
            synth_values(10, [], [1.0], -0.1, 0)

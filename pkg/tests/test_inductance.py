import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iclxtalk.errors import InvalidArgument, SingularityError
from iclxtalk.geometry import Coil, Segment, spiral_path
from iclxtalk.inductance import (
    QuadratureConfig,
    coil_pair,
    coupling_coefficient,
    fit_distance_exponent,
    mutual_inductance,
    self_inductance,
)
from oracles import exact_polyline_mutual, fine_midpoint_mutual, square_loop, wheeler_square_spiral

TABLE_COIL = Coil(250, 5, 9, 1)


def _segments(corners):
    return [Segment(p, q) for p, q in zip(corners, corners[1:])]


class TestMutual:
    def test_coaxial_loops_match_fine_oracle(self):
        a, b = square_loop(250), square_loop(250, z=106)
        oracle = fine_midpoint_mutual(a, b, step=0.5)
        m = mutual_inductance(_segments(a), _segments(b))
        assert m == pytest.approx(oracle, rel=5e-3)
        # the oracle itself sits on the closed form
        assert oracle == pytest.approx(exact_polyline_mutual(a, b), rel=1e-5)

    def test_offset_loops_match_closed_form(self):
        a, b = square_loop(250), square_loop(250, z=106, cx=260)
        m = mutual_inductance(_segments(a), _segments(b), QuadratureConfig(max_segment_len=2))
        assert m < 0
        assert m == pytest.approx(exact_polyline_mutual(a, b), rel=5e-3)

    def test_symmetric_bit_exact(self):
        a = spiral_path(TABLE_COIL)
        b = spiral_path(TABLE_COIL.moved((260, 40, 106)))
        assert mutual_inductance(a, b) == mutual_inductance(b, a)

    def test_orthogonal_segments_contribute_nothing(self):
        a = [Segment((0, 0, 0), (10, 0, 0))]
        b = [Segment((20, -5, 3), (20, 5, 3))]
        assert mutual_inductance(a, b) == 0.0

    def test_singularity_floor(self):
        a = [Segment((0, 0, 0), (10, 0, 0))]
        b = [Segment((0, 0, 0.05), (10, 0, 0.05))]
        with pytest.raises(SingularityError):
            mutual_inductance(a, b)

    def test_empty_path_rejected(self):
        with pytest.raises(InvalidArgument):
            mutual_inductance([], spiral_path(TABLE_COIL))

    def test_converges_under_refinement(self):
        a = spiral_path(TABLE_COIL)
        b = spiral_path(TABLE_COIL.moved((0, 0, 106)))
        coarse = mutual_inductance(a, b, QuadratureConfig(max_segment_len=5))
        fine = mutual_inductance(a, b, QuadratureConfig(max_segment_len=2.5))
        assert abs(coarse - fine) / abs(fine) < 5e-3

    def test_worker_count_does_not_change_result(self):
        a = spiral_path(TABLE_COIL)
        b = spiral_path(TABLE_COIL.moved((0, 0, 106)))
        cfg = QuadratureConfig(max_segment_len=1.0)
        serial = mutual_inductance(a, b, cfg)
        assert mutual_inductance(a, b, QuadratureConfig(1.0, workers=4)) == serial

    def test_decays_with_lateral_distance(self):
        a = spiral_path(TABLE_COIL)
        ms = [abs(mutual_inductance(a, spiral_path(TABLE_COIL.moved((d, 0, 0)))))
              for d in (260, 270, 340)]
        assert ms[0] > ms[1] > ms[2]

    @settings(max_examples=15, deadline=None)
    @given(dx=st.floats(-400, 400), dy=st.floats(-400, 400), dz=st.floats(5, 300),
           turns=st.integers(1, 4))
    def test_reciprocity(self, dx, dy, dz, turns):
        a = spiral_path(Coil(200, turns, 6, 2))
        b = spiral_path(Coil(150, 2, 5, 1, center=(dx, dy, dz), winding="clockwise"))
        m_ab, m_ba = mutual_inductance(a, b), mutual_inductance(b, a)
        assert abs(m_ab - m_ba) <= 1e-12 * abs(m_ab)


class TestSelfInductance:
    def test_positive_and_increasing_in_turns(self):
        values = [self_inductance(spiral_path(Coil(250, n, 9, 1)), 9) for n in range(1, 6)]
        assert values[0] > 0
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_close_to_wheeler_closed_form(self):
        L = self_inductance(spiral_path(TABLE_COIL), 9)
        # conductor edges: centreline +- half a trace width
        ref = wheeler_square_spiral(5, 250 + 9, 170 - 9)
        assert L == pytest.approx(ref, rel=0.20)

    def test_scales_linearly_with_size(self):
        small = self_inductance(spiral_path(TABLE_COIL), 9)
        big = self_inductance(spiral_path(Coil(500, 5, 18, 2)), 18)
        assert big / small == pytest.approx(2.0, rel=0.01)

    def test_bad_width(self):
        with pytest.raises(InvalidArgument):
            self_inductance(spiral_path(TABLE_COIL), 0)

    def test_pair_coupling_physical(self):
        tx = spiral_path(TABLE_COIL)
        rx = spiral_path(TABLE_COIL.moved((0, 0, 106)))
        res = coil_pair(tx, 9, rx, 9)
        assert 0 < res.k <= 1 + 1e-3
        assert not res.k_out_of_range
        assert res.k == pytest.approx(res.M / math.sqrt(res.L1 * res.L2))


class TestCouplingCoefficient:
    def test_perfect(self):
        assert coupling_coefficient(math.sqrt(3e-9 * 12e-9), 3e-9, 12e-9) == pytest.approx(1.0)

    def test_zero(self):
        assert coupling_coefficient(0.0, 1e-9, 1e-9) == 0.0

    def test_substitution(self):
        assert coupling_coefficient(2e-9, 10e-9, 10e-9) == pytest.approx(0.2)

    def test_rejects_non_positive(self):
        with pytest.raises(InvalidArgument):
            coupling_coefficient(1e-9, 0.0, 1e-9)


class TestDistanceExponent:
    def test_exact_power_law(self):
        fit = fit_distance_exponent([(d, 5 / d**2) for d in (1, 2, 4)])
        assert fit.n == pytest.approx(2, abs=1e-12)
        assert fit.c == pytest.approx(5, rel=1e-12)
        assert fit.residual < 1e-12

    def test_noisy_samples(self):
        rng = np.random.default_rng(0)
        d = np.array([1.0, 1.5, 2.0, 3.0, 5.0])
        m = -3.0 / d**2.5 * np.exp(rng.normal(0, 0.05, d.size))
        fit = fit_distance_exponent(list(zip(d, m)))
        assert math.isfinite(fit.n) and fit.residual > 0
        assert fit.c < 0

    def test_published_separation_data(self):
        # on-chip dB figures at 10/20/90 um edge gaps, as centre distances
        samples = [(260, 10 ** (-26.30 / 20)), (270, 10 ** (-27.92 / 20)), (340, 10 ** (-38.64 / 20))]
        fit = fit_distance_exponent(samples)
        assert fit.n > 0
        assert fit.n == pytest.approx(5.3162, abs=1e-4)

    @pytest.mark.parametrize("samples", [
        [(1, 1.0)],
        [(1, 1.0), (2, -1.0)],
        [(1, 1.0), (2, 0.0)],
        [(0, 1.0), (2, 1.0)],
    ])
    def test_invalid(self, samples):
        with pytest.raises(InvalidArgument):
            fit_distance_exponent(samples)

    def test_repeated_distance_is_degenerate(self):
        assert fit_distance_exponent([(2, 1.0), (2, 1.1)]).degenerate

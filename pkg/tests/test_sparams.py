import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iclxtalk.channel import PathClass, aggregate_isr
from iclxtalk.errors import InvalidArgument, ParseError
from iclxtalk.geometry import Die
from iclxtalk.sparams import (
    PortMap,
    TouchstoneData,
    gain_at,
    gain_db_at,
    parse_touchstone,
    from_complex,
    ports_from_filename,
    read_touchstone,
    serialize_touchstone,
    to_channel,
    to_complex,
)

GHZ = 1e9
ROW2 = "1.0 0.5 0 0.12 0 0.12 0 0.5 0\n"


class TestParse:
    def test_worked_pair(self, fixtures):
        ts = read_touchstone(fixtures / "worked_pair.s2p")
        assert ts.n_ports == 2
        assert abs(gain_at(ts, 2, 1, 1 * GHZ)) == pytest.approx(0.12, rel=1e-12)

    def test_db_value(self):
        ts = parse_touchstone("# GHz S DB R 50\n1 -3 0 -18.42 0 -18.42 0 -3 0\n", 2)
        z = ts.s[0, 1, 0]
        assert abs(z.real - 0.1200) < 1e-4 and abs(z.imag) < 1e-12

    def test_two_port_column_order(self):
        ts = parse_touchstone("# GHz S RI\n1 11 0 21 0 12 0 22 0\n", 2)
        assert ts.s[0].real.tolist() == [[11, 12], [21, 22]]

    def test_four_port_is_row_major_and_wrapped(self, fixtures):
        ts = read_touchstone(fixtures / "worked_2pair.s4p")
        assert ts.freq.tolist() == [1e9, 2e9]
        assert abs(ts.s[0, 3, 1]) == pytest.approx(0.009)  # S42
        assert abs(ts.s[0, 2, 0]) == pytest.approx(0.06)  # S31
        assert cmath.phase(ts.s[1, 0, 1]) == pytest.approx(math.radians(-20))

    def test_units_and_impedance(self, fixtures):
        ts = read_touchstone(fixtures / "one_port_db.s1p")
        assert ts.ref_impedance == 75
        ri = read_touchstone(fixtures / "one_port.s1p")
        assert ri.freq.tolist() == [100e6, 500e6, 1000e6]
        assert ri.s[2, 0, 0] == complex(0.4, -0.55)

    def test_default_unit_and_format_noted(self):
        ts = parse_touchstone("# S\n1 0.5 10\n", 1)
        assert ts.freq[0] == 1e9
        assert any("GHz" in d for d in ts.diagnostics)

    def test_case_insensitive_any_order(self):
        a = parse_touchstone("# ma r 50 s ghz\n" + ROW2, 2)
        b = parse_touchstone("# GHz S MA R 50\n" + ROW2, 2)
        np.testing.assert_array_equal(a.s, b.s)

    @pytest.mark.parametrize(
        "text, line",
        [
            ("! no options\n1 0 0\n", 2),
            ("# GHz S RI\n", None),
            ("# GHz S RI\n2 0 0\n1 0 0\n", 3),
            ("# GHz S RI\n1 0 0 0\n", 2),
            ("# GHz S RI\n1 0 x\n", 2),
            ("# GHz S RI\n[Version] 2.0\n", 2),
        ],
        ids=["no-option-line", "empty", "non-monotonic", "value-count", "not-number", "v2"],
    )
    def test_errors_carry_line_numbers(self, text, line):
        with pytest.raises(ParseError) as e:
            parse_touchstone(text, 1)
        if line is not None:
            assert e.value.line == line and str(e.value).startswith(f"line {line}:")

    def test_missing_option_line(self):
        with pytest.raises(ParseError, match="option line"):
            parse_touchstone("1 0.5 0\n", 1)

    def test_bytes_input(self):
        ts = parse_touchstone(b"# GHz S RI\n1 0.5 0\n", 1)
        assert ts.s[0, 0, 0] == 0.5

    @pytest.mark.parametrize("name, n", [("a.s1p", 1), ("b.S4P", 4), ("dir/x.s2p", 2)])
    def test_ports_from_filename(self, name, n):
        assert ports_from_filename(name) == n

    def test_ports_from_bad_filename(self):
        with pytest.raises(ParseError):
            ports_from_filename("data.txt")


OPTION_MUTATIONS = [
    ("# GHz Y MA R 50", "Y"),
    ("# GHz Z MA R 50", "Z"),
    ("# THz S MA R 50", "THz"),
    ("# GHz S XY R 50", "XY"),
    ("# GHz S MA Q 50", "Q"),
    ("# GHz S MA R", "R"),
    ("# GHz S MA R fifty", "fifty"),
    ("# GHz S MA R -50", "-50"),
    ("# GHz GHz S MA R 50", "GHz"),
    ("# GHz S S MA R 50", "S"),
    ("# GHz S MA DB R 50", "DB"),
    ("# GHz S MA R 50 R 50", "R"),
    ("# GHz S MA R 50 extra", "extra"),
]


class TestOptionLineMutations:
    @pytest.mark.parametrize("option, token", OPTION_MUTATIONS)
    def test_names_offending_token(self, option, token):
        with pytest.raises(ParseError) as e:
            parse_touchstone(option + "\n" + ROW2, 2)
        assert repr(token) in str(e.value)
        assert e.value.line == 1


def _random_ts(draw_vals, n, fmt):
    freq = np.array([1e8, 1e9, 1.45e9, 3e9])
    rng = np.random.default_rng(draw_vals)
    mag = rng.uniform(0.001, 1.0, (4, n, n))
    ph = rng.uniform(-179, 179, (4, n, n))
    s = mag * np.exp(1j * np.radians(ph))
    return TouchstoneData(n, freq, s, fmt)


class TestSerialize:
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    @pytest.mark.parametrize("fmt", ["ri", "ma", "db"])
    def test_round_trip(self, n, fmt):
        # start from data that already went through the 9-digit grammar
        ts = parse_touchstone(serialize_touchstone(_random_ts(n, n, fmt)), n)
        back = parse_touchstone(serialize_touchstone(ts), n)
        np.testing.assert_allclose(back.freq, ts.freq, rtol=1e-9)
        np.testing.assert_allclose(back.s, ts.s, rtol=1e-9, atol=0)
        assert back.format_in == fmt

    @given(st.floats(1e-6, 10.0), st.floats(-179.9, 179.9),
           st.permutations(["ri", "ma", "db"]))
    def test_format_conversions_compose_to_identity(self, mag, deg, order):
        z = cmath.rect(mag, math.radians(deg))
        w = z
        for fmt in order + [order[0]]:
            w = to_complex(*from_complex(w, fmt), fmt)
        assert abs(w - z) <= 1e-9 * abs(z)

    @settings(max_examples=30)
    @given(st.integers(0, 2**32 - 1))
    def test_text_format_chain(self, seed):
        ts = _random_ts(seed, 2, "ri")
        text = serialize_touchstone(ts, "ma")
        text = serialize_touchstone(parse_touchstone(text, 2), "db")
        text = serialize_touchstone(parse_touchstone(text, 2), "ri")
        back = parse_touchstone(text, 2)
        # three passes through 9 significant digits
        np.testing.assert_allclose(back.s, ts.s, rtol=1e-7)

    def test_fixture_round_trip(self, fixtures):
        ts = read_touchstone(fixtures / "worked_2pair.s4p")
        back = parse_touchstone(serialize_touchstone(ts, comments=["copy"]), 4)
        np.testing.assert_allclose(back.s, ts.s, rtol=1e-9)

    def test_unknown_format(self):
        with pytest.raises(InvalidArgument):
            serialize_touchstone(_random_ts(0, 1, "ri"), "xx")


class TestGainAt:
    def test_exact_at_sample(self, fixtures):
        ts = read_touchstone(fixtures / "worked_2pair.s4p")
        assert gain_at(ts, 2, 1, 2e9) == complex(ts.s[1, 1, 0])

    def test_linear_midpoint(self):
        ts = parse_touchstone("# Hz S RI\n1 1 0\n3 0 0\n", 1)
        assert gain_at(ts, 1, 1, 2.0) == complex(0.5, 0)

    def test_table_row(self, fixtures):
        ts = read_touchstone(fixtures / "table3_w9um.s2p")
        assert abs(gain_at(ts, 2, 1, 1.45e9)) == pytest.approx(10 ** (-18.3 / 20), rel=1e-12)
        assert abs(gain_at(ts, 2, 1, 1.45e9)) == pytest.approx(0.1216, abs=1e-4)
        assert gain_db_at(ts, 2, 1, 1.45e9) == pytest.approx(-18.3, abs=1e-12)

    @pytest.mark.parametrize("f", [0.0, 0.05e9, 3.01e9])
    def test_out_of_range(self, fixtures, f):
        ts = read_touchstone(fixtures / "table3_w9um.s2p")
        with pytest.raises(InvalidArgument):
            gain_at(ts, 2, 1, f)

    def test_bad_port(self, fixtures):
        ts = read_touchstone(fixtures / "worked_pair.s2p")
        with pytest.raises(InvalidArgument):
            gain_at(ts, 3, 1, 1e9)


class TestToChannel:
    def test_pair(self, fixtures):
        ch = to_channel(read_touchstone(fixtures / "worked_pair.s2p"), 1e9, [(1, 2)])
        assert ch.gain.tolist() == [[pytest.approx(0.12)]]
        assert ch.path_class == ((PathClass.SIGNAL,),)

    def test_two_pairs_isr(self, fixtures):
        ts = read_touchstone(fixtures / "worked_2pair.s4p")
        ch = to_channel(ts, 1e9, PortMap(((1, 2), (3, 4))))
        assert ch.gain[1, 0] == pytest.approx(0.009)  # S42
        assert ch.path_class[1][0] is PathClass.OFF_CHIP
        assert aggregate_isr(ch, 1, {0, 1}) == pytest.approx(0.075, rel=1e-9)
        assert ch.onchip_gain[0, 1] == pytest.approx(0.06)

    def test_identity_relabel(self, fixtures):
        ts = read_touchstone(fixtures / "worked_2pair.s4p")
        a = to_channel(ts, 1.5e9, [(1, 2), (3, 4)])
        b = to_channel(ts, 1.5e9, PortMap(((1, 2), (3, 4)), {1: Die.LOWER, 3: Die.LOWER}))
        np.testing.assert_array_equal(a.gain, b.gain)
        assert a.path_class == b.path_class

    def test_same_die_classified_on_chip(self, fixtures):
        ts = read_touchstone(fixtures / "worked_2pair.s4p")
        ch = to_channel(ts, 1e9, PortMap(((1, 2), (3, 4)), {4: Die.LOWER, 3: Die.LOWER}))
        assert ch.path_class[1][0] is PathClass.ON_CHIP

    @pytest.mark.parametrize("pm", [[], [(1, 2), (2, 3)], [(1, 5)]])
    def test_bad_port_map(self, fixtures, pm):
        ts = read_touchstone(fixtures / "worked_2pair.s4p")
        with pytest.raises(InvalidArgument):
            to_channel(ts, 1e9, pm)

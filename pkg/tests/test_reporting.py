import json

import numpy as np
import pytest

from adwave.reporting import Check, ExperimentReport, fmt, svg_line_plot, write_csv


class TestFormatting:
    def test_seventeen_significant_digits(self):
        assert fmt(1.0 / 3.0) == "0.33333333333333331"
        assert fmt(0.1) == "0.10000000000000001"
        assert fmt(2.0) == "2"
        assert fmt(float("nan")) == "nan"

    def test_ints_and_bools(self):
        assert fmt(7) == "7"
        assert fmt(True) == "true"
        assert fmt(False) == "false"

    def test_round_trips_through_float(self):
        for x in (np.pi, 1e-300, 123456.789, -0.05):
            assert float(fmt(float(x))) == float(x)


class TestCsv:
    def test_deterministic_bytes(self, tmp_path):
        rows = [(0.1, 1, "a"), (0.2, 2, "b")]
        p1 = write_csv(str(tmp_path / "x.csv"), ["t", "i", "s"], rows)
        p2 = write_csv(str(tmp_path / "y.csv"), ["t", "i", "s"], rows)
        assert open(p1, "rb").read() == open(p2, "rb").read()
        lines = open(p1).read().splitlines()
        assert lines[0] == "t,i,s"
        assert lines[1] == "0.10000000000000001,1,a"


class TestReport:
    def test_pass_fail_skip_logic(self):
        rep = ExperimentReport("demo")
        rep.check("first", True, 1.0, 2.0)
        rep.check("second", None, float("nan"), float("nan"))
        assert rep.passed and rep.first_failure is None
        rep.check("third", False, 3.0, 2.0)
        assert not rep.passed
        assert rep.first_failure == "third"

    def test_check_line_states_comparison(self):
        c = Check("demo", True, 0.5, 1.0, "<", "note here")
        assert "PASS demo" in c.line()
        assert "0.5" in c.line() and "<" in c.line()
        assert Check("x", None, 0.0, 0.0).line().startswith("SKIP")

    def test_json_is_sorted_and_stable(self, tmp_path):
        rep = ExperimentReport("demo", parameters={"b": 1, "a": 2})
        rep.check("only", True, 1.0, 1.0)
        path = rep.write(str(tmp_path))
        text1 = open(path).read()
        rep2 = ExperimentReport("demo", parameters={"b": 1, "a": 2})
        rep2.check("only", True, 1.0, 1.0)
        assert open(rep2.write(str(tmp_path / "again"))).read() == text1
        payload = json.loads(text1)
        assert payload["parameters"] == {"a": 2, "b": 1}


class TestSvg:
    def test_valid_xml_with_legend_and_hline(self, tmp_path):
        import xml.dom.minidom
        x = np.linspace(0, 1, 20)
        path = svg_line_plot(str(tmp_path / "p.svg"), x,
                             {"one": np.sin(x), "two": np.cos(x)},
                             title="demo", xlabel="t", ylabel="y", hlines=(1.0,))
        doc = xml.dom.minidom.parse(path)
        text = open(path).read()
        assert "polyline" in text
        assert "demo" in text
        assert text.count("polyline") >= 2

    def test_degenerate_ranges_do_not_crash(self, tmp_path):
        svg_line_plot(str(tmp_path / "flat.svg"), [0.0, 1.0],
                      {"flat": [2.0, 2.0]})
        svg_line_plot(str(tmp_path / "empty.svg"), [], {})

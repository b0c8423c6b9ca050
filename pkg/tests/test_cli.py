"""Command-line front end: deterministic CSV/JSON emission and exit codes."""

import json

from tsvflab.cli import fmt_complex, main, sci12

DARK_NETWORK_SCENARIO = """tsvf-scenario v1
[system]
dim = 2

[pointer]
kind = qubit

[network]
modes = 2
source = 0
seq = beam_splitter 0 1 0.5
seq = slice U:0 L:1
seq = beam_splitter 0 1 0.5
detectors = DARK:0, BRIGHT:1
postselect = DARK

[experiment]
plan = trace
arms = U, L
"""


class TestNumberFormatting:
    def test_sci12(self):
        assert sci12(1.0) == "1.000000000000e0"
        assert sci12(0.25) == "2.500000000000e-1"
        assert sci12(-1.5e-12) == "-1.500000000000e-12"
        assert sci12(0.0) == "0.000000000000e0"
        assert sci12(-0.0) == "0.000000000000e0"
        assert sci12(float("inf")) == "inf"
        assert sci12(123456.789) == "1.234567890000e5"

    def test_fmt_complex(self):
        assert fmt_complex(1.0) == "1.000000000000e0+0.000000000000e0i"
        assert fmt_complex(1 - 2j) == "1.000000000000e0-2.000000000000e0i"
        assert fmt_complex(complex(0.0, -0.0)) == (
            "0.000000000000e0+0.000000000000e0i"
        )


class TestWeakValueCommand:
    def test_spin_sz_preset(self, capsys):
        assert main(["weakvalue", "--preset", "spin-sz"]) == 0
        out = capsys.readouterr().out
        lines = out.splitlines()
        assert lines[0] == "observable,analytic,numeric,deviation,residual"
        fields = lines[1].split(",")
        assert fields[0] == "sz"
        assert fields[1] == "1.000000000000e0+0.000000000000e0i"

    def test_decomposition_preset_rows_sorted(self, capsys):
        assert main(["weakvalue", "--preset", "spin-splus-sminus"]) == 0
        rows = capsys.readouterr().out.splitlines()[1:]
        assert [r.split(",")[0] for r in rows] == ["sminus", "splus", "sz"]
        splus = rows[1].split(",")
        analytic = splus[1]
        assert analytic.startswith("1.414213562373e0")
        assert float(splus[3]) <= 1e-3  # numeric deviation column

    def test_json_mirrors_csv(self, capsys):
        assert main(["weakvalue", "--preset", "spin-sz", "--format", "json"]) == 0
        rows = json.loads(capsys.readouterr().out)
        assert rows[0]["observable"] == "sz"
        assert rows[0]["analytic"] == "1.000000000000e0+0.000000000000e0i"


class TestPresenceAndTrace:
    def test_presence_preset(self, capsys):
        assert main(["presence", "--preset", "nested-mzi"]) == 0
        rows = [line.split(",") for line in capsys.readouterr().out.splitlines()[1:]]
        classifications = {arm: cls for arm, _, cls in rows}
        assert classifications == {
            "A": "primary", "B": "primary", "C": "primary",
            "D": "secondary", "E": "secondary", "X": "none",
        }
        assert [r[0] for r in rows] == sorted(r[0] for r in rows)
        x_row = next(r for r in rows if r[0] == "X")
        assert x_row[1] == "inf"

    def test_trace_on_presence_scenario(self, capsys):
        assert main(
            ["trace", "--preset", "nested-mzi", "--g-max", "1e-2", "--g-min", "1e-3",
             "--points", "4"]
        ) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "arm,g,trace"
        assert len(lines) == 1 + 6 * 4
        # arms alphabetical, g descending within each arm
        arms = [line.split(",")[0] for line in lines[1:]]
        assert arms == sorted(arms)
        gs = [float(line.split(",")[1]) for line in lines[1:5]]
        assert gs == sorted(gs, reverse=True)


class TestSweepAndLimits:
    def test_eigenvalue_zero_sweep_reports_all_floor(self, capsys):
        assert main(["sweep", "--preset", "eigenvalue-zero"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "g,metric,fitted_order,fitted_coefficient,fit_residual"
        for line in lines[1:]:
            fields = line.split(",")
            assert float(fields[1]) <= 1e-14
            assert fields[2] == "inf"

    def test_compare_limits_preset(self, capsys):
        assert main(["compare-limits", "--preset", "compare-limits"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "branch,parameter,estimate,deviation,analytic"
        branches = [line.split(",")[0] for line in lines[1:]]
        assert branches == ["g_to_zero"] * 5 + ["spread_to_infinity"] * 5
        finest_g = lines[5].split(",")
        assert float(finest_g[3]) <= 1e-3
        # spread rows are parameter-descending, so deviations grow downward
        spread_devs = [float(line.split(",")[3]) for line in lines[6:]]
        assert spread_devs == sorted(spread_devs)
        assert spread_devs[0] <= 1e-3


class TestDeterminismAndIO:
    def test_byte_identical_runs(self, capsys):
        main(["presence", "--preset", "nested-mzi"])
        first = capsys.readouterr().out
        main(["presence", "--preset", "nested-mzi"])
        second = capsys.readouterr().out
        assert first == second

    def test_out_flag_writes_file(self, tmp_path, capsys):
        target = tmp_path / "result.csv"
        assert main(["weakvalue", "--preset", "spin-sz", "--out", str(target)]) == 0
        assert capsys.readouterr().out == ""
        assert target.read_text().startswith("observable,")

    def test_scenario_file_runs(self, tmp_path, capsys):
        from tsvflab.scenario import load_corpus_text

        path = tmp_path / "spin.scn"
        path.write_text(load_corpus_text("spin_sz"))
        assert main(["weakvalue", str(path)]) == 0
        assert capsys.readouterr().out.startswith("observable,")


class TestFailureModes:
    def test_unparsable_file(self, tmp_path, capsys):
        path = tmp_path / "broken.scn"
        path.write_text("tsvf-scenario v1\n[state v]\namps = 1, 0.5+\n")
        assert main(["weakvalue", str(path)]) == 1
        captured = capsys.readouterr()
        assert captured.out == ""  # no partial CSV on stdout
        assert "malformed complex literal" in captured.err
        assert "3:11" in captured.err

    def test_missing_file(self, capsys):
        assert main(["weakvalue", "nosuch.scn"]) == 1
        assert capsys.readouterr().out == ""

    def test_no_input(self, capsys):
        assert main(["weakvalue"]) == 1
        assert "preset" in capsys.readouterr().err

    def test_plan_mismatch(self, capsys):
        assert main(["sweep", "--preset", "spin-sz"]) == 1
        assert "does not fit" in capsys.readouterr().err

    def test_runtime_dark_detector_exit_2(self, tmp_path, capsys):
        path = tmp_path / "dark.scn"
        path.write_text(DARK_NETWORK_SCENARIO)
        assert main(["trace", str(path)]) == 2
        captured = capsys.readouterr()
        assert captured.out == ""
        assert "dark" in captured.err

    def test_validation_error_exit_1(self, tmp_path, capsys):
        from tsvflab.scenario import load_corpus_text

        text = load_corpus_text("spin_sz").replace(
            "g_schedule = 0.04, 0.02, 0.01, 0.005, 0.0025",
            "g_schedule = 0.01, 0.02",
        )
        path = tmp_path / "bad.scn"
        path.write_text(text)
        assert main(["weakvalue", str(path)]) == 1
        assert "schedule must decrease" in capsys.readouterr().err

import os

import pytest

from qcldpc import cli

FIX = "src/qcldpc/fixtures"
C1 = f"{FIX}/c1.txt"
TAN = f"{FIX}/tanner155.txt"


def test_parse_snr():
    assert cli._parse_snr("4.0,4.5") == [4.0, 4.5]
    assert cli._parse_snr("3:0.5:4.5") == [3.0, 3.5, 4.0, 4.5]
    assert cli._parse_snr("5") == [5.0]


def test_parse_schedule():
    assert cli._parse_schedule("flooding") == ("flooding", None)
    assert cli._parse_schedule("row") == ("row", None)
    assert cli._parse_schedule("2,1,3") == ("column", (2, 1, 3))


def test_config_file_fills_defaults(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("# comment\nsnr = 5.5\nseed = 9\n")
    out = tmp_path / "o"
    cli.main(["simulate", "--code", C1, "--config", str(cfgfile),
              "--out", str(out), "--max-frames", "100", "--min-errors", "1"])
    lines = (out / "fer.csv").read_text().splitlines()
    assert lines[0] == "snr_db,sigma,frames,errors,fer,status"
    assert lines[1].startswith("5.5,")


def test_config_flag_precedence(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("snr=5.5\n")
    out = tmp_path / "o"
    # explicit --snr wins over the config file value
    cli.main(["simulate", "--code", C1, "--config", str(cfgfile),
              "--snr", "6.25", "--out", str(out),
              "--max-frames", "100", "--min-errors", "1"])
    assert (out / "fer.csv").read_text().splitlines()[1].startswith("6.25,")


def test_config_unknown_key_rejected(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("bogus=1\n")
    with pytest.raises(SystemExit):
        cli.main(["simulate", "--code", C1, "--config", str(cfgfile)])


def test_lift_output(tmp_path):
    cli.main(["lift", "--code", C1, "--out", str(tmp_path)])
    lines = (tmp_path / "alist.txt").read_text().splitlines()
    assert lines[0] == "448 640 64"
    assert len(lines) == 1 + 640 * 5           # one line per edge


def test_enumerate_output(tmp_path):
    cli.main(["enumerate-ts", "--code", TAN, "--out", str(tmp_path),
              "--a-max", "5", "--b-max", "3"])
    lines = (tmp_path / "trapping.csv").read_text().splitlines()
    assert lines[0] == "group,a,b,multiplicity,layers,representative_vns"
    mult = sum(int(ln.split(",")[3]) for ln in lines[1:])
    assert mult == 155


def test_simulate_rerun_byte_identical(tmp_path):
    args = ["simulate", "--code", C1, "--schedule", "column",
            "--snr", "4.0,4.5", "--seed", "3",
            "--min-errors", "5", "--max-frames", "2000"]
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(args + ["--out", str(a)])
    cli.main(args + ["--out", str(b)])
    ca = (a / "fer.csv").read_bytes()
    assert ca == (b / "fer.csv").read_bytes()
    assert ca.decode().count("\n") == 3


def test_simulate_custom_perm_and_budget_flag(tmp_path):
    cli.main(["simulate", "--code", C1,
              "--schedule", "3,1,4,2,5,7,6,9,10,8", "--snr", "3.0",
              "--min-errors", "1000", "--max-frames", "500",
              "--out", str(tmp_path)])
    row = (tmp_path / "fer.csv").read_text().splitlines()[1].split(",")
    assert int(row[2]) == 500 and row[5] == "budget"


def test_estimate_output(tmp_path):
    cli.main(["estimate", "--code", C1, "--snr", "6.0", "--iters", "8",
              "--a-max", "5", "--b-max", "5", "--out", str(tmp_path)])
    lines = (tmp_path / "estimate.csv").read_text().splitlines()
    assert lines[0] == "code,schedule,snr_db,group,multiplicity,r,p_e,p_f"
    assert len(lines) == 3                     # one group + total
    grp = lines[1].split(",")
    assert grp[3] == "0" and grp[4] == "64"
    assert float(grp[5]) == pytest.approx(16.9536, abs=1e-3)
    total = lines[2].split(",")
    assert total[3] == "all" and float(total[7]) > 0


def test_estimate_rejects_non_column(tmp_path):
    with pytest.raises(SystemExit):
        cli.main(["estimate", "--code", C1, "--schedule", "flooding",
                  "--out", str(tmp_path)])


def test_optimize_rerun_byte_identical(tmp_path):
    args = ["optimize", "--code", C1, "--snr", "6.0", "--iters", "6",
            "--a-max", "5", "--b-max", "5", "--samples", "2",
            "--shortlist", "2", "--seed", "1"]
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(args + ["--out", str(a)])
    cli.main(args + ["--out", str(b)])
    data = (a / "search.csv").read_bytes()
    assert data == (b / "search.csv").read_bytes()
    lines = data.decode().splitlines()
    assert lines[0] == "candidate,schedule,stage1_r,stage2_score,stage3_p_f"
    assert len(lines) >= 2

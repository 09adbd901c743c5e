import subprocess
import sys

import pytest

from weakmodels.cli import run_cli
from weakmodels.fixtures import fixture_text


@pytest.fixture
def wm(tmp_path):
    def write(name):
        path = tmp_path / f"{name.lower()}.wm"
        path.write_text(fixture_text(name))
        return str(path)
    return write


def kv(text):
    return dict(line.split("=", 1) for line in text.strip().splitlines())


def test_analyze_machine(wm, capsys):
    assert run_cli(["analyze", wm("FIG5A"), "--machine"]) == 0
    out = kv(capsys.readouterr().out)
    assert out["regime"] == "TrackableBounded"
    assert out["witness"] == "none"
    assert out["K"] == "4" and out["M_a"] == "2"
    assert out["bound_known_start"] == "2" and out["bound_unknown_start"] == "8"
    assert out["strongly_connected"] == "true"


def test_analyze_witnesses(wm, capsys):
    run_cli(["analyze", wm("FIG2A"), "--machine"])
    out = kv(capsys.readouterr().out)
    assert out["regime"] == "Untrackable" and out["witness"] == "cycle_pair"
    assert {out["witness_first"], out["witness_second"]} == {"x,r1,x", "x,r2,x"}
    run_cli(["analyze", wm("FIG3A"), "--machine"])
    out = kv(capsys.readouterr().out)
    assert out["witness"] == "fork" and out["witness_pi3"] == "a,b"
    assert out["transient"] == "a" and out["class_1"] == "b"


def test_track_and_enumerate(wm, capsys):
    assert run_cli(["track", wm("FIG5A"), "--colors", "B,R", "--start", "a", "--enumerate", "5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines == ["count=2", "hypothesis=a,b", "hypothesis=a,e", "truncated=false"]


def test_track_multicolored_reports_original_ids(wm, capsys):
    assert run_cli(["track", wm("FIG1"), "--colors", "G,B,B", "--enumerate", "9"]) == 0
    out = capsys.readouterr().out
    assert "count=2" in out
    assert "hypothesis=a,b,b" in out and "hypothesis=a,b,c" in out
    assert "__" not in out


def test_growth(wm, capsys):
    assert run_cli(["growth", wm("FIG3A"), "--t-max", "3"]) == 0
    assert capsys.readouterr().out.splitlines() == [
        "t=1 n=2 argmax=B", "t=2 n=3 argmax=B,B", "t=3 n=4 argmax=B,B,B"]


def test_bound(wm, capsys):
    run_cli(["bound", wm("FIG7S"), "--machine"])
    out = kv(capsys.readouterr().out)
    assert out["bound_known_start"] == "1" and out["bounds_applicable"] == "true"


def test_transform(wm, tmp_path, capsys):
    dest = tmp_path / "single.wm"
    assert run_cli(["transform", wm("FIG1"), "--out", str(dest)]) == 0
    assert "node b__R R" in dest.read_text()
    run_cli(["transform", wm("FIG1")])
    assert capsys.readouterr().out == dest.read_text()


def test_mc(wm, capsys):
    assert run_cli(["mc", wm("FIG5A-P"), "--recurrence", "a"]) == 0
    assert capsys.readouterr().out == "t*=21.5\n"
    run_cli(["mc", wm("FIG3A-P"), "--absorption"])
    assert "mu(a)=10" in capsys.readouterr().out
    run_cli(["mc", wm("FIG2A-P")])
    out = capsys.readouterr().out
    assert "pi(x)=0.5" in out and "mu(x)=0" in out
    run_cli(["mc", wm("FIG5A-P"), "--first-passage", "a"])
    assert "t(b)=21" in capsys.readouterr().out


def test_simulate_recon_writes_csv(wm, tmp_path, capsys):
    out = tmp_path / "acc.csv"
    code = run_cli(["simulate-recon", wm("FIG5A-P"), "--traversals", "400", "--steps", "120",
                    "--beta-max", "80", "--out", str(out)])
    assert code == 0
    text = out.read_text().splitlines()
    assert text[0] == "beta,alpha,n" and len(text) == 82
    report = kv(capsys.readouterr().out)
    assert set(report) == {"alpha_0", "A", "tau"}


def test_entropy_command(wm, tmp_path, capsys):
    out = tmp_path / "h.csv"
    assert run_cli(["entropy", wm("FIG2A-P"), "--start", "x", "--T", "200", "--samples", "4",
                    "--out", str(out)]) == 0
    assert out.read_text().startswith("T,n_samples,bits_per_step,stderr\n200,4,")
    assert float(kv(capsys.readouterr().out)["bits_per_step"]) == pytest.approx(0.5, abs=0.02)


def test_domain_errors_exit_1(wm, tmp_path, capsys):
    bad = tmp_path / "bad.wm"
    bad.write_text("weakmodel v1\ncolors B\nnode a Q\n")
    assert run_cli(["analyze", str(bad)]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error: line 3:") and err.count("\n") == 1
    assert run_cli(["mc", wm("FIG5A")]) == 1
    assert "probabilities" in capsys.readouterr().err
    assert run_cli(["analyze", str(tmp_path / "missing.wm")]) == 1
    assert run_cli(["track", wm("FIG5A"), "--colors", "Z"]) == 1


def test_usage_errors_exit_2(wm, capsys):
    assert run_cli([]) == 2
    assert run_cli(["track", wm("FIG5A")]) == 2
    assert run_cli(["growth", wm("FIG5A"), "--t-max", "0"]) == 2
    assert run_cli(["frobnicate"]) == 2
    capsys.readouterr()


def test_module_entry_point(wm):
    proc = subprocess.run([sys.executable, "-m", "weakmodels", "mc", wm("FIG5A-P"), "--recurrence", "a"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout == "t*=21.5\n"

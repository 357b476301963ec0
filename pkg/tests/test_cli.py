import gzip
import json
import os

import pytest

from killcert.cli import build_parser, main
from killcert.report import dumps, load_report, strip_timing, write_report

HPN2 = ["hpn", "--n", "2", "--suite", "kernel,indecomposable", "--samples", "200", "--seed", "3"]


@pytest.fixture(scope="module")
def hpn2_path(tmp_path_factory):
    path = str(tmp_path_factory.mktemp("cli") / "hpn2.json")
    assert main(HPN2 + ["--out", path]) == 0
    return path


@pytest.mark.parametrize("argv", [
    ["hpn", "--n", "0"],
    ["hpn", "--n", "4", "--suite", "indecomposable"],
    ["hpn", "--n", "3", "--suite", "kernel", "--samples", "100"],
    ["hpn", "--n", "1", "--suite", "kernel"],
    ["hpn", "--suite", "flow"],
    ["op2", "--suite", "kernel"],
    ["op2", "--suite", "nonsense"],
    ["op2", "--suite", "indecomposable", "--samples", "10"],
    ["op2", "--primes", "15"],
    ["op2", "--jobs", "0"],
    ["op2", "--tol", "0", "--suite", "flow"],
    ["op2", "--primes", "x,y"],
    ["frobnicate"],
])
def test_config_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_run_prints_claims_and_status(hpn2_path, capsys):
    assert main(["hpn", "--n", "1", "--suite", "algebra"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[-1] == "status\tpass"
    assert all(len(line.split("\t")) == 6 for line in out[:-1])


def test_report_contents(hpn2_path):
    rep = load_report(hpn2_path)
    assert rep["status"] == "pass"
    assert rep["config"]["seed"] == 3
    assert [s["suite"] for s in rep["suites"]] == ["kernel", "indecomposable"]
    ind = rep["suites"][1]
    assert ind["claims"]["pairing_rank"]["observed"] == 0
    assert "span_coefficients" in ind["data"]


def test_reverify_passes(hpn2_path, capsys):
    assert main(["reverify", hpn2_path]) == 0
    assert capsys.readouterr().out.strip().endswith("reverify\tpass")


def _tampered(path, tmp_path, edit):
    rep = load_report(path)
    edit(rep)
    out = str(tmp_path / "tampered.json")
    write_report(rep, out)
    return out


def test_reverify_detects_bad_span_coefficient(hpn2_path, tmp_path, capsys):
    def edit(rep):
        num = rep["suites"][1]["data"]["span_coefficients"]["num"]
        num[0][0] = str(int(num[0][0]) + 1)

    path = _tampered(hpn2_path, tmp_path, edit)
    assert main(["reverify", path]) == 1
    out = capsys.readouterr().out
    assert "span coefficients" in out
    assert "digest" in out


def test_reverify_detects_bad_kernel_vector(hpn2_path, tmp_path, capsys):
    def edit(rep):
        kb = rep["suites"][0]["data"]["kernel_basis"]
        kb[0][0] = "0/1" if kb[0][0] != "0/1" else "1/1"
        rep.pop("digest")
        from killcert.report import report_digest

        rep["digest"] = report_digest(rep)

    path = _tampered(hpn2_path, tmp_path, edit)
    assert main(["reverify", path]) == 1
    out = capsys.readouterr().out
    assert "kernel" in out and "digest" not in out


def test_reverify_detects_bad_witness(tmp_path, capsys):
    from killcert.report import SuiteConfig, run

    rep, code = run(SuiteConfig("hpn", n=2, suites=["indecomposable"], sample_count=200, seed=3))
    assert code == 0
    ind = rep["suites"][0]
    ind["data"]["witnesses"] = [{"index": [0], "value": ["1"]}]
    path = str(tmp_path / "w.json")
    write_report(rep, path)
    assert main(["reverify", path]) == 1
    assert "witness 0" in capsys.readouterr().out


def test_reverify_missing_or_malformed(tmp_path, capsys):
    assert main(["reverify", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["reverify", str(bad)]) == 2


def test_reports_identical_apart_from_timing(hpn2_path, tmp_path):
    again = str(tmp_path / "again.json.gz")
    assert main(HPN2 + ["--out", again]) == 0
    with gzip.open(again, "rt") as fh:
        second = json.load(fh)
    first = load_report(hpn2_path)
    assert dumps(strip_timing(first)) == dumps(strip_timing(second))
    assert first["digest"] == second["digest"]
    assert main(["reverify", again]) == 0


def test_environment_defaults(monkeypatch):
    monkeypatch.setenv("VERIFY_SEED", "17")
    monkeypatch.setenv("VERIFY_PRIMES", "1000003,1000033")
    monkeypatch.setenv("VERIFY_ALLOW_LONG", "1")
    args = build_parser().parse_args(["hpn"])
    assert args.seed == 17 and args.primes == [1000003, 1000033] and args.allow_long
    assert build_parser().parse_args(["hpn", "--seed", "2"]).seed == 2


def test_figures(tmp_path, capsys):
    fig = tmp_path / "figs"
    assert main(["op2", "--suite", "flow", "--figures", str(fig)]) == 0
    names = sorted(os.listdir(fig))
    assert names == ["op2_claims.png", "op2_flow.png", "op2_summary.tsv"]
    lines = (fig / "op2_summary.tsv").read_text().splitlines()
    assert lines[0].split("\t")[0] == "target" and len(lines) == 3


def test_unwritable_output(tmp_path):
    assert main(["hpn", "--n", "1", "--suite", "algebra", "--out", str(tmp_path / "no" / "r.json")]) == 2

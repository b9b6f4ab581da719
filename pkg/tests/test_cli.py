from __future__ import annotations

import csv
import io
import json

import pytest

from convqft.cli import SEED_ENV, run


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def doc(*argv):
    code, out, err = invoke(*argv)
    assert code == 0, err
    return json.loads(out)


def test_renormalize_pole_free():
    d = doc("renormalize", "(())", "--scale-log", "1", "--order", "3")
    assert d["ok"] and d["schema_version"] == 1
    assert all(int(k) >= 0 for k in d["result"]["R"]["terms"])
    assert d["result"]["R"]["terms"]["0"] == {"0": "1/2"}
    assert d["config"]["tree"] == "(())"


def test_poisson_row():
    code, out, _ = invoke("sequences", "poisson-limit", "--n", "1000", "--lambda", "1", "--format", "csv")
    assert code == 0
    (row,) = list(csv.DictReader(io.StringIO(out)))
    assert float(row["tv"]) <= 0.001


def test_hopf_summary():
    code, out, _ = invoke("hopf-check", "--max-nodes", "5", "--format", "text")
    assert code == 0
    assert "coassociativity OK" in out and "antipode OK" in out


@pytest.mark.parametrize(
    "argv",
    [
        ["hopf-check", "--max-nodes", "3"],
        ["zren", "--g", "1/10", "--max-nodes", "3", "--scale-log", "0", "--order", "3"],
        ["gaussian-check", "--n", "4,8", "--fields", "10", "--samples", "4000"],
        ["gauge-demo", "--sigma", "unimodular-diag"],
        ["wilson", "--method", "exact-quadratic", "--g2", "0.5", "--g4", "0"],
        ["legendre", "--model", "gaussian", "--points", "9"],
        ["sequences", "interact-pointwise", "--n", "6"],
        ["sequences", "interact-conv", "--interaction", "1/2,1/2"],
        ["sequences", "xi", "--n", "4", "--r", "2"],
        ["hierarchy", "check", "--base-points", "3", "--resolution", "2", "--levels", "2"],
    ],
)
def test_commands_pass(argv):
    d = doc(*argv)
    assert d["ok"] and d["failures"] == []
    assert d["checks"] and all(d["checks"].values())


@pytest.mark.parametrize(
    "argv",
    [
        ["nonsense"],
        ["hopf-check", "--bogus"],
        ["hopf-check", "--max-nodes", "-1"],
        ["renormalize", "(()"],
        ["sequences", "poisson-limit", "--n", "3", "--lambda", "5"],
        ["sequences", "interact-conv", "--interaction", "1/2,2/5"],
        ["sequences", "xi", "--n", "2", "--r", "3"],
        ["gaussian-check", "--format", "xml"],
        ["zren", "--max-nodes", "3", "--scale-log", "0", "--order", "2"],
    ],
)
def test_usage_errors(argv):
    code, _, _ = invoke(*argv)
    assert code == 2


def test_invariant_failure_is_named():
    code, out, err = invoke("gauge-demo", "--tolerance", "1e-30")
    assert code == 1
    assert "invariant failed:" in err
    assert json.loads(out)["failures"]


def _strip(text):
    d = json.loads(text)
    d.pop("timestamp")
    return d


@pytest.mark.parametrize(
    "argv",
    [
        ["gaussian-check", "--n", "4", "--fields", "5", "--samples", "3000", "--seed", "11"],
        ["wilson", "--method", "monte-carlo", "--samples", "500", "--seed", "3", "--table-points", "3"],
        ["mean-law", "--samples", "20000", "--seed", "5", "--tolerance", "1"],
    ],
)
def test_deterministic(argv):
    _, a, _ = invoke(*argv)
    _, b, _ = invoke(*argv)
    assert _strip(a) == _strip(b)


def test_workers_do_not_change_output():
    base = ["gaussian-check", "--n", "8", "--fields", "3", "--samples", "5000"]
    _, a, _ = invoke(*base, "--workers", "1")
    _, b, _ = invoke(*base, "--workers", "3")
    da, db = _strip(a), _strip(b)
    da["config"].pop("workers"), db["config"].pop("workers")
    assert da == db


def test_seed_env(monkeypatch):
    argv = ["gaussian-check", "--n", "4", "--fields", "3", "--samples", "2000"]
    monkeypatch.setenv(SEED_ENV, "7")
    d = doc(*argv)
    assert d["config"]["seed"] == 7
    monkeypatch.setenv(SEED_ENV, "x")
    assert invoke(*argv)[0] == 2


def test_out_file(tmp_path):
    path = tmp_path / "r.json"
    code, out, _ = invoke("sequences", "xi", "--out", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["ok"]


def test_csv_quotes_fractions():
    code, out, _ = invoke("sequences", "interact-pointwise", "--n", "2", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 3
    assert all("/" in r["p"] or r["p"] in "01" for r in rows)


def test_help_mentions_seed_env(capsys):
    code, _, _ = invoke("--help")
    assert code == 0
    assert SEED_ENV in capsys.readouterr().out

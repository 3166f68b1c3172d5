import json
from pathlib import Path

import numpy as np
import pytest

from ebdiversity.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from ebdiversity.config import ConfigError, load_config, parse_config
from ebdiversity.countsio import DataError, parse_counts, read_counts, write_counts
from ebdiversity.report import body, load_report

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

TINY = """\
k: 20
m: 5
seed: 11
profiles: [smooth, concentrated]
grid:
  alpha: [20, 50]
  beta: [0.1]
  gamma: [1, 100]
"""


def _run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.yaml"
    path.write_text(TINY)
    return path


# ---- config ----------------------------------------------------------------


def test_config_grid_expands_in_declaration_order():
    cfg = parse_config(TINY)
    scen = cfg.scenarios()
    assert len(scen) == 8
    assert [s.profile_kind.value for s in scen[:4]] == ["smooth"] * 4
    assert [(s.alpha, s.gamma) for s in scen[:4]] == [(20, 1), (20, 100), (50, 1), (50, 100)]
    assert len({s.seed for s in scen}) == 8


def test_study_grid_config_loads():
    cfg = load_config(CONFIGS / "study_grid.yaml")
    assert (cfg.k, cfg.m) == (200, 1000)
    assert len(cfg.scenarios()) == 27


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("k: 20\nm: 5\nseed: 1\nscenarios:\n  - {alpha: 1, beta: 1, gamma: -2}\n", "scenarios[0].gamma"),
        ("k: 20\nm: 0\nseed: 1\ngrid: {alpha: [1], beta: [1], gamma: [1]}\n", "m"),
        ("k: 20\nm: 5\nseed: 1\nprofiles: [lumpy]\ngrid: {alpha: [1], beta: [1], gamma: [1]}\n", "unknown profile"),
        ("k: 20\nm: 5\nseed: 1\ncolour: red\ngrid: {alpha: [1], beta: [1], gamma: [1]}\n", "unknown field"),
        ("k: 20\nm: 5\nseed: 1\n", "exactly one"),
        ("k: [1, 2\n", "line"),
    ],
)
def test_config_errors_are_located(text, fragment):
    with pytest.raises(ConfigError, match="line") as info:
        parse_config(text, "cfg.yaml")
    assert fragment in str(info.value)


def test_config_reads_exponent_floats():
    cfg = parse_config("k: 20\nm: 5\nseed: 1\ngrid: {alpha: [2e1], beta: [1e-1], gamma: [1]}\nsolver: {eta_floor: 1e-7}\n")
    assert cfg.triples == ((20.0, 0.1, 1.0),)
    assert cfg.solver.eta_floor == 1e-7
    with pytest.raises(ConfigError, match="solver.initial_eta"):
        parse_config("k: 20\nm: 5\nseed: 1\ngrid: {alpha: [1], beta: [1], gamma: [1]}\nsolver: {initial_eta: x}\n")


def test_bad_config_exits_with_usage_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("k: 20\nm: 5\nseed: 1\nscenarios:\n  - {alpha: 1, beta: 1, gamma: -2}\n")
    code, _, err = _run(["simulate", "--config", bad, "--out", tmp_path / "r.json"], capsys)
    assert code == EXIT_USAGE
    assert "line 5" in err
    assert not (tmp_path / "r.json").exists()


def test_missing_arguments_exit_with_usage_code(capsys):
    with pytest.raises(SystemExit) as info:
        main(["simulate"])
    assert info.value.code == EXIT_USAGE


# ---- counts I/O ------------------------------------------------------------


def test_counts_round_trip(tmp_path):
    text = "sample,a,b,c\ns1,3,1,0\ns2,0,0,7\n"
    m = parse_counts(text)
    assert m.taxa == ("a", "b", "c")
    path = tmp_path / "c.csv"
    write_counts(m, path)
    again = read_counts(path)
    assert again.taxa == m.taxa
    assert [sid for sid, _ in again.rows] == ["s1", "s2"]
    for (_, x), (_, y) in zip(m.rows, again.rows):
        assert np.array_equal(x.counts, y.counts)
    assert path.read_text() == text


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("sample,a,b\ns1,1\n", "line 2"),
        ("sample,a,b\ns1,1,2\ns2,1,x\n", "line 3"),
        ("sample,a,b\ns1,1,-2\n", "line 2"),
        ("sample,a,b\ns1,1,2.5\n", "line 2"),
        ("sample,a,b\ns1,1,2\ns1,3,4\n", "duplicate"),
        ("sample,a,a\ns1,1,2\n", "duplicate"),
    ],
)
def test_counts_errors(text, fragment):
    with pytest.raises(DataError) as info:
        parse_counts(text)
    assert fragment in str(info.value)


# ---- estimate --------------------------------------------------------------


def _estimate(tmp_path, capsys, csv_text, method="both"):
    src = tmp_path / "counts.csv"
    src.write_text(csv_text)
    out = tmp_path / "est.json"
    code, _, err = _run(["estimate", "--counts", src, "--method", method, "--out", out], capsys)
    return code, (load_report(out) if out.exists() else None), err


def test_estimate_eb_and_ml(tmp_path, capsys):
    code, rep, _ = _estimate(tmp_path, capsys, "id,a,b,c,d\nx,3,1,0,0\ny,2,3,5,0\n")
    assert code == EXIT_OK
    x, y = rep["estimates"]
    assert x["ML"]["proportions"] == [0.75, 0.25, 0.0, 0.0]
    eb = x["EB"]
    assert eb["eta"] > 0
    assert sum(eb["proportions"]) == pytest.approx(1.0)
    # shrinkage pulls the EB estimate toward uniform
    assert eb["shannon"] > x["ML"]["shannon"]
    assert y["ML"]["proportions"] == pytest.approx([0.2, 0.3, 0.5, 0.0])


def test_estimate_ml_only(tmp_path, capsys):
    code, rep, _ = _estimate(tmp_path, capsys, "id,a,b,c\nx,2,3,5\n", method="ml")
    assert code == EXIT_OK
    assert "EB" not in rep["estimates"][0]
    assert rep["estimates"][0]["ML"]["proportions"] == pytest.approx([0.2, 0.3, 0.5])


def test_estimate_equal_counts_hit_the_ceiling(tmp_path, capsys):
    code, rep, _ = _estimate(tmp_path, capsys, "id,a,b,c,d\nx,5,5,5,5\n", method="eb")
    assert code == EXIT_OK
    eb = rep["estimates"][0]["EB"]
    assert eb["status"] in ("CeilingClamped", "FlatLikelihood")
    assert eb["proportions"] == pytest.approx([0.25] * 4)


def test_estimate_skips_empty_rows_with_warning(tmp_path, capsys, caplog):
    code, rep, _ = _estimate(tmp_path, capsys, "id,a,b\nx,0,0\ny,1,2\n")
    assert code == EXIT_OK
    assert [e["sample_id"] for e in rep["estimates"]] == ["y"]
    assert rep["warnings"][0]["sample_id"] == "x"
    assert "sample x" in caplog.text


def test_estimate_ragged_csv_is_a_data_error(tmp_path, capsys):
    code, rep, err = _estimate(tmp_path, capsys, "id,a,b\nx,1,2\ny,1\n")
    assert code == EXIT_DATA
    assert rep is None
    assert "line 3" in err


def test_estimate_bad_method(tmp_path, capsys):
    code, _, _ = _estimate(tmp_path, capsys, "id,a,b\nx,1,2\n", method="bayes")
    assert code == EXIT_USAGE


def test_estimate_summary_table(tmp_path, capsys):
    _estimate(tmp_path, capsys, "id,a,b\nx,1,2\n")
    code, out, _ = _run(["report", "--in", tmp_path / "est.json", "--table", "summary"], capsys)
    assert code == EXIT_OK
    assert "x" in out and "H_EB" in out
    code, _, _ = _run(["report", "--in", tmp_path / "est.json", "--table", "efficiency"], capsys)
    assert code == EXIT_DATA


# ---- simulate / report -----------------------------------------------------


def test_smoke_simulation_single_replicate(tmp_path, capsys):
    out = tmp_path / "smoke.json"
    code, _, _ = _run(["simulate", "--config", CONFIGS / "smoke.yaml", "--out", out], capsys)
    assert code == EXIT_OK
    rep = load_report(out)
    assert rep["metadata"]["seed"] == 7
    assert len(rep["summaries"]) == 2 * 4 * 2 * 2
    for s in rep["summaries"]:
        assert s["m"] == 1
        assert s["sd"] is None
    code, text, _ = _run(["report", "--in", out, "--table", "summary"], capsys)
    assert code == EXIT_OK
    assert "NA" in text


@pytest.fixture
def tiny_report(tiny_config, tmp_path, capsys):
    out = tmp_path / "tiny.json"
    code, _, _ = _run(["simulate", "--config", tiny_config, "--out", out], capsys)
    assert code == EXIT_OK
    return out


@pytest.mark.parametrize("table", ["summary", "quantiles", "efficiency"])
def test_report_tables(tiny_report, capsys, table):
    code, text, _ = _run(["report", "--in", tiny_report, "--table", table], capsys)
    assert code == EXIT_OK and text.strip()
    code, csv_text, _ = _run(["report", "--in", tiny_report, "--table", table, "--csv"], capsys)
    assert code == EXIT_OK
    lines = csv_text.strip().splitlines()
    widths = {len(line.split(",")) for line in lines}
    assert len(widths) == 1


def test_efficiency_table_shape(tiny_report, capsys):
    _, text, _ = _run(["report", "--in", tiny_report, "--table", "efficiency"], capsys)
    lines = text.strip().splitlines()
    # header, rule, then per index: one total row and one row per profile
    assert len(lines) == 2 + 4 * (1 + 2)
    assert lines[2].startswith("[")


def test_unknown_table_lists_valid_names(tiny_report, capsys):
    code, _, err = _run(["report", "--in", tiny_report, "--table", "bogus"], capsys)
    assert code == EXIT_USAGE
    for name in ("summary", "quantiles", "efficiency"):
        assert name in err


def test_report_on_missing_file_is_a_data_error(tmp_path, capsys):
    code, _, _ = _run(["report", "--in", tmp_path / "nope.json", "--table", "summary"], capsys)
    assert code == EXIT_DATA


def test_same_seed_same_body(tiny_config, tiny_report, tmp_path, capsys):
    again = tmp_path / "again.json"
    _run(["simulate", "--config", tiny_config, "--out", again], capsys)
    assert json.dumps(body(load_report(again))) == json.dumps(body(load_report(tiny_report)))


def test_seed_override_changes_results(tiny_config, tiny_report, tmp_path, capsys):
    other = tmp_path / "other.json"
    _run(["simulate", "--config", tiny_config, "--out", other, "--seed", 12], capsys)
    a, b = load_report(other), load_report(tiny_report)
    assert a["metadata"]["seed"] == 12
    assert a["summaries"] != b["summaries"]


def test_rerun_from_report_metadata(tiny_report, tmp_path, capsys):
    rerun = tmp_path / "rerun.json"
    code, _, _ = _run(["simulate", "--config", tiny_report, "--out", rerun], capsys)
    assert code == EXIT_OK
    assert body(load_report(rerun)) == body(load_report(tiny_report))


def test_threads_do_not_change_results(tiny_config, tiny_report, tmp_path, capsys, monkeypatch):
    par = tmp_path / "par.json"
    code, _, _ = _run(["simulate", "--config", tiny_config, "--out", par, "--threads", 2], capsys)
    assert code == EXIT_OK
    assert body(load_report(par)) == body(load_report(tiny_report))
    monkeypatch.setenv("EBDIVERSITY_THREADS", "lots")
    code, _, _ = _run(["simulate", "--config", tiny_config, "--out", par], capsys)
    assert code == EXIT_USAGE

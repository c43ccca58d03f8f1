import json

import numpy as np
import pytest

from seqsteer.cli import Grid, RunConfig, ConfigError, main, parse_number, read_table


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("family, expected, tol", [("xyz", 0.577350, 1e-6), ("ico6", 0.5393, 5e-4), ("dod10", 0.5236, 5e-4)])
def test_bound(capsys, family, expected, tol):
    code, out, _ = run(capsys, "bound", family)
    assert code == 0
    lines = dict(line.split(" ", 1) for line in out.splitlines())
    assert abs(float(lines["bound"]) - expected) <= tol
    assert len(lines["signs"].split()) == int(lines["n"])


def test_bound_xyz_display(capsys):
    _, out, _ = run(capsys, "bound", "xyz")
    assert "bound 0.577350" in out


def test_unknown_family(capsys):
    code, out, err = run(capsys, "bound", "cube")
    assert code != 0 and out == "" and "cube" in err


def test_window(capsys):
    assert run(capsys, "window", "xyz")[1].strip() == "(0.7598, 0.7962)"
    assert run(capsys, "window", "ico6")[1].strip().startswith("(0.7344, ")
    code, out, _ = run(capsys, "window", "--family", "0,0,1")
    assert code == 0 and out.strip() == "no double-steering window"


def test_sweep_fig3_point(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, _, _ = run(capsys, "sweep", "--family", "ico6", "--grid", "0.34,0.34,1", "--out", str(out))
    assert code == 0
    (row,) = read_table(open(out))
    assert row["s_pair11"] > 0.5393 and row["s_pair22"] > 0.5393
    assert row["double_violation"] == 1
    assert row["max_abs_diff"] <= 1e-9


def test_sweep_limits(tmp_path, capsys):
    out = tmp_path / "s.csv"
    run(capsys, "sweep", "--family", "xyz", "--grid", "0,pi/4,11", "--out", str(out))
    rows = read_table(open(out))
    assert len(rows) == 11
    first, last = rows[0], rows[-1]
    assert first["theta_a1"] == 0 and first["s_pair11"] == pytest.approx(1, abs=1e-11)
    assert first["s_pair22"] == pytest.approx(1 / 3, abs=1e-11)
    assert last["theta_a1"] == pytest.approx(np.pi / 4, abs=1e-11)
    assert last["s_pair11"] == pytest.approx(0, abs=1e-11) and last["s_pair22"] == pytest.approx(1, abs=1e-11)
    assert all(r["max_abs_diff"] <= 1e-9 for r in rows)


def test_sweep_chsh_never_double(tmp_path, capsys):
    out = tmp_path / "c.csv"
    run(capsys, "sweep", "--scenario", "chsh2x2", "--grid", "0,pi/4,41", "--out", str(out))
    rows = read_table(open(out))
    assert not any(r["i_11"] > 2 and r["i_22"] > 2 for r in rows)
    assert all(r["max_abs_diff"] <= 1e-9 for r in rows)


def test_sweep_product_and_fixed_modes(tmp_path, capsys):
    out = tmp_path / "p.csv"
    run(capsys, "sweep", "--family", "xyz", "--grid", "0,pi/4,3", "--mode", "product", "--out", str(out))
    assert len(read_table(open(out))) == 9
    run(capsys, "sweep", "--family", "xyz", "--grid", "0,pi/4,3", "--mode", "a1", "--theta-b1", "0.2", "--out", str(out))
    rows = read_table(open(out))
    assert {r["theta_b1"] for r in rows} == {0.2}


def test_sweep_invalid_grid(capsys):
    code, _, err = run(capsys, "sweep", "--family", "xyz", "--grid", "0,1.2,5")
    assert code != 0 and "grid" in err
    code, _, err = run(capsys, "sweep", "--family", "xyz", "--grid", "0,0.5,0")
    assert code != 0


def test_csv_roundtrip(tmp_path, capsys):
    out = tmp_path / "s.csv"
    run(capsys, "sweep", "--family", "ico6", "--family2", "dod10", "--grid", "0,pi/4,4", "--out", str(out))
    from seqsteer.cli import steering_row
    from seqsteer.settings import get_family

    rows = read_table(open(out))
    for row, theta in zip(rows, np.linspace(0, np.pi / 4, 4)):
        ref = steering_row(theta, theta, get_family("ico6"), get_family("dod10"))
        for key, value in ref.items():
            assert row[key] == float(f"{float(value):.12g}")


def test_sample_determinism(tmp_path, capsys):
    paths = [tmp_path / f"s{k}.csv" for k in range(2)]
    for p in paths:
        assert run(capsys, "sample", "--family", "ico6", "--shots", "2000", "--seed", "17", "--out", str(p))[0] == 0
    a, b = (p.read_text().splitlines() for p in paths)
    assert [l for l in a if not l.startswith("# timestamp")] == [l for l in b if not l.startswith("# timestamp")]
    assert "rng=" in a[0] and "seed=17" in a[0]
    assert a[1].startswith("# timestamp=")


def test_sample_single_shot(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert run(capsys, "sample", "--scenario", "chsh2x2", "--shots", "1", "--out", str(out))[0] == 0
    rows = read_table(open(out))
    assert {r["quantity"] for r in rows} == {"i_11", "i_22", "i_12", "i_21"}
    assert all(np.isfinite(r["std_error"]) for r in rows)


def test_sample_counts_export(tmp_path, capsys):
    counts = tmp_path / "counts.csv"
    run(capsys, "sample", "--family", "xyz", "--shots", "50", "--counts-out", str(counts), "--out", str(tmp_path / "s.csv"))
    lines = [l for l in counts.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "x1,x2,y1,y2,outcome,count"
    assert sum(int(l.rsplit(",", 1)[1]) for l in lines[1:]) == 50 * 9


def test_chain_command(tmp_path, capsys):
    out = tmp_path / "c.csv"
    assert run(capsys, "chain", "--thetas-a", "0.3,0.1,0", "--thetas-b", "0.2,0", "--out", str(out))[0] == 0
    rows = read_table(open(out))
    assert len(rows) == 6
    assert max(r["abs_diff"] for r in rows) <= 1e-9
    code, _, err = run(capsys, "chain", "--thetas-a", "0.3", "--thetas-b", "0")
    assert code != 0 and "projective" in err


def test_families_export(capsys):
    code, out, _ = run(capsys, "families")
    lines = out.splitlines()
    assert lines[0] == "name,index,x,y,z"
    assert len(lines) == 1 + 3 + 6 + 10


def test_config_file_with_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    out = tmp_path / "o.csv"
    cfg.write_text(json.dumps({"scenario": "steering2x2", "family": "xyz",
                               "grid": {"start": 0, "stop": 0.5, "count": 3}, "out": str(out)}))
    assert run(capsys, "sweep", "--config", str(cfg), "--family", "ico6")[0] == 0
    assert "family=ico6" in out.read_text().splitlines()[0]
    assert len(read_table(open(out))) == 3


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"famly": "xyz"}))
    code, _, err = run(capsys, "sweep", "--config", str(cfg))
    assert code != 0 and "famly" in err


def test_env_threads(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("SEQSTEER_THREADS", "3")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "sweep", "--family", "xyz", "--grid", "0,pi/4,7", "--out", str(a))
    monkeypatch.setenv("SEQSTEER_THREADS", "1")
    run(capsys, "sweep", "--family", "xyz", "--grid", "0,pi/4,7", "--out", str(b))
    assert a.read_text() == b.read_text()


def test_parse_number():
    assert parse_number("pi/4") == pytest.approx(np.pi / 4)
    assert parse_number("3*pi/16") == pytest.approx(3 * np.pi / 16)
    assert parse_number("0.34") == 0.34
    with pytest.raises(ConfigError):
        parse_number("pie")


def test_grid_single_point():
    np.testing.assert_array_equal(Grid.parse("0.2,0.7,1").values(), [0.2])
    with pytest.raises(ConfigError):
        RunConfig.from_sources({}, {"theta_a1": "1.0", "family": "xyz"}).validate()

import io
import subprocess
import sys

import pytest

from anytime_cs.boundaries import mixture_boundary
from anytime_cs.cli import main


def run(capsys, *argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(out, sep=","):
    lines = out.strip().splitlines()
    return lines[0].split(sep), [line.split(sep) for line in lines[1:]]


def test_boundary_values(capsys):
    code, out, _ = run(capsys, "boundary", "--kind", "normal2", "--rho", "1", "--v", "1")
    assert code == 0
    assert out == "v,u\n1,3.656394871\n"
    code, out, _ = run(capsys, "boundary", "--kind", "stitch-poly", "--eta", "2", "--s", "1.4", "--v", "1")
    assert out.splitlines()[1] == "1,2.916899997"


def test_boundary_grid_and_tsv(capsys):
    code, out, _ = run(capsys, "boundary", "--kind", "normal1", "--rho", "2", "--v-min", "1",
                       "--v-max", "1e4", "--v-points", "5", "--tsv")
    head, rows = table(out, "\t")
    assert head == ["v", "u"] and len(rows) == 5
    u = mixture_boundary("normal1", {"rho": 2.0}, 0.05)
    for v, val in rows:
        assert float(val) == pytest.approx(u(float(v)), rel=1e-9)


def test_boundary_config_round_trip(capsys, tmp_path):
    code, out, _ = run(capsys, "boundary", "--kind", "gammaexp", "--rho", "3", "--c", "0.5",
                       "--print-config")
    cfg = tmp_path / "b.cfg"
    cfg.write_text(out)
    _, a, _ = run(capsys, "boundary", "--config", str(cfg), "--v", "10", "--v", "100")
    _, b, _ = run(capsys, "boundary", "--kind", "gammaexp", "--rho", "3", "--c", "0.5", "--v", "10", "--v", "100")
    assert a == b
    # flags override the file
    _, c, _ = run(capsys, "boundary", "--config", str(cfg), "--rho", "4", "--v", "10")
    assert c.splitlines()[1] != a.splitlines()[1]


def test_usage_errors(capsys, tmp_path):
    assert run(capsys, "boundary", "--rho", "1")[0] == 2
    assert run(capsys, "boundary", "--kind", "bogus")[0] == 2
    assert run(capsys, "boundary", "--kind", "normal2", "--rho", "-1", "--v", "1")[0] == 2
    assert run(capsys, "boundary", "--kind", "normal2", "--rho", "1", "--v-min", "5", "--v-max", "1")[0] == 2
    code, _, err = run(capsys, "tune", "--opt-time", "100", "--alpha", "2")
    assert code == 2 and err.startswith("error:")
    with pytest.raises(SystemExit) as exc:
        main(["confseq"])
    assert exc.value.code == 2


def test_io_errors(capsys, tmp_path):
    assert run(capsys, "confseq", "--strategy", "hoeffding", "--input", str(tmp_path / "missing"))[0] == 3
    assert run(capsys, "boundary", "--config", str(tmp_path / "missing"))[0] == 3


def test_confseq_stream(capsys, tmp_path):
    data = tmp_path / "x.csv"
    data.write_text("# comment\n1\n0\n1\n\n1\n")
    code, out, _ = run(capsys, "confseq", "--strategy", "hoeffding", "--input", str(data))
    head, rows = table(out)
    assert code == 0 and head == ["t", "lower", "upper"]
    assert [r[0] for r in rows] == ["1", "2", "3", "4"]
    widths = [float(r[2]) - float(r[1]) for r in rows]
    assert widths == sorted(widths, reverse=True)
    code, out, _ = run(capsys, "confseq", "--strategy", "hoeffding", "--input", str(data),
                       "--intersect", "--null", "0.5")
    head, rows = table(out)
    assert head == ["t", "lower", "upper", "empty", "p_value"]
    p = [float(r[4]) for r in rows]
    assert p == sorted(p, reverse=True) and all(0 <= x <= 1 for x in p)


def test_confseq_rejects_bad_rows(capsys, tmp_path, monkeypatch):
    code, _, err = run(capsys, "confseq", "--strategy", "hoeffding", stdin="0.5\n3\n", monkeypatch=monkeypatch)
    assert code == 2 and "line 2" in err
    code, _, err = run(capsys, "confseq", "--strategy", "hoeffding", stdin="abc\n", monkeypatch=monkeypatch)
    assert code == 2
    code, _, err = run(capsys, "confseq", "--strategy", "naive-sn", "--null", "0",
                       stdin="1\n", monkeypatch=monkeypatch)
    assert code == 2 and "not uniformly valid" in err


@pytest.mark.parametrize("strategy", ["hoeffding", "empirical-bernstein", "naive-sn", "beta-binomial",
                                      "bernoulli-family", "variance"])
def test_every_strategy_runs(capsys, monkeypatch, strategy):
    stdin = "".join(f"{x}\n" for x in [0.2, 0.9, 0.4, 0.7, 0.1, 0.5] * 5)
    code, out, _ = run(capsys, "confseq", "--strategy", strategy, stdin=stdin, monkeypatch=monkeypatch)
    assert code == 0
    _, rows = table(out)
    assert len(rows) == 30
    lo, hi = float(rows[-1][1]), float(rows[-1][2])
    assert lo <= hi


def test_ate_single_row(capsys, monkeypatch):
    code, out, _ = run(capsys, "ate", stdin="1,0.5,1\n", monkeypatch=monkeypatch)
    head, rows = table(out)
    assert head == ["t", "estimate", "lower", "upper", "v"]
    assert rows[0][:2] == ["1", "1"] and rows[0][4] == "1"
    assert float(rows[0][2]) < 1 < float(rows[0][3])
    code, _, err = run(capsys, "ate", stdin="2,0.5,1\n", monkeypatch=monkeypatch)
    assert code == 2 and "treatment" in err
    code, _, _ = run(capsys, "ate", stdin="1,0.5\n", monkeypatch=monkeypatch)
    assert code == 2


def test_covariance(capsys, monkeypatch):
    rows = "1.414,1.414\n-0.707,0.707\n" * 10
    code, out, _ = run(capsys, "covariance", "--b", "4", "--check", "1.25,0.75,1.25",
                       stdin=rows, monkeypatch=monkeypatch)
    head, body = table(out)
    assert code == 0
    assert head == ["t", "s00", "s01", "s11", "ball_radius", "contains"]
    assert body[-1][-1] in ("0", "1")
    code, _, _ = run(capsys, "covariance", "--b", "4", "--check", "1,2",
                     stdin=rows, monkeypatch=monkeypatch)
    assert code == 2
    code, _, _ = run(capsys, "covariance", "--b", "4", stdin="1,1\n1\n", monkeypatch=monkeypatch)
    assert code == 2


def test_tune(capsys):
    code, out, _ = run(capsys, "tune", "--opt-time", "500")
    rho = float(out.splitlines()[1])
    assert rho == pytest.approx(500 / 8.212, rel=1e-3)
    _, out8, _ = run(capsys, "tune", "--opt-time", "8.2", "--alpha", "0.05", "--l0", "1")
    assert float(out8.splitlines()[1]) == pytest.approx(1.0, abs=0.01)
    _, out1, _ = run(capsys, "tune", "--opt-time", "500", "--one-sided")
    assert float(out1.splitlines()[1]) > rho


def test_simulate_deterministic(capsys):
    argv = ["simulate", "--scenario", "bernoulli05", "--reps", "20", "--horizon", "200",
            "--strategies", "hoeffding,naive_sn"]
    code, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert code == 0 and a == b
    head, rows = table(a)
    assert head[:3] == ["scenario", "strategy", "t"]
    assert {r[1] for r in rows} == {"hoeffding", "naive_sn"}
    assert run(capsys, "simulate", "--scenario", "bernoulli05", "--strategies", "clt")[0] == 2


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "anytime_cs.cli", "tune", "--opt-time", "100"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("rho\n")
    res = subprocess.run([sys.executable, "-m", "anytime_cs.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip()

import csv
import io

import numpy as np
import pytest

from hypsmap.cli import main


def _config(tmp_path, text):
    p = tmp_path / "run.ini"
    p.write_text(text, encoding="utf-8")
    return str(p)


def _table(path):
    lines = [ln for ln in open(path, encoding="utf-8") if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("".join(lines))))


def _manifest(path):
    return dict(ln[2:].rstrip("\n").split(": ", 1) for ln in open(path, encoding="utf-8") if ln.startswith("# "))


def test_soliton_check(tmp_path):
    out = tmp_path / "s.csv"
    cfg = _config(tmp_path, "[grid]\nn_points = 4096\n[soliton]\nlambdas = 0, 0.25, 0.5, 1, 2\n")
    assert main(["soliton-check", "--config", cfg, "--set", f"output.path={out}"]) == 0
    rows = _table(out)
    assert float(rows[0]["energy"]) < 1e-15 and float(rows[0]["rhs_sup"]) == 0.0
    assert float(rows[2]["energy"]) == pytest.approx(2.513274, abs=2e-5)
    e = [float(r["energy"]) for r in rows[1:]]
    assert all(b > a for a, b in zip(e, e[1:]))
    man = _manifest(out)
    for key in ("command", "hypsmap", "numpy", "scipy", "grid.h", "grid.n_points", "soliton.lambdas"):
        assert key in man


def test_roundtrip_constant_and_soliton(tmp_path):
    out = tmp_path / "r.csv"
    cfg = _config(tmp_path, "[grid]\nn_points = 4096\n[roundtrip]\nprobes = 3\n")
    assert main(["roundtrip", "--config", cfg, "--set", "map.kind=constant", "--set", f"output.path={out}"]) == 0
    assert float(_manifest(out)["result.sup_error"]) == 0.0
    assert main(["roundtrip", "--config", cfg, "--set", "map.lam=0.5", "--set", f"output.path={out}"]) == 0
    assert float(_manifest(out)["result.sup_error"]) <= 5e-6
    rows = _table(out)
    assert [r["kind"] for r in rows] == ["forward"] * 3 + ["inverse"] * 3
    assert all(float(r["constant"]) > 0 for r in rows)


def test_evolve_zero_data_and_dump(tmp_path):
    out, dump = tmp_path / "e.csv", tmp_path / "final.csv"
    cfg = _config(tmp_path, f"[grid]\nn_points = 512\n[evolve]\ninitial = zero\nt_end = 0.05\nevery = 10\n[output]\npath = {out}\nfinal_state = {dump}\n")
    assert main(["evolve", "--config", cfg]) == 0
    rows = _table(out)
    assert len(rows) == 6
    assert all(float(v) == 0.0 for r in rows for k, v in r.items() if k not in ("step", "t"))
    state = _table(dump)
    assert list(state[0]) == ["r", "re_psi_plus", "im_psi_plus", "re_psi_minus", "im_psi_minus", "a2", "a0"]
    assert len(state) == 512 and float(state[-1]["a2"]) == 1.0


def test_evolve_small_data(tmp_path):
    out = tmp_path / "e.csv"
    cfg = _config(tmp_path, f"[grid]\nn_points = 1024\n[evolve]\ninitial = small\nnorm = 0.1\nt_end = 0.2\ndt = 2e-3\nevery = 20\n[output]\npath = {out}\n")
    assert main(["evolve", "--config", cfg]) == 0
    rows = _table(out)
    assert max(float(r["mass_drift"]) for r in rows) <= 1e-10
    l4 = [float(r["l4_accumulator"]) for r in rows]
    assert all(b > a for a, b in zip(l4, l4[1:]))


def test_kernel_decay(tmp_path):
    out = tmp_path / "k.csv"
    cfg = _config(tmp_path, f"[kernel]\nt_large = 125, 250, 500, 1000\nn_rho = 11\n[output]\npath = {out}\n")
    assert main(["kernel-decay", "--config", cfg]) == 0
    rows = _table(out)
    assert rows[0]["kind"] == "fixed_rho" and float(rows[0]["slope"]) == pytest.approx(-1.5, abs=0.05)
    assert float(rows[1]["slope"]) == pytest.approx(-1.0, abs=0.15)


def test_determinism_and_threads(tmp_path, monkeypatch):
    text = "[grid]\nn_points = 256\n[evolve]\ninitial = small\nt_end = 0.02\nevery = 5\n[sweep]\ncommand = evolve\nparameter = evolve.dt\nvalues = 4e-3, 2e-3, 1e-3\n"
    cfg = _config(tmp_path, text)
    outs = []
    for threads in ("1", "3"):
        monkeypatch.setenv("HYPSMAP_THREADS", threads)
        out = tmp_path / "sweep.csv"
        assert main(["sweep", "--config", cfg, "--set", f"output.path={out}"]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    rows = _table(tmp_path / "sweep.csv")
    assert [r["sweep_value"] for r in rows[:2]] == ["4e-3", "4e-3"]
    assert {r["sweep_value"] for r in rows} == {"4e-3", "2e-3", "1e-3"}


def test_exit_codes(tmp_path, monkeypatch, capsys):
    cfg = _config(tmp_path, "[grid]\nn_points = 2048\n")
    assert main(["roundtrip", "--config", str(tmp_path / "none.ini")]) == 2
    assert main(["roundtrip", "--config", cfg, "--set", "grid.bogus=1"]) == 2
    assert main(["nosuch", "--config", cfg]) == 2
    assert main(["roundtrip"]) == 2
    monkeypatch.setenv("HYPSMAP_THREADS", "zero")
    assert main(["sweep", "--config", cfg, "--set", "sweep.values=1"]) == 2
    out = tmp_path / "fail.csv"
    code = main(
        ["roundtrip", "--config", cfg, "--set", "map.kind=bump", "--set", "map.amplitude=1.0",
         "--set", "map.twist=2", "--set", f"output.path={out}"]
    )
    assert code == 3
    diag = (tmp_path / "fail.csv.diag").read_text(encoding="utf-8")
    assert "ReconstructionError" in diag and "config.map.amplitude: 1.0" in diag
    capsys.readouterr()


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_blowup_is_numerical_failure(tmp_path):
    out = tmp_path / "e.csv"
    cfg = _config(
        tmp_path,
        f"[grid]\nn_points = 256\nr_max = 8\n[evolve]\ninitial = gaussian\namplitude = 1e200\nt_end = 0.01\n[output]\npath = {out}\n",
    )
    assert main(["evolve", "--config", cfg]) == 3
    assert (tmp_path / "e.csv.diag").exists()
    assert np.isfinite(float(_table(out)[0]["t"]))

import json
import subprocess
import sys

import numpy as np
import pytest

from arbodd import instance as io
from arbodd.bench import (
    BenchConfig, COLUMNS, build_for_method, from_csv, method_label, parse_method, read_csv, run_bench,
    strip_times, summarize, to_csv,
)
from arbodd.cli import main
from arbodd.generators import CapitalBudgetingSpec, gen_capital
from arbodd.milp import parse_lp_file, solve_milp


def small_config(**kw):
    cfg = dict(family="capital", sizes=[6], seeds=[0, 1], methods=["exact_nf", "relaxed_nf", "restricted_nf", "kadapt"],
               Q_list=[0, 3], K_list=[1], time_limit=60.0, params={"M": 2})
    cfg.update(kw)
    return cfg


def test_method_parsing():
    assert parse_method("relaxed_nf:3") == ("relaxed_nf", "3")
    assert method_label("relaxed_nf:3") == "relaxed_nf(Q=3)"
    assert method_label("restricted_nf:W5") == "restricted_nf(W=5)"
    assert method_label("kadapt:2") == "kadapt(K=2)"
    assert method_label("multi_nf") == "multi_nf"
    for bad in ("nonsense", "relaxed_nf", "kadapt"):
        with pytest.raises(ValueError):
            parse_method(bad)
    with pytest.raises(ValueError):
        BenchConfig.from_dict({**small_config(), "colour": "red"})


def test_config_expansion():
    cfg = BenchConfig.from_dict(small_config())
    assert cfg.method_list() == ["exact_nf", "relaxed_nf:0", "relaxed_nf:3", "restricted_nf:0", "restricted_nf:3",
                                 "kadapt:1"]
    assert cfg.instances() == [("capital", 6, 0), ("capital", 6, 1)]


def test_run_bench(tmp_path):
    out = tmp_path / "rows.csv"
    rows, summary = run_bench(small_config(output=str(out)))
    assert len(rows) == 12
    assert all(r.status == "Optimal" for r in rows)
    back = read_csv(out)
    assert [r.instance_id for r in back] == [r.instance_id for r in rows]
    assert out.read_text().splitlines()[0].split(",") == COLUMNS
    for r in rows:
        if r.method in ("exact_nf", "relaxed_nf(Q=0)", "relaxed_nf(Q=3)"):
            assert r.model_gap_pct >= -1e-6
            assert r.true_gap_pct >= -1e-6
            assert r.model_gap_pct >= r.true_gap_pct - 1e-6
        if r.method == "exact_nf":
            assert r.true_gap_pct == pytest.approx(0.0, abs=1e-6)
    assert "relaxed_nf(Q=3)" in summary
    table = summarize(back)
    assert {t["method"] for t in table} == {r.method for r in rows}


def test_csv_round_trip_exact():
    rows, _ = run_bench(small_config(seeds=[2], methods=["exact_nf"]))
    text = to_csv(rows)
    assert to_csv(from_csv(text)) == text


def test_reproducible_and_parallel():
    a, _ = run_bench(small_config(seeds=[3]))
    b, _ = run_bench(small_config(seeds=[3], workers=2))
    assert strip_times(to_csv(a)) == strip_times(to_csv(b))


def test_error_rows_do_not_abort():
    rows, _ = run_bench(small_config(seeds=[0], methods=["exact_nf"], solver="external:/nonexistent/solver"))
    assert rows[0].status.startswith("Error")


def test_build_for_method_variants():
    inst = gen_capital(CapitalBudgetingSpec(6, M=2, seed=0))
    for m in ("exact_nf", "relaxed_nf:W2", "restricted_nf:W2", "multi_nf", "integral", "kadapt:2"):
        built = build_for_method(inst, m)
        assert solve_milp(built.model).status == "Optimal"


# ---------------------------------------------------------------------------
@pytest.fixture
def inst_file(tmp_path):
    assert main(["gen", "--family", "capital", "--n", "6", "--factors", "2", "--seed", "4",
                 "--out", str(tmp_path / "i.json")]) == 0
    return tmp_path / "i.json"


def test_cli_gen_and_solve(inst_file, tmp_path, capsys):
    inst = io.load(inst_file)
    assert inst.n == 6
    assert main(["solve", str(inst_file), "--exact", "--out", str(tmp_path / "x.json")]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["status"] == "Optimal"
    assert main(["evaluate", str(inst_file), str(tmp_path / "x.json"), "--bound", str(rep["bound"])]) == 0
    ev = json.loads(capsys.readouterr().out)
    assert ev["z"] == pytest.approx(rep["objective"], abs=1e-6)
    assert ev["model_gap_pct"] == pytest.approx(0.0, abs=1e-5)


def test_cli_compile_and_emit(inst_file, tmp_path, capsys):
    assert main(["compile-dd", str(inst_file), "--mode", "distance", "--Q", "3", "--dump", str(tmp_path / "d.txt")]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["reduced"]["arcs"] <= stats["unreduced"]["arcs"]
    assert (tmp_path / "d.txt").read_text().count("\n") == stats["unreduced"]["arcs"] + 1
    assert main(["emit-lp", str(inst_file), "--relaxed", "3", "--out", str(tmp_path / "m.lp")]) == 0
    m = parse_lp_file((tmp_path / "m.lp").read_text())
    assert m.obj_sense == "max"


def test_cli_bench(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(small_config(seeds=[0], methods=["exact_nf"])))
    assert main(["bench", str(cfg), "--out", str(tmp_path / "b.csv")]) == 0
    assert "exact_nf" in capsys.readouterr().out
    assert len(read_csv(tmp_path / "b.csv")) == 1


def test_cli_exit_codes(inst_file, tmp_path, capsys):
    assert main(["gen", "--family", "capital"]) == 4
    with pytest.raises(SystemExit) as ex:
        main(["solve", str(inst_file)])
    assert ex.value.code == 4
    assert main(["solve", str(tmp_path / "missing.json"), "--exact"]) == 4
    (tmp_path / "bad.json").write_text("{}")
    assert main(["solve", str(tmp_path / "bad.json"), "--exact"]) == 4
    (tmp_path / "x.txt").write_text("1 0 2")
    assert main(["evaluate", str(inst_file), str(tmp_path / "x.txt")]) == 4
    # a zero budget with y >= x forced by x = 1 is infeasible
    inst = io.load(inst_file)
    d = io.to_dict(inst)
    d["x_rows"][0]["sense"] = ">="
    d["x_rows"][0]["rhs"] = float(np.sum(d["x_rows"][0]["coeffs"]))
    io.save(io.from_dict(d), tmp_path / "inf.json")
    assert main(["solve", str(tmp_path / "inf.json"), "--exact"]) == 2
    assert main(["solve", str(inst_file), "--kadapt", "3", "--time-limit", "0"]) == 3


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "arbodd", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "compile-dd" in out.stdout

import json

import numpy as np
import pytest

from binidx import cli
from binidx.bmf import factorize_mask
from binidx.cli import main
from binidx.fileio import (
    dumps_factors,
    loads_weights,
    read_factors,
    read_mask,
    write_factors,
    write_mask,
    write_weights,
)
from binidx.matrix_core import BitMatrix, random_gaussian
from binidx.tiling import assemble_mask

from test_fileio import printed_factor_file
from worked_example import IA_EX, W_EX


@pytest.fixture
def wex_file(tmp_path):
    return str(write_weights(tmp_path / "w.wmat", W_EX))


def rows_of(path):
    return [line for line in path.read_text().splitlines() if not line.startswith("#")]


def test_factorize_worked_example(tmp_path, wex_file):
    out = tmp_path / "run"
    assert main(["factorize", wex_file, "--rank", "2", "--sparsity", "0.48",
                 "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    w = loads_weights((tmp_path / "w.wmat").read_bytes())
    pair, records = factorize_mask(w, 2, 0.48)
    assert summary["cost"] == pair.cost
    assert abs(summary["achieved_sparsity"] - 0.48) <= 0.001
    assert summary["index_bits"] == 20 and summary["config"]["seed"] == 0
    assert read_mask(out / "mask.bmsk") == pair.decode()
    assert assemble_mask(read_factors(out / "factors.bidx")) == pair.decode()
    sweep = (out / "sweep.csv").read_text().splitlines()
    assert sweep[0].startswith("# ") and json.loads(sweep[0][2:])["command"] == "factorize"
    assert sweep[1] == "s_p,s_z,s_a,cost,feasible" and len(sweep) == 2 + len(records)


def test_factorize_ratio_at_scale(tmp_path):
    path = write_weights(tmp_path / "w.wmat", random_gaussian(500, 800, seed=0))
    out = tmp_path / "run"
    assert main(["factorize", str(path), "--rank", "16", "--sparsity", "0.95",
                 "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert round(summary["compression_ratio"], 1) == 19.2
    assert summary["formula_ratio"] == summary["compression_ratio"]


def test_factorize_tiled_writes_block_sweeps(tmp_path):
    path = write_weights(tmp_path / "w.wmat", random_gaussian(20, 30, seed=2))
    out = tmp_path / "run"
    assert main(["factorize", str(path), "--rank", "2", "--sparsity", "0.7",
                 "--tiles", "2x2", "--workers", "2", "--out", str(out)]) == 0
    assert sorted(p.name for p in out.glob("sweep_*.csv")) == [
        "sweep_0_0.csv", "sweep_0_1.csv", "sweep_1_0.csv", "sweep_1_1.csv"]
    assert len(json.loads((out / "summary.json").read_text())["blocks"]) == 4


def test_factorize_is_reproducible(tmp_path, wex_file):
    for name in ("a", "b"):
        main(["factorize", wex_file, "--rank", "2", "--sparsity", "0.48",
              "--out", str(tmp_path / name)])
    for f in ("factors.bidx", "mask.bmsk"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    # outputs differ only in the recorded --out directory
    a, b = (json.loads((tmp_path / d / "summary.json").read_text()) for d in "ab")
    a["config"].pop("out"), b["config"].pop("out")
    assert a == b
    assert rows_of(tmp_path / "a" / "sweep.csv") == rows_of(tmp_path / "b" / "sweep.csv")


def test_exit_codes(tmp_path, wex_file):
    assert main(["factorize", str(tmp_path / "missing.wmat"), "--rank", "2",
                 "--sparsity", "0.5", "--out", str(tmp_path)]) == 2
    assert main(["factorize", wex_file, "--sparsity", "0.5", "--out", str(tmp_path)]) == 2
    assert main(["factorize", wex_file, "--rank", "2", "--sparsity", "1.5",
                 "--out", str(tmp_path)]) == 2
    assert main(["factorize", wex_file, "--rank", "2", "--sparsity", "0.5",
                 "--tiles", "9x9", "--out", str(tmp_path)]) == 2
    assert main(["bogus"]) == 2
    small = write_weights(tmp_path / "s.wmat", [[1.0, 2.0], [3.0, 4.0]])
    assert main(["factorize", str(small), "--rank", "1", "--sparsity", "0.25",
                 "--out", str(tmp_path / "x")]) == 3


def test_invariant_violation_exit(tmp_path, wex_file, monkeypatch):
    other = read_factors(write_factors(tmp_path / "o.bidx", printed_factor_file()))
    other.blocks[0][0].ip.set_bit(0, 0, not other.blocks[0][0].ip.get_bit(0, 0))
    monkeypatch.setattr(cli, "loads_factors", lambda blob: other)
    assert main(["factorize", wex_file, "--rank", "2", "--sparsity", "0.48",
                 "--out", str(tmp_path / "run")]) == 4


def test_decode(tmp_path):
    src = write_factors(tmp_path / "f.bidx", printed_factor_file())
    assert main(["decode", str(src), "--out", str(tmp_path / "d1")]) == 0
    assert main(["decode", str(src), "--out", str(tmp_path / "d2")]) == 0
    first = (tmp_path / "d1" / "mask.bmsk").read_bytes()
    assert first == (tmp_path / "d2" / "mask.bmsk").read_bytes()
    assert np.array_equal(read_mask(tmp_path / "d1" / "mask.bmsk").to_bool(), IA_EX)


def test_decode_truncated(tmp_path):
    blob = dumps_factors(printed_factor_file())
    bad = tmp_path / "bad.bidx"
    bad.write_bytes(blob[:-1])
    assert main(["decode", str(bad), "--out", str(tmp_path / "d")]) == 2


def test_compare_mask_and_plans(tmp_path):
    bits = BitMatrix.from_bool(random_gaussian(800, 500, seed=0) > 1.645)
    mask = write_mask(tmp_path / "m.bmsk", bits)
    ref = tmp_path / "ref.json"
    ref.write_text(json.dumps({"viterbi": 80000}))
    assert main(["compare", str(mask), "--rank", "16", "--reference", str(ref),
                 "--out", str(tmp_path)]) == 0
    rows = {r.split(",")[0]: r.split(",") for r in rows_of(tmp_path / "compare.csv")}
    assert rows["bmf"][1] == "20800" and rows["bitmap"][1] == "400000"
    assert rows["viterbi"][-1] == "reference"

    ones = write_mask(tmp_path / "one.bmsk", BitMatrix.ones(1, 1))
    assert main(["compare", str(ones), "--out", str(tmp_path / "one")]) == 0
    assert rows_of(tmp_path / "one" / "compare.csv")[1].startswith("bitmap,1,")

    assert main(["compare", "--shape", "4096x4096", "--rank", "32", "--tiles", "8x8",
                 "--out", str(tmp_path / "square")]) == 0
    assert rows_of(tmp_path / "square" / "compare.csv")[2].startswith("bmf,2097152,")


def test_compare_errors(tmp_path, wex_file):
    assert main(["compare", wex_file]) == 2
    assert main(["compare"]) == 2
    ref = tmp_path / "ref.json"
    ref.write_text("[1, 2]")
    assert main(["compare", "--shape", "4x4", "--reference", str(ref)]) == 2


def test_simulate(tmp_path, capsys):
    assert main(["simulate", "--sp", "1.0,0.0,0.9", "--sz", "0.968,0.0", "--ranks", "16",
                 "--rows", "1000", "--cols", "1000"]) == 0
    lines = [line for line in capsys.readouterr().out.splitlines() if not line.startswith("#")]
    rows = [line.split(",") for line in lines[1:]]
    assert len(rows) == 6
    by_point = {(float(r[0]), float(r[1])): (float(r[6]), float(r[7])) for r in rows}
    assert by_point[(1.0, 0.968)] == (1.0, 1.0)
    assert by_point[(0.0, 0.0)] == (0.0, 0.0)
    pred, emp = by_point[(0.9, 0.968)]
    assert abs(pred - 0.95) <= 1e-3 and abs(emp - pred) <= 0.01


def test_sweep_command(tmp_path):
    path = write_weights(tmp_path / "w.wmat", random_gaussian(40, 60, seed=1))
    assert main(["sweep", str(path), "--ranks", "2,4", "--sparsity", "0.9",
                 "--out", str(tmp_path)]) == 0
    lines = rows_of(tmp_path / "tradeoff.csv")
    assert lines[0] == "k,compression_ratio,cost,near_zero_survivors,s_a"
    assert [line.split(",")[0] for line in lines[1:]] == ["2", "4"]

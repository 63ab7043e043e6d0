import json

import pytest

from ramified import io
from ramified.cli import run
from ramified.eulerian import EmbeddedNetwork, make_flow
from ramified.lagrangian import make_plan
from ramified.measures import dirac, make_measure

Y = EmbeddedNetwork.build([(0, 0), (0.5, 0), (1, 1), (1, -1)], [(0, 1), (1, 2), (1, 3)])


@pytest.fixture
def files(tmp_path):
    paths = {
        "edge": tmp_path / "edge.json",
        "yflow": tmp_path / "y.json",
        "plan": tmp_path / "plan.json",
        "mu": tmp_path / "mu.json",
        "nu": tmp_path / "nu.json",
    }
    io.write(paths["edge"], make_flow(EmbeddedNetwork.build([(0, 0), (1, 0)], [(0, 1)]), [1.0]).to_dict())
    io.write(paths["yflow"], make_flow(Y, [1.0, 0.5, 0.5]).to_dict())
    io.write(paths["plan"], make_plan(Y, [(0.5, (0, 1, 2)), (0.5, (0, 1, 3))]).to_dict())
    io.write(paths["mu"], dirac((0, 0)).to_dict())
    io.write(paths["nu"], make_measure([((1, 1), 0.5), ((1, -1), 0.5)]).to_dict())
    return {k: str(v) for k, v in paths.items()}


def lines(out):
    return dict(line.split(" = ", 1) for line in out.strip().splitlines() if " = " in line)


def test_eval(files, capsys):
    assert run(["eval", "--alpha", "0.5", files["edge"]]) == 0
    out = lines(capsys.readouterr().out)
    assert out["E_alpha"] == "1.000000000000"
    assert out["cycles"] == "0"


def test_eval_plan(files, capsys):
    assert run(["eval-plan", "--alpha", "0.5", files["plan"]]) == 0
    out = lines(capsys.readouterr().out)
    assert out["I_alpha"] == out["E_alpha"] == out["full_E_alpha"]
    assert out["simple"] == "true"


def test_verify(files, capsys):
    assert run(["verify", "--alpha", "0.5", files["plan"]]) == 0
    assert lines(capsys.readouterr().out)["costs_equal"] == "true"
    assert run(["verify", "--alpha", "0.5", "--flow", files["yflow"], files["plan"]]) == 0
    assert lines(capsys.readouterr().out)["flow_matches"] == "true"


def test_dyadic(capsys):
    assert run(["dyadic", "--dim", "2", "--alpha", "0.6", "--levels", "6"]) == 0
    rows = [r.split() for r in capsys.readouterr().out.splitlines()[2:7]]
    assert len(rows) == 5 and all(r[2] == "0.870550563296" for r in rows)


def test_convert_both_ways(files, tmp_path, capsys):
    out = str(tmp_path / "dec.json")
    assert run(["convert", "--to", "plan", "--mu", files["mu"], "--nu", files["nu"], files["yflow"], "-o", out]) == 0
    data = io.load(out)
    assert len(data["curves"]) == 2 and not any(data["residual"]["weights"])
    manifest = io.load(out + ".manifest.json")
    assert manifest["command"] == "convert"
    assert manifest["outputs"][out] == io.digest(out)
    assert run(["convert", "--to", "flow", files["plan"]]) == 0
    captured = capsys.readouterr()
    assert json.loads(captured.out)["intensity"] == [1.0, 0.5, 0.5]
    assert json.loads(captured.err)["command"] == "convert"


def test_solve_is_byte_identical(files, tmp_path, capsys):
    outs = []
    for k in range(2):
        out = str(tmp_path / f"s{k}.json")
        argv = ["solve", "--alpha", "0.3", "--mode", "local", "--seed", "3", files["mu"], files["nu"], "-o", out]
        assert run(argv) == 0
        outs.append(open(out, "rb").read())
    assert outs[0] == outs[1]
    assert lines(capsys.readouterr().out)["converged"] == "true"
    assert io.load(str(tmp_path / "s0.json"))["cost"] == pytest.approx(2.280240532691333, abs=1e-9)


def test_export_svg(files, tmp_path):
    out = tmp_path / "y.svg"
    assert run(["export-svg", files["yflow"], "-o", str(out)]) == 0
    assert out.read_text().startswith("<svg")


def test_exit_codes(files, tmp_path, capsys):
    assert run(["eval", "--alpha", "1.5", files["edge"]]) == 1
    assert "AlphaOutOfRange" in capsys.readouterr().err
    assert run(["eval", "--alpha", "0.5", str(tmp_path / "missing.json")]) == 2
    assert run(["convert", "--to", "plan", files["yflow"]]) == 2
    half = tmp_path / "half.json"
    io.write(half, dirac((1, 0), 0.5).to_dict())
    assert run(["solve", "--alpha", "0.5", files["mu"], str(half)]) == 1
    assert "TotalMassNotOne" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        run(["bogus"])
    assert exc.value.code == 2

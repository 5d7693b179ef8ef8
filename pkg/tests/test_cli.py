import json

import pytest
from typer.testing import CliRunner

from stablyfree.certificates import square_schema
from stablyfree.cli import EXIT_INVALID, EXIT_VERIFICATION, app
from stablyfree.coeff_ring import CoeffHom
from stablyfree.construction import build_square_A
from stablyfree.milnor import MilnorSquare

runner = CliRunner()


def test_check_square_passes():
    result = runner.invoke(app, ["check-square", "--p", "2", "--which", "A", "--samples", "20"])
    assert result.exit_code == 0, result.output
    assert "Z[x]/(-1 + x^4)" in result.output


def test_check_sigma_square(tmp_path):
    out = tmp_path / "report.json"
    result = runner.invoke(
        app,
        ["check-square", "--which", "sigma", "--orders", "2,2", "--subgroup", "1,0",
         "--samples", "20", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    report = json.loads(out.read_text())
    assert report["ok"] and report["square"] == "sigma(C2xC2)"


@pytest.mark.parametrize(
    "args",
    [
        ["check-square", "--p", "4"],
        ["check-square", "--which", "C"],
        ["check-square", "--which", "sigma", "--orders", "2,2", "--subgroup", "1,1"],
        ["gen-module", "--n", "0"],
        ["certify", "--m", "1"],
    ],
)
def test_invalid_input_exits_one(args):
    assert runner.invoke(app, args).exit_code == EXIT_INVALID


def test_corrupted_descriptor_exits_two(tmp_path):
    good = build_square_A(3)
    corrupted = MilnorSquare(
        name="corrupted",
        rank=good.rank,
        whole=good.whole,
        plus=good.plus,
        minus=good.minus,
        base=good.base,
        pi_plus=good.pi_plus,
        pi_minus=CoeffHom.from_images(good.whole, good.minus, {"x": "x^2"}),
        psi_plus=good.psi_plus,
        psi_minus=good.psi_minus,
        fibre=good.fibre,
    )
    path = tmp_path / "square.json"
    path.write_text(square_schema(corrupted).model_dump_json())
    result = runner.invoke(app, ["check-square", "--descriptor", str(path), "--samples", "5"])
    assert result.exit_code == EXIT_VERIFICATION


def test_gen_module(tmp_path):
    out = tmp_path / "delta.json"
    result = runner.invoke(app, ["gen-module", "--p", "2", "--n", "1", "--out", str(out)])
    assert result.exit_code == 0, result.output
    module = json.loads(out.read_text())
    assert module["delta"] == "1 + (1 + x)*t + (1 + x)*s*t*s^-1"
    assert module["y_layers"] == ["1", "t + s*t*s^-1"]


def test_gen_module_text():
    result = runner.invoke(app, ["gen-module", "--p", "3", "--n", "2", "--format", "text"])
    assert result.exit_code == 0, result.output
    assert "T_1 = t - s^2*t*s^-2" in result.output
    lines = result.output.strip().splitlines()
    assert len(lines) == 4
    assert all(line.startswith(("delta_2 = ", "T_")) for line in lines)


def test_gen_module_text_groups_coefficients():
    result = runner.invoke(app, ["gen-module", "--p", "2", "--n", "1", "--format", "text"])
    assert result.exit_code == 0, result.output
    assert "delta_1 = 1 + (1 + x)*(t + s*t*s^-1)" in result.output


def test_certify(tmp_path):
    out = tmp_path / "certify.json"
    result = runner.invoke(
        app, ["certify", "--p", "2", "--n", "1", "--n2", "2", "--len-bound", "3", "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    document = json.loads(out.read_text())
    assert document["decision"]["verdict"] == "Distinct"
    assert document["consistent"] and not document["brute_force"]["hits"]


def test_certify_equivalent(tmp_path):
    out = tmp_path / "certify.json"
    result = runner.invoke(
        app, ["certify", "--p", "3", "--n", "5", "--n2", "5", "--len-bound", "1", "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    document = json.loads(out.read_text())
    assert document["decision"]["verdict"] == "Equivalent"
    assert document["decision"]["witnesses"] == {"gamma": "1", "w": "1", "v": "1"}


def test_trivialize_and_verify(tmp_path):
    path = tmp_path / "certificate.json"
    result = runner.invoke(app, ["trivialize", "--p", "3", "--n", "3", "--out", str(path)])
    assert result.exit_code == 0, result.output
    assert len(json.loads(path.read_text())["factors"]) == 18

    result = runner.invoke(app, ["verify-certificate", str(path)])
    assert result.exit_code == 0, result.output

    document = json.loads(path.read_text())
    document["factors"][3]["coeff"] = [{"word": "s", "coeff": "2"}]
    path.write_text(json.dumps(document))
    result = runner.invoke(app, ["verify-certificate", str(path)])
    assert result.exit_code == EXIT_VERIFICATION


def test_verify_unreadable_certificate(tmp_path):
    path = tmp_path / "missing.json"
    assert runner.invoke(app, ["verify-certificate", str(path)]).exit_code == EXIT_INVALID


def test_family(tmp_path):
    out = tmp_path / "family.json"
    result = runner.invoke(app, ["family", "--p", "2", "--n", "3", "--out", str(out)])
    assert result.exit_code == 0, result.output
    matrix = json.loads(out.read_text())["matrix"]
    assert [row[i] for i, row in enumerate(matrix)] == ["Equivalent"] * 3
    assert matrix[0][1] == "Distinct"


def test_unit_search_negative_control():
    result = runner.invoke(
        app,
        ["unit-search", "--relation", "x:x^2-1", "--characteristic", "2", "--local",
         "--rank", "0", "--support-bound", "1"],
    )
    assert result.exit_code == 0, result.output
    assert "2 units, 0 nontrivial: none" in result.output


def test_unit_search_bad_relation():
    result = runner.invoke(app, ["unit-search", "--relation", "x:x/2"])
    assert result.exit_code == EXIT_INVALID

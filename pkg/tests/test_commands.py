import io
import json
import math

import numpy as np
import pandas as pd
import pytest

import main
from commands.bound import bound_values
from models.functional import Functional
from models.schemas import BoundVariant
from models.space import symmetric_space
from services.malliavin import RademacherCalculus
from services.stein_bounds import SteinBounds
from utils.errors import EmptyBatch, NotPureChaos, NotStandardized, TooFewPoints, ZeroVariance

BOUND_HEADER = "model,n,p,d,kappa_dim,variant,value,provenance"


@pytest.fixture
def cli(monkeypatch, tmp_path, capsys):
    """Run the command line in a scratch directory; returns (exit code, stdout, stderr)"""
    monkeypatch.chdir(tmp_path)

    def run(*argv):
        code = main.main(list(argv))
        out, err = capsys.readouterr()
        return code, out, err
    return run


def table(text):
    return pd.read_csv(io.StringIO(text))


def test_bound_degree_r2(cli):
    code, out, _ = cli("bound", "--model", "degree", "--n", "5", "--p", "0.3", "--d", "0", "--variant", "r2")
    assert code == 0
    assert out.splitlines()[0] == BOUND_HEADER
    rows = table(out).set_index("variant")
    assert rows.loc["kolmogorov_exact", "provenance"] == "exact"
    assert rows.loc["r2", "value"] >= rows.loc["kolmogorov_exact", "value"]
    assert set(rows["model"]) == {"degree"}


def test_bound_hypercube_second_order_terms(cli):
    code, out, _ = cli("bound", "--model", "hypercube", "--n", "3", "--p", "0.4", "--d", "1", "--variant", "2nd_R2")
    assert code == 0
    rows = table(out).set_index("variant")
    for name in ("B1", "B2", "B3", "B4", "B5", "kappa", "A3", "2nd_R2"):
        assert name in rows.index
    assert rows.loc["2nd_R2", "value"] >= rows.loc["kolmogorov_exact", "value"]


def test_bound_cap_exceeded(cli):
    code, out, err = cli("bound", "--model", "degree", "--n", "50", "--p", "0.1")
    assert code == 3
    assert out == ""
    assert err.startswith("cap_exceeded:")
    assert "max n=7 for exact mode" in err


def test_bound_all_variants_of_two_runs(cli):
    code, out, _ = cli("bound", "--model", "two_runs", "--alpha", "1,1,1")
    assert code == 0
    rows = table(out).set_index("variant")
    assert rows.loc["r0", "provenance"] == "grid-approximate"
    assert rows.loc["gamma0", "provenance"] == "grid-approximate"
    assert "j1j2" in rows.index
    assert "fourth" not in rows.index
    dk = rows.loc["kolmogorov_exact", "value"]
    for name in ("r0", "r1", "r2", "2nd_R1", "2nd_R2"):
        assert rows.loc[name, "value"] >= dk - 1e-9
    assert rows.loc["2nd_W", "value"] >= rows.loc["wasserstein_exact", "value"] - 1e-9


def test_bound_fourth_moment_needs_pure_chaos(cli):
    code, _, err = cli("bound", "--model", "degree", "--n", "3", "--p", "0.5", "--variant", "fourth")
    assert code == 2
    assert err.startswith("not_pure_chaos:")

    code, out, _ = cli("bound", "--model", "subgraph", "--pattern", "edge", "--n", "2", "--p", "0.4",
                       "--variant", "fourth")
    assert code == 0
    assert "fourth" in table(out)["variant"].tolist()


def test_bound_values_for_a_product():
    F = Functional.monomial(symmetric_space(2), [0, 1])
    rows = {name: value for name, value, _ in bound_values(F, BoundVariant.R2, refine=4)}
    assert rows["r2"] == pytest.approx(8.0)
    assert set(rows) == {"kolmogorov_exact", "wasserstein_exact", "r2"}


def test_bound_output_is_stable(cli, tmp_path):
    args = ("bound", "--model", "complex", "--n", "4", "--kappa", "2", "--p", "0.4", "--variant", "r1")
    assert cli(*args, "--out", "a.csv")[0] == 0
    assert cli(*args, "--out", "b.csv")[0] == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_bound_json_record(cli):
    code, out, _ = cli("bound", "--model", "degree", "--n", "4", "--p", "0.5", "--variant", "r1", "--format", "json")
    assert code == 0
    record = json.loads(out)
    assert record["command"] == "bound"
    assert record["inputs"]["n"] == 4
    assert {row["variant"] for row in record["rows"]} == {"kolmogorov_exact", "wasserstein_exact", "r1"}
    assert all(set(row) == set(BOUND_HEADER.split(",")) for row in record["rows"])
    assert {row["provenance"] for row in record["rows"]} == {"exact"}
    assert all(row["kappa_dim"] is None and row["d"] == 0 for row in record["rows"])
    assert record["version"]


def test_config_file_with_flag_override(cli, tmp_path):
    (tmp_path / "run.ini").write_text(
        "[experiment]\nvariant = r2\n\n[model]\nmodel = degree\nn = 6\np = 0.3\n\n[output]\nformat = csv\n"
    )
    code, out, _ = cli("bound", "--config", "run.ini", "--n", "4")
    assert code == 0
    rows = table(out)
    assert set(rows["n"]) == {4}
    assert "r2" in rows["variant"].tolist()


def test_config_errors(cli):
    code, _, err = cli("bound", "--model", "degree", "--n", "4")
    assert code == 2
    assert err.startswith("config_error: p:")

    code, _, err = cli("rate", "--model", "degree", "--n-grid", "8,16,32", "--p-law", "one/n")
    assert code == 2
    assert "p_law" in err

    code, _, err = cli("bound", "--config", "missing.ini")
    assert code == 2

    code, _, err = cli("bound", "--model", "degree", "--n", "4", "--p", "1.5")
    assert code == 2
    assert err.startswith("bad_probability:")


def test_rate_two_runs(cli, tmp_path):
    code, _, _ = cli("rate", "--model", "two_runs", "--n-grid", "8,16,32", "--samples", "3000",
                     "--seed", "4", "--out", "rate.csv")
    assert code == 0
    rows = pd.read_csv(tmp_path / "rate.csv")
    assert list(rows.columns) == ["n", "dk", "mc_sd", "prediction", "provenance"]
    assert rows["n"].tolist() == [8, 16, 32]
    assert set(rows["provenance"]) == {"monte-carlo"}
    assert rows["mc_sd"].iloc[0] == pytest.approx(0.8269 / math.sqrt(3000))
    summary = json.loads((tmp_path / "rate.summary.json").read_text())
    assert {"slope", "intercept", "r_squared", "predicted_exponent"} <= set(summary)
    assert summary["predicted_exponent"] < 0


def test_rate_is_identical_across_thread_counts(cli, tmp_path):
    outputs = []
    for threads in ("1", "4", "16"):
        name = f"rate-{threads}.csv"
        code, _, _ = cli("rate", "--model", "degree", "--p-law", "1/n", "--n-grid", "16,32,64",
                         "--samples", "40000", "--seed", "9", "--threads", threads, "--out", name)
        assert code == 0
        outputs.append((tmp_path / name).read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]


def test_rate_needs_a_regime_for_positive_degrees(cli):
    code, _, err = cli("rate", "--model", "degree", "--d", "1", "--p-law", "1/n", "--n-grid", "8,16,32",
                       "--samples", "100")
    assert code == 2
    assert err.startswith("regime_unspecified:")


def test_selftest(cli):
    code, out, _ = cli("selftest")
    assert code == 0
    assert out.splitlines()[0] == "check,inequality,margin,detail,provenance"


def test_verify_filter(cli):
    code, out, err = cli("verify", "--filter", "stein")
    assert code == 0
    assert len(out.splitlines()) == 1
    assert '"passed": true' in err

    code, _, err = cli("verify", "--filter", "bogus")
    assert code == 2


def test_verify_catches_a_sign_flip(cli, monkeypatch):
    def flipped(F):
        pq = F.space.pq
        fourth = RademacherCalculus.gradient_table(F) ** 4 @ F.space.weights
        b3 = float(np.sum(fourth / pq))
        return SteinBounds.inner_gap(F) - 4 * math.sqrt(pq.sum()) * math.sqrt(b3)

    monkeypatch.setattr(SteinBounds, "kol_r2", staticmethod(flipped))
    code, out, _ = cli("verify", "--filter", "bounds")
    assert code == 1
    failures = table(out)
    assert "kol_r2 validity" in failures["check"].tolist()
    assert (failures.loc[failures["check"] == "kol_r2 validity", "margin"] < 0).all()


def test_domain_errors_exit_with_two(cli):
    code, _, err = cli("bound", "--model", "two_runs", "--alpha", "0,0")
    assert code == 2
    assert err.startswith("zero_variance:")


@pytest.mark.parametrize("error", [NotPureChaos, NotStandardized, ZeroVariance, EmptyBatch, TooFewPoints])
def test_rejected_inputs_do_not_exit_with_one(error):
    assert error("message").exit_code == 2


def test_rate_flags_match_config_keys(cli, tmp_path):
    args = ("rate", "--model", "two_runs", "--samples", "2000", "--seed", "3")
    assert cli(*args, "--n_grid", "8,16,32", "--out", "keys.csv")[0] == 0
    assert cli(*args, "--n-grid", "8,16,32", "--out", "alias.csv")[0] == 0
    assert (tmp_path / "keys.csv").read_bytes() == (tmp_path / "alias.csv").read_bytes()

    code, _, _ = cli("rate", "--model", "degree", "--p_law", "1/n", "--n_grid", "16,32,64", "--samples", "2000")
    assert code == 0

import math
import random

import numpy as np
import pytest

import tabscm


def chain_csv(n, seed):
    rng = random.Random(seed)
    lines = ["x,y,colour"]
    for _ in range(n):
        x = rng.gauss(0, 1)
        y = 2 * x + 0.3 * rng.gauss(0, 1)
        colour = "red" if y > 0 else "blue"
        lines.append(f"{x!r},{y!r},{colour}")
    return "\n".join(lines) + "\n"


@pytest.fixture(scope="module")
def table():
    return tabscm.Table.parse(chain_csv(300, 1))


@pytest.fixture(scope="module")
def model(table):
    return tabscm.ScmModel.fit(
        table, [("x", "y"), ("y", "colour")], epochs=3, steps=20, hidden=16, gbdt={"n_trees": 5}, seed=2
    )


def test_table_roundtrip(table, tmp_path):
    assert len(table) == 300
    assert table.columns == ["x", "y", "colour"]
    assert isinstance(table.column("x"), np.ndarray)
    assert set(table.column("colour")) == {"red", "blue"}
    path = tmp_path / "t.csv"
    table.to_csv(path)
    assert tabscm.Table.from_csv(path) == table
    assert table.head(4).n_rows == 4


def test_discover_returns_named_edges(table):
    out = tabscm.discover(table, {"algo": "pc"})
    assert all(a in table.columns and b in table.columns for a, b in out["edges"])
    assert "cpdag" in out


def test_sample_intervene_save_load(model, tmp_path):
    a = model.sample(50, seed=7)
    assert a == model.sample(50, seed=7)
    assert a != model.sample(50, seed=8)
    iv = model.intervene({"x": 1.5}, 20, seed=3)
    assert np.all(iv.column("x") == 1.5)
    path = tmp_path / "m.json"
    model.save(path)
    again = tabscm.ScmModel.load(path)
    assert again.edges == model.edges
    assert again.sample(50, seed=7) == a


def test_upsample(model):
    rows, method = model.upsample("colour", {"red": 400, "blue": 400}, seed=1)
    assert method in ("intervention", "rejection")
    assert len(rows) > 0


def test_evaluate_report(table, model):
    report = tabscm.evaluate(table, model.sample(300, seed=5), {"c2st": False})
    assert 0.0 <= report["e_den"] <= 1.0
    assert report["c2st"] is None


def test_metric_helpers():
    assert tabscm.ks_statistic([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert math.isclose(tabscm.tv_distance([0.5, 0.5], [1.0, 0.0]), 0.5)


def test_errors_are_raised(model):
    with pytest.raises(tabscm.TabscmError):
        model.intervene({"nope": 1.0}, 5)
    with pytest.raises(tabscm.TabscmError):
        tabscm.Table.parse("a,b\n1,2,3\n")


def test_cli_usage_error():
    assert tabscm.cli(["bogus", "--quiet"]) == 2

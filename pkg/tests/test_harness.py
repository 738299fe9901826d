from __future__ import annotations

import io
import itertools
import json
import sys
from fractions import Fraction

import numpy as np
import pytest

from conftest import random_instance
from hardy_lorentz import cli
from hardy_lorentz.atomic import decompose
from hardy_lorentz.errors import ConfigError, InvalidSpec
from hardy_lorentz.experiments import EXPERIMENTS, run_experiment
from hardy_lorentz.filtration import regularity_constant
from hardy_lorentz.generate import InstanceBlock, InstanceSpec, generate
from hardy_lorentz.process import enumerate_stopping_times
from hardy_lorentz.serialize import (
    decomposition_doc,
    dumps,
    martingale_doc,
    parse_decomposition,
    parse_martingale,
    parse_stopping_time,
    parse_tree,
    stopping_time_doc,
    tree_doc,
)


def test_generate_deterministic():
    spec = InstanceSpec("dyadic", 3, (2, 2), 0.5, "uniform", 7)
    a = dumps(martingale_doc(generate(spec)[1]))
    b = dumps(martingale_doc(generate(spec)[1]))
    assert a == b


@pytest.mark.parametrize("dist", ["uniform", "gaussian", "sparse-sign"])
def test_generate_centered_and_ratio(dist):
    for seed in range(15):
        spec = InstanceSpec("random", 3, (2, 3), 0.25, dist, seed)
        tree, f = generate(spec)
        assert sum(m * v for m, v in zip(tree.leaf_masses(), f.terminal)) == 0
        assert regularity_constant(tree) <= 4
        if dist == "sparse-sign":
            assert len({abs(v) for v in f.terminal} - {0}) <= 1


def test_invalid_spec():
    with pytest.raises(InvalidSpec):
        InstanceSpec("dyadic", 0, (2, 2), 0.5, "uniform", 0)
    with pytest.raises(InvalidSpec):
        InstanceSpec("dyadic", 2, (2, 2), 0.0, "uniform", 0)
    with pytest.raises(InvalidSpec):
        InstanceSpec("hexagonal", 2, (2, 2), 0.5, "uniform", 0)


def test_spec_doc_round_trip():
    spec = InstanceSpec("ternary", 2, (3, 3), 1 / 3, "gaussian", 11)
    assert InstanceSpec.from_doc(spec.to_doc()) == spec


def test_serialize_round_trips():
    for seed in range(10):
        tree, f = random_instance(seed, depth=(1, 2))
        assert tree_doc(parse_tree(tree_doc(tree))) == tree_doc(tree)
        g = parse_martingale(json.loads(dumps(martingale_doc(f))))
        assert np.all(g.values == f.values)
        for nu in itertools.islice(enumerate_stopping_times(tree, 10**5), 20):
            assert parse_stopping_time(tree, stopping_time_doc(nu)).stop_set == nu.stop_set
        dec = decompose(f, Fraction(1, 2), "s")
        doc = json.loads(dumps(decomposition_doc(dec)))
        assert dumps(decomposition_doc(parse_decomposition(doc))) == dumps(decomposition_doc(dec))


def test_empty_instances_config_error():
    with pytest.raises(ConfigError):
        run_experiment("jn", {"instances": []})
    with pytest.raises(ConfigError):
        run_experiment("jn", {})
    with pytest.raises(ConfigError):
        run_experiment("nope", {"instances": {"count": 1}})


@pytest.mark.parametrize("name", EXPERIMENTS)
def test_experiments_small(name, tmp_path):
    cfg = {"instances": {"count": 4, "seed": 3, "kind": "dyadic", "depth": [1, 2]}}
    if name == "fractional":
        cfg["params"] = {"p1": "1/2", "q1": "1/2", "p2": "1", "q2": "1", "alpha": "1"}
    rep = run_experiment(name, cfg)
    assert rep.ok, rep.hard_failures
    assert rep.rows
    csv_path, json_path = rep.write(str(tmp_path))
    again = run_experiment(name, cfg)
    again.write(str(tmp_path / "b"))
    assert open(csv_path).read() == open(tmp_path / "b" / f"{name}.csv").read()
    assert json.load(open(json_path))["schema"] == 1


def test_duality_self_pair_exact():
    rep = run_experiment("duality", {"instances": {"count": 5, "seed": 1}, "params": {"g": "f"}})
    chain = [r for r in rep.rows if r["row_type"] == "chain"]
    assert chain and all(r["identity_exact"] for r in chain)


def _run(argv, stdin=None, monkeypatch=None, capsys=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_norm_one_step(one_step, monkeypatch, capsys):
    doc = dumps(martingale_doc(one_step))
    code, out, _ = _run(["norm", "--kind", "s", "--p", "1", "--q", "1"], doc, monkeypatch, capsys)
    assert code == 0 and float(out) == 1.0


def test_cli_decompose_residual(monkeypatch, capsys, tmp_path):
    _, f = random_instance(5)
    src = tmp_path / "f.json"
    src.write_text(dumps(martingale_doc(f)))
    dec = tmp_path / "dec.json"
    assert cli.main(["decompose", "--target", "s", "--p", "1", str(src), "--out", str(dec)]) == 0
    code, out, _ = _run(["norm", "--kind", "Lpq", "--p", "1", "--q", "1", "--residual", str(dec)], None, monkeypatch, capsys)
    assert code == 0 and float(out) == 0.0


def test_cli_fracint_identity(monkeypatch, capsys):
    _, f = random_instance(2)
    doc = dumps(martingale_doc(f))
    code, out, _ = _run(["fracint", "--alpha", "0"], doc, monkeypatch, capsys)
    assert code == 0 and out == doc


def test_cli_enumerate_and_errors(one_step, monkeypatch, capsys, tmp_path):
    doc = dumps(martingale_doc(one_step))
    code, out, _ = _run(["enumerate-stopping-times"], doc, monkeypatch, capsys)
    assert code == 0 and json.loads(out)["count"] == 5
    code, _, err = _run(["enumerate-stopping-times", "--cap", "1"], doc, monkeypatch, capsys)
    assert code == 3 and err.startswith("EnumerationCapExceeded")
    code, _, _ = _run(["norm", "--kind", "nonsense"], doc, monkeypatch, capsys)
    assert code == 2
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"instances": []}))
    code, _, err = _run(["experiment", "--name", "jn", "--config", str(cfg)], None, monkeypatch, capsys)
    assert code == 3 and err.startswith("ConfigError")


def test_cli_experiment_writes(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"instances": {"count": 3, "kind": "dyadic", "depth": 2}}))
    code, out, _ = _run(["experiment", "--name", "atomic-validate", "--config", str(cfg), "--out", str(tmp_path / "o")], None, monkeypatch, capsys)
    assert code == 0 and json.loads(out)["hard_failures"] == []
    assert (tmp_path / "o" / "atomic-validate.csv").exists()


def test_instance_block_ids():
    specs = InstanceBlock(count=3, seed=2).specs()
    assert [i for i, _ in specs] == ["i0002-00000", "i0002-00001", "i0002-00002"]

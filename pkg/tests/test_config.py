import copy
from pathlib import Path

import pytest

from qplasticity.config import ExperimentConfig, load_config
from qplasticity.errors import ConfigError

CONFIGS = sorted((Path(__file__).parent.parent / "configs").glob("*.toml"))

BASE = {
    "experiment": {"kind": "permuted", "n_tasks": 2, "seed": 1, "output_dir": "out"},
    "data": {"source": "synthetic", "classes": 4, "dim": 16, "per_class": 5},
    "model": {"kind": "qnn_su4_brickwall", "n_qubits": 4, "depth": 1, "readout": "logprob_top10"},
    "train": {"learning_rate": 0.01, "batch_size": 4, "epochs": 1},
}


def variant(**changes):
    doc = copy.deepcopy(BASE)
    for path, value in changes.items():
        table, key = path.split("__")
        if value is None:
            doc[table].pop(key)
        else:
            doc.setdefault(table, {})[key] = value
    return doc


def test_shipped_configs_validate():
    assert len(CONFIGS) >= 10
    kinds = set()
    for path in CONFIGS:
        cfg = load_config(path)
        kinds.add(cfg.experiment.kind)
        assert ExperimentConfig.from_dict(cfg.to_dict(), cfg.base_dir) == cfg
    assert kinds == {"permuted", "split_pairs", "xxz", "theory"}


def test_protocol_constants():
    by_name = {p.stem: load_config(p) for p in CONFIGS}
    mlp, qnn = by_name["permuted_mnist_mlp"].train, by_name["permuted_mnist_qnn"].train
    assert (mlp.learning_rate, mlp.batch_size, mlp.epochs) == (0.001, 128, 1)
    assert (qnn.learning_rate, qnn.batch_size, qnn.epochs) == (0.03, 128, 5)
    cifar = by_name["split_cifar100_qnn"].train
    assert (cifar.learning_rate, cifar.epochs) == (0.001, 5)
    xxz = by_name["xxz_qnn"]
    assert (xxz.train.learning_rate, xxz.train.batch_size, xxz.train.epochs) == (0.002, 64, 5)
    assert (xxz.experiment.n_tasks, xxz.data.samples_per_task, xxz.data.chain_length) == (2000, 200, 10)


def test_minimal_config_and_defaults():
    cfg = ExperimentConfig.from_dict(BASE)
    assert cfg.metrics.probe_size == 64
    assert cfg.train.optimizer_reset == "never"
    assert not cfg.binary


@pytest.mark.parametrize("doc,match", [
    (variant(model__colour="red"), "unknown key"),
    ({**BASE, "extras": {}}, "unknown table"),
    (variant(experiment__kind=None), "missing key"),
    ({k: v for k, v in BASE.items() if k != "experiment"}, "experiment"),
    (variant(train__batch_size="8"), "integer"),
    (variant(train__batch_size=True), "integer"),
    (variant(train__learning_rate="fast"), "number"),
    (variant(data__l2_normalize=1), "boolean"),
    (variant(model__hidden=16), "list"),
    (variant(experiment__kind="online"), "experiment.kind"),
    (variant(model__kind="cnn"), "model.kind"),
    (variant(train__optimizer_reset="sometimes"), "optimizer_reset"),
    (variant(train__learning_rate=0.0), "learning_rate"),
    (variant(experiment__n_tasks=0), "n_tasks"),
    (variant(model__readout="z_sigmoid"), "multi-class"),
    (variant(model__n_qubits=3, data__dim=8), "4 qubits"),
    (variant(data__dim=32), "amplitude budget"),
    (variant(model__readout_qubit=4), "readout_qubit"),
    (variant(experiment__kind="xxz"), "xxz"),
])
def test_rejections(doc, match):
    with pytest.raises(ConfigError, match=match):
        ExperimentConfig.from_dict(doc)


def test_binary_readout_rule():
    doc = variant(experiment__kind="split_pairs")
    with pytest.raises(ConfigError, match="binary"):
        ExperimentConfig.from_dict(doc)
    doc["model"]["readout"] = "z_sigmoid"
    assert ExperimentConfig.from_dict(doc).binary


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[experiment\nkind = 1")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_paths_resolve_against_config_file(tmp_path):
    p = tmp_path / "sub" / "c.toml"
    p.parent.mkdir()
    p.write_text('[experiment]\nkind = "theory"\noutput_dir = "../runs/x"\n')
    cfg = load_config(p)
    assert cfg.output_dir == p.parent / "../runs/x"
    assert cfg.with_output_dir(tmp_path / "o").output_dir == (tmp_path / "o").resolve()

import numpy as np
import pytest

from simplexec.errors import NonFiniteError
from simplexec.harness.training import TrainConfig, build_items, parse_mode, train, training_data
from simplexec.simplify import ALGORITHMS, Algorithm
from simplexec.synthgen import density_spec, generate_dataset

SMALL = dict(train_count=6, backbone_len=20, latent_dim=8)


def test_mode_parsing():
    assert parse_mode("parallel") == ALGORITHMS
    assert parse_mode("isolated:tips") == (Algorithm.TIPS,)
    for bad in ("isolated", "isolated:", "serial", "isolated:cycles"):
        with pytest.raises(ValueError):
            parse_mode(bad)


@pytest.mark.parametrize("field, value", [("val_fraction", 0.0), ("val_fraction", 1.0), ("patience", 0),
                                          ("train_count", 1), ("feature_range", (0.5, 0.2))])
def test_config_validation(field, value):
    with pytest.raises(ValueError):
        TrainConfig(**{field: value}).validate()


def test_split_and_round_robin():
    cfg = TrainConfig(mode="parallel", **SMALL)
    train_items, val_items = training_data(cfg)
    assert len(train_items) == 3 * 5 and len(val_items) == 3 * 1
    assert [t.algorithm for _, t in train_items[:6]] == list(ALGORITHMS) * 2
    assert train_items[0][0] is train_items[2][0]
    features = np.concatenate([g.feature_array for g, _ in train_items])
    assert 0.0 < features.min() and features.max() <= 1.0 and features.std() > 0.1


def test_one_epoch_with_unit_patience():
    params, log = train(TrainConfig(mode="isolated:transitive", patience=1, max_epochs=1, **SMALL))
    assert len(log.epochs) == 1 and log.best_epoch == 1
    assert "max_epochs" in log.stop_reason
    assert np.isfinite(log.epochs[0].val_loss)


def test_same_seed_same_parameters():
    cfg = TrainConfig(mode="parallel", max_epochs=2, **SMALL)
    a, log_a = train(cfg)
    b, log_b = train(cfg)
    assert a.values.tobytes() == b.values.tobytes()
    assert log_a.to_dict(timings=False) == log_b.to_dict(timings=False)


def test_isolated_training_leaves_other_heads_alone():
    from simplexec.model import ModelParams
    from simplexec.harness.training import ROLE_INIT
    from simplexec.synthgen import derive_seed
    cfg = TrainConfig(mode="isolated:tips", max_epochs=1, **SMALL)
    initial = ModelParams.initialize(cfg.latent_dim, derive_seed(cfg.seed, ROLE_INIT))
    trained, _ = train(cfg)
    for name in initial.names():
        same = np.array_equal(initial[name].data, trained[name].data)
        assert same == name.startswith(("transitive.", "bubbles.")), name


def test_early_stopping_returns_best_epoch():
    cfg = TrainConfig(mode="isolated:bubbles", patience=2, max_epochs=6, learning_rate=0.05, **SMALL)
    params, log = train(cfg)
    best = min(log.epochs, key=lambda e: e.val_loss)
    assert log.best_epoch == best.epoch
    if "no validation improvement" in log.stop_reason:
        assert len(log.epochs) == log.best_epoch + cfg.patience


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_reports_context():
    cfg = TrainConfig(mode="isolated:tips", max_epochs=1, learning_rate=1e300, **SMALL)
    with pytest.raises(NonFiniteError, match="epoch 1"):
        train(cfg)

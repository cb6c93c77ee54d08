"""Teacher-forced training with early stopping."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import NonFiniteError
from ..graph import AssemblyGraph
from ..model import LATENT_DIM, ModelParams, step_teacher_forced
from ..ndiff import AdamState, GradTape, adam_step
from ..simplify import ALGORITHMS, Algorithm
from ..synthgen import density_spec, derive_seed, generate_dataset
from ..traces import ExecutionTrace, build_trace

log = logging.getLogger(__name__)

# substream keys for derive_seed(seed, role, ...)
ROLE_TRAIN, ROLE_TEST, ROLE_INIT, ROLE_SHUFFLE = 1, 2, 3, 4


def parse_mode(mode: str) -> tuple[Algorithm, ...]:
    """``"parallel"`` or ``"isolated:<algorithm>"`` -> algorithms trained."""
    if mode == "parallel":
        return ALGORITHMS
    kind, _, name = mode.partition(":")
    if kind != "isolated" or not name:
        raise ValueError(f"mode must be 'parallel' or 'isolated:<algorithm>', got {mode!r}")
    return (Algorithm.parse(name),)


@dataclass(frozen=True)
class TrainConfig:
    """Training run settings.

    ``feature_range`` sets the edge features of the training graphs.  It
    defaults to ``(0, 1]``, the range of normalized overlap lengths in GFA
    input, so the executor does not depend on the constant 1.0 that the
    synthetic test sets use.
    """

    mode: str = "parallel"
    learning_rate: float = 1e-5
    patience: int = 10
    max_epochs: int = 500
    train_count: int = 100
    val_fraction: float = 0.2
    seed: int = 0
    latent_dim: int = LATENT_DIM
    backbone_len: int = 50
    feature_range: tuple[float, float] = (0.0, 1.0)

    def validate(self) -> None:
        parse_mode(self.mode)
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError(f"val_fraction must lie in (0, 1), got {self.val_fraction}")
        if self.patience < 1 or self.max_epochs < 1:
            raise ValueError("patience and max_epochs must be >= 1")
        if self.train_count < 2:
            raise ValueError("train_count must be >= 2 so both splits are non-empty")
        lo, hi = self.feature_range
        if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
            raise ValueError(f"feature_range must be finite with lo <= hi, got {self.feature_range}")

    @property
    def algorithms(self) -> tuple[Algorithm, ...]:
        return parse_mode(self.mode)

    @property
    def dataset_kind(self) -> str:
        return "parallel" if self.mode == "parallel" else self.algorithms[0].value

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_accuracy: float
    seconds: float


@dataclass
class TrainLog:
    config: dict
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_val_loss: float = float("inf")
    stop_reason: str = ""

    def to_dict(self, timings: bool = True) -> dict:
        """Plain-data form; ``timings=False`` drops wall-clock fields so reruns compare equal."""
        epochs = [asdict(e) for e in self.epochs]
        if not timings:
            for e in epochs:
                e.pop("seconds")
        return {"config": self.config, "epochs": epochs,
                "best_epoch": self.best_epoch, "best_val_loss": self.best_val_loss,
                "stop_reason": self.stop_reason}


Item = tuple[AssemblyGraph, ExecutionTrace]


def build_items(graphs, algorithms) -> list[Item]:
    """(graph, trace) pairs; with several algorithms they alternate round-robin per graph."""
    return [(g, build_trace(g, truth, alg, graph_ref=i))
            for i, (g, truth) in enumerate(graphs) for alg in algorithms]


def training_data(config: TrainConfig) -> tuple[list[Item], list[Item]]:
    spec = density_spec(config.dataset_kind, config.backbone_len, 1, seed=derive_seed(config.seed, ROLE_TRAIN),
                        feature_range=tuple(config.feature_range))
    graphs = generate_dataset(spec, config.train_count)
    n_val = max(1, round(config.train_count * config.val_fraction))
    train = build_items(graphs[:-n_val], config.algorithms)
    val = build_items(graphs[-n_val:], config.algorithms)
    return train, val


def evaluate_items(params: ModelParams, items: list[Item]) -> tuple[float, float]:
    """Mean teacher-forced step loss and accuracy (steps t >= 2) over the items."""
    tape = GradTape(enabled=False)
    losses, correct, total = [], 0, 0
    for g, trace in items:
        h = None
        for t in range(1, trace.length + 1):
            out = step_teacher_forced(params, trace.algorithm, g, trace, t, h, tape)
            losses.append(out.loss.data[0, 0])
            if t >= 2:
                correct += int((out.prediction == trace.reached[t - 1]).sum())
                total += g.node_count
            h = out.h.data
    return float(np.mean(losses)), (correct / total if total else 1.0)


def train_epoch(params: ModelParams, adam: AdamState, items: list[Item], epoch: int) -> float:
    """One Adam update per teacher-forced step; the latent state is carried but not backpropagated."""
    losses = []
    for g, trace in items:
        h = None
        for t in range(1, trace.length + 1):
            params.zero_grad()
            tape = GradTape()
            try:
                out = step_teacher_forced(params, trace.algorithm, g, trace, t, h, tape)
                tape.backward(out.loss)
                adam_step(params.values, params.grads, adam)
            except NonFiniteError as exc:
                raise NonFiniteError(
                    f"training diverged at epoch {epoch}, graph {trace.graph_ref} "
                    f"({trace.algorithm.value}), step {t}: {exc}") from exc
            losses.append(out.loss.data[0, 0])
            h = out.h.data
    return float(np.mean(losses))


def train(config: TrainConfig, data: tuple[list[Item], list[Item]] | None = None,
          progress=None) -> tuple[ModelParams, TrainLog]:
    """Train until validation loss stops improving for ``patience`` epochs.

    Returns the parameters from the best validation epoch.
    """
    config.validate()
    train_items, val_items = data if data is not None else training_data(config)
    params = ModelParams.initialize(config.latent_dim, derive_seed(config.seed, ROLE_INIT))
    adam = AdamState(learning_rate=config.learning_rate)
    record = TrainLog(config=config.to_dict())
    best = params.copy()
    waited = 0
    for epoch in range(1, config.max_epochs + 1):
        start = time.perf_counter()
        order = np.random.Generator(np.random.PCG64(derive_seed(config.seed, ROLE_SHUFFLE, epoch)))
        # shuffle whole graphs so round-robin groups stay together
        per_graph = len(config.algorithms)
        groups = [train_items[i:i + per_graph] for i in range(0, len(train_items), per_graph)]
        shuffled = [item for j in order.permutation(len(groups)) for item in groups[j]]
        train_loss = train_epoch(params, adam, shuffled, epoch)
        val_loss, val_acc = evaluate_items(params, val_items)
        record.epochs.append(EpochRecord(epoch, train_loss, val_loss, val_acc, time.perf_counter() - start))
        if progress is not None:
            progress(record.epochs[-1])
        log.info("epoch %d train %.5f val %.5f acc %.4f", epoch, train_loss, val_loss, val_acc)
        if val_loss < record.best_val_loss:
            record.best_val_loss, record.best_epoch = val_loss, epoch
            best = params.copy()
            waited = 0
        else:
            waited += 1
            if waited >= config.patience:
                record.stop_reason = f"no validation improvement for {config.patience} epochs"
                break
    else:
        record.stop_reason = f"reached max_epochs={config.max_epochs}"
    return best, record

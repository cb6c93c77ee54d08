"""Encode-process-decode executor with a shared max-aggregation MPNN processor.

Per step ``t`` and algorithm ``A``::

    z_i  = f_A(x_i, h_i_prev)                        linear on [x_i, h_i_prev]
    m_ij = M(z_i, z_j, E(e_ij))                      linear on the concatenation
    a_j  = max over incoming m_ij                    zeros if nothing arrives
    h_j  = GRU(U a_j, h_j_prev)                      U: bias-free linear K -> K
    y_i  = g_A(z_i, h_i)                             linear on [z_i, h_i]
    tau  = sigmoid(T_A(mean_i h_i))

Messages flow along edge direction only.  Encoders, decoders and
termination heads exist once per algorithm; ``E``, ``M``, ``U`` and the GRU
form the processor and exist exactly once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .graph import AssemblyGraph
from .ndiff import GRUParams, GradTape, Segments, Tensor, gru_cell
from .simplify import ALGORITHMS, Algorithm
from .traces import NODE_FEATURES, ExecutionTrace, StepState, teacher_inputs

LATENT_DIM = 32
EDGE_FEATURES = 1
THRESHOLD = 0.5

PROCESSOR_PREFIX = "processor."
GRU_NAMES = ("w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_n", "u_n", "b_n")


def parameter_layout(latent_dim: int = LATENT_DIM) -> list[tuple[str, tuple[int, int], int]]:
    """(name, shape, fan_in) for every parameter, in storage order."""
    k = latent_dim
    layout = [
        ("processor.edge_encoder.weight", (EDGE_FEATURES, k), EDGE_FEATURES),
        ("processor.edge_encoder.bias", (1, k), EDGE_FEATURES),
        ("processor.message.weight", (3 * k, k), 3 * k),
        ("processor.message.bias", (1, k), 3 * k),
        ("processor.update.weight", (k, k), k),
    ]
    for name in GRU_NAMES:
        layout.append((f"processor.gru.{name}", (1, k) if name.startswith("b") else (k, k), k))
    for alg in ALGORITHMS:
        a = alg.value
        layout += [
            (f"{a}.encoder.weight", (NODE_FEATURES + k, k), NODE_FEATURES + k),
            (f"{a}.encoder.bias", (1, k), NODE_FEATURES + k),
            (f"{a}.decoder.weight", (2 * k, 1), 2 * k),
            (f"{a}.decoder.bias", (1, 1), 2 * k),
            (f"{a}.termination.weight", (k, 1), k),
            (f"{a}.termination.bias", (1, 1), k),
        ]
    return layout


class ModelParams:
    """All parameters in one flat float64 buffer, exposed as named tensor views.

    The flat layout lets Adam update everything in a handful of vector ops;
    per-parameter tensors are views, so the processor block is physically
    one object shared by every algorithm.
    """

    def __init__(self, latent_dim: int = LATENT_DIM, values: np.ndarray | None = None):
        self.latent_dim = latent_dim
        self.layout = parameter_layout(latent_dim)
        size = sum(r * c for _, (r, c), _ in self.layout)
        if values is None:
            values = np.zeros(size)
        if values.shape != (size,):
            raise ShapeError(f"expected {size} parameter values for K={latent_dim}, got {values.shape}")
        self.values = values
        self.grads = np.zeros(size)
        self.tensors: dict[str, Tensor] = {}
        offset = 0
        for name, (r, c), _ in self.layout:
            view = self.values[offset:offset + r * c].reshape(r, c)
            grad = self.grads[offset:offset + r * c].reshape(r, c)
            self.tensors[name] = Tensor(view, requires_grad=True, name=name, grad=grad)
            offset += r * c
        self.gru = GRUParams(*(self.tensors[f"processor.gru.{n}"] for n in GRU_NAMES))

    @classmethod
    def initialize(cls, latent_dim: int = LATENT_DIM, seed: int = 0) -> ModelParams:
        """Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], drawn in layout order."""
        params = cls(latent_dim)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
        for name, shape, fan_in in params.layout:
            bound = 1.0 / np.sqrt(fan_in)
            params.tensors[name].data[...] = rng.uniform(-bound, bound, size=shape)
        return params

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def zero_grad(self) -> None:
        self.grads[...] = 0.0

    def copy(self) -> ModelParams:
        return ModelParams(self.latent_dim, self.values.copy())

    def names(self, algorithm: Algorithm | None = None) -> list[str]:
        """Parameter names; restricted to one algorithm's view if given."""
        if algorithm is None:
            return [n for n, _, _ in self.layout]
        prefix = Algorithm.parse(algorithm).value + "."
        return [n for n, _, _ in self.layout if n.startswith((PROCESSOR_PREFIX, prefix))]

    def algorithm_view(self, algorithm: Algorithm | str) -> dict[str, Tensor]:
        return {n: self.tensors[n] for n in self.names(Algorithm.parse(algorithm))}

    def processor_bytes(self, algorithm: Algorithm | str) -> bytes:
        """Serialized processor block as reached through one algorithm's view."""
        view = self.algorithm_view(algorithm)
        return b"".join(view[n].data.tobytes() for n in sorted(view) if n.startswith(PROCESSOR_PREFIX))


# -- the four stages --------------------------------------------------------------

def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def encode(tape: GradTape, params: ModelParams, algorithm, x, h_prev) -> Tensor:
    a = Algorithm.parse(algorithm).value
    x, h_prev = _as_tensor(x), _as_tensor(h_prev)
    if x.shape[1] != NODE_FEATURES or h_prev.shape != (x.shape[0], params.latent_dim):
        raise ShapeError(f"encode: inputs {x.shape}, latent {h_prev.shape}, K={params.latent_dim}")
    return tape.linear(tape.concat_cols([x, h_prev]), params[f"{a}.encoder.weight"], params[f"{a}.encoder.bias"])


def _edge_segments(graph: AssemblyGraph) -> tuple[Segments, Segments]:
    # cached on the graph instance; graphs are immutable
    cached = graph.__dict__.get("_edge_segments")
    if cached is None:
        cached = (Segments(graph.src_array), Segments(graph.dst_array))
        graph.__dict__["_edge_segments"] = cached
    return cached


def process(tape: GradTape, params: ModelParams, z: Tensor, graph: AssemblyGraph, h_prev) -> Tensor:
    h_prev = _as_tensor(h_prev)
    if z.shape != (graph.node_count, params.latent_dim) or h_prev.shape != z.shape:
        raise ShapeError(f"process: z {z.shape}, h {h_prev.shape}, graph with {graph.node_count} nodes")
    edges = tape.linear(Tensor(graph.feature_array), params["processor.edge_encoder.weight"],
                        params["processor.edge_encoder.bias"])
    src, dst = _edge_segments(graph)
    pair = tape.concat_cols([tape.gather_rows(z, src), tape.gather_rows(z, dst), edges])
    messages = tape.linear(pair, params["processor.message.weight"], params["processor.message.bias"])
    aggregated = tape.segment_max(messages, dst, graph.node_count)
    return gru_cell(tape, tape.matmul(aggregated, params["processor.update.weight"]), h_prev, params.gru)


def decode(tape: GradTape, params: ModelParams, algorithm, z: Tensor, h: Tensor) -> Tensor:
    a = Algorithm.parse(algorithm).value
    return tape.linear(tape.concat_cols([z, h]), params[f"{a}.decoder.weight"], params[f"{a}.decoder.bias"])


def terminate(tape: GradTape, params: ModelParams, algorithm, h: Tensor) -> Tensor:
    """Termination logit; ``tau = sigmoid(logit)``."""
    if h.shape[0] == 0:
        raise ShapeError("termination needs at least one node")
    a = Algorithm.parse(algorithm).value
    return tape.linear(tape.mean_rows(h), params[f"{a}.termination.weight"], params[f"{a}.termination.bias"])


@dataclass
class StepOutput:
    logits: Tensor
    tau_logit: Tensor
    h: Tensor
    loss: Tensor | None = None

    @property
    def tau(self) -> float:
        return float(1.0 / (1.0 + np.exp(-self.tau_logit.data[0, 0])))

    @property
    def prediction(self) -> np.ndarray:
        return (self.logits.data[:, 0] >= 0.0).astype(np.uint8)


def forward_step(tape: GradTape, params: ModelParams, algorithm, graph: AssemblyGraph, x, h_prev) -> StepOutput:
    z = encode(tape, params, algorithm, x, h_prev)
    h = process(tape, params, z, graph, h_prev)
    return StepOutput(decode(tape, params, algorithm, z, h), terminate(tape, params, algorithm, h), h)


def step_teacher_forced(params: ModelParams, algorithm, graph: AssemblyGraph, trace: ExecutionTrace, t: int,
                        h_prev=None, tape: GradTape | None = None) -> StepOutput:
    """One supervised step: node BCE against step ``t`` plus termination BCE, equally weighted."""
    if tape is None:
        tape = GradTape()
    if h_prev is None:
        h_prev = np.zeros((graph.node_count, params.latent_dim))
    out = forward_step(tape, params, algorithm, graph, teacher_inputs(trace, t), h_prev)
    node_loss = tape.bce_loss(out.logits, trace.reached[t - 1])
    term_loss = tape.bce_loss(out.tau_logit, [[trace.continue_flags[t - 1]]])
    out.loss = tape.add(node_loss, term_loss)
    return out


def rollout(params: ModelParams, algorithm, graph: AssemblyGraph, sources: np.ndarray,
            max_steps: int | None = None) -> list[StepState]:
    """Free-running execution on the model's own thresholded predictions."""
    if max_steps is None:
        max_steps = graph.node_count + 1
    tape = GradTape(enabled=False)
    sources = np.asarray(sources, dtype=np.float64)
    prev = sources
    h = np.zeros((graph.node_count, params.latent_dim))
    steps = []
    for _ in range(max_steps):
        out = forward_step(tape, params, algorithm, graph, np.stack([prev, sources], axis=1), h)
        keep_going = out.tau >= THRESHOLD
        pred = out.prediction
        steps.append(StepState(pred, int(keep_going)))
        if not keep_going:
            break
        prev, h = pred.astype(np.float64), out.h.data
    return steps

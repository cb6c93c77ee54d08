"""Seeded synthetic assembly graphs: a backbone path with planted structures.

Every graph is a pure function of its :class:`GenSpec`.  Randomness comes
from numpy's PCG64 bit generator seeded through ``SeedSequence``; dataset
members use the substream keyed by ``(spec.seed, index)``, so any single
graph can be regenerated on its own and the output does not depend on the
platform.

Node numbering: backbone nodes are ``0 .. n-1`` in path order, and extra
nodes (tip chains, bubble detours, external branches) are appended in the
order their structures sit along the backbone.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InfeasibleSpecError
from .graph import AssemblyGraph, GroundTruth, build_graph
from .simplify import DEFAULT_MAX_PATH_LEN, DEFAULT_MAX_TIP_LEN, Algorithm

STRUCTURE_DENSITY = 10  # backbone nodes per planted structure
FEATURE_STREAM = 1  # substream key for edge features, kept apart from the structure draws


@dataclass(frozen=True)
class GenSpec:
    """Generator parameters.

    Structure counts are per ``backbone_len`` block and are multiplied by
    ``scale``, so a 20x graph carries 20 times as many structures.

    Edge features are drawn uniformly from ``(lo, hi]`` of ``feature_range``
    (constant when ``lo == hi``).  They come from their own random stream, so
    changing the range never changes the graph's structure.
    """

    backbone_len: int = 50
    scale: int = 1
    n_transitive: int = 0
    n_tips: int = 0
    n_bubbles: int = 0
    tip_len_range: tuple[int, int] = (1, 4)
    bubble_len_range: tuple[int, int] = (2, 5)
    external_edge_prob: float = 0.25
    reverse_tip_prob: float = 0.25
    max_tip_len: int = DEFAULT_MAX_TIP_LEN
    max_path_len: int = DEFAULT_MAX_PATH_LEN
    feature_range: tuple[float, float] = (1.0, 1.0)
    seed: int = 0

    @property
    def node_budget(self) -> int:
        return self.backbone_len * self.scale

    def validate(self) -> None:
        if self.scale < 1 or self.node_budget < 2:
            raise InfeasibleSpecError(
                f"backbone_len x scale must be >= 2 (got {self.backbone_len} x {self.scale})")
        if min(self.n_transitive, self.n_tips, self.n_bubbles) < 0:
            raise InfeasibleSpecError("structure counts must be non-negative")
        lo, hi = self.tip_len_range
        if not 1 <= lo <= hi <= self.max_tip_len:
            raise InfeasibleSpecError(f"tip_len_range {self.tip_len_range} outside [1, {self.max_tip_len}]")
        lo, hi = self.bubble_len_range
        if not 2 <= lo <= hi <= self.max_path_len:
            raise InfeasibleSpecError(
                f"bubble_len_range {self.bubble_len_range} outside [2, {self.max_path_len}]")
        if not 0.0 <= self.external_edge_prob <= 1.0 or not 0.0 <= self.reverse_tip_prob <= 1.0:
            raise InfeasibleSpecError("probabilities must lie in [0, 1]")
        lo, hi = self.feature_range
        if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
            raise InfeasibleSpecError(f"feature_range must be finite with lo <= hi, got {self.feature_range}")
        if self.seed < 0:
            raise InfeasibleSpecError(f"seed must be non-negative, got {self.seed}")


def density_spec(kind: str | Algorithm, backbone_len: int = 50, scale: int = 1, seed: int = 0,
                 **overrides) -> GenSpec:
    """Spec with one structure per 10 backbone nodes.

    ``kind`` is an algorithm name (only that structure type is planted) or
    ``"parallel"`` (the budget is split evenly across all three types, with
    remainders going to transitive edges first, then tips).
    """
    total = max(1, backbone_len // STRUCTURE_DENSITY)
    if str(kind) == "parallel":
        base, rest = divmod(total, 3)
        counts = [base + (i < rest) for i in range(3)]
    else:
        algorithm = Algorithm.parse(kind)
        counts = [total if a is algorithm else 0 for a in Algorithm]
    return GenSpec(backbone_len=backbone_len, scale=scale, n_transitive=counts[0],
                   n_tips=counts[1], n_bubbles=counts[2], seed=seed, **overrides)


def derive_seed(*key: int) -> int:
    """A 63-bit seed for the substream identified by ``key``."""
    state = np.random.SeedSequence(list(key)).generate_state(2, np.uint32)
    return int((int(state[0]) << 32 | int(state[1])) >> 1)


def generate(spec: GenSpec) -> tuple[AssemblyGraph, GroundTruth]:
    spec.validate()
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed)))
    n = spec.node_budget

    # (kind, backbone nodes occupied, size parameters)
    structures = []
    for _ in range(spec.n_transitive * spec.scale):
        structures.append(("transitive", 3, None))
    for _ in range(spec.n_tips * spec.scale):
        length = int(rng.integers(spec.tip_len_range[0], spec.tip_len_range[1] + 1))
        structures.append(("tip", 1, (length, bool(rng.random() < spec.reverse_tip_prob))))
    for _ in range(spec.n_bubbles * spec.scale):
        lo, hi = spec.bubble_len_range
        detour = int(rng.integers(lo, hi + 1))
        # the backbone side is at least as long, so it wins the retention rule
        span = int(rng.integers(detour, hi + 1))
        external = None
        if rng.random() < spec.external_edge_prob:
            external = int(rng.integers(0, detour))
        structures.append(("bubble", span + 2, (detour, span, external)))

    # both backbone ends stay free so the designated source and sink are plain
    available = n - 2
    required = sum(w for _, w, _ in structures)
    if required > available:
        raise InfeasibleSpecError(
            f"structures need {required} backbone anchor nodes but only {available} are available")
    order = rng.permutation(len(structures))
    free = available - required
    slots = np.sort(rng.choice(free + len(structures), size=len(structures), replace=False))
    placed = []
    offset = 1
    for j, (slot, idx) in enumerate(zip(slots, order)):
        kind, width, params = structures[idx]
        placed.append((offset + int(slot) - j, kind, params))
        offset += width

    edges = [(i, i + 1) for i in range(n - 1)]
    transitive, tip_nodes, tip_edges, bubble_edges = set(), set(), set(), set()
    next_id = n
    for start, kind, params in sorted(placed, key=lambda p: p[0]):
        if kind == "transitive":
            edges.append((start, start + 2))
            transitive.add((start, start + 2))
        elif kind == "tip":
            length, reverse = params
            chain = list(range(next_id, next_id + length))
            next_id += length
            if reverse:
                route = list(zip(chain, chain[1:])) + [(chain[-1], start)]
            else:
                route = [(start, chain[0])] + list(zip(chain, chain[1:]))
            edges.extend(route)
            tip_nodes.update(chain)
            tip_edges.update(route)
        else:
            detour, span, external = params
            end = start + span + 1
            inner = list(range(next_id, next_id + detour))
            next_id += detour
            route = list(zip([start, *inner], [*inner, end]))
            edges.extend(route)
            if external is None:
                bubble_edges.update(route)
            else:
                # a branch too long to count as a tip keeps the anchor externally connected
                anchor = inner[external]
                branch = list(range(next_id, next_id + spec.max_tip_len + 1))
                next_id += len(branch)
                edges.extend(zip([anchor, *branch], branch))
                bubble_edges.update(route[: external + 1])

    truth = GroundTruth(
        transitive_edges=frozenset(transitive),
        tip_nodes=frozenset(tip_nodes),
        tip_edges=frozenset(tip_edges),
        bubble_removable_edges=frozenset(bubble_edges),
        backbone_nodes=tuple(range(n)),
    )
    return build_graph(next_id, _with_features(spec, edges), truth), truth


def _with_features(spec: GenSpec, edges: list[tuple[int, int]]) -> list[tuple[int, int, float]]:
    lo, hi = spec.feature_range
    edges = sorted(edges)
    if lo == hi:
        return [(s, d, float(lo)) for s, d in edges]
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([spec.seed, FEATURE_STREAM])))
    values = hi - (hi - lo) * rng.random(len(edges))
    return [(s, d, float(f)) for (s, d), f in zip(edges, values)]


def generate_dataset(spec: GenSpec, count: int) -> list[tuple[AssemblyGraph, GroundTruth]]:
    if count < 1:
        raise InfeasibleSpecError(f"count must be >= 1, got {count}")
    return [generate(replace(spec, seed=derive_seed(spec.seed, i))) for i in range(count)]

"""Reading and writing a GFA v1 subset (segments and links).

Each segment becomes a node in forward orientation, numbered in ``S``-line
order.  A link endpoint with ``-`` orientation refers to a separate node
for the reverse-complement variant, named ``<segment>-``; such variants are
appended after all forward nodes, ordered by their segment's position.  The
edge feature is the link's overlap length divided by the largest overlap in
the file (0 when no link declares an overlap).
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import FormatError
from ..graph import AssemblyGraph, build_graph
from .fileio import atomic_write_text

_CIGAR_OP = re.compile(r"(\d+)([MIDNSHPX=])")
# operations that consume the overlapping sequence
_OVERLAP_OPS = frozenset("M=XI")
_KNOWN = frozenset("HSL#")


def overlap_length(cigar: str) -> int:
    """Overlap implied by a CIGAR string; ``*`` or empty means 0."""
    if cigar in ("", "*"):
        return 0
    ops = _CIGAR_OP.findall(cigar)
    if "".join(n + op for n, op in ops) != cigar:
        raise ValueError(f"malformed CIGAR {cigar!r}")
    return sum(int(n) for n, op in ops if op in _OVERLAP_OPS)


@dataclass(frozen=True)
class GfaGraph:
    graph: AssemblyGraph
    names: tuple[str, ...]
    lengths: tuple[int, ...]
    overlaps: tuple[int, ...]  # aligned with graph.edges
    warnings: Counter = field(default_factory=Counter, compare=False)

    @property
    def warning_count(self) -> int:
        return sum(self.warnings.values())


def _fail(lineno: int, message: str):
    raise FormatError(f"line {lineno}: {message}")


def parse_gfa(text: str, source: str = "<string>") -> GfaGraph:
    segments: dict[str, int] = {}
    lengths: list[int] = []
    links = []
    warnings: Counter = Counter()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        fields = line.split("\t")
        kind = fields[0]
        if kind not in _KNOWN:
            warnings[f"ignored {kind!r} line"] += 1
            continue
        if kind == "S":
            if len(fields) < 3 or not fields[1]:
                _fail(lineno, f"{source}: S line needs a name and a sequence")
            name, seq = fields[1], fields[2]
            if name in segments:
                _fail(lineno, f"{source}: duplicate segment {name!r}")
            length = 0 if seq == "*" else len(seq)
            for tag in fields[3:]:
                if tag.startswith("LN:i:"):
                    try:
                        length = int(tag[5:])
                    except ValueError:
                        _fail(lineno, f"{source}: bad LN tag {tag!r}")
            segments[name] = len(segments)
            lengths.append(length)
        elif kind == "L":
            if len(fields) < 5:
                _fail(lineno, f"{source}: L line needs from, orientation, to, orientation")
            a, oa, b, ob = fields[1:5]
            if oa not in "+-" or ob not in "+-" or len(oa) != 1 or len(ob) != 1:
                _fail(lineno, f"{source}: orientation must be '+' or '-'")
            try:
                overlap = overlap_length(fields[5] if len(fields) > 5 else "*")
            except ValueError as exc:
                _fail(lineno, f"{source}: {exc}")
            links.append((lineno, a, oa, b, ob, overlap))

    reverse: set[str] = set()
    for lineno, a, oa, b, ob, _ in links:
        for name, orient in ((a, oa), (b, ob)):
            if name not in segments:
                _fail(lineno, f"{source}: link references unknown segment {name!r}")
            if orient == "-":
                reverse.add(name)
    names = list(segments)
    node_lengths = list(lengths)
    ids = {(n, "+"): i for i, n in enumerate(names)}
    for name in sorted(reverse, key=segments.__getitem__):
        ids[(name, "-")] = len(names)
        names.append(name + "-")
        node_lengths.append(lengths[segments[name]])

    edges: dict[tuple[int, int], int] = {}
    for lineno, a, oa, b, ob, overlap in links:
        pair = (ids[(a, oa)], ids[(b, ob)])
        if pair[0] == pair[1]:
            warnings["self-loop link skipped"] += 1
        elif pair in edges:
            warnings["duplicate link skipped"] += 1
        else:
            edges[pair] = overlap
    top = max(edges.values(), default=0)
    graph = build_graph(len(names), [(s, d, (o / top if top else 0.0)) for (s, d), o in edges.items()])
    overlap_of = {pair: o for pair, o in edges.items()}
    return GfaGraph(graph, tuple(names), tuple(node_lengths),
                    tuple(overlap_of[e.pair] for e in graph.edges), warnings)


def read_gfa(path) -> GfaGraph:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    return parse_gfa(text, source=str(path))


def format_gfa(graph: AssemblyGraph, names=None, lengths=None, overlaps=None) -> str:
    """GFA text for ``graph``.

    Nodes named ``<segment>-`` whose ``<segment>`` also exists are written as
    the reverse orientation of that segment, so parsed graphs round-trip.
    Without explicit overlaps, the edge feature times 100 is used.
    """
    names = list(names) if names is not None else [str(v) for v in range(graph.node_count)]
    lengths = list(lengths) if lengths is not None else [0] * graph.node_count
    if overlaps is None:
        overlaps = [round(e.feature * 100) for e in graph.edges]
    present = set(names)

    def endpoint(v):
        name = names[v]
        if name.endswith("-") and name[:-1] in present:
            return name[:-1], "-"
        return name, "+"

    lines = ["H\tVN:Z:1.0"]
    for v, name in enumerate(names):
        if not (name.endswith("-") and name[:-1] in present):
            lines.append(f"S\t{name}\t*\tLN:i:{lengths[v]}")
    for e, overlap in zip(graph.edges, overlaps):
        (a, oa), (b, ob) = endpoint(e.src), endpoint(e.dst)
        lines.append(f"L\t{a}\t{oa}\t{b}\t{ob}\t{overlap}M")
    return "\n".join(lines) + "\n"


def write_gfa(path, graph: AssemblyGraph, names=None, lengths=None, overlaps=None) -> Path:
    return atomic_write_text(path, format_gfa(graph, names, lengths, overlaps))

"""Write the synthetic GFA fixtures used by the tests.

small.gfa has 60 nodes; large.gfa has about 3000.  Both are planted with
all three structure types and use only forward-oriented tips, so their
single in-degree-0 node is the backbone head.
"""

import argparse
from pathlib import Path

from simplexec.harness.gfa import write_gfa
from simplexec.synthgen import GenSpec, derive_seed, generate

FIXTURES = {
    # extra nodes from tips and bubble detours bring the totals to 60 and ~3000
    "small.gfa": dict(backbone_len=53, n_transitive=2, n_tips=1, n_bubbles=1, tip_len_range=(4, 4),
                      bubble_len_range=(3, 3), external_edge_prob=0.0),
    "large.gfa": dict(backbone_len=2550, n_transitive=80, n_tips=60, n_bubbles=50),
}


def build(name: str, seed: int):
    spec = GenSpec(reverse_tip_prob=0.0, seed=derive_seed(seed, len(name)), **FIXTURES[name])
    g, truth = generate(spec)
    return g.with_annotations(None), truth


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default=str(Path(__file__).resolve().parents[1] / "tests" / "fixtures"))
    parser.add_argument("--seed", type=int, default=2024)
    args = parser.parse_args(argv)
    for name in FIXTURES:
        g, _ = build(name, args.seed)
        names = [f"read{v}" for v in range(g.node_count)]
        lengths = [1000 + (v * 37) % 500 for v in range(g.node_count)]
        overlaps = [200 + (e.src * 13 + e.dst * 7) % 300 for e in g.edges]
        path = write_gfa(Path(args.out_dir) / name, g, names, lengths, overlaps)
        print(f"{path}: {g.node_count} nodes, {g.edge_count} edges")


if __name__ == "__main__":
    main()

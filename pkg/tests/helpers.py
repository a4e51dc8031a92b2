"""Random layered supply-chain instances for property tests."""
from __future__ import annotations

import numpy as np

from physarum_scn import Link, NetworkInstance, Polynomial, SolverParams


def random_layered_instance(seed: int, max_links: int = 30, params: SolverParams | None = None) -> NetworkInstance:
    """Firm -> 1-3 hidden layers -> retailers, every node on a firm-retailer path."""
    rng = np.random.default_rng(seed)
    while True:
        widths = [1] + list(rng.integers(1, 4, size=rng.integers(1, 4))) + [int(rng.integers(1, 4))]
        layers, nxt = [], 0
        for w in widths:
            layers.append(list(range(nxt, nxt + w)))
            nxt += w
        edges = []
        for up, down in zip(layers, layers[1:]):
            chosen = set()
            for u in up:
                k = int(rng.integers(1, len(down) + 1))
                for v in rng.choice(down, size=k, replace=False):
                    chosen.add((u, int(v)))
            for v in down:
                if not any(e[1] == v for e in chosen):
                    chosen.add((int(rng.choice(up)), v))
            edges.extend(sorted(chosen))
        if len(edges) <= max_links:
            break

    def quad():
        return Polynomial((0.0, float(rng.uniform(0.0, 5.0)), float(rng.uniform(0.1, 3.0))))

    links = tuple(Link(id=i, tail=t, head=h, op_cost=quad(), inv_cost=quad()) for i, (t, h) in enumerate(edges))
    demands = {r: float(rng.uniform(1.0, 50.0)) for r in layers[-1]}
    return NetworkInstance(
        n_nodes=nxt,
        links=links,
        source=0,
        demands=demands,
        params=params if params is not None else SolverParams(),
        name=f"random-{seed}",
    )

"""Built-in 17-link supply-chain instances.

Node numbering::

    0        firm
    1, 2, 3  manufacturers M1..M3
    4, 5     distribution centres D1,1 and D2,1 (receiving side)
    6, 7     distribution centres D1,2 and D2,2 (shipping side)
    8, 9, 10 retailers R1..R3

Link ids (0-based; the published tables number them from 1)::

    0-2    firm -> M1, M2, M3
    3-8    M_i -> D1,1 / D2,1, row-major by manufacturer
    9, 10  storage D1,1 -> D1,2 and D2,1 -> D2,2
    11-13  D1,2 -> R1, R2, R3
    14-16  D2,2 -> R1, R2, R3

Printed cross terms such as ``f_1^2 + 2 f_2`` on link 1 are read as the
separable ``f_1^2 + 2 f_1``.  Demands are 45, 35 and 5 at R1, R2, R3.
"""
from __future__ import annotations

from .model import Link, NetworkInstance, Polynomial, SolverParams

N_NODES = 11
SOURCE = 0
DEMANDS = {8: 45.0, 9: 35.0, 10: 5.0}

TOPOLOGY = [
    (0, 1), (0, 2), (0, 3),
    (1, 4), (1, 5), (2, 4), (2, 5), (3, 4), (3, 5),
    (4, 6), (5, 7),
    (6, 8), (6, 9), (6, 10),
    (7, 8), (7, 9), (7, 10),
]

# (quadratic, linear) coefficients, table row order
OPERATING = [
    (1.0, 2.0), (0.5, 1.0), (0.5, 1.0),
    (1.5, 2.0), (1.0, 3.0), (1.0, 2.0), (0.5, 2.0), (0.5, 2.0), (1.0, 5.0),
    (0.5, 2.0), (1.0, 1.0),
    (0.5, 2.0), (0.5, 5.0), (1.0, 7.0),
    (1.0, 2.0), (0.5, 3.0), (0.5, 2.0),
]

INVESTMENT_1 = [
    (0.5, 1.0), (2.5, 1.0), (1.0, 2.0),
    (1.0, 1.0), (2.5, 2.0), (0.5, 1.0), (0.5, 1.0), (1.5, 1.0), (2.0, 3.0),
    (1.0, 5.0), (0.5, 3.0),
    (0.5, 1.0), (0.5, 1.0), (2.0, 5.0),
    (0.5, 1.0), (1.0, 1.0), (0.5, 1.0),
]

# Example 2: storage at the first distribution centre priced linearly
INVESTMENT_2 = list(INVESTMENT_1)
INVESTMENT_2[9] = (0.0, 5.0)

# Example 3: additionally, capacity on firm -> M1 and firm -> M2 priced linearly
INVESTMENT_3 = list(INVESTMENT_2)
INVESTMENT_3[0] = (0.0, 1.0)
INVESTMENT_3[1] = (0.0, 1.0)

_INVESTMENT = {1: INVESTMENT_1, 2: INVESTMENT_2, 3: INVESTMENT_3}

# published solution columns, table row order
TABLE_FLOWS = {
    1: [29.08, 24.29, 31.63, 16.68, 12.40, 8.65, 15.64, 18.94, 12.69,
        44.28, 40.72, 25.34, 18.94, 0.00, 19.66, 16.06, 5.00],
    2: [29.28, 23.78, 31.93, 19.01, 10.28, 13.73, 10.05, 21.77, 10.17,
        54.50, 30.50, 29.58, 23.18, 1.74, 15.42, 11.82, 3.26],
    3: [20.91, 45.18, 18.91, 14.74, 6.16, 23.79, 21.39, 14.79, 4.21,
        53.23, 31.77, 29.10, 22.70, 1.44, 15.90, 12.30, 3.56],
}

TABLE_OBJECTIVES = {1: 16125.65, 3: 10726.48}


def _poly(quad: float, lin: float) -> Polynomial:
    if quad == 0.0:
        return Polynomial((0.0, lin))
    return Polynomial((0.0, lin, quad))


def builtin_example(n: int, params: SolverParams | None = None) -> NetworkInstance:
    if n not in _INVESTMENT:
        raise ValueError(f"built-in examples are 1, 2 and 3; got {n!r}")
    links = [
        Link(
            id=i,
            tail=t,
            head=h,
            op_cost=_poly(*OPERATING[i]),
            inv_cost=_poly(*_INVESTMENT[n][i]),
        )
        for i, (t, h) in enumerate(TOPOLOGY)
    ]
    return NetworkInstance(
        n_nodes=N_NODES,
        links=tuple(links),
        source=SOURCE,
        demands=dict(DEMANDS),
        params=params if params is not None else SolverParams(),
        name=f"example-{n}",
    )

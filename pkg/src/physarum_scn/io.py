"""Instance files (TOML), solution tables and flux trajectories.

Instance file layout::

    [meta]
    name = "example-1"        # optional
    source = 0

    [nodes]
    count = 11

    [[nodes.retail]]          # one block per retailer
    id = 8
    demand = 45.0

    [[links]]                 # one block per link, ids 0..n-1 in order
    id = 0
    tail = 0
    head = 1
    op_cost = [0.0, 2.0, 1.0] # ascending degree: 0 + 2 f + 1 f^2
    inv_cost = [0.0, 1.0, 0.5]
    cap = 10.0                # optional imposed capacity

    [params]                  # optional, every key optional
    delta = 0.0001
    ...

Unknown sections or keys are rejected with their line and column.
"""
from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field

import numpy as np

from .engine import Solution
from .model import (
    CapacityMode,
    ConductivityUpdate,
    CostUpdate,
    InvalidInstanceError,
    LengthModel,
    Link,
    NetworkInstance,
    Polynomial,
    SolverParams,
    validate_instance,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DECIMALS = 6

_SECTION_KEYS = {
    "meta": {"name", "source"},
    "nodes": {"count", "retail"},
    "links": {"id", "tail", "head", "op_cost", "inv_cost", "cap"},
    "params": {
        "delta", "dt", "init_length", "max_iters", "seed", "cost_update",
        "conductivity_update", "length_model", "capacity_mode", "record_trajectory", "ground",
        "directed",
    },
}
_RETAIL_KEYS = {"id", "demand"}
_REQUIRED_SECTIONS = ("meta", "nodes", "links")


class InstanceParseError(ValueError):
    def __init__(self, message, line=None, col=None, code="SyntaxError"):
        self.line = line
        self.col = col
        self.code = code
        where = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(f"{code}: {message}{where}")


class InstanceSemanticError(InvalidInstanceError):
    @property
    def codes(self) -> list[str]:
        return [v.code for v in self.violations]


def _locate(text: str, key: str) -> tuple[int | None, int | None]:
    pat = re.compile(r"^\s*(\[\[?\s*)?(?:[\w.\-]*\.)?[\"']?" + re.escape(key) + r"[\"']?\s*(=|\]|\.)")
    for i, line in enumerate(text.splitlines(), start=1):
        if pat.match(line):
            return i, line.index(key) + 1
    return None, None


def _reject_unknown(text: str, table: dict, allowed: set[str], where: str):
    for key in table:
        if key not in allowed:
            line, col = _locate(text, key)
            raise InstanceParseError(f"unknown key {key!r} in {where}", line, col, code="UnknownKey")


def _expect(text, value, kinds, key, where):
    if isinstance(value, bool) and bool not in kinds:
        ok = False
    else:
        ok = isinstance(value, kinds)
    if not ok:
        line, col = _locate(text, key)
        raise InstanceParseError(f"{where}.{key} has the wrong type ({type(value).__name__})", line, col, code="TypeError")
    return value


def _number(text, value, key, where) -> float:
    return float(_expect(text, value, (int, float), key, where))


def _coeffs(text, value, key, where) -> Polynomial:
    _expect(text, value, (list,), key, where)
    if not value:
        line, col = _locate(text, key)
        raise InstanceParseError(f"{where}.{key} must list at least one coefficient", line, col, code="TypeError")
    return Polynomial(tuple(_number(text, c, key, where) for c in value))


def parse_instance(text: str) -> NetworkInstance:
    """Parse an instance document; raise instead of returning anything partial."""
    if not text.strip():
        raise InstanceParseError("empty document", 1, 1)
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+), column (\d+)", str(exc))
        line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
        raise InstanceParseError(str(exc).split(" (at")[0], line, col) from exc

    _reject_unknown(text, doc, set(_SECTION_KEYS), "document")
    for sec in _REQUIRED_SECTIONS:
        if sec not in doc:
            raise InstanceParseError(f"missing [{sec}] section", code="MissingSection")

    meta = _expect(text, doc["meta"], (dict,), "meta", "document")
    _reject_unknown(text, meta, _SECTION_KEYS["meta"], "[meta]")
    if "source" not in meta:
        raise InstanceParseError("[meta] needs a source", code="MissingKey")
    source = _expect(text, meta["source"], (int,), "source", "meta")
    name = _expect(text, meta.get("name", ""), (str,), "name", "meta")

    nodes = _expect(text, doc["nodes"], (dict,), "nodes", "document")
    _reject_unknown(text, nodes, _SECTION_KEYS["nodes"], "[nodes]")
    if "count" not in nodes:
        raise InstanceParseError("[nodes] needs a count", code="MissingKey")
    count = _expect(text, nodes["count"], (int,), "count", "nodes")
    demands: dict[int, float] = {}
    for rec in _expect(text, nodes.get("retail", []), (list,), "retail", "nodes"):
        _reject_unknown(text, rec, _RETAIL_KEYS, "[[nodes.retail]]")
        if "id" not in rec or "demand" not in rec:
            raise InstanceParseError("[[nodes.retail]] needs id and demand", code="MissingKey")
        rid = _expect(text, rec["id"], (int,), "id", "nodes.retail")
        if rid in demands:
            line, col = _locate(text, "retail")
            raise InstanceParseError(f"retailer {rid} listed twice", line, col, code="DuplicateRetailer")
        demands[rid] = _number(text, rec["demand"], "demand", "nodes.retail")

    links = []
    seen_ids = set()
    for rec in _expect(text, doc["links"], (list,), "links", "document"):
        _reject_unknown(text, rec, _SECTION_KEYS["links"], "[[links]]")
        missing = {"id", "tail", "head", "op_cost", "inv_cost"} - set(rec)
        if missing:
            raise InstanceParseError(f"[[links]] record missing {sorted(missing)}", code="MissingKey")
        lid = _expect(text, rec["id"], (int,), "id", "links")
        if lid in seen_ids:
            raise InstanceParseError(f"link id {lid} declared twice", code="DuplicateLinkId")
        seen_ids.add(lid)
        cap = rec.get("cap")
        links.append(
            Link(
                id=lid,
                tail=_expect(text, rec["tail"], (int,), "tail", "links"),
                head=_expect(text, rec["head"], (int,), "head", "links"),
                op_cost=_coeffs(text, rec["op_cost"], "op_cost", "links"),
                inv_cost=_coeffs(text, rec["inv_cost"], "inv_cost", "links"),
                cap=None if cap is None else _number(text, cap, "cap", "links"),
            )
        )

    params = _parse_params(text, doc.get("params", {}))
    inst = NetworkInstance(n_nodes=count, links=tuple(links), source=source, demands=demands, params=params, name=name)
    violations = validate_instance(inst)
    if violations:
        raise InstanceSemanticError(violations)
    return inst


def _parse_params(text: str, table) -> SolverParams:
    _expect(text, table, (dict,), "params", "document")
    _reject_unknown(text, table, _SECTION_KEYS["params"], "[params]")
    kw = {}
    for key in ("delta", "dt", "init_length"):
        if key in table:
            kw[key] = _number(text, table[key], key, "params")
    for key in ("max_iters", "seed"):
        if key in table:
            kw[key] = _expect(text, table[key], (int,), key, "params")
    if "ground" in table:
        kw["ground"] = _expect(text, table["ground"], (int,), "ground", "params")
    for key in ("record_trajectory", "directed"):
        if key in table:
            kw[key] = _expect(text, table[key], (bool,), key, "params")
    for key, target, enum in (
        ("cost_update", "cost_update_mode", CostUpdate),
        ("conductivity_update", "conductivity_update_mode", ConductivityUpdate),
        ("length_model", "length_model", LengthModel),
        ("capacity_mode", "capacity_mode", CapacityMode),
    ):
        if key in table:
            val = _expect(text, table[key], (str,), key, "params")
            try:
                kw[target] = enum(val)
            except ValueError:
                line, col = _locate(text, key)
                choices = ", ".join(e.value for e in enum)
                raise InstanceParseError(f"params.{key} must be one of {choices}", line, col, code="BadValue") from None
    return SolverParams(**kw)


def _fmt(x: float) -> str:
    # repr round-trips exactly and is always a valid TOML float
    return repr(float(x))


def dump_instance(inst: NetworkInstance) -> str:
    """Serialise an instance to the TOML instance format."""
    p = inst.params
    out = ["[meta]"]
    if inst.name:
        out.append(f'name = "{inst.name}"')
    out += [f"source = {inst.source}", "", "[nodes]", f"count = {inst.n_nodes}"]
    for node, d in sorted(inst.demands.items()):
        out += ["", "[[nodes.retail]]", f"id = {node}", f"demand = {_fmt(d)}"]
    for lk in inst.links:
        out += [
            "",
            "[[links]]",
            f"id = {lk.id}",
            f"tail = {lk.tail}",
            f"head = {lk.head}",
            "op_cost = [" + ", ".join(_fmt(c) for c in lk.op_cost.coefficients) + "]",
            "inv_cost = [" + ", ".join(_fmt(c) for c in lk.inv_cost.coefficients) + "]",
        ]
        if lk.cap is not None:
            out.append(f"cap = {_fmt(lk.cap)}")
    out += [
        "",
        "[params]",
        f"delta = {_fmt(p.delta)}",
        f"dt = {_fmt(p.dt)}",
        f"init_length = {_fmt(p.init_length)}",
        f"max_iters = {p.max_iters}",
        f"seed = {p.seed}",
        f'cost_update = "{p.cost_update_mode.value}"',
        f'conductivity_update = "{p.conductivity_update_mode.value}"',
        f'length_model = "{p.length_model.value}"',
        f'capacity_mode = "{p.capacity_mode.value}"',
        f"record_trajectory = {'true' if p.record_trajectory else 'false'}",
        f"directed = {'true' if p.directed else 'false'}",
    ]
    if p.ground is not None:
        out.append(f"ground = {p.ground}")
    return "\n".join(out) + "\n"


def _f(x: float) -> str:
    s = f"{x:.{DECIMALS}f}"
    return "0.000000" if s == "-0.000000" else s


def write_solution(sol: Solution) -> str:
    """Solution table: one row per link, then ``#``-prefixed footer lines."""
    removed = set(sol.removed_links)
    rows = ["link,flow,capacity,length,removed"]
    for i, (f, u, L) in enumerate(zip(sol.flows, sol.capacities, sol.lengths)):
        rows.append(f"{i},{_f(f)},{_f(u)},{_f(L)},{int(i in removed)}")
    p = sol.params
    rows += [
        f"# objective,{_f(sol.objective)}",
        f"# iterations,{sol.iterations}",
        f"# converged,{'true' if sol.converged else 'false'}",
        f"# seed,{p.seed}",
        f"# cost_update,{p.cost_update_mode.value}",
        f"# conductivity_update,{p.conductivity_update_mode.value}",
        f"# length_model,{p.length_model.value}",
        f"# capacity_mode,{p.capacity_mode.value}",
        f"# directed,{'true' if p.directed else 'false'}",
    ]
    return "\n".join(rows) + "\n"


@dataclass
class SolutionRecord:
    flows: list[float] = field(default_factory=list)
    capacities: list[float] = field(default_factory=list)
    lengths: list[float] = field(default_factory=list)
    removed_links: list[int] = field(default_factory=list)
    footer: dict[str, str] = field(default_factory=dict)

    @property
    def objective(self) -> float:
        return float(self.footer["objective"])

    @property
    def iterations(self) -> int:
        return int(self.footer["iterations"])

    @property
    def converged(self) -> bool:
        return self.footer["converged"] == "true"


def read_solution(text: str) -> SolutionRecord:
    rec = SolutionRecord()
    lines = text.splitlines()
    if not lines or lines[0] != "link,flow,capacity,length,removed":
        raise ValueError("not a solution table")
    for line in lines[1:]:
        if line.startswith("# "):
            key, _, val = line[2:].partition(",")
            rec.footer[key] = val
            continue
        link, f, u, L, removed = line.split(",")
        rec.flows.append(float(f))
        rec.capacities.append(float(u))
        rec.lengths.append(float(L))
        if removed == "1":
            rec.removed_links.append(int(link))
    return rec


def write_trajectory(traj) -> str:
    """``|Q|`` per iteration (rows) and link (columns)."""
    if isinstance(traj, Solution):
        traj = traj.trajectory
    if traj is None:
        raise ValueError("no trajectory recorded; enable record_trajectory")
    traj = np.atleast_2d(np.asarray(traj, dtype=float))
    header = "iter," + ",".join(f"link_{a}" for a in range(traj.shape[1]))
    rows = [header]
    for i, row in enumerate(traj, start=1):
        rows.append(f"{i}," + ",".join(_f(v) for v in row))
    return "\n".join(rows) + "\n"


def read_trajectory(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or not lines[0].startswith("iter"):
        raise ValueError("not a trajectory table")
    data = [[float(v) for v in ln.split(",")[1:]] for ln in lines[1:]]
    n = len(lines[0].split(",")) - 1
    return np.array(data, dtype=float).reshape(len(data), n)

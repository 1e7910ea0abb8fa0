"""Network model parsed from a subset of the EPANET INP text format.

Only junctions, reservoirs and pipes are read; everything else is ignored
(with a warning for sections the subset does not know about). The module
also builds the flow-oriented directed graph used by the localizer.
"""

from __future__ import annotations

import csv
import logging
import re
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import networkx as nx

from .errors import (
    DanglingEndpoint,
    DuplicateId,
    MalformedSection,
    MissingFlow,
    UnknownLink,
    UnknownNode,
    ValidationError,
)

log = logging.getLogger(__name__)

REQUIRED_SECTIONS = ("JUNCTIONS", "RESERVOIRS", "PIPES")
IGNORED_SECTIONS = ("TITLE", "COORDINATES", "OPTIONS", "END")


def natural_key(ident):
    """Sort key placing "2" before "10" and numeric ids before "P1"."""
    return [(0, int(tok), "") if tok.isdigit() else (1, 0, tok) for tok in re.findall(r"\d+|\D+", ident)]


@dataclass(frozen=True)
class Junction:
    id: str
    elevation: float = 0.0
    base_demand: float = 0.0


@dataclass(frozen=True)
class Reservoir:
    id: str
    head: float


@dataclass(frozen=True)
class Pipe:
    id: str
    start: str
    end: str
    length: float
    diameter: float
    roughness: float = 100.0


@dataclass(frozen=True)
class NetworkModel:
    junctions: tuple[Junction, ...]
    reservoirs: tuple[Reservoir, ...]
    pipes: tuple[Pipe, ...]
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "junctions", tuple(self.junctions))
        object.__setattr__(self, "reservoirs", tuple(self.reservoirs))
        object.__setattr__(self, "pipes", tuple(self.pipes))
        seen = set()
        for node in (*self.junctions, *self.reservoirs):
            if node.id in seen:
                raise DuplicateId("node", node.id)
            seen.add(node.id)
        links = set()
        for pipe in self.pipes:
            if pipe.id in links:
                raise DuplicateId("pipe", pipe.id)
            links.add(pipe.id)
            for end in (pipe.start, pipe.end):
                if end not in seen:
                    raise DanglingEndpoint(pipe.id, end)
            if not (pipe.length > 0 and pipe.diameter > 0):
                raise ValidationError(f"pipe {pipe.id} needs positive length and diameter")
        if not self.reservoirs:
            raise ValidationError("network has no reservoir")

    @property
    def node_ids(self) -> list[str]:
        return [n.id for n in self.junctions] + [n.id for n in self.reservoirs]

    @property
    def junction_ids(self) -> list[str]:
        return [n.id for n in self.junctions]

    @property
    def pipe_ids(self) -> list[str]:
        return [p.id for p in self.pipes]

    def pipe(self, link: str) -> Pipe:
        for p in self.pipes:
            if p.id == link:
                return p
        raise UnknownLink(link)

    def has_node(self, node: str) -> bool:
        return any(n.id == node for n in (*self.junctions, *self.reservoirs))

    def reservoir(self, node: str) -> Reservoir | None:
        for r in self.reservoirs:
            if r.id == node:
                return r
        return None

    def to_networkx(self) -> nx.MultiGraph:
        """Undirected multigraph with pipe lengths as edge weights."""
        g = nx.MultiGraph()
        g.add_nodes_from(self.node_ids)
        for p in self.pipes:
            g.add_edge(p.start, p.end, key=p.id, length=p.length)
        return g

    def distances_from(self, node: str) -> dict[str, float]:
        """Shortest-path distance in meters along pipes from ``node``."""
        if not self.has_node(node):
            raise UnknownNode(node)
        return nx.single_source_dijkstra_path_length(self.to_networkx(), node, weight="length")


def _floats(tokens, lineno, names):
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise MalformedSection(f"non-numeric value in {' '.join(tokens)} (expected {names})", lineno) from None


def parse_inp(text: str) -> NetworkModel:
    """Parse an INP-subset document into a :class:`NetworkModel`."""
    section = None
    seen_sections = set()
    junctions, reservoirs, pipes, warnings = [], [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise MalformedSection(f"bad section header {line!r}", lineno)
            section = line[1:-1].strip().upper()
            seen_sections.add(section)
            if section not in REQUIRED_SECTIONS and section not in IGNORED_SECTIONS:
                msg = f"line {lineno}: ignoring unknown section [{section}]"
                log.warning(msg)
                warnings.append(msg)
            continue
        tokens = line.split()
        if section == "JUNCTIONS":
            # id elevation [demand [pattern]]
            if not 2 <= len(tokens) <= 4:
                raise MalformedSection(f"junction needs 2-4 fields, got {len(tokens)}", lineno)
            values = _floats(tokens[1:3], lineno, "elevation demand")
            demand = values[1] if len(values) > 1 else 0.0
            junctions.append(Junction(tokens[0], values[0], demand))
        elif section == "RESERVOIRS":
            if not 2 <= len(tokens) <= 3:
                raise MalformedSection(f"reservoir needs 2-3 fields, got {len(tokens)}", lineno)
            (head,) = _floats(tokens[1:2], lineno, "head")
            reservoirs.append(Reservoir(tokens[0], head))
        elif section == "PIPES":
            # id node1 node2 length diameter roughness [minorloss [status]]
            if not 6 <= len(tokens) <= 8:
                raise MalformedSection(f"pipe needs 6-8 fields, got {len(tokens)}", lineno)
            length, diameter, roughness = _floats(tokens[3:6], lineno, "length diameter roughness")
            pipes.append(Pipe(tokens[0], tokens[1], tokens[2], length, diameter, roughness))
        elif section is None:
            raise MalformedSection("data before any section header", lineno)
    missing = [s for s in REQUIRED_SECTIONS if s not in seen_sections]
    if missing:
        raise MalformedSection(f"missing section(s): {', '.join(missing)}")
    return NetworkModel(junctions, reservoirs, pipes, warnings=tuple(warnings))


def read_inp(path) -> NetworkModel:
    return parse_inp(Path(path).read_text(encoding="utf-8"))


def serialize_inp(model: NetworkModel) -> str:
    """Write ``model`` back to the INP subset; ``parse_inp`` inverts this."""
    out = ["[JUNCTIONS]", ";id elevation demand"]
    out += [f"{j.id} {j.elevation!r} {j.base_demand!r}" for j in model.junctions]
    out += ["", "[RESERVOIRS]", ";id head"]
    out += [f"{r.id} {r.head!r}" for r in model.reservoirs]
    out += ["", "[PIPES]", ";id node1 node2 length diameter roughness"]
    out += [f"{p.id} {p.start} {p.end} {p.length!r} {p.diameter!r} {p.roughness!r}" for p in model.pipes]
    out += ["", "[END]", ""]
    return "\n".join(out)


def reference_inp_text() -> str:
    return resources.files("burstloc").joinpath("data/reference25.inp").read_text(encoding="utf-8")


def reference_model() -> NetworkModel:
    """The bundled 1-reservoir, 15-junction, 25-pipe test network."""
    return parse_inp(reference_inp_text())


# --- directed graph -------------------------------------------------------


@dataclass(frozen=True)
class Edge:
    link: str
    source: str
    target: str
    weight: int = 1


@dataclass(frozen=True)
class DirectedNetworkGraph:
    nodes: frozenset[str]
    edges: tuple[Edge, ...]

    def _check(self, node):
        if node not in self.nodes:
            raise UnknownNode(node)

    def predecessors(self, node: str) -> set[str]:
        self._check(node)
        return {e.source for e in self.edges if e.target == node}

    def successors(self, node: str) -> set[str]:
        self._check(node)
        return {e.target for e in self.edges if e.source == node}

    def links_between(self, source: str, target: str) -> list[str]:
        """Ids of edges source->target, lowest id first."""
        return sorted((e.link for e in self.edges if e.source == source and e.target == target), key=natural_key)

    def has_edge(self, source: str, target: str) -> bool:
        return any(e.source == source and e.target == target for e in self.edges)

    def to_csv(self) -> str:
        rows = ["link_id,from,to"] + [f"{e.link},{e.source},{e.target}" for e in self.edges]
        return "\n".join(rows) + "\n"


def build_directed_graph(model: NetworkModel, flows: dict[str, float]) -> DirectedNetworkGraph:
    """Orient every pipe along the sign of its flow; zero keeps start->end."""
    edges = []
    for p in model.pipes:
        if p.id not in flows:
            raise MissingFlow(p.id)
        if flows[p.id] < 0:
            edges.append(Edge(p.id, p.end, p.start))
        else:
            edges.append(Edge(p.id, p.start, p.end))
    return DirectedNetworkGraph(frozenset(model.node_ids), tuple(edges))


def default_flow_field(model: NetworkModel) -> dict[str, float]:
    """Unit flows pointing away from the reservoirs by breadth-first hop count.

    Pipes whose ends are equally far keep their declared direction.
    """
    adj = {n: [] for n in model.node_ids}
    for p in model.pipes:
        adj[p.start].append(p.end)
        adj[p.end].append(p.start)
    hops = {r.id: 0 for r in model.reservoirs}
    queue = deque(hops)
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in hops:
                hops[v] = hops[u] + 1
                queue.append(v)
    inf = float("inf")
    return {p.id: 1.0 if hops.get(p.start, inf) <= hops.get(p.end, inf) else -1.0 for p in model.pipes}


def read_flow_csv(path) -> dict[str, float]:
    """Read a ``link_id,flow`` CSV into a flow field."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["link_id", "flow"]:
            raise MalformedSection("flow CSV must start with header link_id,flow", 1)
        flows = {}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise MalformedSection(f"expected 2 columns, got {len(row)}", lineno)
            flows[row[0].strip()] = _floats([row[1]], lineno, "flow")[0]
    return flows

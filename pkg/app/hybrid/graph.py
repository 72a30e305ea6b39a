from enum import Enum
from typing import Iterable, Mapping, NamedTuple

import networkx as nx
import numpy as np
from celery.utils.log import get_task_logger

from app.core.config import settings
from app.hybrid.errors import CapExceededError, GraphError, UndecidedError
from app.hybrid.scenario import Event, HybridScenario, enumerate_events

logger = get_task_logger(__name__)


class EdgeTag(str, Enum):
    A_ONLY = "A"
    B_ONLY = "B"
    BOTH = "AB"

    @property
    def on_a(self) -> bool:
        return self in (EdgeTag.A_ONLY, EdgeTag.BOTH)

    @property
    def on_b(self) -> bool:
        return self in (EdgeTag.B_ONLY, EdgeTag.BOTH)

    @classmethod
    def for_side(cls, side: str) -> "EdgeTag":
        try:
            return {"A": cls.A_ONLY, "B": cls.B_ONLY, "AB": cls.BOTH}[side]
        except KeyError:
            raise GraphError(f"unknown edge side {side!r}") from None


DOT_COLORS = {EdgeTag.A_ONLY: "red", EdgeTag.B_ONLY: "blue", EdgeTag.BOTH: "green"}


class ExclusivityGraph:
    """Undirected graph whose edges remember which side (A, B or both) makes them exclusive.

    Vertices are 0..n-1. Scenario-built graphs carry one Event label per vertex;
    abstract graphs carry none and tag every edge with their declared default side.
    Instances are immutable.
    """

    __slots__ = ("n", "labels", "default_side", "adjacency", "_tags", "_masks")

    def __init__(
        self,
        n: int,
        tagged_edges: Mapping[tuple[int, int], EdgeTag],
        labels: Iterable[Event] | None = None,
        default_side: EdgeTag | None = None,
    ):
        if n < 1:
            raise GraphError("graph must have at least one vertex")
        tags: dict[tuple[int, int], EdgeTag] = {}
        for (u, v), tag in tagged_edges.items():
            if u == v:
                raise GraphError(f"self-loop on vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range for {n} vertices")
            tags[(min(u, v), max(u, v))] = EdgeTag(tag)
        labels = tuple(labels) if labels is not None else None
        if labels is not None and len(labels) != n:
            raise GraphError(f"expected {n} labels, got {len(labels)}")

        adjacency = np.zeros((n, n), dtype=bool)
        masks = [0] * n
        for u, v in tags:
            adjacency[u, v] = adjacency[v, u] = True
            masks[u] |= 1 << v
            masks[v] |= 1 << u
        adjacency.setflags(write=False)

        self.n = n
        self.labels = labels
        self.default_side = default_side
        self.adjacency = adjacency
        self._tags = tags
        self._masks = tuple(masks)

    @classmethod
    def abstract(cls, n: int, edges: Iterable[tuple[int, int]], side: str = "B") -> "ExclusivityGraph":
        tag = EdgeTag.for_side(side)
        return cls(n, {e: tag for e in edges}, default_side=tag)

    # --- Structure queries ---

    @property
    def edges(self) -> list[tuple[int, int]]:
        return sorted(self._tags)

    @property
    def tags(self) -> dict[tuple[int, int], EdgeTag]:
        return dict(self._tags)

    @property
    def num_edges(self) -> int:
        return len(self._tags)

    def tag(self, u: int, v: int) -> EdgeTag | None:
        return self._tags.get((min(u, v), max(u, v)))

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.adjacency[u, v])

    def neighbor_mask(self, v: int) -> int:
        return self._masks[v]

    def neighbors(self, v: int) -> list[int]:
        return [int(u) for u in np.flatnonzero(self.adjacency[v])]

    def degree(self, v: int) -> int:
        return self._masks[v].bit_count()

    def is_stable(self, vertices: Iterable[int]) -> bool:
        mask = 0
        for v in vertices:
            mask |= 1 << v
        return all(not (self._masks[v] & mask) for v in vertices)

    def side_edges(self, side: str) -> list[tuple[int, int]]:
        if side == "A":
            return [e for e in self.edges if self._tags[e].on_a]
        if side == "B":
            return [e for e in self.edges if self._tags[e].on_b]
        raise GraphError(f"unknown side {side!r}")

    @property
    def has_a_edges(self) -> bool:
        return any(t.on_a for t in self._tags.values())

    def side_graph(self, side: str) -> "ExclusivityGraph":
        """G_A or G_B: same vertices, only the edges that side makes exclusive."""
        tag = EdgeTag.for_side(side)
        return ExclusivityGraph(self.n, {e: tag for e in self.side_edges(side)}, self.labels, default_side=tag)

    def induced(self, vertices: Iterable[int]) -> "ExclusivityGraph":
        return induced_subgraph(self, vertices)

    def complement(self) -> "ExclusivityGraph":
        side = self.default_side or EdgeTag.B_ONLY
        edges = {(u, v): side for u in range(self.n) for v in range(u + 1, self.n) if not self.adjacency[u, v]}
        return ExclusivityGraph(self.n, edges, self.labels, default_side=side)

    def label(self, v: int) -> str:
        return self.labels[v].label if self.labels is not None else str(v)

    # --- Export ---

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        for (u, v), tag in self._tags.items():
            g.add_edge(u, v, tag=tag.value)
        return g

    def to_dot(self, name: str = "H") -> str:
        lines = [f"graph {name} {{", "  node [shape=circle];"]
        for v in range(self.n):
            lines.append(f'  {v} [label="{self.label(v)}"];')
        for (u, v) in self.edges:
            lines.append(f"  {u} -- {v} [color={DOT_COLORS[self._tags[(u, v)]]}];")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExclusivityGraph):
            return NotImplemented
        return self.n == other.n and self._tags == other._tags and self.labels == other.labels

    def __hash__(self) -> int:
        return hash((self.n, tuple(sorted((e, t.value) for e, t in self._tags.items()))))

    def __repr__(self) -> str:
        counts = {t: 0 for t in EdgeTag}
        for t in self._tags.values():
            counts[t] += 1
        return (
            f"ExclusivityGraph(n={self.n}, A={counts[EdgeTag.A_ONLY]}, "
            f"B={counts[EdgeTag.B_ONLY]}, AB={counts[EdgeTag.BOTH]})"
        )


# --- Construction ---


def build_graph(scenario: HybridScenario, events: Iterable[Event] | None = None) -> ExclusivityGraph:
    """Exclusivity graph on the given events (all events by default), edges tagged by side."""
    events = list(events) if events is not None else enumerate_events(scenario)
    if not events:
        raise GraphError("an exclusivity graph needs at least one event")
    seen = {}
    for i, e in enumerate(events):
        key = (e.outcomes, e.settings)
        if key in seen:
            raise GraphError(f"duplicate event {e.label} at positions {seen[key]} and {i}")
        seen[key] = i

    outcomes = np.array([e.outcomes for e in events], dtype=np.int64)
    setting = np.array([e.settings for e in events], dtype=np.int64)
    if outcomes.shape[1] != scenario.num_parties:
        raise GraphError("events do not match the scenario's party count")

    def exclusive_on(parties) -> np.ndarray:
        m = np.zeros((len(events), len(events)), dtype=bool)
        for p in parties:
            m |= (setting[:, p, None] == setting[None, :, p]) & (outcomes[:, p, None] != outcomes[None, :, p])
        return m

    on_a = exclusive_on(scenario.a_side)
    on_b = exclusive_on(scenario.b_side)
    tags = {}
    for u, v in np.argwhere(np.triu(on_a | on_b, 1)):
        u, v = int(u), int(v)
        if on_a[u, v] and on_b[u, v]:
            tags[(u, v)] = EdgeTag.BOTH
        elif on_a[u, v]:
            tags[(u, v)] = EdgeTag.A_ONLY
        else:
            tags[(u, v)] = EdgeTag.B_ONLY
    return ExclusivityGraph(len(events), tags, events)


def induced_subgraph(G: ExclusivityGraph, vertex_subset: Iterable[int]) -> ExclusivityGraph:
    """Subgraph on the subset, relabeled 0..k-1 in increasing original order; tags inherited."""
    subset = sorted(set(vertex_subset))
    if not subset:
        raise GraphError("vertex subset must be nonempty")
    if subset[0] < 0 or subset[-1] >= G.n:
        raise GraphError(f"vertex index out of range for graph on {G.n} vertices")
    position = {v: i for i, v in enumerate(subset)}
    tags = {
        (position[u], position[v]): t for (u, v), t in G.tags.items() if u in position and v in position
    }
    labels = [G.labels[v] for v in subset] if G.labels is not None else None
    return ExclusivityGraph(len(subset), tags, labels, default_side=G.default_side)


def generate(kind: str, side: str = "B", **params) -> ExclusivityGraph:
    """Textbook graphs: cycle, circulant, complement, mobius_ladder, complete, edgeless."""
    if kind == "complement":
        graph = params.get("graph")
        if not isinstance(graph, ExclusivityGraph):
            raise GraphError("complement needs graph=<ExclusivityGraph>")
        return graph.complement()

    if kind == "mobius_ladder":
        q = int(params.get("q", 0))
        if q < 2:
            raise GraphError("mobius_ladder needs q >= 2")
        n = 2 * q
        edges = {(i, (i + 1) % n) for i in range(n)} | {(i, i + q) for i in range(q)}
        return ExclusivityGraph.abstract(n, _normalize(edges), side)

    n = int(params.get("n", 0))
    if kind in ("complete", "edgeless"):
        if n < 1:
            raise GraphError(f"{kind} needs n >= 1")
        edges = [(u, v) for u in range(n) for v in range(u + 1, n)] if kind == "complete" else []
        return ExclusivityGraph.abstract(n, edges, side)

    if n < 3:
        raise GraphError(f"{kind} needs n >= 3")
    if kind == "cycle":
        offsets = (1,)
    elif kind == "circulant":
        offsets = tuple(int(o) for o in params.get("offsets", ()))
        if not offsets or any(not 1 <= o <= n // 2 for o in offsets):
            raise GraphError(f"circulant offsets must lie in 1..{n // 2}, got {offsets}")
    else:
        raise GraphError(f"unknown graph kind {kind!r}")
    edges = {(i, (i + o) % n) for i in range(n) for o in offsets}
    return ExclusivityGraph.abstract(n, _normalize(edges), side)


def _normalize(edges) -> list[tuple[int, int]]:
    return sorted({(min(u, v), max(u, v)) for u, v in edges})


# --- Odd holes and antiholes ---


class OddCycle(NamedTuple):
    kind: str  # "hole" (in G) or "antihole" (hole of the complement)
    vertices: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.vertices)


def _canonical_cycle(cycle) -> tuple[int, ...]:
    """Smallest rotation/reflection, starting at the minimum vertex."""
    cycle = list(cycle)
    i = cycle.index(min(cycle))
    forward = cycle[i:] + cycle[:i]
    backward = [forward[0]] + forward[1:][::-1]
    return tuple(min(forward, backward))


def _odd_chordless_cycles(g: nx.Graph, max_length: int):
    for cycle in nx.chordless_cycles(g, length_bound=max_length):
        if len(cycle) >= 5 and len(cycle) % 2 == 1:
            yield cycle


def find_odd_holes_and_antiholes(G: ExclusivityGraph, max_length: int) -> list[OddCycle]:
    """Every induced odd cycle of length 5..max_length in G and in its complement, each once."""
    if max_length < 5:
        raise GraphError("max_length must be at least 5")
    g = G.to_networkx()
    found = []
    for kind, graph in (("hole", g), ("antihole", nx.complement(g))):
        classes = {_canonical_cycle(c) for c in _odd_chordless_cycles(graph, max_length)}
        found.extend(OddCycle(kind, c) for c in sorted(classes, key=lambda c: (len(c), c)))
    return found


def is_perfect(G: ExclusivityGraph, cap: int | None = None) -> bool:
    cap = settings.PERFECTNESS_CAP if cap is None else cap
    if G.n > cap:
        raise UndecidedError("perfectness check", G.n, cap)
    if G.n < 5:
        return True
    g = G.to_networkx()
    co = nx.complement(g)
    if nx.is_bipartite(g) or nx.is_bipartite(co):
        return True
    for graph in (g, co):
        for _ in _odd_chordless_cycles(graph, G.n):
            return False
    return True


# --- Induced embeddings ---


def find_induced_embedding(
    pattern: ExclusivityGraph,
    host: ExclusivityGraph,
    budget: int | None = None,
) -> tuple[int, ...] | None:
    """Map pattern vertices to distinct host vertices so adjacency is preserved exactly.

    Returns host vertices indexed by pattern vertex, or None when no induced copy
    exists. Raises CapExceededError once the backtracking node budget is spent.
    """
    budget = settings.EMBEDDING_NODE_BUDGET if budget is None else budget
    k = pattern.n
    if k > host.n:
        return None

    # BFS order keeps every placed vertex adjacent to an earlier one where possible.
    order: list[int] = []
    for root in range(k):
        if root in order:
            continue
        queue = [root]
        order.append(root)
        while queue:
            u = queue.pop(0)
            for w in pattern.neighbors(u):
                if w not in order:
                    order.append(w)
                    queue.append(w)

    everything = (1 << host.n) - 1
    assignment: list[int] = [-1] * k
    nodes = 0

    def extend(pos: int, used: int) -> bool:
        nonlocal nodes
        if pos == k:
            return True
        i = order[pos]
        candidates = everything & ~used
        for j in order[:pos]:
            hj = host.neighbor_mask(assignment[j])
            candidates = candidates & hj if pattern.has_edge(i, j) else candidates & ~hj
        while candidates:
            low = candidates & -candidates
            candidates ^= low
            nodes += 1
            if nodes > budget:
                raise CapExceededError("induced embedding search", nodes, budget)
            assignment[i] = low.bit_length() - 1
            if extend(pos + 1, used | low):
                return True
        assignment[i] = -1
        return False

    return tuple(assignment) if extend(0, 0) else None


def match_circulant(G: ExclusivityGraph, offsets: tuple[int, ...], budget: int | None = None) -> tuple[int, ...] | None:
    """Cyclic ordering under which G is the circulant on its vertex count, or None."""
    pattern = generate("circulant", n=G.n, offsets=offsets)
    if pattern.num_edges != G.num_edges:
        return None
    return find_induced_embedding(pattern, G, budget)

"""Exact-rational STAB / QSTAB / HSTAB machinery.

Every coordinate is a Fraction. Vertex sets are deduplicated and kept in
lexicographic order so exports and reports are reproducible.
"""

from fractions import Fraction
from math import gcd, lcm
from typing import Callable, Iterable, NamedTuple, Sequence

import networkx as nx
from celery.utils.log import get_task_logger

from app.core.config import settings
from app.hybrid.errors import CapExceededError, DimensionError, InfeasibleError, InputError, ParseError, SolverError, UnboundedError
from app.hybrid.graph import ExclusivityGraph
from app.hybrid.scenario import HybridScenario
from app.hybrid.solvers import LPProblem, simplex_max
from app.hybrid.types import ONE, ZERO, Labeling, characteristic, format_labeling, to_fraction

logger = get_task_logger(__name__)


# --- Polytope types ---


class HPolytope:
    """{x ≥ 0 : coeffs·x ≤ bound for every row}."""

    __slots__ = ("dim", "rows")

    def __init__(self, dim: int, rows: Iterable[tuple[Sequence, object]]):
        self.dim = dim
        self.rows = tuple((tuple(to_fraction(a) for a in coeffs), to_fraction(b)) for coeffs, b in rows)
        if any(len(coeffs) != dim for coeffs, _ in self.rows):
            raise DimensionError(f"every row must have {dim} coefficients")

    def violated_rows(self, point: Labeling) -> list[int]:
        return [i for i, (coeffs, b) in enumerate(self.rows) if sum(c * x for c, x in zip(coeffs, point) if c) > b]

    def satisfied_by(self, point: Labeling) -> bool:
        if len(point) != self.dim:
            raise DimensionError(f"point has {len(point)} coordinates, polytope dimension is {self.dim}")
        return all(x >= 0 for x in point) and not self.violated_rows(point)

    def __len__(self) -> int:
        return len(self.rows)

    def __repr__(self) -> str:
        return f"HPolytope(dim={self.dim}, rows={len(self.rows)})"


class VPolytope:
    """Convex hull of finitely many rational points, stored as a sorted, duplicate-free vertex list."""

    __slots__ = ("dim", "vertices")

    def __init__(self, dim: int, vertices: Iterable[Labeling]):
        verts = sorted({tuple(to_fraction(x) for x in v) for v in vertices})
        if any(len(v) != dim for v in verts):
            raise DimensionError(f"every vertex must have {dim} coordinates")
        self.dim = dim
        self.vertices: tuple[Labeling, ...] = tuple(verts)

    @classmethod
    def hull(cls, dim: int, points: Iterable[Labeling]) -> "VPolytope":
        return cls(dim, extreme_points(points, dim))

    def max_linear(self, c: Sequence[Fraction]) -> tuple[Fraction, Labeling]:
        if not self.vertices:
            raise InfeasibleError("empty polytope")
        return max(((sum(a * x for a, x in zip(c, v) if a and x), v) for v in self.vertices), key=lambda t: t[0])

    def to_text(self) -> str:
        return "".join(format_labeling(v) + "\n" for v in self.vertices)

    @classmethod
    def from_text(cls, text: str) -> "VPolytope":
        points = []
        for number, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                points.append(tuple(Fraction(tok) for tok in line.split()))
            except (ValueError, ZeroDivisionError) as e:
                raise ParseError(f"bad rational in {line!r}", number) from e
        if not points:
            raise ParseError("no vertices found")
        return cls(len(points[0]), points)

    def __contains__(self, point) -> bool:
        return tuple(point) in set(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def __len__(self) -> int:
        return len(self.vertices)

    def __eq__(self, other) -> bool:
        if not isinstance(other, VPolytope):
            return NotImplemented
        return self.dim == other.dim and self.vertices == other.vertices

    def __repr__(self) -> str:
        return f"VPolytope(dim={self.dim}, vertices={len(self.vertices)})"


# --- Stable sets and cliques ---


def stable_set_masks(G: ExclusivityGraph) -> list[int]:
    """Bitmasks of all stable sets of G (empty set included), in increasing numeric order."""
    masks: list[int] = []

    def extend(v: int, current: int, blocked: int) -> None:
        if v == G.n:
            masks.append(current)
            return
        extend(v + 1, current, blocked)
        if not (blocked >> v) & 1:
            extend(v + 1, current | (1 << v), blocked | G.neighbor_mask(v))

    extend(0, 0, 0)
    return sorted(masks)


def enumerate_stable_sets(G: ExclusivityGraph, cap: int | None = None) -> list[Labeling]:
    cap = settings.STABLE_SET_CAP if cap is None else cap
    if G.n > cap:
        raise CapExceededError("stable-set enumeration", G.n, cap)
    return [tuple(ONE if (m >> v) & 1 else ZERO for v in range(G.n)) for m in stable_set_masks(G)]


def enumerate_maximal_cliques(G: ExclusivityGraph) -> list[tuple[int, ...]]:
    """All maximal cliques, each once, via networkx's pivoting Bron–Kerbosch."""
    return sorted(tuple(sorted(c)) for c in nx.find_cliques(G.to_networkx()))


def maximal_stable_sets(G: ExclusivityGraph) -> list[tuple[int, ...]]:
    return enumerate_maximal_cliques(G.complement())


def extend_to_maximal_stable(G: ExclusivityGraph, vertices: Iterable[int]) -> tuple[int, ...]:
    """Greedy extension in vertex order; the input must already be stable."""
    chosen = set(vertices)
    blocked = 0
    for v in chosen:
        blocked |= G.neighbor_mask(v)
    for v in range(G.n):
        if v not in chosen and not (blocked >> v) & 1:
            chosen.add(v)
            blocked |= G.neighbor_mask(v)
    return tuple(sorted(chosen))


def qstab_h(G: ExclusivityGraph) -> HPolytope:
    """One clique row per maximal clique; x ≥ 0 is implicit."""
    rows = []
    for clique in enumerate_maximal_cliques(G):
        members = set(clique)
        rows.append((tuple(ONE if v in members else ZERO for v in range(G.n)), ONE))
    return HPolytope(G.n, rows)


# --- Double description ---


def _integer_row(coeffs: Sequence[Fraction]) -> tuple[int, ...]:
    scale = lcm(*(c.denominator for c in coeffs)) if coeffs else 1
    return tuple(int(c * scale) for c in coeffs)


def _normalize_ray(ray: list[int]) -> tuple[int, ...]:
    g = 0
    for x in ray:
        g = gcd(g, x)
    return tuple(x // g for x in ray) if g > 1 else tuple(ray)


def vertex_enumeration(P: HPolytope) -> VPolytope:
    """Exact vertices of a bounded H-polytope by double description on its homogenized cone.

    The cone {(x0, x) : x0 ≥ 0, x ≥ 0, b·x0 - A·x ≥ 0} starts as the orthant and takes
    one row at a time; adjacency of rays is decided combinatorially from their zero sets.
    """
    d = P.dim + 1
    constraints: list[tuple[int, ...]] = [tuple(1 if j == i else 0 for j in range(d)) for i in range(d)]
    for coeffs, bound in P.rows:
        constraints.append(_integer_row((bound, *(-c for c in coeffs))))

    rays: list[tuple[int, ...]] = [constraints[i] for i in range(d)]
    full = (1 << d) - 1
    zero_sets: list[int] = [full ^ (1 << i) for i in range(d)]

    for k in range(d, len(constraints)):
        a = constraints[k]
        values = [sum(x * y for x, y in zip(a, r) if x and y) for r in rays]
        positive = [i for i, v in enumerate(values) if v > 0]
        negative = [i for i, v in enumerate(values) if v < 0]
        if not negative:
            # Redundant so far: only record where it is tight.
            zero_sets = [z | (1 << k) if values[i] == 0 else z for i, z in enumerate(zero_sets)]
            continue

        # For each constraint index, the set of rays tight on it.
        tight_on: dict[int, int] = {}
        for i, z in enumerate(zero_sets):
            bits = z
            while bits:
                low = bits & -bits
                j = low.bit_length() - 1
                tight_on[j] = tight_on.get(j, 0) | (1 << i)
                bits ^= low

        new_rays = [rays[i] for i, v in enumerate(values) if v >= 0]
        new_zero = [zero_sets[i] | (1 << k) if values[i] == 0 else zero_sets[i] for i, v in enumerate(values) if v >= 0]
        all_rays = (1 << len(rays)) - 1
        for i in positive:
            for j in negative:
                common = zero_sets[i] & zero_sets[j]
                if common.bit_count() < d - 2:
                    continue
                pair = (1 << i) | (1 << j)
                witness = all_rays
                bits = common
                while bits and witness != pair:
                    low = bits & -bits
                    witness &= tight_on[low.bit_length() - 1]
                    bits ^= low
                if witness != pair:
                    continue
                ray = [values[i] * y - values[j] * x for x, y in zip(rays[i], rays[j])]
                new_rays.append(_normalize_ray(ray))
                new_zero.append(common | (1 << k))
        rays, zero_sets = new_rays, new_zero

    finite = [r for r in rays if r[0] > 0]
    if finite and len(finite) < len(rays):
        raise UnboundedError("polytope is unbounded: its homogenized cone has rays at infinity")
    return VPolytope(P.dim, [tuple(Fraction(x, r[0]) for x in r[1:]) for r in finite])


# --- Extreme points and the Hadamard hull ---


def _in_hull(point: Labeling, others: list[Labeling], coords: list[int]) -> bool:
    """Exact LP feasibility: is point a convex combination of others on the given coordinates?"""
    m = len(others)
    a_eq = [tuple(ONE for _ in range(m))] + [tuple(q[v] for q in others) for v in coords]
    b_eq = [ONE] + [point[v] for v in coords]
    try:
        simplex_max(LPProblem([ZERO] * m, a_eq=a_eq, b_eq=b_eq))
    except InfeasibleError:
        return False
    return True


def extreme_points(points: Iterable[Labeling], dim: int | None = None) -> list[Labeling]:
    """The points that are not convex combinations of the others (duplicates merged)."""
    pts = sorted({tuple(p) for p in points})
    if dim is not None and any(len(p) != dim for p in pts):
        raise DimensionError(f"every point must have {dim} coordinates")
    if len(pts) <= 1:
        return pts
    d = len(pts[0])
    lo = [min(p[v] for p in pts) for v in range(d)]
    hi = [max(p[v] for p in pts) for v in range(d)]
    varying = [v for v in range(d) if lo[v] < hi[v]]

    kept = []
    for p in pts:
        pinned = [v for v in varying if p[v] == lo[v] or p[v] == hi[v]]
        free = [v for v in varying if lo[v] < p[v] < hi[v]]
        if not free:
            # A corner of the bounding box is the unique maximizer of a signed coordinate sum.
            kept.append(p)
            continue
        others = [q for q in pts if q != p and all(q[v] == p[v] for v in pinned)]
        if not others or not _in_hull(p, others, free):
            kept.append(p)
    return kept


def _hadamard(p: Labeling, q: Labeling, p_is_characteristic: bool) -> Labeling:
    if p_is_characteristic:
        return tuple(b if a else ZERO for a, b in zip(p, q))
    return tuple(a * b for a, b in zip(p, q))


def hadamard_hull(P: VPolytope, Q: VPolytope) -> VPolytope:
    """Extreme points of conv{p ∘ q : p vertex of P, q vertex of Q}."""
    if P.dim != Q.dim:
        raise DimensionError(f"cannot multiply polytopes of dimension {P.dim} and {Q.dim}")
    products = set()
    for p in P.vertices:
        flag = all(x == 0 or x == 1 for x in p)
        for q in Q.vertices:
            products.add(_hadamard(p, q, flag))
    return VPolytope.hull(P.dim, products)


# --- STAB / QSTAB / HSTAB vertex sets ---


def stab_vertices(G: ExclusivityGraph, cap: int | None = None) -> VPolytope:
    return VPolytope(G.n, enumerate_stable_sets(G, cap))


def qstab_vertices(G: ExclusivityGraph) -> VPolytope:
    return vertex_enumeration(qstab_h(G))


def hstab_vertices(G: ExclusivityGraph, cap: int | None = None) -> VPolytope:
    """Vertices of STAB(G_A) ⊙ QSTAB(G_B).

    Maximal stable sets of G_A generate the same hull as all of them: for S ⊆ S',
    χ_S∘ω = χ_S'∘(χ_S∘ω) and χ_S∘ω stays in the down-closed QSTAB(G_B).
    """
    cap = settings.HSTAB_CAP if cap is None else cap
    if G.n > cap:
        raise CapExceededError("HSTAB vertex enumeration", G.n, cap)
    a_side = VPolytope(G.n, [characteristic(G.n, s) for s in maximal_stable_sets(G.side_graph("A"))])
    b_side = qstab_vertices(G.side_graph("B"))
    logger.debug(f"   -> HSTAB from {len(a_side)} A-side sets x {len(b_side)} QSTAB(G_B) vertices")
    return hadamard_hull(a_side, b_side)


VERTEX_BUILDERS: dict[str, Callable[[ExclusivityGraph], VPolytope]] = {
    "stab": stab_vertices,
    "qstab": qstab_vertices,
    "hstab": hstab_vertices,
}


# --- HSTAB membership ---


class MembershipTerm(NamedTuple):
    weight: Fraction
    stable_set: tuple[int, ...]  # maximal stable set S of G_A
    omega: Labeling  # point of QSTAB(G_B) with χ_S ∘ ω as the term


class MembershipResult(NamedTuple):
    member: bool
    decomposition: tuple[MembershipTerm, ...] = ()
    # (c, beta): c·h ≤ beta on all of HSTAB(G) while c·p > beta
    separator: tuple[Labeling, Fraction] | None = None


def membership_hstab(p: Sequence, G: ExclusivityGraph) -> MembershipResult:
    """Decide p ∈ HSTAB(G) exactly, with a convex decomposition or a separating hyperplane."""
    point: Labeling = tuple(to_fraction(x) for x in p)
    if len(point) != G.n:
        raise DimensionError(f"labeling has {len(point)} coordinates, graph has {G.n} vertices")
    if any(x < 0 for x in point):
        raise InputError("labeling must be nonnegative")

    g_a, g_b = G.side_graph("A"), G.side_graph("B")
    support = [v for v in range(G.n) if point[v]]

    # One-term certificate: p = χ_S ∘ p.
    if g_a.is_stable(support) and qstab_h(g_b).satisfied_by(point):
        S = extend_to_maximal_stable(g_a, support)
        return MembershipResult(True, (MembershipTerm(ONE, S, point),))

    # Disjunctive LP over maximal stable sets of G_A, cut down to the support.
    in_support = set(support)
    blocks: dict[tuple[int, ...], tuple[int, ...]] = {}
    for S in maximal_stable_sets(g_a):
        T = tuple(v for v in S if v in in_support)
        blocks.setdefault(T, S)
    trimmed = [T for T in blocks if T and not any(set(T) < set(U) for U in blocks)]
    if not trimmed:
        trimmed = [()]

    columns: list[tuple[str, int, int]] = []  # ("lam", block, -1) or ("y", block, vertex)
    for b, T in enumerate(trimmed):
        columns.append(("lam", b, -1))
        columns.extend(("y", b, v) for v in T)
    index = {c: j for j, c in enumerate(columns)}
    width = len(columns)

    a_eq, b_eq = [], []
    row = [ZERO] * width
    for b in range(len(trimmed)):
        row[index[("lam", b, -1)]] = ONE
    a_eq.append(row)
    b_eq.append(ONE)
    for v in support:
        row = [ZERO] * width
        for b, T in enumerate(trimmed):
            if v in T:
                row[index[("y", b, v)]] = ONE
        a_eq.append(row)
        b_eq.append(point[v])

    a_ub = []
    for b, T in enumerate(trimmed):
        if not T:
            continue
        local = g_b.induced(T)
        for clique in enumerate_maximal_cliques(local):
            row = [ZERO] * width
            row[index[("lam", b, -1)]] = -ONE
            for i in clique:
                row[index[("y", b, T[i])]] = ONE
            a_ub.append(row)

    problem = LPProblem([ZERO] * width, a_ub, [ZERO] * len(a_ub), a_eq, b_eq)
    try:
        solution = simplex_max(problem)
    except InfeasibleError as e:
        z = e.certificate
        z_eq = z[len(a_ub):]
        beta = z_eq[0]
        c = [ZERO] * G.n
        for k, v in enumerate(support):
            c[v] = -z_eq[k + 1]
        if not sum(ci * xi for ci, xi in zip(c, point)) > beta:
            raise SolverError("Farkas certificate does not separate the point")
        return MembershipResult(False, separator=(tuple(c), beta))

    terms = []
    x = solution.x
    for b, T in enumerate(trimmed):
        lam = x[index[("lam", b, -1)]]
        if lam <= 0:
            continue
        omega = [ZERO] * G.n
        for v in T:
            omega[v] = x[index[("y", b, v)]] / lam
        terms.append(MembershipTerm(lam, blocks[T] if T in blocks else (), tuple(omega)))
    return MembershipResult(True, tuple(terms))


# --- Product labelings ---


def pr_box(outcomes: Sequence[int], settings_: Sequence[int]) -> Fraction:
    """PR box on two dichotomic parties: 1/2 when b1 ⊕ b2 = y1·y2."""
    (b1, b2), (y1, y2) = outcomes, settings_
    return Fraction(1, 2) if (b1 ^ b2) == (y1 & y2) else ZERO


def product_labeling(
    G: ExclusivityGraph,
    scenario: HybridScenario,
    a_part: Callable[[tuple[int, ...], tuple[int, ...]], Fraction],
    b_part: Callable[[tuple[int, ...], tuple[int, ...]], Fraction],
) -> Labeling:
    """Labeling p_v = a_part(A-side event) · b_part(B-side event) on a scenario graph's vertices."""
    if G.labels is None:
        raise InputError("product labelings need a scenario-built graph")
    out = []
    for e in G.labels:
        a_o = tuple(e.outcomes[i] for i in scenario.a_side)
        a_s = tuple(e.settings[i] for i in scenario.a_side)
        b_o = tuple(e.outcomes[i] for i in scenario.b_side)
        b_s = tuple(e.settings[i] for i in scenario.b_side)
        out.append(to_fraction(a_part(a_o, a_s)) * to_fraction(b_part(b_o, b_s)))
    return tuple(out)

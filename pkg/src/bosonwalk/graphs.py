"""Graph topologies as chirality-indexed decompositions of an adjacency matrix.

A walk graph is described by splitting the (undirected) adjacency matrix into
``d`` directed components, one per coin chirality.  Components are stored as
explicit directed edge lists with 1-based vertex labels, and come with a
pairing declaration marking which components are mutually transposed (a
self-paired component must be symmetric, like the antipodal matching of the
circulant ten-vertex graph).

Built-in topologies:

``cycle``
    M-cycle, d=2.  Component 1 walks counterclockwise (mu -> mu+1 mod M),
    component 2 is its transpose.
``double_hexagon``
    Two hexagons sharing one edge, M=10, d=2.  Component 1 carries the cyclic
    orientation of both hexagons (so the shared edge {1,6} appears in both
    directions), component 2 is its transpose.
``petersen_circulant``
    Ten vertices, d=4, edges defined by circulant label differences -1, +1,
    -5, +5 (mod 10).  Components 3 and 4 are both the (symmetric) antipodal
    matching.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Edge",
    "GraphSpec",
    "GraphFormatError",
    "GraphValidationError",
    "build_named",
    "load_graph",
    "save_graph",
    "graph_document",
    "validate_decomposition",
    "NAMED_GRAPHS",
]

Edge = tuple[int, int]

NAMED_GRAPHS = ("cycle", "double_hexagon", "petersen_circulant")


class GraphFormatError(ValueError):
    """Raised when a graph document does not conform to the file schema."""


class GraphValidationError(ValueError):
    """Raised when a structurally valid document violates a graph invariant.

    Attributes
    ----------
    violations : list[str]
        One entry per violated invariant, naming the offending edge or
        component.
    """

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


@dataclass(frozen=True)
class GraphSpec:
    """A graph given as directed adjacency components, one per chirality.

    Parameters
    ----------
    n_vertices : int
        Number of vertices M; labels are 1..M.
    coin_order : int
        Number of components d (= coin order).
    components : tuple[tuple[Edge, ...], ...]
        d edge lists; component k holds ordered pairs (mu, nu) meaning a
        directed edge mu -> nu.  Edges are kept sorted lexicographically.
    pairing : tuple[tuple[int, int], ...]
        1-based component index pairs (k, k') declared mutually transposed.
    name : str or None
        Optional builder name, recorded for provenance.
    """

    n_vertices: int
    coin_order: int
    components: tuple[tuple[Edge, ...], ...]
    pairing: tuple[tuple[int, int], ...]
    name: str | None = None

    def component_matrix(self, k: int) -> np.ndarray:
        """Dense 0/1 matrix A^k with A[nu-1, mu-1] = 1 for each edge mu -> nu."""
        a = np.zeros((self.n_vertices, self.n_vertices), dtype=np.int8)
        for mu, nu in self.components[k - 1]:
            a[nu - 1, mu - 1] = 1
        return a

    def undirected_adjacency(self) -> np.ndarray:
        """Entrywise max of all components (the undirected underlying graph)."""
        a = np.zeros((self.n_vertices, self.n_vertices), dtype=np.int8)
        for k in range(1, self.coin_order + 1):
            np.maximum(a, self.component_matrix(k), out=a)
        return a


def _sorted_edges(edges) -> tuple[Edge, ...]:
    return tuple(sorted((int(mu), int(nu)) for mu, nu in edges))


def _transposed(edges: tuple[Edge, ...]) -> tuple[Edge, ...]:
    return _sorted_edges((nu, mu) for mu, nu in edges)


def build_named(name: str, n_vertices: int) -> GraphSpec:
    """Construct one of the built-in topologies.

    Parameters
    ----------
    name : str
        One of ``cycle``, ``double_hexagon``, ``petersen_circulant``.
    n_vertices : int
        Vertex count M.  Must be >= 3 for the cycle and exactly 10 for the
        other two topologies.

    Returns
    -------
    GraphSpec

    Raises
    ------
    ValueError
        Unknown name, or M incompatible with the named topology.
    """
    m = int(n_vertices)
    if name == "cycle":
        if m < 3:
            raise ValueError(f"cycle needs at least 3 vertices, got {m}")
        forward = _sorted_edges((mu, mu % m + 1) for mu in range(1, m + 1))
        return GraphSpec(
            n_vertices=m,
            coin_order=2,
            components=(forward, _transposed(forward)),
            pairing=((1, 2),),
            name="cycle",
        )
    if name == "double_hexagon":
        if m != 10:
            raise ValueError(f"double_hexagon is defined on 10 vertices, got {m}")
        hex_a = [(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 1)]
        hex_b = [(1, 6), (6, 7), (7, 8), (8, 9), (9, 10), (10, 1)]
        forward = _sorted_edges(hex_a + hex_b)
        return GraphSpec(
            n_vertices=10,
            coin_order=2,
            components=(forward, _transposed(forward)),
            pairing=((1, 2),),
            name="double_hexagon",
        )
    if name == "petersen_circulant":
        if m != 10:
            raise ValueError(f"petersen_circulant is defined on 10 vertices, got {m}")
        # Chirality k moves by a fixed vertex-label difference (mod 10):
        # +1, -1, +5, -5.  The +5 and -5 moves coincide (antipodal matching),
        # so components 3 and 4 share the same symmetric edge set.
        components = tuple(
            _sorted_edges((mu, (mu - 1 + diff) % 10 + 1) for mu in range(1, 11))
            for diff in (1, -1, 5, -5)
        )
        return GraphSpec(
            n_vertices=10,
            coin_order=4,
            components=components,
            pairing=((1, 2), (3, 4)),
            name="petersen_circulant",
        )
    raise ValueError(f"unknown graph name {name!r}; expected one of {NAMED_GRAPHS}")


def validate_decomposition(g: GraphSpec, strict: bool = False) -> list[str]:
    """Check the decomposition invariants; return one entry per violation.

    Checks: edge endpoints in 1..M, no self-loops, symmetric undirected
    union, every declared pair exactly transposed.  With ``strict=True`` each
    component is additionally required to be a partial permutation (at most
    one outgoing and one incoming edge per vertex); built-in permutation
    topologies satisfy it, but any d=2 split of a degree-3 vertex (the double
    hexagon) cannot.

    Violations are data, not errors: an empty list means valid.
    """
    report: list[str] = []
    m = g.n_vertices
    if m < 1:
        report.append(f"vertex count must be positive, got {m}")
    if g.coin_order < 1:
        report.append(f"coin order must be positive, got {g.coin_order}")
    if len(g.components) != g.coin_order:
        report.append(
            f"expected {g.coin_order} components, got {len(g.components)}"
        )

    for k, edges in enumerate(g.components, start=1):
        seen: set[Edge] = set()
        for mu, nu in edges:
            if not (1 <= mu <= m and 1 <= nu <= m):
                report.append(f"component {k}: edge {mu}->{nu} leaves 1..{m}")
            elif mu == nu:
                report.append(f"component {k}: self-loop {mu}->{nu}")
            if (mu, nu) in seen:
                report.append(f"component {k}: duplicate edge {mu}->{nu}")
            seen.add((mu, nu))

    if not report:
        union = g.undirected_adjacency()
        if not np.array_equal(union, union.T):
            rows, cols = np.nonzero(union != union.T)
            mu, nu = int(cols[0]) + 1, int(rows[0]) + 1
            report.append(f"undirected union not symmetric near edge {mu}->{nu}")
        for k, k2 in g.pairing:
            if not (1 <= k <= g.coin_order and 1 <= k2 <= g.coin_order):
                report.append(f"pair ({k},{k2}) references a missing component")
                continue
            if set(g.components[k - 1]) != {
                (nu, mu) for mu, nu in g.components[k2 - 1]
            }:
                report.append(f"pair ({k},{k2}) not transposed")
        if strict:
            for k, edges in enumerate(g.components, start=1):
                outs = [mu for mu, _ in edges]
                ins = [nu for _, nu in edges]
                for v in range(1, m + 1):
                    if outs.count(v) > 1:
                        report.append(
                            f"component {k}: vertex {v} has {outs.count(v)} outgoing edges"
                        )
                    if ins.count(v) > 1:
                        report.append(
                            f"component {k}: vertex {v} has {ins.count(v)} incoming edges"
                        )
    return report


def graph_document(g: GraphSpec) -> dict:
    """Canonical file document for a GraphSpec (components by index, edges sorted)."""
    doc = {
        "M": g.n_vertices,
        "d": g.coin_order,
        "components": [[list(e) for e in edges] for edges in g.components],
        "pairing": [list(p) for p in g.pairing],
    }
    if g.name is not None:
        doc["name"] = g.name
    return doc


def load_graph(source) -> GraphSpec:
    """Parse and validate a graph document.

    Parameters
    ----------
    source : dict, str or Path
        Either an already-parsed document or a path to a JSON file with
        fields {M, d, components, pairing, name?}.

    Raises
    ------
    GraphFormatError
        Malformed document (missing/ill-typed fields).
    GraphValidationError
        Well-formed document violating a decomposition invariant; the
        exception carries the validation report.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise GraphFormatError(f"not valid JSON: {exc}") from exc
    else:
        doc = source
    if not isinstance(doc, dict):
        raise GraphFormatError("graph document must be a JSON object")
    for key in ("M", "d", "components", "pairing"):
        if key not in doc:
            raise GraphFormatError(f"graph document missing field {key!r}")
    try:
        m = int(doc["M"])
        d = int(doc["d"])
        components = tuple(_sorted_edges(edges) for edges in doc["components"])
        pairing = tuple((int(k), int(k2)) for k, k2 in doc["pairing"])
    except (TypeError, ValueError) as exc:
        raise GraphFormatError(f"malformed graph document: {exc}") from exc
    name = doc.get("name")
    g = GraphSpec(
        n_vertices=m,
        coin_order=d,
        components=components,
        pairing=pairing,
        name=str(name) if name is not None else None,
    )
    report = validate_decomposition(g)
    if report:
        raise GraphValidationError(report)
    return g


def save_graph(g: GraphSpec, path) -> None:
    """Write the canonical JSON document for ``g``."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_document(g), fh, indent=1)
        fh.write("\n")

"""Graph representation, Laplacians, and the shared eigendecomposition contract.

Everything downstream (defects, projections, pairings, benchmarks, finance)
builds on the two guarantees made here: Laplacians are exact row-sum-zero
symmetric matrices, and eigendecompositions are deterministic, including
eigenvector signs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DisconnectedGraph,
    NonFinite,
    NotSymmetric,
    ParseError,
    TooSmall,
    ValidationError,
)

SYMMETRY_RTOL = 1e-9
RECONSTRUCTION_RTOL = 1e-8


def _as_readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph: node labels plus a symmetric weight matrix.

    weights[i][j] == weights[j][i] exactly, zero diagonal, nonnegative entries.
    Instances are immutable and safe to share across threads.
    """

    labels: tuple[str, ...]
    weights: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        w = _as_readonly(self.weights)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        n = len(self.labels)
        if w.shape != (n, n):
            raise ValidationError(f"weight matrix {w.shape} does not match {n} labels")
        if not np.all(np.isfinite(w)):
            raise NonFinite("graph weights contain non-finite entries")
        if not np.array_equal(w, w.T):
            raise NotSymmetric("graph weights must be exactly symmetric")
        if np.any(np.diagonal(w) != 0.0):
            raise ValidationError("graph weights must have a zero diagonal")
        if np.any(w < 0.0):
            raise ValidationError("graph weights must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.labels)

    def edge_count(self) -> int:
        return int(np.count_nonzero(np.triu(self.weights, 1)))

    def edges(self) -> list[tuple[int, int, float]]:
        """Each undirected edge once, (i, j, weight) with i < j."""
        i_idx, j_idx = np.nonzero(np.triu(self.weights, 1))
        return [(int(i), int(j), float(self.weights[i, j])) for i, j in zip(i_idx, j_idx)]

    def subgraph(self, nodes: Sequence[int]) -> "Graph":
        idx = list(nodes)
        return Graph(
            labels=tuple(self.labels[i] for i in idx),
            weights=self.weights[np.ix_(idx, idx)],
        )


def graph_from_edges(
    labels: Sequence[str], edges: Iterable[tuple[int, int] | tuple[int, int, float]]
) -> Graph:
    """Build a Graph from (i, j) or (i, j, weight) index pairs."""
    n = len(labels)
    w = np.zeros((n, n))
    for edge in edges:
        if len(edge) == 2:
            i, j = edge  # type: ignore[misc]
            weight = 1.0
        else:
            i, j, weight = edge  # type: ignore[misc]
        if i == j:
            raise ValidationError(f"self-loop on node {i}")
        w[i, j] = weight
        w[j, i] = weight
    return Graph(labels=tuple(labels), weights=w)


def laplacian(g: Graph) -> np.ndarray:
    """L = D - A with D the diagonal of weighted degrees. Rows sum to zero."""
    a = g.weights
    return np.diag(a.sum(axis=1)) - a


def connected_components(g: Graph) -> list[list[int]]:
    """Components by traversal over nonzero weights, each sorted ascending."""
    n = g.n
    seen = [False] * n
    components = []
    for start in range(n):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        comp = []
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in np.nonzero(g.weights[u])[0]:
                v = int(v)
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        components.append(sorted(comp))
    return components


def is_connected(g: Graph) -> bool:
    if g.n == 0:
        return True
    return len(connected_components(g)[0]) == g.n


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues with orthonormal, sign-fixed eigenvector columns."""

    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "eigenvalues", _as_readonly(self.eigenvalues))
        object.__setattr__(self, "eigenvectors", _as_readonly(self.eigenvectors))


def symmetric_eig(m: np.ndarray) -> SpectralDecomposition:
    """Eigendecomposition of a symmetric matrix with a deterministic sign rule.

    Each eigenvector is flipped so its largest-magnitude entry is positive;
    ties go to the lowest index. Rejects asymmetric or non-finite input.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFinite("matrix contains non-finite entries")
    norm = np.linalg.norm(m)
    if np.linalg.norm(m - m.T) > SYMMETRY_RTOL * max(1.0, norm):
        raise NotSymmetric("matrix is not symmetric within tolerance")
    values, vectors = np.linalg.eigh((m + m.T) / 2.0)
    vectors = vectors.copy()
    for k in range(vectors.shape[1]):
        col = vectors[:, k]
        # np.argmax returns the first maximum, which is the tie rule we want.
        lead = int(np.argmax(np.abs(col)))
        if col[lead] < 0.0:
            vectors[:, k] = -col
    return SpectralDecomposition(eigenvalues=values, eigenvectors=vectors)


def fiedler_vector(g: Graph) -> np.ndarray:
    """Unit eigenvector of the second-smallest Laplacian eigenvalue.

    Requires a connected graph: with a repeated zero eigenvalue the second
    eigenvector is an arbitrary basis choice, so we fail loudly instead.
    """
    if g.n < 2:
        raise TooSmall(f"Fiedler vector needs at least 2 nodes, got {g.n}")
    if not is_connected(g):
        raise DisconnectedGraph("graph is disconnected; Fiedler vector undefined")
    decomp = symmetric_eig(laplacian(g))
    return np.array(decomp.eigenvectors[:, 1])


# Serialization. One header line fixing node order, then one line per edge:
#   #nodes: a,b,c
#   a<TAB>b<TAB>1.0
# Weights are written with repr() so parsing them back is exact.

def graph_to_text(g: Graph) -> str:
    for label in g.labels:
        if "," in label or "\t" in label or "\n" in label:
            raise ValidationError(f"label {label!r} contains a separator character")
    if len(set(g.labels)) != len(g.labels):
        raise ValidationError("duplicate node labels cannot be serialized")
    lines = ["#nodes: " + ",".join(g.labels)]
    for i, j, weight in g.edges():
        lines.append(f"{g.labels[i]}\t{g.labels[j]}\t{weight!r}")
    return "\n".join(lines) + "\n"


def graph_from_text(text: str) -> Graph:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#nodes: "):
        raise ParseError("line 1: expected '#nodes: <comma-separated labels>' header")
    labels = lines[0][len("#nodes: "):].split(",")
    if any(not s for s in labels):
        raise ParseError("line 1: empty node label")
    if len(set(labels)) != len(labels):
        raise ParseError("line 1: duplicate node label")
    index = {label: i for i, label in enumerate(labels)}
    n = len(labels)
    w = np.zeros((n, n))
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError(f"line {lineno}: expected 'label\\tlabel\\tweight'")
        a, b, weight_text = parts
        if a not in index:
            raise ParseError(f"line {lineno}: unknown node label {a!r}")
        if b not in index:
            raise ParseError(f"line {lineno}: unknown node label {b!r}")
        try:
            weight = float(weight_text)
        except ValueError:
            raise ParseError(f"line {lineno}: bad weight {weight_text!r}") from None
        i, j = index[a], index[b]
        if i == j:
            raise ParseError(f"line {lineno}: self-loop on {a!r}")
        if w[i, j] != 0.0:
            raise ParseError(f"line {lineno}: duplicate edge {a!r}-{b!r}")
        w[i, j] = weight
        w[j, i] = weight
    return Graph(labels=tuple(labels), weights=w)


def save_graph(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(graph_to_text(g))


def load_graph(path) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        return graph_from_text(fh.read())


# Dense symmetric matrices (projected Laplacians and the like) use their own
# headered text form so they are not mistaken for graphs or operators.

def matrix_to_text(m: np.ndarray) -> str:
    m = np.asarray(m, dtype=float)
    lines = [f"#matrix n: {m.shape[0]}"]
    for row in m:
        lines.append(" ".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def matrix_from_text(text: str) -> np.ndarray:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or not lines[0].startswith("#matrix n: "):
        raise ParseError("expected '#matrix n: N' header")
    try:
        n = int(lines[0][len("#matrix n: "):])
    except ValueError:
        raise ParseError("bad size in matrix header") from None
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            row = [float(x) for x in line.split()]
        except ValueError:
            raise ParseError(f"line {lineno}: bad matrix entry") from None
        if len(row) != n:
            raise ParseError(f"line {lineno}: expected {n} entries, got {len(row)}")
        rows.append(row)
    if len(rows) != n:
        raise ParseError(f"expected {n} matrix rows, got {len(rows)}")
    return np.array(rows)


def save_matrix(m: np.ndarray, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(matrix_to_text(m))


def load_matrix(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        return matrix_from_text(fh.read())

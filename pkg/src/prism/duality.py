"""Involution validation, duality defect, and closed-form commutant projection.

The defect delta(L, P) = ||LP - PL||_F / ||L||_F measures how far L is from
commuting with a symmetric involution P. Projection onto the commutant of P
has the closed form L' = (L + PLP)/2: conjugation by an involution is itself
an involution on matrices, and averaging with the conjugate kills exactly the
anti-commuting part.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    NonFinite,
    NotInvolution,
    NotSymmetric,
    ParseError,
    ZeroMatrix,
)
from .graphs import _as_readonly, symmetric_eig

INVOLUTION_TOL = 1e-9
ZERO_NORM_TOL = 1e-12


@dataclass(frozen=True)
class DualityOperator:
    """A validated symmetric involution with cached eigenspace dimensions."""

    matrix: np.ndarray = field(repr=False)
    dim_plus: int
    dim_minus: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "matrix", _as_readonly(self.matrix))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def is_permutation(self) -> bool:
        m = self.matrix
        binary = np.all((m == 0.0) | (m == 1.0))
        return bool(binary and np.all(m.sum(axis=0) == 1.0) and np.all(m.sum(axis=1) == 1.0))


def validate_involution(m: np.ndarray) -> DualityOperator:
    """Check P = P^T and P^2 = I within 1e-9 and cache dim V+ / dim V-."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFinite("operator contains non-finite entries")
    if np.linalg.norm(m - m.T) > INVOLUTION_TOL:
        raise NotSymmetric("operator is not symmetric: ||P - P^T||_F exceeds 1e-9")
    residual = float(np.linalg.norm(m @ m - np.eye(m.shape[0])))
    if residual > INVOLUTION_TOL:
        raise NotInvolution(f"operator is not an involution: ||P^2 - I||_F = {residual:.3e}")
    eigenvalues = symmetric_eig(m).eigenvalues
    dim_plus = int(np.count_nonzero(eigenvalues > 0.0))
    dim_minus = m.shape[0] - dim_plus
    return DualityOperator(matrix=m, dim_plus=dim_plus, dim_minus=dim_minus)


def identity_operator(n: int) -> DualityOperator:
    return DualityOperator(matrix=np.eye(n), dim_plus=n, dim_minus=0)


def _check_dims(l_matrix: np.ndarray, p: DualityOperator) -> np.ndarray:
    l_matrix = np.asarray(l_matrix, dtype=float)
    if l_matrix.shape != p.matrix.shape:
        raise DimensionMismatch(
            f"matrix shape {l_matrix.shape} does not match operator shape {p.matrix.shape}"
        )
    return l_matrix


def duality_defect(l_matrix: np.ndarray, p: DualityOperator) -> float:
    """||LP - PL||_F / ||L||_F, in [0, 2]. Undefined (ZeroMatrix) for L = 0."""
    l_matrix = _check_dims(l_matrix, p)
    norm = float(np.linalg.norm(l_matrix))
    if norm <= ZERO_NORM_TOL:
        raise ZeroMatrix("duality defect is undefined for a zero matrix")
    commutator = l_matrix @ p.matrix - p.matrix @ l_matrix
    return float(np.linalg.norm(commutator) / norm)


@dataclass(frozen=True)
class ProjectionResult:
    """Projected Laplacian plus the defect and deformation bookkeeping."""

    projected: np.ndarray = field(repr=False)
    defect_before: float
    defect_after: float
    deformation: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "projected", _as_readonly(self.projected))


def commutant_projection(l_matrix: np.ndarray, p: DualityOperator) -> ProjectionResult:
    """Nearest (Frobenius) matrix to L that commutes with P: L' = (L + PLP)/2.

    defect_after is 0.0 when the projection itself is numerically zero; a
    zero matrix commutes with everything, but the defect ratio is undefined.
    """
    l_matrix = _check_dims(l_matrix, p)
    pm = p.matrix
    projected = (l_matrix + pm @ l_matrix @ pm) / 2.0
    projected = (projected + projected.T) / 2.0
    norm = float(np.linalg.norm(l_matrix))
    if norm <= ZERO_NORM_TOL:
        defect_before = 0.0
    else:
        defect_before = float(np.linalg.norm(l_matrix @ pm - pm @ l_matrix) / norm)
    projected_norm = float(np.linalg.norm(projected))
    if projected_norm <= ZERO_NORM_TOL:
        defect_after = 0.0
    else:
        defect_after = float(
            np.linalg.norm(projected @ pm - pm @ projected) / projected_norm
        )
    deformation = float(np.linalg.norm(projected - l_matrix))
    return ProjectionResult(
        projected=projected,
        defect_before=defect_before,
        defect_after=defect_after,
        deformation=deformation,
    )


# Serialization. Permutation involutions use a compact pairing list (each
# pair once, fixed points as i<TAB>i); anything else is a dense matrix. The
# first line disambiguates the two, since a small dense matrix would
# otherwise be indistinguishable from a pairing list.

def operator_to_text(p: DualityOperator) -> str:
    n = p.n
    if p.is_permutation():
        sigma = np.argmax(p.matrix, axis=1)
        lines = [f"#pairing n: {n}"]
        for i in range(n):
            j = int(sigma[i])
            if i <= j:
                lines.append(f"{i}\t{j}")
        return "\n".join(lines) + "\n"
    lines = [f"#dense n: {n}"]
    for row in p.matrix:
        lines.append(" ".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def operator_from_text(text: str) -> DualityOperator:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ParseError("empty operator file")
    header = lines[0]
    if header.startswith("#pairing n: "):
        try:
            n = int(header[len("#pairing n: "):])
        except ValueError:
            raise ParseError("bad node count in pairing header") from None
        sigma = [-1] * n
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError(f"line {lineno}: expected 'i\\tj'")
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(f"line {lineno}: bad index") from None
            if not (0 <= i < n and 0 <= j < n):
                raise ParseError(f"line {lineno}: index out of range")
            for k in (i, j):
                if sigma[k] not in (-1, (j if k == i else i)):
                    raise ParseError(f"line {lineno}: node {k} paired twice")
            sigma[i] = j
            sigma[j] = i
        if any(s < 0 for s in sigma):
            missing = next(k for k, s in enumerate(sigma) if s < 0)
            raise ParseError(f"pairing incomplete: node {missing} unassigned")
        m = np.zeros((n, n))
        for i, j in enumerate(sigma):
            m[i, j] = 1.0
        return validate_involution(m)
    if header.startswith("#dense n: "):
        try:
            n = int(header[len("#dense n: "):])
        except ValueError:
            raise ParseError("bad node count in dense header") from None
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
        return validate_involution(np.array(rows))
    raise ParseError("expected '#pairing n: N' or '#dense n: N' header")


def save_operator(p: DualityOperator, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(operator_to_text(p))


def load_operator(path) -> DualityOperator:
    with open(path, "r", encoding="utf-8") as fh:
        return operator_from_text(fh.read())

"""Exterior algebra over a fixed 7-dimensional coframe e^1,...,e^7.

Forms are stored sparsely as maps from strictly increasing multi-indices to
real coefficients.  Everything is frame-constant: wedge, interior product and
the Hodge star of a constant metric are plain multilinear algebra on the 2^7
coefficient slots.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

DIM = 7
AXES = tuple(range(1, DIM + 1))

#: all strictly increasing multi-indices, lexicographically ordered, per degree
INDICES = {k: tuple(itertools.combinations(AXES, k)) for k in range(DIM + 1)}
INDEX_POS = {k: {I: p for p, I in enumerate(INDICES[k])} for k in range(DIM + 1)}
TOP_INDEX = INDICES[DIM][0]


def check_multi_index(idx: tuple, degree: int | None = None) -> tuple:
    """Validate a multi-index: strictly increasing entries from 1..7."""
    idx = tuple(int(i) for i in idx)
    if degree is not None and len(idx) != degree:
        raise ValueError(f"multi-index {idx} has length {len(idx)}, expected {degree}")
    if any(i < 1 or i > DIM for i in idx):
        raise ValueError(f"multi-index {idx} has entries outside 1..{DIM}")
    if any(a >= b for a, b in zip(idx, idx[1:])):
        raise ValueError(f"multi-index {idx} is not strictly increasing")
    return idx


def perm_sign_to_sorted(seq: Iterable[int]) -> int:
    """Sign of the permutation sorting ``seq`` (entries assumed distinct)."""
    seq = list(seq)
    inv = 0
    for a in range(len(seq)):
        for b in range(a + 1, len(seq)):
            if seq[a] > seq[b]:
                inv += 1
    return -1 if inv % 2 else 1


def merge_indices(I: tuple, J: tuple) -> tuple[int, tuple | None]:
    """Sign and sorted union of two multi-indices; sign 0 if they intersect."""
    if set(I) & set(J):
        return 0, None
    cat = I + J
    return perm_sign_to_sorted(cat), tuple(sorted(cat))


def complement(I: tuple) -> tuple:
    return tuple(i for i in AXES if i not in I)


@dataclass(frozen=True)
class KForm:
    """Degree-k alternating form with sparse real coefficients.

    Coefficients are keyed by strictly increasing multi-indices; absent keys
    are zero.  Instances are immutable and hash-free value objects.
    """

    degree: int
    coeffs: Mapping[tuple, float] = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.degree <= DIM:
            raise ValueError(f"degree must be in 0..{DIM}, got {self.degree}")
        clean = {}
        for idx, c in self.coeffs.items():
            idx = check_multi_index(idx, self.degree)
            c = float(c)
            if not math.isfinite(c):
                raise ValueError(f"non-finite coefficient at {idx}")
            if c != 0.0:
                clean[idx] = c
        object.__setattr__(self, "coeffs", MappingProxyType(clean))

    # -- constructors -------------------------------------------------------
    @staticmethod
    def zero(degree: int) -> "KForm":
        return KForm(degree, {})

    @staticmethod
    def basis(idx: Iterable[int]) -> "KForm":
        idx = tuple(idx)
        return KForm(len(idx), {idx: 1.0})

    @staticmethod
    def scalar(value: float) -> "KForm":
        return KForm(0, {(): float(value)})

    @staticmethod
    def from_vector(degree: int, vec) -> "KForm":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (len(INDICES[degree]),):
            raise ValueError(f"expected vector of length {len(INDICES[degree])}")
        return KForm(degree, {I: v for I, v in zip(INDICES[degree], vec) if v != 0.0})

    # -- basic accessors ----------------------------------------------------
    def coeff(self, idx: Iterable[int]) -> float:
        return self.coeffs.get(tuple(idx), 0.0)

    def to_vector(self) -> np.ndarray:
        vec = np.zeros(len(INDICES[self.degree]))
        pos = INDEX_POS[self.degree]
        for idx, c in self.coeffs.items():
            vec[pos[idx]] = c
        return vec

    def max_abs(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def isclose(self, other: "KForm", tol: float = 1e-12) -> bool:
        if self.degree != other.degree:
            return False
        keys = set(self.coeffs) | set(other.coeffs)
        return all(abs(self.coeff(k) - other.coeff(k)) <= tol for k in keys)

    # -- linear structure ----------------------------------------------------
    def __add__(self, other: "KForm") -> "KForm":
        if self.degree != other.degree:
            raise ValueError("cannot add forms of different degree")
        keys = set(self.coeffs) | set(other.coeffs)
        return KForm(self.degree, {k: self.coeff(k) + other.coeff(k) for k in keys})

    def __sub__(self, other: "KForm") -> "KForm":
        return self + (-other)

    def __neg__(self) -> "KForm":
        return KForm(self.degree, {k: -c for k, c in self.coeffs.items()})

    def __mul__(self, scalar: float) -> "KForm":
        return KForm(self.degree, {k: c * scalar for k, c in self.coeffs.items()})

    __rmul__ = __mul__

    def __repr__(self):
        if not self.coeffs:
            return f"KForm({self.degree}, 0)"
        terms = " + ".join(
            f"{c:g}*e^{''.join(map(str, idx))}" if idx else f"{c:g}"
            for idx, c in sorted(self.coeffs.items())
        )
        return f"KForm({self.degree}, {terms})"

    # -- JSON ----------------------------------------------------------------
    def to_json_obj(self) -> list:
        return [{"idx": list(idx), "c": c} for idx, c in sorted(self.coeffs.items())]

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @staticmethod
    def from_json_obj(obj: list) -> "KForm":
        if not obj:
            raise ValueError("empty term list: degree cannot be inferred")
        coeffs: dict[tuple, float] = {}
        degree = len(obj[0]["idx"])
        for term in obj:
            idx = check_multi_index(tuple(term["idx"]), degree)
            coeffs[idx] = coeffs.get(idx, 0.0) + float(term["c"])
        return KForm(degree, coeffs)

    @staticmethod
    def from_json(text: str) -> "KForm":
        return KForm.from_json_obj(json.loads(text))


def as_vector7(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape != (DIM,):
        raise ValueError(f"expected a 7-vector, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("frame vector has non-finite components")
    return X


def frame_vector(i: int) -> np.ndarray:
    """The i-th frame vector e_i (1-based)."""
    X = np.zeros(DIM)
    X[i - 1] = 1.0
    return X


# ---------------------------------------------------------------------------
# wedge and contraction
# ---------------------------------------------------------------------------

def wedge(a: KForm, b: KForm) -> KForm:
    """Exterior product; returns the zero form when the degree exceeds 7."""
    deg = a.degree + b.degree
    if deg > DIM:
        return KForm.zero(DIM)
    out: dict[tuple, float] = {}
    for I, ca in a.coeffs.items():
        for J, cb in b.coeffs.items():
            s, K = merge_indices(I, J)
            if s:
                out[K] = out.get(K, 0.0) + s * ca * cb
    return KForm(deg, out)


def wedge_many(forms: Iterable[KForm]) -> KForm:
    forms = list(forms)
    acc = forms[0]
    for f in forms[1:]:
        acc = wedge(acc, f)
    return acc


def contract(X, a: KForm) -> KForm:
    """Interior product iota_X a for a frame vector X."""
    if a.degree == 0:
        raise ValueError("cannot contract scalar")
    X = as_vector7(X)
    out: dict[tuple, float] = {}
    for I, c in a.coeffs.items():
        for p, i in enumerate(I):
            xi = X[i - 1]
            if xi == 0.0:
                continue
            J = I[:p] + I[p + 1:]
            out[J] = out.get(J, 0.0) + ((-1) ** p) * xi * c
    return KForm(a.degree - 1, out)


# ---------------------------------------------------------------------------
# minor determinants, Hodge star, pullback
# ---------------------------------------------------------------------------

def _det_batched(m: np.ndarray) -> np.ndarray:
    """Determinants of a (..., k, k) stack; explicit formulas for k <= 3."""
    k = m.shape[-1]
    if k == 0:
        return np.ones(m.shape[:-2])
    if k == 1:
        return m[..., 0, 0]
    if k == 2:
        return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    if k == 3:
        return (
            m[..., 0, 0] * (m[..., 1, 1] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 1])
            - m[..., 0, 1] * (m[..., 1, 0] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 0])
            + m[..., 0, 2] * (m[..., 1, 0] * m[..., 2, 1] - m[..., 1, 1] * m[..., 2, 0])
        )
    return np.linalg.det(m)


def compound_matrix(M: np.ndarray, k: int) -> np.ndarray:
    """k-th compound of a 7x7 matrix: C[a, b] = det M[I_a, J_b] over k-subsets."""
    if k == 0:
        return np.ones((1, 1))
    idx = np.array(INDICES[k]) - 1  # (C, k)
    minors = M[idx[:, None, :, None], idx[None, :, None, :]]  # (C, C, k, k)
    return _det_batched(minors)


# complement position and sign tables: e^I wedge e^{I^c} = sign * e^{1..7}
_COMP_POS = {
    k: np.array([INDEX_POS[DIM - k][complement(I)] for I in INDICES[k]], dtype=int)
    for k in range(DIM + 1)
}
_COMP_SIGN = {
    k: np.array([perm_sign_to_sorted(I + complement(I)) for I in INDICES[k]], dtype=float)
    for k in range(DIM + 1)
}


def star_matrix(k: int, ginv: np.ndarray, sqrt_det: float, orientation: int = 1) -> np.ndarray:
    """Matrix of the Hodge star on degree-k coefficient vectors.

    Convention: *e^I = orientation * sign(I, I^c) * sqrt(det g)
    * det(g^{-1}[I, J]) e^{I^c}, summed over J; the fixed orientation is
    e^{1..7} positive (orientation=+1).
    """
    if k >= 4:
        # ** = +1 in dimension 7, so the star on degree k inverts the one on 7-k
        return np.linalg.inv(star_matrix(DIM - k, ginv, sqrt_det, orientation))
    gram = compound_matrix(ginv, k)  # (C, C)
    scaled = (orientation * sqrt_det) * (_COMP_SIGN[k][:, None] * gram)
    out = np.zeros((len(INDICES[DIM - k]), len(INDICES[k])))
    out[_COMP_POS[k], :] = scaled
    return out


def hodge_star(a: KForm, g) -> KForm:
    """Hodge star of ``a`` for a metric ``g`` (a Metric or a 7x7 SPD matrix)."""
    G = np.asarray(getattr(g, "G", g), dtype=float)
    orientation = int(getattr(g, "orientation", 1))
    if G.shape != (DIM, DIM):
        raise ValueError("metric must be 7x7")
    if not np.allclose(G, G.T, atol=1e-12 * max(1.0, abs(G).max())):
        raise ValueError("metric must be symmetric")
    ev = np.linalg.eigvalsh(G)
    if ev[0] <= 0:
        raise ValueError("metric must be positive definite")
    S = star_matrix(a.degree, np.linalg.inv(G), math.sqrt(float(np.linalg.det(G))), orientation)
    return KForm.from_vector(DIM - a.degree, S @ a.to_vector())


def pullback(a: KForm, A: np.ndarray) -> KForm:
    """Pullback of ``a`` under the frame change e^i -> sum_j A[i,j] e^j."""
    A = np.asarray(A, dtype=float)
    if A.shape != (DIM, DIM):
        raise ValueError("frame change must be 7x7")
    C = compound_matrix(A, a.degree)  # C[a_pos, b_pos] = det A[I_a, J_b]
    return KForm.from_vector(a.degree, a.to_vector() @ C)

"""Nilpotent Lie algebras via their Chevalley-Eilenberg differential.

An algebra is stored as the seven 2-forms d e^k.  The bracket follows the
convention d alpha(X, Y) = -alpha([X, Y]); all quantities computed here and in
the curvature module depend only on d, so the sign choice is internal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .config import default_tol
from .forms import DIM, INDEX_POS, INDICES, KForm, wedge


@dataclass(frozen=True)
class LieAlgebra:
    """7-dimensional Lie algebra given by the degree-1 differential d e^k."""

    name: str
    d1: tuple[KForm, ...]

    def __post_init__(self):
        if len(self.d1) != DIM:
            raise ValueError("d1 must list d e^k for k = 1..7")
        for f in self.d1:
            if f.degree != 2:
                raise ValueError("each d e^k must be a 2-form")
        object.__setattr__(self, "d1", tuple(self.d1))

    @cached_property
    def bracket(self) -> np.ndarray:
        """Structure tensor C with [e_i, e_j] = sum_k C[i,j,k] e_k (0-based)."""
        C = np.zeros((DIM, DIM, DIM))
        for k, f in enumerate(self.d1):
            for (i, j), c in f.coeffs.items():
                C[i - 1, j - 1, k] = -c
                C[j - 1, i - 1, k] = c
        return C

    def d_matrix(self, k: int) -> np.ndarray:
        """Matrix of d: Lambda^k -> Lambda^{k+1} on coefficient vectors."""
        return self._d_matrices[k]

    @cached_property
    def _d_matrices(self) -> dict[int, np.ndarray]:
        mats = {}
        for k in range(DIM):
            rows = len(INDICES[k + 1])
            cols = len(INDICES[k])
            M = np.zeros((rows, cols))
            for p, I in enumerate(INDICES[k]):
                M[:, p] = ce_differential(KForm.basis(I), self).to_vector()
            mats[k] = M
        return mats

    def nilpotency_step(self, tol: float | None = None) -> int:
        """s such that the lower central series vanishes at step s (abelian: 1)."""
        tol = default_tol() if tol is None else tol
        C = self.bracket
        V = np.eye(DIM)
        step = 0
        while step <= DIM - 1:
            W = np.einsum("ijk,ja->iak", C, V).reshape(DIM * V.shape[1], DIM).T
            # column space of all brackets [g, V]
            u, s, _ = np.linalg.svd(W, full_matrices=False)
            rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 0.0)))
            if rank == 0:
                return step + 1
            V = u[:, :rank]
            step += 1
        raise ValueError(f"{self.name}: lower central series does not terminate")

    def is_nilpotent(self) -> bool:
        try:
            self.nilpotency_step()
            return True
        except ValueError:
            return False


def algebra(name: str, d: dict[int, dict[tuple, float]]) -> LieAlgebra:
    """Build an algebra from structure equations d e^k = sum c * e^{ij}."""
    d1 = []
    for k in range(1, DIM + 1):
        d1.append(KForm(2, dict(d.get(k, {}))))
    return LieAlgebra(name, tuple(d1))


def ce_differential(a: KForm, L: LieAlgebra) -> KForm:
    """Chevalley-Eilenberg differential, the antiderivation extending d e^k."""
    if a.degree >= DIM:
        return KForm.zero(DIM)  # encode the zero 8-form as a zero top form
    out = KForm.zero(a.degree + 1)
    for I, c in a.coeffs.items():
        if a.degree == 0:
            continue  # d of constants vanishes
        for p, i in enumerate(I):
            rest = I[:p] + I[p + 1:]
            term = wedge(L.d1[i - 1], KForm.basis(rest)) if rest else L.d1[i - 1]
            out = out + ((-1) ** p * c) * term
    return out


def d_squared_residual(L: LieAlgebra) -> float:
    """max_k ||d(d e^k)||_inf; zero exactly when d^2 = 0 (Jacobi identity)."""
    return max(ce_differential(f, L).max_abs() for f in L.d1)


def closed_forms(L: LieAlgebra, k: int, tol: float = 1e-10) -> list[KForm]:
    """Orthonormal basis of ker(d: Lambda^k -> Lambda^{k+1}).

    Computed from the singular value decomposition of the differential's
    matrix; singular values below tol * (largest) count as zero.
    """
    if not 1 <= k <= DIM:
        raise ValueError("degree must be in 1..7")
    M = L.d_matrix(k)
    u, s, vt = np.linalg.svd(M)
    cutoff = tol * (s[0] if s.size and s[0] > 0 else 1.0)
    rank = int(np.sum(s > cutoff))
    null = vt[rank:].T  # (C(7,k), dim)
    return [KForm.from_vector(k, null[:, j]) for j in range(null.shape[1])]


def d_rank(L: LieAlgebra, k: int, tol: float = 1e-10) -> int:
    s = np.linalg.svd(L.d_matrix(k), compute_uv=False)
    cutoff = tol * (s[0] if s.size and s[0] > 0 else 1.0)
    return int(np.sum(s > cutoff))


def derivation_defect(M, L: LieAlgebra) -> np.ndarray:
    """Tensor M[x,y] - [Mx,y] - [x,My] over all frame pairs."""
    M = np.asarray(M, dtype=float)
    if M.shape != (DIM, DIM):
        raise ValueError("derivation candidate must be a 7x7 matrix")
    C = L.bracket
    return (
        np.einsum("ijm,km->ijk", C, M)
        - np.einsum("ai,ajk->ijk", M, C)
        - np.einsum("aj,iak->ijk", M, C)
    )


def is_derivation(M, L: LieAlgebra) -> float:
    """Max-norm of the derivation defect of M; 0 within tol iff a derivation."""
    return float(np.abs(derivation_defect(M, L)).max())


# ---------------------------------------------------------------------------
# JSON interchange
# ---------------------------------------------------------------------------

def algebra_to_json_obj(L: LieAlgebra) -> dict:
    d = []
    for k, f in enumerate(L.d1, start=1):
        if f.coeffs:
            terms = [{"i": i, "j": j, "c": c} for (i, j), c in sorted(f.coeffs.items())]
            d.append({"k": k, "terms": terms})
    return {"name": L.name, "d": d}


def algebra_from_json_obj(obj: dict, validate: bool = True, tol: float | None = None) -> LieAlgebra:
    """Parse {"name", "d"} structure equations; optionally enforce d^2 = 0."""
    tol = default_tol() if tol is None else tol
    d: dict[int, dict[tuple, float]] = {}
    for entry in obj.get("d", []):
        k = int(entry["k"])
        if not 1 <= k <= DIM:
            raise ValueError(f"d e^{k}: index out of range")
        terms = d.setdefault(k, {})
        for t in entry["terms"]:
            i, j, c = int(t["i"]), int(t["j"]), float(t["c"])
            if not (1 <= i < j <= DIM):
                raise ValueError(f"d e^{k}: bad index pair ({i},{j})")
            terms[(i, j)] = terms.get((i, j), 0.0) + c
    L = algebra(str(obj.get("name", "user")), d)
    if validate:
        worst = None
        for k, f in enumerate(L.d1, start=1):
            dd = ce_differential(f, L)
            for idx, c in dd.coeffs.items():
                if abs(c) > tol and (worst is None or abs(c) > abs(worst[2])):
                    worst = (k, idx, c)
        if worst is not None:
            k, idx, c = worst
            raise ValueError(
                f"d^2 != 0: d(d e^{k}) has component {c:.3g} * e^{{{''.join(map(str, idx))}}}"
            )
    return L


def algebra_from_json(text: str, validate: bool = True) -> LieAlgebra:
    return algebra_from_json_obj(json.loads(text), validate=validate)

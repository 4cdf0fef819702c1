"""Metric, volume, positivity and Hodge Laplacian attached to a G2 3-form.

The defining identity is g(X,Y) vol = (1/6) iota_X phi ^ iota_Y phi ^ phi.
Writing B_ij for the frame components of the right-hand side against e^{1..7},
the normalized solution is g = (det B)^{-1/9} B with vol = (det B)^{1/9};
when det B < 0 the orientation flips to -e^{1..7} and g = -|det B|^{-1/9} B.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .config import default_tol
from .forms import (
    DIM,
    INDEX_POS,
    INDICES,
    KForm,
    complement,
    contract,
    frame_vector,
    merge_indices,
    perm_sign_to_sorted,
    star_matrix,
    wedge,
)
from .liealg import LieAlgebra, ce_differential

#: eigenvalue threshold below which a normalized candidate metric is rejected
POSITIVITY_EIG_MIN = 1e-10


class DegenerateFormError(ValueError):
    """Raised when det B = 0 and no metric can be extracted."""


class NonPositiveFormError(ValueError):
    """Raised when the normalized bilinear form is not positive definite."""


@dataclass(frozen=True)
class Metric:
    """Inner product on the frame with its volume normalization."""

    G: np.ndarray
    vol_coeff: float
    orientation: int = 1

    def __post_init__(self):
        G = np.asarray(self.G, dtype=float)
        if G.shape != (DIM, DIM):
            raise ValueError("metric must be 7x7")
        if not np.allclose(G, G.T, atol=1e-9 * max(1.0, float(np.abs(G).max()))):
            raise ValueError("metric must be symmetric")
        if np.linalg.eigvalsh(G)[0] <= 0:
            raise ValueError("metric must be positive definite")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        G = 0.5 * (G + G.T)
        G.setflags(write=False)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "vol_coeff", float(self.vol_coeff))

    @property
    def ginv(self) -> np.ndarray:
        return np.linalg.inv(self.G)

    @property
    def volume_form(self) -> KForm:
        return KForm(DIM, {INDICES[DIM][0]: self.orientation * self.vol_coeff})

    def inner(self, X, Y) -> float:
        return float(np.asarray(X) @ self.G @ np.asarray(Y))

    def to_json_obj(self) -> dict:
        return {"G": [float(x) for x in self.G.reshape(-1)], "vol": self.vol_coeff}

    @staticmethod
    def from_json_obj(obj: dict) -> "Metric":
        G = np.array(obj["G"], dtype=float).reshape(DIM, DIM)
        return Metric(G, float(obj["vol"]))


def identity_metric() -> Metric:
    return Metric(np.eye(DIM), 1.0)


# ---------------------------------------------------------------------------
# dense tables for the cubic form B(phi) and the flow pipeline
# ---------------------------------------------------------------------------

N2, N3, N4, N5 = (len(INDICES[k]) for k in (2, 3, 4, 5))


@lru_cache(maxsize=1)
def _b_tables():
    """Constant tensors turning B into a few einsums over the 35-vector."""
    # contraction by each frame vector: (7, 21, 35)
    M = np.zeros((DIM, N2, N3))
    for p3, I in enumerate(INDICES[3]):
        for pos, i in enumerate(I):
            J = I[:pos] + I[pos + 1:]
            M[i - 1, INDEX_POS[2][J], p3] += (-1.0) ** pos
    # wedge of two 2-forms into a 4-form: (35, 21, 21)
    W = np.zeros((N4, N2, N2))
    for pa, Ia in enumerate(INDICES[2]):
        for pb, Ib in enumerate(INDICES[2]):
            s, K = merge_indices(Ia, Ib)
            if s:
                W[INDEX_POS[4][K], pa, pb] += s
    # pairing of a 4-form with the complementary 3-slot of phi
    comp_pos = np.array([INDEX_POS[3][complement(I)] for I in INDICES[4]], dtype=int)
    comp_sign = np.array(
        [perm_sign_to_sorted(I + complement(I)) for I in INDICES[4]], dtype=float
    )
    return M, W, comp_pos, comp_sign


def _bilinear_b_vec(c: np.ndarray) -> np.ndarray:
    """B matrix of the 3-form with dense coefficient vector c."""
    M, W, comp_pos, comp_sign = _b_tables()
    A = M @ c                                   # (7, 21): iota_{e_i} phi
    T = np.einsum("duv,iu->idv", W, A)          # (35, 7, 21)
    Cw = np.einsum("idv,jv->dij", T, A)         # (35, 7, 7): (iota_i ^ iota_j)
    p = comp_sign * c[comp_pos]                 # top part of (4-form ^ phi)
    return np.einsum("dij,d->ij", Cw, p) / 6.0


def bilinear_B(phi: KForm) -> np.ndarray:
    """Frame components B_ij with iota_i phi ^ iota_j phi ^ phi = 6 B_ij e^{1..7}."""
    if phi.degree != 3:
        raise ValueError("B is defined for 3-forms")
    return _bilinear_b_vec(phi.to_vector())


def _metric_data_from_b(B: np.ndarray):
    detB = float(np.linalg.det(B))
    if abs(detB) < 1e-300:
        raise DegenerateFormError("degenerate 3-form")
    orient = 1 if detB > 0 else -1
    scale = abs(detB) ** (-1.0 / 9.0)
    G = orient * scale * B
    vol = abs(detB) ** (1.0 / 9.0)
    return G, vol, orient


def metric_from_g2(phi: KForm) -> Metric:
    """Riemannian metric induced by a positive 3-form via the volume identity."""
    B = bilinear_B(phi)
    G, vol, orient = _metric_data_from_b(B)
    ev = np.linalg.eigvalsh(G)
    if ev[0] <= POSITIVITY_EIG_MIN:
        raise NonPositiveFormError("non-positive G2 form")
    return Metric(G, vol, orient)


def is_positive(phi: KForm) -> bool:
    """True iff phi induces a genuine Riemannian metric."""
    if phi.degree != 3:
        raise ValueError("positivity is defined for 3-forms")
    try:
        metric_from_g2(phi)
        return True
    except (DegenerateFormError, NonPositiveFormError):
        return False


# ---------------------------------------------------------------------------
# Hodge Laplacian of closed forms
# ---------------------------------------------------------------------------


class LaplacianPipeline:
    """Dense evaluation of Delta phi = -d * d * phi for one algebra.

    All combinatorial tables and the algebra's differential matrices are
    precomputed; evaluation per 35-vector is a handful of small matrix
    products, which keeps the flow integrator fast.
    """

    def __init__(self, L: LieAlgebra):
        self.L = L
        self.D2 = L.d_matrix(2)   # Lambda^2 -> Lambda^3
        self.D3 = L.d_matrix(3)   # Lambda^3 -> Lambda^4
        self.D4 = L.d_matrix(4)   # Lambda^4 -> Lambda^5

    def metric_of(self, c: np.ndarray):
        B = _bilinear_b_vec(c)
        G, vol, orient = _metric_data_from_b(B)
        ev = np.linalg.eigvalsh(G)
        if ev[0] <= POSITIVITY_EIG_MIN:
            raise NonPositiveFormError("non-positive G2 form")
        return G, vol, orient

    def laplacian_vec(self, c: np.ndarray) -> np.ndarray:
        G, vol, orient = self.metric_of(c)
        ginv = np.linalg.inv(G)
        S3 = star_matrix(3, ginv, vol, orient)      # Lambda^3 -> Lambda^4
        S2 = star_matrix(2, ginv, vol, orient)      # Lambda^2 -> Lambda^5
        w5 = self.D4 @ (S3 @ c)
        w2 = np.linalg.solve(S2, w5)                # * on Lambda^5 inverts S2
        return -(self.D2 @ w2)

    def closedness_residual(self, c: np.ndarray) -> float:
        r = self.D3 @ c
        return float(np.abs(r).max()) if r.size else 0.0


_PIPELINES: dict[int, LaplacianPipeline] = {}


def pipeline_for(L: LieAlgebra) -> LaplacianPipeline:
    key = id(L)
    pipe = _PIPELINES.get(key)
    if pipe is None or pipe.L is not L:
        pipe = LaplacianPipeline(L)
        _PIPELINES[key] = pipe
    return pipe


def laplacian_closed(phi: KForm, L: LieAlgebra, tol: float | None = None) -> KForm:
    """Hodge Laplacian of a closed positive 3-form, computed as -d * d * phi."""
    tol = default_tol() if tol is None else tol
    if phi.degree != 3:
        raise ValueError("Laplacian is implemented for 3-forms")
    residual = ce_differential(phi, L).max_abs()
    if residual > tol * max(1.0, phi.max_abs()):
        raise ValueError("Laplacian contract requires closed form")
    pipe = pipeline_for(L)
    return KForm.from_vector(3, pipe.laplacian_vec(phi.to_vector()))

"""Levi-Civita connection, curvature tensors and the nilsoliton solver.

Sign conventions are fixed so that the §-standard tables hold: with
R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_{[X,Y]} Z the stored
lowered tensor is R_{ijkl} = -g(R(e_i,e_j)e_k, e_l) and
Ric_{jl} = g^{im} R_{mjil}.  For a nilpotent algebra with orthonormal frame
this yields ric(X) = -1/2 sum |[X,e_i]|^2 + 1/4 sum <[e_i,e_j],X>^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import default_tol
from .forms import DIM
from .g2 import Metric, identity_metric
from .liealg import LieAlgebra, derivation_defect, is_derivation


@dataclass(frozen=True)
class Connection:
    """Christoffel data Gamma[i,j,k]: e_k-component of nabla_{e_i} e_j."""

    Gamma: np.ndarray
    metric: Metric


@dataclass(frozen=True)
class RiemannTensor:
    R: np.ndarray  # fully lowered, (7,7,7,7)

    def sup_norm(self) -> float:
        return float(np.abs(self.R).max())


@dataclass(frozen=True)
class RicciTensor:
    Ric: np.ndarray   # symmetric bilinear components
    endo: np.ndarray  # mixed-index endomorphism g^{-1} Ric


@dataclass(frozen=True)
class SolitonCertificate:
    """Witness for Ric = lambda I + D with D a derivation."""

    lam: float
    D: np.ndarray
    residual: float
    feasible: bool

    def to_json_obj(self) -> dict:
        return {
            "lambda": self.lam,
            "D": [float(x) for x in np.asarray(self.D).reshape(-1)],
            "residual": self.residual,
            "feasible": self.feasible,
        }


def levi_civita(L: LieAlgebra, g: Metric) -> Connection:
    """Koszul formula on a left-invariant frame.

    2 g(nabla_X Y, Z) = g([X,Y],Z) - g([Y,Z],X) + g([Z,X],Y).
    """
    C = L.bracket
    G = g.G
    Cg = np.einsum("ijm,mk->ijk", C, G)  # g([e_i,e_j], e_k)
    rhs = Cg - np.einsum("jki->ijk", Cg) + np.einsum("kij->ijk", Cg)
    Gamma = 0.5 * np.einsum("mk,ijk->ijm", g.ginv, rhs)
    return Connection(Gamma, g)


def connection_residuals(conn: Connection, L: LieAlgebra) -> tuple[float, float]:
    """(metric compatibility, torsion) max-norm residuals of a connection."""
    Gamma, G = conn.Gamma, conn.metric.G
    # nabla g = 0: d/dt g(Y,Z) has no frame derivative, so compatibility reads
    # g(nabla_X Y, Z) + g(Y, nabla_X Z) = 0 componentwise
    t1 = np.einsum("ijm,mk->ijk", Gamma, G)
    compat = t1 + np.einsum("ikm,mj->ijk", Gamma, G)
    torsion = Gamma - np.einsum("jim->ijm", Gamma) - L.bracket
    return float(np.abs(compat).max()), float(np.abs(torsion).max())


def riemann(conn: Connection, L: LieAlgebra) -> RiemannTensor:
    """Fully lowered curvature tensor of a left-invariant connection."""
    Gamma = conn.Gamma
    C = L.bracket
    # operator part: nabla_i nabla_j e_k - nabla_j nabla_i e_k - nabla_[e_i,e_j] e_k
    op = (
        np.einsum("jkm,iml->ijkl", Gamma, Gamma)
        - np.einsum("ikm,jml->ijkl", Gamma, Gamma)
        - np.einsum("ijm,mkl->ijkl", C, Gamma)
    )
    R = -np.einsum("ijkm,ml->ijkl", op, conn.metric.G)
    return RiemannTensor(R)


def ricci(L: LieAlgebra, g: Metric) -> RicciTensor:
    """Ricci tensor from the full Riemann contraction Ric_jl = R^i_{jil}."""
    R = riemann(levi_civita(L, g), L).R
    Ric = np.einsum("im,mjil->jl", g.ginv, R)
    Ric = 0.5 * (Ric + Ric.T)
    return RicciTensor(Ric, g.ginv @ Ric)


def scalar_curvature(L: LieAlgebra, g: Metric) -> float:
    return float(np.trace(g.ginv @ ricci(L, g).Ric))


def certificate_residual(L: LieAlgebra, lam: float, D, g: Metric | None = None) -> float:
    """Combined residual of a claimed certificate: Ric-match and derivation."""
    g = identity_metric() if g is None else g
    D = np.asarray(D, dtype=float)
    endo = ricci(L, g).endo
    eq = float(np.abs(endo - lam * np.eye(DIM) - D).max())
    return max(eq, is_derivation(D, L))


def nilsoliton_solve(L: LieAlgebra, g: Metric, tol: float | None = None) -> SolitonCertificate:
    """Best (lambda, D) with Ric = lambda I + D and D closest to a derivation.

    D(lambda) = Ric - lambda I has derivation defect A + lambda C, affine in
    lambda (C is the bracket tensor), so the squared defect is an exactly
    minimizable quadratic.  The certificate is feasible iff the minimized
    defect vanishes within tol.
    """
    tol = default_tol() if tol is None else tol
    endo = ricci(L, g).endo
    C = L.bracket
    A = derivation_defect(endo, L)
    cc = float(np.sum(C * C))
    if cc == 0.0:
        lam = 0.0  # abelian: Ric = 0, D = 0
    else:
        lam = -float(np.sum(A * C)) / cc
    D = endo - lam * np.eye(DIM)
    residual = is_derivation(D, L)
    return SolitonCertificate(lam, D, residual, residual < tol)

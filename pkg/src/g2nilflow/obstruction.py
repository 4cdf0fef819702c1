"""Obstruction tests for closed G2 forms inducing a prescribed metric.

The closed 3-forms Z^3 are parametrized the way the case analyses do it:
free coefficients sit on early multi-indices and the pivoted (dependent)
coefficients are eliminated towards the lexicographic tail, which makes the
cubic obstruction polynomials directly comparable with the published
displays.  The feasibility search is numerical evidence only and its report
says so; a residual floor over N restarts certifies nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import least_squares

from .config import default_tol
from .forms import DIM, INDEX_POS, INDICES, KForm, as_vector7, contract, wedge
from .g2 import (
    DegenerateFormError,
    Metric,
    NonPositiveFormError,
    _bilinear_b_vec,
    _metric_data_from_b,
    bilinear_B,
    is_positive,
    metric_from_g2,
)
from .liealg import LieAlgebra, ce_differential, d_rank

N3 = len(INDICES[3])

#: weight of the non-positivity penalty in the constraint residual
PENALTY = 100.0
#: residual value reported for forms with degenerate B
DEGENERATE_SENTINEL = 1e6
#: optimizer-level feasibility tolerance; verified independently at 1e-9
FEASIBILITY_TOL = 1e-8
VERIFY_TOL = 1e-9


@dataclass(frozen=True)
class ClosedFamily:
    """Basis of Z^3(L) in free-coefficient form.

    basis[a] has coefficient 1 at free_indices[a], 0 at the other free
    indices, and the dependent tail filled in by the closure constraints.
    """

    algebra: LieAlgebra
    basis: tuple[KForm, ...]
    free_indices: tuple[tuple, ...]

    @property
    def dim(self) -> int:
        return len(self.basis)

    @cached_property
    def matrix(self) -> np.ndarray:
        if not self.basis:
            return np.zeros((N3, 0))
        return np.column_stack([b.to_vector() for b in self.basis])

    def form(self, c) -> KForm:
        return KForm.from_vector(3, self.matrix @ np.asarray(c, dtype=float))

    def encode(self, phi: KForm, tol: float = 1e-9) -> np.ndarray:
        """Coefficients of a closed form: read off the free slots, verify."""
        c = np.array([phi.coeff(idx) for idx in self.free_indices])
        if np.abs(self.matrix @ c - phi.to_vector()).max() > tol:
            raise ValueError("form is not in the closed family")
        return c


def closed_family(L: LieAlgebra, tol: float = 1e-10) -> ClosedFamily:
    """Solve d c = 0 by Gauss-Jordan elimination pivoting from the tail.

    Pivot columns are chosen right-to-left so the free coefficients are the
    lexicographically early ones, matching the generic-form displays; the
    rank is cross-checked against the singular values of d.
    """
    D = L.d_matrix(3).copy()  # 35 four-form rows, 35 three-form columns
    nrow, ncol = D.shape
    norm = np.abs(D).max()
    if norm == 0.0:
        basis = tuple(KForm.basis(I) for I in INDICES[3])
        return ClosedFamily(L, basis, tuple(INDICES[3]))
    cutoff = tol * norm
    pivots: list[tuple[int, int]] = []  # (row, col)
    used_rows: set[int] = set()
    for col in range(ncol - 1, -1, -1):
        cand = [r for r in range(nrow) if r not in used_rows and abs(D[r, col]) > cutoff]
        if not cand:
            continue
        r = max(cand, key=lambda rr: abs(D[rr, col]))
        D[r] /= D[r, col]
        for rr in range(nrow):
            if rr != r and abs(D[rr, col]) > 0.0:
                D[rr] -= D[rr, col] * D[r]
        pivots.append((r, col))
        used_rows.add(r)
    rank = len(pivots)
    svd_rank = d_rank(L, 3, tol)
    if rank != svd_rank:
        raise RuntimeError(f"closed-family rank {rank} disagrees with SVD rank {svd_rank}")
    pivot_cols = {c for _, c in pivots}
    free_cols = [c for c in range(ncol) if c not in pivot_cols]
    basis = []
    for fc in free_cols:
        vec = np.zeros(ncol)
        vec[fc] = 1.0
        for r, pc in pivots:
            vec[pc] = -D[r, fc]
        vec[np.abs(vec) < cutoff] = 0.0
        basis.append(KForm.from_vector(3, vec))
    free_indices = tuple(INDICES[3][c] for c in free_cols)
    return ClosedFamily(L, tuple(basis), free_indices)


# ---------------------------------------------------------------------------
# the cubic obstruction of the contraction lemma
# ---------------------------------------------------------------------------

def obs1_cubic(L: LieAlgebra, X, family: ClosedFamily | None = None,
               tol: float | None = None) -> dict[tuple, float]:
    """Exact expansion of (iota_X gamma)^3 over the closed family.

    gamma = sum c_a beta_a; the cube is expanded symbolically in the c's and
    the result maps each monomial (a <= b <= c, keyed by free multi-indices)
    to the sup-norm of its degree-6 coefficient form.  Monomials below tol
    are dropped.
    """
    tol = default_tol() if tol is None else tol
    X = as_vector7(X)
    nrm = float(np.abs(X).max())
    if nrm == 0.0:
        raise ValueError("obstruction test requires a non-zero vector")
    X = X / np.linalg.norm(X)  # cube scales by |X|^3; normalize for stable tol
    if family is None:
        family = closed_family(L)
    omegas = [contract(X, b) for b in family.basis]
    out: dict[tuple, float] = {}
    m = family.dim
    for a in range(m):
        wa = omegas[a]
        if not wa.coeffs:
            continue
        for b in range(a, m):
            wab = wedge(wa, omegas[b])
            if not wab.coeffs:
                continue
            for c in range(b, m):
                cube = wedge(wab, omegas[c])
                val = cube.max_abs()
                if val <= tol:
                    continue
                # count distinct orderings of (a, b, c)
                mult = 6 if a < b < c else (1 if a == b == c else 3)
                key = tuple(family.free_indices[i] for i in (a, b, c))
                out[key] = out.get(key, 0.0) + mult * val
    return out


def obs1_check(L: LieAlgebra, X, family: ClosedFamily | None = None,
               tol: float | None = None) -> bool:
    """True iff (iota_X gamma)^3 vanishes identically over closed gamma."""
    return not obs1_cubic(L, X, family=family, tol=tol)


# ---------------------------------------------------------------------------
# SU(3)-compatibility residual
# ---------------------------------------------------------------------------

def su3_residual(phi: KForm, X, g: Metric, tol: float = 1e-8):
    """alpha ^ beta for alpha = iota_X phi, beta = phi - alpha ^ eta.

    Requires g(X, X) = 1.  Returns (residual 5-form, components), where the
    components list the six independent coefficients when X is a frame axis
    (those avoiding the axis) and all nonzero coefficients otherwise.
    """
    if phi.degree != 3:
        raise ValueError("SU(3) residual is defined for 3-forms")
    X = as_vector7(X)
    if abs(g.inner(X, X) - 1.0) > tol:
        raise ValueError("X must have unit length for the chosen metric")
    eta = KForm(1, {(j + 1,): float(v) for j, v in enumerate(g.G @ X) if v != 0.0})
    alpha = contract(X, phi)
    beta = phi - wedge(alpha, eta)
    residual = wedge(alpha, beta)
    axes = np.nonzero(X)[0]
    if len(axes) == 1:
        i = int(axes[0]) + 1
        comps = {I: residual.coeff(I) for I in INDICES[5] if i not in I}
    else:
        comps = dict(residual.coeffs)
    return residual, comps


# ---------------------------------------------------------------------------
# metric-matching residual and the multi-start search
# ---------------------------------------------------------------------------

def _residual_vector(family: ClosedFamily, c: np.ndarray, target: np.ndarray) -> np.ndarray:
    """49 metric-gap entries plus one positivity-penalty entry."""
    vec = family.matrix @ c
    B = _bilinear_b_vec(vec)
    try:
        G, _, _ = _metric_data_from_b(B)
    except DegenerateFormError:
        return np.full(50, np.sqrt(DEGENERATE_SENTINEL / 50.0))
    gap = (G - target).reshape(-1)
    lam_min = float(np.linalg.eigvalsh(G)[0])
    pen = np.sqrt(PENALTY * max(0.0, -lam_min))
    return np.concatenate([gap, [pen]])


def constraint_residual(family: ClosedFamily, c, target: Metric) -> float:
    """||G_phi - target||_F^2 plus a penalty for non-positive candidates."""
    r = _residual_vector(family, np.asarray(c, dtype=float),
                         np.asarray(target.G, dtype=float))
    return float(r @ r)


@dataclass(frozen=True)
class SearchReport:
    """Outcome of a multi-start feasibility search (numerical evidence only).

    A residual floor over finitely many restarts is evidence of
    infeasibility, never a proof; the published nonexistence results rest on
    symbolic case analysis.
    """

    algebra: str
    dim: int
    restarts: int
    best_residual: float
    best_point: np.ndarray
    feasible: bool

    def to_json_obj(self) -> dict:
        return {
            "algebra": self.algebra,
            "dim_closed_forms": self.dim,
            "restarts": self.restarts,
            "best_residual": self.best_residual,
            "best_point": [float(x) for x in self.best_point],
            "feasible": self.feasible,
            "note": ("feasible point re-verified independently" if self.feasible else
                     "empirical residual floor; not a nonexistence proof"),
        }


def _verify_candidate(family: ClosedFamily, c: np.ndarray, target: Metric) -> bool:
    """Independent re-check: closedness, positivity, metric match at 1e-9."""
    phi = family.form(c)
    if ce_differential(phi, family.algebra).max_abs() > VERIFY_TOL * max(1.0, phi.max_abs()):
        return False
    if not is_positive(phi):
        return False
    g = metric_from_g2(phi)
    return float(np.abs(g.G - target.G).max()) < VERIFY_TOL


def infeasibility_search(family: ClosedFamily, target: Metric, restarts: int,
                         seed: int, max_nfev: int = 400,
                         stop_when_feasible: bool = True) -> SearchReport:
    """Multi-start trust-region least squares over the closed family.

    Deterministic given the seed: starts are drawn up front and minimized in
    order.  Feasible candidates must additionally pass the independent
    closedness/positivity/metric re-verification.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = np.random.default_rng(seed)
    m = family.dim
    starts = rng.normal(0.0, 1.0, size=(restarts, m))
    targetG = np.asarray(target.G, dtype=float)

    def fun(c):
        return _residual_vector(family, c, targetG)

    best_res, best_c = np.inf, starts[0]
    for k in range(restarts):
        sol = least_squares(fun, starts[k], method="trf", jac="2-point",
                            max_nfev=max_nfev, xtol=1e-14, ftol=1e-14, gtol=1e-12)
        res = float(sol.fun @ sol.fun)
        if res < best_res:
            best_res, best_c = res, sol.x.copy()
            if stop_when_feasible and best_res < FEASIBILITY_TOL:
                break
    feasible = best_res < FEASIBILITY_TOL and _verify_candidate(family, best_c, target)
    return SearchReport(family.algebra.name, m, restarts, best_res, best_c, feasible)

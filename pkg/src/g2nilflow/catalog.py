"""Built-in catalog: the twelve nilpotent Lie algebras with closed G2 forms.

Each family n1..n12 appears in its defining basis; the algebras whose
nilsoliton is only orthonormal in a rotated basis additionally appear as
"<name>-orthonormal" entries carrying the soliton certificate.  Structure
constants with radicals are evaluated to double precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import sqrt

import numpy as np

from .curvature import SolitonCertificate, certificate_residual
from .forms import KForm
from .liealg import LieAlgebra, algebra


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    family: str  # n1..n12
    algebra: LieAlgebra
    g2form: KForm | None
    soliton: SolitonCertificate | None
    presentation_note: str
    soliton_status: str  # "yes" | "no" | "open"


def _form3(terms: dict[tuple, float]) -> KForm:
    return KForm(3, terms)


PHI_STD = _form3({
    (1, 2, 7): 1, (3, 4, 7): 1, (5, 6, 7): 1,
    (1, 3, 5): 1, (1, 4, 6): -1, (2, 3, 6): -1, (2, 4, 5): -1,
})

PHI_2 = _form3({
    (1, 4, 7): 1, (2, 6, 7): 1, (3, 5, 7): 1, (1, 2, 3): 1,
    (1, 5, 6): 1, (2, 4, 5): 1, (3, 4, 6): -1,
})

PHI_4 = _form3({
    (1, 2, 4): -1, (4, 5, 6): -1, (3, 4, 7): 1, (1, 3, 5): 1,
    (1, 6, 7): 1, (2, 5, 7): 1, (2, 3, 6): -1,
})

PHI_6 = _form3({
    (1, 2, 3): 1, (1, 4, 5): 1, (1, 6, 7): 1, (2, 5, 7): 1,
    (2, 4, 6): -1, (3, 4, 7): 1, (3, 5, 6): 1,
})

PHI_12 = _form3({
    (1, 2, 4): -1, (1, 3, 5): 1, (1, 6, 7): 1, (2, 3, 6): -1,
    (2, 5, 7): 1, (3, 4, 7): 1, (4, 5, 6): -1,
})

# Closed positive 3-form on n9, found by a feasibility search over Z^3(n9)
# and frozen here; the tests re-verify closedness and positivity.
PHI_9 = _form3({
    (1, 2, 7): -1, (1, 3, 6): 1, (1, 4, 5): 2, (1, 4, 7): 1, (2, 3, 4): -1,
    (2, 5, 6): -1, (2, 6, 7): 1, (3, 4, 5): 1, (3, 5, 7): -1, (4, 5, 6): 1,
})


def _diag(*entries) -> np.ndarray:
    return np.diag(np.array(entries, dtype=float))


def _cert(L: LieAlgebra, lam: float, D: np.ndarray) -> SolitonCertificate:
    residual = certificate_residual(L, lam, D)
    return SolitonCertificate(lam, D, residual, True)


@lru_cache(maxsize=1)
def catalog() -> tuple[CatalogEntry, ...]:
    """All catalog entries, primary presentations first."""
    s3, s13, s26, s39 = sqrt(3.0), sqrt(13.0), sqrt(26.0), sqrt(39.0)
    s2, s6 = sqrt(2.0), sqrt(6.0)

    n1 = algebra("n1", {})
    n2 = algebra("n2", {5: {(1, 2): 1}, 6: {(1, 3): 1}})
    n3 = algebra("n3", {4: {(1, 2): 1}, 5: {(1, 3): 1}, 6: {(2, 3): 1}})
    n4 = algebra("n4", {3: {(1, 2): 1}, 6: {(1, 3): 1, (2, 4): 1}, 7: {(1, 5): 1}})
    n5 = algebra("n5", {3: {(1, 2): 1}, 6: {(1, 3): 1}, 7: {(1, 4): 1, (2, 5): 1}})
    n6 = algebra("n6", {4: {(1, 2): 1}, 5: {(1, 3): 1}, 6: {(1, 4): 1}, 7: {(1, 5): 1}})
    n7 = algebra("n7", {4: {(1, 2): 1}, 5: {(1, 3): 1}, 6: {(1, 4): 1, (2, 3): 1},
                        7: {(1, 5): 1}})
    n8 = algebra("n8", {3: {(1, 2): 1}, 4: {(1, 3): 1}, 5: {(2, 3): 1},
                        6: {(1, 5): 1, (2, 4): 1}, 7: {(1, 6): 1, (3, 4): 1}})
    n9 = algebra("n9", {3: {(1, 2): 1}, 4: {(1, 3): 1}, 5: {(2, 3): 1},
                        6: {(1, 5): 1, (2, 4): 1}, 7: {(1, 6): 1, (3, 4): 1, (2, 5): 1}})
    n10 = algebra("n10", {3: {(1, 2): 1}, 5: {(1, 3): 1, (2, 4): 1}, 6: {(1, 4): 1},
                          7: {(4, 6): 1, (3, 4): 1, (1, 5): 1, (2, 3): 1}})
    n11 = algebra("n11", {3: {(1, 2): 1}, 5: {(1, 3): 1}, 6: {(2, 4): 1, (2, 3): 1},
                          7: {(2, 5): 1, (3, 4): 1, (1, 5): 1, (1, 6): 1, (2, 6): -3}})
    n12 = algebra("n12", {4: {(1, 2): 1}, 5: {(2, 3): 1}, 6: {(1, 3): -1},
                          7: {(2, 6): 2, (3, 4): -2, (1, 6): -2, (2, 5): 2}})

    n5o = algebra("n5-orthonormal", {
        3: {(1, 2): s3}, 6: {(1, 3): 2}, 7: {(1, 4): 1, (2, 5): s3}})
    n7o = algebra("n7-orthonormal", {
        4: {(1, 2): 1}, 5: {(1, 3): s6 / 2}, 6: {(1, 4): 1, (2, 3): s6 / 2},
        7: {(1, 5): s2}})
    n8o = algebra("n8-orthonormal", {
        3: {(1, 2): 1}, 4: {(1, 3): -1}, 5: {(2, 3): -1},
        6: {(1, 5): 1, (2, 4): 1}, 7: {(1, 6): -1, (3, 4): -1}})
    n11o = algebra("n11-orthonormal", {
        3: {(1, 2): s13 / 13},
        5: {(1, 3): s13 / 13, (1, 4): -s26 / 26},
        6: {(2, 4): s26 / 26, (2, 3): s13 / 13},
        7: {(2, 5): s13 / 26, (3, 4): s26 / 26, (1, 5): s39 / 26,
            (1, 6): s13 / 26, (2, 6): -s39 / 26}})
    n12o = algebra("n12-orthonormal", {
        4: {(1, 2): s3 / 6},
        5: {(2, 3): -0.25, (1, 3): s3 / 12},
        6: {(2, 3): -s3 / 12, (1, 3): -0.25},
        7: {(3, 4): -s3 / 6, (2, 5): s3 / 12, (2, 6): 0.25,
            (1, 6): s3 / 12, (1, 5): -0.25}})

    entries = [
        CatalogEntry("n1", "n1", n1, PHI_STD,
                     _cert(n1, 0.0, np.zeros((7, 7))),
                     "abelian; flat, so the nilsoliton is trivial", "yes"),
        CatalogEntry("n2", "n2", n2, PHI_2,
                     _cert(n2, -2.0, _diag(1, 1.5, 1.5, 2, 2.5, 2.5, 2)),
                     "2-step; decomposable", "yes"),
        CatalogEntry("n3", "n3", n3, None,
                     _cert(n3, -2.5, _diag(1.5, 1.5, 1.5, 3, 3, 3, 2.5)),
                     "2-step; decomposable", "yes"),
        CatalogEntry("n4", "n4", n4, PHI_4,
                     _cert(n4, -2.5, _diag(1, 1.5, 2.5, 2, 2, 3.5, 3)),
                     "3-step; corresponds to 3.8", "yes"),
        CatalogEntry("n5", "n5", n5, None, None,
                     "3-step; corresponds to 3.11; soliton basis in n5-orthonormal",
                     "yes"),
        CatalogEntry("n6", "n6", n6, PHI_6,
                     _cert(n6, -2.5, _diag(0.5, 2, 2, 2.5, 2.5, 3, 3)),
                     "3-step; corresponds to 3.20", "yes"),
        CatalogEntry("n7", "n7", n7, None, None,
                     "3-step; corresponds to 2.39; soliton basis in n7-orthonormal",
                     "yes"),
        CatalogEntry("n8", "n8", n8, None, None,
                     "corresponds to 2.5; soliton basis in n8-orthonormal", "yes"),
        CatalogEntry("n9", "n9", n9, PHI_9, None,
                     "corresponds to 1.1(iv); closed G2 form but no nilsoliton", "no"),
        CatalogEntry("n10", "n10", n10, None, None,
                     "4-step; corresponds to 1.3(i1); nilsoliton exists but has no "
                     "known explicit form", "open"),
        CatalogEntry("n11", "n11", n11, None, None,
                     "real form of 1.2(i-3); soliton basis in n11-orthonormal", "yes"),
        CatalogEntry("n12", "n12", n12, None, None,
                     "corresponds to 3.1(i2); soliton basis in n12-orthonormal", "yes"),
        CatalogEntry("n5-orthonormal", "n5", n5o, None,
                     _cert(n5o, -6.5, _diag(2.5, 3.5, 6, 6, 5, 8.5, 8.5)),
                     "basis making the nilsoliton inner product orthonormal", "yes"),
        CatalogEntry("n7-orthonormal", "n7", n7o, None,
                     _cert(n7o, -4.0, _diag(1.25, 2.75, 2.5, 4, 3.75, 5.25, 5)),
                     "basis making the nilsoliton inner product orthonormal", "yes"),
        CatalogEntry("n8-orthonormal", "n8", n8o, None,
                     _cert(n8o, -2.5, _diag(0.5, 1, 1.5, 2, 2.5, 3, 3.5)),
                     "basis making the nilsoliton inner product orthonormal", "yes"),
        CatalogEntry("n11-orthonormal", "n11", n11o, None,
                     _cert(n11o, -11.0 / 52.0,
                           _diag(1, 1, 2, 2, 3, 3, 4) / 13.0),
                     "basis making the nilsoliton inner product orthonormal", "yes"),
        CatalogEntry("n12-orthonormal", "n12", n12o, PHI_12,
                     _cert(n12o, -0.25, _diag(1, 1, 1, 2, 2, 2, 3) / 8.0),
                     "basis making the nilsoliton inner product orthonormal", "yes"),
    ]
    return tuple(entries)


def get_entry(name: str) -> CatalogEntry:
    for e in catalog():
        if e.name == name:
            return e
    raise KeyError(f"no catalog entry named {name!r}")


def families() -> list[str]:
    return [f"n{i}" for i in range(1, 13)]

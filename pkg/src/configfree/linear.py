"""Exact integer linear algebra for systems ``A x = 0``.

Matrices are lists of integer rows (rows are equations, columns are
variables).  Everything is computed with Python integers or ``Fraction``;
no floating point is used.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ConfigError, PreconditionError
from .groups import BlockHom

log = logging.getLogger(__name__)


def as_matrix(A):
    """Normalize to a tuple of integer-row tuples, checking rectangular shape."""
    if isinstance(A, BlockHom):
        A = A.rows
    rows = tuple(tuple(int(v) for v in r) for r in A)
    if rows and any(len(r) != len(rows[0]) for r in rows):
        raise ConfigError("matrix rows have different lengths")
    return rows


def rank(A):
    """Rank over the rationals via Bareiss fraction-free elimination."""
    M = [list(r) for r in as_matrix(A)]
    if not M or not M[0]:
        return 0
    nrows, ncols = len(M), len(M[0])
    r, prev = 0, 1
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        for i in range(r + 1, nrows):
            for j in range(c + 1, ncols):
                M[i][j] = (M[i][j] * M[r][c] - M[r][j] * M[i][c]) // prev
            M[i][c] = 0
        prev = M[r][c]
        r += 1
        if r == nrows:
            break
    return r


def delete_columns(A, B):
    """``A`` with the (0-based) columns in ``B`` removed."""
    B = set(B)
    return tuple(tuple(v for j, v in enumerate(r) if j not in B) for r in as_matrix(A))


def is_irredundant(A):
    """Whether no pair of coordinates is forced equal on the rational kernel.

    Returns ``(True, None)`` or ``(False, (i, j))`` for the first offending
    0-based pair.
    """
    A = as_matrix(A)
    k = len(A[0]) if A else 0
    base = rank(A)
    for i, j in itertools.combinations(range(k), 2):
        e = [0] * k
        e[i], e[j] = 1, -1
        if rank(A + (tuple(e),)) == base:
            return False, (i, j)
    return True, None


def strong_column_condition(A):
    """Every row sums to zero (the columns add up to the zero vector)."""
    return all(sum(r) == 0 for r in as_matrix(A))


@dataclass
class MASummary:
    m_A: Fraction
    argmax: tuple  # (q, B) with B a 0-based column tuple
    ell: int
    h: dict = field(default_factory=dict)
    skipped: list = field(default_factory=list)

    @property
    def threshold(self):
        e = 1 / self.m_A
        return f"n^(-{e.numerator}/{e.denominator})" if e.denominator != 1 else f"n^(-{e.numerator})"

    def to_dict(self):
        return {
            "m_A": {"num": self.m_A.numerator, "den": self.m_A.denominator},
            "argmax": {"q": self.argmax[0], "B": list(self.argmax[1])},
            "ell": self.ell,
            "threshold": self.threshold,
            "h": [{"B": list(B), "h_B": h} for B, h in sorted(self.h.items())],
            "skipped": [list(B) for B in self.skipped],
        }


def compute_m_A(A):
    """``max (q-1)/(q-1+h_B-ell)`` over column sets ``B`` with ``|B| = q >= 2``.

    ``h_B`` is the rank of ``A`` with the columns of ``B`` removed (0 when all
    columns go) and ``ell`` the rank of ``A``.  Ties keep the lexicographically
    smallest ``(q, B)``.
    """
    A = as_matrix(A)
    if not A or not A[0]:
        raise ConfigError("empty matrix")
    k = len(A[0])
    ell = rank(A)
    if ell < len(A):
        raise PreconditionError(f"matrix has rank {ell} < {len(A)} rows")
    ok, pair = is_irredundant(A)
    if not ok:
        raise PreconditionError(f"matrix is not irredundant: coordinates {pair} forced equal",
                                witness=pair)
    best, arg, table, skipped = None, None, {}, []
    for q in range(2, k + 1):
        for B in itertools.combinations(range(k), q):
            h = rank(delete_columns(A, B)) if q < k else 0
            table[B] = h
            den = q - 1 + h - ell
            if den <= 0:
                skipped.append(B)
                log.debug("m_A: skipping B=%s with denominator %d", B, den)
                continue
            val = Fraction(q - 1, den)
            if best is None or val > best:
                best, arg = val, (q, B)
    if best is None:
        raise PreconditionError("every column set has a non-positive denominator")
    return MASummary(best, arg, ell, table, skipped)


def genus(coeffs):
    """Largest number of blocks in a partition of the indices into zero-sum blocks (0 if none)."""
    c = [int(v) for v in coeffs]
    k = len(c)
    if k == 0 or sum(c) != 0:
        return 0
    full = (1 << k) - 1
    sums = [0] * (1 << k)
    for mask in range(1, 1 << k):
        low = (mask & -mask).bit_length() - 1
        sums[mask] = sums[mask & (mask - 1)] + c[low]
    memo = {0: 0}

    def best(mask):
        # max zero-sum blocks partitioning mask; mask itself sums to zero
        if mask in memo:
            return memo[mask]
        low = mask & -mask
        rest = mask ^ low
        result = 1
        sub = rest
        while True:
            part = sub | low
            if part != mask and sums[part] == 0:
                result = max(result, 1 + best(mask ^ part))
            if sub == 0:
                break
            sub = (sub - 1) & rest
        memo[mask] = result
        return result

    return best(full)


# ---------------------------------------------------------------------------
# integer lattices

def integer_kernel(A, ncols=None):
    """Basis (list of integer rows) of the lattice ``{x in Z^k : A x = 0}``.

    Column operations reduce ``A`` to echelon form while tracking a unimodular
    transform; columns of the transform whose image is zero span the kernel.
    """
    A = as_matrix(A)
    k = len(A[0]) if A else (ncols or 0)
    cols = [[A[i][j] for i in range(len(A))] for j in range(k)]
    U = [[1 if i == j else 0 for i in range(k)] for j in range(k)]  # U[j] is column j of the transform
    r = 0
    for i in range(len(A)):
        while True:
            nz = [j for j in range(r, k) if cols[j][i] != 0]
            if not nz:
                break
            p = min(nz, key=lambda j: abs(cols[j][i]))
            cols[r], cols[p] = cols[p], cols[r]
            U[r], U[p] = U[p], U[r]
            done = True
            for j in range(r + 1, k):
                if cols[j][i]:
                    f = cols[j][i] // cols[r][i]
                    cols[j] = [a - f * b for a, b in zip(cols[j], cols[r])]
                    U[j] = [a - f * b for a, b in zip(U[j], U[r])]
                    if cols[j][i]:
                        done = False
            if done:
                r += 1
                break
    return [U[j] for j in range(r, k)]


def hnf_rows(rows):
    """Row-style Hermite normal form of a lattice basis; zero rows dropped.

    Pivots are positive and entries above each pivot are reduced into
    ``[0, pivot)``, so the result is unique for a given lattice.
    """
    M = [list(r) for r in rows]
    if not M:
        return []
    ncols = len(M[0])
    out = []
    r = 0
    for c in range(ncols):
        while True:
            nz = [i for i in range(r, len(M)) if M[i][c] != 0]
            if not nz:
                break
            p = min(nz, key=lambda i: abs(M[i][c]))
            M[r], M[p] = M[p], M[r]
            clean = True
            for i in range(r + 1, len(M)):
                if M[i][c]:
                    f = M[i][c] // M[r][c]
                    M[i] = [a - f * b for a, b in zip(M[i], M[r])]
                    if M[i][c]:
                        clean = False
            if clean:
                break
        if r < len(M) and M[r][c] != 0:
            if M[r][c] < 0:
                M[r] = [-v for v in M[r]]
            for i in range(r):
                f = M[i][c] // M[r][c]
                if f:
                    M[i] = [a - f * b for a, b in zip(M[i], M[r])]
            r += 1
            if r == len(M):
                break
    out = [tuple(row) for row in M[:r]]
    return out


@dataclass
class CanonicalForm:
    """Kernel = ``{diag(x0) + sum lambda_i F_i}`` with ``x0 in Z^m`` and integer ``lambda``.

    Each ``F_i`` is a flat vector of length ``m*k`` whose first block is zero.
    """

    m: int
    k: int
    F: list

    @property
    def q(self):
        return len(self.F)

    def blocks(self):
        return [[tuple(f[j * self.m:(j + 1) * self.m]) for j in range(self.k)] for f in self.F]

    def to_dict(self):
        return {"m": self.m, "k": self.k, "q": self.q, "F": [list(f) for f in self.F]}


def canonical_form(M):
    """Canonical description of the integer kernel of an invariant block map.

    The kernel lattice splits as the diagonal plus the sublattice with first
    block zero; the latter is returned in Hermite normal form.
    """
    if not isinstance(M, BlockHom):
        M = BlockHom(M)
    if not M.is_invariant():
        raise PreconditionError("canonical form needs an invariant map (diagonal in the kernel)")
    m, k = M.m, M.k1
    rest = [r[m:] for r in M.rows]
    if m * (k - 1) == 0:
        return CanonicalForm(m, k, [])
    basis = integer_kernel(rest, ncols=m * (k - 1))
    F = [tuple([0] * m + list(v)) for v in hnf_rows(basis)]
    return CanonicalForm(m, k, F)


def kernel_in_box(M, B):
    """Direct enumeration of integer kernel points in ``[-B, B]^{mk}``."""
    if not isinstance(M, BlockHom):
        M = BlockHom(M)
    width = M.m * M.k1
    import numpy as np

    pts = np.indices((2 * B + 1,) * width, dtype=np.int64).reshape(width, -1).T - B
    A = np.array(M.rows, dtype=np.int64)
    keep = ((pts @ A.T) == 0).all(axis=1)
    return {tuple(int(v) for v in p) for p in pts[keep]}


def reconstruct_in_box(cf, B):
    """Points ``diag(x0) + sum lambda_i F_i`` inside ``[-B, B]^{mk}``.

    ``lambda_i`` ranges are bounded through the pivot column of ``F_i``, which
    later vectors leave untouched.
    """
    m, k = cf.m, cf.k
    width = m * k
    F = cf.F
    pivots = [next(j for j, v in enumerate(f) if v) for f in F]
    out = set()
    for x0 in itertools.product(range(-B, B + 1), repeat=m):
        start = list(x0) * k

        def rec(i, vec):
            if i == len(F):
                if all(-B <= v <= B for v in vec):
                    out.add(tuple(vec))
                return
            c, piv = pivots[i], F[i][pivots[i]]
            lo = -((B + vec[c]) // piv)  # ceil((-B - vec[c]) / piv)
            hi = (B - vec[c]) // piv
            for lam in range(lo, hi + 1):
                rec(i + 1, [a + lam * b for a, b in zip(vec, F[i])])

        rec(0, start)
    return out


def box_restriction_lambda(M):
    """A scale ``lam`` such that box solutions in ``[1, n]`` read the same in ``Z`` and ``Z_{lam n}``.

    ``1 + max_row sum |a_ij|`` works: every row value lies strictly inside
    ``(-lam n, lam n)``, so vanishing modulo ``lam n`` forces vanishing in ``Z``.
    """
    rows = as_matrix(M)
    return 1 + max((sum(abs(v) for v in r) for r in rows), default=0)


def ap_matrix(r):
    """Rows ``x_i - 2 x_{i+1} + x_{i+2}`` describing r-term progressions."""
    if r < 3:
        raise ConfigError("progressions need r >= 3")
    rows = []
    for i in range(r - 2):
        row = [0] * r
        row[i], row[i + 1], row[i + 2] = 1, -2, 1
        rows.append(tuple(row))
    return tuple(rows)


SCHUR_MATRIX = ((1, 1, -1),)

# Two-dimensional simplices {(x,y), (x+a,y), (x,y+a)}: two block rows of 2x2
# blocks acting on three points of Z^2.
SIMPLEX_BLOCKS = (
    (((1, 0), (0, 1)), ((0, 0), (0, -1)), ((-1, 0), (0, 0))),
    (((-1, 1), (0, 0)), ((1, 0), (0, 0)), ((0, -1), (0, 0))),
)


def simplex_hom():
    return BlockHom.from_blocks(SIMPLEX_BLOCKS)

"""Configuration systems ``(S, G)``: solution sets, projections and freedom parameters.

A :class:`ConfigSystem` stores its solutions as a sorted, deduplicated
``(N, k)`` int64 array of element indices.  Translation-invariant systems over
abelian groups may instead be stored by orbit representatives (tuples whose
first entry is the identity); the full solution set is then
``{r + (g, ..., g)}`` and is only materialized on demand.  Because translation
acts freely, each orbit has exactly ``|G|`` members and every fiber count can
be read off the representatives.

Index sets ``U`` are 0-based tuples of coordinate positions throughout.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import BudgetExceeded, ConfigError, PreconditionError
from .groups import BlockHom, Group

#: Default cap on the number of tuples enumerated or materialized.
DEFAULT_BUDGET = 10**7


# ---------------------------------------------------------------------------
# array helpers

def _unique_rows(arr):
    if len(arr) == 0:
        return arr.reshape(0, arr.shape[1] if arr.ndim == 2 else 0)
    return np.unique(arr, axis=0)


def row_keys(rows, base):
    """Encode integer rows in ``[0, base)`` as scalar keys when they fit in int64."""
    rows = np.asarray(rows, dtype=np.int64)
    width = rows.shape[1]
    if width == 0:
        return np.zeros(len(rows), dtype=np.int64)
    if base ** width < 2**62:
        keys = np.zeros(len(rows), dtype=np.int64)
        for j in range(width):
            keys = keys * base + rows[:, j]
        return keys
    return None


def group_counts(rows, base):
    """Distinct rows of ``rows`` with multiplicities, ordered like ``np.unique``."""
    rows = np.asarray(rows, dtype=np.int64)
    if len(rows) == 0:
        return rows.reshape(0, rows.shape[1]), np.zeros(0, dtype=np.int64)
    keys = row_keys(rows, base)
    if keys is None:
        uniq, counts = np.unique(rows, axis=0, return_counts=True)
        return uniq, counts
    _, first, counts = np.unique(keys, return_index=True, return_counts=True)
    return rows[first], counts


def distinct_counts(rows):
    """Number of distinct values in each row."""
    rows = np.asarray(rows)
    if rows.shape[1] == 0:
        return np.zeros(len(rows), dtype=np.int64)
    s = np.sort(rows, axis=1)
    return 1 + (np.diff(s, axis=1) != 0).sum(axis=1)


# ---------------------------------------------------------------------------
# solving integer systems modulo n

def _unit_inverse(a, n):
    try:
        return pow(int(a), -1, n)
    except ValueError:
        return None


def solve_mod(A, b, n, budget=DEFAULT_BUDGET):
    """All ``x`` in ``Z_n^k`` with ``A x = b (mod n)``, as a sorted ``(N, k)`` array.

    Rows are reduced with unit pivots; remaining variables are enumerated and
    rows without a unit entry are checked as filters.
    """
    A = [[int(v) % n for v in row] for row in A]
    b = [int(v) % n for v in b]
    k = len(A[0]) if A else 0
    if n == 1:
        return np.zeros((1, k), dtype=np.int64)
    rows = [r[:] + [bv] for r, bv in zip(A, b)]
    pivots = []  # (row, col)
    used_rows = set()
    while True:
        found = None
        for ri, r in enumerate(rows):
            if ri in used_rows:
                continue
            for c in range(k):
                if c in {pc for _, pc in pivots}:
                    continue
                if r[c] and _unit_inverse(r[c], n) is not None:
                    found = (ri, c)
                    break
            if found:
                break
        if not found:
            break
        ri, c = found
        inv = _unit_inverse(rows[ri][c], n)
        rows[ri] = [(v * inv) % n for v in rows[ri]]
        for rj in range(len(rows)):
            if rj != ri and rows[rj][c]:
                f = rows[rj][c]
                rows[rj] = [(v - f * w) % n for v, w in zip(rows[rj], rows[ri])]
        used_rows.add(ri)
        pivots.append((ri, c))
    pivot_cols = {c for _, c in pivots}
    free = [c for c in range(k) if c not in pivot_cols]
    total = n ** len(free)
    if total > budget:
        raise BudgetExceeded(
            f"kernel enumeration needs {total} assignments", required=total, budget=budget
        )
    if free:
        grids = np.indices((n,) * len(free), dtype=np.int64).reshape(len(free), -1).T
    else:
        grids = np.zeros((1, 0), dtype=np.int64)
    X = np.zeros((len(grids), k), dtype=np.int64)
    X[:, free] = grids
    R = np.array([r[:k] for r in rows], dtype=np.int64).reshape(len(rows), k)
    rhs = np.array([r[k] for r in rows], dtype=np.int64)
    for ri, c in pivots:
        coeffs = R[ri].copy()
        coeffs[c] = 0
        X[:, c] = (rhs[ri] - X @ coeffs) % n
    keep = np.ones(len(X), dtype=bool)
    for ri in range(len(rows)):
        if ri not in used_rows:
            keep &= (X @ R[ri] - rhs[ri]) % n == 0
    X = X[keep]
    return _unique_rows(X)


def solve_hom(G, M, b, budget=DEFAULT_BUDGET, fix_first=False):
    """Element-index tuples ``x`` with ``M(x) = b`` over the abelian group ``G``.

    With ``fix_first`` only solutions whose first coordinate is the identity are
    returned (orbit representatives for invariant systems).
    """
    M._check_group(G)
    d = len(G.moduli)
    b_comp = G.decode(np.array(b, dtype=np.int64)).reshape(M.k2, d)
    A = np.array(M.rows, dtype=object)
    k = M.k1
    if M.m == 1:
        parts = []
        for c, n in enumerate(G.moduli):
            rows = A.tolist()
            if fix_first:
                rows = [r[1:] for r in rows]
            sol = solve_mod(rows, b_comp[:, c].tolist(), n, budget)
            if fix_first:
                sol = np.concatenate([np.zeros((len(sol), 1), dtype=np.int64), sol], axis=1)
            parts.append(sol)
        total = math.prod(len(p) for p in parts)
        if total > budget:
            raise BudgetExceeded(f"solution set has {total} tuples", required=total, budget=budget)
        comps = [p[:, :, None] for p in parts]
        # cartesian product over the cyclic factors
        out = comps[0]
        for p in comps[1:]:
            out = np.concatenate(
                [np.repeat(out, len(p), axis=0), np.tile(p, (len(out), 1, 1))], axis=2
            )
        X = G.encode(out) if len(out) else np.zeros((0, k), dtype=np.int64)
        return _unique_rows(X)
    if len(set(G.moduli)) != 1:
        return _brute_force_hom(G, M, b, budget, fix_first)
    n = G.moduli[0]
    rows = A.tolist()
    if fix_first:
        rows = [r[d:] for r in rows]
    sol = solve_mod(rows, b_comp.reshape(-1).tolist(), n, budget)
    width = k - 1 if fix_first else k
    sol = sol.reshape(len(sol), width, d)
    if fix_first:
        sol = np.concatenate([np.zeros((len(sol), 1, d), dtype=np.int64), sol], axis=1)
    return _unique_rows(G.encode(sol).reshape(len(sol), k))


def _brute_force_hom(G, M, b, budget, fix_first):
    k = M.k1
    free = k - 1 if fix_first else k
    total = G.order**free
    if total > budget:
        raise BudgetExceeded(f"brute force needs {total} tuples", required=total, budget=budget)
    X = np.indices((G.order,) * free, dtype=np.int64).reshape(free, -1).T
    if fix_first:
        X = np.concatenate([np.zeros((len(X), 1), dtype=np.int64), X], axis=1)
    Y = M.apply_indices(G, X)
    keep = (Y == np.array(b, dtype=np.int64)).all(axis=1)
    return X[keep]


# ---------------------------------------------------------------------------

@dataclass
class Projection:
    """Fibers of ``pi_U`` on a solution set.

    ``images`` holds one row per distinct image (for orbit-stored systems, one
    row per translation class, normalized so coordinate ``U[0]`` is the
    identity) and ``fibers`` the matching fiber sizes.  ``class_size`` is the
    number of images each row stands for.
    """

    U: tuple
    images: np.ndarray
    fibers: np.ndarray
    class_size: int = 1

    @property
    def image_count(self):
        return len(self.fibers) * self.class_size

    @property
    def max_fiber(self):
        return int(self.fibers.max()) if len(self.fibers) else 0

    @property
    def min_fiber(self):
        return int(self.fibers.min()) if len(self.fibers) else 0

    def argmax_image(self):
        return tuple(int(v) for v in self.images[int(np.argmax(self.fibers))])


@dataclass
class SolutionPartition:
    classes: dict

    def sizes(self):
        return {j: len(v) for j, v in self.classes.items()}


@dataclass
class FreedomTable:
    """``alpha[l-1]`` is the l-th degree of freedom on S, ``alpha_k`` the same on S^(k).

    ``argmax_sets[l]`` lists every ``(U, image)`` attaining ``alpha_k[l-1]``.
    ``empty`` flags a system with empty S^(k) (all ``alpha_k`` are then 0).
    """

    k: int
    alpha: list
    alpha_k: list
    argmax_sets: dict = field(default_factory=dict)
    argmax_sets_full: dict = field(default_factory=dict)
    empty: bool = False

    def to_dict(self):
        return {
            "k": self.k,
            "alpha": list(self.alpha),
            "alpha_k": list(self.alpha_k),
            "argmax_sets": {
                str(l): [{"U": list(U), "image": list(x)} for U, x in v]
                for l, v in self.argmax_sets.items()
            },
            "empty": self.empty,
        }


@dataclass
class VPropertyEstimate:
    epsilon: Fraction
    gamma_hat: Fraction
    mode: str
    witness: tuple = None
    subsets_tested: int = 0
    empty: bool = False


class ConfigSystem:
    """A system of configurations of degree ``k`` over a finite ambient set."""

    def __init__(self, ambient, k, solutions=None, *, reps=None, provenance=None,
                 hom=None, target=None, max_materialize=DEFAULT_BUDGET):
        if k < 1:
            raise ConfigError("degree must be positive")
        if (solutions is None) == (reps is None):
            raise ConfigError("give exactly one of solutions or reps")
        self.ambient = ambient
        self.k = int(k)
        self.provenance = provenance or {"kind": "explicit"}
        self.hom = hom
        self.target = target
        self.max_materialize = max_materialize
        self._solutions = None
        self._reps = None
        self._cache = {}
        if solutions is not None:
            arr = np.asarray(solutions, dtype=np.int64).reshape(-1, self.k)
            self._check_range(arr)
            self._solutions = _unique_rows(arr)
        else:
            if not (isinstance(ambient, Group) and ambient.kind == "abelian"):
                raise ConfigError("orbit storage needs an abelian group")
            arr = np.asarray(reps, dtype=np.int64).reshape(-1, self.k)
            self._check_range(arr)
            if len(arr) and (arr[:, 0] != ambient.identity).any():
                raise ConfigError("orbit representatives must start with the identity")
            self._reps = _unique_rows(arr)

    def _check_range(self, arr):
        if len(arr) and (arr.min() < 0 or arr.max() >= self.ambient.order):
            raise ConfigError("solution entries out of range for the ambient set")

    # -- constructors -------------------------------------------------------
    @classmethod
    def from_kernel(cls, G, k, M, b=None, budget=DEFAULT_BUDGET, orbit=None):
        """Solutions of ``M(x) = b`` over an abelian group (``b`` defaults to zero).

        Invariant systems with ``b = 0`` are stored by orbit representatives
        unless ``orbit=False``.
        """
        if not isinstance(M, BlockHom):
            M = BlockHom(M)
        if M.k1 != k:
            raise ConfigError(f"matrix has {M.k1} variable slots, degree is {k}")
        if not isinstance(G, Group) or G.kind != "abelian":
            raise ConfigError("kernel systems need an abelian product group")
        b_idx = [G.identity] * M.k2 if b is None else [G.index(v) for v in b]
        if len(b_idx) != M.k2:
            raise ConfigError(f"target has {len(b_idx)} entries, expected {M.k2}")
        prov = {"kind": "kernel", "matrix": [list(r) for r in M.rows], "m": M.m,
                "b": [G.element(v) for v in b_idx]}
        zero = all(v == G.identity for v in b_idx)
        if orbit is None:
            orbit = zero and M.is_invariant(G)
        if orbit:
            if not (zero and M.is_invariant(G)):
                raise PreconditionError("orbit storage needs an invariant homogeneous system")
            reps = solve_hom(G, M, b_idx, budget, fix_first=True)
            return cls(G, k, reps=reps, provenance=prov, hom=M, target=b_idx)
        sols = solve_hom(G, M, b_idx, budget)
        return cls(G, k, sols, provenance=prov, hom=M, target=b_idx)

    @classmethod
    def from_predicate(cls, ambient, k, pred, budget=DEFAULT_BUDGET, vectorized=False,
                       chunk=1 << 18):
        """All ``k``-tuples of ``ambient`` accepted by ``pred``.

        ``pred`` receives a tuple of element labels, or with ``vectorized=True``
        an ``(N, k)`` index array and returns a boolean mask.
        """
        n = ambient.order
        total = n**k
        if total > budget:
            raise BudgetExceeded(f"predicate scan needs {total} tuples", required=total, budget=budget)
        keep = []
        for start in range(0, total, chunk):
            idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
            X = np.stack(np.unravel_index(idx, (n,) * k), axis=1).astype(np.int64)
            if vectorized:
                mask = np.asarray(pred(X), dtype=bool)
            else:
                labels = [ambient.element(i) for i in range(n)]
                mask = np.fromiter((bool(pred(tuple(labels[v] for v in row))) for row in X),
                                   dtype=bool, count=len(X))
            keep.append(X[mask])
        sols = np.concatenate(keep) if keep else np.zeros((0, k), dtype=np.int64)
        return cls(ambient, k, sols, provenance={"kind": "predicate"})

    @classmethod
    def explicit(cls, ambient, k, tuples):
        rows = []
        for t in tuples:
            t = tuple(t)
            if len(t) != k:
                raise ConfigError(f"tuple {t!r} does not have arity {k}")
            rows.append([ambient.index(e) for e in t])
        return cls(ambient, k, np.array(rows, dtype=np.int64).reshape(-1, k),
                   provenance={"kind": "explicit"})

    @classmethod
    def from_orbit_reps(cls, G, k, reps, provenance=None):
        return cls(G, k, reps=reps, provenance=provenance or {"kind": "orbit"})

    # -- basic accessors ------------------------------------------------------
    @property
    def orbit_stored(self):
        return self._reps is not None

    @property
    def reps(self):
        return self._reps

    @property
    def size(self):
        if self._reps is not None:
            return len(self._reps) * self.ambient.order
        return len(self._solutions)

    def __len__(self):
        return self.size

    @property
    def solutions(self):
        """Sorted ``(N, k)`` index array of all solutions."""
        if self._solutions is None:
            if self.size > self.max_materialize:
                raise BudgetExceeded(
                    f"materializing {self.size} solutions exceeds the cap",
                    required=self.size, budget=self.max_materialize,
                )
            G = self.ambient
            g = np.arange(G.order, dtype=np.int64)
            full = G.op(self._reps[:, None, :], g[None, :, None]).reshape(-1, self.k)
            self._solutions = _unique_rows(full)
        return self._solutions

    def _base_rows(self):
        """Rows to scan: orbit representatives if available, else all solutions."""
        return self._reps if self._reps is not None else self._solutions

    def _distinct(self):
        if "distinct" not in self._cache:
            self._cache["distinct"] = distinct_counts(self._base_rows())
        return self._cache["distinct"]

    def top_rows(self):
        """Rows of S^(k) among the stored rows (reps or full)."""
        return self._base_rows()[self._distinct() == self.k]

    @property
    def size_k(self):
        """|S^(k)|."""
        n = int((self._distinct() == self.k).sum())
        return n * self.ambient.order if self._reps is not None else n

    def top_system(self):
        """The system restricted to S^(k)."""
        if self._reps is not None:
            return ConfigSystem(self.ambient, self.k, reps=self.top_rows(),
                                provenance=dict(self.provenance, restricted=True))
        return ConfigSystem(self.ambient, self.k, self.top_rows(),
                            provenance=dict(self.provenance, restricted=True))

    def tuples(self, rows=None):
        rows = self.solutions if rows is None else rows
        return [tuple(self.ambient.element(v) for v in r) for r in rows]

    def contains(self, tup):
        idx = np.array([self.ambient.index(e) for e in tup], dtype=np.int64)
        if self._reps is not None:
            idx = self.ambient.sub(idx, idx[0])
        return bool((self._base_rows() == idx).all(axis=1).any())

    def describe(self):
        part = partition_by_distinctness(self).sizes() if self.size <= self.max_materialize else None
        return {
            "ambient": self.ambient.descriptor(),
            "ambient_order": self.ambient.order,
            "degree": self.k,
            "size": self.size,
            "size_k": self.size_k,
            "partition": {str(j): v for j, v in part.items()} if part else None,
            "provenance": self.provenance,
            "invariant": is_invariant(self) if self.ambient.is_group else None,
        }

    def __repr__(self):
        return f"ConfigSystem(ambient={self.ambient!r}, k={self.k}, |S|={self.size})"


# ---------------------------------------------------------------------------
# operations

def partition_by_distinctness(sys):
    """Split S into classes S^(j) of tuples with exactly j distinct entries."""
    sols = sys.solutions
    dc = distinct_counts(sols) if len(sols) else np.zeros(0, dtype=np.int64)
    return SolutionPartition({j: sols[dc == j] for j in range(1, sys.k + 1)})


def project(sys, U, restrict="S"):
    """Fibers of ``pi_U`` on S (``restrict="S"``) or on S^(k) (``restrict="k"``)."""
    U = tuple(int(u) for u in U)
    if not U or len(set(U)) != len(U) or min(U) < 0 or max(U) >= sys.k:
        raise ConfigError(f"invalid index set {U} for degree {sys.k}")
    U = tuple(sorted(U))
    rows = sys._base_rows() if restrict == "S" else sys.top_rows()
    base = sys.ambient.order
    if sys.orbit_stored:
        G = sys.ambient
        sub = rows[:, U]
        norm = G.sub(sub, sub[:, :1])
        imgs, counts = group_counts(norm, base)
        return Projection(U, imgs, counts, class_size=G.order)
    imgs, counts = group_counts(rows[:, U], base)
    return Projection(U, imgs, counts)


def _fiber_stats(sys, U, restrict):
    """(max fiber, min fiber, image count, argmax image) with caching."""
    key = (U, restrict)
    cache = sys._cache.setdefault("proj", {})
    if key not in cache:
        p = project(sys, U, restrict)
        cache[key] = (p.max_fiber, p.min_fiber, p.image_count,
                      p.argmax_image() if len(p.fibers) else None)
    return cache[key]


def _subsets(k, l):
    return itertools.combinations(range(k), l)


def freedom_table(sys):
    """alpha_l and alpha^k_l for l = 1..k, with every maximizing U retained."""
    k = sys.k
    empty_k = sys.size_k == 0
    alpha, alpha_k, arg_k, arg_full = [], [], {}, {}
    for l in range(1, k + 1):
        best, best_k, who, who_k = 0, 0, [], []
        for U in _subsets(k, l):
            mx, _, _, img = _fiber_stats(sys, U, "S")
            if mx > best:
                best, who = mx, [(U, img)]
            elif mx == best and mx > 0:
                who.append((U, img))
            if not empty_k:
                mk, _, _, imgk = _fiber_stats(sys, U, "k")
                if mk > best_k:
                    best_k, who_k = mk, [(U, imgk)]
                elif mk == best_k and mk > 0:
                    who_k.append((U, imgk))
        alpha.append(best)
        alpha_k.append(best_k)
        arg_full[l] = who
        arg_k[l] = who_k
    table = FreedomTable(k, alpha, alpha_k, arg_k, arg_full, empty=empty_k)
    _check_table(table)
    return table


def _check_table(t):
    for l in range(t.k - 1):
        assert t.alpha[l + 1] <= t.alpha[l], "alpha must be non-increasing"
        assert t.alpha_k[l + 1] <= t.alpha_k[l], "alpha^k must be non-increasing"
    assert all(a <= b for a, b in zip(t.alpha_k, t.alpha)), "alpha^k must not exceed alpha"


def projection_image_sizes(sys, restrict="k", min_size=2):
    """``{U: |pi_U(S or S^(k))|}`` for all U with ``|U| >= min_size``."""
    out = {}
    for l in range(min_size, sys.k + 1):
        for U in _subsets(sys.k, l):
            out[U] = _fiber_stats(sys, U, restrict)[2]
    return out


def is_invariant(sys):
    """Whether every constant tuple ``(x, ..., x)`` is a solution."""
    if not sys.ambient.is_group:
        raise PreconditionError("invariance needs a group ambient")
    if sys.orbit_stored:
        return True
    sols = sys.solutions
    n = sys.ambient.order
    diag = sols[(sols == sols[:, :1]).all(axis=1)] if len(sols) else sols
    return len(np.unique(diag[:, 0])) == n if len(diag) else False


def single_fiber_sizes(sys):
    """For each coordinate i, the set of fiber sizes of ``pi_{i}`` on S."""
    return {i: sorted(set(project(sys, (i,), "S").fibers.tolist())) for i in range(sys.k)}


@dataclass
class RhoResult:
    rho: Fraction
    U: tuple
    image: tuple


def rho_uniformity(sys):
    """min over U (|U| >= 2) and x in pi_U(S^(k)) of fiber(x) / max fiber over U."""
    if sys.size_k == 0:
        raise PreconditionError("rho-uniformity needs a nonempty S^(k)")
    best = None
    for l in range(2, sys.k + 1):
        for U in _subsets(sys.k, l):
            p = project(sys, U, "k")
            r = Fraction(p.min_fiber, p.max_fiber)
            if best is None or r < best.rho:
                img = tuple(int(v) for v in p.images[int(np.argmin(p.fibers))])
                best = RhoResult(r, U, img)
    return best


def rho_uniformity_rows(rows, k, base, min_size=2):
    """rho computed on an explicit row set (used for non-invariant unions)."""
    best = None
    for l in range(min_size, k + 1):
        for U in _subsets(k, l):
            _, counts = group_counts(rows[:, U], base)
            r = Fraction(int(counts.min()), int(counts.max()))
            if best is None or r < best[0]:
                best = (r, U)
    return best


def _membership_counts(sols, masks):
    """For each boolean mask over the ambient, how many solution rows lie inside."""
    inside = masks[:, sols]  # (B, N, k)
    return inside.all(axis=2).sum(axis=1)


def v_property_estimate(sys, epsilon, mode="exhaustive", trials=1000, seed=0,
                        budget=2 * 10**6):
    """Empirical gamma: min over X with |X| >= ceil(eps |G|) of |X^k cap S| / |S|.

    Only sets of the minimal size are scanned since enlarging X never lowers
    the count.  ``sampled`` mode returns an upper bound on the true minimum.
    """
    eps = Fraction(epsilon).limit_denominator(10**6) if not isinstance(epsilon, Fraction) else epsilon
    if not 0 < eps <= 1:
        raise ConfigError("epsilon must lie in (0, 1]")
    n = sys.ambient.order
    size = math.ceil(eps * n)
    if sys.size == 0:
        return VPropertyEstimate(eps, Fraction(0), mode, None, 0, empty=True)
    sols = sys.solutions
    total = len(sols)
    if mode == "exhaustive":
        count = math.comb(n, size)
        if count > budget:
            raise BudgetExceeded(f"{count} subsets exceed the budget", required=count, budget=budget)
        it = itertools.combinations(range(n), size)
    elif mode == "sampled":
        rng = np.random.default_rng(seed)
        it = (tuple(sorted(rng.choice(n, size, replace=False).tolist())) for _ in range(trials))
    else:
        raise ConfigError(f"unknown mode {mode!r}")
    best, witness, tested = None, None, 0
    batch = max(1, min(4096, 2**22 // max(1, total * sys.k)))
    while True:
        chunk = list(itertools.islice(it, batch))
        if not chunk:
            break
        masks = np.zeros((len(chunk), n), dtype=bool)
        for i, X in enumerate(chunk):
            masks[i, list(X)] = True
        counts = _membership_counts(sols, masks)
        j = int(np.argmin(counts))
        if best is None or counts[j] < best:
            best, witness = int(counts[j]), chunk[j]
        tested += len(chunk)
    witness = tuple(sys.ambient.element(v) for v in witness)
    return VPropertyEstimate(eps, Fraction(best, total), mode, witness, tested)


def _monotone(vals, increasing):
    pairs = list(zip(vals, vals[1:]))
    if increasing:
        return all(b >= a for a, b in pairs) and vals[-1] > vals[0]
    return all(b <= a for a, b in pairs) and vals[-1] < vals[0]


def normality_report(systems):
    """Per-instance ratios and trend verdicts for the normality conditions.

    C1 asks for growing ambients, C2 for ``|G|/|S| -> 0`` and
    ``|G|^k/|S| -> inf``, C3 for ``|S^(k)|/|S| -> 1``.  The uniform V-property
    (C4) cannot be decided from finitely many instances and is reported as
    advisory.
    """
    systems = list(systems)
    if len(systems) < 2:
        raise PreconditionError("normality trends need at least two instances")
    rows = []
    for s in systems:
        n, S = s.ambient.order, s.size
        rows.append({
            "order": n,
            "size": S,
            "g_over_s": Fraction(n, S) if S else None,
            "gk_over_s": Fraction(n**s.k, S) if S else None,
            "sk_over_s": Fraction(s.size_k, S) if S else None,
        })
    if any(r["size"] == 0 for r in rows):
        return {"rows": rows, "C1": None, "C2": False, "C3": False, "C4": "advisory",
                "verdict": "not normal"}
    orders = [r["order"] for r in rows]
    c1 = all(b > a for a, b in zip(orders, orders[1:]))
    g_s = [r["g_over_s"] for r in rows]
    gk_s = [r["gk_over_s"] for r in rows]
    sk_s = [r["sk_over_s"] for r in rows]
    c2 = _monotone(g_s, increasing=False) and _monotone(gk_s, increasing=True)
    c3 = _monotone(sk_s, increasing=True) or all(v == 1 for v in sk_s)
    verdict = "consistent with normal" if (c1 and c2 and c3) else "not normal"
    return {"rows": rows, "C1": c1, "C2": c2, "C3": c3, "C4": "advisory", "verdict": verdict}

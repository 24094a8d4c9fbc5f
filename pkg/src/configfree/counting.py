"""The k-uniform hypergraph of a system and exact counting of configuration-free sets.

Vertices are ambient element indices; edges are the supports of the tuples
in S^(k).  A set is configuration-free exactly when it is independent in this
hypergraph, so all counting and maximum-free-set searches run on bitmask
representations of the edges.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import BudgetExceeded, ConfigError, PreconditionError

#: Default node budget for branch-and-bound searches.
DEFAULT_NODE_BUDGET = 5 * 10**6


@dataclass
class Hypergraph:
    n: int
    k: int
    edges: np.ndarray  # (E, k) sorted rows of sorted vertex indices

    @property
    def num_edges(self):
        return len(self.edges)

    def masks(self, vertices=None):
        """Edges as Python-int bitmasks, optionally relabelled onto ``vertices``."""
        if vertices is None:
            return [sum(1 << int(v) for v in e) for e in self.edges]
        pos = np.full(self.n, -1, dtype=np.int64)
        pos[np.asarray(vertices, dtype=np.int64)] = np.arange(len(vertices))
        local = pos[self.edges]
        local = local[(local >= 0).all(axis=1)]
        return [sum(1 << int(v) for v in e) for e in local]

    def induced(self, vertices):
        """Sub-hypergraph on ``vertices`` (edges entirely inside), keeping global labels."""
        inside = np.zeros(self.n, dtype=bool)
        inside[np.asarray(vertices, dtype=np.int64)] = True
        keep = inside[self.edges].all(axis=1) if len(self.edges) else np.zeros(0, dtype=bool)
        return Hypergraph(self.n, self.k, self.edges[keep])

    def is_independent(self, vertices):
        inside = np.zeros(self.n, dtype=bool)
        inside[np.asarray(list(vertices), dtype=np.int64)] = True
        return not (len(self.edges) and inside[self.edges].all(axis=1).any())


def build_hypergraph(sys):
    """Hypergraph on the ambient whose edges are the supports of S^(k)."""
    if sys.orbit_stored:
        G = sys.ambient
        reps = sys.top_rows()
        g = np.arange(G.order, dtype=np.int64)
        rows = G.op(reps[:, None, :], g[None, :, None]).reshape(-1, sys.k) if len(reps) else reps
    else:
        rows = sys.top_rows()
    if len(rows) == 0:
        edges = np.zeros((0, sys.k), dtype=np.int64)
    else:
        edges = np.unique(np.sort(rows, axis=1), axis=0)
    return Hypergraph(sys.ambient.order, sys.k, edges)


def delta_ell(H, ell):
    """Max number of edges containing a common ell-set of vertices."""
    if not 1 <= ell <= H.k:
        raise ConfigError(f"ell must lie in [1, {H.k}]")
    if H.num_edges == 0:
        return 0
    subs = np.concatenate([H.edges[:, list(c)] for c in itertools.combinations(range(H.k), ell)])
    if H.n ** ell < 2**62:
        keys = np.zeros(len(subs), dtype=np.int64)
        for j in range(ell):
            keys = keys * H.n + subs[:, j]
        _, counts = np.unique(keys, return_counts=True)
    else:
        _, counts = np.unique(subs, axis=0, return_counts=True)
    return int(counts.max())


# ---------------------------------------------------------------------------
# branch and bound on bitmask hypergraphs

class _Budget:
    def __init__(self, limit):
        self.limit = limit
        self.nodes = 0

    def tick(self):
        self.nodes += 1
        if self.limit is not None and self.nodes > self.limit:
            raise BudgetExceeded("branch-and-bound node budget exhausted",
                                 required=self.nodes, budget=self.limit)


def _pick_vertex(E):
    deg = {}
    for e in E:
        m = e
        while m:
            b = m & -m
            deg[b] = deg.get(b, 0) + 1
            m ^= b
    return max(deg, key=lambda b: (deg[b], -b.bit_length()))


def _include(E, P, v):
    """Residual (edges, candidates) after putting vertex ``v`` in the set."""
    forbid, out = 0, []
    for e in E:
        if e & v:
            r = e & ~v
            if r & (r - 1) == 0:
                forbid |= r
            else:
                out.append(r)
        else:
            out.append(e)
    P = P & ~v & ~forbid
    if forbid:
        out = [e for e in out if not e & forbid]
    return out, P


def _exclude(E, P, v):
    return [e for e in E if not e & v], P & ~v


def _poly_mul_binom(poly, m):
    """Multiply a coefficient list by (1+x)^m."""
    if m == 0:
        return poly
    row = [math.comb(m, j) for j in range(m + 1)]
    out = [0] * (len(poly) + m)
    for i, a in enumerate(poly):
        if a:
            for j, b in enumerate(row):
                out[i + j] += a * b
    return out


def _count_rec(E, P, budget):
    budget.tick()
    if not E:
        return [math.comb(P.bit_count(), j) for j in range(P.bit_count() + 1)]
    cover = 0
    for e in E:
        cover |= e
    free = P & ~cover
    v = _pick_vertex(E)
    E1, P1 = _include(E, P & ~free, v)
    E0, P0 = _exclude(E, P & ~free, v)
    with_v = [0] + _count_rec(E1, P1, budget)
    without = _count_rec(E0, P0, budget)
    size = max(len(with_v), len(without))
    poly = [(with_v[i] if i < len(with_v) else 0) + (without[i] if i < len(without) else 0)
            for i in range(size)]
    return _poly_mul_binom(poly, free.bit_count())


def free_set_counts(H, budget_nodes=DEFAULT_NODE_BUDGET):
    """``counts[t]`` = number of independent t-sets of ``H``, for t = 0..n."""
    budget = _Budget(budget_nodes)
    poly = _count_rec(H.masks(), (1 << H.n) - 1, budget)
    poly += [0] * (H.n + 1 - len(poly))
    return poly[: H.n + 1]


def _as_hypergraph(obj):
    return obj if isinstance(obj, Hypergraph) else build_hypergraph(obj)


def count_free_sets(sys, t, budget_nodes=DEFAULT_NODE_BUDGET):
    """Exact number of t-subsets of the ambient containing no S^(k) configuration."""
    H = _as_hypergraph(sys)
    if not 0 <= t <= H.n:
        return 0
    return free_set_counts(H, budget_nodes)[t]


@dataclass
class MaxFreeResult:
    size: int
    witness: tuple
    exact: bool
    nodes: int = 0
    flag: str = "exact"


def _packing_bound(P, E):
    used = cnt = 0
    for e in sorted(E, key=int.bit_count):
        if not e & used:
            used |= e
            cnt += 1
    return P.bit_count() - cnt


def _mis(E, n, target, budget):
    """Maximum independent set by branch and bound; stops early once ``target`` is met."""
    best = [0, 0]  # size, mask

    def rec(I, P, E):
        budget.tick()
        size = I.bit_count()
        if size + P.bit_count() <= best[0]:
            return False
        if not E:
            I |= P
            if I.bit_count() > best[0]:
                best[:] = [I.bit_count(), I]
            return target is not None and best[0] >= target
        if size + _packing_bound(P, E) <= best[0]:
            return False
        cover = 0
        for e in E:
            cover |= e
        free = P & ~cover
        I |= free
        P &= ~free
        v = _pick_vertex(E)
        E1, P1 = _include(E, P, v)
        if rec(I | v, P1, E1):
            return True
        E0, P0 = _exclude(E, P, v)
        return rec(I, P0, E0)

    rec(0, (1 << n) - 1, E)
    return best[0], best[1]


def _greedy_free(E, n):
    """Greedy independent set: add vertices in order of increasing degree."""
    deg = [0] * n
    for e in E:
        for i in range(n):
            if e >> i & 1:
                deg[i] += 1
    I = 0
    for v in sorted(range(n), key=lambda i: (deg[i], i)):
        cand = I | (1 << v)
        if not any(e & cand == e for e in E):
            I = cand
    return I


def _milp_max(E, n, target):
    """Exact maximum (or feasibility at ``target``) via integer programming."""
    from scipy.optimize import Bounds, LinearConstraint, milp

    if not E:
        return n, (1 << n) - 1
    A = np.zeros((len(E), n))
    for j, e in enumerate(E):
        for i in range(n):
            if e >> i & 1:
                A[j, i] = 1
    ub = A.sum(axis=1) - 1
    cons = [LinearConstraint(A, -np.inf, ub)]
    if target is not None:
        cons.append(LinearConstraint(np.ones((1, n)), target, np.inf))
        c = np.zeros(n)
    else:
        c = -np.ones(n)
    res = milp(c, constraints=cons, integrality=np.ones(n), bounds=Bounds(0, 1))
    if res.status == 2:  # infeasible
        return -1, 0
    if res.status != 0:
        raise BudgetExceeded(f"integer program did not finish: {res.message}")
    x = np.round(res.x).astype(int)
    mask = sum(1 << i for i in range(n) if x[i])
    return int(x.sum()), mask


def local_edges(H, X):
    """Edges of ``H`` inside ``X`` relabelled to positions in ``X``, as int32 rows."""
    pos = np.full(H.n, -1, dtype=np.int64)
    pos[X] = np.arange(len(X))
    loc = pos[H.edges] if len(H.edges) else np.zeros((0, H.k), dtype=np.int64)
    return np.ascontiguousarray(loc[(loc >= 0).all(axis=1)], dtype=np.int32)


def _compiled_max(H, X, target, node_limit):
    """Largest free subset via the compiled decision search.

    Without ``target`` the decision is repeated with increasing goals, starting
    above a greedy solution.  Returns ``(size, witness positions, flag, nodes)``.
    """
    from ._kernels import decide_free_set

    m = len(X)
    loc = local_edges(H, X)
    limit = 0 if node_limit is None else int(node_limit)
    if target is not None:
        status, nodes, st = decide_free_set(m, loc, int(target), limit)
        if status < 0:
            raise BudgetExceeded("node budget exhausted", required=int(nodes), budget=node_limit)
        if status == 0:
            return target - 1, (), "below-target", int(nodes)
        idx = tuple(int(i) for i in np.nonzero(st == 1)[0])
        return len(idx), idx, "reached-target", int(nodes)
    mask = _greedy_free([sum(1 << int(v) for v in e) for e in loc], m)
    best = tuple(i for i in range(m) if mask >> i & 1)
    total = 0
    while len(best) < m:
        status, nodes, st = decide_free_set(m, loc, len(best) + 1, limit)
        total += int(nodes)
        if status < 0:
            raise BudgetExceeded("node budget exhausted", required=total, budget=node_limit)
        if status == 0:
            break
        best = tuple(int(i) for i in np.nonzero(st == 1)[0])
    return len(best), best, "exact", total


def max_free_subset(sys, within=None, budget_nodes=DEFAULT_NODE_BUDGET, target=None,
                    backend="compiled"):
    """Largest subset of ``within`` (default: whole ambient) with no S^(k) configuration.

    With ``target`` the search stops once a free set of that size is found:
    the flag is then ``reached-target`` (size only a lower bound) or
    ``below-target`` (the maximum is smaller than ``target``; ``size`` is
    ``target - 1`` as an upper bound).  If the node budget runs out a greedy
    lower bound is returned, flagged ``lower-bound-only``.

    Backends: ``compiled`` (numba search), ``bnb`` (pure Python) and
    ``milp`` (scipy/HiGHS integer program).
    """
    H = _as_hypergraph(sys)
    X = np.arange(H.n) if within is None else np.unique(np.asarray(list(within), dtype=np.int64))
    m = len(X)
    if target is not None and target <= 0:
        return MaxFreeResult(0, (), True, 0, "reached-target")
    budget = _Budget(budget_nodes)
    try:
        if backend == "compiled":
            size, pos, flag, nodes = _compiled_max(H, X, target, budget_nodes)
            return MaxFreeResult(size, tuple(int(X[i]) for i in pos), True, nodes, flag)
        E = H.masks(X)
        if backend == "bnb":
            size, mask = _mis(E, m, target, budget)
        elif backend == "milp":
            size, mask = _milp_max(E, m, target)
            if size < 0:
                return MaxFreeResult(target - 1, (), True, 0, "below-target")
        else:
            raise ConfigError(f"unknown backend {backend!r}")
    except BudgetExceeded:
        mask = _greedy_free(H.masks(X), m)
        return MaxFreeResult(mask.bit_count(), _unmask(mask, X), False, budget.nodes,
                             "lower-bound-only")
    flag = "exact"
    if target is not None:
        flag = "below-target" if size < target else "reached-target"
        if size < target:
            size = target - 1
    return MaxFreeResult(size, _unmask(mask, X), True, budget.nodes, flag)


def _unmask(mask, X):
    return tuple(int(X[i]) for i in range(len(X)) if mask >> i & 1)


# ---------------------------------------------------------------------------
# bounds

@dataclass
class TRange:
    t_lo: int
    t_hi: int
    empty: bool
    argmax_ell: int
    C: float
    factor: float  # max_l (...)^(1/(l-1))


def _ceil_power_bound(C, n, delta, bases):
    """Smallest integer T with T >= C n / delta * b^(1/(l-1)) for every (l, b) in ``bases``.

    The float estimate is corrected with exact rational comparisons.
    """
    scale = Fraction(C) * n / Fraction(delta)

    def ok(T):
        return all(Fraction(T) >= 0 and (Fraction(T) / scale) ** (l - 1) >= b for l, b in bases)

    est = max(float(scale) * float(b) ** (1.0 / (l - 1)) for l, b in bases)
    T = max(0, math.ceil(est) - 2)
    while not ok(T):
        T += 1
    while T > 0 and ok(T - 1):
        T -= 1
    return T


def t_range(sys, delta, C=1, table=None):
    """Admissible sizes ``t_lo <= t <= t_hi`` for the counting bound."""
    from .system import freedom_table

    table = table or freedom_table(sys)
    k, n = sys.k, sys.ambient.order
    a1 = table.alpha_k[0]
    if a1 == 0:
        raise PreconditionError("alpha^k_1 is zero: S^(k) is empty")
    delta = Fraction(delta).limit_denominator(10**9) if not isinstance(delta, Fraction) else delta
    bases = [(l, Fraction(table.alpha_k[l - 1], a1) * Fraction(math.comb(k, l), k))
             for l in range(2, k + 1)]
    vals = [float(b) ** (1.0 / (l - 1)) for l, b in bases]
    j = int(np.argmax(vals))
    t_lo = _ceil_power_bound(C, n, delta, bases)
    t_hi = math.floor(delta * n / 2)
    return TRange(t_lo, t_hi, t_lo > t_hi, bases[j][0], float(C), vals[j])


def container_constant(sys, delta, gamma, table=None):
    """The explicit container constant ``(k-1)((1/d') ln(1/eps) + 1)``.

    ``d' = (c k 2^(k+1))^(-k)`` with ``c = alpha^k_1 (k-1)! |G| / |S^(k)|`` and
    ``eps = xi / |S^(k)|``, ``xi = max((gamma-1)|S| + |S^(k)|, delta n / 2)``.
    ``gamma`` is an empirical estimate, so the result is an estimate too.
    """
    from .system import freedom_table

    if not 0 < Fraction(gamma) <= 1:
        raise ConfigError("gamma must lie in (0, 1]", pointer="/gamma")
    table = table or freedom_table(sys)
    k, n = sys.k, sys.ambient.order
    sk = sys.size_k
    if sk == 0:
        raise PreconditionError("S^(k) is empty")
    c = Fraction(table.alpha_k[0] * math.factorial(k - 1) * n, sk)
    xi = max((Fraction(gamma) - 1) * sys.size + sk, Fraction(delta) * n / 2)
    eps = xi / sk
    log_dprime = -k * math.log(float(c) * k * 2 ** (k + 1))
    # C = (k-1) (exp(-log d') ln(1/eps) + 1); kept in log form when huge
    ln_inv_eps = -math.log(float(eps))
    try:
        C = (k - 1) * (math.exp(-log_dprime) * ln_inv_eps + 1)
    except OverflowError:
        C = math.inf
    return {"C": C, "c": float(c), "xi": float(xi), "epsilon": float(eps),
            "log_delta_prime": log_dprime, "estimate": True}


def log2_binom(a, b):
    if b < 0 or b > a:
        return -math.inf
    return (math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)) / math.log(2)


@dataclass
class BoundReport:
    t: int
    delta: Fraction
    beta: Fraction
    log2_bound_raw: float
    bound_clean: int
    log2_bound_clean: float
    t_lo: int = None
    t_hi: int = None
    in_range: bool = None
    C: float = 1.0
    oracle: int = None
    verdict: str = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "t": self.t,
            "delta": {"num": self.delta.numerator, "den": self.delta.denominator},
            "beta": {"num": self.beta.numerator, "den": self.beta.denominator} if self.beta is not None else None,
            "log2_bound_raw": self.log2_bound_raw,
            "bound_clean": str(self.bound_clean) if self.bound_clean is not None else None,
            "log2_bound_clean": self.log2_bound_clean,
            "t_lo": self.t_lo,
            "t_hi": self.t_hi,
            "in_range": self.in_range,
            "C": self.C,
            "oracle": str(self.oracle) if self.oracle is not None else None,
            "verdict": self.verdict,
            "notes": self.notes,
        }


def log2_bound_raw(t, delta, n):
    """log2 of ``t (2e/delta^2)^(delta t) C(floor(delta n), t)``."""
    d = float(delta)
    m = math.floor(Fraction(delta) * n)
    if t == 0:
        return -math.inf
    return math.log2(t) + d * t * math.log2(2 * math.e / d**2) + log2_binom(m, t)


def raw_at_most_clean(t, delta, beta, n):
    """Exact check of ``t (2e/delta^2)^(delta t) C(floor(delta n), t) <= C(floor(beta n), t)``.

    ``e`` is replaced by the rational upper bound 2.7182818285, so a True
    answer is rigorous.
    """
    delta, beta = Fraction(delta), Fraction(beta)
    m = math.floor(delta * n)
    clean = math.comb(math.floor(beta * n), t)
    raw_binom = math.comb(m, t)
    if raw_binom == 0:
        return True
    base = 2 * Fraction(27182818285, 10**10) / delta**2
    dt = delta * t
    # base^(p/q) <= R  <=>  base^p <= R^q  with delta t = p/q
    R = Fraction(clean, t * raw_binom)
    return base ** dt.numerator <= R ** dt.denominator


def bound_report(sys, t, delta=None, beta=None, C=1, oracle=None, table=None,
                 run_oracle=False, budget_nodes=DEFAULT_NODE_BUDGET):
    """Both counting bounds at size ``t``, optionally against the exact count.

    Given ``beta`` the raw bound uses ``delta = min(beta/2, 1/40)``; given only
    ``delta`` the clean bound uses ``beta = 2 delta``.
    """
    n = sys.ambient.order
    if not 0 <= t <= n:
        raise ConfigError(f"t must lie in [0, {n}]")
    if beta is None and delta is None:
        raise ConfigError("give delta or beta")
    if beta is not None:
        beta = Fraction(beta).limit_denominator(10**9)
        delta = min(beta / 2, Fraction(1, 40)) if delta is None else Fraction(delta).limit_denominator(10**9)
    else:
        delta = Fraction(delta).limit_denominator(10**9)
        beta = 2 * delta
    clean = math.comb(math.floor(beta * n), t)
    rep = BoundReport(
        t=t, delta=delta, beta=beta,
        log2_bound_raw=log2_bound_raw(t, delta, n),
        bound_clean=clean,
        log2_bound_clean=math.log2(clean) if clean else -math.inf,
        C=float(C),
    )
    try:
        tr = t_range(sys, delta, C, table)
        rep.t_lo, rep.t_hi = tr.t_lo, tr.t_hi
        rep.in_range = tr.t_lo <= t <= tr.t_hi
    except PreconditionError as exc:
        rep.notes.append(str(exc))
    if oracle is None and run_oracle:
        oracle = count_free_sets(sys, t, budget_nodes)
    if oracle is not None:
        rep.oracle = int(oracle)
        rep.verdict = "bound holds" if clean >= oracle else "bound exceeded by oracle"
    return rep


def bound_table(sys, beta, C=1, ts=None, oracle=True, budget_nodes=DEFAULT_NODE_BUDGET):
    """One :class:`BoundReport` per t (default all t in [0, n])."""
    n = sys.ambient.order
    ts = range(n + 1) if ts is None else ts
    counts = None
    if oracle:
        try:
            counts = free_set_counts(_as_hypergraph(sys), budget_nodes)
        except BudgetExceeded:
            counts = None
    from .system import freedom_table

    table = freedom_table(sys) if sys.size_k else None
    return [bound_report(sys, t, beta=beta, C=C, oracle=counts[t] if counts else None,
                         table=table)
            for t in ts]


def bound_csv(reports):
    """CSV rows ``t, oracle_count_or_NA, log2_bound_raw, log2_bound_clean, in_range_flag``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "oracle_count_or_NA", "log2_bound_raw", "log2_bound_clean", "in_range_flag"])
    for r in reports:
        w.writerow([
            r.t,
            "NA" if r.oracle is None else r.oracle,
            _fmt(r.log2_bound_raw),
            _fmt(r.log2_bound_clean),
            "NA" if r.in_range is None else int(r.in_range),
        ])
    return buf.getvalue()


def _fmt(x):
    if x == -math.inf:
        return "-inf"
    return f"{x:.6f}"

"""Constructors for concrete configuration families.

Each constructor returns a :class:`FamilyInstance` holding the system and the
scaling exponents predicted for it, so sweeps can compare measured slopes
against the predictions.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import BudgetExceeded, ConfigError, PreconditionError
from .groups import (
    Box,
    Group,
    Subgroup,
    group_from_descriptor,
    make_abelian_group,
    subgroup_from_members,
    subgroup_generated,
)
from .linear import SCHUR_MATRIX, ap_matrix, as_matrix, box_restriction_lambda, compute_m_A
from .random_sparse import trial_rng
from .system import DEFAULT_BUDGET, ConfigSystem, freedom_table


@dataclass
class FamilyInstance:
    name: str
    params: dict
    system: ConfigSystem
    expected: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    components: dict = field(default_factory=dict)

    def summary(self):
        return {"family": self.name, "params": self.params, "expected": self.expected,
                "metadata": self.metadata, "size": self.system.size,
                "size_k": self.system.size_k}


def _as_subgroup(G, H, label):
    if isinstance(H, Subgroup):
        if H.parent != G:
            raise ConfigError(f"{label} is a subgroup of {H.parent}, not of {G}")
        return H
    try:
        return subgroup_from_members(G, [G.index(h) for h in H])
    except PreconditionError as exc:
        raise ConfigError(f"{label} is not a subgroup of {G}: {exc}") from None


def _need_abelian(G):
    if not isinstance(G, Group) or G.kind != "abelian":
        raise ConfigError("this family needs a finite abelian group")


def _check_budget(rows, k, budget, what):
    if rows * k > budget:
        raise BudgetExceeded(f"{what} needs {rows} representatives of degree {k}",
                             required=rows * k, budget=budget)


def _is_product_case(G, H, K):
    """``G = H x K`` with trivial intersection and equal orders."""
    return (len(H) == len(K) and len(H) * len(K) == G.order
            and not (set(H.members) & set(K.members)) - {G.identity})


# ---------------------------------------------------------------------------
# rectangles and their grid generalisation

def _grid_reps(G, H, K, r, budget):
    k = (r + 1) ** 2
    nrows = len(H) ** r * len(K) ** r
    _check_budget(nrows, k, budget, "grid configuration")
    Ha, Ka = H.member_array(), K.member_array()
    # all choices of (a_1..a_r) and (b_1..b_r), with a_0 = b_0 = 0
    grids = np.meshgrid(*([Ha] * r + [Ka] * r), indexing="ij")
    flat = np.stack([g.ravel() for g in grids], axis=1) if r else np.zeros((1, 0), np.int64)
    zero = np.full((len(flat), 1), G.identity, dtype=np.int64)
    a = np.concatenate([zero, flat[:, :r]], axis=1)
    b = np.concatenate([zero, flat[:, r:]], axis=1)
    cols = [G.op(b[:, i], a[:, j]) for i in range(r + 1) for j in range(r + 1)]
    return np.stack(cols, axis=1).astype(np.int64)


def generalized_rectangles(G, H, K, r, budget=DEFAULT_BUDGET):
    """Grid configurations ``x + b_i + a_j`` for ``0 <= i, j <= r`` (row-major in ``i``)."""
    _need_abelian(G)
    if r < 1:
        raise ConfigError("r must be at least 1")
    H = _as_subgroup(G, H, "H")
    K = _as_subgroup(G, K, "K")
    k = (r + 1) ** 2
    reps = _grid_reps(G, H, K, r, budget)
    sys = ConfigSystem(G, k, reps=reps, provenance={"kind": "family", "family": "generalized_rectangles"})
    sk = sys.size_k
    big = max(len(H), len(K))
    # max(|H|,|K|) <= (|S^(k)|/|G|)^((r+1)/(r(r+2))), compared in integers
    hyp = sk > 0 and big ** (r * (r + 2)) * G.order ** (r + 1) <= sk ** (r + 1)
    expected = {}
    if _is_product_case(G, H, K):
        expected["t_lo_exponent"] = Fraction(2 * k - 2 - 2 * r, k - 1)
    meta = {
        "hypothesis_max_subgroup": bool(hyp),
        "t_lo_scale": (G.order**k / sk) ** (1 / (k - 1)) if sk else None,
        "H_order": len(H),
        "K_order": len(K),
    }
    params = {"G": repr(G), "H": list(H.generators), "K": list(K.generators), "r": r}
    return FamilyInstance("generalized_rectangles", params, sys, expected, meta)


def rectangles(G, H, K, budget=DEFAULT_BUDGET):
    """``(x, x+a, x+b, x+a+b)`` with ``a`` in ``H`` and ``b`` in ``K``."""
    inst = generalized_rectangles(G, H, K, 1, budget)
    # generalized_rectangles orders r=1 as (x, x+a, x+b, x+b+a): same tuples
    inst.name = "rectangles"
    inst.params.pop("r")
    inst.system.provenance["family"] = "rectangles"
    return inst


def coordinate_rectangles(n, r=1, budget=DEFAULT_BUDGET):
    """Rectangles in ``Z_n^2`` with ``H = Z_n x 0`` and ``K = 0 x Z_n``."""
    G = make_abelian_group([n, n])
    H = subgroup_generated(G, [G.index((1, 0))])
    K = subgroup_generated(G, [G.index((0, 1))])
    if r == 1:
        return rectangles(G, H, K, budget)
    return generalized_rectangles(G, H, K, r, budget)


# ---------------------------------------------------------------------------

def _phi_map(G, H, phi):
    if callable(phi):
        return {a: int(phi(a)) for a in H.members}
    if isinstance(phi, dict):
        return {G.index(a): G.index(v) for a, v in phi.items()} if not all(
            isinstance(a, int) for a in phi) else {int(a): int(v) for a, v in phi.items()}
    # integer matrix acting on components
    A = np.array(as_matrix(phi), dtype=np.int64)
    comps = G.decode(H.member_array())
    img = G.encode(comps @ A.T)
    return dict(zip(H.members, (int(v) for v in img)))


def slanted_squares(G, H, phi, strict=True, budget=DEFAULT_BUDGET):
    """``(x, x+a, x+phi(a), x+a+phi(a))`` for ``a`` in ``H``.

    ``phi`` is a callable on element indices, a dict, or an integer matrix on
    residue components.  Elements with ``a = +-phi(a)`` are reported in the
    metadata; with ``strict=True`` they raise.
    """
    _need_abelian(G)
    H = _as_subgroup(G, H, "H")
    f = _phi_map(G, H, phi)
    if set(f) != set(H.members):
        raise ConfigError("phi must be defined on every element of H")
    mem = H.member_array()
    img = np.array([f[a] for a in H.members], dtype=np.int64)
    pos = {a: i for i, a in enumerate(H.members)}
    sums = G.op(mem[:, None], mem[None, :])
    lhs = img[np.vectorize(pos.__getitem__)(sums)]
    rhs = G.op(img[:, None], img[None, :])
    bad = np.argwhere(lhs != rhs)
    if len(bad):
        i, j = bad[0]
        raise PreconditionError("phi is not a homomorphism on H",
                                witness=(G.element(mem[i]), G.element(mem[j])))
    if len(np.unique(img)) != len(img):
        raise PreconditionError("phi is not injective on H")
    nz = mem != G.identity
    viol = nz & ((img == mem) | (img == G.inv(mem)))
    witnesses = [G.element(a) for a in mem[viol]]
    if strict and witnesses:
        raise PreconditionError(f"a = +-phi(a) for {len(witnesses)} nonzero a",
                                witness=witnesses[:10])
    _check_budget(len(mem), 4, budget, "slanted squares")
    zero = np.full(len(mem), G.identity, dtype=np.int64)
    reps = np.stack([zero, mem, img, G.op(mem, img)], axis=1)
    sys = ConfigSystem(G, 4, reps=reps, provenance={"kind": "family", "family": "slanted_squares"})
    meta = {"violations": len(witnesses), "violation_witnesses": witnesses[:10]}
    return FamilyInstance("slanted_squares", {"G": repr(G), "H": list(H.generators)}, sys, {}, meta)


def rhombi(q, budget=DEFAULT_BUDGET):
    """Rhombi in ``Z_q^2``: slanted squares with ``H = G`` and ``phi(a1, a2) = (a2, a1)``.

    The diagonal directions ``a1 = +-a2`` fail the slanted-square condition;
    they are kept and counted in the metadata.
    """
    G = make_abelian_group([q, q])
    H = subgroup_generated(G, [G.index((1, 0)), G.index((0, 1))])
    inst = slanted_squares(G, H, [[0, 1], [1, 0]], strict=False, budget=budget)
    inst.name = "rhombi"
    inst.params = {"q": q}
    return inst


# ---------------------------------------------------------------------------
# boxes

def simplices_box(n, m, sign_restricted=False, budget=DEFAULT_BUDGET):
    """``(x, x + a e_1, ..., x + a e_m)`` inside ``[1, n]^m``; degree ``m + 1``."""
    if n < 1 or m < 1:
        raise ConfigError("need n >= 1 and m >= 1")
    box = Box(n, m)
    steps = np.arange(-(n - 1), n, dtype=np.int64)
    cand = box.order * len(steps)
    _check_budget(cand, m + 1, budget, "simplex enumeration")
    base = box.coords(np.arange(box.order))  # (N, m)
    X = np.repeat(base, len(steps), axis=0)
    a = np.tile(steps, box.order)
    pts = np.repeat(X[:, None, :], m + 1, axis=1)
    for j in range(m):
        pts[:, j + 1, j] += a
    ok = ((pts >= 1) & (pts <= n)).all(axis=(1, 2))
    full_rows = box.encode(pts[ok])
    full = ConfigSystem(box, m + 1, full_rows,
                        provenance={"kind": "family", "family": "simplices_box"})
    meta = {}
    if sign_restricted:
        rows = box.encode(pts[ok & (a >= 0)])
        sys = ConfigSystem(box, m + 1, rows, provenance=dict(full.provenance, sign_restricted=True))
        ta, tb = freedom_table(sys), freedom_table(full)
        meta["alpha_comparison"] = {"restricted": ta.alpha, "symmetric": tb.alpha,
                                    "restricted_k": ta.alpha_k, "symmetric_k": tb.alpha_k}
    else:
        sys = full
    params = {"n": n, "m": m, "sign_restricted": bool(sign_restricted)}
    return FamilyInstance("simplices_box", params, sys, {}, meta)


def box_linear_system(A, n, budget=DEFAULT_BUDGET):
    """Solutions of ``A x = 0`` over the integers with entries in ``[1, n]``.

    The cyclic system over ``Z_{lam n}`` (``lam`` from
    :func:`box_restriction_lambda`) is returned in ``components["cyclic"]``.
    """
    A = as_matrix(A)
    k = len(A[0])
    box = Box(n, 1)
    Ai = np.array(A, dtype=np.int64)

    def pred(X):
        return ((X + 1) @ Ai.T == 0).all(axis=1)

    sys = ConfigSystem.from_predicate(box, k, pred, budget=budget, vectorized=True)
    sys.provenance = {"kind": "family", "family": "box_linear_system", "matrix": [list(r) for r in A]}
    lam = box_restriction_lambda(A)
    Z = make_abelian_group([lam * n])
    cyc = ConfigSystem.from_kernel(Z, k, A, budget=budget)
    return FamilyInstance("box_linear_system", {"matrix": [list(r) for r in A], "n": n}, sys, {},
                          {"lambda": lam, "cyclic_order": lam * n}, {"box": sys, "cyclic": cyc})


def alpha_sandwich(inst):
    """Compare the alpha tables of a box system and its cyclic embedding.

    Returns per-level values and ratios; ``holds`` is the lower inequality
    ``alpha(box) <= alpha(cyclic)`` on both S and S^(k).
    """
    tb = freedom_table(inst.components["box"])
    tc = freedom_table(inst.components["cyclic"])

    def ratio(x, y):
        return float(Fraction(y, x)) if x else None

    return {
        "box": tb.alpha, "cyclic": tc.alpha,
        "box_k": tb.alpha_k, "cyclic_k": tc.alpha_k,
        "ratio": [ratio(x, y) for x, y in zip(tb.alpha, tc.alpha)],
        "holds": all(x <= y for x, y in zip(tb.alpha, tc.alpha))
        and all(x <= y for x, y in zip(tb.alpha_k, tc.alpha_k)),
    }


# ---------------------------------------------------------------------------

def ap_system(q, r, budget=DEFAULT_BUDGET):
    """``r``-term arithmetic progressions in ``Z_q``."""
    if r < 3:
        raise ConfigError("progressions need r >= 3")
    A = ap_matrix(r)
    G = make_abelian_group([q])
    sys = ConfigSystem.from_kernel(G, r, A, budget=budget)
    expected = {"p_one_exponent": Fraction(-1, r - 1), "m_A": compute_m_A(A).m_A}
    return FamilyInstance("ap_system", {"q": q, "r": r}, sys, expected, {})


def schur_system(q, budget=DEFAULT_BUDGET):
    """Schur triples ``x + y = z`` in ``Z_q`` (not translation invariant)."""
    G = make_abelian_group([q])
    sys = ConfigSystem.from_kernel(G, 3, SCHUR_MATRIX, budget=budget)
    return FamilyInstance("schur", {"q": q}, sys, {}, {})


def nonabelian_equation(G, r, budget=DEFAULT_BUDGET):
    """Solutions of ``x_1^{r_1} ... x_k^{r_k} = e`` (product left to right)."""
    r = [int(v) for v in r]
    k = len(r)
    if k < 2:
        raise ConfigError("need at least two exponents")
    n = G.order
    for j, rj in enumerate(r):
        if rj == 0 or math.gcd(rj, n) != 1:
            raise PreconditionError(f"gcd(r_{j + 1}, |G|) = gcd({rj}, {n}) != 1", witness=(j, rj))
    total = n ** (k - 1)
    _check_budget(total, k, budget, "equation enumeration")
    pw = [np.array([G.power(x, rj) for x in range(n)], dtype=np.int64) for rj in r]
    inv_last = np.empty(n, dtype=np.int64)
    inv_last[pw[-1]] = np.arange(n)
    free = np.stack(np.unravel_index(np.arange(total), (n,) * (k - 1)), axis=1).astype(np.int64)
    prefix = np.full(total, G.identity, dtype=np.int64)
    for j in range(k - 1):
        prefix = G.op(prefix, pw[j][free[:, j]])
    last = inv_last[G.inv(prefix)]
    sols = np.concatenate([free, last[:, None]], axis=1)
    sys = ConfigSystem(G, k, sols, provenance={"kind": "family", "family": "nonabelian_equation",
                                                "r": r})
    expected = {
        "alpha": [n ** (k - i - 1) for i in range(1, k)] + [1],
        "p_one_exponent": Fraction(-(k - 2), k - 1),
        "t_lo_exponent": Fraction(1, k - 1),
    }
    meta = {"exponent_divides_r": sum(r) % G.exponent == 0, "exponent": G.exponent}
    return FamilyInstance("nonabelian_equation", {"G": repr(G), "r": r}, sys, expected, meta)


# ---------------------------------------------------------------------------

GAP_MATRIX = (
    (1, -2, 1, 0, 0, 0, 0, 0),
    (1, 1, 1, 1, 1, 1, 1, -7),
)
GAP_PINNED = (3, 4, 5)
GAP_FREE = (0, 1, 2, 6, 7)


def appendix_gap_example(q, c=4.5, seed=0, budget=DEFAULT_BUDGET):
    """Kernel system in ``Z_q^8`` augmented by a random pinned set ``S'``.

    ``S'`` fixes coordinates 3, 4, 5 to ``(1, 2, 3)`` and keeps each point of
    ``Z_q^5`` on the remaining coordinates with probability ``q^(c-5)``.
    Tuples with repeated entries are kept and counted, never resampled.
    """
    if not 0 < c <= 5:
        raise ConfigError("c must lie in (0, 5]")
    if q ** 6 > budget:
        raise BudgetExceeded(f"kernel system has {q ** 6} solutions", required=q ** 6,
                             budget=budget)
    G = make_abelian_group([q])
    S = ConfigSystem.from_kernel(G, 8, GAP_MATRIX, budget=budget)
    rng = trial_rng(seed, q)
    keep = rng.random(q ** 5) < q ** (c - 5)
    idx = np.flatnonzero(keep)
    free = np.stack(np.unravel_index(idx, (q,) * 5), axis=1).astype(np.int64)
    sp = np.empty((len(idx), 8), dtype=np.int64)
    sp[:, list(GAP_FREE)] = free
    sp[:, list(GAP_PINNED)] = np.array([1, 2, 3], dtype=np.int64) % q
    Sp = ConfigSystem(G, 8, sp, provenance={"kind": "family", "family": "appendix_gap_sampled"})
    both = np.concatenate([S.solutions, Sp.solutions])
    union = ConfigSystem(G, 8, both, provenance={"kind": "family", "family": "appendix_gap_example",
                                                 "q": q, "c": c, "seed": seed})
    srt = np.sort(Sp.solutions, axis=1)
    repeated = int((srt[:, 1:] == srt[:, :-1]).any(axis=1).sum()) if len(srt) else 0
    expected = {"p_one_exponent": Fraction(-1, 4), "p_zero_exponent": Fraction(-2, 3)}
    meta = {
        "sampled_size": Sp.size,
        "sampled_mean": q ** c,
        "sampled_std": math.sqrt(q ** 5 * q ** (c - 5) * (1 - q ** (c - 5))),
        "sampled_with_repeats": repeated,
        "overlap": S.size + Sp.size - union.size,
    }
    return FamilyInstance("appendix_gap_example", {"q": q, "c": c, "seed": seed}, union, expected,
                          meta, {"kernel": S, "sampled": Sp})


# ---------------------------------------------------------------------------
# registry for JSON descriptors

def _group(params, key="group"):
    if key not in params:
        raise ConfigError(f"missing {key}", pointer=f"/{key}")
    return group_from_descriptor(params[key])


def _subgroup_param(G, spec, key):
    if isinstance(spec, dict) and "generators" in spec:
        try:
            gens = [G.index(tuple(g) if isinstance(g, list) else g) for g in spec["generators"]]
        except ConfigError as exc:
            raise ConfigError(str(exc), pointer=f"/{key}/generators") from None
        return subgroup_generated(G, gens)
    if isinstance(spec, list):
        return [tuple(g) if isinstance(g, list) else g for g in spec]
    raise ConfigError("subgroup must be {\"generators\": [...]} or a member list", pointer=f"/{key}")


def _rect(p, budget, r_default):
    r = int(p.get("r", r_default))
    if "n" in p:
        return coordinate_rectangles(int(p["n"]), r, budget)
    G = _group(p)
    H = _subgroup_param(G, p.get("H"), "H")
    K = _subgroup_param(G, p.get("K"), "K")
    return rectangles(G, H, K, budget) if r == 1 else generalized_rectangles(G, H, K, r, budget)


def _slanted(p, budget):
    G = _group(p)
    H = _subgroup_param(G, p.get("H"), "H")
    if "phi" not in p:
        raise ConfigError("missing phi matrix", pointer="/phi")
    return slanted_squares(G, H, p["phi"], strict=bool(p.get("strict", True)), budget=budget)


def _box_linear(p, budget):
    if "matrix" not in p:
        raise ConfigError("missing matrix", pointer="/matrix")
    inst = box_linear_system(p["matrix"], int(p["n"]), budget)
    if p.get("embedding") == "cyclic":
        inst.system = inst.components["cyclic"]
    return inst


FAMILIES = {
    "rectangles": lambda p, b: _rect(p, b, 1),
    "generalized_rectangles": lambda p, b: _rect(p, b, 2),
    "slanted_squares": _slanted,
    "rhombi": lambda p, b: rhombi(int(p["q"]), b),
    "simplices_box": lambda p, b: simplices_box(int(p["n"]), int(p["m"]),
                                                bool(p.get("sign_restricted", False)), b),
    "box_linear_system": _box_linear,
    "ap_system": lambda p, b: ap_system(int(p["q"]), int(p.get("r", 3)), b),
    "schur": lambda p, b: schur_system(int(p["q"]), b),
    "nonabelian_equation": lambda p, b: nonabelian_equation(_group(p), p["r"], b),
    "appendix_gap_example": lambda p, b: appendix_gap_example(
        int(p["q"]), float(p.get("c", 4.5)), int(p.get("seed", 0)), b),
}


def build_family(name, params, budget=DEFAULT_BUDGET):
    """Look up ``name`` in :data:`FAMILIES` and build it from a JSON parameter map."""
    if name not in FAMILIES:
        raise ConfigError(f"unknown family {name!r}; known: {sorted(FAMILIES)}", pointer="/family")
    if not isinstance(params, dict):
        raise ConfigError("family params must be an object", pointer="/params")
    try:
        return FAMILIES[name](params, budget)
    except KeyError as exc:
        raise ConfigError(f"missing parameter {exc.args[0]}", pointer=f"/params/{exc.args[0]}") from None

"""Finite ambients: products of cyclic groups, Cayley-table groups, and integer boxes.

Every ambient numbers its elements ``0 .. order-1``.  All bulk computations in
the package run on those indices (numpy integer arrays); ``element`` and
``index`` translate to and from the human-facing labels (residue tuples,
box coordinates, or plain Cayley indices).
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import ConfigError, PreconditionError

#: Groups larger than this are refused by :func:`make_abelian_group`.
ORDER_CAP = 10**7

#: Associativity of user tables is only checked up to this order unless forced.
ASSOC_CHECK_CAP = 64


class FiniteSet:
    """A finite ambient set with elements numbered ``0 .. order-1``."""

    is_group = False

    def __init__(self, order, labels=None):
        if order < 1:
            raise ConfigError("ambient set must be nonempty")
        self.order = int(order)
        self._labels = list(labels) if labels is not None else None
        if self._labels is not None:
            self._lookup = {lab: i for i, lab in enumerate(self._labels)}

    def __len__(self):
        return self.order

    def element(self, i):
        return self._labels[i] if self._labels is not None else int(i)

    def index(self, elem):
        if self._labels is not None:
            try:
                return self._lookup[elem]
            except KeyError:
                raise ConfigError(f"{elem!r} is not an element of {self}") from None
        i = int(elem)
        if not 0 <= i < self.order:
            raise ConfigError(f"{elem!r} is not an element of {self}")
        return i

    def elements(self):
        return [self.element(i) for i in range(self.order)]

    def descriptor(self):
        return {"type": "set", "size": self.order}

    def __repr__(self):
        return f"FiniteSet({self.order})"


class Box(FiniteSet):
    """The integer box ``[1, n]^m`` (a plain set, not a group)."""

    def __init__(self, n, m=1):
        if n < 1 or m < 1:
            raise ConfigError("box needs n >= 1 and m >= 1")
        self.n, self.m = int(n), int(m)
        super().__init__(self.n**self.m)

    def coords(self, idx):
        """Coordinates in ``[1, n]`` for an index array; shape ``idx.shape + (m,)``."""
        idx = np.asarray(idx, dtype=np.int64)
        out = np.empty(idx.shape + (self.m,), dtype=np.int64)
        rest = idx.copy()
        for j in range(self.m - 1, -1, -1):
            out[..., j] = rest % self.n + 1
            rest //= self.n
        return out

    def encode(self, coords):
        coords = np.asarray(coords, dtype=np.int64)
        idx = np.zeros(coords.shape[:-1], dtype=np.int64)
        for j in range(self.m):
            idx = idx * self.n + (coords[..., j] - 1)
        return idx

    def element(self, i):
        c = tuple(int(v) for v in self.coords(np.int64(i)))
        return c[0] if self.m == 1 else c

    def index(self, elem):
        c = (elem,) if self.m == 1 and not isinstance(elem, tuple) else tuple(elem)
        if len(c) != self.m or any(not 1 <= v <= self.n for v in c):
            raise ConfigError(f"{elem!r} is not in [1,{self.n}]^{self.m}")
        return int(self.encode(np.array(c)))

    def descriptor(self):
        return {"box": {"n": self.n, "m": self.m}}

    def __repr__(self):
        return f"Box(n={self.n}, m={self.m})"


class Group(FiniteSet):
    """A finite group, either ``Z_{n1} x ... x Z_{nd}`` or given by a Cayley table.

    Construct through :func:`make_abelian_group`, :func:`make_cayley_group`
    or :func:`named_group`.  Instances are immutable.
    """

    is_group = True

    def __init__(self, kind, order, moduli=None, table=None, name=None):
        super().__init__(order)
        self.kind = kind
        self.name = name
        self.moduli = tuple(moduli) if moduli is not None else None
        self.table = table
        if kind == "abelian":
            self.identity = 0
            strides = [1] * len(self.moduli)
            for j in range(len(self.moduli) - 2, -1, -1):
                strides[j] = strides[j + 1] * self.moduli[j + 1]
            self._strides = np.array(strides, dtype=np.int64)
            self._mods = np.array(self.moduli, dtype=np.int64)
        else:
            self.identity = _find_identity(table)
            self._inv = np.argmax(table == self.identity, axis=1).astype(np.int64)
        self.table_readonly()

    def table_readonly(self):
        if self.table is not None:
            self.table.setflags(write=False)

    @property
    def is_abelian(self):
        if self.kind == "abelian":
            return True
        return bool(np.array_equal(self.table, self.table.T))

    @property
    def exponent(self):
        if self.kind == "abelian":
            return reduce(math.lcm, self.moduli, 1)
        return reduce(math.lcm, (self.element_order(x) for x in range(self.order)), 1)

    # -- index <-> label ---------------------------------------------------
    def decode(self, idx):
        """Residue components of abelian indices; shape ``idx.shape + (d,)``."""
        idx = np.asarray(idx, dtype=np.int64)
        return (idx[..., None] // self._strides) % self._mods

    def encode(self, comps):
        comps = np.asarray(comps, dtype=np.int64) % self._mods
        return comps @ self._strides

    def element(self, i):
        if self.kind == "cayley":
            return int(i)
        comps = tuple(int(v) for v in self.decode(np.int64(i)))
        return comps[0] if len(comps) == 1 else comps

    def index(self, elem):
        if self.kind == "cayley":
            return super().index(elem)
        if isinstance(elem, (tuple, list)):
            comps = tuple(elem)
        elif len(self.moduli) == 1:
            comps = (elem,)
        else:
            raise ConfigError(f"{elem!r} is not an element of {self}")
        if len(comps) != len(self.moduli):
            raise ConfigError(f"{elem!r} has wrong arity for {self}")
        return int(self.encode(np.array([int(c) for c in comps])))

    # -- arithmetic on index arrays -----------------------------------------
    def op(self, a, b):
        if self.kind == "abelian":
            return self.encode(self.decode(a) + self.decode(b))
        return self.table[np.asarray(a), np.asarray(b)]

    def inv(self, a):
        if self.kind == "abelian":
            return self.encode(-self.decode(a))
        return self._inv[np.asarray(a)]

    def sub(self, a, b):
        """``a * b^{-1}`` (``a - b`` in additive notation)."""
        return self.op(a, self.inv(b))

    def power(self, x, r):
        return power(self, x, r)

    def element_order(self, x):
        y, n = int(x), 1
        while y != self.identity:
            y = int(self.op(y, x))
            n += 1
        return n

    def descriptor(self):
        if self.kind == "abelian":
            return {"type": "abelian", "moduli": list(self.moduli)}
        return {"type": "cayley", "table": self.table.tolist()}

    def __repr__(self):
        if self.name:
            return self.name
        if self.kind == "abelian":
            return "x".join(f"Z_{n}" for n in self.moduli)
        return f"CayleyGroup(order={self.order})"

    def __eq__(self, other):
        if not isinstance(other, Group) or other.kind != self.kind:
            return NotImplemented
        if self.kind == "abelian":
            return self.moduli == other.moduli
        return np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash((self.kind, self.moduli, self.order))


def _find_identity(table):
    n = len(table)
    ar = np.arange(n)
    for e in range(n):
        if np.array_equal(table[e], ar) and np.array_equal(table[:, e], ar):
            return e
    raise ConfigError("Cayley table has no identity element")


def make_abelian_group(moduli, order_cap=ORDER_CAP):
    """``Z_{n1} x ... x Z_{nd}`` with componentwise addition."""
    moduli = [int(n) for n in moduli]
    if not moduli:
        raise ConfigError("empty moduli list")
    if any(n < 1 for n in moduli):
        raise ConfigError(f"moduli must be positive, got {moduli}")
    order = math.prod(moduli)
    if order > order_cap:
        raise ConfigError(f"group order {order} exceeds cap {order_cap}")
    return Group("abelian", order, moduli=moduli)


def make_cayley_group(table, check_associativity=None, name=None):
    """Validate a Cayley table and wrap it as a :class:`Group`.

    Associativity costs ``O(|G|^3)`` and by default is only checked for
    ``|G| <= ASSOC_CHECK_CAP``; pass ``check_associativity=True`` to force it.
    """
    try:
        t = np.array(table, dtype=np.int64)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Cayley table is not an integer matrix: {exc}") from None
    if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] == 0:
        raise ConfigError("Cayley table must be a nonempty square matrix")
    n = t.shape[0]
    if t.min() < 0 or t.max() >= n:
        raise ConfigError(f"Cayley table entries must lie in [0, {n})")
    full = np.arange(n)
    for i in range(n):
        if not np.array_equal(np.sort(t[i]), full):
            raise ConfigError(f"not a latin square: row {i} repeats an entry")
        if not np.array_equal(np.sort(t[:, i]), full):
            raise ConfigError(f"not a latin square: column {i} repeats an entry")
    _find_identity(t)
    if check_associativity is None:
        check_associativity = n <= ASSOC_CHECK_CAP
    if check_associativity:
        lhs = t[t[:, :, None], np.arange(n)[None, None, :]]  # (ab)c
        rhs = t[np.arange(n)[:, None, None], t[None, :, :]]  # a(bc)
        bad = np.argwhere(lhs != rhs)
        if len(bad):
            a, b, c = (int(v) for v in bad[0])
            raise PreconditionError(
                f"associativity fails for ({a},{b},{c})", witness=(a, b, c)
            )
    return Group("cayley", n, table=t, name=name)


def dihedral_table(n):
    """Cayley table of the dihedral group of order ``2n``.

    Element ``i + n*j`` is ``r^i s^j`` with ``s r s = r^{-1}``; ``r`` has index 1.
    """
    size = 2 * n
    t = np.empty((size, size), dtype=np.int64)
    for x in range(size):
        a, b = x % n, x // n
        for y in range(size):
            c, d = y % n, y // n
            i = (a + (c if b == 0 else -c)) % n
            t[x, y] = i + n * ((b + d) % 2)
    return t


def symmetric_table(n):
    perms = list(itertools.permutations(range(n)))
    lookup = {p: i for i, p in enumerate(perms)}
    t = np.empty((len(perms), len(perms)), dtype=np.int64)
    for i, p in enumerate(perms):
        for j, q in enumerate(perms):
            t[i, j] = lookup[tuple(p[q[x]] for x in range(n))]
    return t


_NAME_RE = re.compile(r"^(Z|D|S)_?(\d+)(?:\^(\d+))?$")


def named_group(name):
    """Built-in groups: ``Z_n``, ``Z_n^d``, ``D_n`` (order 2n), ``S_n`` (n <= 5)."""
    m = _NAME_RE.match(name.strip())
    if not m:
        raise ConfigError(f"unknown group name {name!r}")
    kind, n, d = m.group(1), int(m.group(2)), m.group(3)
    if kind == "Z":
        return make_abelian_group([n] * (int(d) if d else 1))
    if d:
        raise ConfigError(f"powers are only supported for Z_n, got {name!r}")
    if kind == "D":
        if n < 1:
            raise ConfigError("D_n needs n >= 1")
        return make_cayley_group(dihedral_table(n), name=f"D_{n}")
    if not 1 <= n <= 5:
        raise ConfigError("S_n is only built in for n <= 5")
    return make_cayley_group(symmetric_table(n), name=f"S_{n}")


def group_from_descriptor(desc):
    """Parse a JSON group descriptor (see README) into a :class:`Group`."""
    if isinstance(desc, str):
        return named_group(desc)
    if not isinstance(desc, dict):
        raise ConfigError("group descriptor must be an object or a name", pointer="")
    kind = desc.get("type")
    if kind == "abelian":
        if "moduli" not in desc:
            raise ConfigError("missing moduli", pointer="/moduli")
        return make_abelian_group(desc["moduli"])
    if kind == "cayley":
        if "table" not in desc:
            raise ConfigError("missing table", pointer="/table")
        return make_cayley_group(desc["table"])
    if kind == "named":
        return named_group(desc.get("name", ""))
    raise ConfigError(f"unknown group type {kind!r}", pointer="/type")


def power(G, x, r):
    """``x`` composed with itself ``r`` times; negative ``r`` uses the inverse."""
    x = int(x)
    if G.kind == "abelian":
        return int(G.encode(G.decode(x) * int(r)))
    if r < 0:
        x, r = int(G.inv(x)), -r
    result = G.identity
    while r:
        if r & 1:
            result = int(G.op(result, x))
        x = int(G.op(x, x))
        r >>= 1
    return result


@dataclass(frozen=True)
class Subgroup:
    parent: Group
    members: tuple
    generators: tuple

    @property
    def order(self):
        return len(self.members)

    def __len__(self):
        return len(self.members)

    def __contains__(self, idx):
        return int(idx) in self._set

    @property
    def _set(self):
        return frozenset(self.members)

    def member_array(self):
        return np.array(self.members, dtype=np.int64)


def subgroup_generated(G, gens):
    """Closure of ``gens`` (element indices) under the group operation."""
    gens = tuple(int(g) for g in gens)
    for g in gens:
        if not 0 <= g < G.order:
            raise ConfigError(f"generator {g} is not an element index of {G}")
    members = {G.identity}
    frontier = [G.identity]
    while frontier:
        prods = G.op(np.repeat(frontier, len(gens)), np.tile(gens, len(frontier))) if gens else []
        frontier = [int(y) for y in np.unique(prods) if int(y) not in members]
        members.update(frontier)
    return Subgroup(G, tuple(sorted(members)), gens)


def subgroup_from_members(G, members):
    """Wrap an explicit element set as a :class:`Subgroup` after checking closure."""
    mem = sorted({int(x) for x in members})
    s = set(mem)
    if G.identity not in s:
        raise PreconditionError("subgroup must contain the identity")
    arr = np.array(mem, dtype=np.int64)
    prods = G.sub(arr[:, None], arr[None, :])
    if not np.isin(prods, arr).all():
        raise PreconditionError("element set is not closed under the group operation")
    return Subgroup(G, tuple(mem), tuple(mem))


class BlockHom:
    """An integer map ``G^{k1} -> G^{k2}`` built from ``k2 x k1`` blocks of ``m x m`` matrices.

    ``m == 1`` means every entry acts as a scalar on whole group elements, which
    works for any abelian product.  ``m == d`` (the number of cyclic factors)
    lets each block mix the components of one coordinate slot.
    """

    def __init__(self, matrix, m=1):
        rows = [[int(v) for v in row] for row in matrix]
        if not rows or not rows[0]:
            raise ConfigError("homomorphism matrix must be nonempty")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ConfigError("homomorphism matrix rows have different lengths")
        if len(rows) % m or width % m:
            raise ConfigError(f"matrix shape {len(rows)}x{width} is not a multiple of block size {m}")
        self.rows = tuple(tuple(r) for r in rows)
        self.m = int(m)
        self.k1 = width // m
        self.k2 = len(rows) // m

    @classmethod
    def from_blocks(cls, blocks):
        """Build from a nested ``k2 x k1`` list of ``m x m`` blocks."""
        m = len(blocks[0][0])
        rows = []
        for brow in blocks:
            for i in range(m):
                rows.append([v for blk in brow for v in blk[i]])
        return cls(rows, m=m)

    @property
    def array(self):
        return np.array(self.rows, dtype=object)

    def block(self, j, i):
        m = self.m
        return [list(r[i * m:(i + 1) * m]) for r in self.rows[j * m:(j + 1) * m]]

    def is_invariant(self, G=None):
        """Whether the diagonal lies in the kernel.

        Without ``G`` this is the integer test (blocks in each block-row sum to
        zero).  With ``G`` the test is exhaustive over the group.
        """
        if G is None:
            m = self.m
            for r in self.rows:
                for c in range(m):
                    if sum(r[i * m + c] for i in range(self.k1)) != 0:
                        return False
            return True
        diag = np.repeat(np.arange(G.order, dtype=np.int64)[:, None], self.k1, axis=1)
        return bool((self.apply_indices(G, diag) == G.identity).all())

    def _check_group(self, G):
        if not G.is_group or G.kind != "abelian":
            raise ConfigError("homomorphisms need an abelian product group")
        d = len(G.moduli)
        if self.m not in (1, d):
            raise ConfigError(f"block size {self.m} does not match {d} cyclic factors")
        if self.m == d and d > 1:
            mods = G.moduli
            for r_i, r in enumerate(self.rows):
                a = r_i % d
                for c_i, v in enumerate(r):
                    b = c_i % d
                    if (v * mods[b]) % mods[a]:
                        raise ConfigError(
                            f"entry {v} maps Z_{mods[b]} into Z_{mods[a]} ill-definedly"
                        )

    def apply_indices(self, G, X):
        """Apply to an ``(N, k1)`` array of element indices; returns ``(N, k2)``."""
        self._check_group(G)
        X = np.asarray(X, dtype=np.int64)
        if X.ndim != 2 or X.shape[1] != self.k1:
            raise ConfigError(f"expected tuples of arity {self.k1}")
        comps = G.decode(X)  # (N, k1, d)
        d = comps.shape[-1]
        A = np.array(self.rows, dtype=np.int64)
        if self.m == 1:
            out = np.einsum("ji,nic->njc", A, comps)
        else:
            flat = comps.reshape(len(X), self.k1 * d)
            out = (flat @ A.T).reshape(len(X), self.k2, d)
        return G.encode(out)


def hom_apply(M, G, x):
    """``y_j = sum_i M_ji x_i`` for one tuple of group elements (labels)."""
    x = tuple(x)
    if len(x) != M.k1:
        raise ConfigError(f"tuple arity {len(x)} does not match k1={M.k1}")
    idx = np.array([[G.index(e) for e in x]], dtype=np.int64)
    y = M.apply_indices(G, idx)[0]
    return tuple(G.element(v) for v in y)

"""Binomial random subsets, stability decisions and threshold predictions.

A set ``X`` is stable when every ``X' subset X`` with ``|X'| >= ceil(delta |X|)``
contains a configuration with pairwise distinct entries.  Since supersets of
a configuration-free set need not be free but subsets are, this holds exactly
when the largest configuration-free subset of ``X`` has fewer than
``ceil(delta |X|)`` elements.

Every random trial draws from its own ``numpy`` generator seeded by
``SeedSequence([seed, point, trial])``, so results do not depend on the order
or the process in which trials run.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .counting import Hypergraph, _greedy_free, build_hypergraph, max_free_subset
from .errors import ConfigError, PreconditionError
from .system import freedom_table, projection_image_sizes


def trial_rng(seed, *path):
    """Generator for one trial, derived from the experiment seed and the trial's position."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, path)]))


def sample_binomial(n, p, seed, *path):
    """Indices of ``[G]_p``: each of ``n`` elements kept independently with probability ``p``."""
    if hasattr(n, "order"):
        n = n.order
    if not 0 <= p <= 1:
        raise ConfigError("p must lie in [0, 1]")
    rng = trial_rng(seed, *path)
    return np.nonzero(rng.random(n) < p)[0].astype(np.int64)


# ---------------------------------------------------------------------------

@dataclass
class StabilityVerdict:
    stable: bool | None  # None when only "probably stable" is known
    label: str  # stable | unstable | probably-stable
    mode: str
    size: int
    needed: int
    free_size: int
    witness: tuple = ()
    degenerate: bool = False
    fallback: bool = False


def _hypergraph(obj):
    return obj if isinstance(obj, Hypergraph) else build_hypergraph(obj)


def is_stable(sys, X, delta, mode="exact", backend="compiled", budget_nodes=10**7):
    """Decide (delta, S)_k-stability of ``X`` (element indices).

    ``exact`` solves the largest-free-subset problem (falling back to the greedy
    certificate if the node budget runs out, flagged ``fallback``).
    ``heuristic`` only uses the greedy certificate, which can prove
    instability but never stability.
    """
    H = _hypergraph(sys)
    X = np.unique(np.asarray(list(X), dtype=np.int64))
    m = len(X)
    delta = Fraction(delta).limit_denominator(10**9) if not isinstance(delta, Fraction) else delta
    needed = math.ceil(delta * m)
    if m == 0:
        return StabilityVerdict(True, "stable", mode, 0, needed, 0, (), degenerate=True)
    if mode == "heuristic":
        mask = _greedy_free(H.masks(X), m)
        size = mask.bit_count()
        wit = tuple(int(X[i]) for i in range(m) if mask >> i & 1)
        if size >= needed:
            return StabilityVerdict(False, "unstable", mode, m, needed, size, wit)
        return StabilityVerdict(None, "probably-stable", mode, m, needed, size, wit)
    if mode != "exact":
        raise ConfigError(f"unknown mode {mode!r}")
    res = max_free_subset(H, X, budget_nodes=budget_nodes, target=needed, backend=backend)
    if not res.exact:
        if res.size >= needed:
            return StabilityVerdict(False, "unstable", "heuristic", m, needed, res.size,
                                    res.witness, fallback=True)
        return StabilityVerdict(None, "probably-stable", "heuristic", m, needed, res.size,
                                res.witness, fallback=True)
    stable = res.size < needed
    return StabilityVerdict(stable, "stable" if stable else "unstable", mode, m, needed,
                            res.size, res.witness)


# ---------------------------------------------------------------------------

@dataclass
class ThresholdFormulas:
    p_one: float
    p_zero: float
    p_small: float
    argmax_ell: int
    argmax_U: tuple
    restricted: bool = True

    def to_dict(self):
        return {
            "p_one": self.p_one,
            "p_zero": self.p_zero,
            "p_small": self.p_small,
            "argmax_ell": self.argmax_ell,
            "argmax_U": list(self.argmax_U),
            "restricted": self.restricted,
        }

    def get(self, name):
        return {"one": self.p_one, "zero": self.p_zero, "small": self.p_small}[name]


def threshold_formulas(sys, table=None, restricted=True):
    """Closed-form threshold predictions.

    ``p_one = max_l (a_l / a_1)^(1/(l-1))``,
    ``p_zero = min(max_{|U|>=2} (|G| / |pi_U|)^(1/(|U|-1)), 1)`` and
    ``p_small = |S^(k)|^(-1/k)``.  With ``restricted=False`` the alphas and
    projections are taken on all of S instead of S^(k).
    """
    table = table or freedom_table(sys)
    alphas = table.alpha_k if restricted else table.alpha
    size = sys.size_k if restricted else sys.size
    if size == 0 or alphas[0] == 0:
        raise PreconditionError("degenerate system: no configurations to count")
    k, n = sys.k, sys.ambient.order
    if k < 2:
        raise PreconditionError("thresholds need degree at least 2")
    ones = [(alphas[l - 1] / alphas[0]) ** (1.0 / (l - 1)) for l in range(2, k + 1)]
    j = int(np.argmax(ones))
    images = projection_image_sizes(sys, "k" if restricted else "S")
    best_U, best = None, -1.0
    for U, img in images.items():
        v = (n / img) ** (1.0 / (len(U) - 1))
        if v > best:
            best, best_U = v, U
    return ThresholdFormulas(
        p_one=ones[j],
        p_zero=min(best, 1.0),
        p_small=size ** (-1.0 / k),
        argmax_ell=j + 2,
        argmax_U=best_U,
        restricted=restricted,
    )


# ---------------------------------------------------------------------------

@dataclass
class StabilityPoint:
    p: float
    trials: int
    est: float
    stderr: float
    mode: str
    degenerate: int = 0
    fallback: int = 0
    undecided: int = 0


@dataclass
class StabilityReport:
    delta: Fraction
    seed: int
    points: list
    formulas: ThresholdFormulas | None = None
    warnings: list = field(default_factory=list)

    @property
    def p_grid(self):
        return [pt.p for pt in self.points]

    def estimates(self):
        return [pt.est for pt in self.points]

    def to_dict(self):
        return {
            "delta": {"num": self.delta.numerator, "den": self.delta.denominator},
            "seed": self.seed,
            "points": [pt.__dict__ for pt in self.points],
            "formulas": self.formulas.to_dict() if self.formulas else None,
            "crossing": crossing_point(self),
            "warnings": self.warnings,
        }

    def csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p", "trials", "est", "stderr", "mode"])
        for pt in self.points:
            w.writerow([repr(pt.p), pt.trials, repr(pt.est), repr(pt.stderr), pt.mode])
        return buf.getvalue()


_WORKER = {}


def _run_trial(args):
    point, trial, p = args
    cfg = _WORKER
    X = sample_binomial(cfg["n"], p, cfg["seed"], point, trial)
    v = is_stable(cfg["H"], X, cfg["delta"], cfg["mode"], cfg["backend"], cfg["budget"])
    return v.stable, v.degenerate, v.fallback


def _init_worker(cfg):
    _WORKER.clear()
    _WORKER.update(cfg)


def montecarlo_stability(sys, delta, p_grid, trials, seed, mode="exact", backend="compiled",
                         workers=1, budget_nodes=10**7, formulas=True):
    """Estimate P([G]_p is stable) on each grid point.

    Undecided trials (heuristic "probably stable") count as stable and are
    reported in ``undecided``; empty samples count as stable and are
    reported in ``degenerate``.
    """
    H = _hypergraph(sys)
    delta = Fraction(delta).limit_denominator(10**9) if not isinstance(delta, Fraction) else delta
    cfg = {"H": H, "n": H.n, "seed": seed, "delta": delta, "mode": mode,
           "backend": backend, "budget": budget_nodes}
    jobs = [(i, t, float(p)) for i, p in enumerate(p_grid) for t in range(trials)]
    if workers > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(workers, _init_worker, (cfg,)) as pool:
            results = pool.map(_run_trial, jobs, chunksize=max(1, len(jobs) // (8 * workers)))
    else:
        _init_worker(cfg)
        results = [_run_trial(j) for j in jobs]
    points = []
    for i, p in enumerate(p_grid):
        chunk = results[i * trials:(i + 1) * trials]
        stable = sum(1 for s, _, _ in chunk if s is not False)
        est = stable / trials
        points.append(StabilityPoint(
            p=float(p), trials=trials, est=est,
            stderr=math.sqrt(est * (1 - est) / trials) if trials else 0.0,
            mode=mode,
            degenerate=sum(1 for _, d, _ in chunk if d),
            fallback=sum(1 for _, _, f in chunk if f),
            undecided=sum(1 for s, _, _ in chunk if s is None),
        ))
    report = StabilityReport(delta, seed, points)
    for a, b in zip(points, points[1:]):
        if b.p >= a.p and b.est < a.est - 2 * max(a.stderr, b.stderr, 1e-12):
            report.warnings.append(f"estimate drops from p={a.p:g} to p={b.p:g}")
    if formulas and not isinstance(sys, Hypergraph):
        try:
            report.formulas = threshold_formulas(sys)
        except PreconditionError:
            pass
    return report


def crossing_point(report, level=0.5):
    """First grid-interpolated p where the estimate reaches ``level`` (log-linear in p)."""
    pts = sorted(report.points, key=lambda pt: pt.p)
    for a, b in zip(pts, pts[1:]):
        if a.est < level <= b.est:
            if a.p <= 0:
                return b.p
            w = (level - a.est) / (b.est - a.est)
            return float(math.exp(math.log(a.p) + w * (math.log(b.p) - math.log(a.p))))
    if pts and pts[0].est >= level:
        return None
    return None


def fit_exponent(xs, ys):
    """Least-squares slope of log y against log x."""
    slope, _ = np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)
    return float(slope)


# ---------------------------------------------------------------------------

@dataclass
class ConcentrationReport:
    U: tuple
    p: float
    trials: int
    image_size: int
    expectation: float
    mean: float
    variance: float
    rel_dev_quantiles: dict


def projection_image(sys, U):
    """All tuples of ``pi_U(S^(k))`` as an index array."""
    from .system import project

    pr = project(sys, U, "k")
    if pr.class_size == 1:
        return pr.images
    G = sys.ambient
    g = np.arange(G.order, dtype=np.int64)
    return G.op(pr.images[:, None, :], g[None, :, None]).reshape(-1, len(pr.U))


def concentration_check(sys, U, p, trials, seed):
    """How tightly ``|pi_U(S^(k)) cap X^|U||`` concentrates around ``p^|U| |pi_U(S^(k))|``."""
    U = tuple(sorted(int(u) for u in U))
    img = projection_image(sys, U)
    n = sys.ambient.order
    expect = (p ** len(U)) * len(img)
    counts = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        X = sample_binomial(n, p, seed, 0, t)
        mask = np.zeros(n, dtype=bool)
        mask[X] = True
        counts[t] = int(mask[img].all(axis=1).sum()) if len(img) else 0
    dev = np.abs(counts - expect)
    rel = dev / expect if expect > 0 else dev.astype(float)
    q = {str(a): float(np.quantile(rel, a)) for a in (0.1, 0.5, 0.9)}
    return ConcentrationReport(U, p, trials, len(img), expect, float(counts.mean()),
                               float(counts.var()), q)


@dataclass
class AlterationResult:
    X: tuple
    kept: tuple
    removed: int
    density: float


def zero_statement_alteration(sys, p, seed, *path):
    """Sample ``[G]_p`` and delete one element from every configuration it contains.

    Configurations are visited in sorted order and the largest still-present
    element is removed, so the survivor is configuration-free.
    """
    H = _hypergraph(sys)
    X = sample_binomial(H.n, p, seed, *path)
    inside = np.zeros(H.n, dtype=bool)
    inside[X] = True
    if len(H.edges):
        edges = H.edges[inside[H.edges].all(axis=1)]
    else:
        edges = H.edges
    removed = 0
    for e in edges:
        if inside[e].all():
            inside[e[-1]] = False
            removed += 1
    kept = np.nonzero(inside)[0]
    density = len(kept) / len(X) if len(X) else 1.0
    return AlterationResult(tuple(int(v) for v in X), tuple(int(v) for v in kept), removed, density)

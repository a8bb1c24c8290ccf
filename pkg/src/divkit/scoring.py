"""Proper scoring rules, properness sweeps, and strictly local rules.

Scores are penalties: lower is better, and a rule is proper when the
expected score under P is minimized by predicting Q = P.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .generators import Generator, GradientUndefinedError, bregman_divergence, negentropy, squared_norm, burg
from .simplex import ProbVec

__all__ = [
    "ScoringRule",
    "LocalRule",
    "rule_from_generator",
    "expected_score",
    "properness_witness",
    "divergence_from_rule",
    "extract_local_rule",
    "log_rule",
    "brier_rule",
    "burg_rule",
    "linear_rule",
    "rule_by_name",
]


@dataclass(frozen=True)
class ScoringRule:
    """A score table f(x, Q): penalty for predicting Q when x occurs."""

    name: str
    dim: int
    score: Callable[[int, ProbVec], float]
    offset: np.ndarray

    def __post_init__(self):
        off = np.asarray(self.offset, dtype=float)
        if off.shape != (self.dim,):
            raise ValueError(f"offset must have length {self.dim}")
        off.setflags(write=False)
        object.__setattr__(self, "offset", off)


@dataclass(frozen=True)
class LocalRule:
    """A strictly local rule f(x, Q) = g(Q(x)); only the probability of the
    realized outcome matters."""

    name: str
    g: Callable[[float], float]

    def __call__(self, q: float) -> float:
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"argument {q!r} outside [0, 1]")
        return float(self.g(q))


def rule_from_generator(f: Generator, dim: int, offset=None) -> ScoringRule:
    """The proper rule score(x, Q) = D_F(dirac_x, Q) + offset[x].

    Generators that are infinite at the vertices (Burg) get the equivalent
    finite normalization score(x, Q) = -F(Q) - <dirac_x - Q, grad F(Q)> +
    offset[x]; the two differ by the x-dependent constant F(dirac_x), which
    cancels out of every divergence computed from the rule.
    """
    if not f.smooth:
        raise ValueError(f"generator {f.name!r} is not smooth; no proper rule is derived")
    if dim < 2:
        raise ValueError("need at least two letters")
    off = np.zeros(dim) if offset is None else np.asarray(offset, dtype=float)
    diracs = [ProbVec.dirac(x, dim) for x in range(dim)]
    vertex_vals = [f.value(d.w) for d in diracs]

    if all(math.isfinite(v) for v in vertex_vals):
        def score(x: int, q: ProbVec) -> float:
            return bregman_divergence(f, diracs[x], q) + float(off[x])
    else:
        def score(x: int, q: ProbVec) -> float:
            g = f.gradient(q.w)
            if not np.all(np.isfinite(g)):
                raise GradientUndefinedError(
                    f"rule from {f.name!r} needs an interior prediction, got {q.w.tolist()}"
                )
            return float(-f.value(q.w) - (diracs[x].w - q.w) @ g + off[x])

    return ScoringRule(name=f"from-{f.name}", dim=dim, score=score, offset=off)


def expected_score(rule: ScoringRule, p: ProbVec, q: ProbVec) -> float:
    """sum(P(x) * f(x, Q)); outcomes with P(x) = 0 are skipped so that an
    infinite penalty on a null outcome costs nothing."""
    if p.dim != rule.dim or q.dim != rule.dim:
        raise ValueError(f"rule of dimension {rule.dim} applied to {p.dim}/{q.dim}")
    total = 0.0
    for x in range(rule.dim):
        px = p[x]
        if px > 0.0:
            total += px * rule.score(x, q)
    return total


def divergence_from_rule(rule: ScoringRule, p: ProbVec, q: ProbVec) -> float:
    """expected_score(P, Q) - expected_score(P, P); the divergence the rule
    induces.  Offsets cancel; nonnegative exactly for proper rules."""
    return expected_score(rule, p, q) - expected_score(rule, p, p)


def interior_grid(dim: int, step: float) -> np.ndarray:
    """All strictly positive simplex points with coordinates that are
    multiples of step, in lexicographic order."""
    n = int(round(1.0 / step))
    if n < 2 or abs(n * step - 1.0) > 1e-9:
        raise ValueError(f"step {step!r} must evenly divide 1")
    out: list[list[int]] = []

    def rec(prefix: list[int], remaining: int, slots: int):
        if slots == 1:
            if remaining >= 1:
                out.append(prefix + [remaining])
            return
        for k in range(1, remaining - slots + 2):
            rec(prefix + [k], remaining - k, slots - 1)

    rec([], n, dim)
    return np.asarray(out, dtype=float) / n


def properness_witness(
    rule: ScoringRule, dim: int, grid_step: float
) -> Optional[tuple[ProbVec, ProbVec]]:
    """Grid sweep for a properness violation.

    Over the interior grid of the given step, checks that for each grid P
    the grid minimizer of Q -> expected score is within grid_step of P in
    max norm.  Returns None if no violation, else the lexicographically
    first violating (P, Q) pair.
    """
    if not 0.0 < grid_step < 0.5:
        raise ValueError("grid_step must lie in (0, 0.5)")
    if rule.dim != dim:
        raise ValueError(f"rule has dimension {rule.dim}, not {dim}")
    grid = interior_grid(dim, grid_step)
    points = [ProbVec(row) for row in grid]
    table = np.empty((dim, len(points)))
    for j, q in enumerate(points):
        for x in range(dim):
            table[x, j] = rule.score(x, q)

    tol = grid_step + 1e-12
    chunk = 512
    for start in range(0, len(points), chunk):
        block = grid[start : start + chunk]
        scores = block @ table
        best = np.argmin(scores, axis=1)
        dev = np.max(np.abs(block - grid[best]), axis=1)
        bad = np.flatnonzero(dev > tol)
        if bad.size:
            i = int(bad[0])
            return points[start + i], points[int(best[i])]
    return None


def extract_local_rule(f: Generator, dim: int) -> LocalRule:
    """The local rule g(q) = D_F(dirac_1, (q, (1-q)/(dim-1), ...)).

    For generators satisfying the sufficiency property this recovers the
    whole rule via f(x, Q) = g(Q(x)); otherwise it is only the diagonal
    slice along uniform tails.
    """
    if dim < 2:
        raise ValueError("need at least two letters")
    if not f.smooth:
        raise ValueError(f"generator {f.name!r} is not smooth")
    delta = ProbVec.dirac(0, dim)

    def g(q: float) -> float:
        tail = (1.0 - q) / (dim - 1)
        return bregman_divergence(f, delta, ProbVec([q] + [tail] * (dim - 1)))

    return LocalRule(name=f"local-{f.name}", g=g)


def log_rule(dim: int) -> ScoringRule:
    """Logarithmic score -ln Q(x)."""
    return rule_from_generator(negentropy, dim)


def brier_rule(dim: int) -> ScoringRule:
    """Brier score sum((dirac_x - Q)^2)."""
    return rule_from_generator(squared_norm, dim)


def burg_rule(dim: int) -> ScoringRule:
    """Itakura-Saito style score 1/Q(x) + sum(ln Q_i) - dim."""
    return rule_from_generator(burg, dim)


def linear_rule(dim: int) -> ScoringRule:
    """The classic improper rule -Q(x): rewards overconfidence."""
    return ScoringRule(
        name="linear", dim=dim, score=lambda x, q: -q[x], offset=np.zeros(dim)
    )


def rule_by_name(name: str, dim: int, generator: Generator | None = None) -> ScoringRule:
    if name == "log":
        return log_rule(dim)
    if name == "brier":
        return brier_rule(dim)
    if name == "burg":
        return burg_rule(dim)
    if name == "linear":
        return linear_rule(dim)
    if name == "from-generator":
        if generator is None:
            raise ValueError("from-generator requires a generator")
        return rule_from_generator(generator, dim)
    raise ValueError(f"unknown rule {name!r}")

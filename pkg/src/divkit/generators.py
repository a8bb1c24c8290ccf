"""Convex generators, Bregman divergences, regret from action families.

A generator F is a convex function on the simplex; its Bregman divergence

    D_F(p, q) = F(p) - F(q) - <p - q, grad F(q)>

is the regret of acting optimally for q when the truth is p.  The built-in
zoo (negentropy, squared norm, Burg, tabulated separable) spans the cases
that behave differently under sufficiency checks.
"""

import itertools
import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import xlogy

from .simplex import MixtureWeights, ProbVec, mixture

__all__ = [
    "Generator",
    "ActionFamily",
    "GradientUndefinedError",
    "bregman_divergence",
    "regret_from_actions",
    "compensation_gap",
    "affine_equivalent",
    "kraft_sum",
    "code_length_family",
    "negentropy",
    "squared_norm",
    "burg",
    "tabulated",
    "generator_by_name",
]


class GradientUndefinedError(ValueError):
    """The gradient is not finite at the requested point and the generator
    has no continuous extension there."""


# How a generator behaves when the second Bregman argument touches the
# simplex boundary:
#   "finite"        gradient is finite on the closed simplex
#   "match_support" KL-style: +inf when q vanishes where p does not,
#                   otherwise restrict both arguments to the support of q
#                   (valid for separable generators only)
#   "interior"      no continuous extension; boundary q raises
_BOUNDARY_RULES = ("finite", "match_support", "interior")


@dataclass(frozen=True)
class Generator:
    """A named convex function with gradient, usable as a Bregman seed."""

    name: str
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    smooth: bool = True
    boundary_rule: str = "finite"

    def __post_init__(self):
        if self.boundary_rule not in _BOUNDARY_RULES:
            raise ValueError(f"unknown boundary rule {self.boundary_rule!r}")

    def __call__(self, p: ProbVec) -> float:
        return float(self.value(p.w))

    def shifted(self, linear: np.ndarray, constant: float = 0.0) -> "Generator":
        """The same generator plus an affine functional <linear, p> + c."""
        linear = np.asarray(linear, dtype=float)
        base_v, base_g = self.value, self.gradient
        return Generator(
            name=f"{self.name}+affine",
            value=lambda w: base_v(w) + float(linear[: w.size] @ w) + constant,
            gradient=lambda w: base_g(w) + linear[: w.size],
            smooth=self.smooth,
            boundary_rule=self.boundary_rule,
        )


def _neg_value(w):
    return float(np.sum(xlogy(w, w)))


def _neg_grad(w):
    return np.log(w) + 1.0


negentropy = Generator(
    name="negentropy",
    value=_neg_value,
    gradient=_neg_grad,
    smooth=True,
    boundary_rule="match_support",
)

squared_norm = Generator(
    name="sqnorm",
    value=lambda w: float(w @ w),
    gradient=lambda w: 2.0 * w,
    smooth=True,
    boundary_rule="finite",
)


def _burg_value(w):
    if np.any(w <= 0.0):
        return math.inf
    return float(-np.sum(np.log(w)))


burg = Generator(
    name="burg",
    value=_burg_value,
    gradient=lambda w: -1.0 / w,
    smooth=True,
    boundary_rule="interior",
)


def tabulated(name: str, xs, ys) -> Generator:
    """Separable generator sum(f(p_i)) from knots of a convex piecewise
    linear f on [0, 1].

    Knot abscissae must start at 0, end at 1, and the chord slopes must be
    nondecreasing (convexity is checked exactly).  The gradient uses the
    right-hand slope at knots.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.size < 2 or xs.shape != ys.shape:
        raise ValueError("need matching knot vectors with at least two knots")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("knot abscissae must be strictly increasing")
    if xs[0] != 0.0 or xs[-1] != 1.0:
        raise ValueError("knots must cover [0, 1]")
    slopes = np.diff(ys) / np.diff(xs)
    if np.any(np.diff(slopes) < 0):
        raise ValueError(f"table {name!r} is not convex: slopes decrease")

    def value(w):
        return float(np.sum(np.interp(w, xs, ys)))

    def grad(w):
        idx = np.clip(np.searchsorted(xs, w, side="right") - 1, 0, slopes.size - 1)
        return slopes[idx]

    return Generator(name=name, value=value, gradient=grad, smooth=False, boundary_rule="finite")


def generator_by_name(name: str) -> Generator:
    """Resolve the CLI generator names: negentropy, sqnorm, burg, table:<file>."""
    if name == "negentropy":
        return negentropy
    if name == "sqnorm":
        return squared_norm
    if name == "burg":
        return burg
    if name.startswith("table:"):
        path = name[len("table:"):]
        try:
            with open(path) as fh:
                knots = json.load(fh)
        except OSError as exc:
            raise ValueError(f"cannot read generator table {path!r}: {exc}") from exc
        if not isinstance(knots, dict) or not knots:
            raise ValueError(f"generator table {path!r} must be a non-empty JSON object")
        xs = sorted(float(x) for x in knots)
        ys = [float(knots[k]) for k in sorted(knots, key=float)]
        return tabulated(f"table:{path}", xs, ys)
    raise ValueError(f"unknown generator {name!r}")


def bregman_divergence(f: Generator, p: ProbVec, q: ProbVec) -> float:
    """D_F(p, q) = F(p) - F(q) - <p - q, grad F(q)>, extended to +inf.

    The boundary rule of the generator decides what happens when q has zero
    entries; generators without a continuous extension there raise
    GradientUndefinedError.
    """
    if p.dim != q.dim:
        raise ValueError(f"dimensions differ: {p.dim} vs {q.dim}")
    if p == q:
        return 0.0
    pw, qw = p.w, q.w
    if np.all(qw > 0.0) or f.boundary_rule == "finite":
        return _bregman_raw(f, pw, qw)
    if f.boundary_rule == "match_support":
        if np.any((pw > 0.0) & (qw == 0.0)):
            return math.inf
        keep = qw > 0.0
        return _bregman_raw(f, pw[keep], qw[keep])
    raise GradientUndefinedError(
        f"generator {f.name!r} has no continuous extension at the boundary point {qw.tolist()}"
    )


def _bregman_raw(f: Generator, pw: np.ndarray, qw: np.ndarray) -> float:
    fp = f.value(pw)
    if math.isinf(fp):
        return math.inf
    g = f.gradient(qw)
    if not np.all(np.isfinite(g)):
        raise GradientUndefinedError(f"gradient of {f.name!r} is not finite at {qw.tolist()}")
    return float(fp - f.value(qw) - (pw - qw) @ g)


class ActionFamily:
    """A finite set of payoff vectors; the induced generator is
    F(s) = max over actions of <a, s>."""

    __slots__ = ("actions",)

    def __init__(self, actions):
        a = np.asarray(actions, dtype=float)
        if a.ndim != 2 or a.shape[0] < 1 or not np.all(np.isfinite(a)):
            raise ValueError("need a non-empty list of equal-length finite action vectors")
        a.setflags(write=False)
        self.actions = a

    @property
    def dim(self) -> int:
        return self.actions.shape[1]

    def __len__(self) -> int:
        return self.actions.shape[0]

    def payoff(self, s: ProbVec) -> float:
        return float(np.max(self.actions @ s.w))

    def optimal_set(self, s: ProbVec, tol: float = 1e-10) -> np.ndarray:
        """Indices of actions within tol of the best payoff at s."""
        vals = self.actions @ s.w
        return np.flatnonzero(vals >= vals.max() - tol)

    def generator(self) -> Generator:
        """The piecewise-linear support function, with an argmax action as
        subgradient (ties resolved to the first action)."""
        acts = self.actions

        def value(w):
            return float(np.max(acts @ w))

        def grad(w):
            return acts[int(np.argmax(acts @ w))].copy()

        return Generator(
            name="action-family",
            value=value,
            gradient=grad,
            smooth=False,
            boundary_rule="finite",
        )


def regret_from_actions(
    family: ActionFamily, s1: ProbVec, s2: ProbVec, tol: float = 1e-10
) -> float:
    """Shortfall at s1 from committing to an s2-optimal action.

    For finite families the asymptotically-optimal sequences of the regret
    definition collapse to the exactly-optimal set at s2 (resolved to tol),
    and the supremum picks the member most favorable at s1.
    """
    if family.dim != s1.dim or family.dim != s2.dim:
        raise ValueError("action family and states must share a dimension")
    best = family.optimal_set(s2, tol=tol)
    # Evaluate all payoffs at s1 once so the subset maximum cannot drift
    # past the full maximum by a rounding ulp.
    vals = family.actions @ s1.w
    return float(vals.max() - vals[best].max())


def compensation_gap(
    f: Generator, t: MixtureWeights, states: list[ProbVec], s_tilde: ProbVec
) -> tuple[float, float, float]:
    """Both sides of the compensation identity and their difference.

    lhs = sum(t_i * D(s_i, s_tilde)), rhs = sum(t_i * D(s_i, s_hat)) +
    D(s_hat, s_tilde) with s_hat the t-barycenter.  For smooth generators
    the residual lhs - rhs vanishes; for action-family regret it is >= 0.
    """
    s_hat = mixture(t, states)
    lhs = sum(ti * bregman_divergence(f, si, s_tilde) for ti, si in zip(t.w, states))
    rhs = sum(ti * bregman_divergence(f, si, s_hat) for ti, si in zip(t.w, states))
    rhs += bregman_divergence(f, s_hat, s_tilde)
    return float(lhs), float(rhs), float(lhs - rhs)


def _interior_anchor_points(dim: int) -> np.ndarray:
    """Vertices of the half-shrunk simplex: affinely independent and interior."""
    eye = np.eye(dim)
    return 0.5 * eye + 0.5 / dim


def _affine_check_grid(dim: int) -> np.ndarray:
    anchors = _interior_anchor_points(dim)
    pts = [np.full(dim, 1.0 / dim)]
    pts.extend(anchors)
    for i in range(dim):
        for j in range(i + 1, dim):
            pts.append(0.5 * (anchors[i] + anchors[j]))
            pts.append(0.25 * anchors[i] + 0.75 * anchors[j])
    rng = np.random.default_rng(20240517)
    extra = rng.dirichlet(np.ones(dim), size=64)
    pts.extend(0.9 * extra + 0.1 / dim)
    return np.asarray(pts)


def affine_equivalent(f1: Generator, f2: Generator, dim: int, tol: float = 1e-8) -> bool:
    """True iff F1 - F2 is affine on the simplex, i.e. both generators
    induce the same Bregman divergence.

    The difference is fitted through interior anchor points (so generators
    that blow up at the vertices are still comparable) and checked against
    a deterministic interior grid.
    """
    anchors = _interior_anchor_points(dim)
    d = np.array([f1.value(a) - f2.value(a) for a in anchors])
    if not np.all(np.isfinite(d)):
        return False
    coeffs = np.linalg.solve(anchors, d)
    for w in _affine_check_grid(dim):
        diff = f1.value(w) - f2.value(w)
        if not math.isfinite(diff) or abs(diff - coeffs @ w) > tol:
            return False
    return True


def kraft_sum(lengths) -> float:
    """sum(2 ** -l) over codeword lengths; <= 1 iff uniquely decodable."""
    ls = list(lengths)
    if not ls:
        raise ValueError("need at least one codeword length")
    for l in ls:
        if int(l) != l or l < 1:
            raise ValueError(f"codeword lengths must be positive integers, got {l!r}")
    return float(sum(2.0 ** -int(l) for l in ls))


def code_length_family(maxlen: int, alphabet: int) -> ActionFamily:
    """All integer codeword-length assignments satisfying the Kraft
    inequality, as payoff vectors a_x = -length_x.

    The induced generator -min expected code length is piecewise linear.
    """
    if maxlen < 1:
        raise ValueError("maxlen must be >= 1")
    if not 2 <= alphabet <= 5:
        raise ValueError("alphabet size must be between 2 and 5")
    if maxlen ** alphabet > 10 ** 6:
        raise ValueError(
            f"{maxlen ** alphabet} candidate length vectors exceed the 10^6 enumeration guard"
        )
    actions = [
        [-float(l) for l in ls]
        for ls in itertools.product(range(1, maxlen + 1), repeat=alphabet)
        if kraft_sum(ls) <= 1.0
    ]
    if not actions:
        raise ValueError(f"no Kraft-feasible length vector with maxlen={maxlen}")
    return ActionFamily(actions)

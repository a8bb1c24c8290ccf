"""Log-optimal portfolios: doubling rates, KKT certificates, the divergence
regret bound, and wealth simulation.

A market is a finite set of price-relative vectors with outcome
probabilities; a portfolio is a probability vector over stocks.  All rates
are in nats per period.
"""

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .simplex import ProbVec, kl_divergence

__all__ = [
    "Market",
    "Portfolio",
    "SolveResult",
    "RegretBound",
    "NonConvergenceError",
    "doubling_rate",
    "kkt_residual",
    "solve_log_optimal",
    "regret_and_bound",
    "is_horse_race",
    "simulate_wealth",
    "load_market",
    "fair_horse_race",
]

Portfolio = ProbVec

ACTIVE_TOL = 1e-12  # a portfolio weight above this counts as invested


class NonConvergenceError(RuntimeError):
    """The fixed-point iteration did not reach the requested certificate."""

    def __init__(self, message: str, result: "SolveResult"):
        super().__init__(message)
        self.result = result


class Market:
    """Price relatives (one row per outcome, one column per stock) plus the
    outcome distribution."""

    __slots__ = ("relatives", "probs")

    def __init__(self, relatives, probs: ProbVec):
        x = np.asarray(relatives, dtype=float)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError(f"relatives must be an m x k matrix, got shape {x.shape}")
        if not np.all(np.isfinite(x)) or np.any(x < 0.0):
            raise ValueError("price relatives must be finite and nonnegative")
        if np.any(x.max(axis=1) <= 0.0):
            bad = int(np.flatnonzero(x.max(axis=1) <= 0.0)[0])
            raise ValueError(f"outcome {bad} has no strictly positive price relative")
        if probs.dim != x.shape[0]:
            raise ValueError(f"{probs.dim} probabilities for {x.shape[0]} outcomes")
        x.setflags(write=False)
        self.relatives = x
        self.probs = probs

    @property
    def n_outcomes(self) -> int:
        return self.relatives.shape[0]

    @property
    def n_stocks(self) -> int:
        return self.relatives.shape[1]

    def with_probs(self, probs: ProbVec) -> "Market":
        return Market(self.relatives, probs)


def fair_horse_race(probs: ProbVec, odds=None) -> Market:
    """Horse race with diagonal relatives: outcome j pays odds[j] on stock
    j and zero elsewhere (odds default to the fair value dim)."""
    k = probs.dim
    odds = np.full(k, float(k)) if odds is None else np.asarray(odds, dtype=float)
    return Market(np.diag(odds), probs)


def doubling_rate(b: Portfolio, mkt: Market) -> float:
    """W(b, P) = sum(P_j ln <x_j, b>); -inf on ruin (a zero-payoff outcome
    with positive probability)."""
    if b.dim != mkt.n_stocks:
        raise ValueError(f"portfolio over {b.dim} stocks in a {mkt.n_stocks}-stock market")
    payoff = mkt.relatives @ b.w
    p = mkt.probs.w
    active = p > 0.0
    if np.any(payoff[active] <= 0.0):
        return -math.inf
    return float(p[active] @ np.log(payoff[active]))


def _growth_coeffs(b: Portfolio, mkt: Market) -> np.ndarray:
    """c_i = sum_j P_j x_ji / <b, x_j>, the KKT quantities (gradient of W)."""
    payoff = mkt.relatives @ b.w
    p = mkt.probs.w
    active = p > 0.0
    return (p[active] / payoff[active]) @ mkt.relatives[active]


def kkt_residual(b: Portfolio, mkt: Market) -> float:
    """Distance from the Kuhn-Tucker optimality conditions.

    With c_i = sum_j P_j x_ji / <b, x_j>, optimality requires c_i <= 1 for
    every stock and c_i = 1 on invested stocks.  The residual is the worst
    violation: max(c_i - 1, 0) everywhere plus |c_i - 1| where b_i is above
    the 1e-12 activity cutoff.
    """
    if not math.isfinite(doubling_rate(b, mkt)):
        raise ValueError("doubling rate is not finite; KKT conditions are undefined")
    c = _growth_coeffs(b, mkt)
    res = float(np.max(np.maximum(c - 1.0, 0.0)))
    invested = b.w > ACTIVE_TOL
    if np.any(invested):
        res = max(res, float(np.max(np.abs(c[invested] - 1.0))))
    return res


class SolveResult(NamedTuple):
    portfolio: Portfolio
    residual: float
    iterations: int
    converged: bool

    @property
    def b(self) -> Portfolio:
        return self.portfolio


_POLISH_CADENCE = 128  # iterations between Newton refinement attempts


def _certificate_residual(b: np.ndarray, c: np.ndarray) -> float:
    res = float(np.max(np.maximum(c - 1.0, 0.0)))
    invested = b > ACTIVE_TOL
    if np.any(invested):
        res = max(res, float(np.max(np.abs(c[invested] - 1.0))))
    return res


def _newton_polish(x: np.ndarray, pa: np.ndarray, b0: np.ndarray, tol: float):
    """Active-set Newton refinement of the growth-coefficient equalities
    c_i(b) = 1 on the current support.

    Coordinates a step pushes through zero leave the support exactly;
    returns a vector meeting the KKT residual, or None (caller falls back
    to the multiplicative iteration, so a failed or misdirected polish
    cannot produce a falsely certified result).
    """
    b = b0.copy()
    for _ in range(8 * b.size):
        y = x @ b
        if np.any(y <= 0.0):
            return None
        c = (pa / y) @ x
        if _certificate_residual(b, c) <= tol:
            return b
        support = np.flatnonzero(b > 0.0)
        xs = x[:, support]
        curv = xs.T @ ((pa / y ** 2)[:, None] * xs)
        n = support.size
        bordered = np.zeros((n + 1, n + 1))
        bordered[:n, :n] = curv
        bordered[:n, n] = 1.0
        bordered[n, :n] = 1.0
        rhs = np.append(c[support] - 1.0, 0.0)
        try:
            delta = np.linalg.solve(bordered, rhs)[:n]
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(delta)):
            return None
        shrinking = delta < 0.0
        scale = 1.0
        if np.any(shrinking):
            scale = min(1.0, float(np.min(b[support][shrinking] / -delta[shrinking])))
        nb = b.copy()
        nb[support] = np.maximum(b[support] + scale * delta, 0.0)
        total = nb.sum()
        if total <= 0.0:
            return None
        b = nb / total
    return None


def solve_log_optimal(mkt: Market, tol: float = 1e-9, max_iter: int = 100_000) -> SolveResult:
    """Maximize the doubling rate over the simplex.

    Multiplicative fixed-point iteration b_i <- b_i * c_i(b) from the
    uniform portfolio; the iterates stay on the simplex (the coefficients
    average to one under b) and the KKT residual is the sole stopping
    rule.  On non-convergence the best iterate is returned flagged.

    Near-degenerate optima (vanishing or tiny optimal weights whose
    multipliers sit at the boundary) slow the plain iteration to a
    sublinear crawl, so once it is close an active-set Newton polish
    finishes the job.  The polish is certificate-gated: its output is
    only accepted when the KKT residual passes, so it can never fake
    convergence.
    """
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    k = mkt.n_stocks
    b = np.full(k, 1.0 / k)
    p = mkt.probs.w
    active = p > 0.0
    x = mkt.relatives[active]
    pa = p[active]
    best_b, best_res = b, math.inf
    for it in range(max_iter + 1):
        c = (pa / (x @ b)) @ x
        res = _certificate_residual(b, c)
        if res < best_res:
            best_b, best_res = b, res
        if res <= tol:
            return SolveResult(ProbVec(b), res, it, True)
        if it and it % _POLISH_CADENCE == 0 and res <= 1e-2:
            polished = _newton_polish(x, pa, b, tol)
            if polished is not None:
                c2 = (pa / (x @ polished)) @ x
                res2 = _certificate_residual(polished, c2)
                if res2 <= tol:
                    return SolveResult(ProbVec(polished), res2, it, True)
        b = b * c
        b /= b.sum()
    return SolveResult(ProbVec(best_b), best_res, max_iter, False)


class RegretBound(NamedTuple):
    regret: float
    bound: float
    gap: float


def regret_and_bound(mkt: Market, q: ProbVec, tol: float = 1e-9) -> RegretBound:
    """Regret W(b_P, P) - W(b_Q, P) of investing for the wrong belief Q,
    against the bound D(P || Q); gap = bound - regret.

    The gap vanishes exactly on horse-race markets and is strictly
    positive otherwise (for Q != P).  Solver failures propagate.
    """
    if q.dim != mkt.probs.dim:
        raise ValueError(f"belief over {q.dim} outcomes in a {mkt.probs.dim}-outcome market")
    sol_p = solve_log_optimal(mkt, tol=tol)
    sol_q = solve_log_optimal(mkt.with_probs(q), tol=tol)
    for sol, label in ((sol_p, "P"), (sol_q, "Q")):
        if not sol.converged:
            raise NonConvergenceError(
                f"log-optimal solve for {label} stalled at residual {sol.residual:.3e}", sol
            )
    regret = doubling_rate(sol_p.b, mkt) - doubling_rate(sol_q.b, mkt)
    bound = kl_divergence(mkt.probs, q)
    if math.isinf(regret) and math.isinf(bound):
        gap = 0.0
    else:
        gap = bound - regret
    return RegretBound(regret=regret, bound=bound, gap=gap)


def is_horse_race(mkt: Market) -> bool:
    """True iff, after relabeling, outcome j pays only on stock j: as many
    outcomes as stocks, one strictly positive entry per outcome (zeros are
    exact), positions all distinct."""
    if mkt.n_outcomes != mkt.n_stocks:
        return False
    positions = []
    for row in mkt.relatives:
        nz = np.flatnonzero(row > 0.0)
        if nz.size != 1:
            return False
        positions.append(int(nz[0]))
    return len(set(positions)) == mkt.n_stocks


def simulate_wealth(mkt: Market, b: Portfolio, n: int, seed: int):
    """Seeded i.i.d. wealth path: returns (log-wealth path, (1/n) ln S_n).

    Ruin is sticky: once an outcome pays zero the log path stays at -inf.
    """
    if n < 1:
        raise ValueError("need at least one period")
    if b.dim != mkt.n_stocks:
        raise ValueError(f"portfolio over {b.dim} stocks in a {mkt.n_stocks}-stock market")
    rng = np.random.default_rng(seed)
    idx = rng.choice(mkt.n_outcomes, size=n, p=mkt.probs.w)
    payoff = mkt.relatives @ b.w
    with np.errstate(divide="ignore"):
        steps = np.log(payoff[idx])
    path = np.cumsum(steps)
    return path, float(path[-1] / n)


def load_market(path: str) -> Market:
    """Market from CSV with header prob,x1,...,xk and one row per outcome.

    Probabilities are renormalized when their sum is within 1e-9 of one;
    anything worse, a negative relative, or a malformed row is an error
    naming the offending row.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ValueError(f"cannot read market file {path!r}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"market file {path!r} is empty") from None
        header = [h.strip() for h in header]
        k = len(header) - 1
        if k < 1 or header[0] != "prob" or header[1:] != [f"x{i}" for i in range(1, k + 1)]:
            raise ValueError(f"market header must be prob,x1,...,xk; got {','.join(header)!r}")
        probs = []
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != k + 1:
                raise ValueError(f"row {lineno}: expected {k + 1} fields, got {len(row)}")
            try:
                vals = [float(cell) for cell in row]
            except ValueError:
                raise ValueError(f"row {lineno}: non-numeric field in {row!r}") from None
            if vals[0] < 0.0:
                raise ValueError(f"row {lineno}: negative probability {vals[0]!r}")
            if any(v < 0.0 for v in vals[1:]):
                raise ValueError(f"row {lineno}: negative price relative")
            probs.append(vals[0])
            rows.append(vals[1:])
    if not rows:
        raise ValueError(f"market file {path!r} has no outcome rows")
    total = sum(probs)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"outcome probabilities sum to {total!r}, outside 1 +/- 1e-9")
    return Market(rows, ProbVec(probs))

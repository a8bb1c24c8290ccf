"""Sufficient kernel pairs and divergence-invariance checks.

A transformation phi is sufficient for a pair of states when some psi
undoes it on both: psi(phi(s_i)) = s_i.  A divergence has the sufficiency
property when it is invariant under every such phi; the classifier here
probes that property with constructed families whose sufficiency is
guaranteed by construction, independent of the property under test.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .feasibility import solve_equality_feasibility
from .generators import GradientUndefinedError, bregman_divergence, burg, generator_by_name, squared_norm
from .simplex import Kernel, ProbVec, apply_kernel, kl_divergence

__all__ = [
    "KernelPair",
    "SufficiencyReport",
    "TrialRecord",
    "merge_split_pair",
    "uniformize_tail_pair",
    "reblock_pair",
    "recovery_search",
    "invariance_gap",
    "f_invariance_gap",
    "classify_divergence",
    "divergence_by_name",
]

RECOVERY_TOL = 1e-10
RATIO_TOL = 1e-9
FAIL_THRESHOLD = 1e-6

Divergence = Callable[[ProbVec, ProbVec], float]


@dataclass(frozen=True)
class KernelPair:
    """Kernels (phi, psi) with psi(phi(s)) = s for both states of `pair`."""

    phi: Kernel
    psi: Kernel
    pair: tuple[ProbVec, ProbVec]

    def __post_init__(self):
        s1, s2 = self.pair
        if not (self.phi.dim == self.psi.dim == s1.dim == s2.dim):
            raise ValueError("kernel and state dimensions disagree")
        res = self.roundtrip_residual()
        if res > RECOVERY_TOL:
            raise ValueError(f"psi does not recover the pair: residual {res:.3e}")

    def roundtrip_residual(self) -> float:
        worst = 0.0
        for s in self.pair:
            back = apply_kernel(self.psi, apply_kernel(self.phi, s))
            worst = max(worst, float(np.max(np.abs(back.w - s.w))))
        return worst

    def transformed(self) -> tuple[ProbVec, ProbVec]:
        s1, s2 = self.pair
        return apply_kernel(self.phi, s1), apply_kernel(self.phi, s2)


def _check_partition(blocks: Sequence[Sequence[int]], dim: int) -> list[list[int]]:
    cleaned = [sorted(int(i) for i in b) for b in blocks]
    flat = sorted(i for b in cleaned for i in b)
    if flat != list(range(dim)):
        raise ValueError(f"blocks {cleaned!r} are not a partition of 0..{dim - 1}")
    return cleaned


def _check_constant_ratio(block: list[int], s1: ProbVec, s2: ProbVec):
    """Constant likelihood ratio on the block, via cross products so zero
    entries need no special casing."""
    for a in block:
        for b in block:
            if abs(s1[a] * s2[b] - s1[b] * s2[a]) > RATIO_TOL:
                raise ValueError(
                    f"likelihood ratio is not constant on block {block}: "
                    f"s1={[s1[i] for i in block]}, s2={[s2[i] for i in block]}"
                )


def _block_conditional(block: list[int], s1: ProbVec, s2: ProbVec) -> np.ndarray:
    """The shared within-block conditional of the two states (uniform when
    both put no mass on the block)."""
    joint = np.array([s1[i] + s2[i] for i in block])
    total = joint.sum()
    if total <= 0.0:
        return np.full(len(block), 1.0 / len(block))
    return joint / total


def _merge_matrix(blocks: list[list[int]], dim: int) -> np.ndarray:
    m = np.zeros((dim, dim))
    for block in blocks:
        rep = block[0]
        for j in block:
            m[rep, j] = 1.0
    return m


def _split_matrix(blocks: list[list[int]], dim: int, conditionals: list[np.ndarray]) -> np.ndarray:
    m = np.zeros((dim, dim))
    for block, cond in zip(blocks, conditionals):
        col = np.zeros(dim)
        col[block] = cond
        for j in block:
            m[:, j] = col
    return m


def merge_split_pair(blocks: Sequence[Sequence[int]], s1: ProbVec, s2: ProbVec) -> KernelPair:
    """Sufficient pair that merges each likelihood-ratio block onto its
    first letter; psi re-spreads by the shared conditional.

    Rejects blocks on which the ratio s1_i / s2_i is not constant (to
    1e-9); all-zero blocks are allowed.
    """
    if s1.dim != s2.dim:
        raise ValueError(f"dimensions differ: {s1.dim} vs {s2.dim}")
    dim = s1.dim
    cleaned = _check_partition(blocks, dim)
    conds = []
    for block in cleaned:
        if len(block) > 1:
            _check_constant_ratio(block, s1, s2)
        conds.append(_block_conditional(block, s1, s2))
    phi = Kernel(_merge_matrix(cleaned, dim))
    psi = Kernel(_split_matrix(cleaned, dim, conds))
    return KernelPair(phi=phi, psi=psi, pair=(s1, s2))


def _uniformize_kernels(q: ProbVec, keep: int) -> tuple[Kernel, Kernel]:
    dim = q.dim
    tail = [i for i in range(dim) if i != keep]
    tail_mass = sum(q[i] for i in tail)
    if not tail or tail_mass <= 1e-15:
        eye = Kernel.identity(dim)
        return eye, eye
    phi = np.zeros((dim, dim))
    psi = np.zeros((dim, dim))
    phi[keep, keep] = 1.0
    psi[keep, keep] = 1.0
    for j in tail:
        for i in tail:
            phi[i, j] = 1.0 / len(tail)
            psi[i, j] = q[i] / tail_mass
    return Kernel(phi), Kernel(psi)


def uniformize_tail_pair(q: ProbVec, keep: int) -> KernelPair:
    """Sufficient pair for (dirac_keep, q): phi averages every letter other
    than `keep` (a mixture of permutations fixing `keep`), psi re-spreads
    the averaged mass in proportion to q.  Degenerates to the identity when
    q has no mass off `keep`."""
    if not 0 <= keep < q.dim:
        raise ValueError(f"keep index {keep} out of range for dimension {q.dim}")
    phi, psi = _uniformize_kernels(q, keep)
    return KernelPair(phi=phi, psi=psi, pair=(ProbVec.dirac(keep, q.dim), q))


def _extend_permutation(sources: list[int], targets: list[int], dim: int) -> Kernel:
    perm = [-1] * dim
    for s, t in zip(sources, targets):
        perm[s] = t
    rest_src = [j for j in range(dim) if perm[j] < 0]
    rest_dst = [i for i in range(dim) if i not in set(targets)]
    for s, t in zip(rest_src, rest_dst):
        perm[s] = t
    return Kernel.permutation(perm)


def reblock_pair(
    s1: ProbVec,
    s2: ProbVec,
    blocks_from: Sequence[Sequence[int]],
    blocks_to: Sequence[Sequence[int]],
    conditionals: Optional[Sequence[Sequence[float]]] = None,
) -> KernelPair:
    """Sufficient pair that merges the ratio blocks of (s1, s2) and
    re-spreads each block's mass onto a target block with a fresh interior
    conditional.

    This moves likelihood-ratio mass between letter sets of different
    sizes while keeping both states recoverable, which is what separates
    letter-counting divergences from mass-weighted ones.
    """
    if s1.dim != s2.dim:
        raise ValueError(f"dimensions differ: {s1.dim} vs {s2.dim}")
    dim = s1.dim
    src = _check_partition(blocks_from, dim)
    dst = _check_partition(blocks_to, dim)
    if len(src) != len(dst):
        raise ValueError(f"{len(src)} source blocks vs {len(dst)} target blocks")
    src_conds = []
    for block in src:
        if len(block) > 1:
            _check_constant_ratio(block, s1, s2)
        src_conds.append(_block_conditional(block, s1, s2))
    if conditionals is None:
        dst_conds = [np.full(len(b), 1.0 / len(b)) for b in dst]
    else:
        dst_conds = [np.asarray(c, dtype=float) for c in conditionals]
        for block, cond in zip(dst, dst_conds):
            if cond.shape != (len(block),) or np.any(cond <= 0) or abs(cond.sum() - 1.0) > 1e-9:
                raise ValueError(f"conditional {cond!r} invalid for target block {block}")

    src_reps = [b[0] for b in src]
    dst_reps = [b[0] for b in dst]
    fwd = _extend_permutation(src_reps, dst_reps, dim)
    bwd = _extend_permutation(dst_reps, src_reps, dim)
    phi = Kernel(_split_matrix(dst, dim, dst_conds)).compose(fwd).compose(
        Kernel(_merge_matrix(src, dim))
    )
    psi = Kernel(_split_matrix(src, dim, src_conds)).compose(bwd).compose(
        Kernel(_merge_matrix(dst, dim))
    )
    return KernelPair(phi=phi, psi=psi, pair=(s1, s2))


def recovery_search(phi: Kernel, s1: ProbVec, s2: ProbVec) -> Optional[Kernel]:
    """Search for a column-stochastic psi with psi(phi(s_i)) = s_i.

    Linear feasibility over the dim^2 kernel entries: column sums equal 1
    and both recovery equalities; solved by phase-1 simplex.  None means
    the problem is infeasible, i.e. phi is not sufficient for the pair.
    """
    if not (phi.dim == s1.dim == s2.dim):
        raise ValueError("dimensions disagree")
    dim = phi.dim
    u = apply_kernel(phi, s1).w
    v = apply_kernel(phi, s2).w
    nvar = dim * dim  # psi entry (i, j) at index i * dim + j
    rows = []
    rhs = []
    for j in range(dim):
        row = np.zeros(nvar)
        row[[i * dim + j for i in range(dim)]] = 1.0
        rows.append(row)
        rhs.append(1.0)
    for target, image in ((s1, u), (s2, v)):
        for i in range(dim):
            row = np.zeros(nvar)
            row[i * dim : (i + 1) * dim] = image
            rows.append(row)
            rhs.append(target[i])
    x = solve_equality_feasibility(np.asarray(rows), np.asarray(rhs), tol=1e-9)
    if x is None:
        return None
    psi = Kernel(x.reshape(dim, dim))
    residual = max(
        float(np.max(np.abs(apply_kernel(psi, apply_kernel(phi, s)).w - s.w))) for s in (s1, s2)
    )
    return psi if residual <= 1e-9 else None


def _ext_gap(a: float, b: float) -> float:
    """Absolute difference on the extended line: two infinities agree."""
    if math.isinf(a) and math.isinf(b):
        return 0.0
    if math.isinf(a) or math.isinf(b):
        return math.inf
    return abs(a - b)


def invariance_gap(d: Divergence, kp: KernelPair) -> float:
    """|D(phi s1, phi s2) - D(s1, s2)|, infinity-aware."""
    s1, s2 = kp.pair
    t1, t2 = kp.transformed()
    return _ext_gap(d(t1, t2), d(s1, s2))


def f_invariance_gap(f, kp: KernelPair) -> float:
    """max_i |F(phi s_i) - F(s_i)| for a generator F, infinity-aware."""
    worst = 0.0
    for s in kp.pair:
        before = f.value(s.w)
        after = f.value(apply_kernel(kp.phi, s).w)
        worst = max(worst, _ext_gap(after, before))
    return worst


@dataclass(frozen=True)
class TrialRecord:
    tag: str
    dim: int
    gap: float
    s1: list[float]
    s2: list[float]
    note: str = ""

    def to_dict(self) -> dict:
        out = {"tag": self.tag, "dim": self.dim, "gap": self.gap, "s1": self.s1, "s2": self.s2}
        if self.note:
            out["note"] = self.note
        return out


@dataclass(frozen=True)
class SufficiencyReport:
    divergence: str
    dims: list[int]
    trials: int
    seed: int
    fail_threshold: float
    max_gap: float
    verdict: str
    worst: Optional[TrialRecord]
    entries: list[TrialRecord] = field(repr=False, default_factory=list)

    @property
    def passes(self) -> bool:
        return self.verdict == "passes"

    def to_dict(self, include_entries: bool = True) -> dict:
        out = {
            "divergence": self.divergence,
            "dims": self.dims,
            "trials": self.trials,
            "seed": self.seed,
            "fail_threshold": self.fail_threshold,
            "max_gap": self.max_gap,
            "verdict": self.verdict,
            "worst": self.worst.to_dict() if self.worst is not None else None,
        }
        if include_entries:
            out["entries"] = [e.to_dict() for e in self.entries]
        return out


def _interior_state(rng: np.random.Generator, dim: int) -> ProbVec:
    return ProbVec(0.9 * rng.dirichlet(np.ones(dim)) + 0.1 / dim)


def _random_partition(rng: np.random.Generator, dim: int, nblocks: int) -> list[list[int]]:
    letters = list(rng.permutation(dim))
    cuts = sorted(rng.choice(np.arange(1, dim), size=nblocks - 1, replace=False)) if nblocks > 1 else []
    bounds = [0, *cuts, dim]
    return [[int(x) for x in letters[a:b]] for a, b in zip(bounds, bounds[1:])]


def _planted_ratio_pair(
    rng: np.random.Generator, dim: int, nblocks: int
) -> tuple[ProbVec, ProbVec, list[list[int]]]:
    """A state pair whose likelihood ratio is constant on a planted random
    partition, so every block construction on it is sufficient by design."""
    blocks = _random_partition(rng, dim, nblocks)
    s2 = _interior_state(rng, dim)
    masses1 = 0.9 * rng.dirichlet(np.ones(len(blocks))) + 0.1 / len(blocks)
    w1 = np.zeros(dim)
    for block, m1 in zip(blocks, masses1):
        m2 = sum(s2[i] for i in block)
        for i in block:
            w1[i] = m1 * s2[i] / m2
    return ProbVec(w1), s2, blocks


def _trial(rng: np.random.Generator, dim: int, tag: str) -> KernelPair:
    if tag == "permutation":
        s1, s2 = _interior_state(rng, dim), _interior_state(rng, dim)
        perm = [int(i) for i in rng.permutation(dim)]
        return KernelPair(
            phi=Kernel.permutation(perm),
            psi=Kernel.permutation(list(np.argsort(perm))),
            pair=(s1, s2),
        )
    if tag == "merge-split":
        s1, s2, blocks = _planted_ratio_pair(rng, dim, int(rng.integers(1, dim)))
        return merge_split_pair(blocks, s1, s2)
    if tag == "uniformize-tail":
        q = _interior_state(rng, dim)
        keep = int(rng.integers(dim))
        if rng.random() < 0.5:
            return uniformize_tail_pair(q, keep)
        # Same kernels, applied to an interior pair on the segment from
        # dirac_keep to the tail conditional, for which they stay sufficient.
        phi, psi = _uniformize_kernels(q, keep)
        tail = np.array([0.0 if i == keep else q[i] for i in range(dim)])
        tail /= tail.sum()
        a1 = rng.uniform(0.10, 0.45)
        a2 = rng.uniform(0.55, 0.90)
        base = np.zeros(dim)
        base[keep] = 1.0
        s1 = ProbVec(a1 * base + (1.0 - a1) * tail)
        s2 = ProbVec(a2 * base + (1.0 - a2) * tail)
        return KernelPair(phi=phi, psi=psi, pair=(s1, s2))
    if tag == "reblock":
        nblocks = int(rng.integers(2, dim + 1))
        s1, s2, blocks_from = _planted_ratio_pair(rng, dim, nblocks)
        blocks_to = _random_partition(rng, dim, nblocks)
        conds = [0.8 * rng.dirichlet(np.ones(len(b))) + 0.2 / len(b) for b in blocks_to]
        kp = reblock_pair(s1, s2, blocks_from, blocks_to, conditionals=conds)
        if rng.random() < 0.5:
            # Compose an outer relabeling; still sufficient for the pair.
            perm = [int(i) for i in rng.permutation(dim)]
            outer = Kernel.permutation(perm)
            inv = Kernel.permutation(list(np.argsort(perm)))
            kp = KernelPair(
                phi=outer.compose(kp.phi), psi=kp.psi.compose(inv), pair=kp.pair
            )
        return kp
    raise ValueError(f"unknown trial family {tag!r}")


_FAMILIES = ("permutation", "merge-split", "uniformize-tail", "reblock")


def classify_divergence(
    d: Divergence,
    dims: Sequence[int],
    trials: int,
    seed: int,
    name: str = "divergence",
) -> SufficiencyReport:
    """Probe the sufficiency property of a divergence on constructed
    sufficient families; deterministic given the seed.

    `trials` kernel pairs are generated in total, cycling through the
    requested dimensions and the four family tags.  A divergence left
    undefined by a transformed pair counts as an infinite gap.
    """
    dims = [int(x) for x in dims]
    if not dims or any(x < 3 or x > 8 for x in dims):
        raise ValueError("dims must be a non-empty subset of 3..8")
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    entries: list[TrialRecord] = []
    for t in range(trials):
        dim = dims[t % len(dims)]
        tag = _FAMILIES[(t // len(dims)) % len(_FAMILIES)]
        kp = _trial(rng, dim, tag)
        s1, s2 = kp.pair
        note = ""
        try:
            gap = invariance_gap(d, kp)
        except GradientUndefinedError:
            gap = math.inf
            note = "divergence undefined on the transformed pair"
        entries.append(
            TrialRecord(
                tag=tag, dim=dim, gap=float(gap),
                s1=s1.w.tolist(), s2=s2.w.tolist(), note=note,
            )
        )
    worst = max(entries, key=lambda e: e.gap, default=None)
    max_gap = worst.gap if worst is not None else 0.0
    return SufficiencyReport(
        divergence=name,
        dims=dims,
        trials=trials,
        seed=seed,
        fail_threshold=FAIL_THRESHOLD,
        max_gap=max_gap,
        verdict="fails" if max_gap > FAIL_THRESHOLD else "passes",
        worst=worst,
        entries=entries,
    )


def divergence_by_name(name: str) -> tuple[str, Divergence]:
    """CLI divergence names: kl, sqnorm, burg, or bregman:<generator>."""
    if name == "kl":
        return "kl", kl_divergence
    if name == "sqnorm":
        gen = squared_norm
    elif name == "burg":
        gen = burg
    elif name.startswith("bregman:"):
        gen = generator_by_name(name[len("bregman:"):])
    else:
        raise ValueError(f"unknown divergence {name!r}")
    return name, lambda p, q: bregman_divergence(gen, p, q)

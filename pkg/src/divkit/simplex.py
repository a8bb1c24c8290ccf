"""Finite probability vectors, stochastic kernels, entropy, and KL divergence.

All quantities are in nats; conversion to bits happens only at the
presentation layer.
"""

import json

import numpy as np
from scipy.special import rel_entr, xlogy

__all__ = [
    "ProbVec",
    "MixtureWeights",
    "Kernel",
    "mixture",
    "apply_kernel",
    "kl_divergence",
    "entropy",
]

# Construction tolerances: sums further than SUM_TOL from 1 are rejected,
# entries below -NEG_TOL are rejected, entries in [-NEG_TOL, 0) are clamped.
SUM_TOL = 1e-9
NEG_TOL = 1e-12


def _validated_weights(values, what: str) -> np.ndarray:
    w = np.asarray(values, dtype=float)
    if w.ndim != 1 or w.size < 1:
        raise ValueError(f"{what} must be a one-dimensional vector, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError(f"{what} has non-finite entries")
    if np.any(w < -NEG_TOL):
        raise ValueError(f"{what} has negative entries: min {w.min():.3e}")
    w = np.where(w < 0.0, 0.0, w)
    s = float(w.sum())
    if abs(s - 1.0) > SUM_TOL:
        raise ValueError(f"{what} sums to {s!r}, outside 1 +/- {SUM_TOL}")
    return w / s


class ProbVec:
    """A point of the probability simplex over finitely many letters.

    Inputs are normalized on construction: the sum may deviate from 1 by at
    most 1e-9, entries may dip below 0 by at most 1e-12 (clamped).  Values
    are immutable afterwards.
    """

    __slots__ = ("_w",)

    def __init__(self, weights):
        w = _validated_weights(weights, "probability vector")
        w.setflags(write=False)
        self._w = w

    @property
    def w(self) -> np.ndarray:
        """Read-only weight array."""
        return self._w

    @property
    def dim(self) -> int:
        return self._w.size

    @classmethod
    def dirac(cls, index: int, dim: int) -> "ProbVec":
        if not 0 <= index < dim:
            raise ValueError(f"dirac index {index} out of range for dimension {dim}")
        w = np.zeros(dim)
        w[index] = 1.0
        return cls(w)

    @classmethod
    def uniform(cls, dim: int) -> "ProbVec":
        return cls(np.full(dim, 1.0 / dim))

    def is_interior(self, eps: float = 0.0) -> bool:
        return bool(np.all(self._w > eps))

    def support(self) -> np.ndarray:
        return np.flatnonzero(self._w > 0.0)

    def __len__(self) -> int:
        return self._w.size

    def __getitem__(self, i: int) -> float:
        return float(self._w[i])

    def __iter__(self):
        return iter(self._w.tolist())

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProbVec):
            return NotImplemented
        return self._w.shape == other._w.shape and bool(np.all(self._w == other._w))

    def __hash__(self):
        return hash(self._w.tobytes())

    def __repr__(self) -> str:
        return f"ProbVec({self._w.tolist()!r})"

    def to_json(self) -> str:
        return json.dumps(self._w.tolist())

    @classmethod
    def from_json(cls, text: str) -> "ProbVec":
        return cls(json.loads(text))


# Mixture weights obey exactly the ProbVec invariants; the distinction is
# only which index set they live over.
MixtureWeights = ProbVec


class Kernel:
    """A column-stochastic matrix acting on states by left multiplication.

    Each column is a probability vector: column j is the distribution the
    letter j is mapped to.
    """

    __slots__ = ("_m",)

    def __init__(self, entries):
        m = np.asarray(entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"kernel must be a square matrix, got shape {m.shape}")
        cols = []
        for j in range(m.shape[1]):
            cols.append(_validated_weights(m[:, j], f"kernel column {j}"))
        m = np.column_stack(cols)
        m.setflags(write=False)
        self._m = m

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "Kernel":
        return cls(np.eye(dim))

    @classmethod
    def permutation(cls, perm) -> "Kernel":
        perm = list(perm)
        dim = len(perm)
        if sorted(perm) != list(range(dim)):
            raise ValueError(f"{perm!r} is not a permutation of 0..{dim - 1}")
        m = np.zeros((dim, dim))
        for j, i in enumerate(perm):
            m[i, j] = 1.0  # letter j goes to letter perm[j]
        return cls(m)

    def __call__(self, p: ProbVec) -> ProbVec:
        return apply_kernel(self, p)

    def compose(self, other: "Kernel") -> "Kernel":
        """self after other: (self.compose(other))(p) == self(other(p))."""
        if self.dim != other.dim:
            raise ValueError(f"kernel dimensions differ: {self.dim} vs {other.dim}")
        return Kernel(self._m @ other._m)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Kernel):
            return NotImplemented
        return self._m.shape == other._m.shape and bool(np.all(self._m == other._m))

    def __repr__(self) -> str:
        return f"Kernel({self._m.tolist()!r})"

    def to_json(self) -> str:
        return json.dumps(self._m.tolist())

    @classmethod
    def from_json(cls, text: str) -> "Kernel":
        return cls(json.loads(text))


def mixture(t: MixtureWeights, states: list[ProbVec]) -> ProbVec:
    """Weighted mixture sum(t_i * states_i) of equal-dimension states."""
    if len(states) != t.dim:
        raise ValueError(f"{t.dim} weights for {len(states)} states")
    dims = {s.dim for s in states}
    if len(dims) != 1:
        raise ValueError(f"states have mixed dimensions: {sorted(dims)}")
    acc = np.zeros(states[0].dim)
    for ti, s in zip(t.w, states):
        acc += ti * s.w
    return ProbVec(acc)


def apply_kernel(k: Kernel, p: ProbVec) -> ProbVec:
    if k.dim != p.dim:
        raise ValueError(f"kernel dimension {k.dim} does not match state dimension {p.dim}")
    return ProbVec(k.matrix @ p.w)


def kl_divergence(p: ProbVec, q: ProbVec) -> float:
    """Information divergence sum(p_i * ln(p_i / q_i)) in nats.

    Terms with p_i = 0 contribute 0; the result is +inf exactly when some
    p_i > 0 has q_i = 0.
    """
    if p.dim != q.dim:
        raise ValueError(f"dimensions differ: {p.dim} vs {q.dim}")
    if p == q:
        return 0.0
    return float(np.sum(rel_entr(p.w, q.w)))


def entropy(p: ProbVec) -> float:
    """Shannon entropy -sum(p_i * ln p_i) in nats."""
    return float(-np.sum(xlogy(p.w, p.w)))

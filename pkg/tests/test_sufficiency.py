import math

import numpy as np
import pytest

from divkit.generators import bregman_divergence, burg, negentropy, squared_norm
from divkit.simplex import Kernel, ProbVec, apply_kernel, kl_divergence
from divkit.sufficiency import (
    KernelPair,
    classify_divergence,
    divergence_by_name,
    f_invariance_gap,
    invariance_gap,
    merge_split_pair,
    reblock_pair,
    recovery_search,
    uniformize_tail_pair,
)


def rand_interior(rng, dim):
    return ProbVec(0.9 * rng.dirichlet(np.ones(dim)) + 0.1 / dim)


def sqnorm_div(p, q):
    return bregman_divergence(squared_norm, p, q)


class TestKernelPair:
    def test_invariant_enforced(self):
        s1, s2 = ProbVec([0.3, 0.7]), ProbVec([0.6, 0.4])
        collapse = Kernel([[0.5, 0.5], [0.5, 0.5]])
        with pytest.raises(ValueError, match="recover"):
            KernelPair(phi=collapse, psi=Kernel.identity(2), pair=(s1, s2))

    def test_identity_pair(self):
        s1, s2 = ProbVec([0.3, 0.7]), ProbVec([0.6, 0.4])
        kp = KernelPair(phi=Kernel.identity(2), psi=Kernel.identity(2), pair=(s1, s2))
        assert kp.roundtrip_residual() == 0.0


class TestMergeSplit:
    def test_singleton_blocks_give_identity(self):
        s1, s2 = ProbVec([0.3, 0.7]), ProbVec([0.6, 0.4])
        kp = merge_split_pair([[0], [1]], s1, s2)
        assert kp.phi == Kernel.identity(2)
        assert kp.psi == Kernel.identity(2)

    def test_equal_ratio_block(self):
        s1, s2 = ProbVec([0.2, 0.2, 0.6]), ProbVec([0.1, 0.1, 0.8])
        kp = merge_split_pair([[0, 1], [2]], s1, s2)
        t1, t2 = kp.transformed()
        assert t1.w == pytest.approx([0.4, 0.0, 0.6], abs=1e-15)
        assert t2.w == pytest.approx([0.2, 0.0, 0.8], abs=1e-15)
        assert kp.roundtrip_residual() <= 1e-15
        # the shared within-block conditional is (0.5, 0.5)
        assert kp.psi.matrix[0, 0] == pytest.approx(0.5)
        assert kp.psi.matrix[1, 0] == pytest.approx(0.5)

    def test_unequal_ratio_rejected(self):
        with pytest.raises(ValueError, match=r"block \[0, 1\]"):
            merge_split_pair([[0, 1], [2]], ProbVec([0.5, 0.3, 0.2]), ProbVec([0.1, 0.1, 0.8]))

    def test_zero_blocks_allowed(self):
        s1, s2 = ProbVec([0.5, 0.5, 0, 0]), ProbVec([0.2, 0.8, 0, 0])
        kp = merge_split_pair([[0], [1], [2, 3]], s1, s2)
        assert kp.roundtrip_residual() <= 1e-15

    def test_partition_validated(self):
        s1, s2 = ProbVec([0.5, 0.5]), ProbVec([0.2, 0.8])
        with pytest.raises(ValueError, match="partition"):
            merge_split_pair([[0]], s1, s2)
        with pytest.raises(ValueError, match="partition"):
            merge_split_pair([[0, 1], [1]], s1, s2)


class TestUniformizeTail:
    def test_example(self):
        q = ProbVec([0.2, 0.3, 0.5])
        kp = uniformize_tail_pair(q, 0)
        t1, t2 = kp.transformed()
        assert t1 == ProbVec.dirac(0, 3)
        assert t2.w == pytest.approx([0.2, 0.4, 0.4], abs=1e-15)
        assert kp.roundtrip_residual() <= 1e-15

    def test_uniform_tail_fixed(self):
        q = ProbVec([0.5, 0.25, 0.25])
        kp = uniformize_tail_pair(q, 0)
        assert np.allclose(apply_kernel(kp.phi, q).w, q.w)
        assert kp.roundtrip_residual() <= 1e-15

    def test_degenerate_dirac(self):
        kp = uniformize_tail_pair(ProbVec.dirac(0, 3), 0)
        assert kp.phi == Kernel.identity(3)
        assert kp.psi == Kernel.identity(3)

    def test_binary_is_identity(self):
        # with two letters the tail is a single point, so nothing moves and
        # F-invariance cannot separate any generator on this family
        kp = uniformize_tail_pair(ProbVec([0.3, 0.7]), 0)
        assert kp.phi == Kernel.identity(2)
        assert f_invariance_gap(squared_norm, kp) == 0.0
        assert f_invariance_gap(negentropy, kp) == 0.0


class TestReblock:
    def test_moves_ratio_mass_between_block_sizes(self):
        s1, s2 = ProbVec([0.45, 0.45, 0.1]), ProbVec([0.1, 0.1, 0.8])
        kp = reblock_pair(s1, s2, [[0, 1], [2]], [[0], [1, 2]], conditionals=[[1.0], [0.5, 0.5]])
        t1, t2 = kp.transformed()
        assert t1.w == pytest.approx([0.9, 0.05, 0.05], abs=1e-12)
        assert t2.w == pytest.approx([0.2, 0.4, 0.4], abs=1e-12)

    def test_block_count_mismatch(self):
        s1, s2 = ProbVec([0.2, 0.2, 0.6]), ProbVec([0.1, 0.1, 0.8])
        with pytest.raises(ValueError, match="blocks"):
            reblock_pair(s1, s2, [[0, 1], [2]], [[0, 1, 2]])

    def test_burg_interior_witness(self):
        # an interior-to-interior sufficient kernel that changes how many
        # letters carry each likelihood ratio: Burg is not invariant
        s1, s2 = ProbVec([0.3, 0.3, 0.4]), ProbVec([0.2, 0.2, 0.6])
        kp = reblock_pair(s1, s2, [[0, 1], [2]], [[0], [1, 2]], conditionals=[[1.0], [0.5, 0.5]])
        _, dburg = divergence_by_name("burg")
        gap = invariance_gap(dburg, kp)
        assert math.isfinite(gap) and gap > 1e-3
        # KL is invariant on the very same pair
        assert invariance_gap(kl_divergence, kp) <= 1e-12


class TestRecoverySearch:
    def test_permutation_always_sufficient(self):
        s1, s2 = ProbVec([0.2, 0.3, 0.5]), ProbVec([0.5, 0.25, 0.25])
        phi = Kernel.permutation([2, 0, 1])
        psi = recovery_search(phi, s1, s2)
        assert psi is not None
        for s in (s1, s2):
            assert np.allclose(apply_kernel(psi, apply_kernel(phi, s)).w, s.w, atol=1e-9)

    def test_merge_kernel_recovered(self):
        s1, s2 = ProbVec([0.2, 0.2, 0.6]), ProbVec([0.1, 0.1, 0.8])
        phi = merge_split_pair([[0, 1], [2]], s1, s2).phi
        psi = recovery_search(phi, s1, s2)
        assert psi is not None
        for s in (s1, s2):
            assert np.allclose(apply_kernel(psi, apply_kernel(phi, s)).w, s.w, atol=1e-9)

    def test_collapsing_kernel_unrecoverable(self):
        phi = Kernel(np.full((2, 2), 0.5))
        assert recovery_search(phi, ProbVec.dirac(0, 2), ProbVec.dirac(1, 2)) is None

    def test_seeded_constructive_trials(self):
        rng = np.random.default_rng(77)
        found, refused = 0, 0
        for _ in range(60):
            dim = int(rng.integers(2, 7))
            s2 = rand_interior(rng, dim)
            s1 = rand_interior(rng, dim)
            if dim >= 3 and rng.random() < 0.5:
                kp = uniformize_tail_pair(s2, int(rng.integers(dim)))
                s1, s2 = kp.pair
                phi = kp.phi
            else:
                perm = [int(i) for i in rng.permutation(dim)]
                phi = Kernel.permutation(perm)
            assert recovery_search(phi, s1, s2) is not None
            found += 1
            if np.max(np.abs(s1.w - s2.w)) > 1e-6:
                # column-constant kernels send both states to the same
                # point, so distinguishable pairs cannot be recovered
                collapse = Kernel(np.tile(rng.dirichlet(np.ones(dim)), (dim, 1)).T)
                assert recovery_search(collapse, s1, s2) is None
                refused += 1
        assert found >= 50 and refused >= 10


class TestInvarianceGaps:
    def test_identity_pair_zero(self):
        s1, s2 = ProbVec([0.3, 0.7]), ProbVec([0.6, 0.4])
        kp = KernelPair(phi=Kernel.identity(2), psi=Kernel.identity(2), pair=(s1, s2))
        for d in (kl_divergence, sqnorm_div):
            assert invariance_gap(d, kp) == 0.0

    def test_kl_invariant_under_merge(self):
        s1, s2 = ProbVec([0.2, 0.2, 0.6]), ProbVec([0.1, 0.1, 0.8])
        kp = merge_split_pair([[0, 1], [2]], s1, s2)
        assert invariance_gap(kl_divergence, kp) <= 1e-10

    def test_sqnorm_breaks_on_uniformize(self):
        kp = uniformize_tail_pair(ProbVec([0.2, 0.3, 0.5]), 0)
        gap = invariance_gap(sqnorm_div, kp)
        assert gap == pytest.approx(0.02, abs=1e-12)
        assert gap > 1e-3

    def test_infinities_agree(self):
        # both sides +inf counts as gap zero
        kp = uniformize_tail_pair(ProbVec([0.2, 0.3, 0.5]), 0)
        _, dburg = divergence_by_name("burg")
        assert invariance_gap(dburg, kp) == 0.0

    def test_f_invariance_examples(self):
        s1, s2 = ProbVec([0.2, 0.3, 0.5]), ProbVec([0.5, 0.25, 0.25])
        perm_pair = KernelPair(
            phi=Kernel.permutation([1, 2, 0]), psi=Kernel.permutation([2, 0, 1]), pair=(s1, s2)
        )
        assert f_invariance_gap(negentropy, perm_pair) <= 1e-15

        ms1, ms2 = ProbVec([0.2, 0.2, 0.6]), ProbVec([0.1, 0.1, 0.8])
        merge = merge_split_pair([[0, 1], [2]], ms1, ms2)
        # negentropy is not fixed by merging, but kl stays put on the pair;
        # the F-gap is positive here while the divergence gap vanishes
        assert invariance_gap(kl_divergence, merge) <= 1e-10
        assert f_invariance_gap(negentropy, merge) > 0.0

        uni = uniformize_tail_pair(ProbVec([0.2, 0.3, 0.5]), 0)
        assert f_invariance_gap(squared_norm, uni) > 1e-3


class TestClassifyDivergence:
    def test_kl_passes(self):
        report = classify_divergence(kl_divergence, [3, 4, 5], 200, seed=101, name="kl")
        assert report.passes
        assert report.max_gap <= 1e-8

    def test_scaled_kl_passes(self):
        report = classify_divergence(
            lambda p, q: 2.0 * kl_divergence(p, q), [3, 4], 200, seed=102, name="2kl"
        )
        assert report.passes

    def test_sqnorm_fails_with_witness(self):
        report = classify_divergence(sqnorm_div, [3], 200, seed=103, name="sqnorm")
        assert report.verdict == "fails"
        assert report.worst is not None and report.worst.gap > 1e-3
        # the recorded witness reproduces
        finite = [e for e in report.entries if math.isfinite(e.gap) and e.gap > 1e-3]
        assert finite

    def test_burg_fails_with_finite_witness(self):
        _, dburg = divergence_by_name("burg")
        report = classify_divergence(dburg, [3, 4], 300, seed=104, name="burg")
        assert report.verdict == "fails"
        finite = [e for e in report.entries if math.isfinite(e.gap) and e.gap > 1e-3]
        assert finite, "need a finite interior witness, not just boundary blowups"

    def test_deterministic_given_seed(self):
        a = classify_divergence(kl_divergence, [3, 4], 60, seed=7)
        b = classify_divergence(kl_divergence, [3, 4], 60, seed=7)
        assert [e.gap for e in a.entries] == [e.gap for e in b.entries]
        assert [e.s1 for e in a.entries] == [e.s1 for e in b.entries]

    def test_dims_precondition(self):
        with pytest.raises(ValueError):
            classify_divergence(kl_divergence, [2], 10, seed=1)
        with pytest.raises(ValueError):
            classify_divergence(kl_divergence, [9], 10, seed=1)
        with pytest.raises(ValueError):
            classify_divergence(kl_divergence, [3], 0, seed=1)

    def test_report_serialization(self):
        report = classify_divergence(kl_divergence, [3], 10, seed=5, name="kl")
        payload = report.to_dict()
        assert payload["verdict"] == "passes"
        assert len(payload["entries"]) == 10
        assert set(payload["worst"]) >= {"tag", "dim", "gap", "s1", "s2"}
        summary = report.to_dict(include_entries=False)
        assert "entries" not in summary


class TestComposition:
    def test_composed_sufficient_kernels_keep_kl_invariant(self):
        s1, s2 = ProbVec([0.2, 0.2, 0.6]), ProbVec([0.1, 0.1, 0.8])
        inner = merge_split_pair([[0, 1], [2]], s1, s2)
        perm = Kernel.permutation([1, 2, 0])
        inv = Kernel.permutation([2, 0, 1])
        composed = KernelPair(
            phi=perm.compose(inner.phi), psi=inner.psi.compose(inv), pair=(s1, s2)
        )
        assert invariance_gap(kl_divergence, composed) <= 1e-10


class TestDivergenceByName:
    def test_names(self):
        for name in ("kl", "sqnorm", "burg", "bregman:negentropy"):
            label, d = divergence_by_name(name)
            assert label == name
            assert d(ProbVec([0.4, 0.6]), ProbVec([0.4, 0.6])) == pytest.approx(0.0, abs=1e-15)
        with pytest.raises(ValueError):
            divergence_by_name("hellinger")

import math

import numpy as np
import pytest

from glmtucker.decompose import FitConfig, fit
from glmtucker.families import GAUSSIAN
from glmtucker.rank_select import (
    BicEntry,
    bic,
    candidate_ranks,
    effective_params,
    grid_search,
)
from glmtucker.simulate import SimSpec, generate


def small_instance(seed=0, dims=(8, 8, 8), p=4, rank=(2, 2, 2), alpha=4.0):
    spec = SimSpec(
        dims=dims, feature_dims=(p,) * 3, rank=rank, family=GAUSSIAN,
        effect_size=alpha, seed=seed,
    )
    return generate(spec)


class TestEffectiveParams:
    def test_worked_example(self):
        assert effective_params((3, 3, 3), (8, 8, 8)) == 72

    def test_saturated_rank(self):
        assert effective_params((4, 5), (4, 5)) == 20

    def test_minimal(self):
        assert effective_params((1, 1, 1), (2, 2, 2)) == 4

    def test_rank_exceeding_features(self):
        with pytest.raises(ValueError):
            effective_params((3,), (2,))


class TestBic:
    def test_formula(self):
        inst = small_instance(seed=1)
        result = fit(inst.problem, FitConfig(rank=(2, 2, 2), init="spectral"))
        entry = bic(inst.problem, result)
        n = math.prod(inst.problem.dims)
        expected = -2.0 * entry.loglik + entry.effective_params * math.log(n)
        assert entry.bic == pytest.approx(expected, abs=1e-9)
        assert entry.rank == (2, 2, 2)

    def test_loglik_linearity(self):
        e = BicEntry(rank=(1, 1, 1), bic=0.0, loglik=0.0, effective_params=4, converged=True)
        n = 8
        bic0 = -2 * 0.0 + 4 * math.log(n)
        bic1 = -2 * 5.0 + 4 * math.log(n)
        assert bic0 - bic1 == pytest.approx(10.0)
        assert 4 * math.log(8) == pytest.approx(bic0)

    def test_true_rank_beats_inflated_rank(self):
        spec = SimSpec(
            dims=(40, 40, 40), feature_dims=(16, 16, 16), rank=(3, 3, 3),
            family=GAUSSIAN, effect_size=4.0, seed=2,
        )
        inst = generate(spec)
        cfg = FitConfig(rank=(3, 3, 3), init="both", seed=3)
        at_truth = bic(inst.problem, fit(inst.problem, cfg))
        from dataclasses import replace
        inflated_cfg = replace(cfg, rank=(4, 4, 4))
        inflated = bic(inst.problem, fit(inst.problem, inflated_cfg))
        assert at_truth.bic < inflated.bic


class TestCandidateRanks:
    def test_radius_zero(self):
        assert candidate_ranks((2, 2, 2), 0, (4, 4, 4)) == [(2, 2, 2)]

    def test_box_is_clipped_and_filtered(self):
        cands = candidate_ranks((3, 3, 3), 1, (8, 8, 8))
        assert (2, 2, 4) in cands  # 4 <= 2*2 keeps it
        assert all(max(r) <= min(8, 4) for r in cands)
        cands_low = candidate_ranks((2, 2, 2), 1, (8, 8, 8))
        assert (1, 1, 3) not in cands_low  # 3 > 1*1 removes it
        assert (1, 1, 1) in cands_low

    def test_clipping_to_feature_dims(self):
        cands = candidate_ranks((3, 3, 3), 2, (4, 4, 4))
        assert max(max(r) for r in cands) == 4

    def test_empty_range_errors(self):
        with pytest.raises(ValueError, match="empty"):
            candidate_ranks((9, 9, 9), 0, (8, 8, 8))


class TestGridSearch:
    def test_single_candidate(self):
        inst = small_instance(seed=4)
        table = grid_search(inst.problem, (2, 2, 2), 0, FitConfig(rank=(2, 2, 2), seed=5))
        assert len(table.entries) == 1
        assert table.selected == (2, 2, 2)

    def test_selected_attains_minimum(self):
        inst = small_instance(seed=6)
        table = grid_search(inst.problem, (2, 2, 2), 1, FitConfig(rank=(2, 2, 2), seed=7))
        best = min(e.bic for e in table.entries)
        chosen = [e for e in table.entries if e.rank == table.selected][0]
        assert chosen.bic == best

    def test_all_candidates_valid(self):
        inst = small_instance(seed=8)
        table = grid_search(inst.problem, (2, 2, 2), 2, FitConfig(rank=(2, 2, 2), seed=9))
        p = inst.problem.feature_dims
        for e in table.entries:
            assert all(r <= pk for r, pk in zip(e.rank, p))
            for k, r in enumerate(e.rank):
                others = math.prod(rj for j, rj in enumerate(e.rank) if j != k)
                assert r <= others

    def test_entry_internal_consistency(self):
        inst = small_instance(seed=10)
        table = grid_search(inst.problem, (2, 2, 2), 1, FitConfig(rank=(2, 2, 2), seed=11))
        n = math.prod(inst.problem.dims)
        for e in table.entries:
            assert e.bic == pytest.approx(-2 * e.loglik + e.effective_params * math.log(n), abs=1e-9)

    def test_parallel_matches_serial(self):
        inst = small_instance(seed=12)
        cfg = FitConfig(rank=(2, 2, 2), seed=13)
        serial = grid_search(inst.problem, (2, 2, 2), 1, cfg, jobs=1)
        parallel = grid_search(inst.problem, (2, 2, 2), 1, cfg, jobs=2)
        assert serial.selected == parallel.selected
        for a, b in zip(serial.entries, parallel.entries):
            assert a.rank == b.rank
            assert a.bic == b.bic
            assert a.loglik == b.loglik

    def test_tie_breaks_lexicographically(self):
        entries = [
            BicEntry(rank=(2, 1), bic=5.0, loglik=0.0, effective_params=1, converged=True),
            BicEntry(rank=(1, 2), bic=5.0, loglik=0.0, effective_params=1, converged=True),
        ]
        assert min(entries, key=lambda e: (e.bic, e.rank)).rank == (1, 2)

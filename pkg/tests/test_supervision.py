import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpf import supervision as S
from dpf.autograd import Parameter, Tensor
from dpf.errors import ContractError
from dpf.gradcheck import grad_check

from reference_impls import hinge_ref, whdr_ref


class TestCePointLoss:
    def test_uniform_logits_give_log_c(self):
        logits = Tensor(np.zeros((3, 4), dtype=np.float32))
        loss = S.ce_point_loss(logits, np.array([0, 1, 3]))
        assert loss.item() == pytest.approx(np.log(4.0), rel=1e-6)

    def test_dominant_correct_logit(self):
        logits = Tensor(np.array([[10.0, 0.0, 0.0, 0.0]], dtype=np.float32))
        loss = S.ce_point_loss(logits, np.array([0]))
        assert loss.item() == pytest.approx(np.log(1 + 3 * np.exp(-10.0)), rel=1e-3)
        assert loss.item() == pytest.approx(1.36e-4, rel=0.01)

    def test_correct_dominant_beats_wrong_dominant(self):
        good = S.ce_point_loss(Tensor(np.array([[5.0, 0.0]], dtype=np.float32)),
                               np.array([0])).item()
        bad = S.ce_point_loss(Tensor(np.array([[0.0, 5.0]], dtype=np.float32)),
                              np.array([0])).item()
        assert good < bad

    def test_shift_invariance_and_nonnegativity(self):
        rng = np.random.default_rng(0)
        logits = rng.normal(size=(10, 5)).astype(np.float32)
        labels = rng.integers(0, 5, 10)
        a = S.ce_point_loss(Tensor(logits), labels).item()
        b = S.ce_point_loss(Tensor(logits + 7.0), labels).item()
        assert a == pytest.approx(b, rel=1e-5)
        assert a > 0

    def test_label_out_of_range(self):
        with pytest.raises(ContractError):
            S.ce_point_loss(Tensor(np.zeros((1, 3), dtype=np.float32)), np.array([3]))


class TestHinge:
    def test_equal_pair_at_ratio_one_is_satisfied(self):
        assert S.hinge_pair_loss(1.0, 1.0, S.PairLabel.EQUAL) == 0.0

    def test_point1_darker_at_ratio_one(self):
        expected = 1.0 - 1.0 / 1.2
        assert S.hinge_pair_loss(1.0, 1.0, S.PairLabel.POINT1_DARKER) == pytest.approx(
            expected, rel=1e-12)
        assert expected == pytest.approx(1 / 6, rel=1e-12)

    def test_point2_darker_satisfied_above_margin(self):
        assert S.hinge_pair_loss(1.3, 1.0, S.PairLabel.POINT2_DARKER) == 0.0

    def test_training_margins(self):
        assert S.TRAIN_DELTA == 0.12
        assert S.TRAIN_EPS == 0.08

    @given(r1=st.floats(0.05, 3.0), r2=st.floats(0.05, 3.0),
           lab=st.sampled_from([0, 1, 2]))
    @settings(max_examples=300)
    def test_matches_straightline_reference(self, r1, r2, lab):
        ours = S.hinge_pair_loss(r1, r2, S.PairLabel(lab))
        assert ours == pytest.approx(hinge_ref(r1, r2, lab), rel=1e-12, abs=1e-15)
        assert ours >= 0.0

    def test_zero_exactly_on_satisfied_region(self):
        # closed regions: ratio <= 1/1.2 (J=1), >= 1.2 (J=2), in [1/1.04, 1.04] (E)
        ratios = np.linspace(0.05, 3.0, 2000)
        for lab, satisfied in [
            (1, ratios <= 1.0 / 1.2),
            (2, ratios >= 1.2),
            (0, (ratios >= 1.0 / 1.04) & (ratios <= 1.04)),
        ]:
            losses = np.array([S.hinge_pair_loss(r, 1.0, S.PairLabel(lab))
                               for r in ratios])
            np.testing.assert_array_equal(losses == 0.0, satisfied)

    def test_continuity_at_branch_boundaries(self):
        for lab, edge in [(1, 1.0 / 1.2), (2, 1.2), (0, 1.04), (0, 1.0 / 1.04)]:
            lo = S.hinge_pair_loss(edge - 1e-9, 1.0, S.PairLabel(lab))
            hi = S.hinge_pair_loss(edge + 1e-9, 1.0, S.PairLabel(lab))
            assert abs(lo - hi) < 1e-6

    def test_nonpositive_reflectance_rejected(self):
        with pytest.raises(ContractError):
            S.hinge_pair_loss(0.0, 1.0, S.PairLabel.EQUAL)

    def test_gradient_flows_through_ratio(self):
        r1 = Parameter(np.array([1.0]), "r1")
        r2 = Parameter(np.array([1.0]), "r2")

        def closure():
            return S.hinge_pair_losses(r1, r2, np.array([1])).sum()

        res = grad_check(closure, [r1, r2], probe_count=4, seed=0)
        assert res.max_rel_error <= 1e-3


class TestPairTotal:
    def test_all_satisfied_sums_to_zero(self):
        r1 = Tensor(np.array([1.0, 2.0], dtype=np.float32))
        r2 = Tensor(np.array([1.0, 2.0], dtype=np.float32))
        losses = S.hinge_pair_losses(r1, r2, np.array([0, 0]))
        assert S.pair_loss_total(losses, np.array([1.0, 5.0])).item() == 0.0

    def test_single_violated_pair_weighting(self):
        losses = Tensor(np.array([0.1], dtype=np.float32))
        assert S.pair_loss_total(losses, np.array([2.0])).item() == pytest.approx(0.2, rel=1e-6)

    def test_matches_reference_summation(self):
        rng = np.random.default_rng(1)
        r1 = rng.uniform(0.1, 1.0, 50)
        r2 = rng.uniform(0.1, 1.0, 50)
        labels = rng.integers(0, 3, 50)
        weights = rng.uniform(0.0, 2.0, 50)
        losses = S.hinge_pair_losses(Tensor(r1.astype(np.float32)),
                                     Tensor(r2.astype(np.float32)), labels)
        total = S.pair_loss_total(losses, weights).item()
        expected = sum(w * hinge_ref(a, b, int(l))
                       for w, a, b, l in zip(weights, r1, r2, labels))
        assert total == pytest.approx(expected, rel=1e-4)


class TestClassifyPair:
    def test_clear_darker1(self):
        assert S.classify_pair(1.0, 1.3) == S.PairLabel.POINT1_DARKER

    def test_equal_reflectance(self):
        assert S.classify_pair(0.7, 0.7) == S.PairLabel.EQUAL

    def test_boundary_ratio_exactly_threshold_is_equal(self):
        # strict inequality: ratio exactly 1 + delta stays "equal"
        assert S.classify_pair(1.0, 1.1) == S.PairLabel.EQUAL
        assert S.classify_pair(1.1, 1.0) == S.PairLabel.EQUAL
        assert S.classify_pair(1.0, 1.1 + 1e-9) == S.PairLabel.POINT1_DARKER

    @given(r1=st.floats(0.01, 5.0), r2=st.floats(0.01, 5.0),
           scale=st.floats(0.01, 50.0))
    @settings(max_examples=300)
    def test_scale_invariance(self, r1, r2, scale):
        assert S.classify_pair(r1, r2) == S.classify_pair(scale * r1, scale * r2)


class TestWhdr:
    def test_consistent_predictions_score_zero(self):
        rng = np.random.default_rng(2)
        r1 = rng.uniform(0.1, 1.0, 100)
        r2 = rng.uniform(0.1, 1.0, 100)
        labels = S.classify_pairs(r1, r2)
        rep = S.whdr(labels, np.ones(100), S.classify_pairs(r1, r2))
        assert rep.whdr == 0.0

    def test_constant_predictor_errs_on_nonequal_fraction(self):
        labels = np.array([0] * 6 + [1] * 2 + [2] * 2)
        pred = np.zeros(10, dtype=np.int64)  # constant reflectance -> all "equal"
        rep = S.whdr(labels, np.ones(10), pred)
        assert rep.whdr == pytest.approx(0.4)

    def test_weighted_errors(self):
        labels = np.array([1, 2])
        pred = np.array([2, 2])
        rep = S.whdr(labels, np.array([2.0, 1.0]), pred)
        assert rep.whdr == pytest.approx(2.0 / 3.0)

    def test_matches_straightline_reference(self):
        rng = np.random.default_rng(3)
        r1 = rng.uniform(0.05, 1.0, 500)
        r2 = rng.uniform(0.05, 1.0, 500)
        weights = rng.uniform(0.1, 2.0, 500)
        labels = rng.integers(0, 3, 500)
        rep = S.whdr(labels, weights, S.classify_pairs(r1, r2))
        assert rep.whdr == pytest.approx(whdr_ref(labels, weights, r1, r2), rel=1e-12)

    def test_zero_weight_rejected(self):
        with pytest.raises(ContractError):
            S.whdr(np.array([0]), np.array([0.0]), np.array([0]))

    def test_whdr_in_unit_interval(self):
        labels = np.array([1, 1, 1])
        pred = np.array([2, 2, 2])
        rep = S.whdr(labels, np.ones(3), pred)
        assert rep.whdr == 1.0


class TestMiou:
    def test_perfect_prediction(self):
        gt = np.array([[0, 1], [2, 2]])
        m, per = S.miou(gt, gt, 3)
        assert m == 1.0
        assert per == {0: 1.0, 1: 1.0, 2: 1.0}

    def test_disjoint_same_class_masks(self):
        gt = np.array([[1, 1, 0, 0]])
        pred = np.array([[0, 0, 1, 1]])
        m, per = S.miou(pred, gt, 2)
        assert per[1] == 0.0

    def test_half_overlap_is_one_third(self):
        gt = np.zeros((4, 4), dtype=int)
        gt[:2] = 1
        pred = np.zeros((4, 4), dtype=int)
        pred[1:3] = 1
        _, per = S.miou(pred, gt, 2)
        assert per[1] == pytest.approx(1.0 / 3.0)

    def test_ignore_pixels_excluded(self):
        gt = np.array([[0, 255], [255, 1]])
        pred = np.array([[0, 1], [0, 1]])
        m, per = S.miou(pred, gt, 2)
        assert m == 1.0

    def test_no_valid_pixels_rejected(self):
        gt = np.full((2, 2), 255)
        with pytest.raises(ContractError):
            S.miou(np.zeros((2, 2), dtype=int), gt, 2)

    def test_relabeling_permutation_symmetry(self):
        rng = np.random.default_rng(4)
        gt = rng.integers(0, 3, (16, 16))
        pred = rng.integers(0, 3, (16, 16))
        m1, _ = S.miou(pred, gt, 3)
        perm = np.array([2, 0, 1])
        m2, _ = S.miou(perm[pred], perm[gt], 3)
        assert m1 == pytest.approx(m2)


class TestTotalLoss:
    def test_lambda_zero_keeps_field_term_only(self):
        out = S.total_loss(Tensor(np.float32(0.7)), Tensor(np.float32(9.0)), 0.0)
        assert out.item() == pytest.approx(0.7, rel=1e-6)

    def test_equal_halves(self):
        out = S.total_loss(Tensor(np.float32(0.5)), Tensor(np.float32(0.5)), 1.0)
        assert out.item() == pytest.approx(1.0, rel=1e-6)

    def test_matches_recomputed_sum(self):
        rng = np.random.default_rng(5)
        a, b, lam = rng.uniform(0, 2, 3)
        out = S.total_loss(Tensor(np.float32(a)), Tensor(np.float32(b)), float(lam))
        assert out.item() == pytest.approx(float(np.float32(a) + np.float32(lam) *
                                                 np.float32(b)), rel=1e-6)

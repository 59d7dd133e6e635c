import math

import numpy as np
import pytest

from varfast import (
    AttentionParams,
    DimensionMismatch,
    FlatMatrix,
    NumericOverflow,
    OpCounter,
    Rng,
    TooLargeToMaterialize,
    attn_exact,
    attn_exact_cost,
    attn_matrix,
)

from _oracles import attention_oracle


def seeded_params(seed, d, bound=0.5):
    rng = Rng(seed)
    return AttentionParams(
        w_q=rng.uniform(-bound, bound, (d, d)),
        w_k=rng.uniform(-bound, bound, (d, d)),
        w_v=rng.uniform(-bound, bound, (d, d)),
        entry_bound=bound,
    )


class TestAttnExact:
    def test_single_token_returns_value_projection(self):
        p = seeded_params(1, 3)
        x = FlatMatrix(Rng(2).uniform(-1, 1, (1, 3)))
        out = attn_exact(x, p)
        assert np.allclose(out.data, x.data @ p.w_v, atol=1e-15)

    def test_identical_rows_give_identical_outputs(self):
        p = seeded_params(3, 2)
        row = Rng(4).uniform(-1, 1, (1, 2))
        x = FlatMatrix(np.repeat(row, 5, axis=0))
        out = attn_exact(x, p)
        expected = row @ p.w_v
        for i in range(5):
            assert np.allclose(out.data[i], expected[0], atol=1e-12)

    def test_matches_materialization_oracle(self):
        p = seeded_params(5, 2)
        x = FlatMatrix(Rng(6).uniform(-1, 1, (3, 2)))
        expected = attention_oracle(x.data, p.w_q, p.w_k, p.w_v)
        assert np.allclose(attn_exact(x, p).data, expected, atol=1e-12)

    def test_convex_hull_containment(self):
        p = seeded_params(7, 4)
        x = FlatMatrix(Rng(8).uniform(-1, 1, (12, 4)))
        out = attn_exact(x, p)
        values = x.data @ p.w_v
        for c in range(4):
            assert out.data[:, c].min() >= values[:, c].min() - 1e-12
            assert out.data[:, c].max() <= values[:, c].max() + 1e-12

    def test_overflow_reported_with_index(self):
        p = AttentionParams(
            w_q=np.eye(2) * 1e200,
            w_k=np.eye(2),
            w_v=np.eye(2),
            entry_bound=1e200,
        )
        x = FlatMatrix(np.full((2, 2), 1e200))
        with pytest.raises(NumericOverflow) as exc:
            attn_exact(x, p)
        assert exc.value.index is not None

    def test_dimension_mismatch(self):
        p = seeded_params(9, 3)
        with pytest.raises(DimensionMismatch):
            attn_exact(FlatMatrix(np.zeros((2, 2))), p)

    def test_operation_count_formula(self):
        p = seeded_params(10, 4)
        x = FlatMatrix(Rng(11).uniform(-0.5, 0.5, (6, 4)))
        counter = OpCounter()
        attn_exact(x, p, counter, "stage1_attn")
        L, d = 6, 4
        expected = (
            L * L * (2 * d - 1)
            + 2 * L * d * (2 * d - 1)
            + L * L * d
            + L * d * (2 * d - 1)
        )
        assert counter.get("stage1_attn").mults == expected
        assert counter.get("stage1_attn").exps == L * L

    def test_count_depends_only_on_shape(self):
        p = seeded_params(12, 3)
        c1, c2 = OpCounter(), OpCounter()
        attn_exact(FlatMatrix(Rng(13).uniform(-1, 1, (5, 3))), p, c1, "stage3")
        attn_exact(FlatMatrix(Rng(14).uniform(-1, 1, (5, 3))), p, c2, "stage3")
        assert c1.get("stage3").as_dict() == c2.get("stage3").as_dict()


class TestAttnMatrix:
    def test_zero_input_gives_all_ones(self):
        p = seeded_params(15, 2)
        a = attn_matrix(FlatMatrix(np.zeros((4, 2))), p)
        assert (a == 1.0).all()

    def test_single_row_scalar_exp(self):
        p = seeded_params(16, 2)
        x = FlatMatrix(Rng(17).uniform(-1, 1, (1, 2)))
        q = x.data @ p.w_q
        k = x.data @ p.w_k
        a = attn_matrix(x, p)
        assert a.shape == (1, 1)
        assert a[0, 0] == pytest.approx(math.exp(float((q @ k.T)[0, 0])), rel=1e-15)

    def test_row_stochastic_after_normalization(self):
        p = seeded_params(18, 2)
        x = FlatMatrix(Rng(19).uniform(-1, 1, (4, 2)))
        a = attn_matrix(x, p)
        rows = a / a.sum(axis=1, keepdims=True)
        assert np.abs(rows.sum(axis=1) - 1.0).max() <= 1e-12

    def test_positivity(self):
        p = seeded_params(20, 3)
        a = attn_matrix(FlatMatrix(Rng(21).uniform(-1, 1, (6, 3))), p)
        assert (a > 0.0).all()

    def test_size_guard(self):
        p = seeded_params(22, 2)
        x = FlatMatrix(np.zeros((4097, 2)))
        with pytest.raises(TooLargeToMaterialize):
            attn_matrix(x, p)

    def test_stabilized_path_equals_definition(self):
        # same function, two evaluation orders
        p = seeded_params(23, 3)
        x = FlatMatrix(Rng(24).uniform(-1, 1, (8, 3)))
        a = attn_matrix(x, p)
        direct = (a / a.sum(axis=1, keepdims=True)) @ (x.data @ p.w_v)
        assert np.allclose(attn_exact(x, p).data, direct, atol=1e-12)


class TestAttentionParams:
    def test_entry_bound_enforced(self):
        with pytest.raises(ValueError):
            AttentionParams(w_q=np.eye(2) * 2, w_k=np.eye(2), w_v=np.eye(2), entry_bound=1.0)

    def test_non_square_rejected(self):
        with pytest.raises(DimensionMismatch):
            AttentionParams(w_q=np.zeros((2, 3)), w_k=np.zeros((2, 2)), w_v=np.zeros((2, 2)), entry_bound=1.0)

    def test_cost_helper_matches_counter(self):
        c = attn_exact_cost(6, 4)
        assert c.mults == 6 * 6 * 7 + 2 * 6 * 4 * 7 + 6 * 6 * 4 + 6 * 4 * 7

import numpy as np
import pytest

import probattn as pa
from probattn import oracles as orc
from probattn.errors import (
    DimensionMismatch,
    NonUniformPrecision,
    OffsetOutOfRange,
    ShapeMismatch,
)
from probattn.position import AxialConfig, axial_attention, csa_pass, pe_attention


def pe_model(rng, grid, d=2, m=2, alpha=0.7, beta=0.1, variant="full"):
    n = grid[0] * grid[1]
    pe = pa.RelativePE.random(grid, d, variant=variant,
                              rng=int(rng.integers(0, 2**31)))
    model = pa.MixtureModel(
        keys=rng.uniform(-1, 1, size=(n, d)),
        key_precisions=np.full(n, alpha),
        value_means=rng.uniform(-1, 1, size=(n, m)),
        value_precisions=np.full(n, beta),
        prior=pa.PositionPrior(pe),
    )
    queries = rng.uniform(-1, 1, size=(n, d))
    return model, queries, pe


class TestPeQueryLogLikelihood:
    def test_embedding_equal_to_key_doubles_precision(self, rng):
        model, queries, pe = pe_model(rng, (4, 1))
        j, i = 2, 1
        custom = pa.RelativePE(
            grid=(4, 1), variant="full",
            q_table=np.tile(model.keys[j], (7, 1, 1)),
            k_table=pe.k_table,
        )
        got = pa.pe_query_log_likelihood(queries[i], j, i, model, custom)
        doubled = model.replace(key_precisions=2 * model.key_precisions)
        assert got == pytest.approx(
            pa.query_log_likelihood(queries[i], j, doubled), abs=1e-12
        )

    def test_maximal_at_midpoint(self, rng):
        model, _, pe = pe_model(rng, (3, 1))
        j, i = 2, 0
        rq = pe.lookup_flat("q", i, j)
        mode = 0.5 * (model.keys[j] + rq)
        at_mode = pa.pe_query_log_likelihood(mode, j, i, model, pe)
        for _ in range(10):
            other = mode + rng.normal(scale=0.5, size=2)
            assert pa.pe_query_log_likelihood(other, j, i, model, pe) < at_mode

    def test_matches_direct_gaussian(self, rng):
        model, queries, pe = pe_model(rng, (5, 1))
        got = pa.pe_query_log_likelihood(queries[1], 3, 1, model, pe)
        direct = float(orc._pe_query_loglike_direct(model, pe, queries[1], 1, 3))
        assert got == pytest.approx(direct, rel=1e-12)


class TestPePriorLogits:
    def test_all_zero_parameters_give_equal_logits(self):
        grid = (4, 1)
        pe = pa.RelativePE(
            grid=grid, variant="full",
            q_table=np.zeros((7, 1, 2)), k_table=np.zeros((7, 1, 2)),
        )
        model = pa.MixtureModel(
            keys=np.zeros((4, 2)), key_precisions=np.ones(4),
            value_means=np.zeros((4, 2)), value_precisions=np.zeros(4),
            prior=pa.PositionPrior(pe),
        )
        logits = [pa.pe_prior_logits(0, j, model, pe) for j in range(4)]
        np.testing.assert_allclose(logits, logits[0], atol=1e-15)

    def test_zero_beta_drops_value_term(self, rng):
        model, _, pe = pe_model(rng, (3, 1), beta=0.0)
        before = pa.pe_prior_logits(0, 2, model, pe)
        moved = model.replace(value_means=model.value_means + 5.0)
        assert pa.pe_prior_logits(0, 2, moved, pe) == pytest.approx(before)

    def test_matches_direct_formula(self, rng):
        model, _, pe = pe_model(rng, (2, 3), variant="factored")
        for i, j in [(0, 5), (3, 2), (4, 4)]:
            got = pa.pe_prior_logits(i, j, model, pe)
            direct = float(orc._pe_prior_logit_direct(model, pe, i, j))
            assert got == pytest.approx(direct, rel=1e-12)


class TestPeAttention:
    def test_single_unit_returns_its_value(self, rng):
        model, queries, pe = pe_model(rng, (1, 1))
        out = pe_attention(queries, model, pe)
        np.testing.assert_allclose(out, model.value_means, atol=1e-12)

    def test_matches_brute_force_1d(self, rng):
        model, queries, pe = pe_model(rng, (5, 1))
        np.testing.assert_allclose(
            pe_attention(queries, model, pe),
            orc.pe_attention_direct(queries, model, pe),
            atol=1e-9,
        )

    def test_matches_brute_force_2d_factored(self, rng):
        model, queries, pe = pe_model(rng, (4, 4), variant="factored")
        np.testing.assert_allclose(
            pe_attention(queries, model, pe),
            orc.pe_attention_direct(queries, model, pe),
            atol=1e-9,
        )

    def test_doubled_precision_still_matches_oracle(self, rng):
        model, queries, pe = pe_model(rng, (3, 3))
        doubled = model.replace(key_precisions=2 * model.key_precisions)
        np.testing.assert_allclose(
            pe_attention(queries, doubled, pe),
            orc.pe_attention_direct(queries, doubled, pe),
            atol=1e-9,
        )

    def test_general_precisions_need_opt_in(self, rng):
        model, queries, pe = pe_model(rng, (3, 1))
        uneven = model.replace(
            key_precisions=np.array([0.5, 0.7, 0.9])
        )
        with pytest.raises(NonUniformPrecision):
            pe_attention(queries, uneven, pe)
        out = pe_attention(queries, uneven, pe, assume_constrained=True)
        np.testing.assert_allclose(
            out, orc.pe_attention_direct(queries, uneven, pe), atol=1e-9
        )

    def test_factored_equals_summed_full_table(self, rng):
        grid = (6, 1)
        pef = pa.RelativePE.random(grid, 2, variant="factored", rng=5)
        pe_full = pa.RelativePE.full_from_factored(pef)
        n = 6
        base = pa.MixtureModel(
            keys=rng.uniform(-1, 1, size=(n, 2)),
            key_precisions=np.full(n, 0.8),
            value_means=rng.uniform(-1, 1, size=(n, 2)),
            value_precisions=np.full(n, 0.1),
            prior=pa.UniformPrior(),
        )
        q = rng.uniform(-1, 1, size=(n, 2))
        a = pe_attention(q, base.replace(prior=pa.PositionPrior(pef)), pef)
        b = pe_attention(q, base.replace(prior=pa.PositionPrior(pe_full)), pe_full)
        np.testing.assert_allclose(a, b, atol=1e-9)


class TestAxialAttention:
    def test_config_validation(self):
        with pytest.raises(ShapeMismatch):
            AxialConfig(4, 4, context=5, axis="height")
        with pytest.raises(ValueError):
            AxialConfig(4, 4, axis="diagonal")

    def test_single_row_height_pass_is_identity(self, rng):
        pe = pa.RelativePE.random((1, 5), 2, variant="factored", rng=3)
        feats = rng.normal(size=(1, 5, 2))
        vals = rng.normal(size=(1, 5, 1))
        cfg = AxialConfig(1, 5, context=1, axis="height")
        out = axial_attention(feats, vals, 0.8, 0.1, cfg, pe)
        np.testing.assert_allclose(out, vals, atol=1e-12)

    def test_full_context_equals_whole_slice_attention(self, rng):
        h, w = 6, 3
        pe = pa.RelativePE.random((h, w), 2, variant="factored", rng=4)
        feats = rng.normal(size=(h, w, 2))
        vals = rng.normal(size=(h, w, 1))
        cfg = AxialConfig(h, w, context=h, axis="height")
        got = axial_attention(feats, vals, 0.8, 0.1, cfg, pe)
        ref = orc.axial_attention_direct(feats, vals, 0.8, 0.1, h, "height", pe)
        np.testing.assert_allclose(got, ref, atol=1e-9)

    def test_matches_slice_brute_force(self, rng):
        h, w = 4, 4
        pe = pa.RelativePE.random((h, w), 2, variant="full", rng=6)
        feats = rng.normal(size=(h, w, 2))
        vals = rng.normal(size=(h, w, 2))
        for axis, ctx in (("height", 2), ("width", 3)):
            cfg = AxialConfig(h, w, context=ctx, axis=axis)
            got = axial_attention(feats, vals, 0.6, 0.1, cfg, pe)
            ref = orc.axial_attention_direct(feats, vals, 0.6, 0.1, ctx, axis, pe)
            np.testing.assert_allclose(got, ref, atol=1e-9)

    def test_translation_shifts_interior_outputs(self, rng):
        length, ctx = 12, 3
        pe = pa.RelativePE.random((length, 1), 2, variant="full", rng=8)
        feats = rng.normal(size=(length, 1, 2))
        vals = rng.normal(size=(length, 1, 1))
        cfg = AxialConfig(length, 1, context=ctx, axis="height")
        out = axial_attention(feats, vals, 0.8, 0.1, cfg, pe)
        shifted = axial_attention(
            np.roll(feats, 1, axis=0), np.roll(vals, 1, axis=0), 0.8, 0.1, cfg, pe
        )
        interior = slice(ctx - 1, length - ctx)
        np.testing.assert_allclose(out[interior], shifted[1:][interior],
                                   atol=1e-9)

    def test_transpose_equivariance_of_chained_pass(self, rng):
        h, w = 4, 3
        pe = pa.RelativePE.random((h, w), 2, variant="factored", rng=9)
        feats = rng.normal(size=(h, w, 2))
        vals = rng.normal(size=(h, w, 1))
        pe_t = pa.RelativePE(
            grid=(w, h), variant="factored",
            q_height=pe.q_width, q_width=pe.q_height,
            k_height=pe.k_width, k_width=pe.k_height,
        )
        direct = csa_pass(feats, vals, 0.8, 0.1, pe, context=3)
        swapped = csa_pass(
            np.swapaxes(feats, 0, 1), np.swapaxes(vals, 0, 1), 0.8, 0.1,
            pe_t, context=3, axes=("width", "height"),
        )
        np.testing.assert_allclose(direct, np.swapaxes(swapped, 0, 1),
                                   atol=1e-12)

    def test_shape_mismatch_rejected(self, rng):
        pe = pa.RelativePE.random((4, 4), 2, variant="factored", rng=1)
        with pytest.raises(ShapeMismatch):
            axial_attention(
                rng.normal(size=(4, 4, 2)), rng.normal(size=(4, 3, 1)),
                0.8, 0.1, AxialConfig(4, 4), pe,
            )

    def test_small_tables_raise_out_of_range(self, rng):
        pe = pa.RelativePE(
            grid=(6, 1), variant="full",
            q_table=np.zeros((3, 1, 2)), k_table=np.zeros((3, 1, 2)),
        )
        feats = rng.normal(size=(6, 1, 2))
        vals = rng.normal(size=(6, 1, 1))
        cfg = AxialConfig(6, 1, context=4, axis="height")
        with pytest.raises(OffsetOutOfRange):
            axial_attention(feats, vals, 0.8, 0.1, cfg, pe)
        # Tables covering exactly the window reach are fine.
        ok = pa.RelativePE(
            grid=(6, 1), variant="full",
            q_table=np.zeros((7, 1, 2)), k_table=np.zeros((7, 1, 2)),
        )
        axial_attention(feats, vals, 0.8, 0.1, cfg, ok)


class TestPeAttentionValidation:
    def test_query_count_must_match_units(self, rng):
        model, queries, pe = pe_model(rng, (3, 1))
        with pytest.raises(DimensionMismatch):
            pe_attention(queries[:2], model, pe)

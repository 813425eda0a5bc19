import numpy as np
import pytest

from motionlm.quantizers import (
    FsqLevels, fsq_quantize, fsq_dequantize,
    Codebook, vq_quantize, vq_ema_update,
    lfq_quantize, lfq_dequantize,
    RvqStack, rvq_quantize, rvq_dequantize,
    codebook_utilization, make_quantizer,
)
from motionlm.quantizers.rvq import rvq_ema_update
from motionlm.quantizers.wrappers import save_codebooks, load_codebooks

DEFAULT = FsqLevels()


class TestFsq:
    def test_default_codebook_size(self):
        assert DEFAULT.codebook_size == 4375

    def test_zero_vector_midpoints(self):
        codes, values = fsq_quantize(np.zeros((1, 5)), DEFAULT)
        # odd level counts include the 0 grid point
        assert np.allclose(values, 0.0)
        # per-channel indices [3,2,2,2,2] flatten to 2187
        assert codes[0] == 3 * 625 + 2 * 125 + 2 * 25 + 2 * 5 + 2 == 2187

    def test_code_zero_and_max(self):
        assert np.allclose(fsq_dequantize(np.array([0]), DEFAULT), -1.0)
        assert np.allclose(fsq_dequantize(np.array([4374]), DEFAULT), 1.0)

    def test_full_enumeration_roundtrip(self):
        codes = np.arange(DEFAULT.codebook_size)
        values = fsq_dequantize(codes, DEFAULT)
        assert np.unique(values, axis=0).shape[0] == 4375
        back, back_values = fsq_quantize(values, DEFAULT)
        assert np.array_equal(back, codes)
        assert np.array_equal(back_values, values)

    def test_fuzz_code_value_consistency(self):
        rng = np.random.default_rng(99)
        x = rng.normal(0, 2, size=(1000, 5))
        codes, values = fsq_quantize(x, DEFAULT)
        assert np.array_equal(fsq_dequantize(codes, DEFAULT), values)
        codes2, values2 = fsq_quantize(values, DEFAULT)
        assert np.array_equal(codes2, codes)
        assert np.array_equal(values2, values)

    def test_snap_within_half_spacing(self):
        rng = np.random.default_rng(7)
        x = rng.normal(0, 3, size=(500, 5))
        from motionlm.quantizers.fsq import fsq_bound
        _, values = fsq_quantize(x, DEFAULT)
        spacing = 2.0 / (np.array(DEFAULT.levels) - 1.0)
        assert (np.abs(fsq_bound(x) - values) <= spacing / 2 + 1e-12).all()

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            fsq_quantize(np.zeros((3, 4)), DEFAULT)

    def test_code_out_of_range(self):
        with pytest.raises(ValueError):
            fsq_dequantize(np.array([4375]), DEFAULT)

    def test_bad_levels(self):
        with pytest.raises(ValueError):
            FsqLevels((7, 1))
        with pytest.raises(ValueError):
            FsqLevels((16, 16))


class TestVq:
    def test_exact_entry_hit(self):
        rng = np.random.default_rng(0)
        cb = Codebook.random_init(8, 3, rng)
        codes, values = vq_quantize(cb.entries[5:6], cb)
        assert codes[0] == 5
        assert np.allclose(values[0], cb.entries[5])

    def test_tie_breaks_to_lowest_index(self):
        entries = np.zeros((4, 2))
        entries[1] = (1.0, 0.0)
        entries[3] = (-1.0, 0.0)
        cb = Codebook(entries=entries.copy())
        cb.entries[0] = (5.0, 5.0)
        cb.entries[2] = (5.0, -5.0)
        codes, _ = vq_quantize(np.zeros((1, 2)), cb)
        assert codes[0] == 1

    def test_matches_bruteforce_argmin(self):
        rng = np.random.default_rng(3)
        cb = Codebook.random_init(32, 4, rng)
        x = rng.normal(0, 1, size=(1000, 4))
        codes, _ = vq_quantize(x, cb)
        for i in range(0, 1000, 37):
            dists = [np.sum((x[i] - e) ** 2) for e in cb.entries]
            assert codes[i] == int(np.argmin(dists))

    def test_ema_converges_to_repeated_latent(self):
        rng = np.random.default_rng(4)
        cb = Codebook.random_init(2, 3, rng)
        target = np.array([[0.5, -1.0, 2.0]])
        prev_dist = np.inf
        for _ in range(50):
            codes = np.array([0])
            cb = vq_ema_update(cb, target, codes, decay=0.9)
            dist = np.linalg.norm(cb.entries[0] - target[0])
            assert dist <= prev_dist + 1e-12
            prev_dist = dist
        assert prev_dist < 1e-3
        # closed-form EMA recursion: entry_k = (decay^k e0 + s_k x)/(decay^k + s_k)
        cb2 = Codebook(entries=np.array([[1.0, 0.0, 0.0], [9.0, 9.0, 9.0]]))
        c, s = 1.0, np.array([1.0, 0.0, 0.0])
        for _ in range(5):
            cb2 = vq_ema_update(cb2, target, np.array([0]), decay=0.9)
            c = 0.9 * c + 1.0
            s = 0.9 * s + target[0]
        assert np.allclose(cb2.entries[0], s / c)

    def test_empty_batch_scales_counts(self):
        rng = np.random.default_rng(5)
        cb = Codebook.random_init(4, 2, rng)
        before = cb.ema_counts.copy()
        after = vq_ema_update(cb, np.zeros((0, 2)), np.zeros(0, dtype=int), decay=0.99)
        assert np.allclose(after.ema_counts, 0.99 * before)

    def test_reseed_after_zero_usage_streak(self):
        rng = np.random.default_rng(6)
        cb = Codebook(entries=np.array([[0.0, 0.0], [100.0, 100.0]]))
        batch = np.array([[0.1, 0.0], [0.0, 0.1]])
        for step in range(10):
            codes, _ = vq_quantize(batch, cb)
            assert (codes == 0).all()
            cb = vq_ema_update(cb, batch, codes, decay=0.99, reseed_after=10,
                               rng=np.random.default_rng(1))
        # entry 1 was unused for 10 consecutive updates -> reseeded near batch
        assert np.linalg.norm(cb.entries[1]) < 1.0

    def test_decay_near_one_no_assignments_is_identity(self):
        rng = np.random.default_rng(8)
        cb = Codebook.random_init(4, 2, rng)
        after = vq_ema_update(cb, np.zeros((0, 2)), np.zeros(0, dtype=int),
                              decay=1 - 1e-15)
        assert np.allclose(after.entries, cb.entries, atol=1e-12)

    def test_empty_codebook_rejected(self):
        with pytest.raises(ValueError):
            Codebook(entries=np.zeros((0, 3)))


class TestLfq:
    def test_sign_and_binary_code(self):
        codes, values = lfq_quantize(np.array([[-0.3, 0.7]]))
        assert np.array_equal(values[0], [-1.0, 1.0])
        assert codes[0] == 1

    def test_zero_maps_to_plus_one(self):
        codes, values = lfq_quantize(np.zeros((1, 3)))
        assert (values == 1.0).all()
        assert codes[0] == 2 ** 3 - 1

    def test_code_space_enumeration_d4(self):
        rng = np.random.default_rng(11)
        x = rng.normal(0, 1, size=(4000, 4))
        codes, values = lfq_quantize(x)
        assert set(np.unique(codes)) == set(range(16))
        assert np.isin(values, (-1.0, 1.0)).all()
        assert np.array_equal(lfq_dequantize(codes, 4), values)


class TestRvq:
    def test_depth_one_equals_vq(self):
        rng = np.random.default_rng(12)
        cb = Codebook.random_init(16, 3, rng)
        stack = RvqStack(stages=[cb.copy()])
        x = rng.normal(0, 1, size=(64, 3))
        rcodes, rvalues = rvq_quantize(x, stack)
        vcodes, vvalues = vq_quantize(x, cb)
        assert np.array_equal(rcodes[:, 0], vcodes)
        assert np.allclose(rvalues, vvalues)

    def test_residual_norm_nonincreasing(self):
        rng = np.random.default_rng(13)
        stack = RvqStack.create(depth=4, size=16, dim=3, rng=rng)
        x = rng.normal(0, 1, size=(1000, 3))
        residual = x.copy()
        prev = np.linalg.norm(residual, axis=1)
        for cb in stack.stages:
            _, v = vq_quantize(residual, cb)
            residual = residual - v
            cur = np.linalg.norm(residual, axis=1)
            assert (cur <= prev + 1e-12).all()
            prev = cur

    def test_exact_stage0_hit_stays_exact(self):
        rng = np.random.default_rng(14)
        stack = RvqStack.create(depth=3, size=8, dim=2, rng=rng)
        x = stack.stages[0].entries[3:4].copy()
        codes, values = rvq_quantize(x, stack)
        assert codes[0, 0] == 3
        # later stages pick their nearest-to-zero entry (the pinned rest code)
        assert (codes[0, 1:] == 0).all()
        assert np.allclose(values, x)

    def test_dequantize_roundtrip(self):
        rng = np.random.default_rng(15)
        stack = RvqStack.create(depth=3, size=16, dim=3, rng=rng)
        x = rng.normal(0, 1, size=(50, 3))
        codes, values = rvq_quantize(x, stack)
        assert np.allclose(rvq_dequantize(codes, stack), values)

    def test_ema_update_keeps_rest_code(self):
        rng = np.random.default_rng(16)
        stack = RvqStack.create(depth=2, size=8, dim=2, rng=rng)
        x = rng.normal(0, 1, size=(32, 2))
        for _ in range(12):
            stack = rvq_ema_update(stack, x, decay=0.9, rng=rng)
        for cb in stack.stages:
            assert np.allclose(cb.entries[0], 0.0)

    def test_mismatched_dims_rejected(self):
        rng = np.random.default_rng(17)
        with pytest.raises(ValueError):
            RvqStack(stages=[Codebook.random_init(4, 2, rng),
                             Codebook.random_init(4, 3, rng)])


class TestUtilization:
    def test_single_code(self):
        assert codebook_utilization(np.zeros(10, dtype=int), 4375) == pytest.approx(1 / 4375)

    def test_full_range(self):
        assert codebook_utilization(np.arange(512), 512) == 1.0

    def test_uniform_draws_near_full(self):
        rng = np.random.default_rng(18)
        codes = rng.integers(0, 512, size=10_000)
        assert codebook_utilization(codes, 512) >= 0.99


class TestWrappers:
    @pytest.mark.parametrize("kind,kw", [
        ("fsq", {}),
        ("vq", {"dim": 5, "size": 64}),
        ("lfq", {"dim": 5}),
        ("rvq", {"dim": 5, "size": 16, "depth": 3}),
    ])
    def test_quantize_dequantize_consistency(self, kind, kw):
        q = make_quantizer(kind, seed=1, **kw)
        rng = np.random.default_rng(19)
        x = rng.normal(0, 1, size=(40, q.dim))
        codes, values = q.quantize(x)
        assert np.allclose(q.dequantize(codes), values)

    def test_codebook_file_roundtrip(self, tmp_path):
        rng = np.random.default_rng(20)
        books = [rng.normal(0, 1, size=(8, 3)).astype(np.float32).astype(np.float64),
                 rng.normal(0, 1, size=(4, 3)).astype(np.float32).astype(np.float64)]
        p = tmp_path / "cb.mqcb"
        save_codebooks(books, p)
        back = load_codebooks(p)
        assert len(back) == 2
        for a, b in zip(books, back):
            assert np.array_equal(a, b)

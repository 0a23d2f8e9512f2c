import numpy as np
import pytest

from blockperm import kernels
from blockperm.cipher import (
    BlockCipher,
    decrypt,
    encrypt,
    partition,
    permute_pixels,
    reassemble,
    scramble_blocks,
)
from blockperm.errors import KeyMismatchError, ValidationError
from blockperm.keys import EncryptionKey, derive_key
from blockperm.permutation import Permutation, identity


def toy_key(seed, n_bs, n_ps):
    """h=w=4, p=2, c=3 -> N=4 blocks, L=12 values per block."""
    return derive_key(seed, p=2, n_bs=n_bs, n_ps=n_ps, h=4, w=4, c=3)


def histogram(img):
    return np.bincount(img.reshape(-1), minlength=256)


class TestPartition:
    def test_vit_geometry(self, make_image):
        img = make_image(np.random.default_rng(0), 224, 224)
        grid = partition(img, 16)
        assert grid.blocks.shape == (196, 768)

    def test_single_block_and_reassembly(self, make_image):
        img = make_image(np.random.default_rng(1), 16, 16)
        grid = partition(img, 16)
        assert grid.blocks.shape == (1, 768)
        assert np.array_equal(reassemble(grid), img)

    def test_reassemble_inverts_partition(self, make_image):
        rng = np.random.default_rng(2)
        for h, w, p in [(32, 32, 16), (224, 224, 16), (12, 20, 4), (8, 8, 2)]:
            img = make_image(rng, h, w)
            assert np.array_equal(reassemble(partition(img, p)), img)

    def test_block_order_is_row_major(self):
        # Injective ramp; block 1 (second of the top row) must hold
        # columns 16..31 of rows 0..15.
        i, j = np.meshgrid(np.arange(32), np.arange(32), indexing="ij")
        ramp = ((i * 32 + j)[:, :, None] * 3 + np.arange(3)).astype(np.int64)
        grid = partition(ramp, 16)
        assert grid.blocks.shape == (4, 768)
        p = 16
        for b, (gi, gj) in enumerate([(0, 0), (0, 1), (1, 0), (1, 1)]):
            slot = 0
            for ch in range(3):
                for r in range(p):
                    for col in range(p):
                        expected = ramp[gi * p + r, gj * p + col, ch]
                        assert grid.blocks[b, slot] == expected
                        slot += 1

    def test_vectorization_is_channel_planar(self):
        # One 2x2x3 block: all first-channel values row-major, then the
        # next channel, then the last.
        img = np.arange(12, dtype=np.uint8).reshape(2, 2, 3)
        grid = partition(img, 2)
        assert grid.blocks[0].tolist() == [0, 3, 6, 9, 1, 4, 7, 10, 2, 5, 8, 11]

    def test_divisibility_enforced(self, make_image):
        img = make_image(np.random.default_rng(3), 30, 32)
        with pytest.raises(ValidationError):
            partition(img, 16)


class TestScrambleBlocks:
    def test_identity_leaves_grid_unchanged(self, make_image):
        grid = partition(make_image(np.random.default_rng(4), 32, 32), 16)
        out = scramble_blocks(grid, identity(4))
        assert np.array_equal(out.blocks, grid.blocks)

    def test_worked_reordering(self, make_image):
        grid = partition(make_image(np.random.default_rng(5), 32, 32), 16)
        perm = Permutation(np.array([2, 0, 3, 1]))
        out = scramble_blocks(grid, perm)
        for dst in range(4):
            assert np.array_equal(out.blocks[dst], grid.blocks[perm.map[dst]])

    def test_block_multiset_preserved(self, make_image):
        rng = np.random.default_rng(6)
        grid = partition(make_image(rng, 32, 32), 8)
        perm = Permutation(rng.permutation(16))
        out = scramble_blocks(grid, perm)
        original = {bytes(b) for b in grid.blocks}
        assert {bytes(b) for b in out.blocks} == original

    def test_dimension_mismatch(self, make_image):
        grid = partition(make_image(np.random.default_rng(7), 32, 32), 16)
        with pytest.raises(ValidationError):
            scramble_blocks(grid, identity(5))


class TestPermutePixels:
    def test_identity_leaves_grid_unchanged(self, make_image):
        grid = partition(make_image(np.random.default_rng(8), 32, 32), 16)
        out = permute_pixels(grid, identity(768))
        assert np.array_equal(out.blocks, grid.blocks)

    def test_matches_dense_product(self, make_image):
        rng = np.random.default_rng(9)
        grid = partition(make_image(rng, 4, 4), 2)  # L = 12
        perm = Permutation(rng.permutation(12))
        dense = np.zeros((12, 12), dtype=np.int64)
        for j in range(12):
            dense[perm.map[j], j] = 1
        out = permute_pixels(grid, perm)
        for i in range(grid.n_blocks):
            assert np.array_equal(
                out.blocks[i], grid.blocks[i].astype(np.int64) @ dense
            )

    def test_same_permutation_for_every_block(self, make_image):
        rng = np.random.default_rng(10)
        grid = partition(make_image(rng, 32, 32), 16)
        perm = Permutation(rng.permutation(768))
        out = permute_pixels(grid, perm)
        for i in range(grid.n_blocks):
            assert np.array_equal(out.blocks[i], grid.blocks[i][perm.map])
            assert np.array_equal(
                np.sort(out.blocks[i]), np.sort(grid.blocks[i])
            )

    def test_dimension_mismatch(self, make_image):
        grid = partition(make_image(np.random.default_rng(11), 32, 32), 16)
        with pytest.raises(ValidationError):
            permute_pixels(grid, identity(767))


def dense_pipeline_oracle(img, cipher):
    """Explicit matrix-form computation of the whole pipeline.

    Independent of the production path: index-loop partition and
    reassembly, dense 0/1 matrices built by loop, one row-vector product
    per stage.
    """
    key = cipher.key
    p, c, gh, gw = key.p, key.c, key.grid_h, key.grid_w
    n, length = key.n_blocks, key.block_len

    blocks = np.zeros((n, length), dtype=np.int64)
    for gi in range(gh):
        for gj in range(gw):
            slot = 0
            for ch in range(c):
                for r in range(p):
                    for col in range(p):
                        blocks[gi * gw + gj, slot] = img[gi * p + r, gj * p + col, ch]
                        slot += 1

    def dense(perm):
        mat = np.zeros((perm.length, perm.length), dtype=np.int64)
        for j in range(perm.length):
            mat[perm.map[j], j] = 1
        return mat

    s_hat = np.arange(n) @ dense(cipher.e_bs)
    shuffled = blocks[s_hat]
    encrypted = shuffled @ dense(cipher.e_ps)

    out = np.zeros((gh * p, gw * p, c), dtype=np.uint8)
    for gi in range(gh):
        for gj in range(gw):
            slot = 0
            for ch in range(c):
                for r in range(p):
                    for col in range(p):
                        out[gi * p + r, gj * p + col, ch] = encrypted[
                            gi * gw + gj, slot
                        ]
                        slot += 1
    return out


class TestEncryptDecrypt:
    def test_fully_restricted_key_is_identity(self, make_image):
        img = make_image(np.random.default_rng(12), 32, 32)
        key = derive_key(0, p=16, n_bs=4, n_ps=768, h=32, w=32, c=3)
        assert np.array_equal(encrypt(img, key).pixels, img)

    def test_unrestricted_key_changes_image(self, make_image):
        img = make_image(np.random.default_rng(13), 32, 32)
        key = derive_key(0, p=16, n_bs=0, n_ps=0, h=32, w=32, c=3)
        enc = encrypt(img, key)
        assert not np.array_equal(enc.pixels, img)
        assert np.array_equal(decrypt(enc, key), img)

    def test_provenance_populated(self, make_image):
        from blockperm.keys import fingerprint

        img = make_image(np.random.default_rng(14), 32, 32)
        key = derive_key(1, p=8, n_bs=7, n_ps=100, h=32, w=32, c=3)
        enc = encrypt(img, key)
        assert enc.fingerprint == fingerprint(key)
        assert (enc.n_bs, enc.n_ps) == (7, 100)

    def test_round_trip_parameter_corners(self, make_image):
        rng = np.random.default_rng(15)
        # 32x32, p=8: N=16, L=192; corners {0, 1, mid, max-1, max}^2.
        for n_bs in (0, 1, 8, 15, 16):
            for n_ps in (0, 1, 96, 191, 192):
                key = derive_key(n_bs * 1000 + n_ps, p=8, n_bs=n_bs, n_ps=n_ps,
                                 h=32, w=32, c=3)
                img = make_image(rng, 32, 32)
                assert np.array_equal(decrypt(encrypt(img, key), key), img)

    def test_histogram_invariant(self, make_image):
        rng = np.random.default_rng(16)
        img = make_image(rng, 64, 32)
        key = derive_key(3, p=16, n_bs=0, n_ps=0, h=64, w=32, c=3)
        assert np.array_equal(histogram(encrypt(img, key).pixels), histogram(img))

    def test_per_block_multiset_invariant_when_blocks_fixed(self, make_image):
        img = make_image(np.random.default_rng(17), 32, 32)
        key = derive_key(4, p=16, n_bs=4, n_ps=0, h=32, w=32, c=3)
        enc = encrypt(img, key)
        before = partition(img, 16)
        after = partition(enc.pixels, 16)
        for i in range(4):
            assert np.array_equal(np.sort(after.blocks[i]), np.sort(before.blocks[i]))

    def test_block_multiset_invariant_when_pixels_fixed(self, make_image):
        img = make_image(np.random.default_rng(18), 32, 32)
        key = derive_key(5, p=16, n_bs=0, n_ps=768, h=32, w=32, c=3)
        enc = encrypt(img, key)
        before = {bytes(b) for b in partition(img, 16).blocks}
        after = {bytes(b) for b in partition(enc.pixels, 16).blocks}
        assert before == after

    def test_matches_dense_pipeline_oracle(self, make_image):
        rng = np.random.default_rng(19)
        for trial in range(50):
            n_bs = int(rng.integers(0, 5))
            n_ps = int(rng.integers(0, 13))
            key = derive_key(trial, p=2, n_bs=n_bs, n_ps=n_ps, h=4, w=4, c=3)
            cipher = BlockCipher(key)
            img = make_image(rng, 4, 4)
            assert np.array_equal(
                cipher.encrypt(img).pixels, dense_pipeline_oracle(img, cipher)
            )

    def test_fused_index_matches_staged_pipeline(self, make_image):
        rng = np.random.default_rng(20)
        key = derive_key(6, p=16, n_bs=5, n_ps=300, h=64, w=48, c=3)
        cipher = BlockCipher(key)
        img = make_image(rng, 64, 48)
        staged = reassemble(
            permute_pixels(
                scramble_blocks(partition(img, 16), cipher.e_bs), cipher.e_ps
            )
        )
        assert np.array_equal(cipher.encrypt_pixels(img), staged)

    def test_all_backends_agree(self, make_image, monkeypatch):
        rng = np.random.default_rng(21)
        key = derive_key(7, p=16, n_bs=0, n_ps=0, h=64, w=64, c=3)
        img = make_image(rng, 64, 64)
        results = {}
        for name, impl in kernels.backend_impls().items():
            monkeypatch.setattr(kernels, "gather_flat", impl)
            cipher = BlockCipher(key)
            enc = cipher.encrypt_pixels(img)
            assert np.array_equal(cipher.decrypt_pixels(enc), img)
            results[name] = enc
        baseline = next(iter(results.values()))
        for enc in results.values():
            assert np.array_equal(enc, baseline)

    def test_deterministic_across_cipher_instances(self, make_image):
        img = make_image(np.random.default_rng(22), 32, 32)
        key = derive_key(8, p=8, n_bs=3, n_ps=17, h=32, w=32, c=3)
        assert np.array_equal(
            BlockCipher(key).encrypt_pixels(img), BlockCipher(key).encrypt_pixels(img)
        )

    def test_wrong_key_rejected_by_fingerprint(self, make_image):
        img = make_image(np.random.default_rng(23), 32, 32)
        key_a = derive_key("a", p=16, n_bs=0, n_ps=0, h=32, w=32, c=3)
        key_b = derive_key("b", p=16, n_bs=0, n_ps=0, h=32, w=32, c=3)
        enc = encrypt(img, key_a)
        with pytest.raises(KeyMismatchError):
            decrypt(enc, key_b)

    def test_different_key_would_decrypt_wrong(self, make_image):
        # Bypassing the fingerprint check, a wrong key yields a wrong image.
        img = make_image(np.random.default_rng(24), 32, 32)
        key_a = derive_key("a", p=16, n_bs=0, n_ps=0, h=32, w=32, c=3)
        key_b = derive_key("b", p=16, n_bs=0, n_ps=0, h=32, w=32, c=3)
        enc = encrypt(img, key_a)
        assert not np.array_equal(BlockCipher(key_b).decrypt_pixels(enc.pixels), img)

    def test_geometry_mismatch_rejected(self, make_image):
        img = make_image(np.random.default_rng(25), 32, 32)
        key = derive_key(9, p=16, n_bs=0, n_ps=0, h=64, w=64, c=3)
        with pytest.raises(ValidationError):
            encrypt(img, key)

    def test_non_uint8_rejected(self):
        key = derive_key(10, p=16, n_bs=0, n_ps=0, h=32, w=32, c=3)
        with pytest.raises(ValidationError):
            encrypt(np.zeros((32, 32, 3), dtype=np.float32), key)

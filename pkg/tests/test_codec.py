"""Embedding pipeline: payload packing, structural encode, keyed mixing."""

import numpy as np
import pytest

from structmark import (Embedder, Nonce, Payload, PayloadError, SecretKey,
                        TemplateParams, build_template, canonical_latent,
                        embed, embed_latent, randomize_placement, restore_placement, encode_groups)


class TestPayload:
    def test_bits_validated(self):
        with pytest.raises(PayloadError):
            Payload(np.array([0, 1, 2], dtype=np.uint8))
        with pytest.raises(PayloadError):
            Payload(np.array([], dtype=np.uint8))

    def test_chunks_are_big_endian(self):
        m = Payload(np.array([1, 0, 1, 1, 0, 1, 0, 0], dtype=np.uint8))
        assert m.chunks(4).tolist() == [0b1011, 0b0100]

    def test_chunk_length_must_divide(self):
        m = Payload(np.ones(8, dtype=np.uint8))
        with pytest.raises(PayloadError):
            m.chunks(3)

    def test_from_chunks_round_trip(self, rng):
        m = Payload.random(64, rng)
        assert Payload.from_chunks(m.chunks(4), 4) == m

    def test_hex_round_trip(self, rng):
        m = Payload.random(256, rng)
        assert Payload.from_hex(m.to_hex(), 256) == m
        assert len(m.to_hex()) == 64

    def test_byte_packing_is_msb_first(self):
        m = Payload(np.array([1, 0, 1, 1, 0, 0, 0, 0], dtype=np.uint8))
        assert m.to_bytes() == b"\xb0"

    def test_from_hex_length_check(self):
        with pytest.raises(PayloadError):
            Payload.from_hex("ab", 256)
        with pytest.raises(PayloadError):
            Payload.from_hex("zz", 8)

    def test_padding_bits_must_be_zero(self):
        with pytest.raises(PayloadError):
            Payload.from_bytes(b"\xa1", 4)
        assert len(Payload.from_bytes(b"\xa0", 4)) == 4

    def test_payload_file_round_trip(self, rng, tmp_path):
        from structmark.codec import read_payload_file, write_payload_file
        m = Payload.random(256, rng)
        path = str(tmp_path / "payload.hex")
        write_payload_file(path, m)
        assert read_payload_file(path, 256) == m
        with open(path) as fh:
            assert len(fh.read().strip()) == 64  # ceil(256/8) bytes as hex


def reference_encode_groups(z, tpl, cb, m):
    """Slot-by-slot restatement of the embedding rule, kept deliberately
    dumb: destination slot j of group g receives the block at slot sigma(j)."""
    k = cb.bits_per_group
    out = list(z)
    for g in range(tpl.params.num_groups):
        bits = m.bits[g * k:(g + 1) * k]
        sigma = cb.encode(int("".join(map(str, bits)), 2))
        for j in range(tpl.params.group_size):
            dst = tpl.blocks[j, g]
            src = tpl.blocks[sigma[j] - 1, g]
            for a, b in zip(dst, src):
                out[a] = z[b]
    return np.array(out)


class TestStructuralEncode:
    Z8 = np.array([0.1, -0.2, 0.3, -0.4, 0.5, -0.6, 0.7, -0.8])

    def _tpl(self, key, tiny_params):
        return build_template(key, self.Z8, tiny_params, _identity_bin_shuffle=True)

    def test_hand_example_fixed_codeword(self, key, tiny_params, cb):
        # both chunks 0b0100 -> order (2,1,4,3): slots swap in pairs
        tpl = self._tpl(key, tiny_params)
        m = Payload(np.array([0, 1, 0, 0, 0, 1, 0, 0], dtype=np.uint8))
        got = encode_groups(self.Z8, tpl, cb, m)
        want = np.array([0.3, -0.4, 0.1, -0.2, 0.7, -0.8, 0.5, -0.6])
        assert np.array_equal(got, want)

    def test_matches_slotwise_reference(self, key, tiny_params, cb, rng):
        tpl = self._tpl(key, tiny_params)
        for _ in range(20):
            m = Payload.random(8, rng)
            got = encode_groups(self.Z8, tpl, cb, m)
            assert np.array_equal(got, reference_encode_groups(self.Z8, tpl, cb, m))

    def test_matches_reference_on_real_template(self, key, small_params, cb, rng):
        z = rng.standard_normal(small_params.size)
        tpl = build_template(key, z, small_params)
        m = Payload.random(small_params.payload_bits(4), rng)
        assert np.array_equal(
            encode_groups(z, tpl, cb, m), reference_encode_groups(z, tpl, cb, m)
        )

    def test_value_multiset_preserved_bitwise(self, key, small_params, cb, rng):
        z = rng.standard_normal(small_params.size)
        tpl = build_template(key, z, small_params)
        m = Payload.random(small_params.payload_bits(4), rng)
        out = encode_groups(z, tpl, cb, m)
        assert np.array_equal(np.sort(out), np.sort(z))

    def test_payload_length_checked(self, key, small_params, cb, rng):
        z = rng.standard_normal(small_params.size)
        tpl = build_template(key, z, small_params)
        with pytest.raises(PayloadError):
            encode_groups(z, tpl, cb, Payload(np.ones(31, dtype=np.uint8)))

    def test_group_order_does_not_matter(self, key, small_params, cb, rng):
        # groups are disjoint, so slot assignments commute
        z = rng.standard_normal(small_params.size)
        tpl = build_template(key, z, small_params)
        m = Payload.random(small_params.payload_bits(4), rng)
        sig = [cb.encode(int(v)) for v in m.chunks(4)]
        for order in (range(tpl.params.num_groups),
                      reversed(range(tpl.params.num_groups))):
            out = z.copy()
            for g in order:
                for j in range(tpl.params.group_size):
                    out[tpl.blocks[j, g]] = z[tpl.blocks[sig[g][j] - 1, g]]
            assert np.array_equal(out, encode_groups(z, tpl, cb, m))

    def test_chunk_change_moves_at_least_two_slots(self, key, small_params, cb, rng):
        z = rng.standard_normal(small_params.size)
        tpl = build_template(key, z, small_params)
        m = Payload.random(small_params.payload_bits(4), rng)
        base = encode_groups(z, tpl, cb, m)
        for g in range(small_params.num_groups):
            chunks = m.chunks(4).copy()
            chunks[g] = (chunks[g] + 7) % 16
            other = encode_groups(z, tpl, cb, Payload.from_chunks(chunks, 4))
            changed_slots = sum(
                not np.array_equal(base[tpl.blocks[j, g]], other[tpl.blocks[j, g]])
                for j in range(small_params.group_size)
            )
            assert changed_slots >= 2
            # and nothing outside group g moved
            outside = np.ones(small_params.size, dtype=bool)
            outside[tpl.group(g).ravel()] = False
            assert np.array_equal(base[outside], other[outside])


class TestPlacementRandomization:
    def test_single_block_is_identity(self, key, nonce):
        p = TemplateParams(size=64, num_bins=1, block_size=64)
        z = canonical_latent(key, p)
        tpl = build_template(key, z, p)
        assert np.array_equal(randomize_placement(z, key, nonce, tpl).values, z)

    def test_exact_inverse_both_ways(self, small_params, cb, rng):
        for trial in range(100):
            key = SecretKey(rng.bytes(32))
            nonce = Nonce(rng.bytes(16))
            z = rng.standard_normal(small_params.size)
            tpl = build_template(key, z, small_params)
            x = rng.standard_normal(small_params.size)
            assert np.array_equal(
                restore_placement(randomize_placement(x, key, nonce, tpl).values, key, nonce, tpl), x
            )
            assert np.array_equal(
                randomize_placement(restore_placement(x, key, nonce, tpl), key, nonce, tpl).values, x
            )

    def test_value_multiset_preserved(self, key, nonce, small_params, rng):
        z = rng.standard_normal(small_params.size)
        tpl = build_template(key, z, small_params)
        out = randomize_placement(z, key, nonce, tpl).values
        assert np.array_equal(np.sort(out), np.sort(z))

    def test_fresh_nonces_move_blocks(self, key, small_params, rng):
        z = rng.standard_normal(small_params.size)
        tpl = build_template(key, z, small_params)
        for _ in range(100):
            n1, n2 = Nonce(rng.bytes(16)), Nonce(rng.bytes(16))
            a = randomize_placement(z, key, n1, tpl).values
            b = randomize_placement(z, key, n2, tpl).values
            assert not np.array_equal(a, b)

    def test_wrong_nonce_undo_misaligns(self, key, small_params, rng):
        z = rng.standard_normal(small_params.size)
        tpl = build_template(key, z, small_params)
        for _ in range(20):
            n1, n2 = Nonce(rng.bytes(16)), Nonce(rng.bytes(16))
            marked = randomize_placement(z, key, n1, tpl).values
            assert not np.array_equal(restore_placement(marked, key, n2, tpl), z)

    def test_undo_is_total_on_unmarked_data(self, key, nonce, small_params, rng):
        x = rng.standard_normal(small_params.size)
        tpl = build_template(key, rng.standard_normal(small_params.size),
                             small_params)
        out = restore_placement(x, key, nonce, tpl)
        assert np.array_equal(np.sort(out), np.sort(x))

    def test_carries_nonce_and_params(self, key, nonce, small_params, rng):
        z = rng.standard_normal(small_params.size)
        tpl = build_template(key, z, small_params)
        wl = randomize_placement(z, key, nonce, tpl)
        assert wl.nonce == nonce
        assert wl.params == small_params


class TestEmbed:
    def test_default_params_take_256_bits(self, key, nonce, cb, rng):
        m = Payload.random(256, rng)
        wl = embed(key, nonce, m, TemplateParams(), cb)
        assert wl.values.shape == (16384,)

    def test_wrong_payload_length_rejected(self, key, nonce, cb, rng):
        with pytest.raises(PayloadError):
            embed(key, nonce, Payload.random(255, rng), TemplateParams(), cb)

    def test_value_preservation_end_to_end(self, key, nonce, cb, rng):
        m = Payload.random(256, rng)
        wl = embed(key, nonce, m, TemplateParams(), cb)
        z = canonical_latent(key, TemplateParams())
        assert np.array_equal(np.sort(wl.values), np.sort(z))

    def test_moments_preserved(self, key, nonce, cb, rng):
        # pure permutation of a D=16384 standard-normal sample
        wl = embed(key, nonce, Payload.random(256, rng), TemplateParams(), cb)
        assert abs(wl.values.mean()) < 4 / np.sqrt(16384)
        assert abs(wl.values.var() - 1.0) < 0.05

    def test_embedder_cache_matches_one_shot(self, key, cb, small_params, rng):
        embedder = Embedder(key, small_params, cb)
        for _ in range(5):
            nonce = Nonce(rng.bytes(16))
            m = Payload.random(small_params.payload_bits(4), rng)
            a = embedder.embed(nonce, m)
            b = embed(key, nonce, m, small_params, cb)
            assert np.array_equal(a.values, b.values)

    def test_embed_latent_requires_matching_template_key(
        self, key, nonce, cb, small_params, rng
    ):
        # expert path: caller supplies the canonical latent themselves
        z = canonical_latent(key, small_params)
        m = Payload.random(small_params.payload_bits(4), rng)
        a = embed_latent(z, key, nonce, m, small_params, cb)
        b = embed(key, nonce, m, small_params, cb)
        assert np.array_equal(a.values, b.values)

    def test_degenerate_payloads_are_legal(self, key, nonce, cb, small_params):
        nbits = small_params.payload_bits(4)
        for bits in (np.zeros(nbits, dtype=np.uint8), np.ones(nbits, dtype=np.uint8)):
            wl = embed(key, nonce, Payload(bits), small_params, cb)
            assert wl.values.shape == (small_params.size,)

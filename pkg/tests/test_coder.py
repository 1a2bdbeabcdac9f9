"""Bitstream, Elias delta, range coder, and container round-trip tests."""

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patternzip.coder import (
    BitReader,
    BitStream,
    CoderError,
    Container,
    RangeDecoder,
    RangeEncoder,
    arith_decode,
    arith_encode,
    compress,
    decompress,
    elias_delta_decode,
    elias_delta_encode,
    elias_delta_length,
    eps_to_fixed,
)
from patternzip.models import (
    assign_log_prob,
    gkt_model,
    pattern_known_k_model,
    pattern_mixture_model,
    pattern_unknown_k_model,
)
from patternzip.patterns import extract_pattern


def bitstr(bs: BitStream) -> str:
    raw = bs.to_bytes()
    return "".join(
        str((raw[i >> 3] >> (7 - (i & 7))) & 1) for i in range(bs.bit_length)
    )


patterns_st = st.lists(
    st.integers(min_value=0, max_value=40), min_size=1, max_size=60
).map(extract_pattern)


# --- bitstream ----------------------------------------------------------------


def test_bitstream_append_and_read_back():
    bs = BitStream()
    chunks = [(0b101, 3), (0xFF, 8), (0, 5), (0x1234, 13), (1, 1)]
    for value, nbits in chunks:
        bs.append_bits(value, nbits)
    assert bs.bit_length == sum(n for _, n in chunks)
    rd = BitReader(bs.to_bytes(), bs.bit_length)
    for value, nbits in chunks:
        assert rd.read_bits(nbits) == value
    with pytest.raises(CoderError, match="unexpected end of stream"):
        rd.read_bits(1)


@given(st.lists(st.integers(min_value=0, max_value=2**40 - 1), max_size=30))
def test_bitstream_round_trip_property(values):
    bs = BitStream()
    widths = [max(1, v.bit_length()) for v in values]
    for v, w in zip(values, widths):
        bs.append_bits(v, w)
    rd = BitReader(bs.to_bytes(), bs.bit_length)
    assert [rd.read_bits(w) for w in widths] == values


def test_bitstream_rstrip_zeros():
    bs = BitStream()
    bs.append_bits(0b1011000000, 10)
    bs.rstrip_zeros()
    assert bs.bit_length == 4
    assert bitstr(bs) == "1011"
    empty = BitStream()
    empty.append_bits(0, 17)
    empty.rstrip_zeros()
    assert empty.bit_length == 0
    assert empty.to_bytes() == b""


def test_bitreader_padded_slack():
    rd = BitReader(b"\xA5")
    assert rd.read_bits_padded(8) == 0xA5
    assert rd.read_bits_padded(32) == 0
    assert rd.read_bits_padded(32) == 0
    with pytest.raises(CoderError, match="unexpected end of stream"):
        rd.read_bits_padded(32)


# --- Elias delta --------------------------------------------------------------


def test_elias_delta_frozen_codes():
    assert bitstr(elias_delta_encode(1)) == "1"
    assert bitstr(elias_delta_encode(2)) == "0100"
    assert bitstr(elias_delta_encode(3)) == "0101"
    assert elias_delta_encode(17).bit_length == 9
    assert bitstr(elias_delta_encode(17)) == "001010001"
    for m in (1, 2, 3, 17, 100, 65536):
        assert elias_delta_encode(m).bit_length == elias_delta_length(m)


@given(st.integers(min_value=1, max_value=10**12))
def test_elias_delta_round_trip(m):
    bs = elias_delta_encode(m)
    rd = BitReader(bs.to_bytes(), bs.bit_length)
    assert elias_delta_decode(rd) == m
    assert rd.position == elias_delta_length(m)


def test_elias_delta_rejects_zero():
    with pytest.raises(ValueError):
        elias_delta_encode(0)


def test_elias_delta_truncated_raises():
    bs = elias_delta_encode(100000)
    rd = BitReader(bs.to_bytes(), bs.bit_length - 5)
    with pytest.raises(CoderError, match="unexpected end of stream"):
        elias_delta_decode(rd)


# --- range coder --------------------------------------------------------------


class _CountingEncoder(RangeEncoder):
    carries = 0

    def _propagate_carry(self):
        type(self).carries += 1
        super()._propagate_carry()


def test_range_coder_random_slots_round_trip_with_carries():
    _CountingEncoder.carries = 0
    for seed in range(8):
        rng = random.Random(seed)
        slots = [rng.randrange(3) for _ in range(400)]
        enc = _CountingEncoder()
        for s in slots:
            enc.encode(s, s + 1, 3)
        payload = enc.finish()
        dec = RangeDecoder(BitReader(payload.to_bytes(), payload.bit_length))
        out = []
        for _ in range(400):
            c = dec.decode_target(3)
            out.append(c)
            dec.consume(c, c + 1, 3)
        assert out == slots
        # Within a bit and a half of the 400*log2(3) entropy.
        assert payload.bit_length <= math.ceil(400 * math.log2(3)) + 2
    assert _CountingEncoder.carries > 0


def test_range_encoder_rejects_bad_intervals():
    enc = RangeEncoder()
    with pytest.raises(ValueError):
        enc.encode(2, 1, 3)
    with pytest.raises(ValueError):
        enc.encode(0, 1, (1 << 32) + 1)


def test_probability_one_stream_is_empty():
    pattern = [1] * 50
    payload = arith_encode(pattern_known_k_model(1), pattern)
    assert payload.bit_length == 0
    assert arith_decode(pattern_known_k_model(1), payload, 50) == pattern


def test_known_k_small_pattern_payload():
    pattern = [1, 1, 2]
    payload = arith_encode(pattern_known_k_model(3), pattern)
    # Assigned probability is 6/35, about 2.54 bits.
    assert payload.bit_length <= 5
    assert arith_decode(pattern_known_k_model(3), payload, 3) == pattern


def _model_pairs(pattern):
    n, k = len(pattern), max(pattern)
    yield pattern_known_k_model(k), pattern_known_k_model(k)
    yield pattern_known_k_model(k + 2), pattern_known_k_model(k + 2)
    if n >= 2:
        yield pattern_mixture_model(n), pattern_mixture_model(n)
    yield pattern_unknown_k_model(0.1), pattern_unknown_k_model(0.1)
    yield pattern_unknown_k_model(0.5), pattern_unknown_k_model(0.5)


@settings(deadline=None, max_examples=60)
@given(patterns_st)
def test_model_round_trip_and_overhead(pattern):
    n = len(pattern)
    for enc_model, dec_model in _model_pairs(pattern):
        ref = enc_model.clone()
        payload = arith_encode(enc_model, pattern)
        assert arith_decode(dec_model, payload, n) == pattern
        ideal = assign_log_prob(ref, pattern)
        assert payload.bit_length <= math.ceil(ideal - 1e-9) + 2


def test_gkt_model_round_trip():
    rng = random.Random(7)
    pattern = extract_pattern([rng.randrange(12) for _ in range(200)])
    payload = arith_encode(gkt_model(nu=0.7, eps=0.2), pattern)
    assert arith_decode(gkt_model(nu=0.7, eps=0.2), payload, len(pattern)) == pattern
    payload = arith_encode(gkt_model(nu=0.5, chi=lambda t, c: 0.5), pattern)
    assert (
        arith_decode(gkt_model(nu=0.5, chi=lambda t, c: 0.5), payload, len(pattern))
        == pattern
    )


def test_arith_encode_requires_fresh_model():
    m = pattern_known_k_model(2)
    m.push(1)
    with pytest.raises(ValueError, match="fresh"):
        arith_encode(m, [1])
    with pytest.raises(ValueError, match="fresh"):
        arith_decode(m, BitStream(), 1)


# --- container ----------------------------------------------------------------


def test_compress_round_trip_small_inputs():
    for data in (b"aaaa", b"lossless", b"abracadabra", bytes(range(256))):
        for model in ("known-k", "mixture", "unknown-k"):
            if model == "mixture" and len(set(data)) == len(data) == 1:
                continue
            c = compress(data, model=model)
            blob = c.to_bytes()
            assert decompress(blob) == data
            assert decompress(c) == data
            assert blob[:4] == b"PATC"


def test_compress_random_bytes_round_trip():
    rng = random.Random(123)
    data = bytes(rng.randrange(256) for _ in range(1000))
    for model in ("known-k", "mixture", "unknown-k"):
        assert decompress(compress(data, model=model).to_bytes()) == data


def test_compress_words_mode_round_trip():
    text = b"the quick brown fox  the lazy dog\nthe quick end"
    c = compress(text, model="known-k", tokens="words")
    assert decompress(c.to_bytes()) == text
    # Dictionary holds whole word and whitespace runs, not single bytes.
    assert b"the" in c.dictionary
    assert max(len(tok) for tok in c.dictionary) > 1


def test_compress_repetitive_input_shrinks():
    data = b"ab" * 2000
    blob = compress(data, model="known-k").to_bytes()
    assert len(blob) < 700


def test_compress_rejects_bad_args():
    with pytest.raises(ValueError, match="empty"):
        compress(b"")
    with pytest.raises(ValueError, match="unknown model"):
        compress(b"abc", model="nope")
    with pytest.raises(ValueError):
        compress(b"abc", model="unknown-k", eps=0.0)
    with pytest.raises(ValueError):
        compress(b"abc", model="unknown-k", eps=1.0)


def test_eps_fixed_point():
    assert eps_to_fixed(0.1) == 6554
    assert eps_to_fixed(1 / 65536) == 1
    c = compress(b"abracadabra", model="unknown-k", eps=0.1)
    assert c.params["eps_num"] == 6554
    assert decompress(c.to_bytes()) == b"abracadabra"


def test_container_header_errors():
    blob = bytearray(compress(b"lossless").to_bytes())
    bad = bytes(b"XXXX") + bytes(blob[4:])
    with pytest.raises(CoderError, match="bad magic"):
        decompress(bad)
    bumped = bytes(blob[:4]) + bytes([99]) + bytes(blob[5:])
    with pytest.raises(CoderError, match="unsupported version"):
        decompress(bumped)
    unknown = bytes(blob[:5]) + bytes([0x7F]) + bytes(blob[6:])
    with pytest.raises(CoderError, match="unknown model id"):
        decompress(unknown)


def test_truncated_payload_raises():
    rng = random.Random(99)
    data = bytes(rng.randrange(256) for _ in range(4000))
    blob = compress(data, model="known-k").to_bytes()
    with pytest.raises(ValueError):
        decompress(blob[:-50])


def test_single_bit_flips_never_change_output_length():
    rng = random.Random(5)
    data = bytes(rng.randrange(64) for _ in range(300))
    container = compress(data, model="known-k")
    blob = bytearray(container.to_bytes())
    payload_len = len(container.payload.to_bytes())
    start = (len(blob) - payload_len) * 8
    positions = list(range(start, min(start + 160, len(blob) * 8)))
    positions += list(range(max(start, len(blob) * 8 - 64), len(blob) * 8))
    for pos in positions:
        flipped = bytearray(blob)
        flipped[pos >> 3] ^= 1 << (7 - (pos & 7))
        try:
            out = decompress(bytes(flipped))
        except ValueError:
            continue
        assert len(out) == len(data)


def test_container_big_random_round_trip():
    rng = random.Random(2024)
    data = rng.randbytes(1 << 20)
    blob = compress(data, model="known-k").to_bytes()
    assert decompress(blob) == data
    # Random bytes are incompressible; the container must stay near 1x.
    assert len(blob) < (1 << 20) + 4096


def test_container_dataclass_fields():
    c = compress(b"lossless", model="known-k")
    assert c.model == "known-k"
    assert c.params == {"k": 4}
    assert c.n == 8
    assert c.dictionary == [b"l", b"o", b"s", b"e"]
    assert Container.from_bytes(c.to_bytes()).dictionary == c.dictionary

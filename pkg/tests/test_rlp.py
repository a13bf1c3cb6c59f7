"""RLP codec: spec cases, canonicality enforcement, round-trip property."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from sealedbid import rlp
from sealedbid.errors import CodecError


def test_empty_byte_string():
    assert rlp.encode(b"") == b"\x80"
    assert rlp.decode(b"\x80") == b""


def test_single_low_byte_self_encodes():
    assert rlp.encode(b"\x05") == b"\x05"
    assert rlp.decode(b"\x05") == b"\x05"
    assert rlp.encode(b"\x7f") == b"\x7f"
    assert rlp.encode(b"\x80") == b"\x81\x80"


def test_small_list():
    # [0x05, empty] -> 0xc2 0x05 0x80, computable by hand from the rules
    assert rlp.encode([b"\x05", b""]) == b"\xc2\x05\x80"
    assert rlp.decode(b"\xc2\x05\x80") == [b"\x05", b""]


def test_long_string_and_list_prefixes():
    payload = b"a" * 56
    encoded = rlp.encode(payload)
    assert encoded[0] == 0xB8 and encoded[1] == 56
    assert rlp.decode(encoded) == payload
    items = [b"x"] * 60
    encoded = rlp.encode(items)
    assert encoded[0] == 0xF8
    assert rlp.decode(encoded) == items


def test_nested_lists():
    item = [b"", [b"\x01", [b"\x02", b"longer than one byte"]], b"\x7f"]
    assert rlp.decode(rlp.encode(item)) == item


def test_truncated_list_is_rejected():
    with pytest.raises(CodecError):
        rlp.decode(b"\xc2\x05")


@pytest.mark.parametrize("blob", [
    b"",                      # empty input
    b"\x81\x05",              # single byte < 0x80 wrapped in a header
    b"\xb8\x05" + b"a" * 5,   # long form for a short (<=55) payload
    b"\xb9\x00\x38" + b"a" * 56,  # leading zero in the length-of-length
    b"\x83ab",                # truncated payload
    b"\x05\x05",              # trailing bytes
    b"\xc1",                  # truncated list payload
])
def test_non_canonical_or_malformed_rejected(blob):
    with pytest.raises(CodecError):
        rlp.decode(blob)


def test_encode_rejects_other_types():
    with pytest.raises(CodecError):
        rlp.encode("not bytes")
    with pytest.raises(CodecError):
        rlp.encode(7)


def test_int_helpers_minimal():
    assert rlp.encode_int(0) == b""
    assert rlp.encode_int(5) == b"\x05"
    assert rlp.encode_int(1000) == b"\x03\xe8"
    assert rlp.decode_int(b"") == 0
    assert rlp.decode_int(b"\x03\xe8") == 1000
    with pytest.raises(CodecError):
        rlp.decode_int(b"\x00\x05")
    with pytest.raises(CodecError):
        rlp.encode_int(-1)


def _random_item(rng, depth=0):
    if depth >= 3 or rng.random() < 0.6:
        return rng.randbytes(rng.randrange(0, 70))
    return [_random_item(rng, depth + 1) for _ in range(rng.randrange(0, 5))]


def test_round_trip_bulk_random():
    rng = random.Random(2024)
    for _ in range(2000):
        item = _random_item(rng)
        encoded = rlp.encode(item)
        assert rlp.decode(encoded) == item
        assert rlp.encode(rlp.decode(encoded)) == encoded


rlp_items = st.recursive(
    st.binary(max_size=80),
    lambda children: st.lists(children, max_size=5),
    max_leaves=12,
)


@settings(max_examples=150, deadline=None)
@given(item=rlp_items)
def test_round_trip_property(item):
    assert rlp.decode(rlp.encode(item)) == item


def test_decoder_never_crashes_on_noise():
    rng = random.Random(3)
    decoded = 0
    for _ in range(3000):
        blob = rng.randbytes(rng.randrange(1, 40))
        try:
            rlp.decode(blob)
            decoded += 1
        except CodecError:
            pass
    assert decoded > 0  # some random blobs are valid (e.g. single low bytes)

"""secp256k1 group math and recoverable ECDSA."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from sealedbid.crypto import available_backends, secp256k1
from sealedbid.errors import KeyMaterialError, SignatureError

BACKENDS = available_backends()
N = secp256k1.N
P = secp256k1.P

# well-known address vectors for the first few private keys
ADDRESS_VECTORS = [
    (1, "7e5f4552091a69125d5dfcb7b8c2659029395bdf"),
    (2, "2b5ad5c4795c026514f8317c7a215e218dccd6cf"),
    (3, "6813eb9362372eef6200f3b1dbc3f819671cba69"),
]


@pytest.fixture(params=sorted(BACKENDS), ids=sorted(BACKENDS))
def backend(request):
    return BACKENDS[request.param]


def test_generator_constants_agree(backend):
    assert backend.P == P
    assert backend.N == N
    assert backend.is_on_curve(backend.scalar_mult_base(1))


def test_address_vectors(backend):
    from sealedbid.crypto import keccak_256
    for priv, expected in ADDRESS_VECTORS:
        x, y = backend.scalar_mult_base(priv)
        addr = keccak_256(x.to_bytes(32, "big") + y.to_bytes(32, "big"))[-20:]
        assert addr.hex() == expected


def test_group_laws(backend):
    rng = random.Random(5)
    for _ in range(25):
        a = rng.randrange(1, N)
        b = rng.randrange(1, N)
        pa = backend.scalar_mult_base(a)
        pb = backend.scalar_mult_base(b)
        assert backend.point_add(pa, pb) == backend.scalar_mult_base((a + b) % N)
        assert backend.point_mul(b, pa) == backend.scalar_mult_base(a * b % N)
        assert backend.double_mult_base(a, b, pb) == \
            backend.scalar_mult_base((a + b * b) % N)


def test_infinity_edges(backend):
    g = backend.scalar_mult_base(1)
    assert backend.scalar_mult_base(N) is None
    assert backend.point_mul(7, None) is None
    assert backend.point_add(g, (g[0], P - g[1])) is None
    assert backend.point_add(None, g) == g
    assert backend.scalar_mult_base(N - 1) == (g[0], P - g[1])
    assert backend.double_mult_base(0, 0, g) is None


def test_backend_equivalence_random_scalars():
    if "compiled" not in BACKENDS:
        pytest.skip("compiled backend not built")
    pure, compiled = BACKENDS["pure"], BACKENDS["compiled"]
    rng = random.Random(99)
    for _ in range(150):
        a = rng.randrange(1, N)
        b = rng.randrange(1, N)
        pa = pure.scalar_mult_base(a)
        assert pa == compiled.scalar_mult_base(a)
        assert pure.point_mul(b, pa) == compiled.point_mul(b, pa)
        assert pure.double_mult_base(a, b, pa) == compiled.double_mult_base(a, b, pa)


def test_sign_recover_identity_bulk():
    rng = random.Random(7)
    for _ in range(60):
        priv = rng.randrange(1, N)
        digest = rng.randbytes(32)
        r, s, bit = secp256k1.sign_recoverable(digest, priv)
        assert 1 <= r < N and 1 <= s <= N // 2 and bit in (0, 1)
        recovered = secp256k1.recover_public_key(digest, r, s, bit)
        assert recovered == secp256k1.public_key(priv)


@settings(max_examples=60, deadline=None)
@given(priv=st.integers(min_value=1, max_value=N - 1),
       digest=st.binary(min_size=32, max_size=32))
def test_sign_recover_property(priv, digest):
    r, s, bit = secp256k1.sign_recoverable(digest, priv)
    assert secp256k1.recover_public_key(digest, r, s, bit) == \
        secp256k1.public_key(priv)


def test_signatures_are_deterministic():
    digest = b"\x11" * 32
    assert secp256k1.sign_recoverable(digest, 12345) == \
        secp256k1.sign_recoverable(digest, 12345)


def test_high_s_rejected():
    digest = b"\x22" * 32
    r, s, bit = secp256k1.sign_recoverable(digest, 999)
    with pytest.raises(SignatureError):
        secp256k1.recover_public_key(digest, r, N - s, bit)


def test_recovery_input_validation():
    digest = b"\x33" * 32
    r, s, bit = secp256k1.sign_recoverable(digest, 4242)
    with pytest.raises(SignatureError):
        secp256k1.recover_public_key(digest, 0, s, bit)
    with pytest.raises(SignatureError):
        secp256k1.recover_public_key(digest, r, 0, bit)
    with pytest.raises(SignatureError):
        secp256k1.recover_public_key(digest, r, s, 5)
    with pytest.raises(SignatureError):
        secp256k1.recover_public_key(digest[:31], r, s, bit)


def test_private_key_range_checks():
    with pytest.raises(KeyMaterialError):
        secp256k1.public_key(0)
    with pytest.raises(KeyMaterialError):
        secp256k1.public_key(N)
    with pytest.raises(KeyMaterialError):
        secp256k1.sign_recoverable(b"\x00" * 32, N + 5)


def test_point_from_bytes_rejects_off_curve():
    good = secp256k1.public_key(7)
    round_tripped = secp256k1.point_from_bytes(secp256k1.public_key_bytes(good))
    assert round_tripped == good
    bad = bytearray(secp256k1.public_key_bytes(good))
    bad[-1] ^= 1
    with pytest.raises(KeyMaterialError):
        secp256k1.point_from_bytes(bytes(bad))
    with pytest.raises(KeyMaterialError):
        secp256k1.point_from_bytes(b"\x01" * 63)


def test_generate_private_key_retries_out_of_range():
    draws = [N.to_bytes(32, "big"), (0).to_bytes(32, "big"),
             (42).to_bytes(32, "big")]
    calls = iter(draws)

    def rand(n):
        assert n == 32
        return next(calls)

    assert secp256k1.generate_private_key(rand) == 42

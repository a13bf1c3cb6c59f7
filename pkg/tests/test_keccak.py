"""keccak-256 vectors and cross-backend equivalence."""

import random

import pytest

from sealedbid.crypto import available_backends

BACKENDS = available_backends()

# original-padding keccak-256, not SHA3-256
VECTORS = [
    (b"", "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470"),
    (b"abc", "4e03657aea45a94fc7d47ba826c8d667c0d1e6e33a64a036ec44f58fa12d6c45"),
    (b"testing", "5f16f4c7f149ac4f9510d9cf8cf384038ad348b3bcdc01915f95de12df9d1b02"),
    (b"The quick brown fox jumps over the lazy dog",
     "4d741b6f1eb29cb2a9b9911c82f56fa8d73b04959d3d9d222895df6c0b28aa15"),
]


@pytest.fixture(params=sorted(BACKENDS), ids=sorted(BACKENDS))
def backend(request):
    return BACKENDS[request.param]


def test_known_vectors(backend):
    for message, digest in VECTORS:
        assert backend.keccak_256(message).hex() == digest


def test_digest_is_32_bytes(backend):
    assert len(backend.keccak_256(b"x" * 500)) == 32


@pytest.mark.parametrize("length", [0, 1, 7, 135, 136, 137, 271, 272, 273, 1000])
def test_padding_boundaries_cross_backend(length):
    if "compiled" not in BACKENDS:
        pytest.skip("compiled backend not built")
    rng = random.Random(length)
    data = rng.randbytes(length)
    assert (BACKENDS["pure"].keccak_256(data)
            == BACKENDS["compiled"].keccak_256(data))


def test_accepts_bytearray(backend):
    assert backend.keccak_256(bytearray(b"abc")) == backend.keccak_256(b"abc")


def test_random_equivalence():
    if "compiled" not in BACKENDS:
        pytest.skip("compiled backend not built")
    rng = random.Random(1234)
    for _ in range(300):
        data = rng.randbytes(rng.randrange(0, 600))
        assert (BACKENDS["pure"].keccak_256(data)
                == BACKENDS["compiled"].keccak_256(data))

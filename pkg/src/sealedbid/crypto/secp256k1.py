"""Recoverable ECDSA over secp256k1 with deterministic (RFC 6979) nonces.

The group math lives in the selected backend; this module owns the
protocol layer: nonce derivation, low-s normalization, and public-key
recovery. Signatures are `(r, s, recovery_bit)` triples; recovery bits
are restricted to {0, 1} by re-deriving the nonce in the (negligible)
r >= N case, so they always fit the settlement wire format.
"""

import hashlib
import hmac
from typing import Callable, Tuple

from sealedbid.crypto import backend
from sealedbid.errors import KeyMaterialError, SignatureError

P = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
HALF_N = N // 2

Point = Tuple[int, int]


def generate_private_key(rand: Callable[[int], bytes]) -> int:
    """Draw 32-byte candidates from `rand` until one lands in [1, N-1]."""
    while True:
        candidate = int.from_bytes(rand(32), "big")
        if 1 <= candidate < N:
            return candidate


def public_key(private_key: int) -> Point:
    if not 1 <= private_key < N:
        raise KeyMaterialError("private key out of range")
    return backend.scalar_mult_base(private_key)


def public_key_bytes(point: Point) -> bytes:
    """64-byte uncompressed encoding (x || y), no 0x04 prefix."""
    return point[0].to_bytes(32, "big") + point[1].to_bytes(32, "big")


def point_from_bytes(data: bytes) -> Point:
    if len(data) != 64:
        raise KeyMaterialError("public key must be 64 bytes, got %d" % len(data))
    point = (int.from_bytes(data[:32], "big"), int.from_bytes(data[32:], "big"))
    if not backend.is_on_curve(point):
        raise KeyMaterialError("point is not on the curve")
    return point


def _hmac_sha256(key: bytes, msg: bytes) -> bytes:
    return hmac.new(key, msg, hashlib.sha256).digest()


def _rfc6979_candidates(digest: bytes, private_key: int):
    # hlen == qlen == 256 bits, so bits2int is the identity on the digest
    x = private_key.to_bytes(32, "big")
    h_reduced = (int.from_bytes(digest, "big") % N).to_bytes(32, "big")
    v = b"\x01" * 32
    k = b"\x00" * 32
    k = _hmac_sha256(k, v + b"\x00" + x + h_reduced)
    v = _hmac_sha256(k, v)
    k = _hmac_sha256(k, v + b"\x01" + x + h_reduced)
    v = _hmac_sha256(k, v)
    while True:
        v = _hmac_sha256(k, v)
        candidate = int.from_bytes(v, "big")
        if 1 <= candidate < N:
            yield candidate
        k = _hmac_sha256(k, v + b"\x00")
        v = _hmac_sha256(k, v)


def sign_recoverable(digest: bytes, private_key: int) -> Tuple[int, int, int]:
    """Sign a 32-byte digest; returns (r, s, recovery_bit) with s <= N/2."""
    if len(digest) != 32:
        raise SignatureError("digest must be 32 bytes")
    if not 1 <= private_key < N:
        raise KeyMaterialError("private key out of range")
    z = int.from_bytes(digest, "big")
    for k in _rfc6979_candidates(digest, private_key):
        x_r, y_r = backend.scalar_mult_base(k)
        if x_r >= N:  # would need recovery bit 2/3; draw the next nonce
            continue
        r = x_r
        s = pow(k, -1, N) * (z + r * private_key) % N
        if r == 0 or s == 0:
            continue
        recovery_bit = y_r & 1
        if s > HALF_N:
            s = N - s
            recovery_bit ^= 1
        return r, s, recovery_bit


def recover_public_key(digest: bytes, r: int, s: int, recovery_bit: int) -> Point:
    """Invert a recoverable signature back to the signer's public key.

    Enforces the same canonical form the signer produces: low-s and a
    recovery bit in {0, 1}.
    """
    if len(digest) != 32:
        raise SignatureError("digest must be 32 bytes")
    if recovery_bit not in (0, 1):
        raise SignatureError("invalid recovery bit %r" % (recovery_bit,))
    if not 1 <= r < N:
        raise SignatureError("r out of range")
    if not 1 <= s < N:
        raise SignatureError("s out of range")
    if s > HALF_N:
        raise SignatureError("high-s signature rejected")
    if r >= P:
        raise SignatureError("r does not name a curve x-coordinate")
    y_sq = (pow(r, 3, P) + 7) % P
    y = pow(y_sq, (P + 1) // 4, P)
    if y * y % P != y_sq:
        raise SignatureError("signature point is not on the curve")
    if (y & 1) != recovery_bit:
        y = P - y
    z = int.from_bytes(digest, "big")
    r_inv = pow(r, -1, N)
    u1 = (-z * r_inv) % N
    u2 = (s * r_inv) % N
    point = backend.double_mult_base(u1, u2, (r, y))
    if point is None:
        raise SignatureError("recovered the point at infinity")
    return point

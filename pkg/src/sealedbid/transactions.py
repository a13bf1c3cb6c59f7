"""Settlement transactions: signing, serialization, and signer recovery.

Legacy (pre-typed) transaction format with chain-id replay protection:
the signature covers rlp([nonce, gas_price, gas_limit, to, value, data,
chain_id, '', '']) and v encodes the chain id as chain_id*2 + 35 + parity.
All integer fields use minimal big-endian encoding; decoding enforces it.
"""

from dataclasses import dataclass

from sealedbid import rlp
from sealedbid.crypto import keccak_256, secp256k1
from sealedbid.errors import CodecError, ConfigError, KeyMaterialError, SignatureError

ADDRESS_LENGTH = 20


def derive_address(public_key) -> bytes:
    """Last 20 bytes of keccak-256 over the 64-byte uncompressed point."""
    if isinstance(public_key, (bytes, bytearray)):
        point = secp256k1.point_from_bytes(bytes(public_key))
    else:
        point = public_key
        if not secp256k1.backend.is_on_curve(point):
            raise KeyMaterialError("point is not on the curve")
    return keccak_256(secp256k1.public_key_bytes(point))[-ADDRESS_LENGTH:]


def _check_address(name: str, value: bytes) -> bytes:
    if not isinstance(value, (bytes, bytearray)) or len(value) != ADDRESS_LENGTH:
        raise ConfigError("%s must be a %d-byte address" % (name, ADDRESS_LENGTH))
    return bytes(value)


def _check_uint(name: str, value: int) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise ConfigError("%s must be a non-negative integer" % name)
    return value


@dataclass(frozen=True)
class UnsignedTx:
    nonce: int
    gas_price: int
    gas_limit: int
    to: bytes
    value: int
    data: bytes = b""
    chain_id: int = 1

    def __post_init__(self):
        _check_uint("nonce", self.nonce)
        _check_uint("gas_price", self.gas_price)
        _check_uint("gas_limit", self.gas_limit)
        _check_address("to", self.to)
        _check_uint("value", self.value)
        _check_uint("chain_id", self.chain_id)
        if not isinstance(self.data, (bytes, bytearray)):
            raise ConfigError("data must be bytes")
        object.__setattr__(self, "to", bytes(self.to))
        object.__setattr__(self, "data", bytes(self.data))

    def signing_digest(self) -> bytes:
        preimage = rlp.encode([
            rlp.encode_int(self.nonce),
            rlp.encode_int(self.gas_price),
            rlp.encode_int(self.gas_limit),
            self.to,
            rlp.encode_int(self.value),
            self.data,
            rlp.encode_int(self.chain_id),
            b"",
            b"",
        ])
        return keccak_256(preimage)


@dataclass(frozen=True)
class SignedTransaction:
    nonce: int
    gas_price: int
    gas_limit: int
    to: bytes
    value: int
    data: bytes
    v: int
    r: int
    s: int

    @property
    def chain_id(self) -> int:
        return (self.v - 35) // 2

    @property
    def recovery_bit(self) -> int:
        return self.v - 35 - 2 * self.chain_id

    def unsigned(self) -> UnsignedTx:
        return UnsignedTx(self.nonce, self.gas_price, self.gas_limit, self.to,
                          self.value, self.data, self.chain_id)

    def raw(self) -> bytes:
        return rlp.encode([
            rlp.encode_int(self.nonce),
            rlp.encode_int(self.gas_price),
            rlp.encode_int(self.gas_limit),
            self.to,
            rlp.encode_int(self.value),
            self.data,
            rlp.encode_int(self.v),
            rlp.encode_int(self.r),
            rlp.encode_int(self.s),
        ])

    def raw_hex(self) -> str:
        return "0x" + self.raw().hex()

    def tx_hash(self) -> bytes:
        return keccak_256(self.raw())

    @classmethod
    def from_raw(cls, raw: bytes) -> "SignedTransaction":
        if isinstance(raw, str):
            raw = bytes.fromhex(raw[2:] if raw.startswith("0x") else raw)
        fields = rlp.decode(raw)
        if not isinstance(fields, list) or len(fields) != 9:
            raise CodecError("signed transaction must decode to 9 fields")
        for field in fields:
            if not isinstance(field, bytes):
                raise CodecError("transaction fields must be byte strings")
        to = fields[3]
        if len(to) != ADDRESS_LENGTH:
            raise CodecError("'to' field must be 20 bytes")
        v = rlp.decode_int(fields[6])
        if v < 35:
            raise CodecError("v=%d does not carry a chain id" % v)
        return cls(
            nonce=rlp.decode_int(fields[0]),
            gas_price=rlp.decode_int(fields[1]),
            gas_limit=rlp.decode_int(fields[2]),
            to=to,
            value=rlp.decode_int(fields[4]),
            data=fields[5],
            v=v,
            r=rlp.decode_int(fields[7]),
            s=rlp.decode_int(fields[8]),
        )


def sign_tx(tx: UnsignedTx, private_key: int, chain_id: int) -> SignedTransaction:
    if tx.chain_id != chain_id:
        raise ConfigError(
            "transaction targets chain %d but was signed for %d" % (tx.chain_id, chain_id)
        )
    r, s, recovery_bit = secp256k1.sign_recoverable(tx.signing_digest(), private_key)
    return SignedTransaction(
        nonce=tx.nonce,
        gas_price=tx.gas_price,
        gas_limit=tx.gas_limit,
        to=tx.to,
        value=tx.value,
        data=tx.data,
        v=chain_id * 2 + 35 + recovery_bit,
        r=r,
        s=s,
    )


def recover_signer(stx: SignedTransaction) -> bytes:
    """Address whose key produced the signature; raises SignatureError."""
    if stx.v < 35:
        raise SignatureError("v=%d does not carry a chain id" % stx.v)
    digest = stx.unsigned().signing_digest()
    point = secp256k1.recover_public_key(digest, stx.r, stx.s, stx.recovery_bit)
    return derive_address(point)

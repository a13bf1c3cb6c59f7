# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: keccak-256 and secp256k1 group operations.

Field elements are 4x64-bit little-endian limbs reduced mod
p = 2**256 - 2**32 - 977; reductions exploit 2**256 = 0x1000003D1 (mod p).
The API and semantics match `_purepy` exactly.
"""

from libc.stdint cimport uint64_t, uint8_t
from libc.string cimport memset

cdef extern from *:
    ctypedef unsigned long long u128 "unsigned __int128"

IMPLEMENTATION = "compiled"

P = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
GX = 0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798
GY = 0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8

cdef object _P_INT = P
cdef object _N_INT = N

# ---------------------------------------------------------------------------
# keccak-256

cdef uint64_t KECCAK_RC[24]
cdef int KECCAK_RHO[25]

_rc = (
    0x0000000000000001, 0x0000000000008082, 0x800000000000808A,
    0x8000000080008000, 0x000000000000808B, 0x0000000080000001,
    0x8000000080008081, 0x8000000000008009, 0x000000000000008A,
    0x0000000000000088, 0x0000000080008009, 0x000000008000000A,
    0x000000008000808B, 0x800000000000008B, 0x8000000000008089,
    0x8000000000008003, 0x8000000000008002, 0x8000000000000080,
    0x000000000000800A, 0x800000008000000A, 0x8000000080008081,
    0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
)
_rho = (
    0, 1, 62, 28, 27,
    36, 44, 6, 55, 20,
    3, 10, 43, 25, 39,
    41, 45, 15, 21, 8,
    18, 2, 61, 56, 14,
)
for _i in range(24):
    KECCAK_RC[_i] = _rc[_i]
for _i in range(25):
    KECCAK_RHO[_i] = _rho[_i]


cdef inline uint64_t _rol64(uint64_t v, int n) noexcept nogil:
    return (v << n) | (v >> ((64 - n) & 63)) if n else v


cdef void _keccak_f1600(uint64_t *s) noexcept nogil:
    cdef uint64_t b[25]
    cdef uint64_t c[5]
    cdef uint64_t d[5]
    cdef int rnd, x, y
    for rnd in range(24):
        for x in range(5):
            c[x] = s[x] ^ s[x + 5] ^ s[x + 10] ^ s[x + 15] ^ s[x + 20]
        for x in range(5):
            d[x] = c[(x + 4) % 5] ^ _rol64(c[(x + 1) % 5], 1)
        for x in range(5):
            for y in range(0, 25, 5):
                s[x + y] ^= d[x]
        for x in range(5):
            for y in range(5):
                b[y + 5 * ((2 * x + 3 * y) % 5)] = _rol64(s[x + 5 * y],
                                                          KECCAK_RHO[x + 5 * y])
        for y in range(0, 25, 5):
            for x in range(5):
                s[x + y] = b[x + y] ^ ((~b[(x + 1) % 5 + y]) & b[(x + 2) % 5 + y])
        s[0] ^= KECCAK_RC[rnd]


cdef inline uint64_t _load64(const uint8_t *p) noexcept nogil:
    return ((<uint64_t>p[0]) | (<uint64_t>p[1] << 8) | (<uint64_t>p[2] << 16)
            | (<uint64_t>p[3] << 24) | (<uint64_t>p[4] << 32)
            | (<uint64_t>p[5] << 40) | (<uint64_t>p[6] << 48)
            | (<uint64_t>p[7] << 56))


cdef inline void _store64(uint8_t *p, uint64_t v) noexcept nogil:
    cdef int i
    for i in range(8):
        p[i] = <uint8_t>(v >> (8 * i))


def keccak_256(data):
    cdef bytes buf = bytes(data)
    cdef const uint8_t *ptr = buf
    cdef Py_ssize_t n = len(buf)
    cdef Py_ssize_t offset = 0
    cdef uint64_t state[25]
    cdef uint8_t block[136]
    cdef uint8_t out[32]
    cdef int i
    memset(state, 0, sizeof(state))
    while n - offset >= 136:
        for i in range(17):
            state[i] ^= _load64(ptr + offset + 8 * i)
        _keccak_f1600(state)
        offset += 136
    memset(block, 0, 136)
    for i in range(<int>(n - offset)):
        block[i] = ptr[offset + i]
    block[n - offset] ^= 0x01
    block[135] ^= 0x80
    for i in range(17):
        state[i] ^= _load64(block + 8 * i)
    _keccak_f1600(state)
    for i in range(4):
        _store64(out + 8 * i, state[i])
    return bytes(out[:32])


# ---------------------------------------------------------------------------
# secp256k1 field arithmetic (limbs little-endian, always reduced below p)

cdef uint64_t REDC = 0x1000003D1  # 2**256 mod p
cdef uint64_t LIMB_MAX = 0xFFFFFFFFFFFFFFFF
cdef uint64_t P_LIMB0 = 0xFFFFFFFEFFFFFC2F

cdef struct fe:
    uint64_t l[4]


cdef inline bint fe_is_zero(const fe *a) noexcept nogil:
    return a.l[0] == 0 and a.l[1] == 0 and a.l[2] == 0 and a.l[3] == 0


cdef inline bint fe_ge_p(const fe *a) noexcept nogil:
    # p's upper three limbs are all-ones
    if a.l[3] != LIMB_MAX:
        return False
    if a.l[2] != LIMB_MAX:
        return False
    if a.l[1] != LIMB_MAX:
        return False
    return a.l[0] >= P_LIMB0


cdef inline void fe_sub_p(fe *a) noexcept nogil:
    # a - p == a + REDC (mod 2**256) because 2**256 - p == REDC
    cdef u128 acc = <u128>a.l[0] + REDC
    a.l[0] = <uint64_t>acc
    acc >>= 64
    acc += a.l[1]
    a.l[1] = <uint64_t>acc
    acc >>= 64
    acc += a.l[2]
    a.l[2] = <uint64_t>acc
    acc >>= 64
    acc += a.l[3]
    a.l[3] = <uint64_t>acc


cdef inline void fe_fold_carry(fe *r, uint64_t carry) noexcept nogil:
    # r += carry * 2**256 (mod p), i.e. carry * REDC with propagation
    cdef u128 acc
    while carry:
        acc = <u128>r.l[0] + <u128>carry * REDC
        r.l[0] = <uint64_t>acc
        acc >>= 64
        acc += r.l[1]
        r.l[1] = <uint64_t>acc
        acc >>= 64
        acc += r.l[2]
        r.l[2] = <uint64_t>acc
        acc >>= 64
        acc += r.l[3]
        r.l[3] = <uint64_t>acc
        carry = <uint64_t>(acc >> 64)
    if fe_ge_p(r):
        fe_sub_p(r)


cdef inline void fe_add(fe *r, const fe *a, const fe *b) noexcept nogil:
    cdef u128 acc = <u128>a.l[0] + b.l[0]
    r.l[0] = <uint64_t>acc
    acc >>= 64
    acc += <u128>a.l[1] + b.l[1]
    r.l[1] = <uint64_t>acc
    acc >>= 64
    acc += <u128>a.l[2] + b.l[2]
    r.l[2] = <uint64_t>acc
    acc >>= 64
    acc += <u128>a.l[3] + b.l[3]
    r.l[3] = <uint64_t>acc
    fe_fold_carry(r, <uint64_t>(acc >> 64))


cdef inline void fe_sub(fe *r, const fe *a, const fe *b) noexcept nogil:
    cdef uint64_t borrow = 0
    cdef uint64_t t
    cdef int i
    for i in range(4):
        t = a.l[i] - b.l[i] - borrow
        if a.l[i] < b.l[i] or (a.l[i] == b.l[i] and borrow):
            borrow = 1
        else:
            borrow = 0
        r.l[i] = t
    if borrow:
        # wrapped: result is a - b + 2**256; subtract REDC to get a - b + p
        if r.l[0] >= REDC:
            r.l[0] -= REDC
        else:
            r.l[0] = r.l[0] - <uint64_t>REDC
            i = 1
            while True:
                if r.l[i] != 0:
                    r.l[i] -= 1
                    break
                r.l[i] -= 1  # wraps to all-ones, keep borrowing
                i += 1


cdef inline void _muladd(uint64_t a, uint64_t b, uint64_t *c0, uint64_t *c1,
                         uint64_t *c2) noexcept nogil:
    cdef u128 t = <u128>a * b
    cdef uint64_t tl = <uint64_t>t
    cdef uint64_t th = <uint64_t>(t >> 64)
    c0[0] += tl
    if c0[0] < tl:
        th += 1
    c1[0] += th
    if c1[0] < th:
        c2[0] += 1


cdef void fe_mul(fe *r, const fe *a, const fe *b) noexcept nogil:
    cdef uint64_t prod[8]
    cdef uint64_t c0 = 0, c1 = 0, c2 = 0
    cdef u128 acc
    cdef uint64_t carry

    _muladd(a.l[0], b.l[0], &c0, &c1, &c2)
    prod[0] = c0
    c0 = c1; c1 = c2; c2 = 0
    _muladd(a.l[0], b.l[1], &c0, &c1, &c2)
    _muladd(a.l[1], b.l[0], &c0, &c1, &c2)
    prod[1] = c0
    c0 = c1; c1 = c2; c2 = 0
    _muladd(a.l[0], b.l[2], &c0, &c1, &c2)
    _muladd(a.l[1], b.l[1], &c0, &c1, &c2)
    _muladd(a.l[2], b.l[0], &c0, &c1, &c2)
    prod[2] = c0
    c0 = c1; c1 = c2; c2 = 0
    _muladd(a.l[0], b.l[3], &c0, &c1, &c2)
    _muladd(a.l[1], b.l[2], &c0, &c1, &c2)
    _muladd(a.l[2], b.l[1], &c0, &c1, &c2)
    _muladd(a.l[3], b.l[0], &c0, &c1, &c2)
    prod[3] = c0
    c0 = c1; c1 = c2; c2 = 0
    _muladd(a.l[1], b.l[3], &c0, &c1, &c2)
    _muladd(a.l[2], b.l[2], &c0, &c1, &c2)
    _muladd(a.l[3], b.l[1], &c0, &c1, &c2)
    prod[4] = c0
    c0 = c1; c1 = c2; c2 = 0
    _muladd(a.l[2], b.l[3], &c0, &c1, &c2)
    _muladd(a.l[3], b.l[2], &c0, &c1, &c2)
    prod[5] = c0
    c0 = c1; c1 = c2; c2 = 0
    _muladd(a.l[3], b.l[3], &c0, &c1, &c2)
    prod[6] = c0
    prod[7] = c1

    # 512 -> 256 bit reduction: lo + hi * REDC, then fold the spill limb
    acc = <u128>prod[0] + <u128>prod[4] * REDC
    r.l[0] = <uint64_t>acc
    acc >>= 64
    acc += <u128>prod[1] + <u128>prod[5] * REDC
    r.l[1] = <uint64_t>acc
    acc >>= 64
    acc += <u128>prod[2] + <u128>prod[6] * REDC
    r.l[2] = <uint64_t>acc
    acc >>= 64
    acc += <u128>prod[3] + <u128>prod[7] * REDC
    r.l[3] = <uint64_t>acc
    carry = <uint64_t>(acc >> 64)
    fe_fold_carry(r, carry)


cdef inline void fe_sqr(fe *r, const fe *a) noexcept nogil:
    fe_mul(r, a, a)


cdef inline void fe_dbl(fe *r, const fe *a) noexcept nogil:
    fe_add(r, a, a)


# ---------------------------------------------------------------------------
# Jacobian point arithmetic (curve y^2 = x^3 + 7, a = 0)

cdef struct jac:
    fe x
    fe y
    fe z


cdef inline void jac_set_infinity(jac *p) noexcept nogil:
    memset(p, 0, sizeof(jac))
    p.y.l[0] = 1


cdef inline bint jac_is_infinity(const jac *p) noexcept nogil:
    return fe_is_zero(&p.z)


cdef void jac_double(jac *r, const jac *p) noexcept nogil:
    cdef fe a, b, c, d, e, f, t, x3, y3, z3
    if jac_is_infinity(p) or fe_is_zero(&p.y):
        jac_set_infinity(r)
        return
    fe_sqr(&a, &p.x)              # A = X^2
    fe_sqr(&b, &p.y)              # B = Y^2
    fe_sqr(&c, &b)                # C = B^2
    fe_add(&t, &p.x, &b)
    fe_sqr(&t, &t)
    fe_sub(&t, &t, &a)
    fe_sub(&t, &t, &c)
    fe_dbl(&d, &t)                # D = 2((X+B)^2 - A - C)
    fe_dbl(&e, &a)
    fe_add(&e, &e, &a)            # E = 3A
    fe_sqr(&f, &e)                # F = E^2
    fe_dbl(&t, &d)
    fe_sub(&x3, &f, &t)           # X3 = F - 2D
    fe_sub(&t, &d, &x3)
    fe_mul(&t, &e, &t)
    fe_dbl(&c, &c)
    fe_dbl(&c, &c)
    fe_dbl(&c, &c)                # 8C
    fe_sub(&y3, &t, &c)           # Y3 = E(D - X3) - 8C
    fe_mul(&z3, &p.y, &p.z)
    fe_dbl(&z3, &z3)              # Z3 = 2YZ
    r.x = x3
    r.y = y3
    r.z = z3


cdef void jac_add(jac *r, const jac *p1, const jac *p2) noexcept nogil:
    cdef fe z1z1, z2z2, u1, u2, s1, s2, h, i, j, rr, v, t, x3, y3, z3
    if jac_is_infinity(p1):
        r[0] = p2[0]
        return
    if jac_is_infinity(p2):
        r[0] = p1[0]
        return
    fe_sqr(&z1z1, &p1.z)
    fe_sqr(&z2z2, &p2.z)
    fe_mul(&u1, &p1.x, &z2z2)
    fe_mul(&u2, &p2.x, &z1z1)
    fe_mul(&s1, &p1.y, &p2.z)
    fe_mul(&s1, &s1, &z2z2)
    fe_mul(&s2, &p2.y, &p1.z)
    fe_mul(&s2, &s2, &z1z1)
    if u1.l[0] == u2.l[0] and u1.l[1] == u2.l[1] and u1.l[2] == u2.l[2] and u1.l[3] == u2.l[3]:
        if s1.l[0] != s2.l[0] or s1.l[1] != s2.l[1] or s1.l[2] != s2.l[2] or s1.l[3] != s2.l[3]:
            jac_set_infinity(r)
            return
        jac_double(r, p1)
        return
    fe_sub(&h, &u2, &u1)          # H = U2 - U1
    fe_dbl(&i, &h)
    fe_sqr(&i, &i)                # I = (2H)^2
    fe_mul(&j, &h, &i)            # J = H * I
    fe_sub(&rr, &s2, &s1)
    fe_dbl(&rr, &rr)              # r = 2(S2 - S1)
    fe_mul(&v, &u1, &i)           # V = U1 * I
    fe_sqr(&x3, &rr)
    fe_sub(&x3, &x3, &j)
    fe_sub(&x3, &x3, &v)
    fe_sub(&x3, &x3, &v)          # X3 = r^2 - J - 2V
    fe_sub(&t, &v, &x3)
    fe_mul(&t, &rr, &t)
    fe_mul(&y3, &s1, &j)
    fe_dbl(&y3, &y3)
    fe_sub(&y3, &t, &y3)          # Y3 = r(V - X3) - 2 S1 J
    fe_add(&z3, &p1.z, &p2.z)
    fe_sqr(&z3, &z3)
    fe_sub(&z3, &z3, &z1z1)
    fe_sub(&z3, &z3, &z2z2)
    fe_mul(&z3, &z3, &h)          # Z3 = ((Z1+Z2)^2 - Z1Z1 - Z2Z2) * H
    r.x = x3
    r.y = y3
    r.z = z3


cdef void jac_scalar_mult(jac *r, const uint8_t *k32, const jac *base) noexcept nogil:
    cdef int i, bit
    cdef uint8_t byte
    jac_set_infinity(r)
    for i in range(32):
        byte = k32[i]
        for bit in range(7, -1, -1):
            jac_double(r, r)
            if (byte >> bit) & 1:
                jac_add(r, r, base)


cdef void jac_shamir(jac *r, const uint8_t *u1, const uint8_t *u2,
                     const jac *g, const jac *p2) noexcept nogil:
    cdef jac table[4]
    cdef int i, bit, idx
    table[1] = g[0]
    table[2] = p2[0]
    jac_add(&table[3], g, p2)
    jac_set_infinity(r)
    for i in range(32):
        for bit in range(7, -1, -1):
            jac_double(r, r)
            idx = ((u1[i] >> bit) & 1) | (((u2[i] >> bit) & 1) << 1)
            if idx:
                jac_add(r, r, &table[idx])


# ---------------------------------------------------------------------------
# Python-facing wrappers

cdef void _int_to_fe(object v, fe *out):
    out.l[0] = <uint64_t>(v & 0xFFFFFFFFFFFFFFFF)
    out.l[1] = <uint64_t>((v >> 64) & 0xFFFFFFFFFFFFFFFF)
    out.l[2] = <uint64_t>((v >> 128) & 0xFFFFFFFFFFFFFFFF)
    out.l[3] = <uint64_t>((v >> 192) & 0xFFFFFFFFFFFFFFFF)


cdef object _fe_to_int(const fe *a):
    cdef object v = <object>a.l[3]
    v = (v << 64) | a.l[2]
    v = (v << 64) | a.l[1]
    v = (v << 64) | a.l[0]
    return v


cdef jac _G_JAC


def _init_generator():
    _int_to_fe(GX, &_G_JAC.x)
    _int_to_fe(GY, &_G_JAC.y)
    _int_to_fe(1, &_G_JAC.z)


_init_generator()


cdef object _jac_to_affine(const jac *p):
    if jac_is_infinity(p):
        return None
    z = _fe_to_int(&p.z)
    x = _fe_to_int(&p.x)
    y = _fe_to_int(&p.y)
    zi = pow(z, -1, _P_INT)
    zi2 = zi * zi % _P_INT
    return (x * zi2 % _P_INT, y * zi2 * zi % _P_INT)


cdef bint _point_to_jac(object point, jac *out) except? 0:
    _int_to_fe(point[0], &out.x)
    _int_to_fe(point[1], &out.y)
    _int_to_fe(1, &out.z)
    return 1


def is_on_curve(point):
    if point is None:
        return False
    x, y = point
    if not (0 <= x < _P_INT and 0 <= y < _P_INT):
        return False
    return (y * y - (x * x * x + 7)) % _P_INT == 0


def scalar_mult_base(k):
    k = k % _N_INT
    if k == 0:
        return None
    cdef bytes kb = k.to_bytes(32, "big")
    cdef jac result
    jac_scalar_mult(&result, <const uint8_t *><const char *>kb, &_G_JAC)
    return _jac_to_affine(&result)


def point_mul(k, point):
    if point is None:
        return None
    k = k % _N_INT
    if k == 0:
        return None
    cdef jac base, result
    _point_to_jac(point, &base)
    cdef bytes kb = k.to_bytes(32, "big")
    jac_scalar_mult(&result, <const uint8_t *><const char *>kb, &base)
    return _jac_to_affine(&result)


def point_add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    cdef jac ja, jb, result
    _point_to_jac(a, &ja)
    _point_to_jac(b, &jb)
    jac_add(&result, &ja, &jb)
    return _jac_to_affine(&result)


def double_mult_base(u1, u2, point):
    """u1*G + u2*point, the inner loop of public-key recovery."""
    if point is None:
        return scalar_mult_base(u1)
    u1 = u1 % _N_INT
    u2 = u2 % _N_INT
    if u2 == 0:
        return scalar_mult_base(u1) if u1 else None
    if u1 == 0:
        return point_mul(u2, point)
    cdef jac p2, result
    _point_to_jac(point, &p2)
    cdef bytes b1 = u1.to_bytes(32, "big")
    cdef bytes b2 = u2.to_bytes(32, "big")
    jac_shamir(&result, <const uint8_t *><const char *>b1,
               <const uint8_t *><const char *>b2, &_G_JAC, &p2)
    return _jac_to_affine(&result)


def _bench_fe_mul(int n):
    """Microbenchmark hook: n field multiplications on fixed operands."""
    cdef fe a, b, r
    cdef int i
    _int_to_fe(0x123456789ABCDEF0FEDCBA987654321000FF00FF00FF00FF0123456789ABCDEF, &a)
    _int_to_fe(0xDEADBEEFCAFEBABE0123456789ABCDEF00FF00FF00FF00FFFEDCBA9876543210, &b)
    with nogil:
        for i in range(n):
            fe_mul(&r, &a, &b)
            a = r
    return _fe_to_int(&r)


def _bench_jac_double(int n):
    cdef jac p
    cdef int i
    p = _G_JAC
    with nogil:
        for i in range(n):
            jac_double(&p, &p)
    return _jac_to_affine(&p)

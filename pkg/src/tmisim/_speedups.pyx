# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled NIST P-256 kernel.

Field elements are four 64-bit limbs kept in the Montgomery domain;
products use 128-bit intermediates. The group law and multiplication
strategies mirror ``tmisim._p256_py`` (Jacobian coordinates, windowed
fixed-base table, shared doubling chain for the double multiply), so
both backends are interchangeable behind ``tmisim.backend``.
"""

from libc.stdint cimport uint64_t
from libc.string cimport memset

cdef extern from *:
    ctypedef unsigned long long uint128 "unsigned __int128"

BACKEND = "compiled"

P = 0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF
N = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551
B = 0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B
GX = 0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296
GY = 0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5

cdef uint64_t P_LIMBS[4]
cdef uint64_t N0          # -p^-1 mod 2^64
cdef uint64_t R2[4]       # 2^512 mod p
cdef uint64_t ONE_M[4]    # Montgomery form of 1
cdef uint64_t B_M[4]      # curve b, Montgomery form
cdef uint64_t THREE_M[4]  # 3, Montgomery form


# ── field arithmetic ────────────────────────────────────────────────────

cdef inline void fe_copy(uint64_t* r, const uint64_t* a):
    r[0] = a[0]; r[1] = a[1]; r[2] = a[2]; r[3] = a[3]


cdef inline bint fe_eq(const uint64_t* a, const uint64_t* b):
    return a[0] == b[0] and a[1] == b[1] and a[2] == b[2] and a[3] == b[3]


cdef inline bint fe_is_zero(const uint64_t* a):
    return a[0] == 0 and a[1] == 0 and a[2] == 0 and a[3] == 0


cdef inline void fe_set_zero(uint64_t* r):
    r[0] = 0; r[1] = 0; r[2] = 0; r[3] = 0


cdef void fe_add(uint64_t* r, const uint64_t* a, const uint64_t* b):
    cdef uint64_t t[4]
    cdef uint128 acc = 0
    cdef uint64_t carry = 0, borrow = 0
    cdef uint64_t d[4]
    cdef int i
    for i in range(4):
        acc = <uint128>a[i] + b[i] + carry
        t[i] = <uint64_t>acc
        carry = <uint64_t>(acc >> 64)
    for i in range(4):
        acc = <uint128>t[i] - P_LIMBS[i] - borrow
        d[i] = <uint64_t>acc
        borrow = 1 if <uint64_t>(acc >> 64) else 0
    if carry or not borrow:
        fe_copy(r, d)
    else:
        fe_copy(r, t)


cdef void fe_sub(uint64_t* r, const uint64_t* a, const uint64_t* b):
    cdef uint64_t t[4]
    cdef uint128 acc
    cdef uint64_t borrow = 0, carry = 0
    cdef int i
    for i in range(4):
        acc = <uint128>a[i] - b[i] - borrow
        t[i] = <uint64_t>acc
        borrow = 1 if <uint64_t>(acc >> 64) else 0
    if borrow:
        for i in range(4):
            acc = <uint128>t[i] + P_LIMBS[i] + carry
            t[i] = <uint64_t>acc
            carry = <uint64_t>(acc >> 64)
    fe_copy(r, t)


cdef void fe_mul(uint64_t* r, const uint64_t* a, const uint64_t* b):
    # CIOS Montgomery multiplication
    cdef uint64_t t[6]
    cdef uint128 acc
    cdef uint64_t carry, m, borrow
    cdef uint64_t d[4]
    cdef int i, j
    memset(t, 0, sizeof(t))
    for i in range(4):
        carry = 0
        for j in range(4):
            acc = <uint128>a[j] * b[i] + t[j] + carry
            t[j] = <uint64_t>acc
            carry = <uint64_t>(acc >> 64)
        acc = <uint128>t[4] + carry
        t[4] = <uint64_t>acc
        t[5] = <uint64_t>(acc >> 64)
        m = t[0] * N0
        acc = <uint128>m * P_LIMBS[0] + t[0]
        carry = <uint64_t>(acc >> 64)
        for j in range(1, 4):
            acc = <uint128>m * P_LIMBS[j] + t[j] + carry
            t[j - 1] = <uint64_t>acc
            carry = <uint64_t>(acc >> 64)
        acc = <uint128>t[4] + carry
        t[3] = <uint64_t>acc
        carry = <uint64_t>(acc >> 64)
        t[4] = t[5] + carry
        t[5] = 0
    borrow = 0
    for i in range(4):
        acc = <uint128>t[i] - P_LIMBS[i] - borrow
        d[i] = <uint64_t>acc
        borrow = 1 if <uint64_t>(acc >> 64) else 0
    if t[4] or not borrow:
        fe_copy(r, d)
    else:
        fe_copy(r, t)


cdef uint64_t P_MINUS_2[4]

cdef void fe_inv(uint64_t* r, const uint64_t* a):
    # a^(p-2) by square-and-multiply; only used at affine conversion
    cdef uint64_t res[4]
    cdef int i
    fe_copy(res, ONE_M)
    for i in range(255, -1, -1):
        fe_mul(res, res, res)
        if (P_MINUS_2[i >> 6] >> (i & 63)) & 1:
            fe_mul(res, res, a)
    fe_copy(r, res)


# ── Jacobian point arithmetic (a = -3) ──────────────────────────────────

cdef struct JPoint:
    uint64_t X[4]
    uint64_t Y[4]
    uint64_t Z[4]

cdef struct APoint:
    uint64_t x[4]
    uint64_t y[4]


cdef inline void jp_set_inf(JPoint* r):
    fe_set_zero(r.X); fe_copy(r.Y, ONE_M); fe_set_zero(r.Z)


cdef inline bint jp_is_inf(const JPoint* a):
    return fe_is_zero(a.Z)


cdef void jac_dbl(JPoint* r, const JPoint* a):
    cdef uint64_t delta[4], gamma[4], beta[4], alpha[4]
    cdef uint64_t t0[4], t1[4], t2[4], b4[4], b8[4]
    cdef uint64_t X3[4], Y3[4], Z3[4]
    if jp_is_inf(a) or fe_is_zero(a.Y):
        jp_set_inf(r)
        return
    fe_mul(delta, a.Z, a.Z)
    fe_mul(gamma, a.Y, a.Y)
    fe_mul(beta, a.X, gamma)
    fe_sub(t0, a.X, delta)
    fe_add(t1, a.X, delta)
    fe_mul(t2, t0, t1)
    fe_add(t0, t2, t2)
    fe_add(alpha, t0, t2)
    fe_add(t0, beta, beta)
    fe_add(b4, t0, t0)
    fe_add(b8, b4, b4)
    fe_mul(t0, alpha, alpha)
    fe_sub(X3, t0, b8)
    fe_add(t0, a.Y, a.Z)
    fe_mul(t1, t0, t0)
    fe_sub(t1, t1, gamma)
    fe_sub(Z3, t1, delta)
    fe_sub(t0, b4, X3)
    fe_mul(t1, alpha, t0)
    fe_mul(t2, gamma, gamma)
    fe_add(t0, t2, t2)
    fe_add(t2, t0, t0)
    fe_add(t0, t2, t2)
    fe_sub(Y3, t1, t0)
    fe_copy(r.X, X3); fe_copy(r.Y, Y3); fe_copy(r.Z, Z3)


cdef void jac_add(JPoint* r, const JPoint* a, const JPoint* b):
    cdef uint64_t Z1Z1[4], Z2Z2[4], U1[4], U2[4], S1[4], S2[4]
    cdef uint64_t H[4], I[4], Jt[4], rr[4], V[4]
    cdef uint64_t t0[4], t1[4]
    cdef uint64_t X3[4], Y3[4], Z3[4]
    if jp_is_inf(a):
        r[0] = b[0]
        return
    if jp_is_inf(b):
        r[0] = a[0]
        return
    fe_mul(Z1Z1, a.Z, a.Z)
    fe_mul(Z2Z2, b.Z, b.Z)
    fe_mul(U1, a.X, Z2Z2)
    fe_mul(U2, b.X, Z1Z1)
    fe_mul(t0, a.Y, b.Z)
    fe_mul(S1, t0, Z2Z2)
    fe_mul(t0, b.Y, a.Z)
    fe_mul(S2, t0, Z1Z1)
    if fe_eq(U1, U2):
        if not fe_eq(S1, S2):
            jp_set_inf(r)
            return
        jac_dbl(r, a)
        return
    fe_sub(H, U2, U1)
    fe_add(t0, H, H)
    fe_mul(I, t0, t0)
    fe_mul(Jt, H, I)
    fe_sub(t0, S2, S1)
    fe_add(rr, t0, t0)
    fe_mul(V, U1, I)
    fe_mul(t0, rr, rr)
    fe_sub(t0, t0, Jt)
    fe_sub(t0, t0, V)
    fe_sub(X3, t0, V)
    fe_sub(t0, V, X3)
    fe_mul(t1, rr, t0)
    fe_mul(t0, S1, Jt)
    fe_add(t0, t0, t0)
    fe_sub(Y3, t1, t0)
    fe_add(t0, a.Z, b.Z)
    fe_mul(t1, t0, t0)
    fe_sub(t1, t1, Z1Z1)
    fe_sub(t1, t1, Z2Z2)
    fe_mul(Z3, t1, H)
    fe_copy(r.X, X3); fe_copy(r.Y, Y3); fe_copy(r.Z, Z3)


cdef void jac_add_affine(JPoint* r, const JPoint* a, const APoint* b):
    # mixed addition, implicit Z2 = 1
    cdef uint64_t Z1Z1[4], U2[4], S2[4], H[4], HH[4], I[4], Jt[4], rr[4], V[4]
    cdef uint64_t t0[4], t1[4]
    cdef uint64_t X3[4], Y3[4], Z3[4]
    if jp_is_inf(a):
        fe_copy(r.X, b.x); fe_copy(r.Y, b.y); fe_copy(r.Z, ONE_M)
        return
    fe_mul(Z1Z1, a.Z, a.Z)
    fe_mul(U2, b.x, Z1Z1)
    fe_mul(t0, b.y, a.Z)
    fe_mul(S2, t0, Z1Z1)
    if fe_eq(U2, a.X):
        if not fe_eq(S2, a.Y):
            jp_set_inf(r)
            return
        jac_dbl(r, a)
        return
    fe_sub(H, U2, a.X)
    fe_mul(HH, H, H)
    fe_add(t0, HH, HH)
    fe_add(I, t0, t0)
    fe_mul(Jt, H, I)
    fe_sub(t0, S2, a.Y)
    fe_add(rr, t0, t0)
    fe_mul(V, a.X, I)
    fe_mul(t0, rr, rr)
    fe_sub(t0, t0, Jt)
    fe_sub(t0, t0, V)
    fe_sub(X3, t0, V)
    fe_sub(t0, V, X3)
    fe_mul(t1, rr, t0)
    fe_mul(t0, a.Y, Jt)
    fe_add(t0, t0, t0)
    fe_sub(Y3, t1, t0)
    fe_add(t0, a.Z, H)
    fe_mul(t1, t0, t0)
    fe_sub(t1, t1, Z1Z1)
    fe_sub(Z3, t1, HH)
    fe_copy(r.X, X3); fe_copy(r.Y, Y3); fe_copy(r.Z, Z3)


cdef void jac_neg(JPoint* r, const JPoint* a):
    cdef uint64_t zero[4]
    fe_set_zero(zero)
    fe_copy(r.X, a.X)
    fe_sub(r.Y, zero, a.Y)
    fe_copy(r.Z, a.Z)


# ── conversions ─────────────────────────────────────────────────────────

cdef void limbs_from_int(uint64_t* r, object v):
    cdef int i
    for i in range(4):
        r[i] = <uint64_t>(v & 0xFFFFFFFFFFFFFFFF)
        v >>= 64


cdef object int_from_limbs(const uint64_t* a):
    return (int(a[3]) << 192) | (int(a[2]) << 128) | (int(a[1]) << 64) | int(a[0])


cdef void fe_from_int(uint64_t* r, object v):
    cdef uint64_t t[4]
    limbs_from_int(t, v % P)
    fe_mul(r, t, R2)


cdef object fe_to_int(const uint64_t* a):
    cdef uint64_t one[4], t[4]
    one[0] = 1; one[1] = 0; one[2] = 0; one[3] = 0
    fe_mul(t, a, one)
    return int_from_limbs(t)


cdef object jp_to_affine(const JPoint* a):
    cdef uint64_t zi[4], zi2[4], zi3[4], x[4], y[4]
    if jp_is_inf(a):
        return None
    fe_inv(zi, a.Z)
    fe_mul(zi2, zi, zi)
    fe_mul(zi3, zi2, zi)
    fe_mul(x, a.X, zi2)
    fe_mul(y, a.Y, zi3)
    return (fe_to_int(x), fe_to_int(y))


# ── precomputed tables ──────────────────────────────────────────────────

cdef APoint BASE_TABLE[64][15]   # BASE_TABLE[i][d-1] = d * 16^i * G
cdef APoint G_WINDOW[15]         # G_WINDOW[d-1]      = d * G


cdef void _normalize(APoint* out, const JPoint* a):
    cdef uint64_t zi[4], zi2[4], zi3[4]
    fe_inv(zi, a.Z)
    fe_mul(zi2, zi, zi)
    fe_mul(zi3, zi2, zi)
    fe_mul(out.x, a.X, zi2)
    fe_mul(out.y, a.Y, zi3)


cdef void _init_tables():
    cdef JPoint g, win, cur, tmp
    cdef int i, d
    fe_from_int(g.X, GX)
    fe_from_int(g.Y, GY)
    fe_copy(g.Z, ONE_M)
    win = g
    for i in range(64):
        jp_set_inf(&cur)
        for d in range(15):
            jac_add(&cur, &cur, &win)
            _normalize(&BASE_TABLE[i][d], &cur)
        for d in range(4):
            jac_dbl(&win, &win)
    jp_set_inf(&cur)
    for d in range(15):
        jac_add(&cur, &cur, &g)
        _normalize(&G_WINDOW[d], &cur)


# ── public API (matches tmisim._p256_py) ────────────────────────────────

def is_on_curve(x, y):
    cdef uint64_t xm[4], ym[4], t0[4], t1[4]
    if not (0 <= x < P and 0 <= y < P):
        return False
    fe_from_int(xm, x)
    fe_from_int(ym, y)
    fe_mul(t0, xm, xm)
    fe_mul(t0, t0, xm)          # x^3
    fe_mul(t1, THREE_M, xm)     # 3x
    fe_sub(t0, t0, t1)
    fe_add(t0, t0, B_M)         # x^3 - 3x + b
    fe_mul(t1, ym, ym)
    return bool(fe_eq(t0, t1))


def base_mult(k):
    """Return k*G in affine coordinates (None for k == 0 mod N)."""
    cdef JPoint acc
    cdef uint64_t kl[4]
    cdef int i
    cdef uint64_t d
    k %= N
    if k == 0:
        return None
    limbs_from_int(kl, k)
    jp_set_inf(&acc)
    for i in range(64):
        d = (kl[i >> 4] >> ((i & 15) << 2)) & 15
        if d:
            jac_add_affine(&acc, &acc, &BASE_TABLE[i][d - 1])
    return jp_to_affine(&acc)


cdef void _odd_multiples(JPoint* odd, object x, object y):
    # odd[j] = (2j+1) * P, j in 0..7
    cdef JPoint twice
    cdef int j
    fe_from_int(odd[0].X, x)
    fe_from_int(odd[0].Y, y)
    fe_copy(odd[0].Z, ONE_M)
    jac_dbl(&twice, &odd[0])
    for j in range(1, 8):
        jac_add(&odd[j], &odd[j - 1], &twice)


def scalar_mult(k, x, y):
    """Return k*(x, y) in affine coordinates (None for k == 0 mod N)."""
    cdef JPoint odd[8]
    cdef JPoint acc, neg
    cdef int i
    cdef long d
    k %= N
    if k == 0:
        return None
    _odd_multiples(odd, x, y)
    digits = _wnaf(k, 5)
    jp_set_inf(&acc)
    for i in range(len(digits) - 1, -1, -1):
        jac_dbl(&acc, &acc)
        d = digits[i]
        if d > 0:
            jac_add(&acc, &acc, &odd[(d - 1) >> 1])
        elif d < 0:
            jac_neg(&neg, &odd[(-d - 1) >> 1])
            jac_add(&acc, &acc, &neg)
    return jp_to_affine(&acc)


def double_base_mult(u, v, x, y):
    """Return u*G + v*(x, y) in affine coordinates, or None at infinity."""
    cdef JPoint odd[8]
    cdef JPoint acc
    cdef APoint nega
    cdef JPoint neg
    cdef uint64_t zero[4]
    cdef int i
    cdef long d
    cdef Py_ssize_t length
    u %= N
    v %= N
    if u == 0:
        return scalar_mult(v, x, y) if v else None
    if v == 0:
        return base_mult(u)
    _odd_multiples(odd, x, y)
    du = _wnaf(u, 4)
    dv = _wnaf(v, 5)
    length = max(len(du), len(dv))
    du = du + [0] * (length - len(du))
    dv = dv + [0] * (length - len(dv))
    fe_set_zero(zero)
    jp_set_inf(&acc)
    for i in range(length - 1, -1, -1):
        jac_dbl(&acc, &acc)
        d = du[i]
        if d > 0:
            jac_add_affine(&acc, &acc, &G_WINDOW[d - 1])
        elif d < 0:
            fe_copy(nega.x, G_WINDOW[-d - 1].x)
            fe_sub(nega.y, zero, G_WINDOW[-d - 1].y)
            jac_add_affine(&acc, &acc, &nega)
        d = dv[i]
        if d > 0:
            jac_add(&acc, &acc, &odd[(d - 1) >> 1])
        elif d < 0:
            jac_neg(&neg, &odd[(-d - 1) >> 1])
            jac_add(&acc, &acc, &neg)
    return jp_to_affine(&acc)


def _wnaf(k, int w):
    digits = []
    cdef long span = 1 << w
    cdef long half = 1 << (w - 1)
    cdef long d
    while k:
        if k & 1:
            d = k % span
            if d >= half:
                d -= span
            k -= d
        else:
            d = 0
        digits.append(d)
        k >>= 1
    return digits


def _module_init():
    global N0
    limbs_from_int(P_LIMBS, P)
    limbs_from_int(P_MINUS_2, P - 2)
    N0 = <uint64_t>((-pow(P, -1, 1 << 64)) % (1 << 64))
    limbs_from_int(R2, pow(1 << 256, 2, P))
    limbs_from_int(ONE_M, (1 << 256) % P)
    fe_from_int(B_M, B)
    fe_from_int(THREE_M, 3)
    _init_tables()


_module_init()

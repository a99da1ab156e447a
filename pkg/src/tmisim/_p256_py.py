"""Pure-Python NIST P-256 group arithmetic (fallback backend).

Jacobian-coordinate group law, a width-4 fixed-base table for multiples
of the generator, and width-5 wNAF for arbitrary points. Mathematically
correct but makes no attempt at constant-time execution; the compiled
kernel in ``tmisim._speedups`` is the fast path and this module is what
the package falls back to when that extension is unavailable.

Points cross this API as affine ``(x, y)`` integer pairs; ``None``
stands for the point at infinity (callers in this package never feed
scalars that produce it, but the edge case is handled).
"""

BACKEND = "pure"

P = 0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF
N = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551
B = 0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B
GX = 0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296
GY = 0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5

_INF = (0, 1, 0)  # Jacobian point at infinity (Z == 0)


def is_on_curve(x, y):
    if not (0 <= x < P and 0 <= y < P):
        return False
    return (y * y - (x * x * x - 3 * x + B)) % P == 0


# ── Jacobian group law (a = -3 formulas) ────────────────────────────────

def _dbl(X1, Y1, Z1):
    if Z1 == 0 or Y1 == 0:
        return _INF
    delta = Z1 * Z1 % P
    gamma = Y1 * Y1 % P
    beta = X1 * gamma % P
    alpha = 3 * (X1 - delta) * (X1 + delta) % P
    X3 = (alpha * alpha - 8 * beta) % P
    Z3 = ((Y1 + Z1) * (Y1 + Z1) - gamma - delta) % P
    Y3 = (alpha * (4 * beta - X3) - 8 * gamma * gamma) % P
    return X3, Y3, Z3


def _add(X1, Y1, Z1, X2, Y2, Z2):
    if Z1 == 0:
        return X2, Y2, Z2
    if Z2 == 0:
        return X1, Y1, Z1
    Z1Z1 = Z1 * Z1 % P
    Z2Z2 = Z2 * Z2 % P
    U1 = X1 * Z2Z2 % P
    U2 = X2 * Z1Z1 % P
    S1 = Y1 * Z2 * Z2Z2 % P
    S2 = Y2 * Z1 * Z1Z1 % P
    if U1 == U2:
        if S1 != S2:
            return _INF
        return _dbl(X1, Y1, Z1)
    H = (U2 - U1) % P
    I = 4 * H * H % P
    J = H * I % P
    r = 2 * (S2 - S1) % P
    V = U1 * I % P
    X3 = (r * r - J - 2 * V) % P
    Y3 = (r * (V - X3) - 2 * S1 * J) % P
    Z3 = ((Z1 + Z2) * (Z1 + Z2) - Z1Z1 - Z2Z2) * H % P
    return X3, Y3, Z3


def _add_mixed(X1, Y1, Z1, x2, y2):
    # Z2 == 1
    if Z1 == 0:
        return x2, y2, 1
    Z1Z1 = Z1 * Z1 % P
    U2 = x2 * Z1Z1 % P
    S2 = y2 * Z1 * Z1Z1 % P
    if U2 == X1:
        if S2 != Y1:
            return _INF
        return _dbl(X1, Y1, Z1)
    H = (U2 - X1) % P
    HH = H * H % P
    I = 4 * HH % P
    J = H * I % P
    r = 2 * (S2 - Y1) % P
    V = X1 * I % P
    X3 = (r * r - J - 2 * V) % P
    Y3 = (r * (V - X3) - 2 * Y1 * J) % P
    Z3 = ((Z1 + H) * (Z1 + H) - Z1Z1 - HH) % P
    return X3, Y3, Z3


def _to_affine(X, Y, Z):
    if Z == 0:
        return None
    zi = pow(Z, P - 2, P)
    zi2 = zi * zi % P
    return X * zi2 % P, Y * zi2 * zi % P


# ── Fixed-base table: 64 windows of 4 bits, entries in affine form ──────

_table = None


def _build_table():
    rows_jac = []
    win = (GX, GY, 1)
    for _ in range(64):
        row = []
        cur = _INF
        for _ in range(15):
            cur = _add(cur[0], cur[1], cur[2], win[0], win[1], win[2])
            row.append(cur)
        rows_jac.append(row)
        for _ in range(4):
            win = _dbl(*win)
    # batch-invert all Z coordinates (Montgomery trick)
    flat = [pt for row in rows_jac for pt in row]
    zs = [pt[2] for pt in flat]
    prefix = [1] * (len(zs) + 1)
    for i, z in enumerate(zs):
        prefix[i + 1] = prefix[i] * z % P
    inv_all = pow(prefix[-1], P - 2, P)
    invs = [0] * len(zs)
    for i in range(len(zs) - 1, -1, -1):
        invs[i] = prefix[i] * inv_all % P
        inv_all = inv_all * zs[i] % P
    affine = []
    for (X, Y, Z), zi in zip(flat, invs):
        zi2 = zi * zi % P
        affine.append((X * zi2 % P, Y * zi2 * zi % P))
    return [affine[i * 15:(i + 1) * 15] for i in range(64)]


def _get_table():
    global _table
    if _table is None:
        _table = _build_table()
    return _table


def base_mult(k):
    """Return k*G in affine coordinates (None for k == 0 mod N)."""
    k %= N
    if k == 0:
        return None
    table = _get_table()
    acc = _INF
    i = 0
    while k:
        d = k & 15
        if d:
            px, py = table[i][d - 1]
            acc = _add_mixed(acc[0], acc[1], acc[2], px, py)
        k >>= 4
        i += 1
    return _to_affine(*acc)


# ── General scalar multiplication: width-5 wNAF ─────────────────────────

def _wnaf(k, w):
    digits = []
    span = 1 << w
    half = 1 << (w - 1)
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


def _odd_multiples(x, y):
    # 1P, 3P, ..., 15P in Jacobian form
    twice = _dbl(x, y, 1)
    odd = [(x, y, 1)]
    for _ in range(7):
        prev = odd[-1]
        odd.append(_add(prev[0], prev[1], prev[2], twice[0], twice[1], twice[2]))
    return odd


def scalar_mult(k, x, y):
    """Return k*(x, y) in affine coordinates (None for k == 0 mod N)."""
    k %= N
    if k == 0:
        return None
    odd = _odd_multiples(x, y)
    acc = _INF
    for d in reversed(_wnaf(k, 5)):
        acc = _dbl(*acc)
        if d > 0:
            q = odd[(d - 1) >> 1]
            acc = _add(acc[0], acc[1], acc[2], q[0], q[1], q[2])
        elif d < 0:
            q = odd[(-d - 1) >> 1]
            acc = _add(acc[0], acc[1], acc[2], q[0], P - q[1], q[2])
    return _to_affine(*acc)


def double_base_mult(u, v, x, y):
    """Return u*G + v*(x, y) in affine coordinates, or None at infinity.

    Interleaved wNAF: one shared doubling chain, used by signature
    verification where this saves roughly half the work.
    """
    u %= N
    v %= N
    if u == 0:
        return scalar_mult(v, x, y) if v else None
    if v == 0:
        return base_mult(u)
    odd_g = _odd_multiples(GX, GY)
    odd_p = _odd_multiples(x, y)
    du = _wnaf(u, 5)
    dv = _wnaf(v, 5)
    length = max(len(du), len(dv))
    du += [0] * (length - len(du))
    dv += [0] * (length - len(dv))
    acc = _INF
    for i in range(length - 1, -1, -1):
        acc = _dbl(*acc)
        for d, odd in ((du[i], odd_g), (dv[i], odd_p)):
            if d > 0:
                q = odd[(d - 1) >> 1]
                acc = _add(acc[0], acc[1], acc[2], q[0], q[1], q[2])
            elif d < 0:
                q = odd[(-d - 1) >> 1]
                acc = _add(acc[0], acc[1], acc[2], q[0], P - q[1], q[2])
    return _to_affine(*acc)

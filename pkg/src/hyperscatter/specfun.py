r"""Cylinder functions of small integer order.

Provides :math:`J_n`, :math:`Y_n` for :math:`n = 0, 1, 2, 3`, the modified
functions :math:`I_0, I_1, K_0, K_1` and :math:`H^{(1)}_n = J_n + iY_n`.

Evaluation regimes for :math:`J_n, Y_n`:

* ``x < 2``: ascending series (DLMF 10.2.2 and 10.8.1), every order directly.
* ``2 <= x < 25``: Miller backward recurrence for :math:`J_k` normalised by
  :math:`J_0 + 2\sum_k J_{2k} = 1`; :math:`Y_0` from the Neumann series
  :math:`\tfrac{\pi}{2}Y_0 = (\ln\tfrac{x}{2}+\gamma)J_0 - 2\sum_k (-1)^k J_{2k}/k`
  and :math:`Y_1` from its derivative; :math:`Y_2, Y_3` by upward recurrence.
* ``x >= 25``: Hankel asymptotic expansion, truncated at the smallest term.

All functions accept a float or an array-like and return the same shape.
"""

import math

import numpy as np

EULER_GAMMA = 0.57721566490153286061
ORDERS = (0, 1, 2, 3)

_SERIES_MAX = 2.0
_ASYMP_MIN = 25.0
_TINY = 1e-17


def _check_order(order):
    if order not in ORDERS:
        raise ValueError(f"order must be one of {ORDERS}, got {order!r}")


def _vectorize(func, x):
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return func(float(arr))
    out = np.empty(arr.shape, dtype=np.result_type(func(1.0), float))
    flat = out.reshape(-1)
    for i, xi in enumerate(arr.reshape(-1)):
        flat[i] = func(float(xi))
    return out


# --- J and Y -----------------------------------------------------------------

def _j_series(n, x):
    h = 0.5 * x
    term = h**n / math.factorial(n)
    total = term
    y = -h * h
    k = 0
    while True:
        k += 1
        term *= y / (k * (k + n))
        total += term
        if abs(term) <= _TINY * abs(total):
            return total


def _y_series(n, x, jn):
    h = 0.5 * x
    y = h * h
    finite = 0.0
    if n > 0:
        term = math.factorial(n - 1)
        for k in range(n):
            if k > 0:
                term *= y / (k * (n - k))
            finite += term
        finite *= -(h ** -n) / math.pi
    # psi(k+1) + psi(n+k+1), with psi(m+1) = -gamma + H_m
    hk = 0.0
    hnk = sum(1.0 / j for j in range(1, n + 1))
    term = 1.0 / math.factorial(n)
    inf_sum = term * (hk + hnk - 2 * EULER_GAMMA)
    k = 0
    while True:
        k += 1
        hk += 1.0 / k
        hnk += 1.0 / (n + k)
        term *= -y / (k * (n + k))
        add = term * (hk + hnk - 2 * EULER_GAMMA)
        inf_sum += add
        if abs(add) <= _TINY * abs(inf_sum):
            break
    return finite + (2 / math.pi) * math.log(h) * jn - (h**n / math.pi) * inf_sum


def _jy_series(x):
    j = [_j_series(n, x) for n in ORDERS]
    y = [_y_series(n, x, j[n]) for n in ORDERS]
    return j, y


def _jy_miller(x):
    top = 2 * ((int(x) + 30 + int(math.sqrt(40.0 * x))) // 2)
    vals = [0.0] * (top + 2)
    vals[top] = 1.0
    for k in range(top, 0, -1):
        vals[k - 1] = (2.0 * k / x) * vals[k] - vals[k + 1]
        if abs(vals[k - 1]) > 1e250:
            for i in range(k - 1, top + 1):
                vals[i] *= 1e-250
    norm = vals[0] + 2.0 * sum(vals[2:top + 1:2])
    jk = [v / norm for v in vals[:top + 1]]

    lg = math.log(0.5 * x) + EULER_GAMMA
    s0 = 0.0
    s1 = 0.0
    for k in range(1, top // 2):
        sign = -1.0 if k % 2 else 1.0
        s0 += sign * jk[2 * k] / k
        s1 += sign * (jk[2 * k - 1] - jk[2 * k + 1]) / k
    y0 = (2 / math.pi) * (lg * jk[0] - 2.0 * s0)
    y1 = (2 / math.pi) * (lg * jk[1] - jk[0] / x + s1)
    y2 = (2.0 / x) * y1 - y0
    y3 = (4.0 / x) * y2 - y1
    return jk[:4], [y0, y1, y2, y3]


def _hankel_pq(n, x):
    mu = 4.0 * n * n
    p = 1.0
    q = 0.0
    term = 1.0
    prev = math.inf
    k = 0
    while True:
        k += 1
        term *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        size = abs(term)
        if size > prev or k > 200:
            break
        if k % 4 == 1:
            q += term
        elif k % 4 == 2:
            p -= term
        elif k % 4 == 3:
            q -= term
        else:
            p += term
        if size < _TINY:
            break
        prev = size
    return p, q


def _jy_asymptotic(x):
    amp = math.sqrt(2.0 / (math.pi * x))
    j = []
    y = []
    for n in ORDERS:
        p, q = _hankel_pq(n, x)
        chi = x - (0.5 * n + 0.25) * math.pi
        c, s = math.cos(chi), math.sin(chi)
        j.append(amp * (p * c - q * s))
        y.append(amp * (p * s + q * c))
    return j, y


def _jy_all(x):
    """Return ([J0..J3], [Y0..Y3]) at ``x > 0``."""
    if x < _SERIES_MAX:
        return _jy_series(x)
    if x < _ASYMP_MIN:
        return _jy_miller(x)
    return _jy_asymptotic(x)


def _bessel_j_scalar(order, x):
    if x < 0:
        raise ValueError(f"bessel_j requires x >= 0, got {x}")
    if x == 0:
        return 1.0 if order == 0 else 0.0
    if x < _SERIES_MAX:
        return _j_series(order, x)
    return _jy_all(x)[0][order]


def _bessel_y_scalar(order, x):
    if not x > 0:
        raise ValueError(f"bessel_y requires x > 0, got {x}")
    return _jy_all(x)[1][order]


def bessel_j(order, x):
    """Bessel function of the first kind :math:`J_n(x)`, ``n`` in 0..3, ``x >= 0``."""
    _check_order(order)
    return _vectorize(lambda t: _bessel_j_scalar(order, t), x)


def bessel_y(order, x):
    """Bessel function of the second kind :math:`Y_n(x)`, ``n`` in 0..3, ``x > 0``."""
    _check_order(order)
    return _vectorize(lambda t: _bessel_y_scalar(order, t), x)


def hankel1(order, x):
    r""":math:`H^{(1)}_n(x) = J_n(x) + iY_n(x)`."""
    _check_order(order)

    def h(t):
        if not t > 0:
            raise ValueError(f"hankel1 requires x > 0, got {t}")
        j, y = _jy_all(t)
        return complex(j[order], y[order])

    return _vectorize(h, x)


def bessel_jy_derivatives(order, x):
    """Return ``(J_n, Y_n, J_n', Y_n')`` at scalar ``x > 0``.

    Uses :math:`C_0' = -C_1` and :math:`C_n' = C_{n-1} - (n/x) C_n`.
    """
    _check_order(order)
    if not x > 0:
        raise ValueError(f"x must be positive, got {x}")
    j, y = _jy_all(float(x))
    if order == 0:
        return j[0], y[0], -j[1], -y[1]
    return (j[order], y[order],
            j[order - 1] - order / x * j[order],
            y[order - 1] - order / x * y[order])


# --- modified functions ------------------------------------------------------

def _i_series(n, x):
    h = 0.5 * x
    y = h * h
    term = h**n / math.factorial(n)
    total = term
    k = 0
    while True:
        k += 1
        term *= y / (k * (k + n))
        total += term
        if term <= _TINY * total:
            return total


def _i_asymptotic(n, x):
    mu = 4.0 * n * n
    total = 1.0
    term = 1.0
    prev = math.inf
    k = 0
    while k < 200:
        k += 1
        term *= -(mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(term) > prev:
            break
        total += term
        prev = abs(term)
        if prev < _TINY:
            break
    return math.exp(x) / math.sqrt(2 * math.pi * x) * total


def _bessel_i_scalar(n, x):
    if x < 0:
        raise ValueError(f"modified Bessel I requires x >= 0, got {x}")
    if x <= 30.0:
        return _i_series(n, x)
    return _i_asymptotic(n, x)


def _k_series(n, x):
    # DLMF 10.31.2 (n = 0) and 10.31.1 (n = 1)
    h = 0.5 * x
    y = h * h
    lg = math.log(h)
    if n == 0:
        total = 0.0
        term = 1.0
        hk = 0.0
        k = 0
        while True:
            k += 1
            hk += 1.0 / k
            term *= y / (k * k)
            add = term * hk
            total += add
            if add <= _TINY * abs(total):
                break
        return -(lg + EULER_GAMMA) * _i_series(0, x) + total
    # n == 1
    term = h
    hk = 0.0
    hk1 = 1.0
    s = term * (hk + hk1 - 2 * EULER_GAMMA)
    k = 0
    while True:
        k += 1
        hk += 1.0 / k
        hk1 += 1.0 / (k + 1)
        term *= y / (k * (k + 1))
        add = term * (hk + hk1 - 2 * EULER_GAMMA)
        s += add
        if abs(add) <= _TINY * abs(s):
            break
    return 1.0 / x + lg * _i_series(1, x) - 0.5 * s


def _k_trapezoid(n, x):
    # K_n(x) = int_0^inf cosh(n t) exp(-x cosh t) dt; the trapezoid rule
    # converges like exp(-pi^2 / h) for this integrand.
    h = 0.125 * min(1.0, 2.0 / math.sqrt(x))
    total = 0.5
    t = 0.0
    while True:
        t += h
        expo = x * (math.cosh(t) - 1.0)
        if expo > 45.0:
            break
        total += math.cosh(n * t) * math.exp(-expo)
    return h * total * math.exp(-x)


def _k_asymptotic(n, x):
    mu = 4.0 * n * n
    total = 1.0
    term = 1.0
    prev = math.inf
    k = 0
    while k < 200:
        k += 1
        term *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(term) > prev:
            break
        total += term
        prev = abs(term)
        if prev < _TINY:
            break
    return math.sqrt(math.pi / (2 * x)) * math.exp(-x) * total


def _bessel_k_scalar(n, x):
    if not x > 0:
        raise ValueError(f"modified Bessel K requires x > 0, got {x}")
    if x <= 2.0:
        return _k_series(n, x)
    if x <= 30.0:
        return _k_trapezoid(n, x)
    return _k_asymptotic(n, x)


def bessel_i0(x):
    """Modified Bessel function :math:`I_0(x)`, ``x >= 0``."""
    return _vectorize(lambda t: _bessel_i_scalar(0, t), x)


def bessel_i1(x):
    """Modified Bessel function :math:`I_1(x)`, ``x >= 0``."""
    return _vectorize(lambda t: _bessel_i_scalar(1, t), x)


def bessel_k0(x):
    """Modified Bessel function :math:`K_0(x)`, ``x > 0``."""
    return _vectorize(lambda t: _bessel_k_scalar(0, t), x)


def bessel_k1(x):
    """Modified Bessel function :math:`K_1(x)`, ``x > 0``."""
    return _vectorize(lambda t: _bessel_k_scalar(1, t), x)

"""Pure-Python kernels.

This module mirrors ``_core.pyx`` function for function and is used when the
compiled extension is unavailable (or when ``ANYTIME_CS_PURE=1``).  Keep the two
in lockstep: the backend parity tests compare them on shared grids.
"""

import math

from ._errors import ConvergenceError, DomainError

EPS = 2.220446049250313e-16
FPMIN = 1e-300
LOG_2PI = math.log(2.0 * math.pi)
INV_E = math.exp(-1.0)
INF = math.inf

KIND_NORMAL2 = 0
KIND_NORMAL1 = 1
KIND_BETABINOM2 = 2
KIND_BETABINOM1 = 3
KIND_GAMMAEXP = 4
KIND_GAMMAPOISSON = 5

ROOT_MAX_ITER = 400

# B_{2j} / (2j)! for j = 1..10
_EM_COEF = (
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
    43867.0 / 5109094217170944000.0,
    -174611.0 / 802857662698291200000.0,
)


# ---------------------------------------------------------------- helpers

def _log1pmx(d):
    """log(1 + d) - d without cancellation near 0."""
    if abs(d) < 0.1:
        term = d
        total = 0.0
        k = 2
        while True:
            term *= -d
            inc = term / k
            total += inc
            if abs(inc) <= EPS * abs(total):
                break
            k += 1
        return total
    return math.log1p(d) - d


def _stirlerr(a):
    """lgamma(a) minus its Stirling approximation."""
    if a >= 15.0:
        r = 1.0 / a
        r2 = r * r
        return r * (1.0 / 12 - r2 * (1.0 / 360 - r2 * (1.0 / 1260 - r2 * (1.0 / 1680 - r2 / 1188))))
    return math.lgamma(a) - (a - 0.5) * math.log(a) + a - 0.5 * LOG_2PI


def _lbeta(a, b):
    if a >= 10.0 and b >= 10.0:
        ab = a + b
        return (0.5 * LOG_2PI + a * math.log(a / ab) + b * math.log(b / ab)
                + 0.5 * (math.log(ab) - math.log(a) - math.log(b))
                + _stirlerr(a) + _stirlerr(b) - _stirlerr(ab))
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _log_gamma_pref(a, x):
    """log(x**a * exp(-x) / Gamma(a)), accurate when x is close to a."""
    if x == 0.0:
        return -INF
    if a < 10.0 or not 0.5 * a < x < 2.0 * a:
        return a * math.log(x) - x - math.lgamma(a)
    return 0.5 * (math.log(a) - LOG_2PI) - _stirlerr(a) + a * _log1pmx((x - a) / a)


def _gamma_series(a, x, max_iter):
    # sum_n x^n / ((a+1)...(a+n)); P(a,x) = pref / a * sum
    term = 1.0
    total = 1.0
    for n in range(1, max_iter + 1):
        term *= x / (a + n)
        total += term
        if term < total * EPS * 0.5:
            return total
    raise ConvergenceError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _gamma_cf(a, x, max_iter):
    # Lentz continued fraction; Q(a,x) = pref * result
    b = x + 1.0 - a
    c = 1.0 / FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, max_iter + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < FPMIN:
            d = FPMIN
        c = b + an / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return h
    raise ConvergenceError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def _check_gamma_args(a, x):
    if not (a > 0.0) or math.isinf(a):
        raise DomainError(f"incomplete gamma needs finite a > 0, got {a}")
    if not (x >= 0.0):
        raise DomainError(f"incomplete gamma needs x >= 0, got {x}")


def _log_lower_ratio(a, x, max_iter):
    """log P(a,x) - log_gamma_pref(a,x)."""
    if x < a + 1.0:
        return math.log(_gamma_series(a, x, max_iter) / a)
    lp = _log_gamma_pref(a, x)
    h = _gamma_cf(a, x, max_iter)
    return math.log1p(-math.exp(lp) * h) - lp


def _log_upper_ratio(a, x, max_iter):
    """log Q(a,x) - log_gamma_pref(a,x)."""
    if x >= a + 1.0:
        return math.log(_gamma_cf(a, x, max_iter))
    lp = _log_gamma_pref(a, x)
    s = _gamma_series(a, x, max_iter)
    return math.log1p(-math.exp(lp) * s / a) - lp


# ---------------------------------------------------------------- specials

def reg_lower_inc_gamma(a, x, max_iter=1000000):
    _check_gamma_args(a, x)
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    lp = _log_gamma_pref(a, x)
    if x < a + 1.0:
        return min(1.0, math.exp(lp) * _gamma_series(a, x, max_iter) / a)
    return max(0.0, 1.0 - math.exp(lp) * _gamma_cf(a, x, max_iter))


def reg_upper_inc_gamma(a, x, max_iter=1000000):
    _check_gamma_args(a, x)
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    lp = _log_gamma_pref(a, x)
    if x >= a + 1.0:
        return min(1.0, math.exp(lp) * _gamma_cf(a, x, max_iter))
    return max(0.0, 1.0 - math.exp(lp) * _gamma_series(a, x, max_iter) / a)


def _beta_cf(a, b, x, max_iter):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < FPMIN:
        d = FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return h
    raise ConvergenceError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def log_inc_beta(x, a, b, max_iter=1000000):
    """log of the non-regularized incomplete beta integral B_x(a, b)."""
    if not (a > 0.0 and b > 0.0) or math.isinf(a) or math.isinf(b):
        raise DomainError(f"incomplete beta needs finite a, b > 0, got a={a}, b={b}")
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"incomplete beta needs 0 <= x <= 1, got {x}")
    if x == 0.0:
        return -INF
    lb = _lbeta(a, b)
    if x == 1.0:
        return lb
    if x < (a + 1.0) / (a + b + 2.0):
        return a * math.log(x) + b * math.log1p(-x) + math.log(_beta_cf(a, b, x, max_iter)) - math.log(a)
    y = 1.0 - x
    log_comp = (b * math.log(y) + a * math.log(x) + math.log(_beta_cf(b, a, y, max_iter))
                - math.log(b) - lb)
    return lb + math.log1p(-math.exp(log_comp))


def lambert_w_m1(x):
    if not (-INV_E <= x < 0.0) or math.isnan(x):
        raise DomainError(f"lambert_w_m1 needs -1/e <= x < 0, got {x}")
    q = 1.0 + math.e * x
    if q <= 0.0:
        return -1.0
    if q < 0.3:
        # branch-point expansion, then Halley on w e^w - x
        p = -math.sqrt(2.0 * q)
        w = -1.0 + p * (1.0 + p * (-1.0 / 3 + p * (11.0 / 72 - p * 43.0 / 540)))
        for _ in range(100):
            ew = math.exp(w)
            f = w * ew - x
            wp1 = w + 1.0
            if wp1 == 0.0:
                break
            dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
            w -= dw
            if abs(dw) <= 4.0 * EPS * abs(w):
                break
        return min(w, -1.0)
    # log form: w + log(-w) = log(-x), far from the branch point
    lx = math.log(-x)
    w = lx - math.log(-lx)
    w = w + math.log(-lx) / lx
    for _ in range(100):
        g = w + math.log(-w) - lx
        g1 = 1.0 + 1.0 / w
        g2 = -1.0 / (w * w)
        dw = g / (g1 - 0.5 * g * g2 / g1)
        w -= dw
        if abs(dw) <= 4.0 * EPS * abs(w):
            break
    return w


def norm_cdf(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def log_norm_cdf(x):
    if x > 0.0:
        return math.log1p(-0.5 * math.erfc(x / math.sqrt(2.0)))
    if x > -30.0:
        return math.log(0.5 * math.erfc(-x / math.sqrt(2.0)))
    z = 1.0 / (x * x)
    series = 1.0 - z * (1.0 - z * (3.0 - z * (15.0 - z * 105.0)))
    return -0.5 * x * x - math.log(-x) - 0.5 * LOG_2PI + math.log(series)


def hurwitz_zeta(s, q):
    """sum_{k>=0} (q+k)^(-s) by Euler-Maclaurin with ten correction terms."""
    if not (s > 1.0):
        raise DomainError(f"zeta needs s > 1, got {s}")
    if not (q > 0.0):
        raise DomainError(f"hurwitz zeta needs q > 0, got {q}")
    n = 20
    total = 0.0
    for k in range(n):
        total += (q + k) ** (-s)
    a = q + n
    total += a ** (1.0 - s) / (s - 1.0) + 0.5 * a ** (-s)
    poch = s
    apow = a ** (-s - 1.0)
    inv_a2 = 1.0 / (a * a)
    for j in range(10):
        total += _EM_COEF[j] * poch * apow
        poch *= (s + 2 * j + 1) * (s + 2 * j + 2)
        apow *= inv_a2
    return total


# ---------------------------------------------------------------- mixtures

def log_mixture(kind, s, v, p0, p1, p2):
    """log m(s, v) for a conjugate mixture kind; NaN marks an invalid input.

    Parameters by kind: normal (rho, -, -); beta-binomial (g, h, r) with
    r = rho - g*h; gamma (rho, c, -).
    """
    if kind == KIND_NORMAL2 or kind == KIND_NORMAL1:
        vr = v + p0
        out = 0.5 * math.log(p0 / vr) + s * s / (2.0 * vr)
        if kind == KIND_NORMAL1:
            out += math.log(2.0) + log_norm_cdf(s / math.sqrt(vr))
        return out
    if kind == KIND_BETABINOM2 or kind == KIND_BETABINOM1:
        g, h, r = p0, p1, p2
        gph = g + h
        a1 = (r + v - g * s) / (g * gph)
        b1 = (r + v + h * s) / (h * gph)
        if a1 <= 0.0 or b1 <= 0.0:
            return INF
        a0 = r / (g * gph)
        b0 = r / (h * gph)
        pre = v / (g * h) * math.log(gph) - ((v / h + s) * math.log(g) + (v / g - s) * math.log(h)) / gph
        if kind == KIND_BETABINOM2:
            return pre + _lbeta(a1, b1) - _lbeta(a0, b0)
        xb = h / gph
        return pre + log_inc_beta(xb, a1, b1) - log_inc_beta(xb, a0, b0)
    if kind == KIND_GAMMAEXP or kind == KIND_GAMMAPOISSON:
        rho, c = p0, p1
        c2 = c * c
        a = (v + rho) / c2
        shift = a + s / c
        a0 = rho / c2
        if not (shift > 0.0):
            return math.nan
        if kind == KIND_GAMMAEXP:
            return _log_lower_ratio(a, shift, 10000000) - _log_lower_ratio(a0, a0, 10000000)
        return _log_upper_ratio(shift, a, 10000000) - _log_upper_ratio(a0, a0, 10000000)
    raise DomainError(f"unknown mixture kind {kind}")


def log_mixture_batch(kind, p0, p1, p2, s_arr, v_arr, out):
    for i in range(len(out)):
        out[i] = log_mixture(kind, s_arr[i], v_arr[i], p0, p1, p2)
    return out


def discrete_log_m(lam, logw, psik, n, s, v):
    best = -INF
    for k in range(n):
        e = logw[k] + lam[k] * s - psik[k] * v
        if e > best:
            best = e
    if best == -INF:
        return -INF
    total = 0.0
    for k in range(n):
        total += math.exp(logw[k] + lam[k] * s - psik[k] * v - best)
    return best + math.log(total)


def _bracket_solve(f, v, log_thr, bbar):
    """Smallest s >= 0 with f(s) >= 0, for f increasing with f(0) < 0."""
    lo = 0.0
    flo = f(0.0)
    if math.isnan(flo):
        raise DomainError(f"mixture undefined at s=0, v={v}")
    if flo >= 0.0:
        return 0.0
    if bbar < INF:
        hi = bbar * v
        fhi = f(hi)
        if fhi < 0.0:
            return hi
    else:
        hi = math.sqrt(2.0 * v * log_thr)
        if hi <= 0.0:
            hi = 1.0
        fhi = f(hi)
        n = 0
        while fhi < 0.0:
            lo, flo = hi, fhi
            hi *= 2.0
            fhi = f(hi)
            n += 1
            if n > 2000 or math.isinf(hi):
                raise ConvergenceError(f"could not bracket boundary root at v={v}: f({hi})={fhi}")
    side = 0
    for _ in range(ROOT_MAX_ITER):
        if math.isinf(fhi) or math.isinf(flo):
            s = 0.5 * (lo + hi)
        else:
            s = hi - fhi * (hi - lo) / (fhi - flo)
            if not (lo < s < hi):
                s = 0.5 * (lo + hi)
        fs = f(s)
        if math.isnan(fs):
            raise ConvergenceError(f"mixture evaluated to NaN at s={s}, v={v}")
        if abs(fs) <= 1e-13:
            return s
        if fs < 0.0:
            lo, flo = s, fs
            if side == -1:
                fhi *= 0.5
            side = -1
        else:
            hi, fhi = s, fs
            if side == 1:
                flo *= 0.5
            side = 1
        if hi - lo <= 4.0 * EPS * hi:
            return hi
    raise ConvergenceError(f"boundary root-finding did not converge at v={v}: bracket [{lo}, {hi}]")


def mixture_root(kind, p0, p1, p2, v, log_thr, bbar):
    return _bracket_solve(lambda s: log_mixture(kind, s, v, p0, p1, p2) - log_thr, v, log_thr, bbar)


def mixture_root_batch(kind, p0, p1, p2, v_arr, log_thr, bbar, out):
    for i in range(len(out)):
        out[i] = mixture_root(kind, p0, p1, p2, v_arr[i], log_thr, bbar)
    return out


def discrete_root_batch(lam, logw, psik, nterms, v_arr, log_thr, bbar, out):
    for i in range(len(out)):
        v = v_arr[i]
        n = nterms[i]
        out[i] = _bracket_solve(lambda s: discrete_log_m(lam, logw, psik, n, s, v) - log_thr,
                                v, log_thr, bbar)
    return out


# ---------------------------------------------------------------- beta-binomial CS

def _bb_excluded(mu, sum_x, t, a, b, rho, rho_rel, mode, thr1, thr2):
    g = mu - a
    h = b - mu
    gh = g * h
    V = gh * t
    S = sum_x - t * mu
    r = rho * gh - gh if rho_rel else rho - gh
    if not (r > 0.0):
        raise DomainError(f"beta-binomial mixture needs rho > g*h (mu={mu})")
    if mode == 0:
        return log_mixture(KIND_BETABINOM2, S, V, g, h, r) >= thr1
    if log_mixture(KIND_BETABINOM1, S, V, g, h, r) >= thr1:
        return True
    return log_mixture(KIND_BETABINOM1, -S, V, h, g, r) >= thr2


def betabinom_interval(sum_x, t, a, b, rho, rho_rel, mode, thr1, thr2, ngrid):
    """Endpoints of {mu in [a,b]: mixture test accepts mu}.

    mode 0 uses the two-sided mixture against thr1; mode 1 uses a pair of
    one-sided mixtures (upper deviations vs thr1, lower vs thr2).
    """
    if t == 0:
        return a, b
    width = b - a
    tol = 1e-12 * width * t
    at_a = sum_x <= t * a + tol
    at_b = sum_x >= t * b - tol
    if at_a and at_b:
        raise DomainError("degenerate support")

    def excluded(mu):
        if mu <= a:
            return not at_a
        if mu >= b:
            return not at_b
        return _bb_excluded(mu, sum_x, t, a, b, rho, rho_rel, mode, thr1, thr2)

    xbar = min(max(sum_x / t, a), b)
    grid = [a + width * (i + 0.5) / ngrid for i in range(ngrid)]
    inc = [not excluded(mu) for mu in grid]
    lo_in = hi_in = xbar
    for i in range(ngrid):
        if inc[i]:
            lo_in = min(lo_in, grid[i])
            break
    for i in range(ngrid - 1, -1, -1):
        if inc[i]:
            hi_in = max(hi_in, grid[i])
            break
    # largest excluded grid point below lo_in, else a
    lo_out = a
    for i in range(ngrid):
        if grid[i] < lo_in and not inc[i]:
            lo_out = grid[i]
    hi_out = b
    for i in range(ngrid - 1, -1, -1):
        if grid[i] > hi_in and not inc[i]:
            hi_out = grid[i]
    if lo_out == a and not excluded(a):
        lower = a
    else:
        x0, x1 = lo_out, lo_in
        for _ in range(60):
            mid = 0.5 * (x0 + x1)
            if mid <= x0 or mid >= x1:
                break
            if excluded(mid):
                x0 = mid
            else:
                x1 = mid
        lower = x0
    if hi_out == b and not excluded(b):
        upper = b
    else:
        x0, x1 = hi_in, hi_out
        for _ in range(60):
            mid = 0.5 * (x0 + x1)
            if mid <= x0 or mid >= x1:
                break
            if excluded(mid):
                x1 = mid
            else:
                x0 = mid
        upper = x1
    return lower, upper

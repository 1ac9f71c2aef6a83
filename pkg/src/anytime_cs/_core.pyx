# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels.  Algorithmically identical to ``_pycore``."""

from libc.math cimport log, log1p, exp, sqrt, fabs, erfc, pow, isnan, isinf
from libc.stdlib cimport malloc, free

import numpy as np

from ._errors import ConvergenceError, DomainError

cdef extern from "math.h" nogil:
    double lgamma_r(double x, int *signp)

cdef double EPS = 2.220446049250313e-16
cdef double FPMIN = 1e-300
cdef double LOG_2PI = 1.8378770664093453
cdef double INV_E = 0.36787944117144233
cdef double E_CONST = 2.718281828459045
cdef double INF = float("inf")
cdef double NAN_ = float("nan")

cdef enum:
    OK = 0
    ERR_CONV = 1
    ERR_DOMAIN = 2

cdef enum:
    K_NORMAL2 = 0
    K_NORMAL1 = 1
    K_BB2 = 2
    K_BB1 = 3
    K_GE = 4
    K_GP = 5
    K_DISCRETE = 6

cdef int ROOT_MAX_ITER = 400
cdef long SPECIAL_MAX_ITER = 10000000

cdef double[10] EM_COEF
EM_COEF[:] = [
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
]

KIND_NORMAL2 = K_NORMAL2
KIND_NORMAL1 = K_NORMAL1
KIND_BETABINOM2 = K_BB2
KIND_BETABINOM1 = K_BB1
KIND_GAMMAEXP = K_GE
KIND_GAMMAPOISSON = K_GP


cdef void _raise(int err, str what) except *:
    if err == ERR_CONV:
        raise ConvergenceError(what + " did not converge")
    if err == ERR_DOMAIN:
        raise DomainError(what + ": argument outside the domain")


# ---------------------------------------------------------------- helpers

cdef inline double _lgamma(double x) noexcept nogil:
    cdef int sign
    return lgamma_r(x, &sign)


cdef double _log1pmx(double d) noexcept nogil:
    cdef double term, total, inc
    cdef int k
    if fabs(d) < 0.1:
        term = d
        total = 0.0
        k = 2
        while True:
            term *= -d
            inc = term / k
            total += inc
            if fabs(inc) <= EPS * fabs(total):
                break
            k += 1
        return total
    return log1p(d) - d


cdef double _stirlerr(double a) noexcept nogil:
    cdef double r, r2
    if a >= 15.0:
        r = 1.0 / a
        r2 = r * r
        return r * (1.0 / 12 - r2 * (1.0 / 360 - r2 * (1.0 / 1260 - r2 * (1.0 / 1680 - r2 / 1188))))
    return _lgamma(a) - (a - 0.5) * log(a) + a - 0.5 * LOG_2PI


cdef double _lbeta(double a, double b) noexcept nogil:
    cdef double ab
    if a >= 10.0 and b >= 10.0:
        ab = a + b
        return (0.5 * LOG_2PI + a * log(a / ab) + b * log(b / ab)
                + 0.5 * (log(ab) - log(a) - log(b))
                + _stirlerr(a) + _stirlerr(b) - _stirlerr(ab))
    return _lgamma(a) + _lgamma(b) - _lgamma(a + b)


cdef double _log_gamma_pref(double a, double x) noexcept nogil:
    if x == 0.0:
        return -INF
    if a < 10.0 or not (0.5 * a < x < 2.0 * a):
        return a * log(x) - x - _lgamma(a)
    return 0.5 * (log(a) - LOG_2PI) - _stirlerr(a) + a * _log1pmx((x - a) / a)


cdef double _gamma_series(double a, double x, long max_iter, int *err) noexcept nogil:
    cdef double term = 1.0, total = 1.0
    cdef long n
    for n in range(1, max_iter + 1):
        term *= x / (a + n)
        total += term
        if term < total * EPS * 0.5:
            return total
    err[0] = ERR_CONV
    return NAN_


cdef double _gamma_cf(double a, double x, long max_iter, int *err) noexcept nogil:
    cdef double b = x + 1.0 - a
    cdef double c = 1.0 / FPMIN
    cdef double d = 1.0 / b
    cdef double h = d
    cdef double an, delta
    cdef long i
    for i in range(1, max_iter + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if fabs(d) < FPMIN:
            d = FPMIN
        c = b + an / c
        if fabs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < EPS:
            return h
    err[0] = ERR_CONV
    return NAN_


cdef double _log_lower_ratio(double a, double x, int *err) noexcept nogil:
    cdef double lp, h
    if x < a + 1.0:
        return log(_gamma_series(a, x, SPECIAL_MAX_ITER, err) / a)
    lp = _log_gamma_pref(a, x)
    h = _gamma_cf(a, x, SPECIAL_MAX_ITER, err)
    return log1p(-exp(lp) * h) - lp


cdef double _log_upper_ratio(double a, double x, int *err) noexcept nogil:
    cdef double lp, s
    if x >= a + 1.0:
        return log(_gamma_cf(a, x, SPECIAL_MAX_ITER, err))
    lp = _log_gamma_pref(a, x)
    s = _gamma_series(a, x, SPECIAL_MAX_ITER, err)
    return log1p(-exp(lp) * s / a) - lp


cdef double _beta_cf(double a, double b, double x, long max_iter, int *err) noexcept nogil:
    cdef double qab = a + b, qap = a + 1.0, qam = a - 1.0
    cdef double c = 1.0
    cdef double d = 1.0 - qab * x / qap
    cdef double h, aa, delta
    cdef long m, m2
    if fabs(d) < FPMIN:
        d = FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if fabs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if fabs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if fabs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if fabs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < EPS:
            return h
    err[0] = ERR_CONV
    return NAN_


cdef double _log_inc_beta(double x, double a, double b, long max_iter, int *err) noexcept nogil:
    cdef double lb, y, log_comp
    if x == 0.0:
        return -INF
    lb = _lbeta(a, b)
    if x == 1.0:
        return lb
    if x < (a + 1.0) / (a + b + 2.0):
        return a * log(x) + b * log1p(-x) + log(_beta_cf(a, b, x, max_iter, err)) - log(a)
    y = 1.0 - x
    log_comp = (b * log(y) + a * log(x) + log(_beta_cf(b, a, y, max_iter, err))
                - log(b) - lb)
    return lb + log1p(-exp(log_comp))


cdef double _log_norm_cdf(double x) noexcept nogil:
    cdef double z, series
    if x > 0.0:
        return log1p(-0.5 * erfc(x / sqrt(2.0)))
    if x > -30.0:
        return log(0.5 * erfc(-x / sqrt(2.0)))
    z = 1.0 / (x * x)
    series = 1.0 - z * (1.0 - z * (3.0 - z * (15.0 - z * 105.0)))
    return -0.5 * x * x - log(-x) - 0.5 * LOG_2PI + log(series)


# ---------------------------------------------------------------- specials

def _check_gamma_args(double a, double x):
    if not (a > 0.0) or isinf(a):
        raise DomainError(f"incomplete gamma needs finite a > 0, got {a}")
    if not (x >= 0.0):
        raise DomainError(f"incomplete gamma needs x >= 0, got {x}")


def reg_lower_inc_gamma(double a, double x, long max_iter=1000000):
    cdef int err = OK
    cdef double lp, out
    _check_gamma_args(a, x)
    if x == 0.0:
        return 0.0
    if isinf(x):
        return 1.0
    lp = _log_gamma_pref(a, x)
    if x < a + 1.0:
        out = min(1.0, exp(lp) * _gamma_series(a, x, max_iter, &err) / a)
    else:
        out = max(0.0, 1.0 - exp(lp) * _gamma_cf(a, x, max_iter, &err))
    _raise(err, "incomplete gamma")
    return out


def reg_upper_inc_gamma(double a, double x, long max_iter=1000000):
    cdef int err = OK
    cdef double lp, out
    _check_gamma_args(a, x)
    if x == 0.0:
        return 1.0
    if isinf(x):
        return 0.0
    lp = _log_gamma_pref(a, x)
    if x >= a + 1.0:
        out = min(1.0, exp(lp) * _gamma_cf(a, x, max_iter, &err))
    else:
        out = max(0.0, 1.0 - exp(lp) * _gamma_series(a, x, max_iter, &err) / a)
    _raise(err, "incomplete gamma")
    return out


def log_inc_beta(double x, double a, double b, long max_iter=1000000):
    """log of the non-regularized incomplete beta integral B_x(a, b)."""
    cdef int err = OK
    cdef double out
    if not (a > 0.0 and b > 0.0) or isinf(a) or isinf(b):
        raise DomainError(f"incomplete beta needs finite a, b > 0, got a={a}, b={b}")
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"incomplete beta needs 0 <= x <= 1, got {x}")
    out = _log_inc_beta(x, a, b, max_iter, &err)
    _raise(err, "incomplete beta")
    return out


def lambert_w_m1(double x):
    cdef double q, p, w, ew, f, wp1, dw, lx, g, g1, g2
    cdef int i
    if not (-INV_E <= x < 0.0) or isnan(x):
        raise DomainError(f"lambert_w_m1 needs -1/e <= x < 0, got {x}")
    q = 1.0 + E_CONST * x
    if q <= 0.0:
        return -1.0
    if q < 0.3:
        p = -sqrt(2.0 * q)
        w = -1.0 + p * (1.0 + p * (-1.0 / 3 + p * (11.0 / 72 - p * 43.0 / 540)))
        for i in range(100):
            ew = exp(w)
            f = w * ew - x
            wp1 = w + 1.0
            if wp1 == 0.0:
                break
            dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
            w -= dw
            if fabs(dw) <= 4.0 * EPS * fabs(w):
                break
        return min(w, -1.0)
    lx = log(-x)
    w = lx - log(-lx)
    w = w + log(-lx) / lx
    for i in range(100):
        g = w + log(-w) - lx
        g1 = 1.0 + 1.0 / w
        g2 = -1.0 / (w * w)
        dw = g / (g1 - 0.5 * g * g2 / g1)
        w -= dw
        if fabs(dw) <= 4.0 * EPS * fabs(w):
            break
    return w


def norm_cdf(double x):
    return 0.5 * erfc(-x / sqrt(2.0))


def log_norm_cdf(double x):
    return _log_norm_cdf(x)


def hurwitz_zeta(double s, double q):
    """sum_{k>=0} (q+k)^(-s) by Euler-Maclaurin with ten correction terms."""
    cdef int n = 20, k, j
    cdef double total = 0.0, a, poch, apow, inv_a2
    if not (s > 1.0):
        raise DomainError(f"zeta needs s > 1, got {s}")
    if not (q > 0.0):
        raise DomainError(f"hurwitz zeta needs q > 0, got {q}")
    for k in range(n):
        total += pow(q + k, -s)
    a = q + n
    total += pow(a, 1.0 - s) / (s - 1.0) + 0.5 * pow(a, -s)
    poch = s
    apow = pow(a, -s - 1.0)
    inv_a2 = 1.0 / (a * a)
    for j in range(10):
        total += EM_COEF[j] * poch * apow
        poch *= (s + 2 * j + 1) * (s + 2 * j + 2)
        apow *= inv_a2
    return total


# ---------------------------------------------------------------- mixtures

cdef struct Ctx:
    int kind
    double p0, p1, p2
    double v
    double log_thr
    const double *lam
    const double *logw
    const double *psik
    long n


cdef double _log_mixture(int kind, double s, double v, double p0, double p1, double p2,
                         int *err) noexcept nogil:
    cdef double vr, out, g, h, r, gph, a1, b1, a0, b0, pre, xb, rho, c, c2, a, shift
    if kind == K_NORMAL2 or kind == K_NORMAL1:
        vr = v + p0
        out = 0.5 * log(p0 / vr) + s * s / (2.0 * vr)
        if kind == K_NORMAL1:
            out += log(2.0) + _log_norm_cdf(s / sqrt(vr))
        return out
    if kind == K_BB2 or kind == K_BB1:
        g = p0
        h = p1
        r = p2
        gph = g + h
        a1 = (r + v - g * s) / (g * gph)
        b1 = (r + v + h * s) / (h * gph)
        if a1 <= 0.0 or b1 <= 0.0:
            return INF
        a0 = r / (g * gph)
        b0 = r / (h * gph)
        pre = v / (g * h) * log(gph) - ((v / h + s) * log(g) + (v / g - s) * log(h)) / gph
        if kind == K_BB2:
            return pre + _lbeta(a1, b1) - _lbeta(a0, b0)
        xb = h / gph
        return (pre + _log_inc_beta(xb, a1, b1, SPECIAL_MAX_ITER, err)
                - _log_inc_beta(xb, a0, b0, SPECIAL_MAX_ITER, err))
    if kind == K_GE or kind == K_GP:
        rho = p0
        c = p1
        c2 = c * c
        a = (v + rho) / c2
        shift = a + s / c
        a0 = rho / c2
        if not (shift > 0.0):
            return NAN_
        if kind == K_GE:
            return _log_lower_ratio(a, shift, err) - _log_lower_ratio(a0, a0, err)
        return _log_upper_ratio(shift, a, err) - _log_upper_ratio(a0, a0, err)
    err[0] = ERR_DOMAIN
    return NAN_


cdef double _discrete_log_m(const double *lam, const double *logw, const double *psik, long n,
                            double s, double v) noexcept nogil:
    cdef double best = -INF, e, total = 0.0
    cdef long k
    for k in range(n):
        e = logw[k] + lam[k] * s - psik[k] * v
        if e > best:
            best = e
    if best == -INF:
        return -INF
    for k in range(n):
        total += exp(logw[k] + lam[k] * s - psik[k] * v - best)
    return best + log(total)


cdef inline double _ctx_f(Ctx *ctx, double s, int *err) noexcept nogil:
    if ctx.kind == K_DISCRETE:
        return _discrete_log_m(ctx.lam, ctx.logw, ctx.psik, ctx.n, s, ctx.v) - ctx.log_thr
    return _log_mixture(ctx.kind, s, ctx.v, ctx.p0, ctx.p1, ctx.p2, err) - ctx.log_thr


cdef double _bracket_solve(Ctx *ctx, double bbar, int *err) noexcept nogil:
    cdef double lo = 0.0, hi, flo, fhi, s, fs
    cdef int n, side = 0, it
    cdef double v = ctx.v
    flo = _ctx_f(ctx, 0.0, err)
    if isnan(flo):
        err[0] = ERR_DOMAIN
        return NAN_
    if flo >= 0.0:
        return 0.0
    if bbar < INF:
        hi = bbar * v
        fhi = _ctx_f(ctx, hi, err)
        if fhi < 0.0:
            return hi
    else:
        hi = sqrt(2.0 * v * ctx.log_thr)
        if hi <= 0.0:
            hi = 1.0
        fhi = _ctx_f(ctx, hi, err)
        n = 0
        while fhi < 0.0:
            lo = hi
            flo = fhi
            hi *= 2.0
            fhi = _ctx_f(ctx, hi, err)
            n += 1
            if n > 2000 or isinf(hi):
                err[0] = ERR_CONV
                return NAN_
    for it in range(ROOT_MAX_ITER):
        if isinf(fhi) or isinf(flo):
            s = 0.5 * (lo + hi)
        else:
            s = hi - fhi * (hi - lo) / (fhi - flo)
            if not (lo < s < hi):
                s = 0.5 * (lo + hi)
        fs = _ctx_f(ctx, s, err)
        if isnan(fs):
            err[0] = ERR_CONV
            return NAN_
        if fabs(fs) <= 1e-13:
            return s
        if fs < 0.0:
            lo = s
            flo = fs
            if side == -1:
                fhi *= 0.5
            side = -1
        else:
            hi = s
            fhi = fs
            if side == 1:
                flo *= 0.5
            side = 1
        if hi - lo <= 4.0 * EPS * hi:
            return hi
    err[0] = ERR_CONV
    return NAN_


def log_mixture(int kind, double s, double v, double p0, double p1, double p2):
    """log m(s, v) for a conjugate mixture kind; NaN marks an invalid input."""
    cdef int err = OK
    cdef double out
    if kind < 0 or kind > K_GP:
        raise DomainError(f"unknown mixture kind {kind}")
    out = _log_mixture(kind, s, v, p0, p1, p2, &err)
    _raise(err, "mixture evaluation")
    return out


def log_mixture_batch(int kind, double p0, double p1, double p2,
                      const double[::1] s_arr, const double[::1] v_arr, double[::1] out):
    cdef int err = OK
    cdef Py_ssize_t i, n = out.shape[0]
    if kind < 0 or kind > K_GP:
        raise DomainError(f"unknown mixture kind {kind}")
    with nogil:
        for i in range(n):
            out[i] = _log_mixture(kind, s_arr[i], v_arr[i], p0, p1, p2, &err)
    _raise(err, "mixture evaluation")
    return np.asarray(out)


def discrete_log_m(const double[::1] lam, const double[::1] logw, const double[::1] psik,
                   long n, double s, double v):
    return _discrete_log_m(&lam[0], &logw[0], &psik[0], n, s, v)


def mixture_root(int kind, double p0, double p1, double p2, double v, double log_thr, double bbar):
    cdef int err = OK
    cdef Ctx ctx
    cdef double out
    ctx.kind = kind
    ctx.p0 = p0
    ctx.p1 = p1
    ctx.p2 = p2
    ctx.v = v
    ctx.log_thr = log_thr
    out = _bracket_solve(&ctx, bbar, &err)
    _raise(err, f"boundary root-finding at v={v}")
    return out


def mixture_root_batch(int kind, double p0, double p1, double p2,
                       const double[::1] v_arr, double log_thr, double bbar, double[::1] out):
    cdef int err = OK
    cdef Ctx ctx
    cdef Py_ssize_t i, n = out.shape[0]
    ctx.kind = kind
    ctx.p0 = p0
    ctx.p1 = p1
    ctx.p2 = p2
    ctx.log_thr = log_thr
    with nogil:
        for i in range(n):
            ctx.v = v_arr[i]
            out[i] = _bracket_solve(&ctx, bbar, &err)
            if err != OK:
                break
    _raise(err, "boundary root-finding")
    return np.asarray(out)


def discrete_root_batch(const double[::1] lam, const double[::1] logw, const double[::1] psik,
                        const long[::1] nterms, const double[::1] v_arr, double log_thr,
                        double bbar, double[::1] out):
    cdef int err = OK
    cdef Ctx ctx
    cdef Py_ssize_t i, n = out.shape[0]
    ctx.kind = K_DISCRETE
    ctx.lam = &lam[0]
    ctx.logw = &logw[0]
    ctx.psik = &psik[0]
    ctx.log_thr = log_thr
    with nogil:
        for i in range(n):
            ctx.v = v_arr[i]
            ctx.n = nterms[i]
            out[i] = _bracket_solve(&ctx, bbar, &err)
            if err != OK:
                break
    _raise(err, "boundary root-finding")
    return np.asarray(out)


# ---------------------------------------------------------------- beta-binomial CS

cdef int _bb_excluded(double mu, double sum_x, double t, double a, double b, double rho,
                      int rho_rel, int mode, double thr1, double thr2, int *err) noexcept nogil:
    cdef double g = mu - a, h = b - mu
    cdef double gh = g * h
    cdef double V = gh * t
    cdef double S = sum_x - t * mu
    cdef double r
    if rho_rel:
        r = rho * gh - gh
    else:
        r = rho - gh
    if not (r > 0.0):
        err[0] = ERR_DOMAIN
        return 1
    if mode == 0:
        return _log_mixture(K_BB2, S, V, g, h, r, err) >= thr1
    if _log_mixture(K_BB1, S, V, g, h, r, err) >= thr1:
        return 1
    return _log_mixture(K_BB1, -S, V, h, g, r, err) >= thr2


cdef int _bb_excl_closed(double mu, double sum_x, double t, double a, double b, double rho,
                         int rho_rel, int mode, double thr1, double thr2,
                         int at_a, int at_b, int *err) noexcept nogil:
    if mu <= a:
        return not at_a
    if mu >= b:
        return not at_b
    return _bb_excluded(mu, sum_x, t, a, b, rho, rho_rel, mode, thr1, thr2, err)


def betabinom_interval(double sum_x, double t, double a, double b, double rho, int rho_rel,
                       int mode, double thr1, double thr2, int ngrid):
    """Endpoints of {mu in [a,b]: mixture test accepts mu}.

    mode 0 uses the two-sided mixture against thr1; mode 1 uses a pair of
    one-sided mixtures (upper deviations vs thr1, lower vs thr2).
    """
    cdef int err = OK
    cdef double width, tol, xbar, lo_in, hi_in, lo_out, hi_out, x0, x1, mid, lower, upper
    cdef int at_a, at_b, i, it
    cdef double *grid
    cdef char *inc
    if t == 0:
        return a, b
    width = b - a
    tol = 1e-12 * width * t
    at_a = sum_x <= t * a + tol
    at_b = sum_x >= t * b - tol
    if at_a and at_b:
        raise DomainError("degenerate support")
    grid = <double *> malloc(ngrid * sizeof(double))
    inc = <char *> malloc(ngrid * sizeof(char))
    try:
        with nogil:
            xbar = min(max(sum_x / t, a), b)
            for i in range(ngrid):
                grid[i] = a + width * (i + 0.5) / ngrid
                inc[i] = not _bb_excl_closed(grid[i], sum_x, t, a, b, rho, rho_rel, mode,
                                             thr1, thr2, at_a, at_b, &err)
            lo_in = xbar
            hi_in = xbar
            for i in range(ngrid):
                if inc[i]:
                    lo_in = min(lo_in, grid[i])
                    break
            for i in range(ngrid - 1, -1, -1):
                if inc[i]:
                    hi_in = max(hi_in, grid[i])
                    break
            lo_out = a
            for i in range(ngrid):
                if grid[i] < lo_in and not inc[i]:
                    lo_out = grid[i]
            hi_out = b
            for i in range(ngrid - 1, -1, -1):
                if grid[i] > hi_in and not inc[i]:
                    hi_out = grid[i]
            if lo_out == a and not _bb_excl_closed(a, sum_x, t, a, b, rho, rho_rel, mode,
                                                   thr1, thr2, at_a, at_b, &err):
                lower = a
            else:
                x0 = lo_out
                x1 = lo_in
                for it in range(60):
                    mid = 0.5 * (x0 + x1)
                    if mid <= x0 or mid >= x1:
                        break
                    if _bb_excl_closed(mid, sum_x, t, a, b, rho, rho_rel, mode,
                                       thr1, thr2, at_a, at_b, &err):
                        x0 = mid
                    else:
                        x1 = mid
                lower = x0
            if hi_out == b and not _bb_excl_closed(b, sum_x, t, a, b, rho, rho_rel, mode,
                                                   thr1, thr2, at_a, at_b, &err):
                upper = b
            else:
                x0 = hi_in
                x1 = hi_out
                for it in range(60):
                    mid = 0.5 * (x0 + x1)
                    if mid <= x0 or mid >= x1:
                        break
                    if _bb_excl_closed(mid, sum_x, t, a, b, rho, rho_rel, mode,
                                       thr1, thr2, at_a, at_b, &err):
                        x1 = mid
                    else:
                        x0 = mid
                upper = x1
    finally:
        free(grid)
        free(inc)
    if err == ERR_DOMAIN:
        raise DomainError("beta-binomial mixture needs rho > g*h across the support")
    _raise(err, "beta-binomial interval")
    return lower, upper

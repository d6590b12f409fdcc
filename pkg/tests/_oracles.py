"""Independent high-precision re-evaluations used as test oracles.

Everything here is written directly from the displayed formulas with
mpmath at 50 digits and shares no code with the package.
"""
import mpmath as mp

mp.mp.dps = 50


def _f(x):
    return mp.mpf(x)


def thm1(delta, n):
    d, n = _f(delta), _f(n)
    return 2 * mp.e * mp.ceil(d * mp.log(n)) * mp.exp(-d)


def thm1_eta(delta, n, eta):
    d, n, eta = _f(delta), _f(n), _f(eta)
    return 2 * mp.ceil(mp.log(n) / mp.log(1 + eta)) * mp.exp(-d / (1 + eta))


def thm2(delta, n, eta):
    d, n, eta = _f(delta), _f(n), _f(eta)
    return 2 * mp.ceil(mp.log(n) / mp.log(1 + eta)) * mp.exp(-(1 - eta**2 / 8) * d)


def thm2_opt(delta, n):
    d, n = _f(delta), _f(n)
    return 2 * mp.sqrt(mp.e) * mp.ceil(mp.sqrt(d) / 2 * mp.log(n)) * mp.exp(-d)


def subgaussian(delta, n, eta):
    d, n, eta = _f(delta), _f(n), _f(eta)
    return 2 * mp.ceil(mp.log(n) / mp.log(1 + eta)) * mp.exp(-(1 - eta**2 / 16) * d)


def thm3(delta, c):
    d, c = _f(delta), _f(c)
    return 2 * mp.e * c * d**c / (c - 1) * mp.exp(-d)


def thm3_opt(delta):
    d = _f(delta)
    return 2 * mp.e**2 * d * mp.exp(-d)


def thm3_coefficient(delta, c):
    d, c = _f(delta), _f(c)
    return d * c / (d - 1)


def hoeffding_sn(delta, n):
    d, n = _f(delta), _f(n)
    return 4 * mp.e * mp.ceil(d**2 * mp.log(n)) * mp.exp(-2 * d**2)


def multinomial(delta, n, a):
    d, n, a = _f(delta), _f(n), _f(a)
    return 2 * mp.e * (d * mp.log(n) + a) * mp.exp(-d / a)


def nu(gamma, n):
    g = _f(gamma)
    return mp.fsum(g**k for k in range(int(n))) if n <= 2000 else (1 - g ** int(n)) / (1 - g)


def discounted(delta, gamma, n, B, eta):
    d, B, eta = _f(delta), _f(B), _f(eta)
    return mp.ceil(mp.log(nu(gamma, n)) / mp.log(1 + eta)) * mp.exp(-(2 * d**2 / B**2) * (1 - eta**2 / 16))


def union(delta, n):
    return 2 * _f(n) * mp.exp(-_f(delta))


def thm1_envelope(delta, n):
    d = _f(delta)
    return 2 * mp.e * (d * mp.log(_f(n)) + 1) * mp.exp(-d)


def calibrated_thm1(alpha, n):
    """Root of the smooth Thm1 envelope on its decreasing branch."""
    return mp.findroot(lambda d: thm1_envelope(d, n) - _f(alpha), (mp.mpf(1), mp.mpf(200)), solver="bisect")


def binary_kl(p, q):
    p, q = _f(p), _f(q)
    out = mp.mpf(0)
    if p > 0:
        out += p * mp.log(p / q)
    if p < 1:
        out += (1 - p) * mp.log((1 - p) / (1 - q))
    return out


def kl_upper(xbar, N, delta):
    """Upper Bernoulli confidence edge by mpmath bisection."""
    lo, hi = _f(xbar), mp.mpf(1) - mp.mpf(10) ** -40
    target = _f(delta) / _f(N)
    for _ in range(200):
        mid = (lo + hi) / 2
        if binary_kl(xbar, mid) <= target:
            lo = mid
        else:
            hi = mid
    return lo

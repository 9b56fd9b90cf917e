"""Reference values for the unit tests, computed with mpmath at 40 digits
directly from the defining integrals (no closed forms for scores or means).

Run: python3 tests/oracles/frozen_values.py
"""
from mpmath import mp, mpf, quad, exp, log, sqrt, pi, erfc, inf, findroot, euler

mp.dps = 40


def Phi(x):
    return erfc(-x / sqrt(2)) / 2


def phi(x):
    return exp(-x * x / 2) / sqrt(2 * pi)


def gev_cdf(mu, s, xi, x):
    z = (x - mu) / s
    if xi == 0:
        return exp(-exp(-z))
    t = 1 + xi * z
    if t <= 0:
        return mpf(0) if xi > 0 else mpf(1)
    return exp(-t ** (-1 / xi))


def tgev_cdf(mu, s, xi, x):
    if x < 0:
        return mpf(0)
    g0 = gev_cdf(mu, s, xi, 0)
    return (gev_cdf(mu, s, xi, x) - g0) / (1 - g0)


def gev_support(mu, s, xi):
    if xi > 0:
        return mu - s / xi, inf
    if xi < 0:
        return -inf, mu - s / xi
    return -inf, inf


def crps_int(F, x, lo, hi, pts=()):
    brk = sorted({p for p in (lo, x, hi, *pts) if p is not None})
    brk = [b for b in brk if lo <= b <= hi]
    tot = mpf(0)
    for a, b in zip(brk[:-1], brk[1:]):
        tot += quad(lambda y: (F(y) - (1 if y >= x else 0)) ** 2, [a, b])
    return tot


def show(name, v):
    print(f"{name} = {mp.nstr(v, 20)}")


show("gamma(1.3)", quad(lambda t: t ** mpf("0.3") * exp(-t), [0, 1, inf]))
show("lower_gamma(0.7,2)", quad(lambda t: t ** mpf("-0.3") * exp(-t), [0, 2]))
show("upper_gamma(0.7,2)", quad(lambda t: t ** mpf("-0.3") * exp(-t), [2, inf]))
# Ei via the principal-value integral; for x = 1 split around the pole.
show("Ei(-1)", -quad(lambda t: exp(-t) / t, [1, inf]))
show("Ei(1)", euler + quad(lambda t: (exp(t) - 1) / t, [0, 1]))
show("Phi(1.959964)", Phi(mpf("1.959964")))

mu, s = mpf(2), mpf("1.5")
show("tn_cdf(2,1.5,2)", (Phi((2 - mu) / s) - Phi(-mu / s)) / Phi(mu / s))
show("gev_cdf(2,1,0.1,3)", gev_cdf(mpf(2), mpf(1), mpf("0.1"), mpf(3)))
show("prob_negative(1.2,0.9,-0.1)", gev_cdf(mpf("1.2"), mpf("0.9"), mpf("-0.1"), 0))
show("tgev_cdf(1,1,0,2)", tgev_cdf(mpf(1), mpf(1), 0, mpf(2)))

m = dict(mu=mpf(1), s=mpf(1), xi=mpf("-0.15"))
q = findroot(lambda x: tgev_cdf(m["mu"], m["s"], m["xi"], x) - mpf("0.5"), mpf(1))
show("tgev_quantile(1,1,-0.15,0.5)", q)


def tgev_pdf_num(mu, s, xi, x):
    return mp.diff(lambda y: tgev_cdf(mu, s, xi, y), x)


def tgev_mean_num(mu, s, xi):
    lo, hi = gev_support(mu, s, xi)
    lo = max(lo, 0)
    # E X = int_0^inf (1 - G0(x)) dx for a nonnegative variable
    pts = [lo, mu, hi] if hi != inf else [lo, mu, mu + 10 * s, mu + 80 * s]
    pts = sorted({p for p in pts if p >= lo})
    return quad(lambda x: 1 - tgev_cdf(mu, s, xi, x), pts)


show("tgev_mean(0,1,0)", tgev_mean_num(mpf(0), mpf(1), 0))
show("tgev_mean(1,0.8,-0.2)", tgev_mean_num(mpf(1), mpf("0.8"), mpf("-0.2")))


def tn_cdf(mu, s, x):
    return mpf(0) if x < 0 else (Phi((x - mu) / s) - Phi(-mu / s)) / Phi(mu / s)


show("crps_tn(2,1,2.5)", crps_int(lambda y: tn_cdf(mpf(2), mpf(1), y), mpf("2.5"), 0, inf, (2,)))
show("crps_ln(0.5,0.4,2)", crps_int(lambda y: Phi((log(y) - mpf("0.5")) / mpf("0.4")) if y > 0 else mpf(0),
                                     mpf(2), 0, inf, (1, 3)))
# Gumbel tails beyond [-6, 80] contribute below 1e-60.
show("crps_gev(0,1,0,1)", crps_int(lambda y: gev_cdf(0, 1, 0, y), mpf(1), -6, 80, (0, 10)))
show("crps_gev(0,1,0.2,-6)", crps_int(lambda y: gev_cdf(0, 1, mpf("0.2"), y), mpf(-6), -5, inf, (0, 10, 100)) + 1)
show("crps_tgev(1,1,0,1.5)", crps_int(lambda y: tgev_cdf(1, 1, 0, y), mpf("1.5"), 0, 80, (1, 10)))
show("crps_tgev(0.5,0.8,-0.15,0.2)",
     crps_int(lambda y: tgev_cdf(mpf("0.5"), mpf("0.8"), mpf("-0.15"), y), mpf("0.2"), 0,
              mpf("0.5") + mpf("0.8") / mpf("0.15")))
show("twcrps_tgev(2,1,0.1;x=3,r=2.5)",
     crps_int(lambda y: tgev_cdf(2, 1, mpf("0.1"), y), mpf(3), mpf("2.5"), inf, (10, 100)))
show("logs_tgev(1,1,0.1;x=1)", -log(tgev_pdf_num(mpf(1), mpf(1), mpf("0.1"), mpf(1))))
mm, vv = mpf("3.2"), mpf("2.5")
show("ln_from_moments(3.2,2.5).mu", log(mm ** 2 / sqrt(vv + mm ** 2)))
show("ln_from_moments(3.2,2.5).sigma", sqrt(log(1 + vv / mm ** 2)))

"""Extended-precision reference values frozen into the Rust test suites.

Run with `python3 tools/oracles.py`; every number printed here is pasted
verbatim into a test. Nothing in this script shares code with the crate.
"""
from mpmath import mp, mpf, sqrt, log, cosh, exp, quad, inf, npdf, diff, pi

mp.dps = 50


def scaling(n, eps, delta, sigma):
    n, eps, delta, sigma = map(mpf, (n, eps, delta, sigma))
    eps_p = n ** (mpf(-1) / 6)
    delta_p = delta * (1 - eps_p) / (1 - eps)
    alpha = (eps - eps_p) / (1 - eps)
    p = 2 * sigma**2 * sqrt(delta_p / n)
    gamma = log(4 * n ** (mpf(1) / 6)) / n
    log_m = -n * gamma + n * p / (2 * sigma**2) - n * p**2 / (2 * sigma**4) - n ** (mpf(1) / 3)
    budget = 2 * sigma**2 * sqrt(delta / n)
    return dict(eps_p=eps_p, delta_p=delta_p, alpha=alpha, power=p, gamma=gamma,
                log_m=log_m, budget=budget)


def per_letter_kl(p, sigma):
    p, sigma = mpf(p), mpf(sigma)
    a = sqrt(p)

    def py(y):
        return (npdf(y, a, sigma) + npdf(y, -a, sigma)) / 2

    def f(y):
        return py(y) * (log(cosh(a * y / sigma**2)) - p / (2 * sigma**2))

    return quad(f, [-inf, -a, 0, a, inf])


def centered_u_log_mgf(lam, n, p, sigma):
    """ln E[exp(lam n^(1/4) (U - E U))] by direct integration over Z."""
    lam, n, p, sigma = map(mpf, (lam, n, p, sigma))
    t = lam * n ** (mpf(1) / 4)
    a = 1 / sigma**2 - p / sigma**4
    b = p / (2 * sigma**4)
    mean = -p / (2 * sigma**2)

    def f(z):
        u = a * sqrt(p) * z - b * z * z
        return npdf(z, 0, sigma) * exp(t * (u - mean))

    return log(quad(f, [-inf, 0, inf]))


def show(name, v):
    print(f"{name} = {mp.nstr(v, 20)}")


if __name__ == "__main__":
    for args in [(10**6, 0.5, 0.01, 1), (1024, 0.5, 0.05, 1), (4096, 0.5, 0.01, 1), (256, 0.5, 0.01, 1)]:
        print("scaling", args)
        for k, v in scaling(*args).items():
            show("  " + k, v)
    for p, s in [(0.01, 1), (0.02, 1), (0.25, 1), (1, 1), (0.5, 2), (0.0016, 0.2)]:
        show(f"per_letter_kl(P={p}, sigma={s})", per_letter_kl(p, s))
    for lam, n, p, s in [(0.5, 1024, 0.02, 1), (-0.3, 4096, 0.0038, 1), (1.0, 100, 0.1, 1.5)]:
        show(f"u_log_mgf(lam={lam}, n={n}, P={p}, sigma={s})", centered_u_log_mgf(lam, n, p, s))
    e, d, n = mpf("0.5"), mpf("0.01"), mpf(10) ** 6
    ep = n ** (mpf(-1) / 6)
    show("md_exponent(1e6, .5, .01)", -sqrt(1 - e) * n ** (mpf(1) / 6) / (4 * sqrt(1 - ep) * sqrt(d)))
    show("lower(.5,.01)", sqrt(mpf("0.01")) / sqrt(mpf("0.5")))
    show("lower(.01,.01)", sqrt(mpf("0.01")) / sqrt(mpf("0.99")))
    show("upper(.01,.01)", sqrt(mpf("0.01")) / mpf("0.99"))
    show("info_density(x=1,y=1)", 1 - log(cosh(1)))
    p, s, nn = mpf("0.1"), mpf(1), 100
    show("offset_poly(n=100,P=.1)", nn * (p**2 / 4 - p**3 / 6 + mpf(11) / 12 * p**4 + p**5 / 3 + p**6 / 45))
    for n in [10**3, 10**4, 10**5, 10**6]:
        d = mpf("0.01")
        show(f"n*C(rho_n)-sqrt(d n), n={n}", n / 2 * log(1 + 2 * sqrt(d / n)) - sqrt(d * n))

"""Reference values for the Mittag-Leffler test suite.

Every value is computed from the defining power series in mpmath at high
working precision, independently of the Rust evaluator. Run with
`python3 ml_oracles.py` and paste the printed constants into the tests.
"""
from mpmath import mp, mpf, gamma, rgamma, erfc, exp, factorial, quad, inf, sqrt, pi

mp.dps = 60


def ml(alpha, beta, z, terms=None):
    alpha, beta, z = mpf(alpha), mpf(beta), mpf(z)
    # enough terms for |z|^k / Gamma(alpha k + beta) to fall below 1e-60
    n = terms or 200 + int(4 * abs(z) ** (1 / alpha) / alpha)
    with mp.workprec(int(60 * 3.33) + int(abs(z) ** (1 / alpha) * 1.5) + 64):
        return sum(z**k * rgamma(alpha * k + beta) for k in range(n))


def ml_deriv(alpha, beta, z, k, terms=None):
    alpha, beta, z = mpf(alpha), mpf(beta), mpf(z)
    n = terms or 300 + int(4 * abs(z) ** (1 / alpha) / alpha)
    with mp.workprec(400 + int(abs(z) ** (1 / alpha) * 1.5)):
        return sum(
            factorial(m) / factorial(m - k) * z ** (m - k) * rgamma(alpha * m + beta)
            for m in range(k, n)
        )


def show(name, v):
    print(f"{name} = {mp.nstr(v, 20)}")


show("E_{0.5,1}(-2)", ml(0.5, 1, -2))
show("exp(4) erfc(2)", exp(4) * erfc(2))
show("E_{0.5,0.5}(-1)", ml(0.5, 0.5, -1))
show("E_{0.5,1}(-1)", ml(0.5, 1, -1))
show("1 - E_{0.5,1}(-1)", 1 - ml(0.5, 1, -1))
show("E''_{0.7,0.7}(-1)", ml_deriv(0.7, 0.7, -1, 2))
show("E_{0.8,0.8}(-1)", ml(0.8, 0.8, -1))
show("E'_{0.8,0.8}(-1)", ml_deriv(0.8, 0.8, -1, 1))
show("E_{0.6,1}(-2^0.6)", ml(0.6, 1, -(mpf(2) ** mpf("0.6"))))
show("1/(1+2^0.6)", 1 / (1 + mpf(2) ** mpf("0.6")))
show("G(0.5)G(1.5)/G(0.75)", gamma(0.5) * gamma(1.5) / gamma(0.75))
show("G(0.5)/G(0.75)", gamma(0.5) / gamma(0.75))

a, lam, nu = mpf("0.3025553"), mpf("0.08293046"), mpf("6.941576")
e = ml(a, a, -lam)
show("E_{a,a}(-lam) MTPL", e)
show("pmml_pdf(1) MTPL", nu * lam * e)
show("1/(a nu) MTPL", 1 / (a * nu))

# Erlang(4, 2), alpha = 0.7 density at a few grid points (solid curve of the
# Erlang figure): f(x) = lam^p x^{alpha p - 1} / (p-1)! E^{(p-1)}_{alpha,alpha}(-lam x^alpha)
for x in ["0.01", "0.1", "1", "2", "10"]:
    xv = mpf(x)
    f = mpf(2) ** 4 * xv ** (mpf("0.7") * 4 - 1) / 6 * ml_deriv(0.7, 0.7, -2 * xv ** mpf("0.7"), 3)
    show(f"erlang4 pdf({x})", f)

# Coxian p=2, pi=(1,0), lambda=(1,2), alpha=0.9, x=2 (general path oracle)
al = mpf("0.9")
x = mpf(2)
y = x**al
# E_{a,a}(T y) for T=[[-1,1],[0,-2]]: divided differences
f1, f2 = ml(al, al, -y), ml(al, al, -2 * y)
# pi E t with t=(0,2): entry (1,2) * 2 ; entry(1,2) = y * (f2 - f1)/(-2y + y)
e12 = y * (f2 - f1) / (-y)
show("coxian pdf alpha=0.9 x=2", x ** (al - 1) * e12 * 2)

# derivatives of E_{0.7,0.7} away from the origin
for x in [-4, -10, -30]:
    for k in range(3):
        show(f"E^({k})_{{0.7,0.7}}({x})", ml_deriv(0.7, 0.7, x, k))

#!/usr/bin/env python3
"""Regenerate src/liouville/data/golden_values.txt.

High-precision oracle, deliberately independent of the package code: every
number here comes from mpmath adaptive quadrature / arbitrary-precision
arithmetic applied to the defining integrals, never from the liouville
package itself.  Run from the repo root:

    python tools/make_golden.py [--check]

With --check the script recomputes everything and compares against the
committed table instead of rewriting it.
"""

import argparse
import pathlib

import mpmath as mp

OUT = pathlib.Path(__file__).resolve().parent.parent / "src" / "liouville" / "data" / "golden_values.txt"

mp.mp.dps = 40


def Q_of(gamma):
    gamma = mp.mpf(gamma)
    return 2 / gamma + gamma / 2


def log_upsilon(gamma, z):
    """ln Upsilon_{gamma/2}(z) on the strip 0 < Re z < Q via the defining integral."""
    gamma = mp.mpf(gamma)
    z = mp.mpmathify(z)
    Q = Q_of(gamma)
    w = Q / 2 - z

    def f(t):
        # integrand has a removable singularity at t = 0; at dps=40 the
        # cancellation near t ~ 1e-8 still leaves ~30 good digits
        return (w**2 * mp.exp(-t) - mp.sinh(w * t / 2) ** 2 / (mp.sinh(t * gamma / 4) * mp.sinh(t / gamma))) / t

    return mp.quad(f, [mp.mpf("1e-12"), mp.mpf("0.1"), 1, 5, 20, 60, mp.inf]) + small_t_piece(gamma, w)


def small_t_piece(gamma, w):
    # integral of the integrand over [0, 1e-12], series to first order: -w^2 * t
    # contributes ~ w^2 * 1e-24 -- keep it anyway so the quad split is honest
    eps = mp.mpf("1e-12")
    return -(w**2) * eps + w**2 * eps**2 / 4


def upsilon(gamma, z):
    return mp.exp(log_upsilon(gamma, z))


def l_fn(x):
    return mp.gamma(x) / mp.gamma(1 - x)


def dozz(gamma, mu, a1, a2, a3):
    gamma, mu = mp.mpf(gamma), mp.mpf(mu)
    a1, a2, a3 = mp.mpf(a1), mp.mpf(a2), mp.mpf(a3)
    Q = Q_of(gamma)
    abar = a1 + a2 + a3
    base = mp.pi * mu * l_fn(gamma**2 / 4) * (gamma / 2) ** (2 - gamma**2 / 2)
    pref = base ** ((2 * Q - abar) / gamma)
    ups_prime0 = upsilon(gamma, gamma / 2)  # = Upsilon'(0)
    num = ups_prime0 * upsilon(gamma, a1) * upsilon(gamma, a2) * upsilon(gamma, a3)
    den = (
        upsilon(gamma, (abar - 2 * Q) / 2)
        * upsilon(gamma, abar / 2 - a1)
        * upsilon(gamma, abar / 2 - a2)
        * upsilon(gamma, abar / 2 - a3)
    )
    return pref * num / den


def r_dozz(gamma, mu, alpha):
    gamma, mu, alpha = mp.mpf(gamma), mp.mpf(mu), mp.mpf(alpha)
    Q = Q_of(gamma)
    d = Q - alpha
    return (
        -((mp.pi * mu * l_fn(gamma**2 / 4)) ** (2 * d / gamma))
        * (mp.gamma(-gamma * d / 2) / mp.gamma(gamma * d / 2))
        * (mp.gamma(-2 * d / gamma) / mp.gamma(2 * d / gamma))
    )


def annulus_second_moment(gamma, r_in, r_out):
    """E[M(A)^2] over the annulus r_in <= |x| <= r_out, for gamma^2 < 2.

    Reduction: rotational invariance + the angular integral
      (1/2pi) int |1 - s e^{i phi}|^{-2 beta} dphi = 2F1(beta, beta; 1; s^2)
    for s < 1, which mpmath supplies directly.
    """
    gamma = mp.mpf(gamma)
    b = gamma**2 / 2  # = beta in the angular reduction, exponent |x-y|^{-2b}

    def inner(r, rho):
        lo, hi = (r, rho) if r < rho else (rho, r)
        ang = 2 * mp.pi * hi ** (-2 * b) * mp.hyp2f1(b, b, 1, (lo / hi) ** 2)
        return r * rho * (r * rho) ** (gamma**2 - 4) * ang

    def outer(r):
        # split at rho = r: the angular factor has a |r-rho|^{1-2b} kink there
        return mp.quad(lambda rho: inner(r, rho), [r_in, r, r_out])

    return 2 * mp.pi * mp.quad(outer, [r_in, (r_in + r_out) / 2, r_out])


def unit_square_log_energy():
    """I = - int_{[0,1]^2 x [0,1]^2} ln|x - y|  (4D reduced to 2D).

    The difference x - y of two independent uniform points on the unit square
    has density (1-|u|)(1-|v|) on [-1,1]^2.
    """

    def f(u, v):
        return (1 - u) * (1 - v) * (-mp.log(mp.sqrt(u**2 + v**2)))

    # integrable log singularity at the origin: cut out a corner and treat it
    # in polar coordinates where the integrand is r ln(1/r) * O(1)
    eps = mp.mpf("1e-4")
    bulk = 4 * mp.quad(lambda u: mp.quad(lambda v: f(u, v), [0 if u > eps else eps, 1]), [0, eps, 1])
    corner = 4 * mp.quad(
        lambda r: mp.quad(lambda th: (1 - r * mp.cos(th)) * (1 - r * mp.sin(th)) * (-mp.log(r)) * r, [0, mp.pi / 2]),
        [0, eps],
    )
    return bulk + corner


def fourier_coefficient_check():
    """Sanity check (printed only): the angular reduction used above and in
    the package, (1/2pi) int e^{-im phi} |1 - s e^{i phi}|^{-2 beta} dphi
    = pochhammer(beta, m)/m! * s^m * 2F1(beta, beta+m; m+1; s^2)."""
    rows = []
    for beta, m, s in [(0.6, 0, 0.45), (0.6, 2, 0.45), (0.9, 2, 0.7), (0.125, 0, 0.3)]:
        beta, s = mp.mpf(beta), mp.mpf(s)
        direct = mp.quad(
            lambda ph: mp.e ** (-1j * m * ph) * abs(1 - s * mp.e ** (1j * ph)) ** (-2 * beta), [0, 2 * mp.pi]
        ) / (2 * mp.pi)
        closed = mp.rf(beta, m) / mp.factorial(m) * s**m * mp.hyp2f1(beta, beta + m, m + 1, s**2)
        rows.append((beta, m, s, abs(direct - closed)))
    return rows


def fmt(x, digits=22):
    x = mp.mpmathify(x)
    if mp.im(x) == 0:
        return mp.nstr(mp.re(x), digits)
    return mp.nstr(x, digits)


def build_rows():
    rows = []

    def add(name, params, value, source):
        rows.append((name, params, fmt(value), source))

    # --- Upsilon point values -------------------------------------------
    add("upsilon", "gamma=1 z=1.0", upsilon(1, 1), "mpmath-quad-dps40")
    add("upsilon", "gamma=1 z=0.5", upsilon(1, mp.mpf("0.5")), "mpmath-quad-dps40")
    add("upsilon", "gamma=1 z=1.8", upsilon(1, mp.mpf("1.8")), "mpmath-quad-dps40")
    add("upsilon", "gamma=0.7 z=0.9", upsilon(mp.mpf("0.7"), mp.mpf("0.9")), "mpmath-quad-dps40")
    add("upsilon", "gamma=1.4 z=0.9", upsilon(mp.mpf("1.4"), mp.mpf("0.9")), "mpmath-quad-dps40")
    add(
        "upsilon",
        "gamma=1 z=0.6+0.8j",
        upsilon(1, mp.mpc("0.6", "0.8")),
        "mpmath-quad-dps40",
    )

    # d/dz Upsilon at 0 equals Upsilon(gamma/2); the centered difference of
    # the strip integral is the independent route
    for g in ("0.7", "1.0", "1.4"):
        gm = mp.mpf(g)
        h = mp.mpf("1e-8")
        # Upsilon(h) via strip integral directly (0 < h < Q), Upsilon(-h) via
        # one exact shift: Upsilon(-h) = Upsilon(-h + gamma/2) / (l(-gamma h/2) (gamma/2)^{1+gamma h})
        up_p = upsilon(gm, h)
        up_m = upsilon(gm, -h + gm / 2) / (l_fn(-gm * h / 2) * (gm / 2) ** (1 + gm * h))
        add("upsilon_prime_zero", f"gamma={g}", (up_p - up_m) / (2 * h), "mpmath-centered-diff")

    # --- DOZZ three-point values ----------------------------------------
    add("dozz", "gamma=1 mu=1 alphas=1.8,1.8,1.8", dozz(1, 1, "1.8", "1.8", "1.8"), "mpmath-quad-dps40")
    add("dozz", "gamma=0.8 mu=1 alphas=2.4,2.4,2.4", dozz("0.8", 1, "2.4", "2.4", "2.4"), "mpmath-quad-dps40")
    add("dozz", "gamma=1 mu=1 alphas=1.3,1.9,1.9", dozz(1, 1, "1.3", "1.9", "1.9"), "mpmath-quad-dps40")
    add("rdozz", "gamma=1 mu=1 alpha=1.9", r_dozz(1, 1, "1.9"), "mpmath-gamma")
    add("rdozz", "gamma=1 mu=1 alpha=2.1", r_dozz(1, 1, "2.1"), "mpmath-gamma")

    # --- hypergeometric spot values -------------------------------------
    add("hyp2f1", "a=1 b=1 c=2 z=0.5", 2 * mp.log(2), "closed-form")
    add("hyp2f1", "a=0.37 b=1.21 c=2.5 z=0.55", mp.hyp2f1("0.37", "1.21", "2.5", "0.55"), "mpmath")
    add(
        "hyp2f1",
        "a=0.37 b=1.21 c=2.5 z=0.3+0.4j",
        mp.hyp2f1("0.37", "1.21", "2.5", mp.mpc("0.3", "0.4")),
        "mpmath",
    )
    add("hyp2f1", "a=-0.8 b=2.3 c=1.7 z=-0.6", mp.hyp2f1("-0.8", "2.3", "1.7", "-0.6"), "mpmath")

    # --- chaos second moment oracle --------------------------------------
    add(
        "annulus_second_moment",
        "gamma=0.5 r_in=1 r_out=2",
        annulus_second_moment(mp.mpf("0.5"), 1, 2),
        "mpmath-2d-quad",
    )

    # --- grid oracle diagonal constant -----------------------------------
    add("unit_square_log_energy", "-", unit_square_log_energy(), "mpmath-2d-quad")

    return rows


def render(rows):
    lines = ["# liouville golden values, format v1", "# name | params | value | source"]
    for name, params, value, source in rows:
        lines.append(f"{name} | {params} | {value} | {source}")
    return "\n".join(lines) + "\n"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--check", action="store_true", help="compare against the committed table")
    args = ap.parse_args()

    for beta, m, s, err in fourier_coefficient_check():
        print(f"angular reduction check beta={beta} m={m} s={s}: |direct-closed| = {mp.nstr(err, 3)}")
        assert err < mp.mpf("1e-25")

    text = render(build_rows())
    if args.check:
        old = OUT.read_text()
        if old == text:
            print("golden table up to date")
        else:
            print("golden table DIFFERS from freshly computed values")
            for a, b in zip(old.splitlines(), text.splitlines()):
                if a != b:
                    print(f"  committed: {a}\n  computed : {b}")
            raise SystemExit(1)
    else:
        OUT.write_text(text)
        print(f"wrote {OUT}")


if __name__ == "__main__":
    main()

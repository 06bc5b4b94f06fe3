"""High-precision value of min_{1<=k<=15} |nu^(pi theta^k)| at the golden ratio.

Digits are -1 and +1 with equal probability, so eta^(t) = cos(t) and
nu^(t) = prod_{n>=1} cos(t lam^n).  The product converges fast once
t lam^n is small; the tail is bounded by |1 - cos(s)| <= s^2 / 2.

Run: python3 scripts/derive_fstar.py
"""
import mpmath

mpmath.mp.dps = 50
THETA = (1 + mpmath.sqrt(5)) / 2
LAM = 1 / THETA


def nu_hat(t, eps=mpmath.mpf(10) ** -40):
    prod = mpmath.mpf(1)
    s = t * LAM
    while s * s > eps:
        prod *= mpmath.cos(s)
        s *= LAM
    return prod


def main():
    values = [abs(nu_hat(mpmath.pi * THETA**k)) for k in range(1, 16)]
    for k, v in enumerate(values, start=1):
        print(f"k={k:2d}  |nu^(pi theta^k)| = {mpmath.nstr(v, 20)}")
    m = min(values)
    print("minimum:", mpmath.nstr(m, 20))
    # Pinned floor: the minimum rounded down to three significant digits.
    floor = mpmath.floor(m * 10**5) / 10**5
    print("pinned floor f* =", mpmath.nstr(floor, 6))


if __name__ == "__main__":
    main()

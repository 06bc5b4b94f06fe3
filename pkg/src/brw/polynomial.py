"""Integer polynomials, simultaneous root finding and Pisot/Garsia classification."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameters, NonMonic, ReduciblePolynomial, RootFindingFailure

# Width of the exclusion band around modulus 1 used by classify().
UNIT_BAND = 1e-12
ABERTH_TOL = 1e-13
ABERTH_MAX_ITER = 500


@dataclass(frozen=True)
class IntPolynomial:
    """Integer polynomial, coefficients stored constant term first."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        cs = tuple(int(c) for c in self.coeffs)
        while len(cs) > 1 and cs[-1] == 0:
            cs = cs[:-1]
        if len(cs) < 2:
            raise InvalidParameters("polynomial must have degree >= 1")
        object.__setattr__(self, "coeffs", cs)

    @classmethod
    def parse(cls, text: str) -> "IntPolynomial":
        """Parse ``"-1,-1,1"`` (constant term first) into x^2 - x - 1."""
        try:
            cs = [int(tok) for tok in text.replace(" ", "").split(",") if tok != ""]
        except ValueError as exc:
            raise InvalidParameters(f"bad polynomial text {text!r}: {exc}") from None
        return cls(tuple(cs))

    def format(self) -> str:
        return ",".join(str(c) for c in self.coeffs)

    def __str__(self):
        terms = []
        for i in range(self.degree, -1, -1):
            c = self.coeffs[i]
            if c == 0:
                continue
            mono = "" if i == 0 else ("x" if i == 1 else f"x^{i}")
            if mono and abs(c) == 1:
                coef = "-" if c < 0 else "+"
            else:
                coef = f"{c:+d}"
            terms.append(f"{coef}{mono}")
        s = "".join(terms)
        return s[1:] if s.startswith("+") else s

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_monic(self) -> bool:
        return self.coeffs[-1] == 1

    @property
    def constant_term(self) -> int:
        return self.coeffs[0]

    def __call__(self, x):
        acc = 0 * x
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def derivative(self) -> tuple[int, ...]:
        return tuple(i * c for i, c in enumerate(self.coeffs))[1:]

    def integer_roots(self) -> list[int]:
        """Integer roots by the rational root test (monic input assumed)."""
        c0 = self.coeffs[0]
        if c0 == 0:
            return [0]
        found = []
        for d in range(1, math.isqrt(abs(c0)) + 1):
            if c0 % d:
                continue
            for r in {d, -d, abs(c0) // d, -(abs(c0) // d)}:
                if self(r) == 0:
                    found.append(r)
        return sorted(set(found))

    def roots(self) -> np.ndarray:
        return aberth_roots(self.coeffs)


def _horner_with_derivative(cs, z):
    p = np.zeros_like(z)
    dp = np.zeros_like(z)
    for c in reversed(cs):
        dp = dp * z + p
        p = p * z + c
    return p, dp


def aberth_roots(coeffs, tol: float = ABERTH_TOL, max_iter: int = ABERTH_MAX_ITER) -> np.ndarray:
    """All complex roots of a polynomial by Aberth-Ehrlich iteration.

    ``coeffs`` is constant term first.  Converges when every root has a
    relative residual below ``tol``; raises RootFindingFailure otherwise.
    """
    cs = np.asarray([complex(c) for c in coeffs])
    lead = cs[-1]
    if lead == 0:
        raise InvalidParameters("leading coefficient is zero")
    # factor out x^k: zero roots are exact and defeat the relative residual test
    zeros = 0
    while zeros < len(cs) - 1 and cs[zeros] == 0:
        zeros += 1
    if zeros:
        rest = aberth_roots(cs[zeros:], tol, max_iter) if len(cs) - zeros > 1 else np.zeros(0)
        return np.concatenate([np.zeros(zeros, dtype=complex), rest])
    cs = cs / lead
    n = len(cs) - 1
    if n == 1:
        return np.array([-cs[0]])
    abs_cs = np.abs(cs)
    # Fujiwara-type bound on root moduli.
    radius = 2.0 * max(abs_cs[n - k] ** (1.0 / k) for k in range(1, n + 1))
    radius = max(radius, 1e-3)
    angles = 2 * np.pi * np.arange(n) / n + 0.4
    z = 0.5 * radius * np.exp(1j * angles)

    for _ in range(max_iter):
        p, dp = _horner_with_derivative(cs, z)
        scale = np.zeros(n)
        az = np.abs(z)
        for c in reversed(abs_cs):
            scale = scale * az + c
        resid = np.abs(p) / scale
        if np.all(resid < tol):
            break
        ratio = np.where(dp != 0, p / np.where(dp != 0, dp, 1), 0)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        repulsion = inv.sum(axis=1)
        denom = 1.0 - ratio * repulsion
        step = np.where(denom != 0, ratio / np.where(denom != 0, denom, 1), ratio)
        z = z - np.where(resid < tol, 0, step)
    else:
        raise RootFindingFailure(f"Aberth iteration did not converge in {max_iter} steps")

    # Newton polish; stops improving at machine precision.
    for _ in range(3):
        p, dp = _horner_with_derivative(cs, z)
        ok = dp != 0
        z = np.where(ok, z - p / np.where(ok, dp, 1), z)
    return z


class Kind(str, enum.Enum):
    PISOT = "Pisot"
    GARSIA = "Garsia"
    NEITHER = "Neither"
    NOT_APPLICABLE = "NotApplicable"


@dataclass(frozen=True)
class Classification:
    kind: Kind
    conjugate_moduli: tuple[float, ...]
    dominant_root: float
    roots: tuple[complex, ...] = field(default=(), repr=False)
    diagnostic: str = ""

    def as_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "dominant_root": self.dominant_root,
            "conjugate_moduli": list(self.conjugate_moduli),
            "diagnostic": self.diagnostic,
        }


def classify(poly: IntPolynomial) -> Classification:
    """Decide whether the dominant real root of a monic polynomial is Pisot or Garsia.

    Irreducibility is not verified beyond the rational root test.
    """
    if not poly.is_monic:
        raise NonMonic(f"{poly} is not monic")
    if poly.degree > 1 and poly.integer_roots():
        raise ReduciblePolynomial(f"{poly} has integer root(s) {poly.integer_roots()}")
    roots = poly.roots()
    real_mask = np.abs(roots.imag) <= 1e-9 * np.maximum(1.0, np.abs(roots))
    candidates = [(r.real, i) for i, r in enumerate(roots) if real_mask[i] and r.real > 1.0 + UNIT_BAND]
    if not candidates:
        return Classification(Kind.NOT_APPLICABLE, (), float("nan"), tuple(roots),
                              "no real root above one")
    dominant, idx = max(candidates)
    others = np.delete(roots, idx)
    conj = tuple(float(m) for m in sorted(np.abs(others), reverse=True))
    all_moduli = np.abs(roots)

    if all(m < 1.0 - UNIT_BAND for m in conj):
        kind, diag = Kind.PISOT, ""
    elif np.all(all_moduli > 1.0 + UNIT_BAND) and abs(poly.constant_term) == 2:
        kind, diag = Kind.GARSIA, ""
    else:
        kind = Kind.NEITHER
        near = [m for m in all_moduli if abs(m - 1.0) <= UNIT_BAND]
        diag = f"{len(near)} root(s) within the unit band" if near else ""
    return Classification(kind, conj, float(dominant), tuple(complex(r) for r in roots), diag)

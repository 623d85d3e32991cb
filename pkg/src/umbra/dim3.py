"""Surfaces in R^3: the two-variable flatness compatibility and its rotation profile.

A canonical surface jet is f(x, y) = (x^2 + y^2)/2 + cubic + quartic + quintic,
with f^(i,j) the partial derivative d^i/dx^i d^j/dy^j at 0 and x the direction
of the light source. The second- and third-order flatness conditions give
f^(1,2) = -m + r^-1 and f^(1,3) = -f^(0,3) m + 2 f^(0,3) r^-1 - 3 f^(2,1) m,
which determine (m, r^-1) when the aperture f^(0,3) - 3 f^(2,1) is nonzero.
The fourth-order condition then leaves a polynomial in the jet that has to
vanish in every flat direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ApertureDegenerateError, ArgumentError
from .tensor_jets import BoundaryJet, SymTensor, rotate_domain

PROFILE_SAMPLES = 64
PROFILE_DEGREE = 15
ROOT_GRID = 10_000


def _key(i: int, j: int) -> str:
    return f"f{i}{j}"


@dataclass(frozen=True)
class Jet2D5:
    """Partial derivatives f^(i,j), 3 <= i + j <= 5, of a canonical surface jet."""

    values: dict

    def __post_init__(self):
        vals = {}
        for k in range(3, 6):
            for i in range(k + 1):
                vals[(i, k - i)] = float(self.values.get((i, k - i), 0.0))
        object.__setattr__(self, "values", vals)

    def __getitem__(self, ij) -> float:
        i, j = ij
        if (i, j) == (2, 0) or (i, j) == (0, 2):
            return 1.0
        if i + j <= 2:
            return 0.0
        return self.values[(i, j)]

    @classmethod
    def from_jet(cls, J: BoundaryJet) -> "Jet2D5":
        if J.dim != 2:
            raise ArgumentError("surface jets have two variables")
        vals = {}
        for k in range(3, min(J.order, 5) + 1):
            T = J[k]
            for i in range(k + 1):
                vals[(i, k - i)] = T.entries[(0,) * i + (1,) * (k - i)]
        return cls(vals)

    def to_jet(self) -> BoundaryJet:
        tensors = [SymTensor.zeros(0, 2), SymTensor.zeros(1, 2), SymTensor.identity(2)]
        for k in range(3, 6):
            T = SymTensor.zeros(k, 2)
            for i in range(k + 1):
                T.entries[(0,) * i + (1,) * (k - i)] = self.values[(i, k - i)]
            tensors.append(T)
        return BoundaryJet(tuple(tensors))

    @classmethod
    def random(cls, rng: np.random.Generator, scale: float = 1.0) -> "Jet2D5":
        return cls({(i, k - i): scale * rng.normal() for k in range(3, 6) for i in range(k + 1)})

    def rotate(self, t: float) -> "Jet2D5":
        """Jet of f(R(t)^T (x, y)): the graph turned counter-clockwise by t.

        The x-axis of the rotated jet is the original direction (cos t, -sin t).
        """
        c, s = math.cos(t), math.sin(t)
        R = np.array([[c, s], [-s, c]])
        return Jet2D5.from_jet(rotate_domain(self.to_jet(), R))

    def norm(self) -> float:
        return float(np.sqrt(sum(v * v for v in self.values.values())))

    def to_dict(self) -> dict:
        return {_key(i, j): v for (i, j), v in sorted(self.values.items())}

    @classmethod
    def from_dict(cls, d: dict) -> "Jet2D5":
        return cls({(int(k[1]), int(k[2])): v for k, v in d.items()})


def aperture(J: Jet2D5) -> float:
    return J[0, 3] - 3 * J[2, 1]


def solve_m_r(J: Jet2D5, tol: float = 1e-12) -> tuple[float, float]:
    """(m, r^-1) from the second- and third-order flatness conditions."""
    den = aperture(J)
    if abs(den) <= tol * (1 + J.norm()):
        raise ApertureDegenerateError("f03 - 3 f21 vanishes; (m, 1/r) is not determined")
    f03, f12, f21, f13 = J[0, 3], J[1, 2], J[2, 1], J[1, 3]
    m = -(2 * f03 * f12 - f13) / den
    r_inv = -(f03 * f12 + 3 * f21 * f12 - f13) / den
    return m, r_inv


def f12_residual(J: Jet2D5, m: float, r_inv: float) -> float:
    return J[1, 2] - (-m + r_inv)


def f13_residual(J: Jet2D5, m: float, r_inv: float) -> float:
    return J[1, 3] - (-J[0, 3] * m + 2 * J[0, 3] * r_inv - 3 * J[2, 1] * m)


def f14_rhs(J: Jet2D5, m: float, r_inv: float, variant: str = "classical") -> float:
    """Right-hand side for f^(1,4) of the fourth-order flatness condition."""
    f03, f21, f22, f04, f30 = J[0, 3], J[2, 1], J[2, 2], J[0, 4], J[3, 0]
    rho = r_inv
    base = (-m + 3 * rho) * f04 - 6 * m * f22 - 4 * m * f03 * f21
    if variant == "classical":
        return base - 3 * ((-m + rho) * (-4 * m + rho) * rho + f30 * (m * m - m * rho + rho * rho))
    if variant == "consistent":
        return base - 3 * f30 * m * m + 3 * m**3 - 15 * m * m * rho + 12 * m * rho * rho
    raise ArgumentError("variant must be 'classical' or 'consistent'")


def flat_residual(J: Jet2D5) -> float:
    """The 27-term compatibility polynomial in f^(i,j), in its classical form.

    It equals (f^(0,3) - 3 f^(2,1))^2 times f^(1,4) minus the classical
    fourth-order right-hand side, with (m, r^-1) from solve_m_r.
    """
    f03, f12, f21, f30 = J[0, 3], J[1, 2], J[2, 1], J[3, 0]
    f13, f04, f22, f14 = J[1, 3], J[0, 4], J[2, 2], J[1, 4]
    return (
        -8 * f12 * f21 * f03**3
        - 21 * f12**3 * f03**2
        + 24 * f12 * f21**2 * f03**2
        + f04 * f12 * f03**2
        + f14 * f03**2
        + 4 * f13 * f21 * f03**2
        - 12 * f12 * f22 * f03**2
        + 9 * f12**2 * f30 * f03**2
        - 12 * f13 * f21**2 * f03
        + 30 * f12**2 * f13 * f03
        - 2 * f04 * f13 * f03
        - 54 * f12**3 * f21 * f03
        + 6 * f04 * f12 * f21 * f03
        - 6 * f14 * f21 * f03
        + 6 * f13 * f22 * f03
        + 36 * f12 * f21 * f22 * f03
        - 9 * f12 * f13 * f30 * f03
        - 9 * f12 * f13**2
        + 27 * f12**3 * f21**2
        - 27 * f04 * f12 * f21**2
        + 9 * f14 * f21**2
        + 18 * f12**2 * f13 * f21
        + 6 * f04 * f13 * f21
        - 18 * f13 * f21 * f22
        + 3 * f13**2 * f30
        + 27 * f12**2 * f21**2 * f30
        - 9 * f12 * f13 * f21 * f30
    )


def flat_residual_consistent(J: Jet2D5) -> float:
    """Compatibility polynomial from the self-consistent fourth-order condition.

    Equals den^3 (f^(1,4) - rhs) with den = f^(0,3) - 3 f^(2,1), written in
    M = m den and P = r^-1 den so that it is a polynomial in the jet. It
    vanishes on every genuinely flat direction, e.g. the axis directions of
    the l^4 ball, where the classical form does not.
    """
    f03, f12, f21, f30 = J[0, 3], J[1, 2], J[2, 1], J[3, 0]
    f13, f04, f22, f14 = J[1, 3], J[0, 4], J[2, 2], J[1, 4]
    d = f03 - 3 * f21
    M = -(2 * f03 * f12 - f13)
    P = -(f03 * f12 + 3 * f21 * f12 - f13)
    rhs = (
        (-4 * f03 * f21 * M + f04 * (3 * P - M) - 6 * f22 * M) * d * d
        - 3 * f30 * M * M * d
        + 3 * M**3
        - 15 * M * M * P
        + 12 * M * P * P
    )
    return f14 * d**3 - rhs


RESIDUALS = {"classical": flat_residual, "consistent": flat_residual_consistent}


def _residual_fn(variant: str):
    try:
        return RESIDUALS[variant]
    except KeyError:
        raise ArgumentError("variant must be 'classical' or 'consistent'") from None


@dataclass
class RotationProfile:
    samples: np.ndarray  # t_k
    values: np.ndarray  # residual at t_k
    coefficients: np.ndarray  # c_k for k = -N/2 .. N/2 - 1 (fft order)
    variant: str

    def coefficient(self, k: int) -> complex:
        return complex(self.coefficients[k % len(self.coefficients)])

    def max_above(self, degree: int) -> float:
        N = len(self.coefficients)
        ks = np.fft.fftfreq(N, 1.0 / N).astype(int)
        mask = np.abs(ks) > degree
        return float(np.max(np.abs(self.coefficients[mask]), initial=0.0))

    def evaluate(self, t) -> np.ndarray:
        N = len(self.coefficients)
        ks = np.fft.fftfreq(N, 1.0 / N)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.real(np.exp(1j * np.outer(t, ks)) @ self.coefficients)

    def to_rows(self) -> list[tuple[float, float]]:
        return list(zip(self.samples.tolist(), self.values.tolist()))


class _Laurent:
    """Laurent polynomial in z = e^{it} with dyadic complex coefficients, in exact arithmetic.

    The value is sum_k (re_k + i im_k) / 2^s z^k with integers re_k, im_k.
    Binary floats are dyadic, so products and sums of jet entries and of
    cos t = (z + 1/z)/2, sin t = (z - 1/z)/(2i) are represented exactly.
    """

    __slots__ = ("c", "s")

    def __init__(self, c: dict, s: int = 0):
        self.c = c
        self.s = s

    @classmethod
    def const(cls, x: float) -> "_Laurent":
        num, den = float(x).as_integer_ratio()
        return cls({0: (num, 0)}, den.bit_length() - 1)

    def _lift(self, s: int) -> dict:
        sh = s - self.s
        return {k: (re << sh, im << sh) for k, (re, im) in self.c.items()}

    def __add__(self, other):
        if not isinstance(other, _Laurent):
            other = _Laurent.const(other)
        s = max(self.s, other.s)
        out = self._lift(s)
        for k, (re, im) in other._lift(s).items():
            a, b = out.get(k, (0, 0))
            out[k] = (a + re, b + im)
        return _Laurent(out, s)

    __radd__ = __add__

    def __neg__(self):
        return _Laurent({k: (-re, -im) for k, (re, im) in self.c.items()}, self.s)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, _Laurent):
            other = _Laurent.const(other)
        out: dict = {}
        for k1, (a, b) in self.c.items():
            for k2, (c, d) in other.c.items():
                re, im = out.get(k1 + k2, (0, 0))
                out[k1 + k2] = (re + a * c - b * d, im + a * d + b * c)
        return _Laurent(out, self.s + other.s)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = _Laurent({0: (1, 0)})
        for _ in range(n):
            out = out * self
        return out

    def coefficients(self) -> dict:
        den = 1 << self.s
        return {k: complex(re / den, im / den) for k, (re, im) in sorted(self.c.items()) if re or im}


class _LaurentJet:
    """Entries of J rotated by t, as Laurent polynomials in e^{it}."""

    def __init__(self, J: Jet2D5):
        cos = _Laurent({1: (1, 0), -1: (1, 0)}, 1)
        sin = _Laurent({1: (0, -1), -1: (0, 1)}, 1)
        # the rotated x-axis is (cos t, -sin t) and the rotated y-axis (sin t, cos t)
        a, b = (cos, -sin), (sin, cos)
        self.entries = {}
        for k in range(3, 6):
            for i in range(k + 1):
                # coefficients of X^p Y^(k-p) in (a1 X + a2 Y)^i (b1 X + b2 Y)^(k-i)
                poly = {0: _Laurent({0: (1, 0)})}
                for lin in [a] * i + [b] * (k - i):
                    nxt: dict = {}
                    for p, c in poly.items():
                        nxt[p + 1] = nxt.get(p + 1, _Laurent({})) + c * lin[0]
                        nxt[p] = nxt.get(p, _Laurent({})) + c * lin[1]
                    poly = nxt
                total = _Laurent({})
                for p, c in poly.items():
                    total = total + c * _Laurent.const(J[p, k - p])
                self.entries[(i, k - i)] = total

    def __getitem__(self, ij):
        i, j = ij
        if (i, j) in ((2, 0), (0, 2)):
            return _Laurent({0: (1, 0)})
        if i + j <= 2:
            return _Laurent({})
        return self.entries[(i, j)]


def exact_profile_coefficients(J: Jet2D5, variant: str = "classical") -> dict:
    """Fourier coefficients {k: c_k} of the rotation profile, from an exact expansion.

    Each coefficient is the correctly rounded value of the exact coefficient
    for the given (binary) jet entries, so small coefficients keep their
    relative accuracy, unlike the sampled transform whose error is relative
    to the largest coefficient.
    """
    return _residual_fn(variant)(_LaurentJet(J)).coefficients()


def rotation_profile(J: Jet2D5, samples: int = PROFILE_SAMPLES, variant: str = "classical", method: str = "fft") -> RotationProfile:
    """Fourier coefficients of t -> residual(J rotated by t).

    c_k multiplies e^{ikt}. The classical residual has degree 15; the
    consistent one, being one aperture factor higher, has degree 18.
    ``method="fft"`` transforms the sampled residual; ``method="exact"`` fills
    the coefficients from the exact Laurent expansion instead.
    """
    min_samples = 2 * PROFILE_DEGREE + 1
    if samples < min_samples:
        raise ArgumentError(f"need at least {min_samples} samples to avoid aliasing")
    fn = _residual_fn(variant)
    t = 2 * np.pi * np.arange(samples) / samples
    vals = np.array([fn(J.rotate(tk)) for tk in t])
    if method == "fft":
        coeffs = np.fft.fft(vals) / samples
    elif method == "exact":
        exact = exact_profile_coefficients(J, variant)
        if max((abs(k) for k in exact), default=0) > (samples - 1) // 2:
            raise ArgumentError(f"{samples} samples cannot hold the exact degree-{max(abs(k) for k in exact)} profile")
        coeffs = np.zeros(samples, dtype=complex)
        for k, c in exact.items():
            coeffs[k % samples] = c
    else:
        raise ArgumentError("method must be 'fft' or 'exact'")
    return RotationProfile(t, vals, coeffs, variant)


def leading_coefficient(J: Jet2D5) -> complex:
    """Predicted coefficient (i f03 + 3 f12 - 3i f21 - f30)^5 / 4096 of e^{15it}.

    The real and imaginary parts of the base are summed exactly and rounded
    once, so the result keeps its relative accuracy near the aperture locus.
    """
    F = {ij: Fraction(J[ij]) for ij in ((0, 3), (1, 2), (2, 1), (3, 0))}
    z = complex(float(3 * F[1, 2] - F[3, 0]), float(F[0, 3] - 3 * F[2, 1]))
    return z**5 / 4096


def aperture_profile(J) -> tuple[complex, complex]:
    """(c_+, c_-) with aperture(rotate(J, t)) = c_+ e^{3it} + c_- e^{-3it}."""
    f = J if isinstance(J, Jet2D5) else Jet2D5.from_jet(J)
    cp = 0.5 * (f[0, 3] - 3j * f[1, 2] - 3 * f[2, 1] + 1j * f[3, 0])
    return cp, cp.conjugate()


def aperture_identically_zero(J, tol: float = 1e-10) -> bool:
    f = J if isinstance(J, Jet2D5) else Jet2D5.from_jet(J)
    scale = 1 + f.norm()
    return abs(f[0, 3] - 3 * f[2, 1]) <= tol * scale and abs(f[3, 0] - 3 * f[1, 2]) <= tol * scale


def aperture_gauge(J: Jet2D5) -> np.ndarray:
    """Shear vector removing a cubic of the form |x|^2 <x, c> (zero-aperture case)."""
    return np.array([J[3, 0], J[0, 3]]) / 3.0


@dataclass
class RootReport:
    identically_zero: bool
    count: int
    bound: int
    leading: complex

    @property
    def within_bound(self) -> bool:
        return self.identically_zero or self.count <= self.bound

    def to_dict(self) -> dict:
        return {
            "identically_zero": self.identically_zero,
            "count": self.count,
            "bound": self.bound,
            "leading_coefficient": [self.leading.real, self.leading.imag],
            "within_bound": self.within_bound,
        }


def root_capacity_check(J: Jet2D5, grid: int = ROOT_GRID, variant: str = "classical") -> RootReport:
    """Count sign changes of the rotation profile on a uniform grid of [0, 2 pi)."""
    prof = rotation_profile(J, variant=variant)
    scale = 1e-10 * (1 + J.norm()) ** 6
    degree = PROFILE_DEGREE if variant == "classical" else PROFILE_DEGREE + 3
    lead = prof.coefficient(degree)
    if np.max(np.abs(prof.coefficients)) <= scale:
        return RootReport(True, 0, 2 * degree, lead)
    t = 2 * np.pi * np.arange(grid) / grid
    vals = prof.evaluate(t)
    signs = np.sign(vals)
    signs[signs == 0] = 1
    count = int(np.count_nonzero(signs != np.roll(signs, 1)))
    return RootReport(False, count, 2 * degree, lead)


__all__ = [
    "Jet2D5",
    "RootReport",
    "RotationProfile",
    "aperture",
    "aperture_gauge",
    "aperture_identically_zero",
    "aperture_profile",
    "exact_profile_coefficients",
    "f12_residual",
    "f13_residual",
    "f14_rhs",
    "flat_residual",
    "flat_residual_consistent",
    "leading_coefficient",
    "root_capacity_check",
    "rotation_profile",
    "solve_m_r",
]

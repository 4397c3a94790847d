"""Closed-form scalar functions with analytic derivatives of any order.

These serve two roles: potentials q(x) given in a tiny expression
vocabulary, and boundary control signals f(t) that must be differentiated
analytically up to fourth order.  The vocabulary is deliberately closed
(const, cos, sin, poly, bump, ramp, sums and scalar multiples); this is not
a general expression parser.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import ConfigurationError

__all__ = ["ClosedForm", "Const", "Poly", "Trig", "PiecewisePoly",
           "bump", "ramp", "parse_expression"]


class ClosedForm:
    """Scalar function with exact derivatives, vectorized over numpy arrays."""

    def deriv(self, t, k: int = 1):
        raise NotImplementedError

    def value(self, t):
        return self.deriv(t, 0)

    def __call__(self, t):
        return self.deriv(t, 0)

    def differentiate(self, k: int = 1) -> "ClosedForm":
        return _Derivative(self, k)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Const(float(other))
        return _Sum((self, other))

    __radd__ = __add__

    def __neg__(self):
        return _Scaled(-1.0, self)

    def __sub__(self, other):
        return self + (-other if isinstance(other, ClosedForm) else Const(-float(other)))

    def __mul__(self, c):
        return _Scaled(float(c), self)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Const(ClosedForm):
    c: float = 0.0

    def deriv(self, t, k: int = 1):
        t = np.asarray(t, dtype=float)
        return np.full_like(t, self.c) if k == 0 else np.zeros_like(t)


@dataclass(frozen=True)
class Poly(ClosedForm):
    """Polynomial sum_i coeffs[i] * t**i."""

    coeffs: tuple

    def deriv(self, t, k: int = 1):
        t = np.asarray(t, dtype=float)
        c = np.asarray(self.coeffs, dtype=float)
        if k:
            c = P.polyder(c, k) if k < c.size else np.zeros(1)
        return P.polyval(t, c)


@dataclass(frozen=True)
class Trig(ClosedForm):
    """amp * cos(freq t) or amp * sin(freq t)."""

    kind: str
    freq: float
    amp: float = 1.0

    def __post_init__(self):
        if self.kind not in ("cos", "sin"):
            raise ConfigurationError(f"unknown trig kind {self.kind!r}")

    def deriv(self, t, k: int = 1):
        t = np.asarray(t, dtype=float)
        shift = k * np.pi / 2.0
        phase = self.freq * t + (shift if self.kind == "cos" else shift - np.pi / 2.0)
        # d^k cos(ft) = f^k cos(ft + k pi/2); sin(ft) = cos(ft - pi/2)
        return self.amp * self.freq**k * np.cos(phase)


@dataclass(frozen=True)
class PiecewisePoly(ClosedForm):
    """Polynomial in u = (t - t0)/(t1 - t0) on [t0, t1], constants outside."""

    t0: float
    t1: float
    coeffs: tuple
    left: float = 0.0
    right: float = 0.0

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ConfigurationError("degenerate support interval")

    def deriv(self, t, k: int = 1):
        t = np.asarray(t, dtype=float)
        u = (t - self.t0) / (self.t1 - self.t0)
        c = np.asarray(self.coeffs, dtype=float)
        if k:
            c = P.polyder(c, k) if k < c.size else np.zeros(1)
        inside = P.polyval(np.clip(u, 0.0, 1.0), c) / (self.t1 - self.t0) ** k
        if k == 0:
            out = np.where(u < 0.0, self.left, np.where(u > 1.0, self.right, inside))
        else:
            out = np.where((u < 0.0) | (u > 1.0), 0.0, inside)
        return out


def bump(center: float, width: float, amplitude: float = 1.0, smoothness: int = 3) -> PiecewisePoly:
    """Polynomial bump amplitude * (4 u (1-u))**p on [center +- width/2].

    The 2(p-1)-degree spline has p-1 continuous derivatives and a vanishing
    (p-1)-jet at the support edges; the default p=3 gives a C^2 bump of
    degree 6.  Controls that get differentiated twice should use p >= 5.
    """
    if width <= 0.0:
        raise ConfigurationError("bump width must be positive")
    if smoothness < 2:
        raise ConfigurationError("bump smoothness must be >= 2")
    base = P.polypow([0.0, 1.0, -1.0], smoothness)  # (u - u^2)^p
    coeffs = tuple(float(amplitude) * 4.0**smoothness * base)
    return PiecewisePoly(center - width / 2.0, center + width / 2.0, coeffs)


def ramp(t0: float, t1: float) -> PiecewisePoly:
    """Quintic smoothstep from 0 to 1 on [t0, t1], C^2 with flat 2-jets."""
    return PiecewisePoly(t0, t1, (0.0, 0.0, 0.0, 10.0, -15.0, 6.0), left=0.0, right=1.0)


@dataclass(frozen=True)
class _Scaled(ClosedForm):
    c: float
    f: ClosedForm

    def deriv(self, t, k: int = 1):
        return self.c * self.f.deriv(t, k)


@dataclass(frozen=True)
class _Sum(ClosedForm):
    parts: tuple

    def deriv(self, t, k: int = 1):
        out = self.parts[0].deriv(t, k)
        for p in self.parts[1:]:
            out = out + p.deriv(t, k)
        return out


@dataclass(frozen=True)
class _Derivative(ClosedForm):
    f: ClosedForm
    shift: int

    def deriv(self, t, k: int = 1):
        return self.f.deriv(t, k + self.shift)


_ATOM = re.compile(r"^(const|cos|sin|poly|bump|ramp)\s*\(([^()]*)\)$")


def _split_terms(text: str):
    """Split on top-level + and - (binary); yields (sign, chunk)."""
    terms, depth, start, sign = [], 0, 0, 1.0
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif depth == 0 and ch in "+-" and i > start:
            prev = text[start:i].strip()
            if prev and prev[-1] not in "eE*+,-":
                terms.append((sign, prev))
                sign = 1.0 if ch == "+" else -1.0
                start = i + 1
        i += 1
    last = text[start:].strip()
    if last:
        terms.append((sign, last))
    return terms


def _parse_atom(chunk: str) -> ClosedForm:
    chunk = chunk.strip()
    m = _ATOM.match(chunk)
    if m is None:
        try:
            return Const(float(chunk))
        except ValueError:
            raise ConfigurationError(f"cannot parse expression atom {chunk!r}") from None
    name, argtext = m.group(1), m.group(2)
    try:
        args = [float(a) for a in argtext.split(",")] if argtext.strip() else []
    except ValueError:
        raise ConfigurationError(f"bad arguments in {chunk!r}") from None
    if name == "const" and len(args) == 1:
        return Const(args[0])
    if name in ("cos", "sin") and len(args) == 1:
        return Trig(name, args[0])
    if name == "poly" and args:
        return Poly(tuple(args))
    if name == "bump" and 2 <= len(args) <= 4:
        a = args + [1.0, 3.0][len(args) - 2:]
        return bump(a[0], a[1], a[2], int(a[3]))
    if name == "ramp" and len(args) == 2:
        return ramp(args[0], args[1])
    raise ConfigurationError(f"wrong argument count in {chunk!r}")


def parse_expression(text: str) -> ClosedForm:
    """Parse the closed vocabulary: numbers, const/cos/sin/poly/bump/ramp,
    'c*atom' scaling and '+'/'-' combinations.  Example: "2 + cos(3)" is
    the function 2 + cos(3 x)."""
    if not isinstance(text, str) or not text.strip():
        raise ConfigurationError("empty expression")
    terms = _split_terms(text.strip())
    if not terms:
        raise ConfigurationError(f"cannot parse expression {text!r}")
    parsed = []
    for sign, chunk in terms:
        depth = 0
        star = -1
        for i, ch in enumerate(chunk):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "*" and depth == 0:
                star = i
                break
        if star >= 0:
            try:
                coef = float(chunk[:star])
            except ValueError:
                raise ConfigurationError(f"bad coefficient in {chunk!r}") from None
            atom = _parse_atom(chunk[star + 1:])
        else:
            coef = 1.0
            atom = _parse_atom(chunk)
        parsed.append(_Scaled(sign * coef, atom))
    return parsed[0] if len(parsed) == 1 else _Sum(tuple(parsed))

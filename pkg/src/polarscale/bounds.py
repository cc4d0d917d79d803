"""Certified suprema for non-polynomial test functions.

Two quantities matter: the per-step contraction of the erasure recursion
on a test function g,

    b_m = sup_(0,1) T^(m+1) g / T^m g,

and the channel-universal operator bound

    L_g = sup over z in (0,1), y in [z sqrt(2-z^2), z(2-z)] of
          (g(z^2) + g(y)) / (2 g(z)),

which caps E[g(Z_n)] <= (sup g) L_g^n for every BMS channel.  Both
suprema are certified by the outward-rounded interval branch-and-bound
in treeval; results come back as enclosures, and a paper/reference value
can be attached to flag disagreement rather than hide it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import bec, channels as ch, treeval
from .construction import ChannelLevelStats


@dataclass(frozen=True)
class TestFunction:
    """g(z) = (a z^2 + b z + c) (z(1-z))^d, or the pure family z^alpha (1-z)^beta.

    Coefficients are kept as exact fractions; a, b >= 0 and c > 0 so g is
    positive on (0,1) with g(0) = g(1) = 0.
    """

    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)
    c: Fraction = Fraction(1)
    d: Fraction = Fraction(1)
    alpha: Fraction | None = None
    beta: Fraction | None = None

    def __post_init__(self):
        if self.alpha is None:
            if self.a < 0 or self.b < 0 or self.c <= 0:
                raise ValueError("need a, b >= 0 and c > 0")
            if not 0 < self.d <= 1:
                raise ValueError("exponent d must be in (0, 1]")
        else:
            if self.beta is None or not (0 < self.alpha < 1 and 0 < self.beta < 1):
                raise ValueError("pure-power family needs alpha, beta in (0,1)")

    @classmethod
    def power(cls, alpha, beta=None):
        """z^alpha (1-z)^beta; symmetric (z(1-z))^alpha when beta omitted."""
        alpha = Fraction(alpha)
        beta = Fraction(beta) if beta is not None else alpha
        if alpha == beta:
            return cls(c=Fraction(1), d=alpha)
        return cls(alpha=alpha, beta=beta)

    @classmethod
    def parse(cls, text):
        """Literals: 'pow:2/3', 'pow:2/3,3/4', 'poly:0.4,0.25,0.95;d=3/4'."""
        kind, _, rest = text.partition(":")
        if kind == "pow":
            parts = rest.split(",")
            return cls.power(*(Fraction(p) for p in parts))
        if kind == "poly":
            coeffs, _, dpart = rest.partition(";d=")
            a, b, c = (Fraction(v) for v in coeffs.split(","))
            return cls(a=a, b=b, c=c, d=Fraction(dpart))
        raise ValueError(f"cannot parse test function {text!r}")

    def spec(self):
        """The treeval F0Spec of this function."""
        if self.alpha is not None:
            return treeval.F0Spec(ghat=(1.0,), alpha=float(self.alpha),
                                  beta=float(self.beta))
        ghat = (float(self.c), float(self.b), float(self.a))
        while len(ghat) > 1 and ghat[-1] == 0.0:
            ghat = ghat[:-1]
        return treeval.F0Spec(ghat=ghat, alpha=float(self.d), beta=float(self.d))

    def __call__(self, z):
        return self.spec().f0_values(z)

    @property
    def sup_value(self):
        """sup of g over [0,1] (dense grid plus a rounding pad)."""
        z = np.linspace(0.0, 1.0, 200_001)
        return float(np.max(self(z))) * (1.0 + 1e-9)

    def describe(self):
        if self.alpha is not None:
            return f"z^{self.alpha} (1-z)^{self.beta}"
        return f"({self.a} z^2 + {self.b} z + {self.c}) (z(1-z))^{self.d}"


G_TABLE3 = TestFunction.power(Fraction(2, 3))
G_UNIVERSAL = TestFunction(a=Fraction(2, 5), b=Fraction(1, 4),
                           c=Fraction(19, 20), d=Fraction(3, 4))


@dataclass(frozen=True)
class SupEnclosure:
    """Certified [lo, hi] around a supremum, with reference comparison."""

    lo: float
    hi: float
    quantity: str
    cells: int
    converged: bool
    reference: float | None = None
    detail: dict = field(default_factory=dict)

    @property
    def mid(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def reference_inside(self):
        if self.reference is None:
            return None
        return self.lo <= self.reference <= self.hi


def sup_ratio_bec(g, m, precision=1e-4, reference=None):
    """Certified enclosure of b_m for test function g (f_0 = g)."""
    if m > 10:
        raise ValueError("b_m capped at m = 10")
    enc = treeval.maximize_ratio(g.spec(), m, tol=precision)
    return SupEnclosure(lo=enc.lo, hi=enc.hi, quantity=f"b_{m}",
                        cells=enc.cells, converged=enc.converged,
                        reference=reference,
                        detail={"g": g.describe(), "argmax": enc.argopt})


def b0_power_closed_form(alpha, beta, grid=2_000_001):
    """b_0 for z^alpha (1-z)^beta via its closed one-step form
    sup [z^a (1+z)^b + (2-z)^a (1-z)^b] / 2 (reference value, not certified)."""
    a, b = float(alpha), float(beta)
    z = np.linspace(0.0, 1.0, grid)
    vals = (z**a * (1.0 + z) ** b + (2.0 - z) ** a * (1.0 - z) ** b) / 2.0
    return float(np.max(vals))


def compute_Lg(g, precision=2e-4, reference=None):
    """Certified enclosure of the operator bound L_g.

    Only the alpha = beta family is admissible (the factorization that
    removes the endpoint singularity needs the symmetric exponent).
    """
    spec = g.spec()
    enc = treeval.maximize_lg(spec, tol=precision)
    return SupEnclosure(lo=enc.lo, hi=enc.hi, quantity="L_g",
                        cells=enc.cells, converged=enc.converged,
                        reference=reference,
                        detail={"g": g.describe(), "log2_lo": math.log2(enc.lo),
                                "log2_hi": math.log2(enc.hi)})


@dataclass(frozen=True)
class DecayRow:
    n: int
    value: float
    bound: float
    slack: float

    @property
    def holds(self):
        return self.value <= self.bound + self.slack


def verify_universal_decay(W, g=None, Lg=None, n_max=14, stats=None, M=512,
                           scale=None):
    """Check E[g(Z_n)] <= scale * Lg^n level by level.

    Defaults to the universal pair: g the quartic-weighted 3/4-power
    function, Lg = 2^-0.202, scale = sup g.  Exact for the BEC; density
    evolution with reported quantization slack otherwise.  Violations are
    reported as rows, never raised.
    """
    if g is None:
        g = G_UNIVERSAL
    if Lg is None:
        Lg = 2.0 ** -0.202
    if scale is None:
        scale = g.sup_value
    rows = []
    if W.kind == "bec":
        for n in range(0, n_max + 1):
            val = bec.expectation_of_test(lambda v: float_g(g, v), W.param, n)
            rows.append(DecayRow(n, val, scale * Lg**n, 1e-12))
        return rows
    if stats is None:
        stats = ChannelLevelStats(W, n_max, M)
    for n in range(0, n_max + 1):
        val = stats.mean_z_functional(n, lambda z: float_g(g, z))
        rows.append(DecayRow(n, val, scale * Lg**n, stats.slack[n] + 1e-12))
    return rows


def float_g(g, z):
    return g.spec().f0_values(np.asarray(z, dtype=float))


def universal_decay_34(W, n_max=14, stats=None, M=512):
    """The headline universal decay: E[(Z_n(1-Z_n))^(3/4)] <= 2^(-0.202 n)."""
    g34 = TestFunction.power(Fraction(3, 4))
    return verify_universal_decay(W, g=g34, Lg=2.0 ** -0.202, n_max=n_max,
                                  stats=stats, M=M, scale=1.0)

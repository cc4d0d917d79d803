"""Exact rational-polynomial machinery for the certified lower bounds.

The iterate family starts from f(z) = z(1-z) and applies

    f_{m+1}(z) = ( f_m(z^2) + f_m(1-(1-z)^2) ) / 2,

so 2^m f_m has integer coefficients.  This module computes those integer
polynomials exactly, certifies the infimum

    a_m = inf_{(0,1)} f_{m+1}/f_m

by Sturm root isolation of the critical-point polynomial, certifies
concavity of f_m on [0,1] (Sturm for small m, a Descartes sign-variation
certificate for large m where the Sturm chain is out of reach), and turns
a_m enclosures into the scaling-exponent lower bounds mu_m = -1/log2 a_m.

Integer polynomials are coefficient lists, low degree first, trailing
zeros stripped (gmpy2 integers when available).  All certificates are
exact: no floating point enters any decision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

try:
    from gmpy2 import mpz, gcd as _gcd
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    from math import gcd as _gcd

    def mpz(x=0):
        return int(x)

from . import treeval

# -- integer polynomial core ------------------------------------------------


def ptrim(p):
    while p and p[-1] == 0:
        p.pop()
    return p


def padd(a, b):
    n = max(len(a), len(b))
    r = [mpz(0)] * n
    for i, c in enumerate(a):
        r[i] += c
    for i, c in enumerate(b):
        r[i] += c
    return ptrim(r)


def psub(a, b):
    n = max(len(a), len(b))
    r = [mpz(0)] * n
    for i, c in enumerate(a):
        r[i] += c
    for i, c in enumerate(b):
        r[i] -= c
    return ptrim(r)


def pmul(a, b):
    if not a or not b:
        return []
    r = [mpz(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                r[i + j] += ai * bj
    return ptrim(r)


def pdiff(p):
    return ptrim([mpz(i) * p[i] for i in range(1, len(p))])


def _compose_square(p):
    r = [mpz(0)] * (2 * len(p) - 1) if p else []
    for i, c in enumerate(p):
        r[2 * i] = c
    return ptrim(r)


def _compose_double(p):
    """p(2z - z^2) by Horner in the outer polynomial."""
    if not p:
        return []
    t = [mpz(0), mpz(2), mpz(-1)]
    r = [p[-1]]
    for c in reversed(p[:-1]):
        r = padd(pmul(r, t), [c])
    return r


def peval_fraction(p, x):
    """Exact value of p at a Fraction."""
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + int(c)
    return acc


def psign_at(p, x):
    """Exact sign of p at a Fraction, via the scaled integer Horner
    sum c_i num^i den^(deg-i)."""
    if not p:
        return 0
    num, den = mpz(x.numerator), mpz(x.denominator)
    acc = mpz(p[-1])
    dpow = mpz(1)
    for c in reversed(p[:-1]):
        dpow *= den
        acc = acc * num + c * dpow
    return (acc > 0) - (acc < 0)


# -- the f_m family ---------------------------------------------------------

_F_CACHE = {0: [mpz(0), mpz(1), mpz(-1)]}  # 2^m f_m


def f_int_poly(m):
    """Integer coefficients of 2^m f_m (degree 2^(m+1))."""
    mm = max(k for k in _F_CACHE if k <= m)
    p = _F_CACHE[mm]
    for k in range(mm, m):
        p = padd(_compose_square(p), _compose_double(p))
        _F_CACHE[k + 1] = p
    return _F_CACHE[m]


def f_eval(m, z):
    """Exact f_m at a Fraction z."""
    z = Fraction(z)
    return peval_fraction(f_int_poly(m), z) / Fraction(2**m)


_U_CACHE = {}


def u_int_poly(m):
    """Integer coefficients of 2^m u_m where f_m = z(1-z) u_m.

    u_m is strictly positive on [0,1] (u_m(0) = u_m(1) = 1), so the ratio
    f_{m+1}/f_m = u_{m+1}/(2 u_m)-style quotients have no 0/0 at the ends.
    """
    if m in _U_CACHE:
        return _U_CACHE[m]
    p = f_int_poly(m)
    q = p[1:]  # divide by z
    # divide by (1 - z): (1-z) * out = q gives out_k = q_k + out_{k-1}
    out = []
    acc = mpz(0)
    for k in range(len(q) - 1):
        acc = acc + q[k]
        out.append(acc)
    if q[-1] + out[-1] != 0:
        raise ArithmeticError("f_m not divisible by z(1-z)")
    _U_CACHE[m] = ptrim(out)
    return _U_CACHE[m]


# -- public polynomial wrapper ----------------------------------------------


class RationalPoly:
    """Univariate polynomial with exact Fraction coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        cs = [Fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @property
    def degree(self):
        return len(self.coeffs) - 1 if self.coeffs else -1

    def __eq__(self, other):
        return isinstance(other, RationalPoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        return RationalPoly(
            [
                (self.coeffs[i] if i < len(self.coeffs) else 0)
                + (other.coeffs[i] if i < len(other.coeffs) else 0)
                for i in range(n)
            ]
        )

    def __mul__(self, other):
        if isinstance(other, RationalPoly):
            if not self.coeffs or not other.coeffs:
                return RationalPoly([])
            r = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                for j, b in enumerate(other.coeffs):
                    r[i + j] += a * b
            return RationalPoly(r)
        return RationalPoly([c * Fraction(other) for c in self.coeffs])

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + (other * -1)

    def derivative(self):
        return RationalPoly([i * c for i, c in enumerate(self.coeffs)][1:])

    def compose(self, inner):
        acc = RationalPoly([])
        for c in reversed(self.coeffs):
            acc = acc * inner + RationalPoly([c])
        return acc

    def __call__(self, x):
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * Fraction(x) + c
        return acc

    def __repr__(self):
        return f"RationalPoly(deg={self.degree})"


def polar_iterate(f):
    """One exact polarization step: z -> (f(z^2) + f(1-(1-z)^2)) / 2."""
    z2 = RationalPoly([0, 0, 1])
    t0 = RationalPoly([0, 2, -1])
    return (f.compose(z2) + f.compose(t0)) * Fraction(1, 2)


# -- Sturm chains ------------------------------------------------------------


def _content(p):
    g = mpz(0)
    for c in p:
        g = _gcd(g, c)
        if g == 1:
            break
    return g


def _primitive(p):
    g = _content(p)
    if g > 1:
        return [c // g for c in p]
    return list(p)


def sturm_chain(p):
    """Sturm chain of an integer polynomial.

    Uses pseudo-division with an even power of the leading coefficient so
    every element is a positive multiple of the classical chain element;
    contents are stripped to tame coefficient growth.
    """
    chain = [_primitive(list(p)), _primitive(pdiff(p))]
    while len(chain[-1]) > 1:
        A, B = chain[-2], chain[-1]
        d = len(A) - len(B)
        lc = B[-1]
        e = d + 1
        if lc < 0 and e % 2 == 1:
            e += 1
        scale = lc**e
        R = [c * scale for c in A]
        for k in range(len(A) - 1, len(B) - 2, -1):
            if k >= len(R) or R[k] == 0:
                continue
            f = R[k] // lc
            off = k - (len(B) - 1)
            for j, bj in enumerate(B):
                R[off + j] -= f * bj
        ptrim(R)
        if not R:
            break
        chain.append(_primitive([-c for c in R]))
    return chain


def _variations_at(chain, x):
    signs = [s for s in (psign_at(p, x) for p in chain) if s != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def sturm_count(chain, lo, hi):
    """Distinct real roots in (lo, hi] given the chain of p."""
    return _variations_at(chain, Fraction(lo)) - _variations_at(chain, Fraction(hi))


def _deflate_root(p, r):
    """Divide out (x - r)^k exactly for a rational root r of an integer
    polynomial; returns integer coefficients of p / (x - r)^k."""
    r = Fraction(r)
    q = [Fraction(int(c)) for c in p]

    def value(cs):
        acc = Fraction(0)
        for c in reversed(cs):
            acc = acc * r + c
        return acc

    while q and value(q) == 0:
        # synthetic division by (x - r): Horner partial sums are the quotient
        out = []
        acc = Fraction(0)
        for c in reversed(q):
            acc = acc * r + c
            out.append(acc)
        q = out[:-1][::-1]
    if not q:
        return []
    den = math.lcm(*[c.denominator for c in q])
    return ptrim([mpz(int(c * den)) for c in q])


def sturm_root_count(p, lo, hi):
    """Exact number of distinct real roots of p in (lo, hi].

    p may be a RationalPoly or an integer coefficient list.  Endpoint
    roots are removed by exact deflation: a root at lo is excluded from
    the half-open interval, a root at hi is counted.
    """
    if isinstance(p, RationalPoly):
        den = math.lcm(*[c.denominator for c in p.coeffs]) if p.coeffs else 1
        p = [mpz(int(c * den)) for c in p.coeffs]
    else:
        p = list(p)
    if not p:
        raise ValueError("zero polynomial has no root count")
    lo, hi = Fraction(lo), Fraction(hi)
    if not lo < hi:
        raise ValueError("need lo < hi")
    extra = 0
    if peval_fraction(p, hi) == 0:
        p = _deflate_root(p, hi)
        extra = 1
    if p and peval_fraction(p, lo) == 0:
        p = _deflate_root(p, lo)
    if not p:
        raise ValueError("zero polynomial after deflation")
    if len(p) == 1:
        return extra
    return sturm_count(sturm_chain(p), lo, hi) + extra


# -- Descartes bound and subdivision certificates ----------------------------


def _taylor_shift1(p):
    q = list(p)
    n = len(q)
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            q[j] += q[j + 1]
    return q


def _descartes_vars_01(p):
    """Sign variations bounding the number of roots in (0, 1)."""
    q = _taylor_shift1(list(reversed(p)))
    signs = [(c > 0) - (c < 0) for c in q if c != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def descartes_no_roots_01(p, max_depth=40):
    """True if p provably has no root in (0, 1) (exact VCA subdivision).

    Returns (certified: bool, nodes: int).  certified=False only means the
    subdivision budget ran out, never that a root exists.
    """
    stack = [(list(p), 0)]
    nodes = 0
    while stack:
        q, depth = stack.pop()
        nodes += 1
        v = _descartes_vars_01(q)
        if v == 0:
            continue
        if depth >= max_depth:
            return False, nodes
        d = len(q) - 1
        left = [c << (d - i) for i, c in enumerate(q)]  # q(x/2) * 2^d
        right = _taylor_shift1(left)                    # q((x+1)/2) * 2^d
        if right and right[0] == 0:
            return False, nodes  # root exactly at the split point
        stack.append((left, depth + 1))
        stack.append((right, depth + 1))
    return True, nodes


# -- concavity certificates ---------------------------------------------------


@dataclass(frozen=True)
class ConcavityCertificate:
    m: int
    concave: bool
    method: str
    detail: str = ""

    def __bool__(self):
        return self.concave


_CONCAVITY_CACHE = {}
STURM_CONCAVITY_LIMIT = 6  # chain degree 2^(m+1) - 2 stays manageable here


def certify_concavity(m):
    """Certify f_m'' <= 0 on [0, 1] exactly.

    m <= STURM_CONCAVITY_LIMIT: Sturm count of f_m'' roots in (0,1) plus a
    sign sample per root-free interval.  Larger m: Descartes/VCA no-root
    certificate (the Sturm chain coefficients blow up past degree ~500),
    plus exact endpoint and midpoint sign checks.
    """
    if m in _CONCAVITY_CACHE:
        return _CONCAVITY_CACHE[m]
    fpp = pdiff(pdiff(f_int_poly(m)))
    if not fpp:
        cert = ConcavityCertificate(m, True, "trivial", "f'' = 0")
        _CONCAVITY_CACHE[m] = cert
        return cert
    s_mid = psign_at(fpp, Fraction(1, 2))
    s0 = (fpp[0] > 0) - (fpp[0] < 0)  # sign at 0 is the constant term
    s1 = psign_at(fpp, Fraction(1))
    if s_mid > 0 or s0 > 0 or s1 > 0:
        cert = ConcavityCertificate(m, False, "sign", "f'' > 0 somewhere")
        _CONCAVITY_CACHE[m] = cert
        return cert
    if m <= STURM_CONCAVITY_LIMIT:
        chain = sturm_chain(fpp)
        nroots = sturm_count(chain, Fraction(0), Fraction(1))
        if nroots == 0:
            cert = ConcavityCertificate(
                m, True, "sturm", f"no interior roots, f''(1/2) sign {s_mid}")
        else:
            # roots may exist with even multiplicity; sample between them
            cert = _concavity_by_isolation(m, fpp, chain, nroots)
    else:
        ok, nodes = descartes_no_roots_01(fpp)
        if ok:
            cert = ConcavityCertificate(
                m, True, "descartes", f"VCA nodes {nodes}, boundary signs <= 0")
        else:
            cert = ConcavityCertificate(m, False, "descartes",
                                        "subdivision budget exhausted")
    _CONCAVITY_CACHE[m] = cert
    return cert


def _concavity_by_isolation(m, fpp, chain, nroots):
    """Handle f'' with interior roots: concave iff the sign never goes +.

    In each isolating interval with nonpositive endpoint signs and one
    distinct root, f'' cannot become positive (that would force a second
    crossing); the root-free gaps are settled by one exact sign sample.
    """
    intervals = _isolate_by_sturm(chain, Fraction(0), Fraction(1), nroots)
    samples = []
    prev = Fraction(0)
    for lo, hi in intervals:
        if psign_at(fpp, lo) > 0 or psign_at(fpp, hi) > 0:
            return ConcavityCertificate(m, False, "sturm",
                                        f"f'' > 0 at an isolation endpoint near ({lo}, {hi})")
        if lo > prev:
            samples.append((prev + lo) / 2)
        prev = hi
    if prev < 1:
        samples.append((prev + 1) / 2)
    for s in samples:
        if psign_at(fpp, s) > 0:
            return ConcavityCertificate(m, False, "sturm", f"f'' > 0 at {s}")
    return ConcavityCertificate(m, True, "sturm",
                                f"{nroots} interior touch points, sign never positive")


def _isolate_by_sturm(chain, lo, hi, count):
    """Disjoint isolating intervals, one distinct root each, in (lo, hi]."""
    if count == 0:
        return []
    if count == 1:
        return [(lo, hi)]
    mid = (lo + hi) / 2
    cl = sturm_count(chain, lo, mid)
    return (_isolate_by_sturm(chain, lo, mid, cl)
            + _isolate_by_sturm(chain, mid, hi, count - cl))


# -- certified a_m -----------------------------------------------------------


@dataclass(frozen=True)
class CertifiedBound:
    """A certified rational enclosure [lo, hi] of a real quantity."""

    lo: Fraction
    hi: Fraction
    method: str
    detail: dict = field(default_factory=dict)

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def mid(self):
        return float((self.lo + self.hi) / 2)

    def __contains__(self, x):
        return self.lo <= Fraction(x) <= self.hi


STURM_AM_LIMIT = 6  # exact chains up to here; interval method beyond


def _ratio_interval_exact(m, lo, hi):
    """Exact rational enclosure of f_{m+1}/f_m over [lo, hi] via the
    positive-branch product tree (u-form; valid on the closed interval)."""
    lo, hi = Fraction(lo), Fraction(hi)
    num = _u_tree_interval(m + 1, lo, hi)
    den = _u_tree_interval(m, lo, hi)
    return num[0] / den[1], num[1] / den[0]


def _u_tree_interval(m, lo, hi):
    """Exact enclosure of u_m = f_m/(z(1-z)) over [lo, hi] in rationals."""
    branches = [(lo, hi, Fraction(1), Fraction(1))]
    for _ in range(m):
        nxt = []
        for vlo, vhi, wlo, whi in branches:
            # squaring branch: factor x(1+x), increasing
            nxt.append((vlo * vlo, vhi * vhi,
                        wlo * vlo * (1 + vlo), whi * vhi * (1 + vhi)))
            # doubling branch: factor (2-x)(1-x), decreasing
            nxt.append((vlo * (2 - vlo), vhi * (2 - vhi),
                        wlo * (2 - vhi) * (1 - vhi), whi * (2 - vlo) * (1 - vlo)))
        branches = nxt
    scale = Fraction(1, 2**m)
    return (sum(b[2] for b in branches) * scale,
            sum(b[3] for b in branches) * scale)


def _w_poly(m):
    """Critical-point polynomial of the ratio: U'_{m+1} U_m - U_{m+1} U'_m
    (positive multiple of the numerator of (f_{m+1}/f_m)')."""
    um = u_int_poly(m)
    um1 = u_int_poly(m + 1)
    return _primitive(psub(pmul(pdiff(um1), um), pmul(um1, pdiff(um))))


def infimum_ratio(m, precision=Fraction(1, 10**5)):
    """Certified enclosure of a_m = inf_(0,1) f_{m+1}/f_m.

    m <= STURM_AM_LIMIT: exact Sturm pipeline -- isolate every critical
    point of the ratio in (0, 1), evaluate the ratio exactly at rational
    roots or enclose it over refined isolating intervals, and take the
    endpoint limits (both equal 1).  Beyond that the certified interval
    branch-and-bound on the product-tree enclosures takes over; the
    result is still a true enclosure.
    """
    precision = Fraction(precision)
    if m <= STURM_AM_LIMIT:
        return _infimum_sturm(m, precision)
    return _infimum_interval(m, float(precision))


def _infimum_interval(m, tol):
    enc = treeval.minimize_ratio(treeval.ZLOGZ, m, tol=tol)
    if not enc.converged:
        raise RuntimeError(f"interval method did not converge for m={m}")
    return CertifiedBound(
        lo=Fraction(enc.lo), hi=Fraction(enc.hi), method="interval-bb",
        detail={"cells": enc.cells, "argmin": enc.argopt})


def _infimum_sturm(m, precision):
    w = _w_poly(m)
    # roots at 0 or 1 correspond to the endpoint limits (which equal 1,
    # never the minimum); divide them out so the chain endpoints are clean
    k = 0
    while w[k] == 0:
        k += 1
    w = w[k:]
    if psign_at(w, Fraction(1)) == 0:
        w = _deflate_root(w, Fraction(1))
    chain = sturm_chain(w)
    total = sturm_count(chain, Fraction(0), Fraction(1))
    # interior critical points; endpoint limits of the ratio are exactly 1
    intervals = _isolate_by_sturm(chain, Fraction(0), Fraction(1), total)
    best_lo, best_hi = Fraction(1), Fraction(1)
    argmin = None
    for lo, hi in intervals:
        lo, hi, root = _refine_root(w, chain, lo, hi, precision / 16)
        if root is not None:
            val = _ratio_exact_at(m, root)
            rlo = rhi = val
        else:
            rlo, rhi = _ratio_interval_exact(m, lo, hi)
        if rlo < best_lo:
            argmin = (lo + hi) / 2
        best_lo = min(best_lo, rlo)
        best_hi = min(best_hi, rhi)
    return CertifiedBound(lo=best_lo, hi=best_hi, method="sturm",
                          detail={"critical_points": total,
                                  "argmin": float(argmin) if argmin is not None else None})


def _ratio_exact_at(m, z):
    num = peval_fraction(u_int_poly(m + 1), z)
    den = peval_fraction(u_int_poly(m), z)
    return num / (2 * den)


def _refine_root(w, chain, lo, hi, width_goal):
    """Shrink an isolating interval; detect exact dyadic/simple roots."""
    s_lo = psign_at(w, lo)
    s_hi = psign_at(w, hi)
    for _ in range(4096):
        if hi - lo <= width_goal:
            break
        mid = (lo + hi) / 2
        s_mid = psign_at(w, mid)
        if s_mid == 0:
            return lo, hi, mid  # exact rational root
        if s_lo != 0 and s_mid != s_lo:
            hi, s_hi = mid, s_mid
        elif s_hi != 0 and s_mid != s_hi:
            lo, s_lo = mid, s_mid
        else:
            # even-multiplicity root: fall back to Sturm counts per half
            if sturm_count(chain, lo, mid) >= 1:
                hi, s_hi = mid, s_mid
            else:
                lo, s_lo = mid, s_mid
    return lo, hi, None


def mu_from_a(bound):
    """Map an a_m enclosure to the mu_m = -1/log2(a_m) enclosure.

    mu is increasing in a on (0,1); endpoints are padded outward to
    absorb the float evaluation of the logarithm.
    """
    lo = -1.0 / math.log2(float(bound.lo))
    hi = -1.0 / math.log2(float(bound.hi))
    for _ in range(4):
        lo = math.nextafter(lo, 0.0)
        hi = math.nextafter(hi, math.inf)
    return lo, hi


def mu_lower(m, precision=Fraction(1, 10**5), require_suitable=True):
    """Certified lower-bound exponent mu_m = -1/log2 a_m.

    Requires f_m concave ('suitable') for the universal bound to apply;
    pass require_suitable=False to compute the candidate value anyway
    (concavity past m=10 is conjectural), flagged in the result detail.
    """
    cert = certify_concavity(m)
    if not cert and require_suitable:
        raise ValueError(f"m={m} is not certified suitable: {cert.detail}")
    a = infimum_ratio(m, precision)
    lo, hi = mu_from_a(a)
    return CertifiedBound(
        lo=Fraction(lo), hi=Fraction(hi), method=a.method,
        detail={"a_m": (a.lo, a.hi), "suitable": bool(cert),
                "concavity_method": cert.method})

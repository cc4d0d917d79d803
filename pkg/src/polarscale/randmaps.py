"""Random compositions of the two polarization maps and their inverses.

A word (b_1, ..., b_n) acts on [0,1] by composing t_0(z) = 2z - z^2 and
t_1(z) = z^2 in word order (b_1 applied first).  Every composition is a
strictly increasing polynomial fixing 0 and 1, and a random word's
composition converges to a step function whose jump location -- the
threshold point -- is uniform on [0,1].

Preimages go through the inverse maps t_0^{-1}(y) = 1 - sqrt(1-y) and
t_1^{-1}(y) = sqrt(y) in reverse word order.  Interval lengths under the
inverse composition shrink like 2^{n (1/(2 ln 2) - 1)}; the length is
propagated multiplicatively (d' = d / (sqrt(hi) + sqrt(lo)) and the
mirrored form), which never suffers endpoint cancellation and only
requires a log-space fallback once the length drops below the float
range around 1e-300.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

ERGODIC_RATE = 1.0 / (2.0 * math.log(2.0)) - 1.0  # = -0.27865...


@dataclass(frozen=True)
class MapWord:
    """A finite 0/1 word; bit b_1 is applied first."""

    bits: tuple

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be 0/1")

    def __len__(self):
        return len(self.bits)

    @classmethod
    def from_bits(cls, bits):
        return cls(tuple(int(b) for b in bits))


def apply_word(word, z):
    """phi_word(z): apply t_{b_1}, then t_{b_2}, ..."""
    bits = word.bits if isinstance(word, MapWord) else word
    v = float(z)
    for b in bits:
        v = v * v if b == 1 else v * (2.0 - v)
    return v


def preimage_interval(word, a, b):
    """(phi^{-1}(a), phi^{-1}(b)): inverse maps applied in reverse order."""
    bits = word.bits if isinstance(word, MapWord) else word
    if not 0.0 < a < b < 1.0:
        raise ValueError("need 0 < a < b < 1")
    lo, hi = float(a), float(b)
    for bit in reversed(list(bits)):
        if bit == 1:
            lo, hi = math.sqrt(lo), math.sqrt(hi)
        else:
            lo, hi = 1.0 - math.sqrt(1.0 - lo), 1.0 - math.sqrt(1.0 - hi)
    return lo, hi


@dataclass(frozen=True)
class RngStream:
    """Counter-based bit source: same seed -> same bits, and substreams
    for distinct sample indices are independent Philox streams."""

    seed: int
    stream: int = 0

    def generator(self):
        return np.random.Generator(np.random.Philox(key=(self.seed, self.stream)))

    def substream(self, index):
        return RngStream(self.seed, self.stream + 1 + index)

    def bits(self, n, samples=None):
        shape = n if samples is None else (samples, n)
        return self.generator().integers(0, 2, size=shape, dtype=np.int8)


@dataclass(frozen=True)
class ThresholdResult:
    z_star: float
    window: float
    depth: int


def threshold_point(stream, n, tol=None, iters=60):
    """Threshold point of one random n-step composition.

    Bisects phi(z) = 1/2 to 2^-iters resolution; phi is strictly
    increasing with phi(0) = 0 < 1/2 < 1 = phi(1) so the crossing always
    exists.  The polarization window is the preimage length of
    [tol, 1-tol] (reported; with tol set, an unpolarized word raises).
    """
    if isinstance(stream, RngStream):
        bits = tuple(int(b) for b in stream.bits(n))
    else:
        bits = tuple(stream.bits) if isinstance(stream, MapWord) else tuple(stream)
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if apply_word(bits, mid) < 0.5:
            lo = mid
        else:
            hi = mid
    edge = tol if tol is not None else 1e-3
    wlo, whi = preimage_interval(bits, edge, 1.0 - edge)
    window = whi - wlo
    if tol is not None and window > tol:
        raise ArithmeticError(
            f"word of depth {n} not polarized: window {window:.3g} > tol {tol:.3g}")
    return ThresholdResult(z_star=0.5 * (lo + hi), window=window, depth=n)


def threshold_sample(n, samples, seed=0):
    """Vectorized threshold points for `samples` independent words."""
    bits = RngStream(seed).bits(n, samples)
    lo = np.zeros(samples)
    hi = np.ones(samples)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        v = mid.copy()
        for k in range(n):
            b = bits[:, k] == 1
            v = np.where(b, v * v, v * (2.0 - v))
        below = v < 0.5
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def ks_uniform_statistic(values):
    """Kolmogorov-Smirnov distance of a sample from Uniform[0,1]."""
    x = np.sort(np.asarray(values))
    n = len(x)
    grid = np.arange(1, n + 1) / n
    return float(max(np.max(grid - x), np.max(x - (grid - 1.0 / n))))


def estimate_log_length(n, samples, a, b, seed=0):
    """Monte Carlo mean and standard error of (1/n) log2 of the preimage
    length of [a, b] under random n-step compositions.

    The length is propagated multiplicatively alongside the endpoints --
    sqrt steps give d' = d / (sqrt(hi) + sqrt(lo)) and mirrored for the
    doubling branch -- so no sample ever loses the difference to
    cancellation.  If a length decays below the float range the
    remaining factors accumulate in log space.
    """
    if not 0.0 < a < b < 1.0:
        raise ValueError("need 0 < a < b < 1")
    bits = RngStream(seed).bits(n, samples)
    lo = np.full(samples, float(a))
    hi = np.full(samples, float(b))
    log_d = np.full(samples, 0.0)
    d = np.full(samples, b - a)
    for k in range(n - 1, -1, -1):  # reverse word order
        b1 = bits[:, k] == 1
        s_lo = np.sqrt(lo)
        s_hi = np.sqrt(hi)
        c_lo = np.sqrt(1.0 - hi)
        c_hi = np.sqrt(1.0 - lo)
        factor = np.where(b1, s_lo + s_hi, c_lo + c_hi)
        d = d / factor
        tiny = d < 1e-290
        if np.any(tiny):
            log_d[tiny] += np.log2(d[tiny])
            d[tiny] = 1.0
        lo = np.where(b1, s_lo, 1.0 - c_hi)
        hi = np.where(b1, s_hi, 1.0 - c_lo)
    vals = (log_d + np.log2(d)) / n
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def ergodic_closed_form():
    """The interval-length decay rate 1/(2 ln 2) - 1 with its two
    quadrature halves; returns (value, term_sqrt, term_mirror)."""
    t1, _ = integrate.quad(lambda x: 0.5 * math.log2(0.5 / math.sqrt(x)), 0.0, 1.0)
    t2, _ = integrate.quad(
        lambda x: 0.5 * math.log2(0.5 / math.sqrt(1.0 - x)), 0.0, 1.0)
    return ERGODIC_RATE, t1, t2


@dataclass(frozen=True)
class DecayCheck:
    value: float
    bound: float
    slack: float
    exact: bool

    @property
    def holds(self):
        return self.value >= self.bound - self.slack


def integral_decay_check(n, a, b, samples=None, seed=0, exact_cap=24, slack=None):
    """(1/n) log2 of the z-average of Pr(Z_n in [a,b]), which equals
    (1/n) log2 E[phi^{-1}(b) - phi^{-1}(a)].

    Exact over all 2^n words for n <= exact_cap, Monte Carlo beyond.
    n = 0 returns log2(b - a) (one-step convention).

    The ergodic bound 1/(2 ln 2) - 1 is a liminf statement; finite-n
    values sit below it by an O(1/n) offset dominated by log2 of the
    interval length and the mixing transient, so the default slack is
    2.5/n.  The report carries value, bound, slack and the verdict.
    """
    if not 0.0 < a < b < 1.0:
        raise ValueError("need 0 < a < b < 1")
    if slack is None:
        slack = 2.5 / max(n, 1)
    if n == 0:
        return DecayCheck(value=math.log2(b - a), bound=ERGODIC_RATE,
                          slack=slack, exact=True)
    if n <= exact_cap:
        lo = np.array([float(a)])
        hi = np.array([float(b)])
        for _ in range(n):
            s_lo, s_hi = np.sqrt(lo), np.sqrt(hi)
            c_lo, c_hi = np.sqrt(1.0 - hi), np.sqrt(1.0 - lo)
            lo = np.concatenate([s_lo, 1.0 - c_hi])
            hi = np.concatenate([s_hi, 1.0 - c_lo])
        mean_len = float(np.mean(hi - lo))
        exact = True
    else:
        if samples is None:
            samples = 1_000_000
        bits = RngStream(seed).bits(n, samples)
        lo = np.full(samples, float(a))
        hi = np.full(samples, float(b))
        for k in range(n - 1, -1, -1):
            b1 = bits[:, k] == 1
            s_lo, s_hi = np.sqrt(lo), np.sqrt(hi)
            c_lo, c_hi = np.sqrt(1.0 - hi), np.sqrt(1.0 - lo)
            lo = np.where(b1, s_lo, 1.0 - c_hi)
            hi = np.where(b1, s_hi, 1.0 - c_lo)
        mean_len = float(np.mean(hi - lo))
        exact = False
    return DecayCheck(value=math.log2(mean_len) / n, bound=ERGODIC_RATE,
                      slack=slack, exact=exact)

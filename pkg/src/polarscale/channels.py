"""Binary memoryless symmetric (BMS) channels in the D-value representation.

A BMS channel is represented either exactly (BEC/BSC with its scalar
parameter) or as a finitely supported density of D-values on [0, 1].
A mass point (x, p) stands for a BSC component whose crossover is
(1 - x)/2, carried with probability p.  The three channel parameters are
obtained by integrating the kernels

    H: h2((1 - x)/2),    Z: sqrt(1 - x^2),    E: (1 - x)/2

against the density.  The splitting transform W -> (W0, W1) acts on the
density by the check/variable combination rules of the components, which
keeps all three parameters consistent with the exact transform.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.stats import norm

MERGE_TOL = 1e-12  # duplicate D-values closer than this are merged
MASS_TOL = 1e-12   # total probability mass must be 1 within this


def h2(x):
    """Binary entropy (base 2), vectorized, h2(0) = h2(1) = 0."""
    x = np.asarray(x, dtype=float)
    xs = np.clip(x, 1e-320, 1.0)
    ys = np.clip(1.0 - x, 1e-320, 1.0)
    out = -xs * np.log2(xs) - ys * np.log2(ys)
    return np.where((x <= 0.0) | (x >= 1.0), 0.0, out)


def h2inv(y, tol=1e-14):
    """Inverse of h2 on [0, 1/2] by monotone bisection."""
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"h2inv argument out of range: {y}")
    if y == 0.0:
        return 0.0
    if y == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if h2(mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ChannelParams:
    """The three scalar parameters of a BMS channel plus its capacity."""

    entropy: float
    bhattacharyya: float
    error_prob: float

    @property
    def capacity(self):
        return 1.0 - self.entropy


@dataclass(frozen=True)
class BmsChannel:
    """A BMS channel: exact BEC/BSC, or a D-value density.

    kind:  'bec', 'bsc' (exact, `param` is z resp. eps), or 'density'
    x, p:  support and masses for kind='density'; derived lazily for
           exact kinds via to_density().
    """

    kind: str
    param: float = 0.0
    x: np.ndarray = field(default=None, repr=False)
    p: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind in ("bec", "bsc"):
            hi = 1.0 if self.kind == "bec" else 0.5
            if not 0.0 <= self.param <= hi:
                raise ValueError(f"{self.kind} parameter {self.param} outside [0, {hi}]")
        elif self.kind == "density":
            x, p = _canonical_density(self.x, self.p)
            object.__setattr__(self, "x", x)
            object.__setattr__(self, "p", p)
        else:
            raise ValueError(f"unknown channel kind {self.kind!r}")

    # -- representation ------------------------------------------------

    def to_density(self):
        """Return (x, p) arrays of the D-value density."""
        if self.kind == "bec":
            z = self.param
            return _canonical_density(np.array([0.0, 1.0]), np.array([z, 1.0 - z]))
        if self.kind == "bsc":
            return np.array([abs(1.0 - 2.0 * self.param)]), np.array([1.0])
        return self.x, self.p

    @property
    def support_size(self):
        if self.kind == "density":
            return len(self.x)
        return 2 if self.kind == "bec" else 1

    def __repr__(self):  # keep exact kinds readable in test output
        if self.kind == "density":
            return f"BmsChannel(density, support={len(self.x)})"
        return f"BmsChannel({self.kind}:{self.param})"


def _canonical_density(x, p):
    """Sort by x, merge duplicates within MERGE_TOL, drop zero masses."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    if x.shape != p.shape or x.ndim != 1:
        raise ValueError("density arrays must be 1-d and of equal length")
    if np.any((x < -MERGE_TOL) | (x > 1 + MERGE_TOL)):
        raise ValueError("D-values must lie in [0, 1]")
    if np.any(p < -MASS_TOL):
        raise ValueError("negative probability mass")
    total = p.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"masses sum to {total}, not 1")
    x = np.clip(x, 0.0, 1.0)
    order = np.argsort(x, kind="stable")
    x, p = x[order], p[order]
    # group values closer than MERGE_TOL to their mass-weighted mean
    if len(x) > 1:
        starts = np.concatenate([[0], np.flatnonzero(np.diff(x) > MERGE_TOL) + 1])
        mass = np.add.reduceat(p, starts)
        mx = np.add.reduceat(p * x, starts)
        first = x[starts]  # fallback location for zero-mass groups
        with np.errstate(invalid="ignore"):
            xm = np.where(mass > 0, mx / np.where(mass > 0, mass, 1.0), first)
        keep = mass > 0
        x, p = xm[keep], mass[keep]
    return x, p


# -- constructors -------------------------------------------------------


def make_bec(z):
    """Binary erasure channel with erasure probability z (H = Z = z, E = z/2)."""
    return BmsChannel("bec", float(z))


def make_bsc(eps):
    """Binary symmetric channel with crossover eps in [0, 1/2]."""
    return BmsChannel("bsc", float(eps))


def make_bawgn(sigma, M=512):
    """Binary-input AWGN channel, quantized to at most M D-value mass points.

    The D-value of the output pair {y, -y} under BPSK is |tanh(y/sigma^2)|
    with y ~ N(1, sigma^2).  The density is discretized by equal-probability
    quantiles of the D-distribution (mass 1/M at each quantile midpoint),
    which keeps the capacity error uniformly small in M.

    Returns the channel; `bawgn_quantization_error(sigma, W)` reports the
    capacity gap against the analytic channel.
    """
    sigma = float(sigma)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if M < 16:
        raise ValueError("need at least 16 mass points")
    prob = (np.arange(M) + 0.5) / M

    def cdf(d):
        t = sigma * sigma * np.arctanh(np.clip(d, 0.0, 1.0 - 1e-16))
        return norm.cdf((t - 1.0) / sigma) - norm.cdf((-t - 1.0) / sigma)

    lo = np.zeros(M)
    hi = np.full(M, 1.0 - 1e-15)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        below = cdf(mid) < prob
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    d = 0.5 * (lo + hi)
    return BmsChannel("density", x=d, p=np.full(M, 1.0 / M))


def bawgn_capacity(sigma):
    """Analytic capacity of the BAWGN channel (quadrature)."""
    def integrand(y):
        dv = abs(np.tanh(y / sigma**2))
        return norm.pdf(y, loc=1.0, scale=sigma) * float(h2((1.0 - dv) / 2.0))

    H, _ = integrate.quad(integrand, -40.0 * sigma, 40.0 * sigma, limit=400)
    return 1.0 - H


def bawgn_quantization_error(sigma, W):
    """Capacity gap |I(quantized) - I(analytic)| of a quantized BAWGN channel."""
    return abs(params(W).capacity - bawgn_capacity(sigma))


# -- parameters ----------------------------------------------------------


def params(W):
    """Channel parameters (H, Z, E); closed forms for exact kinds."""
    if W.kind == "bec":
        z = W.param
        return ChannelParams(z, z, z / 2.0)
    if W.kind == "bsc":
        e = W.param
        return ChannelParams(float(h2(e)), 2.0 * np.sqrt(e * (1.0 - e)), e)
    x, p = W.x, W.p
    H = float(np.dot(p, h2((1.0 - x) / 2.0)))
    Z = float(np.dot(p, np.sqrt(np.maximum(0.0, 1.0 - x * x))))
    E = float(np.dot(p, (1.0 - x) / 2.0))
    return ChannelParams(H, Z, E)


def check_parameter_bounds(W):
    """Slack of the four parameter inequalities; all must be >= -1e-9.

    Returns a dict of named slacks, nonnegative when the inequality holds:
      'he'  : H - 2E          (2E <= H)
      'zh'  : Z - H           (H <= Z)
      'h2e' : h2(E) - H       (H <= h2(E))
      'zsh' : sqrt(1-(1-H)^2) - Z
      'ez'  : 2E - (1 - sqrt(1-Z^2))
    """
    pr = params(W)
    H, Z, E = pr.entropy, pr.bhattacharyya, pr.error_prob
    return {
        "he": H - 2.0 * E,
        "zh": Z - H,
        "h2e": float(h2(E)) - H,
        "zsh": float(np.sqrt(max(0.0, 1.0 - (1.0 - H) ** 2))) - Z,
        "ez": 2.0 * E - (1.0 - float(np.sqrt(max(0.0, 1.0 - Z * Z)))),
    }


# -- splitting transform --------------------------------------------------


def split(W):
    """Channel splitting transform W -> (W0, W1).

    Exact kinds stay exact where the transform is closed:
      BEC(z)  -> (BEC(1-(1-z)^2), BEC(z^2))
      BSC(e)  -> (BSC(2e(1-e)), two-point density)
    Densities combine pairwise:
      W0: (x, y) -> x*y                      with weight px*py
      W1: (x, y) -> (x+y)/(1+xy)  w. (1+xy)/2,  |x-y|/(1-xy)  w. (1-xy)/2
    """
    if W.kind == "bec":
        z = W.param
        return make_bec(1.0 - (1.0 - z) ** 2), make_bec(z * z)
    if W.kind == "bsc":
        e = W.param
        w0 = make_bsc(2.0 * e * (1.0 - e))
        d = abs(1.0 - 2.0 * e)
        x1, p1 = _var_combine(np.array([d]), np.array([1.0]), np.array([d]), np.array([1.0]))
        return w0, BmsChannel("density", x=x1, p=p1)
    x, p = W.x, W.p
    # check combine: all pairwise products
    x0 = np.multiply.outer(x, x).ravel()
    p0 = np.multiply.outer(p, p).ravel()
    w0 = BmsChannel("density", x=_round_clip(x0), p=p0)
    x1, p1 = _var_combine(x, p, x, p)
    w1 = BmsChannel("density", x=x1, p=p1)
    return w0, w1


def _var_combine(xa, pa, xb, pb):
    """Variable-side combination of two component lists (both mass points)."""
    X = np.add.outer(xa, xb)
    P = np.multiply.outer(xa, xb)
    W = np.multiply.outer(pa, pb)
    with np.errstate(divide="ignore", invalid="ignore"):
        d_plus = X / (1.0 + P)
        d_minus = np.abs(np.subtract.outer(xa, xb)) / (1.0 - P)
    # x = y = 1 gives 0/0 for the minus branch; that branch carries no mass
    d_minus = np.where(np.isfinite(d_minus), d_minus, 0.0)
    w_plus = W * (1.0 + P) / 2.0
    w_minus = W * (1.0 - P) / 2.0
    xs = np.concatenate([d_plus.ravel(), d_minus.ravel()])
    ws = np.concatenate([w_plus.ravel(), w_minus.ravel()])
    return _round_clip(xs), ws


def _round_clip(x):
    return np.clip(x, 0.0, 1.0)


# -- degrading merge -------------------------------------------------------


def degrade_merge(W, M, policy="quantile"):
    """Quantize a channel to at most M mass points; never decreases H.

    Merging adjacent D-values to their mass-weighted mean increases the
    entropy kernel sum (the kernel is concave in x), so the result is a
    degradation in H.  Returns (channel, delta_H) with delta_H >= 0.

    policy='quantile': single pass of equal-mass adjacent binning (fast).
    policy='greedy'  : repeatedly merge the adjacent pair with minimal
                       entropy increase (the classical heuristic; slower).
    """
    if M < 2:
        raise ValueError("M must be at least 2")
    if W.kind != "density":
        return W, 0.0  # exact kinds carry no support to merge
    x, p = W.x, W.p
    if len(x) <= M:
        return W, 0.0
    H_in = params(W).entropy
    if policy == "quantile":
        xm, pm = _merge_quantile(x, p, M)
    elif policy == "greedy":
        xm, pm = _merge_greedy(x, p, M)
    else:
        raise ValueError(f"unknown merge policy {policy!r}")
    out = BmsChannel("density", x=xm, p=pm)
    dH = params(out).entropy - H_in
    return out, max(dH, 0.0)


def _merge_quantile(x, p, M):
    """Equal-probability adjacent binning to M mass-weighted means."""
    c = np.cumsum(p)
    c[-1] = 1.0
    # bin index of each point: floor of cumulative mass * M (left-closed bins)
    idx = np.minimum((np.ceil(c * M) - 1).astype(np.int64), M - 1)
    idx = np.maximum.accumulate(idx)  # keep bins adjacent and ordered
    nb = idx[-1] + 1
    mass = np.bincount(idx, weights=p, minlength=nb)
    sx = np.bincount(idx, weights=p * x, minlength=nb)
    keep = mass > 0
    return sx[keep] / mass[keep], mass[keep]


def _merge_greedy(x, p, M):
    """Min-entropy-increase adjacent pair merging via a lazy heap."""
    n = len(x)
    xs = list(map(float, x))
    ps = list(map(float, p))
    nxt = list(range(1, n)) + [-1]
    prv = [-1] + list(range(n - 1))
    alive = [True] * n
    version = [0] * n

    def cost(i):
        j = nxt[i]
        mx, mp = xs[i] * ps[i] + xs[j] * ps[j], ps[i] + ps[j]
        xbar = mx / mp if mp > 0 else xs[i]
        return float(
            mp * h2((1.0 - xbar) / 2.0)
            - ps[i] * h2((1.0 - xs[i]) / 2.0)
            - ps[j] * h2((1.0 - xs[j]) / 2.0)
        )

    heap = [(cost(i), i, 0) for i in range(n - 1)]
    heapq.heapify(heap)
    remaining = n
    while remaining > M:
        dh, i, ver = heapq.heappop(heap)
        if not alive[i] or version[i] != ver or nxt[i] == -1:
            continue
        j = nxt[i]
        mp = ps[i] + ps[j]
        xs[i] = (xs[i] * ps[i] + xs[j] * ps[j]) / mp
        ps[i] = mp
        alive[j] = False
        nxt[i] = nxt[j]
        if nxt[j] != -1:
            prv[nxt[j]] = i
        remaining -= 1
        version[i] += 1
        if nxt[i] != -1:
            heapq.heappush(heap, (cost(i), i, version[i]))
        k = prv[i]
        if k != -1:
            version[k] += 1
            heapq.heappush(heap, (cost(k), k, version[k]))
    xo = [xs[i] for i in range(n) if alive[i]]
    po = [ps[i] for i in range(n) if alive[i]]
    return np.array(xo), np.array(po)


# -- serialization ---------------------------------------------------------


def parse_channel(literal):
    """Parse a channel literal 'bec:<z>', 'bsc:<eps>' or 'bawgn:<sigma>[:M]'."""
    parts = literal.split(":")
    kind = parts[0].lower()
    if kind == "bec" and len(parts) == 2:
        return make_bec(float(parts[1]))
    if kind == "bsc" and len(parts) == 2:
        return make_bsc(float(parts[1]))
    if kind == "bawgn" and len(parts) in (2, 3):
        M = int(parts[2]) if len(parts) == 3 else 512
        return make_bawgn(float(parts[1]), M)
    raise ValueError(f"invalid channel literal {literal!r}")


def density_to_json(W):
    """Density as a JSON-ready list of [x, p] pairs."""
    x, p = W.to_density()
    return [[float(a), float(b)] for a, b in zip(x, p)]


def density_from_json(pairs):
    arr = np.asarray(pairs, dtype=float)
    return BmsChannel("density", x=arr[:, 0], p=arr[:, 1])

"""Certified interval evaluation of iterated polarization test functions.

For a test function f0(x) = ghat(x) * x^alpha * (1-x)^beta (ghat a
polynomial with nonnegative coefficients, ghat > 0 on [0,1]) the iterates

    f_m(z) = mean over the 2^m branch maps phi_w of f0(phi_w(z))

factor as f_m(z) = z^alpha (1-z)^beta v_m(z) where

    v_m(z) = 2^-m sum_w ghat(phi_w(z)) * A_w(z)^alpha * B_w(z)^beta

and the per-branch products A_w, B_w accumulate one factor per level:
a squaring step contributes (x, 1+x), a doubling step (2-x, 1-x), with x
the branch value before the step.  Every factor is monotone in x and
nonnegative on [0,1], and the branch maps themselves are increasing, so
propagating interval endpoints through the tree gives tight, rigorous
enclosures of v_m on any subinterval -- including at z = 0 and z = 1,
where v_m stays positive.  Ratios f_{m+1}/f_m equal v_{m+1}/v_m with the
singular prefactor cancelled, which is what the certified optimizers
below bound.

All float arithmetic is padded outward by one ulp per operation, so the
returned enclosures hold despite rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_INF = np.inf
_EPS = np.finfo(float).eps


def _dn(a):
    return np.nextafter(a, -_INF)


def _up(a):
    return np.nextafter(a, _INF)


def _sum_dn(a, axis=0):
    s = np.sum(a, axis=axis)
    pad = a.shape[axis] * _EPS * np.sum(np.abs(a), axis=axis)
    return s - pad


def _sum_up(a, axis=0):
    s = np.sum(a, axis=axis)
    pad = a.shape[axis] * _EPS * np.sum(np.abs(a), axis=axis)
    return s + pad


@dataclass(frozen=True)
class F0Spec:
    """Test function f0(x) = ghat(x) * x^alpha * (1-x)^beta.

    ghat coefficients are low-to-high degree and must be nonnegative with
    positive constant term.
    """

    ghat: tuple
    alpha: float
    beta: float

    def __post_init__(self):
        if not self.ghat or self.ghat[0] <= 0 or any(c < 0 for c in self.ghat):
            raise ValueError("ghat needs c0 > 0 and nonnegative coefficients")

    def f0_values(self, x):
        x = np.asarray(x, dtype=float)
        acc = np.zeros_like(x)
        for c in reversed(self.ghat):
            acc = acc * x + c
        with np.errstate(divide="ignore"):
            return acc * x**self.alpha * (1.0 - x) ** self.beta


ZLOGZ = F0Spec(ghat=(1.0,), alpha=1.0, beta=1.0)  # f0 = z(1-z)


def _ghat_lo(spec, x):
    acc = np.full_like(x, _dn(spec.ghat[-1]))
    for c in reversed(spec.ghat[:-1]):
        acc = _dn(_dn(acc * x) + _dn(c))
    return acc


def _ghat_hi(spec, x):
    acc = np.full_like(x, _up(spec.ghat[-1]))
    for c in reversed(spec.ghat[:-1]):
        acc = _up(_up(acc * x) + _up(c))
    return acc


def _collect(spec, vlo, vhi, alo, ahi, blo, bhi, m):
    tlo = _dn(_dn(_ghat_lo(spec, vlo) * _dn(np.clip(alo, 0, None) ** spec.alpha))
              * _dn(np.clip(blo, 0, None) ** spec.beta))
    thi = _up(_up(_ghat_hi(spec, vhi) * _up(ahi**spec.alpha)) * _up(bhi**spec.beta))
    scale = 0.5**m
    return _dn(_sum_dn(tlo) * scale), _up(_sum_up(thi) * scale)


def _v_pair_chunk(spec, m, zlo, zhi):
    """One-pass enclosures of v_m and v_{m+1} on each cell."""
    n = len(zlo)
    W = 1 << (m + 1)
    vlo = np.empty((W, n))
    vhi = np.empty((W, n))
    alo = np.empty((W, n))
    ahi = np.empty((W, n))
    blo = np.empty((W, n))
    bhi = np.empty((W, n))
    vlo[0], vhi[0] = zlo, zhi
    alo[0] = ahi[0] = blo[0] = bhi[0] = 1.0
    den = None
    for k in range(m + 1):
        h = 1 << k
        rvlo, rvhi = vlo[:h], vhi[:h]
        # doubling branch (factors 2-x, 1-x decreasing) into rows [h:2h]
        alo[h:2 * h] = _dn(alo[:h] * _dn(2.0 - rvhi))
        ahi[h:2 * h] = _up(ahi[:h] * _up(2.0 - rvlo))
        blo[h:2 * h] = _dn(blo[:h] * _dn(1.0 - rvhi))
        bhi[h:2 * h] = _up(bhi[:h] * _up(1.0 - rvlo))
        vlo[h:2 * h] = np.clip(_dn(rvlo * _dn(2.0 - rvlo)), 0.0, 1.0)
        vhi[h:2 * h] = np.clip(_up(rvhi * _up(2.0 - rvhi)), 0.0, 1.0)
        # squaring branch (factors x, 1+x increasing) overwrites rows [0:h]
        alo[:h] = _dn(alo[:h] * rvlo)
        ahi[:h] = _up(ahi[:h] * rvhi)
        blo[:h] = _dn(blo[:h] * _dn(1.0 + rvlo))
        bhi[:h] = _up(bhi[:h] * _up(1.0 + rvhi))
        vlo[:h] = np.clip(_dn(rvlo * rvlo), 0.0, 1.0)
        vhi[:h] = np.clip(_up(rvhi * rvhi), 0.0, 1.0)
        if k == m - 1:
            den = _collect(spec, vlo[:2 * h], vhi[:2 * h], alo[:2 * h],
                           ahi[:2 * h], blo[:2 * h], bhi[:2 * h], m)
    if den is None:  # m == 0
        den = _collect(spec, vlo[:1] * 0 + zlo, vhi[:1] * 0 + zhi,
                       np.ones((1, n)), np.ones((1, n)),
                       np.ones((1, n)), np.ones((1, n)), 0)
    num = _collect(spec, vlo, vhi, alo, ahi, blo, bhi, m + 1)
    return den, num


def _v_pair(spec, m, zlo, zhi, budget=1 << 21):
    """Chunked enclosures of (v_m, v_{m+1}): returns (dlo, dhi, nlo, nhi)."""
    n = len(zlo)
    words = 1 << (m + 1)
    if words * n <= budget or n == 1:
        (dlo, dhi), (nlo, nhi) = _v_pair_chunk(spec, m, zlo, zhi)
        return dlo, dhi, nlo, nhi
    step = max(1, budget // words)
    parts = [_v_pair_chunk(spec, m, zlo[s:s + step], zhi[s:s + step])
             for s in range(0, n, step)]
    return (np.concatenate([p[0][0] for p in parts]),
            np.concatenate([p[0][1] for p in parts]),
            np.concatenate([p[1][0] for p in parts]),
            np.concatenate([p[1][1] for p in parts]))


def v_enclosure(spec, m, zlo, zhi):
    """Enclosure of v_m on each cell [zlo[i], zhi[i]].  Returns (lo, hi)."""
    zlo = np.atleast_1d(np.asarray(zlo, dtype=float))
    zhi = np.atleast_1d(np.asarray(zhi, dtype=float))
    if m == 0:
        n = len(zlo)
        ones = np.ones((1, n))
        return _collect(spec, zlo[None, :], zhi[None, :], ones, ones, ones, ones, 0)
    _, _, nlo, nhi = _v_pair(spec, m - 1, zlo, zhi)
    return nlo, nhi


def ratio_enclosure(spec, m, zlo, zhi):
    """Enclosure of f_{m+1}/f_m (= v_{m+1}/v_m) on each cell.

    Wide cells can have a zero lower bound on the denominator; the upper
    endpoint is +inf there (still a valid enclosure, split to refine).
    """
    zlo = np.atleast_1d(np.asarray(zlo, dtype=float))
    zhi = np.atleast_1d(np.asarray(zhi, dtype=float))
    dlo, dhi, nlo, nhi = _v_pair(spec, m, zlo, zhi)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lo = np.where(dhi > 0.0, _dn(nlo / dhi), 0.0)
        hi = np.where(dlo > 0.0, _up(nhi / dlo), np.inf)
    return np.maximum(lo, 0.0), hi


def f_values(spec, m, z, _chunk_budget=1 << 22):
    """Plain float values of f_m(z) by direct branch expansion."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    words = 1 << m
    if words * len(z) > _chunk_budget and len(z) > 1:
        step = max(1, _chunk_budget // words)
        return np.concatenate([f_values(spec, m, z[s:s + step])
                               for s in range(0, len(z), step)])
    v = z[None, :]
    for _ in range(m):
        v = np.concatenate([v * v, v * (2.0 - v)])
    return np.mean(spec.f0_values(v), axis=0)


@dataclass(frozen=True)
class Enclosure:
    """A certified interval around a one-dimensional optimum."""

    lo: float
    hi: float
    argopt: float
    cells: int
    converged: bool = True

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def mid(self):
        return 0.5 * (self.lo + self.hi)


def _branch_bound(eval_cells, eval_points, tol, maximize, max_rounds=300,
                  max_cells=400_000, lo0=0.0, hi0=1.0, init_cells=256,
                  point_batch=64, geometric_below=0.02):
    """Interval branch-and-bound over [lo0, hi0].

    eval_cells(zlo, zhi)  -> (lo, hi) enclosures per cell
    eval_points(z)        -> (lo, hi) enclosures at points (thin cells)

    Point (upper-bound) evaluations run only on the most promising cells
    per round.  Cells lying close to 0 split at the geometric mean, which
    handles optima located within O(1e-4) of the endpoint.
    """
    sgn = -1.0 if maximize else 1.0
    grid = np.linspace(lo0, hi0, init_cells + 1)
    cl, ch = grid[:-1].copy(), grid[1:].copy()
    best = np.inf  # signed upper bound on the signed optimum
    best_arg = 0.5 * (lo0 + hi0)
    glo = -np.inf
    parked_lo = np.inf  # floor over cells set aside when over budget
    total_cells = len(cl)
    converged = False
    for _ in range(max_rounds):
        lo, hi = eval_cells(cl, ch)
        slo = sgn * hi if maximize else lo
        mids = np.where((ch <= geometric_below) & (cl > 0.0),
                        np.sqrt(cl * ch), 0.5 * (cl + ch))
        cand = np.argsort(slo)[:point_batch]
        plo, phi = eval_points(mids[cand])
        pshi = sgn * plo if maximize else phi
        k = int(np.argmin(pshi))
        if pshi[k] < best:
            best = float(pshi[k])
            best_arg = float(mids[cand[k]])
        glo = min(float(np.min(slo)), parked_lo)
        if best - glo <= tol:
            converged = True
            break
        keep = (slo < best) & (mids > cl) & (mids < ch)
        if not np.any(keep):
            glo = min(best, parked_lo)
            converged = parked_lo >= best
            break
        cl, ch, mids, slo = cl[keep], ch[keep], mids[keep], slo[keep]
        if len(cl) > max_cells // 2:
            # park the least promising cells; their bound stays in force
            order = np.argsort(slo)
            cut = order[max_cells // 4:]
            parked_lo = min(parked_lo, float(np.min(slo[cut])))
            sel = order[:max_cells // 4]
            cl, ch, mids = cl[sel], ch[sel], mids[sel]
        cl = np.concatenate([cl, mids])
        ch = np.concatenate([mids, ch])
        total_cells += len(cl)
    glo = min(glo, best)
    if maximize:
        return Enclosure(lo=-best, hi=-glo, argopt=best_arg,
                         cells=total_cells, converged=converged)
    return Enclosure(lo=glo, hi=best, argopt=best_arg,
                     cells=total_cells, converged=converged)


def _is_symmetric(spec):
    return len(spec.ghat) == 1 and spec.alpha == spec.beta


def minimize_ratio(spec, m, tol=2e-5):
    """Certified enclosure of inf_{(0,1)} f_{m+1}/f_m (the a_m bound).

    For symmetric f0 the ratio is symmetric about 1/2, so the search
    runs over [0, 1/2] only.
    """

    def cells(zl, zh):
        return ratio_enclosure(spec, m, zl, zh)

    hi0 = 0.5 if _is_symmetric(spec) else 1.0
    return _branch_bound(cells, cells_as_points(cells), tol, maximize=False, hi0=hi0)


def maximize_ratio(spec, m, tol=2e-5):
    """Certified enclosure of sup_{(0,1)} f_{m+1}/f_m (the b_m bound)."""

    def cells(zl, zh):
        return ratio_enclosure(spec, m, zl, zh)

    hi0 = 0.5 if _is_symmetric(spec) else 1.0
    return _branch_bound(cells, cells_as_points(cells), tol, maximize=True, hi0=hi0)


def cells_as_points(cell_fn):
    def points(z):
        return cell_fn(z, z)

    return points


# -- the two-variable operator bound -------------------------------------
#
# L_g = sup over z in (0,1), y in [z*sqrt(2-z^2), z*(2-z)] of
# (g(z^2) + g(y)) / (2 g(z)).  With y = z*eta the admissible band is
# eta in [sqrt(2-z^2), 2-z] (both ends decreasing in z), and for
# g = ghat * (z(1-z))^d the ratio factors into endpoint-safe terms
#
#   R(z, eta) = [z^d (1+z)^d ghat(z^2) + eta^d Q^d ghat(z*eta)] / (2 ghat(z))
#
# with Q = (1 - z*eta)/(1 - z) in [0, 1].  R extends continuously to the
# closed square, so a 2-d branch-and-bound over (z, tau) with
# eta = (1-tau) eta_lo(z) + tau eta_hi(z) yields a certified supremum.


def _eta_corner(z, tau):
    lo = np.sqrt(np.maximum(2.0 - z * z, 0.0))
    return (1.0 - tau) * lo + tau * (2.0 - z)


def _ghat_scalar(spec, x):
    acc = np.zeros_like(x)
    for c in reversed(spec.ghat):
        acc = acc * x + c
    return acc


def _lg_box_upper(spec, zl, zh, tl, th):
    """Rigorous upper bound of R over boxes [zl,zh] x [tl,th]."""
    d = spec.alpha
    t1_hi = _up(_up(zh**d) * _up(_up((1.0 + zh) ** d)
                                 * _ghat_hi(spec, np.clip(_up(zh * zh), 0, 1))))
    # eta(z, tau) decreases in z, increases in tau: corners give the range
    eta_hi = _up(_eta_corner(zl, th))
    eta_lo = np.maximum(_dn(_eta_corner(zh, tl)), 0.0)
    ze_hi = np.clip(_up(zh * eta_hi), 0.0, 1.0)
    ze_lo = np.clip(_dn(zl * eta_lo), 0.0, 1.0)
    num_hi = np.clip(_up(1.0 - ze_lo), 0.0, 1.0)
    den_lo = _dn(1.0 - zh)
    with np.errstate(divide="ignore", invalid="ignore"):
        q_hi = np.where(den_lo > 0.0, _up(num_hi / den_lo), 1.0)
    # Q(z, eta) <= Q(z, eta_lo(z)) = (1 - sqrt(1-(1-z^2)^2))/(1-z) <= 4(1-z),
    # which discharges boxes hugging z = 1 where the quotient bound is void
    q_hi = np.minimum(q_hi, _up(4.0 * (1.0 - zl)))
    q_hi = np.clip(q_hi, 0.0, 1.0)
    t2_hi = _up(_up(eta_hi**d) * _up(q_hi**d * _ghat_hi(spec, ze_hi)))
    den = _dn(2.0 * _ghat_lo(spec, zl))
    return _up(_up(t1_hi + t2_hi) / den)


def _lg_point(spec, z, tau):
    """Achievable values of R at points (z, tau), with a rounding pad."""
    d = spec.alpha
    eta = _eta_corner(z, tau)
    ze = np.clip(z * eta, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = (1.0 - ze) / (1.0 - z)
    # at z = 1 the true Q limit is 0 (and g vanishes there): keep the
    # sampled values achievable by replacing the 0/0 with 0
    q = np.where(np.isfinite(q), np.clip(q, 0.0, 1.0), 0.0)
    t2 = (eta**d) * (q**d) * _ghat_scalar(spec, ze)
    t1 = (z**d) * ((1.0 + z) ** d) * _ghat_scalar(spec, z * z)
    val = (t1 + t2) / (2.0 * _ghat_scalar(spec, z))
    pad = 64 * _EPS * np.abs(val)
    return val - pad, val + pad


def maximize_lg(spec, tol=1e-4, max_rounds=200, max_cells=2_000_000,
                init_cells=64):
    """Certified enclosure of the operator bound L_g for f0 with alpha=beta."""
    if spec.alpha != spec.beta:
        raise ValueError("operator bound requires alpha == beta")
    g = np.linspace(0.0, 1.0, init_cells + 1)
    zl = np.repeat(g[:-1], init_cells)
    zh = np.repeat(g[1:], init_cells)
    tl = np.tile(g[:-1], init_cells)
    th = np.tile(g[1:], init_cells)
    best = -np.inf
    best_arg = (0.5, 0.5)
    ghi = np.inf
    parked_hi = -np.inf
    total = len(zl)
    converged = False
    for _ in range(max_rounds):
        up = _lg_box_upper(spec, zl, zh, tl, th)
        zm, tm = 0.5 * (zl + zh), 0.5 * (tl + th)
        lo, _ = _lg_point(spec, zm, tm)
        k = int(np.argmax(lo))
        if lo[k] > best:
            best = float(lo[k])
            best_arg = (float(zm[k]), float(tm[k]))
        ghi = max(float(np.max(up)), parked_hi)
        if ghi - best <= tol:
            converged = True
            break
        keep = up > best
        if not np.any(keep):
            ghi = max(best, parked_hi)
            converged = parked_hi <= best
            break
        zl, zh, tl, th, up = zl[keep], zh[keep], tl[keep], th[keep], up[keep]
        if len(zl) > max_cells // 2:
            order = np.argsort(-up)
            cut = order[max_cells // 4:]
            parked_hi = max(parked_hi, float(np.max(up[cut])))
            sel = order[:max_cells // 4]
            zl, zh, tl, th = zl[sel], zh[sel], tl[sel], th[sel]
        zm, tm = 0.5 * (zl + zh), 0.5 * (tl + th)
        # split along the wider side of each box
        split_z = (zh - zl) >= (th - tl)
        z_hi1 = np.where(split_z, zm, zh)
        t_hi1 = np.where(split_z, th, tm)
        z_lo2 = np.where(split_z, zm, zl)
        t_lo2 = np.where(split_z, tl, tm)
        zl = np.concatenate([zl, z_lo2])
        zh = np.concatenate([z_hi1, zh])
        tl = np.concatenate([tl, t_lo2])
        th = np.concatenate([t_hi1, th])
        total += len(zl)
    ghi = max(ghi, best)
    return Enclosure(lo=best, hi=ghi, argopt=best_arg[0], cells=total,
                     converged=converged)

"""Weighted least-squares fits behind the MLS projection.

Two fits are provided: the reference plane and a bivariate height polynomial
over that plane.

The plane minimises ``sum_i <n, p_i - q>^2 theta(|p_i - q|)`` with
``q = r + t n``. A weighted-PCA fixed point started at ``q = r`` gets close;
Newton steps on ``(t, n)`` then finish the job, because the PCA fixed point
ignores that the weights move with ``q`` and so is not a stationary point of
that objective. Weighted points are those within the support of ``q`` and
within ``REACH`` supports of ``r``, so results depend only on data near ``r``.

Both have a scalar API (:func:`fit_reference_plane`, :func:`fit_local_polynomial`)
and a batched engine working on padded neighbour blocks.
Every reduction over neighbours is a strict left-to-right sum in neighbour
order (``_seqsum``), and padding carries zero weight, so the result for one
query does not depend on which other queries share its batch or on how much
padding the batch needed. That is what makes the parallel driver reproduce the
sequential one bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._blocks import gather, seqsum as _seqsum
from .core import as_point
from .errors import (
    DegenerateNeighborhood,
    InvalidParam,
    NoConvergence,
    SingularSystem,
    TooFewNeighbors,
)
from .kernels import KernelParams
from .spatial import SpatialIndex

MAX_DEGREE = 4
DEGENERATE_RTOL = 1e-12
# reciprocal condition below which a normal-equation system is declared singular
SINGULAR_RCOND = 1e-12
# relative origin move at which the weighted-PCA iteration hands over to Newton
PCA_HANDOFF = 1e-4
# search reach around each query as a multiple of the kernel support: the
# weight ball around the moving origin q is clipped to this ball around r
REACH = 1.5
# extra radius, relative to the support, when gathering around an origin
_REGATHER = 0.05
_MAX_REGATHER = 4

# engine status codes
OK, TOO_FEW, DEGENERATE, NO_CONVERGENCE, SINGULAR = 0, 1, 2, 3, 4


def n_coefficients(degree: int) -> int:
    return (degree + 1) * (degree + 2) // 2


def monomial_exponents(degree: int) -> list:
    """``(a, b)`` exponent pairs for u^a v^b, by total degree then ``a`` descending."""
    return [(s - j, j) for s in range(degree + 1) for j in range(s + 1)]


@dataclass(frozen=True)
class LocalFrame:
    """Reference plane with an orthonormal right-handed frame ``(u, v, normal)``.

    ``query`` is the point the frame was fitted for; the search reach around
    it bounds the neighbourhood used by :func:`fit_local_polynomial`.
    """

    origin: tuple
    normal: tuple
    u: tuple
    v: tuple
    query: Optional[tuple] = None
    iterations: int = 0

    @property
    def offset(self) -> float:
        """``D`` in ``<n, x> - D = 0``."""
        return float(np.dot(self.normal, self.origin))

    def to_local(self, points) -> np.ndarray:
        """World points to ``(u, v, height)`` coordinates."""
        d = np.asarray(points, dtype=np.float64).reshape(-1, 3) - np.asarray(self.origin)
        return np.stack([d @ np.asarray(self.u), d @ np.asarray(self.v), d @ np.asarray(self.normal)], axis=1)

    def to_world(self, local) -> np.ndarray:
        loc = np.asarray(local, dtype=np.float64).reshape(-1, 3)
        basis = np.stack([self.u, self.v, self.normal])
        return np.asarray(self.origin) + loc @ basis


@dataclass(frozen=True)
class BivariatePolynomial:
    degree: int
    coefficients: tuple = field(default=())

    def __post_init__(self):
        if not 0 <= self.degree <= MAX_DEGREE:
            raise InvalidParam(f"degree must be in [0, {MAX_DEGREE}]")
        coefs = tuple(float(c) for c in self.coefficients)
        if not coefs:
            coefs = (0.0,) * n_coefficients(self.degree)
        if len(coefs) != n_coefficients(self.degree):
            raise InvalidParam(
                f"degree {self.degree} needs {n_coefficients(self.degree)} coefficients, got {len(coefs)}"
            )
        if not np.all(np.isfinite(coefs)):
            raise InvalidParam("coefficients must be finite")
        object.__setattr__(self, "coefficients", coefs)

    def coefficient(self, a: int, b: int) -> float:
        return self.coefficients[monomial_exponents(self.degree).index((a, b))]

    def __call__(self, u, v):
        return evaluate_polynomial(self, u, v)


def evaluate_polynomial(poly: BivariatePolynomial, u, v):
    """Sum of ``c_ab * u^a * v^b``; works elementwise on arrays."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    total = np.zeros(np.broadcast(u, v).shape)
    for c, (a, b) in zip(poly.coefficients, monomial_exponents(poly.degree)):
        total = total + c * u**a * v**b
    return float(total) if total.ndim == 0 else total


# --------------------------------------------------------------------------
# batched engine
#
# Blocks are component-major with queries innermost: ``P`` has shape
# (3, K, B) for B queries with up to K neighbours each, ``valid`` is (K, B)
# and marks real entries. Neighbour sums run over the K axis.


def _dot3(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _orient(n, s, tie_tol):
    """Flip columns of ``n`` (3, B) so that ``s`` (= <n, r - c>) is non-negative.

    Exact or near ties fall back to the first clearly nonzero of n_z, n_y, n_x.
    """
    return n * _orient_sign(n, s, tie_tol)


def _orient_sign(n, s, tie_tol):
    sign = np.where(s < 0, -1.0, 1.0)
    tie = np.abs(s) <= tie_tol
    if np.any(tie):
        comp = n[:, tie]
        tsign = np.ones(comp.shape[1])
        decided = np.zeros(comp.shape[1], dtype=bool)
        for k in (2, 1, 0):
            nz = ~decided & (np.abs(comp[k]) > 1e-12)
            tsign[nz] = np.where(comp[k, nz] < 0, -1.0, 1.0)
            decided |= nz
        sign[tie] = tsign
    return sign


def tangent_axes(n: np.ndarray):
    """Deterministic in-plane axes for unit normals ``n`` of shape (B, 3)."""
    k = np.argmin(np.abs(n), axis=1)
    e = np.zeros_like(n)
    e[np.arange(len(n)), k] = 1.0
    u = e - np.sum(e * n, axis=1)[:, None] * n
    u = u / np.sqrt(u[:, 0] ** 2 + u[:, 1] ** 2 + u[:, 2] ** 2)[:, None]
    v = np.cross(n, u)
    return u, v


def _kernel_weights(d2, valid, h, support):
    inside = valid & (d2 <= support * support)
    return np.where(inside, np.exp(-d2 / (h * h)), 0.0), inside


@dataclass
class PlaneBatch:
    q: np.ndarray
    n: np.ndarray
    iterations: np.ndarray
    code: np.ndarray


def _tolerances(r, support, tol):
    # floor the step tolerance at a few ulps of the coordinate scale
    scale = np.maximum(np.max(np.abs(r), axis=1), support) if len(r) else np.zeros(0)
    return np.maximum(tol, 16 * np.finfo(float).eps * scale), 1e-12 * support


def fit_planes_batch(P, valid, r, kernel: KernelParams, tol=1e-10, max_iter=50) -> PlaneBatch:
    """Weighted-PCA stage of the reference plane for a block of queries ``r`` (B, 3).

    Each query iterates on its own and is frozen once its origin moves less
    than ``PCA_HANDOFF * support`` (or ``tol`` if larger). One step: weights at
    the current origin, weighted centroid and covariance, normal = eigenvector
    of the smallest eigenvalue, origin = projection of ``r`` onto the new
    plane. :func:`fit_planes` finishes the job.
    """
    h, support = kernel.h, kernel.support
    B = len(r)
    q = r.copy()
    n = np.zeros((B, 3))
    iters = np.zeros(B, dtype=np.int64)
    code = np.full(B, NO_CONVERGENCE, dtype=np.int64)
    tol_eff, tie_tol = _tolerances(r, support, tol)
    # the PCA iteration only has to land in the Newton basin of the polish
    handoff = np.maximum(tol_eff, PCA_HANDOFF * support)

    code[np.sum(valid, axis=0) < 3] = TOO_FEW
    rows = np.flatnonzero(code == NO_CONVERGENCE)
    if rows.size == 0:
        return PlaneBatch(q, n, iters, code)

    # neighbour moments about r, computed once; (10, K, b)
    D = np.ascontiguousarray(P[:, :, rows]) - r[rows].T[:, None, :]
    vmask = np.ascontiguousarray(valid[:, rows])
    dd = _dot3(D, D)
    feats = np.stack([np.ones_like(dd), D[0], D[1], D[2],
                      D[0] * D[0], D[0] * D[1], D[0] * D[2],
                      D[1] * D[1], D[1] * D[2], D[2] * D[2]])
    live = np.ones(len(rows), dtype=bool)

    for it in range(1, max_iter + 1):
        if not live.any():
            break
        if live.sum() < 0.75 * len(rows):
            D, vmask, dd, feats = (np.ascontiguousarray(x[..., live]) for x in (D, vmask, dd, feats))
            rows = rows[live]
            live = np.ones(len(rows), dtype=bool)
        ra, qa = r[rows], q[rows]
        s = (qa - ra).T
        d2 = np.maximum(dd - 2.0 * _dot3(D, s[:, None, :]) + _dot3(s, s)[None, :], 0.0)
        w, inside = _kernel_weights(d2, vmask, h, support)
        few = np.sum(inside, axis=0) < 3
        m = _seqsum(w[None] * feats)
        sw = np.where(few, 1.0, m[0])
        c = m[1:4] / sw
        M = np.empty((len(rows), 3, 3))
        M[:, 0, 0] = m[4] - m[1] * c[0]
        M[:, 0, 1] = M[:, 1, 0] = m[5] - m[1] * c[1]
        M[:, 0, 2] = M[:, 2, 0] = m[6] - m[1] * c[2]
        M[:, 1, 1] = m[7] - m[2] * c[1]
        M[:, 1, 2] = M[:, 2, 1] = m[8] - m[2] * c[2]
        M[:, 2, 2] = m[9] - m[3] * c[2]
        M[few] = np.eye(3)
        vals, vecs = np.linalg.eigh(M)
        degenerate = ~few & ((vals[:, 1] - vals[:, 0]) <= DEGENERATE_RTOL * vals[:, 2])
        # c is relative to r, so <n, r - c_world> = -<n, c>
        n0 = vecs[:, :, 0].T
        na = _orient(n0, -_dot3(n0, c), tie_tol)
        t = _dot3(na, c)
        q_new = ra + (t * na).T
        dq = q_new - qa
        moved = np.sqrt(dq[:, 0] ** 2 + dq[:, 1] ** 2 + dq[:, 2] ** 2)

        good = live & ~(few | degenerate)
        sel = rows[good]
        q[sel] = q_new[good]
        n[sel] = na.T[good]
        iters[rows[live]] = it
        code[rows[live & few]] = TOO_FEW
        code[rows[live & degenerate & ~few]] = DEGENERATE
        done = good & (moved < handoff[rows])
        code[rows[done]] = OK
        live &= good & ~done

    return PlaneBatch(q=q, n=n, iterations=iters, code=code)


def _plane_terms(D, dd, vmask, n, t, k, support):
    """Per-neighbour pieces of the plane objective at ``(n, t)``.

    With ``s = <n, p - r>`` and ``e = s - t`` the summand is
    ``E e^2``, ``E = exp(-k |p - r - t n|^2)``.
    """
    s = _dot3(D, n[:, None, :])
    d2 = np.maximum(dd - 2.0 * t * s + t * t, 0.0)
    inside = vmask & (d2 <= support * support)
    E = np.where(inside, np.exp(-k * d2), 0.0)
    return s, s - t, E


def _polish(P, valid, r, q, n, kernel: KernelParams, tol_eff, max_iter, tie_tol):
    """Newton steps on the exact plane objective, starting at the PCA fixed point.

    The weighted-PCA iteration is stationary only for frozen weights; because
    the weights are centred on ``q = r + t n`` they also depend on ``(n, t)``.
    This minimises ``sum theta(|p - r - t n|) <n, p - r - t n>^2`` itself over
    ``t`` and two tangent rotations of ``n``, with a backtracking line search
    that never accepts an increase.
    """
    B = len(r)
    k = 1.0 / (kernel.h * kernel.h)
    support = kernel.support
    D = P - r.T[:, None, :]
    dd = _dot3(D, D)
    nT = n.T.copy()
    t = _dot3(nT, (q - r).T)
    iters = np.zeros(B, dtype=np.int64)
    failed = np.zeros(B, dtype=bool)
    live = np.arange(B)
    for _ in range(max_iter):
        if live.size == 0:
            break
        Dl, ddl, vl = D[..., live], dd[:, live], valid[:, live]
        nl, tl = nT[:, live], t[live]
        s, e, E = _plane_terms(Dl, ddl, vl, nl, tl, k, support)
        u, v = tangent_axes(nl.T)
        su, sv = _dot3(Dl, u.T[:, None, :]), _dot3(Dl, v.T[:, None, :])
        tk = tl * k
        gs = 2.0 * E * (e + tk * e * e)
        gt = 2.0 * E * (k * e * e * e - e)
        gss = 2.0 * E * (2.0 * tk * (e + tk * e * e) + 1.0 + 2.0 * tk * e)
        gtt = 2.0 * E * (2.0 * k * e * (k * e * e * e - e) - 3.0 * k * e * e + 1.0)
        gst = 2.0 * E * (2.0 * k * e * (e + tk * e * e) - 1.0 + k * e * e - 2.0 * tk * e)
        m = _seqsum(np.stack([E * e * e, gs * su, gs * sv, gt,
                              gss * su * su, gss * su * sv, gss * sv * sv, gs * s,
                              gst * su, gst * sv, gtt]))
        J = m[0]
        grad = np.stack([m[1], m[2], m[3]], axis=1)
        H = np.empty((live.size, 3, 3))
        H[:, 0, 0] = m[4] - m[7]
        H[:, 0, 1] = H[:, 1, 0] = m[5]
        H[:, 1, 1] = m[6] - m[7]
        H[:, 0, 2] = H[:, 2, 0] = m[8]
        H[:, 1, 2] = H[:, 2, 1] = m[9]
        H[:, 2, 2] = m[10]
        ev, evec = np.linalg.eigh(H)
        # Newton direction in the eigenbasis; non-positive curvature falls back
        # to a gradient step scaled by the largest curvature
        cap = np.maximum(np.abs(ev[:, 2]), np.finfo(float).tiny)
        curv = np.where(ev > 1e-12 * cap[:, None], ev, cap[:, None])
        # explicit three-term sums keep the rounding independent of batch shape
        g_e = evec[:, 0, :] * grad[:, 0:1] + evec[:, 1, :] * grad[:, 1:2] + evec[:, 2, :] * grad[:, 2:3]
        c_e = g_e / curv
        step = -(evec[:, :, 0] * c_e[:, 0:1] + evec[:, :, 1] * c_e[:, 1:2] + evec[:, :, 2] * c_e[:, 2:3])

        size = np.maximum(np.abs(step[:, 2]), support * np.sqrt(step[:, 0] ** 2 + step[:, 1] ** 2))
        tol_l = tol_eff[live]
        iters[live] += 1
        # a step below tolerance means converged; so does a line search whose
        # trial step shrinks below tolerance without finding a decrease
        moving = size >= tol_l
        new_n, new_t = nl.copy(), tl.copy()
        accepted = np.zeros(live.size, dtype=bool)
        scale = np.ones(live.size)
        pending = np.flatnonzero(moving)
        while pending.size:
            st = step[pending] * scale[pending, None]
            cand = nl[:, pending] + st[:, 0] * u[pending].T + st[:, 1] * v[pending].T
            cand = cand / np.sqrt(_dot3(cand, cand))
            ct = tl[pending] + st[:, 2]
            _, ce, cE = _plane_terms(Dl[..., pending], ddl[:, pending], vl[:, pending], cand, ct, k, support)
            Jc = _seqsum((cE * ce * ce)[None])[0]
            ok = Jc <= J[pending]
            new_n[:, pending[ok]] = cand[:, ok]
            new_t[pending[ok]] = ct[ok]
            accepted[pending[ok]] = True
            pending = pending[~ok]
            scale[pending] *= 0.5
            pending = pending[scale[pending] * size[pending] >= tol_l[pending]]
        nT[:, live], t[live] = new_n, new_t
        live = live[accepted]
    failed[live] = True
    # keep the orientation convention: <n, r - q> = -t >= 0
    sign = _orient_sign(nT, -t, tie_tol)
    nT, t = nT * sign, t * sign
    q_out = r + (t * nT).T
    return q_out, nT.T, iters, failed


def _vandermonde(a, b, degree):
    return np.stack([(a**i) * (b**j) for i, j in monomial_exponents(degree)])


def fit_polynomials_batch(P, valid, q, n, u, v, kernel: KernelParams, degree: int):
    """Weighted height polynomials over each query's frame.

    Returns ``(coefficients (B, M), code (B,))``. Coefficients refer to the
    frame's ``(u, v)`` coordinates in model units; the normal equations are
    assembled and solved in ``(u/h, v/h)`` for conditioning.
    """
    h, support = kernel.h, kernel.support
    M = n_coefficients(degree)
    B = len(q)
    D = P - q.T[:, None, :]
    w, inside = _kernel_weights(_dot3(D, D), valid, h, support)
    a = _dot3(D, u.T[:, None, :]) / h
    b = _dot3(D, v.T[:, None, :]) / h
    f = _dot3(D, n.T[:, None, :])
    V = _vandermonde(a, b, degree)
    iu, ju = np.triu_indices(M)
    feats = np.concatenate([V[iu] * V[ju], V * f[None]])
    s = _seqsum(w[None] * feats).T
    N = np.empty((B, M, M))
    N[:, iu, ju] = s[:, : len(iu)]
    N[:, ju, iu] = s[:, : len(iu)]
    rhs = s[:, len(iu):]

    code = np.zeros(B, dtype=np.int64)
    code[np.sum(inside, axis=0) < M] = TOO_FEW
    ev = np.linalg.eigvalsh(N)
    with np.errstate(invalid="ignore"):
        singular = ~(ev[:, 0] > SINGULAR_RCOND * ev[:, -1])
    code[(code == OK) & singular] = SINGULAR
    ok = code == OK
    coefs = np.zeros((B, M))
    if np.any(ok):
        coefs[ok] = np.linalg.solve(N[ok], rhs[ok][..., None])[..., 0]
    scale = np.array([h ** -(i + j) for i, j in monomial_exponents(degree)])
    return coefs * scale, code


def search_radius(kernel: KernelParams) -> float:
    """Largest distance from a query at which a neighbour can carry weight."""
    return REACH * kernel.support


def origin_blocks(index: SpatialIndex, r, q, kernel: KernelParams):
    """Padded blocks of the points around origins ``q`` that can carry weight.

    That is every point within the support of ``q`` (plus a small margin) and
    within the search reach of its query ``r``. Extra zero-weight entries do
    not change any sum, so the margin never affects results.
    """
    pos = index.radius_positions_many(q, kernel.support * (1 + _REGATHER),
                                      anchors=r, reach=search_radius(kernel))
    return gather(index.cloud.points, pos)


@dataclass
class PlaneFit:
    planes: PlaneBatch
    # [(rows, P, valid)]: neighbourhood blocks around the final origins
    groups: list


def fit_planes(index: SpatialIndex, r, kernel: KernelParams, tol=1e-10, max_iter=50,
               pos_lists=None) -> PlaneFit:
    """Reference planes for queries ``r`` (B, 3): PCA start, then Newton polish.

    The PCA stage uses the points within the support of ``r``; the polish
    minimises the plane objective with weights centred on the moving origin,
    re-gathering around it whenever it drifts away from the ball it was
    gathered for.
    """
    support = kernel.support
    if pos_lists is None:
        pos_lists = index.radius_positions_many(r, support)
    P, valid = gather(index.cloud.points, pos_lists)
    planes = fit_planes_batch(P, valid, r, kernel, tol, max_iter)
    del P, valid
    q, n, iters, code = planes.q, planes.n, planes.iterations, planes.code
    tol_eff, tie_tol = _tolerances(r, support, tol)
    groups = []
    stuck = np.flatnonzero(code == NO_CONVERGENCE)
    if stuck.size:
        groups.append((stuck, *origin_blocks(index, r[stuck], q[stuck], kernel)))
    todo = np.flatnonzero(code == OK)
    for _ in range(_MAX_REGATHER):
        if todo.size == 0:
            break
        P2, v2 = origin_blocks(index, r[todo], q[todo], kernel)
        q_new, n_new, extra, failed = _polish(P2, v2, r[todo], q[todo], n[todo], kernel,
                                              tol_eff[todo], max_iter, tie_tol)
        dq = q_new - q[todo]
        settled = np.sqrt(dq[:, 0] ** 2 + dq[:, 1] ** 2 + dq[:, 2] ** 2) <= 0.5 * _REGATHER * support
        q[todo], n[todo] = q_new, n_new
        iters[todo] += extra
        code[todo[failed & settled]] = NO_CONVERGENCE
        if settled.all():
            groups.append((todo, P2, v2))
        elif settled.any():
            groups.append((todo[settled], np.ascontiguousarray(P2[:, :, settled]),
                           np.ascontiguousarray(v2[:, settled])))
        todo = todo[~settled]
    if todo.size:
        code[todo] = NO_CONVERGENCE
        groups.append((todo, *origin_blocks(index, r[todo], q[todo], kernel)))
    return PlaneFit(planes, groups)


# --------------------------------------------------------------------------
# scalar API


def fit_reference_plane(index: SpatialIndex, r, params: KernelParams, tol: float = 1e-10,
                        max_iter: int = 50) -> LocalFrame:
    """Fit the local reference plane for query point ``r``.

    Minimises ``sum_i <n, p_i - r - t n>^2 theta(|p_i - r - t n|)`` near the
    weighted-PCA solution started at ``q = r``. Raises
    :class:`TooFewNeighbors`, :class:`DegenerateNeighborhood` or
    :class:`NoConvergence` (carrying the last iterate as ``.last``).
    """
    if tol <= 0 or max_iter < 1:
        raise InvalidParam("tol must be positive and max_iter >= 1")
    r = as_point(r, "r")
    pos = index.radius_positions_many(r[None, :], params.support)
    found = len(pos[0])
    if found < 3:
        raise TooFewNeighbors(found, 3)
    res = fit_planes(index, r[None, :], params, tol, max_iter, pos_lists=pos).planes
    code = res.code[0]
    if code == TOO_FEW:
        raise TooFewNeighbors(found, 3)
    if code == DEGENERATE:
        raise DegenerateNeighborhood("neighbourhood covariance has no distinct smallest eigenvalue")
    frame = _make_frame(res.q[0], res.n[0], r, int(res.iterations[0]))
    if code == NO_CONVERGENCE:
        raise NoConvergence(f"reference plane did not converge in {max_iter} iterations", last=frame)
    return frame


def _make_frame(q, n, r, iterations):
    u, v = tangent_axes(n[None, :])
    return LocalFrame(
        origin=tuple(map(float, q)),
        normal=tuple(map(float, n)),
        u=tuple(map(float, u[0])),
        v=tuple(map(float, v[0])),
        query=tuple(map(float, r)),
        iterations=iterations,
    )


def fit_local_polynomial(index: SpatialIndex, frame: LocalFrame, params: KernelParams,
                         degree: int = 2) -> BivariatePolynomial:
    """Weighted least-squares height polynomial over ``frame``.

    Minimises ``sum_i theta(|p_i - q|) (g(u_i, v_i) - f_i)^2`` over the points
    within the search reach of ``frame.query`` (or of the origin when no query
    is set).
    Raises :class:`TooFewNeighbors` or :class:`SingularSystem`; callers in
    :mod:`mlsrecon.mls` catch the latter and retry at a lower degree.
    """
    if not 1 <= degree <= MAX_DEGREE:
        raise InvalidParam(f"degree must be in [1, {MAX_DEGREE}]")
    anchor = frame.query if frame.query is not None else frame.origin
    P, valid = origin_blocks(index, np.asarray(anchor, dtype=np.float64)[None, :],
                             np.asarray(frame.origin, dtype=np.float64)[None, :], params)
    need = n_coefficients(degree)
    d = P - np.asarray(frame.origin)[:, None, None]
    found = int(np.sum(valid & (_dot3(d, d) <= params.support ** 2)))
    if found < need:
        raise TooFewNeighbors(found, need)
    q, n, u, v = (np.asarray(x, dtype=np.float64)[None, :] for x in (frame.origin, frame.normal, frame.u, frame.v))
    coefs, code = fit_polynomials_batch(P, valid, q, n, u, v, params, degree)
    if code[0] == TOO_FEW:
        raise TooFewNeighbors(found, need)
    if code[0] == SINGULAR:
        raise SingularSystem(f"degree-{degree} normal equations are ill-conditioned")
    return BivariatePolynomial(degree, tuple(coefs[0]))

"""Compiled rigid-body step: SAT narrowphase, clipping manifolds and a
sequential-impulse contact solver with pyramidal friction.

All functions operate on flat arrays (see ``polytope.ShapeTables`` and
``world.World``).  Nothing here uses fastmath or parallel loops, so results
are bit-reproducible for identical inputs.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

STATIC = 0
DYNAMIC = 1
KINEMATIC = 2

EDGE_BIAS = 5e-4  # edge axis must beat the best face axis by this much
REF_BIAS = 1e-4  # keep A as reference face unless B is clearly better
MATCH_DIST = 0.01  # warm-start anchor matching radius
MAX_POLY = 128

# indices into the params vector
P_MARGIN = 0
P_BAUMGARTE = 1
P_SLOP = 2
P_MAX_CORR = 3
P_REST_THRESH = 4
P_ANG_DAMP = 5
P_MAX_ANG = 6
N_PARAMS = 7


@njit(cache=True)
def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


@njit(cache=True)
def _cross(a, b):
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


@njit(cache=True)
def _matvec(m, v):
    return np.array([
        m[0, 0] * v[0] + m[0, 1] * v[1] + m[0, 2] * v[2],
        m[1, 0] * v[0] + m[1, 1] * v[1] + m[1, 2] * v[2],
        m[2, 0] * v[0] + m[2, 1] * v[1] + m[2, 2] * v[2],
    ])


@njit(cache=True)
def quat_to_mat(q, out):
    w, x, y, z = q[0], q[1], q[2], q[3]
    out[0, 0] = 1 - 2 * (y * y + z * z)
    out[0, 1] = 2 * (x * y - w * z)
    out[0, 2] = 2 * (x * z + w * y)
    out[1, 0] = 2 * (x * y + w * z)
    out[1, 1] = 1 - 2 * (x * x + z * z)
    out[1, 2] = 2 * (y * z - w * x)
    out[2, 0] = 2 * (x * z - w * y)
    out[2, 1] = 2 * (y * z + w * x)
    out[2, 2] = 1 - 2 * (x * x + y * y)


@njit(cache=True)
def _world_verts(s, pos, rot, nv, verts, out):
    for i in range(nv[s]):
        for k in range(3):
            out[i, k] = pos[k] + rot[k, 0] * verts[s, i, 0] + rot[k, 1] * verts[s, i, 1] + rot[k, 2] * verts[s, i, 2]


@njit(cache=True)
def _world_normals(s, pos, rot, nf, fnorm, foff, out_n, out_d):
    for f in range(nf[s]):
        for k in range(3):
            out_n[f, k] = rot[k, 0] * fnorm[s, f, 0] + rot[k, 1] * fnorm[s, f, 1] + rot[k, 2] * fnorm[s, f, 2]
        out_d[f] = foff[s, f] + out_n[f, 0] * pos[0] + out_n[f, 1] * pos[1] + out_n[f, 2] * pos[2]


@njit(cache=True)
def _face_query(nfa, na, da, nvb, wb):
    best = -1e30
    best_f = -1
    for f in range(nfa):
        m = 1e30
        for v in range(nvb):
            s = na[f, 0] * wb[v, 0] + na[f, 1] * wb[v, 1] + na[f, 2] * wb[v, 2] - da[f]
            if s < m:
                m = s
        if m > best:
            best = m
            best_f = f
    return best, best_f


@njit(cache=True)
def _edge_query(sa, sb, pa, wa, na, wb, nb, ne, edges, eface):
    best = -1e30
    bi = -1
    bj = -1
    bnx = 0.0
    bny = 0.0
    bnz = 0.0
    for i in range(ne[sa]):
        i0 = edges[sa, i, 0]
        i1 = edges[sa, i, 1]
        fa1 = eface[sa, i, 0]
        fa2 = eface[sa, i, 1]
        ax, ay, az = na[fa1, 0], na[fa1, 1], na[fa1, 2]
        bx, by, bz = na[fa2, 0], na[fa2, 1], na[fa2, 2]
        # b x a
        bax = by * az - bz * ay
        bay = bz * ax - bx * az
        baz = bx * ay - by * ax
        e1x = wa[i1, 0] - wa[i0, 0]
        e1y = wa[i1, 1] - wa[i0, 1]
        e1z = wa[i1, 2] - wa[i0, 2]
        l1 = math.sqrt(e1x * e1x + e1y * e1y + e1z * e1z)
        for j in range(ne[sb]):
            j0 = edges[sb, j, 0]
            j1 = edges[sb, j, 1]
            fb1 = eface[sb, j, 0]
            fb2 = eface[sb, j, 1]
            cx, cy, cz = -nb[fb1, 0], -nb[fb1, 1], -nb[fb1, 2]
            dx, dy, dz = -nb[fb2, 0], -nb[fb2, 1], -nb[fb2, 2]
            cba = cx * bax + cy * bay + cz * baz
            dba = dx * bax + dy * bay + dz * baz
            if cba * dba >= 0.0:
                continue
            dcx = dy * cz - dz * cy
            dcy = dz * cx - dx * cz
            dcz = dx * cy - dy * cx
            adc = ax * dcx + ay * dcy + az * dcz
            bdc = bx * dcx + by * dcy + bz * dcz
            if not (adc * bdc < 0.0 and cba * bdc > 0.0):
                continue
            e2x = wb[j1, 0] - wb[j0, 0]
            e2y = wb[j1, 1] - wb[j0, 1]
            e2z = wb[j1, 2] - wb[j0, 2]
            l2 = math.sqrt(e2x * e2x + e2y * e2y + e2z * e2z)
            nx = e1y * e2z - e1z * e2y
            ny = e1z * e2x - e1x * e2z
            nz = e1x * e2y - e1y * e2x
            ln = math.sqrt(nx * nx + ny * ny + nz * nz)
            if ln < 1e-4 * l1 * l2:
                continue
            nx /= ln
            ny /= ln
            nz /= ln
            if nx * (wa[i0, 0] - pa[0]) + ny * (wa[i0, 1] - pa[1]) + nz * (wa[i0, 2] - pa[2]) < 0.0:
                nx, ny, nz = -nx, -ny, -nz
            s = nx * (wb[j0, 0] - wa[i0, 0]) + ny * (wb[j0, 1] - wa[i0, 1]) + nz * (wb[j0, 2] - wa[i0, 2])
            if s > best:
                best = s
                bi = i
                bj = j
                bnx, bny, bnz = nx, ny, nz
    return best, bi, bj, bnx, bny, bnz


@njit(cache=True)
def _segment_closest(p1, q1, p2, q2):
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = _dot(d1, d1)
    e = _dot(d2, d2)
    f = _dot(d2, r)
    c = _dot(d1, r)
    b = _dot(d1, d2)
    denom = a * e - b * b
    s = 0.0
    if denom > 1e-14:
        s = min(max((b * f - c * e) / denom, 0.0), 1.0)
    t = (b * s + f) / e if e > 1e-14 else 0.0
    if t < 0.0:
        t = 0.0
        s = min(max(-c / a, 0.0), 1.0) if a > 1e-14 else 0.0
    elif t > 1.0:
        t = 1.0
        s = min(max((b - c) / a, 0.0), 1.0) if a > 1e-14 else 0.0
    return p1 + d1 * s, p2 + d2 * t


@njit(cache=True)
def _clip(poly, n, m, off, out):
    """Keep the part of polygon ``poly[:n]`` with ``m . p <= off``."""
    k = 0
    if n == 0:
        return 0
    for i in range(n):
        j = (i + 1) % n
        di = m[0] * poly[i, 0] + m[1] * poly[i, 1] + m[2] * poly[i, 2] - off
        dj = m[0] * poly[j, 0] + m[1] * poly[j, 1] + m[2] * poly[j, 2] - off
        if di <= 0.0:
            if k < MAX_POLY:
                out[k] = poly[i]
                k += 1
        if (di <= 0.0) != (dj <= 0.0):
            t = di / (di - dj)
            if k < MAX_POLY:
                out[k] = poly[i] + t * (poly[j] - poly[i])
                k += 1
    return k


@njit(cache=True)
def _reduce(pts, seps, n, normal, out_p, out_s):
    """Pick at most four representative points from a clipped manifold."""
    if n <= 4:
        for i in range(n):
            out_p[i] = pts[i]
            out_s[i] = seps[i]
        return n
    i1 = 0
    for i in range(1, n):
        if seps[i] < seps[i1] - 1e-12:
            i1 = i
    i2 = -1
    best = -1.0
    for i in range(n):
        d = pts[i] - pts[i1]
        dd = _dot(d, d)
        if dd > best + 1e-12:
            best = dd
            i2 = i
    e = pts[i2] - pts[i1]
    i3 = -1
    i4 = -1
    amax = 1e-12
    amin = -1e-12
    for i in range(n):
        d = pts[i] - pts[i1]
        area = _dot(_cross(e, d), normal)
        if area > amax:
            amax = area
            i3 = i
        if area < amin:
            amin = area
            i4 = i
    k = 0
    for idx in (i1, i2, i3, i4):
        if idx >= 0:
            out_p[k] = pts[idx]
            out_s[k] = seps[idx]
            k += 1
    return k


@njit(cache=True)
def collide(sa, pa, ra, sb, pb, rb, margin, nv, verts, nf, fnorm, foff, fnv, floop, ne, edges, eface,
            out_p, out_s, out_n):
    """Contact manifold between two convex bodies.

    Returns the point count (0..4); ``out_n`` receives the normal pointing
    from A to B, ``out_s`` signed separations (negative when penetrating).
    """
    wa = np.empty((nv[sa], 3))
    wb = np.empty((nv[sb], 3))
    _world_verts(sa, pa, ra, nv, verts, wa)
    _world_verts(sb, pb, rb, nv, verts, wb)
    na = np.empty((nf[sa], 3))
    da = np.empty(nf[sa])
    nb = np.empty((nf[sb], 3))
    db = np.empty(nf[sb])
    _world_normals(sa, pa, ra, nf, fnorm, foff, na, da)
    _world_normals(sb, pb, rb, nf, fnorm, foff, nb, db)

    sep_a, fa = _face_query(nf[sa], na, da, nv[sb], wb)
    if sep_a > margin:
        return 0
    sep_b, fb = _face_query(nf[sb], nb, db, nv[sa], wa)
    if sep_b > margin:
        return 0
    sep_e, ei, ej, enx, eny, enz = _edge_query(sa, sb, pa, wa, na, wb, nb, ne, edges, eface)
    if sep_e > margin:
        return 0

    face_best = max(sep_a, sep_b)
    if ei >= 0 and sep_e > face_best + EDGE_BIAS:
        ca, cb = _segment_closest(wa[edges[sa, ei, 0]], wa[edges[sa, ei, 1]],
                                  wb[edges[sb, ej, 0]], wb[edges[sb, ej, 1]])
        out_p[0] = 0.5 * (ca + cb)
        out_s[0] = sep_e
        out_n[0] = enx
        out_n[1] = eny
        out_n[2] = enz
        return 1

    if sep_b > sep_a + REF_BIAS:
        flip = True
        ref_s = sb
        ref_f = fb
        ref_w = wb
        ref_n = nb
        ref_d = db
        inc_s = sa
        inc_w = wa
        inc_n = na
    else:
        flip = False
        ref_s = sa
        ref_f = fa
        ref_w = wa
        ref_n = na
        ref_d = da
        inc_s = sb
        inc_w = wb
        inc_n = nb
    nr = ref_n[ref_f].copy()
    # incident face: most anti-parallel to the reference normal
    inc_f = 0
    dmin = 1e30
    for f in range(nf[inc_s]):
        d = _dot(inc_n[f], nr)
        if d < dmin - 1e-12:
            dmin = d
            inc_f = f

    poly = np.empty((MAX_POLY, 3))
    buf = np.empty((MAX_POLY, 3))
    npoly = fnv[inc_s, inc_f]
    for i in range(npoly):
        poly[i] = inc_w[floop[inc_s, inc_f, i]]
    nref = fnv[ref_s, ref_f]
    for i in range(nref):
        v0 = ref_w[floop[ref_s, ref_f, i]]
        v1 = ref_w[floop[ref_s, ref_f, (i + 1) % nref]]
        m = _cross(v1 - v0, nr)
        npoly = _clip(poly, npoly, m, _dot(m, v0), buf)
        for k in range(npoly):
            poly[k] = buf[k]
        if npoly == 0:
            break

    cand_p = np.empty((MAX_POLY, 3))
    cand_s = np.empty(MAX_POLY)
    nc = 0
    for i in range(npoly):
        s = _dot(poly[i], nr) - ref_d[ref_f]
        if s <= margin:
            cand_p[nc] = poly[i] - 0.5 * s * nr
            cand_s[nc] = s
            nc += 1
    if nc == 0:
        return 0
    k = _reduce(cand_p, cand_s, nc, nr, out_p, out_s)
    sign = -1.0 if flip else 1.0
    for j in range(3):
        out_n[j] = sign * nr[j]
    return k


@njit(cache=True)
def separation(sa, pa, qa, sb, pb, qb, nv, verts, nf, fnorm, foff, fnv, floop, ne, edges, eface):
    """Signed separation between two convex bodies (negative = overlap depth)."""
    ra = np.empty((3, 3))
    rb = np.empty((3, 3))
    quat_to_mat(qa, ra)
    quat_to_mat(qb, rb)
    wa = np.empty((nv[sa], 3))
    wb = np.empty((nv[sb], 3))
    _world_verts(sa, pa, ra, nv, verts, wa)
    _world_verts(sb, pb, rb, nv, verts, wb)
    na = np.empty((nf[sa], 3))
    da = np.empty(nf[sa])
    nb = np.empty((nf[sb], 3))
    db = np.empty(nf[sb])
    _world_normals(sa, pa, ra, nf, fnorm, foff, na, da)
    _world_normals(sb, pb, rb, nf, fnorm, foff, nb, db)
    sep_a, _ = _face_query(nf[sa], na, da, nv[sb], wb)
    sep_b, _ = _face_query(nf[sb], nb, db, nv[sa], wa)
    sep_e, _, _, _, _, _ = _edge_query(sa, sb, pa, wa, na, wb, nb, ne, edges, eface)
    return max(sep_a, sep_b, sep_e)


@njit(cache=True)
def _tangents(n):
    if abs(n[0]) >= 0.57735:
        t1 = np.array([n[1], -n[0], 0.0])
    else:
        t1 = np.array([0.0, n[2], -n[1]])
    t1 /= math.sqrt(_dot(t1, t1))
    t2 = _cross(n, t1)
    return t1, t2


@njit(cache=True)
def _row(c, r, d, ima, imb, iwa, iwb, ra, rb, rd, rxa, rxb, ja, jb, meff):
    """Precompute one Jacobian row (direction ``d``) of contact ``c``."""
    for k in range(3):
        rd[c, r, k] = d[k]
    xa = _cross(ra, d)
    xb = _cross(rb, d)
    ga = _matvec(iwa, xa)
    gb = _matvec(iwb, xb)
    for k in range(3):
        rxa[c, r, k] = xa[k]
        rxb[c, r, k] = xb[k]
        ja[c, r, k] = ga[k]
        jb[c, r, k] = gb[k]
    kk = ima + imb + _dot(xa, ga) + _dot(xb, gb)
    meff[c, r] = 1.0 / kk if kk > 0.0 else 0.0


@njit(cache=True)
def _row_vel(c, r, a, b, vel, angvel, rd, rxa, rxb):
    return ((vel[b, 0] - vel[a, 0]) * rd[c, r, 0] + (vel[b, 1] - vel[a, 1]) * rd[c, r, 1]
            + (vel[b, 2] - vel[a, 2]) * rd[c, r, 2]
            + angvel[b, 0] * rxb[c, r, 0] + angvel[b, 1] * rxb[c, r, 1] + angvel[b, 2] * rxb[c, r, 2]
            - angvel[a, 0] * rxa[c, r, 0] - angvel[a, 1] * rxa[c, r, 1] - angvel[a, 2] * rxa[c, r, 2])


@njit(cache=True)
def _row_apply(c, r, a, b, lam, ima, imb, vel, angvel, rd, ja, jb):
    for k in range(3):
        vel[a, k] -= ima * lam * rd[c, r, k]
        angvel[a, k] -= lam * ja[c, r, k]
        vel[b, k] += imb * lam * rd[c, r, k]
        angvel[b, k] += lam * jb[c, r, k]


@njit(cache=True)
def step_world(dt, gravity, iters, params,
               btype, bactive, bgroup, bshape, pos, quat, vel, angvel,
               inv_mass, inv_inertia, friction, restitution,
               nv, verts, nf, fnorm, foff, fnv, floop, ne, edges, eface, radius,
               prev_n, prev_a, prev_b, prev_local, prev_ln, prev_lt):
    """Advance the world by one step in place.

    Returns the new warm-start cache ``(count, a, b, local, ln, lt)``.
    """
    nb = pos.shape[0]
    margin = params[P_MARGIN]

    rot = np.empty((nb, 3, 3))
    iw = np.zeros((nb, 3, 3))
    for i in range(nb):
        quat_to_mat(quat[i], rot[i])
        if btype[i] == DYNAMIC and bactive[i]:
            for r in range(3):
                for c in range(3):
                    acc = 0.0
                    for k in range(3):
                        acc += rot[i, r, k] * inv_inertia[i, k] * rot[i, c, k]
                    iw[i, r, c] = acc
            for k in range(3):
                vel[i, k] += gravity[k] * dt

    # --- narrowphase -------------------------------------------------------
    cap = 4 * nb * (nb - 1) // 2 + 4
    ca = np.empty(cap, np.int64)
    cb = np.empty(cap, np.int64)
    cp = np.empty((cap, 3))
    cn = np.empty((cap, 3))
    cs = np.empty(cap)
    tmp_p = np.empty((4, 3))
    tmp_s = np.empty(4)
    tmp_n = np.empty(3)
    nc = 0
    for i in range(nb):
        if not bactive[i]:
            continue
        for j in range(i + 1, nb):
            if not bactive[j]:
                continue
            if btype[i] != DYNAMIC and btype[j] != DYNAMIC:
                continue
            if bgroup[i] != 0 and bgroup[i] == bgroup[j]:
                continue
            dx = pos[j, 0] - pos[i, 0]
            dy = pos[j, 1] - pos[i, 1]
            dz = pos[j, 2] - pos[i, 2]
            reach = radius[bshape[i]] + radius[bshape[j]] + margin
            if dx * dx + dy * dy + dz * dz > reach * reach:
                continue
            k = collide(bshape[i], pos[i], rot[i], bshape[j], pos[j], rot[j], margin,
                        nv, verts, nf, fnorm, foff, fnv, floop, ne, edges, eface,
                        tmp_p, tmp_s, tmp_n)
            for m in range(k):
                ca[nc] = i
                cb[nc] = j
                cp[nc] = tmp_p[m]
                cs[nc] = tmp_s[m]
                cn[nc] = tmp_n
                nc += 1

    # --- solver setup ------------------------------------------------------
    # rows: 0 = normal, 1 and 2 = friction tangents
    rd = np.empty((nc, 3, 3))
    rxa = np.empty((nc, 3, 3))
    rxb = np.empty((nc, 3, 3))
    ja = np.empty((nc, 3, 3))
    jb = np.empty((nc, 3, 3))
    meff = np.empty((nc, 3))
    lam = np.zeros((nc, 3))
    cima = np.empty(nc)
    cimb = np.empty(nc)
    mu = np.empty(nc)
    target = np.empty(nc)
    local = np.empty((nc, 3))
    used = np.zeros(prev_n, np.bool_)
    for c in range(nc):
        a = ca[c]
        b = cb[c]
        ra = cp[c] - pos[a]
        rb = cp[c] - pos[b]
        n = cn[c]
        u1, u2 = _tangents(n)
        ima = inv_mass[a] if btype[a] == DYNAMIC else 0.0
        imb = inv_mass[b] if btype[b] == DYNAMIC else 0.0
        cima[c] = ima
        cimb[c] = imb
        _row(c, 0, n, ima, imb, iw[a], iw[b], ra, rb, rd, rxa, rxb, ja, jb, meff)
        _row(c, 1, u1, ima, imb, iw[a], iw[b], ra, rb, rd, rxa, rxb, ja, jb, meff)
        _row(c, 2, u2, ima, imb, iw[a], iw[b], ra, rb, rd, rxa, rxb, ja, jb, meff)
        mu[c] = math.sqrt(friction[a] * friction[b])
        vn = _row_vel(c, 0, a, b, vel, angvel, rd, rxa, rxb)
        s = cs[c]
        if s > 0.0:
            tgt = -s / dt
        else:
            pen = -s - params[P_SLOP]
            tgt = min(params[P_BAUMGARTE] * pen / dt, params[P_MAX_CORR]) if pen > 0.0 else 0.0
        e = max(restitution[a], restitution[b])
        if vn < -params[P_REST_THRESH] and e > 0.0:
            tgt = max(tgt, -e * vn)
        target[c] = tgt
        # anchor in A's frame for warm-start matching
        for k in range(3):
            local[c, k] = rot[a, 0, k] * ra[0] + rot[a, 1, k] * ra[1] + rot[a, 2, k] * ra[2]
        best = MATCH_DIST * MATCH_DIST
        hit = -1
        for q in range(prev_n):
            if used[q] or prev_a[q] != a or prev_b[q] != b:
                continue
            d = local[c] - prev_local[q]
            dd = _dot(d, d)
            if dd < best:
                best = dd
                hit = q
        if hit >= 0:
            used[hit] = True
            lam[c, 0] = prev_ln[hit]
            lim = mu[c] * lam[c, 0]
            lam[c, 1] = min(max(_dot(prev_lt[hit], u1), -lim), lim)
            lam[c, 2] = min(max(_dot(prev_lt[hit], u2), -lim), lim)
            for r in range(3):
                _row_apply(c, r, a, b, lam[c, r], ima, imb, vel, angvel, rd, ja, jb)

    # --- sequential impulses ----------------------------------------------
    for _ in range(iters):
        for c in range(nc):
            a = ca[c]
            b = cb[c]
            ima = cima[c]
            imb = cimb[c]
            lim = mu[c] * lam[c, 0]
            for r in (1, 2):
                vt = _row_vel(c, r, a, b, vel, angvel, rd, rxa, rxb)
                new = min(max(lam[c, r] - meff[c, r] * vt, -lim), lim)
                _row_apply(c, r, a, b, new - lam[c, r], ima, imb, vel, angvel, rd, ja, jb)
                lam[c, r] = new
            vn = _row_vel(c, 0, a, b, vel, angvel, rd, rxa, rxb)
            new = max(lam[c, 0] + meff[c, 0] * (target[c] - vn), 0.0)
            _row_apply(c, 0, a, b, new - lam[c, 0], ima, imb, vel, angvel, rd, ja, jb)
            lam[c, 0] = new

    # --- integrate positions ----------------------------------------------
    damp = 1.0 / (1.0 + dt * params[P_ANG_DAMP])
    wmax = params[P_MAX_ANG]
    for i in range(nb):
        if not bactive[i] or btype[i] == STATIC:
            continue
        if btype[i] == DYNAMIC:
            for k in range(3):
                angvel[i, k] *= damp
            w2 = _dot(angvel[i], angvel[i])
            if w2 > wmax * wmax:
                angvel[i] *= wmax / math.sqrt(w2)
        for k in range(3):
            pos[i, k] += vel[i, k] * dt
        wx, wy, wz = angvel[i, 0], angvel[i, 1], angvel[i, 2]
        if wx != 0.0 or wy != 0.0 or wz != 0.0:
            qw, qx, qy, qz = quat[i, 0], quat[i, 1], quat[i, 2], quat[i, 3]
            h = 0.5 * dt
            nw = qw + h * (-wx * qx - wy * qy - wz * qz)
            nx = qx + h * (wx * qw + wy * qz - wz * qy)
            ny = qy + h * (wy * qw + wz * qx - wx * qz)
            nz = qz + h * (wz * qw + wx * qy - wy * qx)
            norm = math.sqrt(nw * nw + nx * nx + ny * ny + nz * nz)
            quat[i, 0] = nw / norm
            quat[i, 1] = nx / norm
            quat[i, 2] = ny / norm
            quat[i, 3] = nz / norm

    lt = np.empty((nc, 3))
    for c in range(nc):
        for k in range(3):
            lt[c, k] = lam[c, 1] * rd[c, 1, k] + lam[c, 2] * rd[c, 2, k]
    return nc, ca[:nc].copy(), cb[:nc].copy(), local, lam[:, 0].copy(), lt


@njit(cache=True)
def sweep_clearance(shape, pos, quat, others, opos, oquat, nv, verts, nf, fnorm, foff, fnv, floop, ne, edges,
                    eface, radius):
    """Smallest separation between ``shape`` at each sampled pose and all ``others``."""
    best = 1e30
    for m in range(pos.shape[0]):
        for k in range(others.shape[0]):
            o = others[k]
            dx = opos[k, 0] - pos[m, 0]
            dy = opos[k, 1] - pos[m, 1]
            dz = opos[k, 2] - pos[m, 2]
            reach = radius[shape] + radius[o]
            d2 = dx * dx + dy * dy + dz * dz
            if d2 > reach * reach:
                lower = math.sqrt(d2) - reach
                if lower < best:
                    best = lower
                continue
            s = separation(shape, pos[m], quat[m], o, opos[k], oquat[k], nv, verts, nf, fnorm, foff, fnv, floop,
                           ne, edges, eface)
            if s < best:
                best = s
    return best

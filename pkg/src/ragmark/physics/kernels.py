"""Numba kernels: semi-implicit Euler stepping with sequential impulses.

One kernel invocation advances a whole batch of independent scene
instances by ``n_substeps`` under held torques.  Everything is float64
and branch-structure is fixed by the model, so trajectories are bitwise
reproducible; instances are solved independently inside a ``prange``.

Constraint treatment per substep:
  * gravity, motor torques and implicit joint damping applied to
    velocities first,
  * joint anchors solved as 3x3 blocks, hinge axis alignment and slide
    rotation locks as scalar angular rows, joint limits as one-sided
    rows, contacts as a normal row plus two Coulomb-clamped tangent rows,
  * Baumgarte position feedback folded into each row's velocity bias,
  * accumulated impulses warm-start the next substep.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

HINGE = 0
SLIDE = 1

_F = {"cache": True, "fastmath": False}


@njit(**_F)
def _qmul(aw, ax, ay, az, bw, bx, by, bz):
    return (aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw)


@njit(**_F)
def _qrot(qw, qx, qy, qz, vx, vy, vz):
    # v + 2 q_v x (q_v x v + w v)
    cx = qy * vz - qz * vy + qw * vx
    cy = qz * vx - qx * vz + qw * vy
    cz = qx * vy - qy * vx + qw * vz
    return (vx + 2.0 * (qy * cz - qz * cy),
            vy + 2.0 * (qz * cx - qx * cz),
            vz + 2.0 * (qx * cy - qy * cx))


@njit(**_F)
def _qrot_inv(qw, qx, qy, qz, vx, vy, vz):
    return _qrot(qw, -qx, -qy, -qz, vx, vy, vz)


@njit(**_F)
def _cross(ax, ay, az, bx, by, bz):
    return (ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx)


@njit(**_F)
def _world_inv_inertia(q, idiag, out):
    """out = R diag(idiag) R^T for quaternion q."""
    w, x, y, z = q[0], q[1], q[2], q[3]
    r00 = 1.0 - 2.0 * (y * y + z * z)
    r01 = 2.0 * (x * y - w * z)
    r02 = 2.0 * (x * z + w * y)
    r10 = 2.0 * (x * y + w * z)
    r11 = 1.0 - 2.0 * (x * x + z * z)
    r12 = 2.0 * (y * z - w * x)
    r20 = 2.0 * (x * z - w * y)
    r21 = 2.0 * (y * z + w * x)
    r22 = 1.0 - 2.0 * (x * x + y * y)
    d0, d1, d2 = idiag[0], idiag[1], idiag[2]
    # tmp = R * diag
    t00, t01, t02 = r00 * d0, r01 * d1, r02 * d2
    t10, t11, t12 = r10 * d0, r11 * d1, r12 * d2
    t20, t21, t22 = r20 * d0, r21 * d1, r22 * d2
    out[0, 0] = t00 * r00 + t01 * r01 + t02 * r02
    out[0, 1] = t00 * r10 + t01 * r11 + t02 * r12
    out[0, 2] = t00 * r20 + t01 * r21 + t02 * r22
    out[1, 0] = out[0, 1]
    out[1, 1] = t10 * r10 + t11 * r11 + t12 * r12
    out[1, 2] = t10 * r20 + t11 * r21 + t12 * r22
    out[2, 0] = out[0, 2]
    out[2, 1] = out[1, 2]
    out[2, 2] = t20 * r20 + t21 * r21 + t22 * r22


@njit(**_F)
def _mat3_vec(m, vx, vy, vz):
    return (m[0, 0] * vx + m[0, 1] * vy + m[0, 2] * vz,
            m[1, 0] * vx + m[1, 1] * vy + m[1, 2] * vz,
            m[2, 0] * vx + m[2, 1] * vy + m[2, 2] * vz)


@njit(**_F)
def _invert3(m, out) -> bool:
    a, b, c = m[0, 0], m[0, 1], m[0, 2]
    d, e, f = m[1, 0], m[1, 1], m[1, 2]
    g, h, i = m[2, 0], m[2, 1], m[2, 2]
    A = e * i - f * h
    B = -(d * i - f * g)
    C = d * h - e * g
    det = a * A + b * B + c * C
    if abs(det) < 1e-14:
        return False
    inv = 1.0 / det
    out[0, 0] = A * inv
    out[0, 1] = -(b * i - c * h) * inv
    out[0, 2] = (b * f - c * e) * inv
    out[1, 0] = B * inv
    out[1, 1] = (a * i - c * g) * inv
    out[1, 2] = -(a * f - c * d) * inv
    out[2, 0] = C * inv
    out[2, 1] = -(a * h - b * g) * inv
    out[2, 2] = (a * e - b * d) * inv
    return True


@njit(**_F)
def _ortho_basis(ax, ay, az):
    """Two unit vectors orthogonal to (ax, ay, az)."""
    if abs(ax) < 0.57735:
        b1x, b1y, b1z = 0.0, az, -ay
    else:
        b1x, b1y, b1z = ay, -ax, 0.0
    n = np.sqrt(b1x * b1x + b1y * b1y + b1z * b1z)
    b1x, b1y, b1z = b1x / n, b1y / n, b1z / n
    b2x, b2y, b2z = _cross(ax, ay, az, b1x, b1y, b1z)
    return b1x, b1y, b1z, b2x, b2y, b2z


@njit(**_F)
def _terrain_height(kind, heights, spacing, x0, x):
    if kind == 0:
        return 0.0
    t = (x - x0) / spacing
    n = heights.shape[0]
    if t <= 0.0:
        return heights[0]
    if t >= n - 1:
        return heights[n - 1]
    i = int(t)
    f = t - i
    return heights[i] * (1.0 - f) + heights[i + 1] * f


@njit(**_F)
def _terrain_normal(kind, heights, spacing, x0, x):
    if kind == 0:
        return 0.0, 1.0, 0.0
    h0 = _terrain_height(kind, heights, spacing, x0, x - 0.5 * spacing)
    h1 = _terrain_height(kind, heights, spacing, x0, x + 0.5 * spacing)
    slope = (h1 - h0) / spacing
    inv = 1.0 / np.sqrt(1.0 + slope * slope)
    return -slope * inv, inv, 0.0


@njit(**_F)
def _closest_segment_segment(p0, p1, q0, q1):
    """Closest points between segments [p0,p1] and [q0,q1] (Ericson)."""
    d1x, d1y, d1z = p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]
    d2x, d2y, d2z = q1[0] - q0[0], q1[1] - q0[1], q1[2] - q0[2]
    rx, ry, rz = p0[0] - q0[0], p0[1] - q0[1], p0[2] - q0[2]
    a = d1x * d1x + d1y * d1y + d1z * d1z
    e = d2x * d2x + d2y * d2y + d2z * d2z
    f = d2x * rx + d2y * ry + d2z * rz
    eps = 1e-12
    if a <= eps and e <= eps:
        s = 0.0
        t = 0.0
    elif a <= eps:
        s = 0.0
        t = min(max(f / e, 0.0), 1.0)
    else:
        c = d1x * rx + d1y * ry + d1z * rz
        if e <= eps:
            t = 0.0
            s = min(max(-c / a, 0.0), 1.0)
        else:
            b = d1x * d2x + d1y * d2y + d1z * d2z
            denom = a * e - b * b
            if denom > eps:
                s = min(max((b * f - c * e) / denom, 0.0), 1.0)
            else:
                s = 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = min(max(-c / a, 0.0), 1.0)
            elif t > 1.0:
                t = 1.0
                s = min(max((b - c) / a, 0.0), 1.0)
    cpx, cpy, cpz = p0[0] + d1x * s, p0[1] + d1y * s, p0[2] + d1z * s
    cqx, cqy, cqz = q0[0] + d2x * t, q0[1] + d2y * t, q0[2] + d2z * t
    return cpx, cpy, cpz, cqx, cqy, cqz


@njit(**_F)
def _step_instance(
    pos, quat, linvel, angvel, jpos, jvel,
    w_jlin, w_jang, w_jlim, w_tcon, w_pcon,
    touch_accum, touch_final,
    ct_active, ct_depth, ct_point, ct_normal,
    cp_active, cp_depth, cp_point, cp_normal,
    parent, inv_mass, inv_inertia,
    jnt_child, jnt_parent, jnt_type, jnt_axis_c, jnt_axis_p,
    jnt_anchor_c, jnt_anchor_p, jnt_qrest, jnt_range, jnt_damping,
    act_joint, act_gear,
    t_body, t_local, t_radius, t_friction,
    p_body_a, p_body_b, p_seg_a, p_seg_b, p_radius, p_friction,
    terr_kind, terr_heights, terr_spacing, terr_x0,
    torque,
    dt, gx, gy, gz, iterations, beta, slop, fric_scale, warm_start_on, planar,
    n_substeps,
):
    B = pos.shape[0]
    J = jnt_child.shape[0]
    A = act_joint.shape[0]
    St = t_body.shape[0]
    Sp = p_body_a.shape[0]
    inv_dt = 1.0 / dt

    iinv_w = np.empty((B, 3, 3))
    # joint scratch
    j_rp = np.empty((J, 3))
    j_rc = np.empty((J, 3))
    j_err = np.empty((J, 3))
    j_kinv = np.empty((J, 3, 3))
    j_aw = np.empty((J, 3))
    j_b1 = np.empty((J, 3))
    j_b2 = np.empty((J, 3))
    j_aerr = np.empty((J, 3))
    j_kang = np.empty((J, 3))
    j_lim_state = np.empty(J, dtype=np.int64)
    j_lim_bias = np.empty(J)
    j_klim = np.empty(J)
    kmat = np.empty((3, 3))
    # contact scratch
    t_ra = np.empty((St, 3))
    t_kn = np.empty(St)
    t_t1 = np.empty((St, 3))
    t_t2 = np.empty((St, 3))
    t_kt1 = np.empty(St)
    t_kt2 = np.empty(St)
    t_bias = np.empty(St)
    p_ra = np.empty((Sp, 3))
    p_rb = np.empty((Sp, 3))
    p_kn = np.empty(Sp)
    p_t1 = np.empty((Sp, 3))
    p_t2 = np.empty((Sp, 3))
    p_kt1 = np.empty(Sp)
    p_kt2 = np.empty(Sp)
    p_bias = np.empty(Sp)
    seg_a0 = np.empty(3)
    seg_a1 = np.empty(3)
    seg_b0 = np.empty(3)
    seg_b1 = np.empty(3)

    for b in range(B):
        touch_accum[b] = 0

    for _sub in range(n_substeps):
        # -- world-space inverse inertia at current orientations
        for b in range(B):
            _world_inv_inertia(quat[b], inv_inertia[b], iinv_w[b])

        # -- external forces: gravity
        for b in range(B):
            if inv_mass[b] > 0.0:
                linvel[b, 0] += gx * dt
                linvel[b, 1] += gy * dt
                linvel[b, 2] += gz * dt

        # -- joint world axes (parent frame is authoritative)
        for j in range(J):
            p = jnt_parent[j]
            awx, awy, awz = _qrot(quat[p, 0], quat[p, 1], quat[p, 2], quat[p, 3],
                                  jnt_axis_p[j, 0], jnt_axis_p[j, 1], jnt_axis_p[j, 2])
            j_aw[j, 0], j_aw[j, 1], j_aw[j, 2] = awx, awy, awz

        # -- motor torques (held constant across substeps)
        for a in range(A):
            j = act_joint[a]
            c = jnt_child[j]
            p = jnt_parent[j]
            tq = torque[a]
            awx, awy, awz = j_aw[j, 0], j_aw[j, 1], j_aw[j, 2]
            if jnt_type[j] == HINGE:
                lx, ly, lz = awx * tq * dt, awy * tq * dt, awz * tq * dt
                dx, dy, dz = _mat3_vec(iinv_w[c], lx, ly, lz)
                angvel[c, 0] += dx
                angvel[c, 1] += dy
                angvel[c, 2] += dz
                dx, dy, dz = _mat3_vec(iinv_w[p], lx, ly, lz)
                angvel[p, 0] -= dx
                angvel[p, 1] -= dy
                angvel[p, 2] -= dz
            else:
                # slide: pure force along the axis; rotation rows absorb moments
                fx, fy, fz = awx * tq * dt, awy * tq * dt, awz * tq * dt
                linvel[c, 0] += fx * inv_mass[c]
                linvel[c, 1] += fy * inv_mass[c]
                linvel[c, 2] += fz * inv_mass[c]
                linvel[p, 0] -= fx * inv_mass[p]
                linvel[p, 1] -= fy * inv_mass[p]
                linvel[p, 2] -= fz * inv_mass[p]

        # -- implicit joint damping, unconditionally stable
        for j in range(J):
            d = jnt_damping[j]
            if d <= 0.0:
                continue
            c = jnt_child[j]
            p = jnt_parent[j]
            awx, awy, awz = j_aw[j, 0], j_aw[j, 1], j_aw[j, 2]
            if jnt_type[j] == HINGE:
                ux, uy, uz = _mat3_vec(iinv_w[c], awx, awy, awz)
                k = awx * ux + awy * uy + awz * uz
                ux, uy, uz = _mat3_vec(iinv_w[p], awx, awy, awz)
                k += awx * ux + awy * uy + awz * uz
                rel = ((angvel[c, 0] - angvel[p, 0]) * awx
                       + (angvel[c, 1] - angvel[p, 1]) * awy
                       + (angvel[c, 2] - angvel[p, 2]) * awz)
                lam = -d * dt * rel / (1.0 + k * d * dt)
                lx, ly, lz = awx * lam, awy * lam, awz * lam
                dx, dy, dz = _mat3_vec(iinv_w[c], lx, ly, lz)
                angvel[c, 0] += dx
                angvel[c, 1] += dy
                angvel[c, 2] += dz
                dx, dy, dz = _mat3_vec(iinv_w[p], lx, ly, lz)
                angvel[p, 0] -= dx
                angvel[p, 1] -= dy
                angvel[p, 2] -= dz
            else:
                k = inv_mass[c] + inv_mass[p]
                rel = ((linvel[c, 0] - linvel[p, 0]) * awx
                       + (linvel[c, 1] - linvel[p, 1]) * awy
                       + (linvel[c, 2] - linvel[p, 2]) * awz)
                lam = -d * dt * rel / (1.0 + k * d * dt)
                fx, fy, fz = awx * lam, awy * lam, awz * lam
                linvel[c, 0] += fx * inv_mass[c]
                linvel[c, 1] += fy * inv_mass[c]
                linvel[c, 2] += fz * inv_mass[c]
                linvel[p, 0] -= fx * inv_mass[p]
                linvel[p, 1] -= fy * inv_mass[p]
                linvel[p, 2] -= fz * inv_mass[p]

        # -- joint constraint preparation
        for j in range(J):
            c = jnt_child[j]
            p = jnt_parent[j]
            imc, imp = inv_mass[c], inv_mass[p]
            rcx, rcy, rcz = _qrot(quat[c, 0], quat[c, 1], quat[c, 2], quat[c, 3],
                                  jnt_anchor_c[j, 0], jnt_anchor_c[j, 1], jnt_anchor_c[j, 2])
            rpx, rpy, rpz = _qrot(quat[p, 0], quat[p, 1], quat[p, 2], quat[p, 3],
                                  jnt_anchor_p[j, 0], jnt_anchor_p[j, 1], jnt_anchor_p[j, 2])
            j_rc[j, 0], j_rc[j, 1], j_rc[j, 2] = rcx, rcy, rcz
            j_rp[j, 0], j_rp[j, 1], j_rp[j, 2] = rpx, rpy, rpz
            ex = (pos[c, 0] + rcx) - (pos[p, 0] + rpx)
            ey = (pos[c, 1] + rcy) - (pos[p, 1] + rpy)
            ez = (pos[c, 2] + rcz) - (pos[p, 2] + rpz)
            awx, awy, awz = j_aw[j, 0], j_aw[j, 1], j_aw[j, 2]
            if jnt_type[j] == SLIDE:
                # only the components perpendicular to the axis are constrained
                proj = ex * awx + ey * awy + ez * awz
                ex -= proj * awx
                ey -= proj * awy
                ez -= proj * awz
                # r vectors act through the child anchor point
                wacx = pos[c, 0] + rcx
                wacy = pos[c, 1] + rcy
                wacz = pos[c, 2] + rcz
                j_rp[j, 0] = wacx - pos[p, 0]
                j_rp[j, 1] = wacy - pos[p, 1]
                j_rp[j, 2] = wacz - pos[p, 2]
            j_err[j, 0], j_err[j, 1], j_err[j, 2] = ex, ey, ez

            rpx, rpy, rpz = j_rp[j, 0], j_rp[j, 1], j_rp[j, 2]
            # K = (imp+imc) I + skew(rp) Ip skew(rp)^T + skew(rc) Ic skew(rc)^T
            for row in range(3):
                for col in range(3):
                    kmat[row, col] = 0.0
            kmat[0, 0] = imp + imc
            kmat[1, 1] = imp + imc
            kmat[2, 2] = imp + imc
            for side in range(2):
                if side == 0:
                    rx, ry, rz = rpx, rpy, rpz
                    ii = iinv_w[p]
                else:
                    rx, ry, rz = rcx, rcy, rcz
                    ii = iinv_w[c]
                # skew(r) * Iinv * skew(r)^T; columns of skew^T are skew rows
                c0x, c0y, c0z = _mat3_vec(ii, 0.0, -rz, ry)
                c1x, c1y, c1z = _mat3_vec(ii, rz, 0.0, -rx)
                c2x, c2y, c2z = _mat3_vec(ii, -ry, rx, 0.0)
                # rows of skew(r): (0,-rz,ry), (rz,0,-rx), (-ry,rx,0)
                kmat[0, 0] += -rz * c0y + ry * c0z
                kmat[0, 1] += -rz * c1y + ry * c1z
                kmat[0, 2] += -rz * c2y + ry * c2z
                kmat[1, 0] += rz * c0x - rx * c0z
                kmat[1, 1] += rz * c1x - rx * c1z
                kmat[1, 2] += rz * c2x - rx * c2z
                kmat[2, 0] += -ry * c0x + rx * c0y
                kmat[2, 1] += -ry * c1x + rx * c1y
                kmat[2, 2] += -ry * c2x + rx * c2y
            _invert3(kmat, j_kinv[j])

            # angular rows
            b1x, b1y, b1z, b2x, b2y, b2z = _ortho_basis(awx, awy, awz)
            j_b1[j, 0], j_b1[j, 1], j_b1[j, 2] = b1x, b1y, b1z
            j_b2[j, 0], j_b2[j, 1], j_b2[j, 2] = b2x, b2y, b2z
            if jnt_type[j] == HINGE:
                # alignment error: rotvec that aligns the child axis onto the
                # parent axis (small-angle)
                acx, acy, acz = _qrot(quat[c, 0], quat[c, 1], quat[c, 2], quat[c, 3],
                                      jnt_axis_c[j, 0], jnt_axis_c[j, 1], jnt_axis_c[j, 2])
                exx, exy, exz = _cross(acx, acy, acz, awx, awy, awz)
                j_aerr[j, 0], j_aerr[j, 1], j_aerr[j, 2] = exx, exy, exz
            else:
                # full rotation lock: world-frame error rotvec from the
                # quaternion taking the target orientation to the actual one
                tw, tx, ty, tz = _qmul(quat[p, 0], quat[p, 1], quat[p, 2], quat[p, 3],
                                       jnt_qrest[j, 0], jnt_qrest[j, 1], jnt_qrest[j, 2], jnt_qrest[j, 3])
                dw, dx, dy, dz = _qmul(quat[c, 0], quat[c, 1], quat[c, 2], quat[c, 3],
                                       tw, -tx, -ty, -tz)
                s = 1.0 if dw >= 0.0 else -1.0
                j_aerr[j, 0] = 2.0 * dx * s
                j_aerr[j, 1] = 2.0 * dy * s
                j_aerr[j, 2] = 2.0 * dz * s
            # effective angular masses for rows b1, b2 and the axis itself
            for rowk in range(3):
                if rowk == 0:
                    ux, uy, uz = b1x, b1y, b1z
                elif rowk == 1:
                    ux, uy, uz = b2x, b2y, b2z
                else:
                    ux, uy, uz = awx, awy, awz
                vx, vy, vz = _mat3_vec(iinv_w[p], ux, uy, uz)
                k = ux * vx + uy * vy + uz * vz
                vx, vy, vz = _mat3_vec(iinv_w[c], ux, uy, uz)
                k += ux * vx + uy * vy + uz * vz
                j_kang[j, rowk] = 1.0 / k if k > 1e-12 else 0.0

            # limit row
            lo, hi = jnt_range[j, 0], jnt_range[j, 1]
            q = jpos[j]
            if q < lo:
                j_lim_state[j] = -1
                j_lim_bias[j] = (lo - q) * beta * inv_dt
            elif q > hi:
                j_lim_state[j] = 1
                j_lim_bias[j] = (q - hi) * beta * inv_dt
            else:
                j_lim_state[j] = 0
                j_lim_bias[j] = 0.0
                w_jlim[j] = 0.0
            if jnt_type[j] == HINGE:
                j_klim[j] = j_kang[j, 2]
            else:
                k = inv_mass[c] + inv_mass[p]
                j_klim[j] = 1.0 / k if k > 1e-12 else 0.0

        # -- terrain contact detection
        for s in range(St):
            b = t_body[s]
            wx, wy, wz = _qrot(quat[b, 0], quat[b, 1], quat[b, 2], quat[b, 3],
                               t_local[s, 0], t_local[s, 1], t_local[s, 2])
            wx += pos[b, 0]
            wy += pos[b, 1]
            wz += pos[b, 2]
            h = _terrain_height(terr_kind, terr_heights, terr_spacing, terr_x0, wx)
            nx, ny, nz = _terrain_normal(terr_kind, terr_heights, terr_spacing, terr_x0, wx)
            dist = ny * (wy - h)
            depth = t_radius[s] - dist
            if depth <= 0.0:
                ct_active[s] = 0
                w_tcon[s, 0] = 0.0
                w_tcon[s, 1] = 0.0
                w_tcon[s, 2] = 0.0
                continue
            ct_active[s] = 1
            ct_depth[s] = depth
            touch_accum[b] = 1
            cpx = wx - nx * t_radius[s]
            cpy = wy - ny * t_radius[s]
            cpz = wz - nz * t_radius[s]
            ct_point[s, 0], ct_point[s, 1], ct_point[s, 2] = cpx, cpy, cpz
            ct_normal[s, 0], ct_normal[s, 1], ct_normal[s, 2] = nx, ny, nz
            rax, ray, raz = cpx - pos[b, 0], cpy - pos[b, 1], cpz - pos[b, 2]
            t_ra[s, 0], t_ra[s, 1], t_ra[s, 2] = rax, ray, raz
            # effective masses
            cx, cy, cz = _cross(rax, ray, raz, nx, ny, nz)
            ux, uy, uz = _mat3_vec(iinv_w[b], cx, cy, cz)
            t_kn[s] = 1.0 / (inv_mass[b] + cx * ux + cy * uy + cz * uz)
            t1x, t1y, t1z, t2x, t2y, t2z = _ortho_basis(nx, ny, nz)
            t_t1[s, 0], t_t1[s, 1], t_t1[s, 2] = t1x, t1y, t1z
            t_t2[s, 0], t_t2[s, 1], t_t2[s, 2] = t2x, t2y, t2z
            cx, cy, cz = _cross(rax, ray, raz, t1x, t1y, t1z)
            ux, uy, uz = _mat3_vec(iinv_w[b], cx, cy, cz)
            t_kt1[s] = 1.0 / (inv_mass[b] + cx * ux + cy * uy + cz * uz)
            cx, cy, cz = _cross(rax, ray, raz, t2x, t2y, t2z)
            ux, uy, uz = _mat3_vec(iinv_w[b], cx, cy, cz)
            t_kt2[s] = 1.0 / (inv_mass[b] + cx * ux + cy * uy + cz * uz)
            over = depth - slop
            t_bias[s] = beta * inv_dt * over if over > 0.0 else 0.0

        # -- self-collision pair detection
        for s in range(Sp):
            ba = p_body_a[s]
            bb = p_body_b[s]
            a0x, a0y, a0z = _qrot(quat[ba, 0], quat[ba, 1], quat[ba, 2], quat[ba, 3],
                                  p_seg_a[s, 0, 0], p_seg_a[s, 0, 1], p_seg_a[s, 0, 2])
            a1x, a1y, a1z = _qrot(quat[ba, 0], quat[ba, 1], quat[ba, 2], quat[ba, 3],
                                  p_seg_a[s, 1, 0], p_seg_a[s, 1, 1], p_seg_a[s, 1, 2])
            b0x, b0y, b0z = _qrot(quat[bb, 0], quat[bb, 1], quat[bb, 2], quat[bb, 3],
                                  p_seg_b[s, 0, 0], p_seg_b[s, 0, 1], p_seg_b[s, 0, 2])
            b1x_, b1y_, b1z_ = _qrot(quat[bb, 0], quat[bb, 1], quat[bb, 2], quat[bb, 3],
                                     p_seg_b[s, 1, 0], p_seg_b[s, 1, 1], p_seg_b[s, 1, 2])
            seg_a0[0], seg_a0[1], seg_a0[2] = pos[ba, 0] + a0x, pos[ba, 1] + a0y, pos[ba, 2] + a0z
            seg_a1[0], seg_a1[1], seg_a1[2] = pos[ba, 0] + a1x, pos[ba, 1] + a1y, pos[ba, 2] + a1z
            seg_b0[0], seg_b0[1], seg_b0[2] = pos[bb, 0] + b0x, pos[bb, 1] + b0y, pos[bb, 2] + b0z
            seg_b1[0], seg_b1[1], seg_b1[2] = pos[bb, 0] + b1x_, pos[bb, 1] + b1y_, pos[bb, 2] + b1z_
            cax, cay, caz, cbx, cby, cbz = _closest_segment_segment(seg_a0, seg_a1, seg_b0, seg_b1)
            dx, dy, dz = cax - cbx, cay - cby, caz - cbz
            dist = np.sqrt(dx * dx + dy * dy + dz * dz)
            depth = p_radius[s, 0] + p_radius[s, 1] - dist
            if depth <= 0.0 or dist < 1e-9:
                cp_active[s] = 0
                w_pcon[s, 0] = 0.0
                w_pcon[s, 1] = 0.0
                w_pcon[s, 2] = 0.0
                continue
            cp_active[s] = 1
            cp_depth[s] = depth
            nx, ny, nz = dx / dist, dy / dist, dz / dist  # pushes A away from B
            midx = 0.5 * (cax + cbx)
            midy = 0.5 * (cay + cby)
            midz = 0.5 * (caz + cbz)
            cp_point[s, 0], cp_point[s, 1], cp_point[s, 2] = midx, midy, midz
            cp_normal[s, 0], cp_normal[s, 1], cp_normal[s, 2] = nx, ny, nz
            rax, ray, raz = midx - pos[ba, 0], midy - pos[ba, 1], midz - pos[ba, 2]
            rbx, rby, rbz = midx - pos[bb, 0], midy - pos[bb, 1], midz - pos[bb, 2]
            p_ra[s, 0], p_ra[s, 1], p_ra[s, 2] = rax, ray, raz
            p_rb[s, 0], p_rb[s, 1], p_rb[s, 2] = rbx, rby, rbz
            kn = inv_mass[ba] + inv_mass[bb]
            cx, cy, cz = _cross(rax, ray, raz, nx, ny, nz)
            ux, uy, uz = _mat3_vec(iinv_w[ba], cx, cy, cz)
            kn += cx * ux + cy * uy + cz * uz
            cx, cy, cz = _cross(rbx, rby, rbz, nx, ny, nz)
            ux, uy, uz = _mat3_vec(iinv_w[bb], cx, cy, cz)
            kn += cx * ux + cy * uy + cz * uz
            p_kn[s] = 1.0 / kn
            t1x, t1y, t1z, t2x, t2y, t2z = _ortho_basis(nx, ny, nz)
            p_t1[s, 0], p_t1[s, 1], p_t1[s, 2] = t1x, t1y, t1z
            p_t2[s, 0], p_t2[s, 1], p_t2[s, 2] = t2x, t2y, t2z
            for rowk in range(2):
                if rowk == 0:
                    ux0, uy0, uz0 = t1x, t1y, t1z
                else:
                    ux0, uy0, uz0 = t2x, t2y, t2z
                kt = inv_mass[ba] + inv_mass[bb]
                cx, cy, cz = _cross(rax, ray, raz, ux0, uy0, uz0)
                ux, uy, uz = _mat3_vec(iinv_w[ba], cx, cy, cz)
                kt += cx * ux + cy * uy + cz * uz
                cx, cy, cz = _cross(rbx, rby, rbz, ux0, uy0, uz0)
                ux, uy, uz = _mat3_vec(iinv_w[bb], cx, cy, cz)
                kt += cx * ux + cy * uy + cz * uz
                if rowk == 0:
                    p_kt1[s] = 1.0 / kt
                else:
                    p_kt2[s] = 1.0 / kt
            over = depth - slop
            p_bias[s] = beta * inv_dt * over if over > 0.0 else 0.0

        # -- warm start; applies to contacts only: re-seeding joint impulses
        # destabilizes chains through the light synthesized bodies, so joint
        # rows rebuild their impulse from zero each substep
        for j in range(J):
            w_jlin[j, 0] = 0.0
            w_jlin[j, 1] = 0.0
            w_jlin[j, 2] = 0.0
            w_jang[j, 0] = 0.0
            w_jang[j, 1] = 0.0
            w_jang[j, 2] = 0.0
            w_jlim[j] = 0.0
        if warm_start_on == 1:
            for s in range(St):
                if ct_active[s] == 1:
                    b = t_body[s]
                    ix = (ct_normal[s, 0] * w_tcon[s, 0] + t_t1[s, 0] * w_tcon[s, 1]
                          + t_t2[s, 0] * w_tcon[s, 2])
                    iy = (ct_normal[s, 1] * w_tcon[s, 0] + t_t1[s, 1] * w_tcon[s, 1]
                          + t_t2[s, 1] * w_tcon[s, 2])
                    iz = (ct_normal[s, 2] * w_tcon[s, 0] + t_t1[s, 2] * w_tcon[s, 1]
                          + t_t2[s, 2] * w_tcon[s, 2])
                    _apply_single(linvel, angvel, iinv_w, inv_mass, b, t_ra[s], ix, iy, iz)
            for s in range(Sp):
                if cp_active[s] == 1:
                    ix = (cp_normal[s, 0] * w_pcon[s, 0] + p_t1[s, 0] * w_pcon[s, 1]
                          + p_t2[s, 0] * w_pcon[s, 2])
                    iy = (cp_normal[s, 1] * w_pcon[s, 0] + p_t1[s, 1] * w_pcon[s, 1]
                          + p_t2[s, 1] * w_pcon[s, 2])
                    iz = (cp_normal[s, 2] * w_pcon[s, 0] + p_t1[s, 2] * w_pcon[s, 1]
                          + p_t2[s, 2] * w_pcon[s, 2])
                    _apply_pair(linvel, angvel, iinv_w, inv_mass,
                                p_body_b[s], p_body_a[s], p_rb[s], p_ra[s], ix, iy, iz)
        else:
            for s in range(St):
                w_tcon[s, 0] = 0.0
                w_tcon[s, 1] = 0.0
                w_tcon[s, 2] = 0.0
            for s in range(Sp):
                w_pcon[s, 0] = 0.0
                w_pcon[s, 1] = 0.0
                w_pcon[s, 2] = 0.0

        # -- solver iterations
        for _it in range(iterations):
            for j in range(J):
                c = jnt_child[j]
                p = jnt_parent[j]
                # angular rows
                relx = angvel[c, 0] - angvel[p, 0]
                rely = angvel[c, 1] - angvel[p, 1]
                relz = angvel[c, 2] - angvel[p, 2]
                if jnt_type[j] == HINGE:
                    for rowk in range(2):
                        if rowk == 0:
                            ux, uy, uz = j_b1[j, 0], j_b1[j, 1], j_b1[j, 2]
                        else:
                            ux, uy, uz = j_b2[j, 0], j_b2[j, 1], j_b2[j, 2]
                        vel = relx * ux + rely * uy + relz * uz
                        err = j_aerr[j, 0] * ux + j_aerr[j, 1] * uy + j_aerr[j, 2] * uz
                        lam = -(vel - beta * inv_dt * err) * j_kang[j, rowk]
                        w_jang[j, 0] += ux * lam
                        w_jang[j, 1] += uy * lam
                        w_jang[j, 2] += uz * lam
                        _apply_ang_pair(angvel, iinv_w, p, c, ux * lam, uy * lam, uz * lam)
                        relx = angvel[c, 0] - angvel[p, 0]
                        rely = angvel[c, 1] - angvel[p, 1]
                        relz = angvel[c, 2] - angvel[p, 2]
                else:
                    for rowk in range(3):
                        if rowk == 0:
                            ux, uy, uz = 1.0, 0.0, 0.0
                        elif rowk == 1:
                            ux, uy, uz = 0.0, 1.0, 0.0
                        else:
                            ux, uy, uz = 0.0, 0.0, 1.0
                        vx, vy, vz = _mat3_vec(iinv_w[p], ux, uy, uz)
                        k = ux * vx + uy * vy + uz * vz
                        vx, vy, vz = _mat3_vec(iinv_w[c], ux, uy, uz)
                        k += ux * vx + uy * vy + uz * vz
                        if k <= 1e-12:
                            continue
                        vel = relx * ux + rely * uy + relz * uz
                        err = j_aerr[j, 0] * ux + j_aerr[j, 1] * uy + j_aerr[j, 2] * uz
                        lam = -(vel + beta * inv_dt * err) / k
                        w_jang[j, 0] += ux * lam
                        w_jang[j, 1] += uy * lam
                        w_jang[j, 2] += uz * lam
                        _apply_ang_pair(angvel, iinv_w, p, c, ux * lam, uy * lam, uz * lam)
                        relx = angvel[c, 0] - angvel[p, 0]
                        rely = angvel[c, 1] - angvel[p, 1]
                        relz = angvel[c, 2] - angvel[p, 2]

                # limit row
                if j_lim_state[j] != 0:
                    awx, awy, awz = j_aw[j, 0], j_aw[j, 1], j_aw[j, 2]
                    if jnt_type[j] == HINGE:
                        vel = ((angvel[c, 0] - angvel[p, 0]) * awx
                               + (angvel[c, 1] - angvel[p, 1]) * awy
                               + (angvel[c, 2] - angvel[p, 2]) * awz)
                    else:
                        vel = ((linvel[c, 0] - linvel[p, 0]) * awx
                               + (linvel[c, 1] - linvel[p, 1]) * awy
                               + (linvel[c, 2] - linvel[p, 2]) * awz)
                    if j_lim_state[j] == -1:
                        lam = -(vel - j_lim_bias[j]) * j_klim[j]
                        new_acc = w_jlim[j] + lam
                        if new_acc < 0.0:
                            new_acc = 0.0
                    else:
                        lam = -(vel + j_lim_bias[j]) * j_klim[j]
                        new_acc = w_jlim[j] + lam
                        if new_acc > 0.0:
                            new_acc = 0.0
                    dlam = new_acc - w_jlim[j]
                    w_jlim[j] = new_acc
                    if jnt_type[j] == HINGE:
                        _apply_ang_pair(angvel, iinv_w, p, c, awx * dlam, awy * dlam, awz * dlam)
                    else:
                        _apply_lin_pair(linvel, inv_mass, p, c, awx * dlam, awy * dlam, awz * dlam)

                # anchor block
                rcx, rcy, rcz = j_rc[j, 0], j_rc[j, 1], j_rc[j, 2]
                rpx, rpy, rpz = j_rp[j, 0], j_rp[j, 1], j_rp[j, 2]
                cxx, cxy, cxz = _cross(angvel[c, 0], angvel[c, 1], angvel[c, 2], rcx, rcy, rcz)
                pxx, pxy, pxz = _cross(angvel[p, 0], angvel[p, 1], angvel[p, 2], rpx, rpy, rpz)
                vrx = (linvel[c, 0] + cxx) - (linvel[p, 0] + pxx)
                vry = (linvel[c, 1] + cxy) - (linvel[p, 1] + pxy)
                vrz = (linvel[c, 2] + cxz) - (linvel[p, 2] + pxz)
                if jnt_type[j] == SLIDE:
                    awx, awy, awz = j_aw[j, 0], j_aw[j, 1], j_aw[j, 2]
                    proj = vrx * awx + vry * awy + vrz * awz
                    vrx -= proj * awx
                    vry -= proj * awy
                    vrz -= proj * awz
                rhsx = -(vrx + beta * inv_dt * j_err[j, 0])
                rhsy = -(vry + beta * inv_dt * j_err[j, 1])
                rhsz = -(vrz + beta * inv_dt * j_err[j, 2])
                px_, py_, pz_ = _mat3_vec(j_kinv[j], rhsx, rhsy, rhsz)
                if jnt_type[j] == SLIDE:
                    awx, awy, awz = j_aw[j, 0], j_aw[j, 1], j_aw[j, 2]
                    proj = px_ * awx + py_ * awy + pz_ * awz
                    px_ -= proj * awx
                    py_ -= proj * awy
                    pz_ -= proj * awz
                w_jlin[j, 0] += px_
                w_jlin[j, 1] += py_
                w_jlin[j, 2] += pz_
                _apply_pair(linvel, angvel, iinv_w, inv_mass, p, c, j_rp[j], j_rc[j], px_, py_, pz_)

            # terrain contacts
            for s in range(St):
                if ct_active[s] == 0:
                    continue
                b = t_body[s]
                nx, ny, nz = ct_normal[s, 0], ct_normal[s, 1], ct_normal[s, 2]
                rax, ray, raz = t_ra[s, 0], t_ra[s, 1], t_ra[s, 2]
                wx, wy, wz = _cross(angvel[b, 0], angvel[b, 1], angvel[b, 2], rax, ray, raz)
                vpx, vpy, vpz = linvel[b, 0] + wx, linvel[b, 1] + wy, linvel[b, 2] + wz
                vn = vpx * nx + vpy * ny + vpz * nz
                lam = -(vn - t_bias[s]) * t_kn[s]
                new_acc = w_tcon[s, 0] + lam
                if new_acc < 0.0:
                    new_acc = 0.0
                dlam = new_acc - w_tcon[s, 0]
                w_tcon[s, 0] = new_acc
                _apply_single(linvel, angvel, iinv_w, inv_mass, b, t_ra[s],
                              nx * dlam, ny * dlam, nz * dlam)
                mu = t_friction[s] * fric_scale
                max_f = mu * w_tcon[s, 0]
                for rowk in range(2):
                    if rowk == 0:
                        ux, uy, uz = t_t1[s, 0], t_t1[s, 1], t_t1[s, 2]
                        kt = t_kt1[s]
                    else:
                        ux, uy, uz = t_t2[s, 0], t_t2[s, 1], t_t2[s, 2]
                        kt = t_kt2[s]
                    wx, wy, wz = _cross(angvel[b, 0], angvel[b, 1], angvel[b, 2], rax, ray, raz)
                    vt = ((linvel[b, 0] + wx) * ux + (linvel[b, 1] + wy) * uy
                          + (linvel[b, 2] + wz) * uz)
                    lam = -vt * kt
                    idx = rowk + 1
                    new_acc = w_tcon[s, idx] + lam
                    if new_acc > max_f:
                        new_acc = max_f
                    elif new_acc < -max_f:
                        new_acc = -max_f
                    dlam = new_acc - w_tcon[s, idx]
                    w_tcon[s, idx] = new_acc
                    _apply_single(linvel, angvel, iinv_w, inv_mass, b, t_ra[s],
                                  ux * dlam, uy * dlam, uz * dlam)

            # pair contacts (impulse +n on A, -n on B)
            for s in range(Sp):
                if cp_active[s] == 0:
                    continue
                ba = p_body_a[s]
                bb = p_body_b[s]
                nx, ny, nz = cp_normal[s, 0], cp_normal[s, 1], cp_normal[s, 2]
                wx, wy, wz = _cross(angvel[ba, 0], angvel[ba, 1], angvel[ba, 2],
                                    p_ra[s, 0], p_ra[s, 1], p_ra[s, 2])
                vax, vay, vaz = linvel[ba, 0] + wx, linvel[ba, 1] + wy, linvel[ba, 2] + wz
                wx, wy, wz = _cross(angvel[bb, 0], angvel[bb, 1], angvel[bb, 2],
                                    p_rb[s, 0], p_rb[s, 1], p_rb[s, 2])
                vbx, vby, vbz = linvel[bb, 0] + wx, linvel[bb, 1] + wy, linvel[bb, 2] + wz
                vn = (vax - vbx) * nx + (vay - vby) * ny + (vaz - vbz) * nz
                lam = -(vn - p_bias[s]) * p_kn[s]
                new_acc = w_pcon[s, 0] + lam
                if new_acc < 0.0:
                    new_acc = 0.0
                dlam = new_acc - w_pcon[s, 0]
                w_pcon[s, 0] = new_acc
                _apply_pair(linvel, angvel, iinv_w, inv_mass, bb, ba,
                            p_rb[s], p_ra[s], nx * dlam, ny * dlam, nz * dlam)
                mu = p_friction[s] * fric_scale
                max_f = mu * w_pcon[s, 0]
                for rowk in range(2):
                    if rowk == 0:
                        ux, uy, uz = p_t1[s, 0], p_t1[s, 1], p_t1[s, 2]
                        kt = p_kt1[s]
                    else:
                        ux, uy, uz = p_t2[s, 0], p_t2[s, 1], p_t2[s, 2]
                        kt = p_kt2[s]
                    wx, wy, wz = _cross(angvel[ba, 0], angvel[ba, 1], angvel[ba, 2],
                                        p_ra[s, 0], p_ra[s, 1], p_ra[s, 2])
                    va = ((linvel[ba, 0] + wx) * ux + (linvel[ba, 1] + wy) * uy
                          + (linvel[ba, 2] + wz) * uz)
                    wx, wy, wz = _cross(angvel[bb, 0], angvel[bb, 1], angvel[bb, 2],
                                        p_rb[s, 0], p_rb[s, 1], p_rb[s, 2])
                    vb = ((linvel[bb, 0] + wx) * ux + (linvel[bb, 1] + wy) * uy
                          + (linvel[bb, 2] + wz) * uz)
                    lam = -(va - vb) * kt
                    idx = rowk + 1
                    new_acc = w_pcon[s, idx] + lam
                    if new_acc > max_f:
                        new_acc = max_f
                    elif new_acc < -max_f:
                        new_acc = -max_f
                    dlam = new_acc - w_pcon[s, idx]
                    w_pcon[s, idx] = new_acc
                    _apply_pair(linvel, angvel, iinv_w, inv_mass, bb, ba,
                                p_rb[s], p_ra[s], ux * dlam, uy * dlam, uz * dlam)

        # -- integrate positions and orientations
        for b in range(B):
            if inv_mass[b] == 0.0 and inv_inertia[b, 0] == 0.0:
                continue
            pos[b, 0] += linvel[b, 0] * dt
            pos[b, 1] += linvel[b, 1] * dt
            pos[b, 2] += linvel[b, 2] * dt
            qw, qx, qy, qz = quat[b, 0], quat[b, 1], quat[b, 2], quat[b, 3]
            ox, oy, oz = angvel[b, 0], angvel[b, 1], angvel[b, 2]
            dw, dx, dy, dz = _qmul(0.0, ox, oy, oz, qw, qx, qy, qz)
            qw += 0.5 * dw * dt
            qx += 0.5 * dx * dt
            qy += 0.5 * dy * dt
            qz += 0.5 * dz * dt
            norm = np.sqrt(qw * qw + qx * qx + qy * qy + qz * qz)
            if norm > 1e-12:
                quat[b, 0] = qw / norm
                quat[b, 1] = qx / norm
                quat[b, 2] = qy / norm
                quat[b, 3] = qz / norm

        # -- planar projection: motion confined to the x-y plane
        if planar == 1:
            for b in range(B):
                pos[b, 2] = 0.0
                linvel[b, 2] = 0.0
                angvel[b, 0] = 0.0
                angvel[b, 1] = 0.0
                qw, qz = quat[b, 0], quat[b, 3]
                norm = np.sqrt(qw * qw + qz * qz)
                if norm > 1e-9:
                    quat[b, 0] = qw / norm
                    quat[b, 1] = 0.0
                    quat[b, 2] = 0.0
                    quat[b, 3] = qz / norm
                else:
                    quat[b, 0] = 1.0
                    quat[b, 1] = 0.0
                    quat[b, 2] = 0.0
                    quat[b, 3] = 0.0

        # -- recompute joint coordinates
        for j in range(J):
            _recompute_joint(j, pos, quat, linvel, angvel,
                             jnt_child, jnt_parent, jnt_type, jnt_axis_c, jnt_axis_p,
                             jnt_anchor_c, jnt_anchor_p, jnt_qrest, jpos, jvel)

    # final-substep touch flags
    for b in range(B):
        touch_final[b] = 0
    for s in range(St):
        if ct_active[s] == 1:
            touch_final[t_body[s]] = 1

    # finite check
    ok = True
    for b in range(B):
        for k in range(3):
            if not np.isfinite(pos[b, k]) or not np.isfinite(linvel[b, k]) \
                    or not np.isfinite(angvel[b, k]):
                ok = False
        for k in range(4):
            if not np.isfinite(quat[b, k]):
                ok = False
    return ok


@njit(**_F)
def _apply_pair(linvel, angvel, iinv_w, inv_mass, p, c, rp, rc, ix, iy, iz):
    """Impulse (ix,iy,iz) on body c at rc, reaction on body p at rp."""
    linvel[c, 0] += ix * inv_mass[c]
    linvel[c, 1] += iy * inv_mass[c]
    linvel[c, 2] += iz * inv_mass[c]
    tx, ty, tz = _cross(rc[0], rc[1], rc[2], ix, iy, iz)
    dx, dy, dz = _mat3_vec(iinv_w[c], tx, ty, tz)
    angvel[c, 0] += dx
    angvel[c, 1] += dy
    angvel[c, 2] += dz
    linvel[p, 0] -= ix * inv_mass[p]
    linvel[p, 1] -= iy * inv_mass[p]
    linvel[p, 2] -= iz * inv_mass[p]
    tx, ty, tz = _cross(rp[0], rp[1], rp[2], ix, iy, iz)
    dx, dy, dz = _mat3_vec(iinv_w[p], tx, ty, tz)
    angvel[p, 0] -= dx
    angvel[p, 1] -= dy
    angvel[p, 2] -= dz


@njit(**_F)
def _apply_single(linvel, angvel, iinv_w, inv_mass, b, ra, ix, iy, iz):
    linvel[b, 0] += ix * inv_mass[b]
    linvel[b, 1] += iy * inv_mass[b]
    linvel[b, 2] += iz * inv_mass[b]
    tx, ty, tz = _cross(ra[0], ra[1], ra[2], ix, iy, iz)
    dx, dy, dz = _mat3_vec(iinv_w[b], tx, ty, tz)
    angvel[b, 0] += dx
    angvel[b, 1] += dy
    angvel[b, 2] += dz


@njit(**_F)
def _apply_ang_pair(angvel, iinv_w, p, c, lx, ly, lz):
    dx, dy, dz = _mat3_vec(iinv_w[c], lx, ly, lz)
    angvel[c, 0] += dx
    angvel[c, 1] += dy
    angvel[c, 2] += dz
    dx, dy, dz = _mat3_vec(iinv_w[p], lx, ly, lz)
    angvel[p, 0] -= dx
    angvel[p, 1] -= dy
    angvel[p, 2] -= dz


@njit(**_F)
def _apply_lin_pair(linvel, inv_mass, p, c, ix, iy, iz):
    linvel[c, 0] += ix * inv_mass[c]
    linvel[c, 1] += iy * inv_mass[c]
    linvel[c, 2] += iz * inv_mass[c]
    linvel[p, 0] -= ix * inv_mass[p]
    linvel[p, 1] -= iy * inv_mass[p]
    linvel[p, 2] -= iz * inv_mass[p]


@njit(**_F)
def _recompute_joint(j, pos, quat, linvel, angvel,
                     jnt_child, jnt_parent, jnt_type, jnt_axis_c, jnt_axis_p,
                     jnt_anchor_c, jnt_anchor_p, jnt_qrest, jpos, jvel):
    c = jnt_child[j]
    p = jnt_parent[j]
    awx, awy, awz = _qrot(quat[p, 0], quat[p, 1], quat[p, 2], quat[p, 3],
                          jnt_axis_p[j, 0], jnt_axis_p[j, 1], jnt_axis_p[j, 2])
    if jnt_type[j] == HINGE:
        # twist of conj(qrest) * conj(qp) * qc about the child-frame axis
        rw, rx, ry, rz = _qmul(quat[p, 0], -quat[p, 1], -quat[p, 2], -quat[p, 3],
                               quat[c, 0], quat[c, 1], quat[c, 2], quat[c, 3])
        qw, qx, qy, qz = _qmul(jnt_qrest[j, 0], -jnt_qrest[j, 1], -jnt_qrest[j, 2], -jnt_qrest[j, 3],
                               rw, rx, ry, rz)
        s = qx * jnt_axis_c[j, 0] + qy * jnt_axis_c[j, 1] + qz * jnt_axis_c[j, 2]
        if qw < 0.0:
            qw = -qw
            s = -s
        jpos[j] = 2.0 * np.arctan2(s, qw)
        jvel[j] = ((angvel[c, 0] - angvel[p, 0]) * awx
                   + (angvel[c, 1] - angvel[p, 1]) * awy
                   + (angvel[c, 2] - angvel[p, 2]) * awz)
    else:
        rcx, rcy, rcz = _qrot(quat[c, 0], quat[c, 1], quat[c, 2], quat[c, 3],
                              jnt_anchor_c[j, 0], jnt_anchor_c[j, 1], jnt_anchor_c[j, 2])
        rpx, rpy, rpz = _qrot(quat[p, 0], quat[p, 1], quat[p, 2], quat[p, 3],
                              jnt_anchor_p[j, 0], jnt_anchor_p[j, 1], jnt_anchor_p[j, 2])
        dx = (pos[c, 0] + rcx) - (pos[p, 0] + rpx)
        dy = (pos[c, 1] + rcy) - (pos[p, 1] + rpy)
        dz = (pos[c, 2] + rcz) - (pos[p, 2] + rpz)
        jpos[j] = dx * awx + dy * awy + dz * awz
        vcx = linvel[c, 0] + (angvel[c, 1] * rcz - angvel[c, 2] * rcy)
        vcy = linvel[c, 1] + (angvel[c, 2] * rcx - angvel[c, 0] * rcz)
        vcz = linvel[c, 2] + (angvel[c, 0] * rcy - angvel[c, 1] * rcx)
        vpx = linvel[p, 0] + (angvel[p, 1] * rpz - angvel[p, 2] * rpy)
        vpy = linvel[p, 1] + (angvel[p, 2] * rpx - angvel[p, 0] * rpz)
        vpz = linvel[p, 2] + (angvel[p, 0] * rpy - angvel[p, 1] * rpx)
        jvel[j] = (vcx - vpx) * awx + (vcy - vpy) * awy + (vcz - vpz) * awz


@njit(parallel=True, **_F)
def step_batch(
    pos, quat, linvel, angvel, jpos, jvel,
    w_jlin, w_jang, w_jlim, w_tcon, w_pcon,
    touch_accum, touch_final,
    ct_active, ct_depth, ct_point, ct_normal,
    cp_active, cp_depth, cp_point, cp_normal,
    ok_flags,
    parent, inv_mass, inv_inertia,
    jnt_child, jnt_parent, jnt_type, jnt_axis_c, jnt_axis_p,
    jnt_anchor_c, jnt_anchor_p, jnt_qrest, jnt_range, jnt_damping,
    act_joint, act_gear,
    t_body, t_local, t_radius, t_friction,
    p_body_a, p_body_b, p_seg_a, p_seg_b, p_radius, p_friction,
    terr_kind, terr_heights, terr_spacing, terr_x0,
    torques, active,
    dt, gx, gy, gz, iterations, beta, slop, fric_scale, warm_start_on, planar,
    n_substeps,
):
    n = pos.shape[0]
    for i in prange(n):
        if active[i] == 0:
            continue
        ok = _step_instance(
            pos[i], quat[i], linvel[i], angvel[i], jpos[i], jvel[i],
            w_jlin[i], w_jang[i], w_jlim[i], w_tcon[i], w_pcon[i],
            touch_accum[i], touch_final[i],
            ct_active[i], ct_depth[i], ct_point[i], ct_normal[i],
            cp_active[i], cp_depth[i], cp_point[i], cp_normal[i],
            parent, inv_mass, inv_inertia,
            jnt_child, jnt_parent, jnt_type, jnt_axis_c, jnt_axis_p,
            jnt_anchor_c, jnt_anchor_p, jnt_qrest, jnt_range, jnt_damping,
            act_joint, act_gear,
            t_body, t_local, t_radius, t_friction,
            p_body_a, p_body_b, p_seg_a, p_seg_b, p_radius, p_friction,
            terr_kind[i], terr_heights[i], terr_spacing, terr_x0,
            torques[i],
            dt, gx, gy, gz, iterations, beta, slop, fric_scale, warm_start_on, planar,
            n_substeps,
        )
        ok_flags[i] = 1 if ok else 0

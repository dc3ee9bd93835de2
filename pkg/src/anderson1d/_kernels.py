"""Compiled inner loops.

Conventions shared by the loops below:

* ``dB`` holds one entry per grid cell; for the splitting scheme it is the
  weight of a point kick placed at the cell midpoint (``y' += dB*y``), with
  exact free flow of ``-y'' = z y`` on both half cells.  The resulting
  one-step map has determinant one and is exact for a potential that is a
  comb of point masses, so Wronskians are conserved to rounding.
* Phases are unwrapped so that ``floor(theta/pi)`` counts the zeros of ``y``.
"""
import math
import cmath

import numpy as np
from numba import njit

PI = math.pi
_BIG = 2.0 ** 500
_SMALL = 2.0 ** -500


@njit(cache=True)
def _half_drift_real(lam, s):
    """Entries ``(C, S, zS)`` of the free flow over length ``s`` at real ``lam``."""
    if lam > 0.0:
        k = math.sqrt(lam)
        return math.cos(k * s), math.sin(k * s) / k, -lam * math.sin(k * s) / k
    elif lam < 0.0:
        k = math.sqrt(-lam)
        return math.cosh(k * s), math.sinh(k * s) / k, -lam * math.sinh(k * s) / k
    return 1.0, s, 0.0


@njit(cache=True)
def _cell_angle(y, yp):
    """Angle in ``[0, pi)`` of the line through ``(y, y')`` measured as ``atan2(y, y')``."""
    a = math.atan2(y, yp)
    if a < 0.0:
        a += PI
    if a >= PI:
        a -= PI
    return a


@njit(cache=True)
def _frac(y, yp, k):
    """Offset in ``[0, pi]`` of the phase inside cell ``k`` (where ``sign y = (-1)^k``)."""
    if k % 2 != 0:
        y = -y
        yp = -yp
    a = math.atan2(y, yp)
    if a < 0.0:
        # rounding put y on the wrong side of zero
        a = 0.0 if a > -0.5 * PI else PI
    return a


@njit(cache=True)
def split_prufer(dB, h, lam, theta0, rho0, store):
    """Pathwise splitting in polar form for real ``lam``.

    Returns ``(theta, rho)`` at all nodes when ``store`` is true, otherwise
    arrays of length one holding the end values. The lattice index of the
    phase is advanced whenever ``y`` changes sign, which on a free arc
    shorter than half a period happens at most once and only upward.
    """
    n = dB.shape[0]
    m = n + 1 if store else 1
    th = np.empty(m)
    rh = np.empty(m)
    C, S, zS = _half_drift_real(lam, 0.5 * h)
    if lam > 0.0 and math.sqrt(lam) * 0.5 * h >= 0.5 * PI:
        raise ValueError("step too coarse for this lam")
    k = int(math.floor(theta0 / PI))
    sg = 1.0 if k % 2 == 0 else -1.0
    y = math.sin(theta0)
    yp = math.cos(theta0)
    logn = rho0
    th[0] = theta0
    rh[0] = rho0
    for i in range(n):
        y1 = C * y + S * yp
        yp1 = zS * y + C * yp
        if sg * y1 < 0.0:
            k += 1
            sg = -sg
        yp1 += dB[i] * y1
        y = C * y1 + S * yp1
        yp = zS * y1 + C * yp1
        if sg * y < 0.0:
            k += 1
            sg = -sg
        if store:
            r2 = y * y + yp * yp
            logn += math.log(r2)
            r = math.sqrt(r2)
            y /= r
            yp /= r
            th[i + 1] = k * PI + _frac(y, yp, k)
            rh[i + 1] = logn
        else:
            a = abs(y) + abs(yp)
            if a > 1e150 or a < 1e-150:
                r2 = y * y + yp * yp
                logn += math.log(r2)
                r = math.sqrt(r2)
                y /= r
                yp /= r
    if not store:
        th[0] = k * PI + _frac(y, yp, k)
        rh[0] = logn + math.log(y * y + yp * yp)
    return th, rh


@njit(cache=True)
def split_phase_hist(dB, h, lam, state, skip, counts):
    """Advance the splitting scheme over a chunk and bin ``theta mod pi``.

    ``state = [y, y', rho, steps_done]`` is updated in place; ``rho`` is
    the log-norm already factored out of ``(y, y')``. Nodes with index
    ``<= skip`` (counted from the very first chunk) are not binned.
    """
    nb = counts.shape[0]
    C, S, zS = _half_drift_real(lam, 0.5 * h)
    y = state[0]
    yp = state[1]
    rho = state[2]
    step = int(state[3])
    scale = nb / PI
    for i in range(dB.shape[0]):
        y1 = C * y + S * yp
        yp1 = zS * y + C * yp
        yp1 += dB[i] * y1
        y = C * y1 + S * yp1
        yp = zS * y1 + C * yp1
        a = abs(y) + abs(yp)
        if a > 1e150 or a < 1e-150:
            r2 = y * y + yp * yp
            rho += math.log(r2)
            r = math.sqrt(r2)
            y /= r
            yp /= r
        step += 1
        if step > skip:
            b = int(_cell_angle(y, yp) * scale)
            if b >= nb:
                b = nb - 1
            counts[b] += 1
    state[0] = y
    state[1] = yp
    state[2] = rho
    state[3] = step


@njit(cache=True)
def em_prufer(dB, h, lam, theta0, rho0, clamp):
    """Euler-Maruyama on the Ito phase/log-modulus equations.

    With ``clamp`` set, a step that lands below a multiple of pi it started
    above is put back just above that multiple.
    """
    n = dB.shape[0]
    th = np.empty(n + 1)
    rh = np.empty(n + 1)
    th[0] = theta0
    rh[0] = rho0
    a = lam - 1.0
    for i in range(n):
        t = th[i]
        s = math.sin(t)
        c = math.cos(t)
        s2 = s * s
        sin2 = 2.0 * s * c
        tn = t + (1.0 + a * s2 + s2 * s * c) * h - s2 * dB[i]
        rh[i + 1] = rh[i] + (-a * sin2 - 0.5 * sin2 * sin2 + s2) * h + sin2 * dB[i]
        if clamp:
            k = math.floor(t / PI)
            if tn < k * PI:
                tn = k * PI + 1e-12
        th[i + 1] = tn
    return th, rh


@njit(cache=True)
def _complex_drift(z, s):
    q = cmath.sqrt(z)
    x = q * s
    if abs(x) < 1e-4:
        x2 = x * x
        sinc = 1.0 - x2 / 6.0 + x2 * x2 / 120.0
        C = 1.0 - x2 / 2.0 + x2 * x2 / 24.0
    else:
        sinc = cmath.sin(x) / x
        C = cmath.cos(x)
    S = s * sinc
    return C, S, -z * S


@njit(cache=True)
def split_transfer(dB, h, z, y0, yp0, backward):
    """Complex splitting scheme, storing ``(y, y')`` at every node with a base-2 exponent.

    The true state at node ``i`` is ``(y[i], yp[i]) * 2**(500*e[i])``.
    When ``backward`` is set the cells are run from the last to the first and
    node ``n`` carries the initial state.
    """
    n = dB.shape[0]
    ys = np.empty(n + 1, dtype=np.complex128)
    yps = np.empty(n + 1, dtype=np.complex128)
    ex = np.zeros(n + 1, dtype=np.int64)
    sgn = -1.0 if backward else 1.0
    C, S, zS = _complex_drift(z, 0.5 * h * sgn)
    y = complex(y0)
    yp = complex(yp0)
    e = 0
    if backward:
        ys[n] = y
        yps[n] = yp
    else:
        ys[0] = y
        yps[0] = yp
    for j in range(n):
        i = n - 1 - j if backward else j
        y1 = C * y + S * yp
        yp1 = zS * y + C * yp
        yp1 += sgn * dB[i] * y1
        y = C * y1 + S * yp1
        yp = zS * y1 + C * yp1
        mag = max(abs(y.real), abs(y.imag), abs(yp.real), abs(yp.imag))
        if mag > _BIG:
            y *= _SMALL
            yp *= _SMALL
            e += 1
        elif mag < _SMALL and mag > 0.0:
            y *= _BIG
            yp *= _BIG
            e -= 1
        k = i if backward else i + 1
        ys[k] = y
        yps[k] = yp
        ex[k] = e
    return ys, yps, ex


@njit(cache=True)
def midpoint_transfer(dB, h, z, y0, yp0, backward, cap):
    """Explicit midpoint on the ``(y, p)`` system with piecewise-linear ``B``.

    Each step is taken in the gauge where ``B`` vanishes at the step's
    starting node, so only the increment enters. Returns ``(y, y')`` at the
    nodes and the index of the first node whose magnitude exceeds ``cap``
    (``-1`` when none does).
    """
    n = dB.shape[0]
    ys = np.empty(n + 1, dtype=np.complex128)
    yps = np.empty(n + 1, dtype=np.complex128)
    sg = -1.0 if backward else 1.0
    hs = sg * h
    y = complex(y0)
    yp = complex(yp0)
    first = n if backward else 0
    ys[first] = y
    yps[first] = yp
    bad = -1
    for j in range(n):
        i = n - 1 - j if backward else j
        b = sg * dB[i]
        # local gauge: p = y' at the start node, B(mid) = b/2, B(end) = b
        p = yp
        ky = p
        kp = -z * y
        ym = y + 0.5 * hs * ky
        pm = p + 0.5 * hs * kp
        bm = 0.5 * b
        ky2 = bm * ym + pm
        kp2 = (-bm * bm - z) * ym - bm * pm
        y = y + hs * ky2
        p = p + hs * kp2
        yp = p + b * y
        k = i if backward else i + 1
        ys[k] = y
        yps[k] = yp
        if bad < 0 and (abs(y) > cap or abs(yp) > cap):
            bad = k
            break
    return ys, yps, bad


@njit(cache=True)
def tridiag_factor(a, b, c):
    """LU factors of the tridiagonal matrix with sub/main/super diagonals ``a, b, c``."""
    n = b.shape[0]
    cp = np.empty(n)
    den = np.empty(n)
    den[0] = b[0]
    cp[0] = c[0] / den[0]
    for i in range(1, n):
        den[i] = b[i] - a[i] * cp[i - 1]
        cp[i] = c[i] / den[i] if i < n - 1 else 0.0
    return cp, den


@njit(cache=True)
def tridiag_solve(a, cp, den, d, out):
    n = d.shape[0]
    out[0] = d[0] / den[0]
    for i in range(1, n):
        out[i] = (d[i] - a[i] * out[i - 1]) / den[i]
    for i in range(n - 2, -1, -1):
        out[i] -= cp[i] * out[i + 1]


@njit(cache=True)
def pam_steps(u, half_factor, r, theta, a, cp, den, nsteps, tmp):
    """``nsteps`` of potential half step, theta-scheme Laplacian step, potential half step.

    ``r = dt/dx^2``; ``theta = 1/2`` is Crank-Nicolson and ``theta = 1``
    implicit Euler; ``a, cp, den`` factor ``I - theta r D2``. Dirichlet
    walls sit half a cell outside the end nodes (antisymmetric ghosts).
    """
    n = u.shape[0]
    w = (1.0 - theta) * r
    for _ in range(nsteps):
        for i in range(n):
            u[i] *= half_factor[i]
        if w != 0.0:
            for i in range(n):
                left = u[i - 1] if i > 0 else -u[0]
                right = u[i + 1] if i < n - 1 else -u[n - 1]
                tmp[i] = u[i] + w * (left - 2.0 * u[i] + right)
        else:
            for i in range(n):
                tmp[i] = u[i]
        tridiag_solve(a, cp, den, tmp, u)
        for i in range(n):
            u[i] *= half_factor[i]


@njit(cache=True)
def pam_explicit(u, xi, r, dt, nsteps, tmp):
    """Forward Euler in time, for cross-checks only (needs ``r <= 1/2``)."""
    n = u.shape[0]
    for _ in range(nsteps):
        for i in range(n):
            left = u[i - 1] if i > 0 else -u[0]
            right = u[i + 1] if i < n - 1 else -u[n - 1]
            tmp[i] = u[i] + r * (left - 2.0 * u[i] + right) - dt * xi[i] * u[i]
        for i in range(n):
            u[i] = tmp[i]

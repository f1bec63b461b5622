"""Hot numerical kernels.

Every function here is written so that the same source runs under
``numba.njit`` (scalar arguments) and as plain NumPy (scalar or array
arguments, via :func:`fermicav._accel.python_impl`).  Branches on array
values are avoided for that reason; out-of-domain inputs propagate as NaN.
"""
import numpy as np

from ._accel import jit

PI = np.pi
PI2_4 = PI * PI / 4.0

# integration status codes shared with fermicav.dynamics
RUNNING = 0
CONVERGED = 1
LEFT_DOMAIN = 2
NONFINITE = 3


@jit
def width_from_photons(n, abs_u0):
    return 1.0 / np.sqrt(abs_u0 * n)


@jit
def coefficients_y(y, s):
    """On-site and nearest-neighbour couplings (E, J, E1, J1) at squared width y."""
    g = np.exp(-PI2_4 / y)
    ey = np.exp(-y)
    e = 1.0 / y
    # 1 - s e^-y written through expm1 to keep small-y accuracy for s = +1
    j = 0.5 * ((1.0 - s) - s * np.expm1(-y))
    e1 = -g * (2.0 * y + PI * PI) / (2.0 * y * y)
    j1 = 0.5 * s * g * ey
    return e, j, e1, j1


@jit
def coefficient_slopes_y(y, s):
    """d/dy of (E, J, E1, J1)."""
    g = np.exp(-PI2_4 / y)
    ey = np.exp(-y)
    y2 = y * y
    de = -1.0 / y2
    dj = 0.5 * s * ey
    de1 = -0.5 * g * (PI**4 / (4.0 * y2 * y2) - 1.5 * PI * PI / (y2 * y) - 2.0 / y2)
    dj1 = 0.5 * s * g * ey * (PI2_4 / y2 - 1.0)
    return de, dj, de1, dj1


@jit
def h1_at(n, abs_u0, s, n_atoms, b_tilde):
    y = width_from_photons(n, abs_u0)
    e, j, e1, j1 = coefficients_y(y, s)
    return n_atoms * (e + e1 * b_tilde)


@jit
def h2_at(n, u0, s, n_atoms, b_tilde):
    """Cavity-coupled atomic term with coefficients frozen at photon number n."""
    y = width_from_photons(n, abs(u0))
    e, j, e1, j1 = coefficients_y(y, s)
    return u0 * n_atoms * (j + j1 * b_tilde)


@jit
def xi_derivative(n, u0, s, n_atoms, b_tilde):
    """Resonance shift H2 + dH1/dn + n dH2/dn, coefficients at n (derivative route)."""
    if n_atoms == 0:
        return 0.0 * n
    y = width_from_photons(n, abs(u0))
    e, j, e1, j1 = coefficients_y(y, s)
    de, dj, de1, dj1 = coefficient_slopes_y(y, s)
    # n d/dn = -(y/2) d/dy
    h2 = u0 * n_atoms * (j + j1 * b_tilde)
    dh1 = -(y / (2.0 * n)) * n_atoms * (de + de1 * b_tilde)
    n_dh2 = -(y / 2.0) * u0 * n_atoms * (dj + dj1 * b_tilde)
    return h2 + dh1 + n_dh2


@jit
def xi_exact(n, u0, s, n_atoms, b_tilde):
    """Resonance shift with photon-number differences taken exactly.

    Uses H1(n) - H1(n-1), the shifted H2(n) = H2|coeffs(n-1) and its own
    difference, so coefficients are needed at n, n-1 and n-2.  NaN when
    n <= 2.
    """
    if n_atoms == 0:
        return 0.0 * n
    abs_u0 = abs(u0)
    d1 = h1_at(n, abs_u0, s, n_atoms, b_tilde) - h1_at(n - 1.0, abs_u0, s, n_atoms, b_tilde)
    h2_n = h2_at(n - 1.0, u0, s, n_atoms, b_tilde)
    h2_m = h2_at(n - 2.0, u0, s, n_atoms, b_tilde)
    return d1 + (h2_n - h2_m) * n + h2_n


@jit
def drift(a, ac, n, u0, s, delta_c, eta, kappa, n_atoms, b_tilde, exact):
    """Time derivatives of (alpha, alpha_conj, n_bar); last item is a domain flag."""
    if exact:
        w = xi_exact(n, u0, s, n_atoms, b_tilde)
    else:
        w = xi_derivative(n, u0, s, n_atoms, b_tilde)
    ok = np.isfinite(w) and n > 0.0
    da = (-1j * w + 1j * delta_c - kappa) * a + eta
    dac = (1j * w - 1j * delta_c - kappa) * ac + eta
    dn = eta * (a + ac).real - 2.0 * kappa * n
    return da, dac, dn, ok


@jit
def rk4_kernel(a, ac, n, t0, dt, n_steps, stride, u0, s, delta_c, eta, kappa,
               n_atoms, b_tilde, exact, n_floor, window, rtol, detect):
    """Fixed-step classical RK4 with strided sampling and convergence detection.

    Returns sample arrays (t, alpha, alpha_conj, n_bar), the final state,
    the number of steps taken and a status code.
    """
    cap = n_steps // stride + 2
    ts = np.empty(cap)
    aa = np.empty(cap, dtype=np.complex128)
    acs = np.empty(cap, dtype=np.complex128)
    ns = np.empty(cap)
    ts[0] = t0
    aa[0] = a
    acs[0] = ac
    ns[0] = n
    count = 1
    status = RUNNING
    step = 0
    h = 0.5 * dt
    while step < n_steps:
        if n_atoms > 0 and n < n_floor:
            status = LEFT_DOMAIN
            break
        k1a, k1c, k1n, ok1 = drift(a, ac, n, u0, s, delta_c, eta, kappa, n_atoms, b_tilde, exact)
        k2a, k2c, k2n, ok2 = drift(a + h * k1a, ac + h * k1c, n + h * k1n,
                                   u0, s, delta_c, eta, kappa, n_atoms, b_tilde, exact)
        k3a, k3c, k3n, ok3 = drift(a + h * k2a, ac + h * k2c, n + h * k2n,
                                   u0, s, delta_c, eta, kappa, n_atoms, b_tilde, exact)
        k4a, k4c, k4n, ok4 = drift(a + dt * k3a, ac + dt * k3c, n + dt * k3n,
                                   u0, s, delta_c, eta, kappa, n_atoms, b_tilde, exact)
        if n_atoms > 0 and not (ok1 and ok2 and ok3 and ok4):
            status = LEFT_DOMAIN
            break
        a_new = a + (dt / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        ac_new = ac + (dt / 6.0) * (k1c + 2.0 * k2c + 2.0 * k3c + k4c)
        n_new = n + (dt / 6.0) * (k1n + 2.0 * k2n + 2.0 * k3n + k4n)
        if not (np.isfinite(a_new.real) and np.isfinite(a_new.imag)
                and np.isfinite(ac_new.real) and np.isfinite(ac_new.imag)
                and np.isfinite(n_new)):
            status = NONFINITE
            break
        a = a_new
        ac = ac_new
        n = n_new
        step += 1
        if step % stride == 0:
            ts[count] = t0 + step * dt
            aa[count] = a
            acs[count] = ac
            ns[count] = n
            count += 1
            if detect and count >= window:
                lo = ns[count - window]
                hi = lo
                tot = 0.0
                for i in range(count - window, count):
                    v = ns[i]
                    tot += v
                    if v < lo:
                        lo = v
                    if v > hi:
                        hi = v
                if hi - lo <= rtol * abs(tot / window):
                    status = CONVERGED
                    break
    if step % stride != 0:
        ts[count] = t0 + step * dt
        aa[count] = a
        acs[count] = ac
        ns[count] = n
        count += 1
    return ts[:count], aa[:count], acs[:count], ns[:count], a, ac, n, step, status

"""Independent reference values frozen into the test-suite.

Each value is produced by a method that does not share code with the
package (Fourier spectral, Chebyshev collocation, adaptive quadrature on
closed-form modes).  Run this script to regenerate the numbers printed at the
end; the tests pin them with explicit tolerances.
"""
import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import integrate, linalg


def fourier_bound_states(V, L=60.0, N=2048):
    """Eigenvalues of -d^2 + V on a periodic box by a dense Fourier-Galerkin matrix."""
    x = -L + 2 * L * np.arange(N) / N
    k = 2 * np.pi * np.fft.fftfreq(N, d=2 * L / N)
    F = np.fft.fft(np.eye(N), axis=0)
    T = np.real(np.fft.ifft(k[:, None] ** 2 * F, axis=0))
    H = T + np.diag(V(x))
    vals = linalg.eigvalsh(H)
    return vals[vals < 0]


def cheb_fiber(B, p, W=lambda y: 0 * y, a=1.0, N=96):
    """Lowest Dirichlet eigenpair of -d^2 + (By - p)^2 + W on (-a, a) by collocation."""
    n = np.arange(N + 1)
    t = np.cos(np.pi * n / N)
    c = np.hstack([2, np.ones(N - 1), 2]) * (-1) ** n
    X = np.tile(t, (N + 1, 1)).T
    dX = X - X.T
    D = np.outer(c, 1 / c) / (dX + np.eye(N + 1))
    D = D - np.diag(D.sum(axis=1))
    D2 = (D @ D)[1:-1, 1:-1] / a ** 2
    y = a * t[1:-1]
    H = -D2 + np.diag((B * y - p) ** 2 + W(y))
    vals, vecs = linalg.eig(H)
    i = np.argmin(vals.real)
    v = np.zeros(N + 1)
    v[1:-1] = vecs[:, i].real
    coef = C.chebfit(t, v, N)
    norm = integrate.quad(lambda s: C.chebval(s, coef) ** 2 * a, -1, 1, limit=200)[0]
    coef /= np.sqrt(norm)
    return vals[i].real, (lambda yy: C.chebval(np.asarray(yy) / a, coef))


def strip_mode(j, a=1.0):
    return lambda y: np.sin(j * np.pi * (y + a) / (2 * a)) / np.sqrt(a)


def main():
    out = {}
    # Lorentzian-squared well, depth 8
    mu = fourier_bound_states(lambda x: -8 / (1 + x ** 2) ** 2)
    out["mu_depth8"] = mu.tolist()

    # transverse moments on the unit strip
    c1, c2 = strip_mode(1), strip_mode(2)
    out["m1_12"] = integrate.quad(lambda y: y * c1(y) * c2(y), -1, 1, epsabs=1e-14)[0]
    out["m2_11"] = integrate.quad(lambda y: y * y * c1(y) ** 2, -1, 1, epsabs=1e-14)[0]
    out["m2_22"] = integrate.quad(lambda y: y * y * c2(y) ** 2, -1, 1, epsabs=1e-14)[0]

    # default Gaussian dot projections U_jk(x) at x = 0, 1, 2
    gy = lambda y: np.exp(-((y - 0.3) / 0.5) ** 2)
    proj = {}
    for j in (1, 2, 3):
        for k in (1, 2, 3):
            P = integrate.quad(lambda y: gy(y) * strip_mode(j)(y) * strip_mode(k)(y), -1, 1, epsabs=1e-14)[0]
            proj[(j, k)] = [-np.exp(-x * x) * P for x in (0.0, 1.0, 2.0)]
    out["dot_projections"] = proj

    # sign-indefinite merged potential: well_barrier(v=2, b=4) + default Gaussian dot
    def U_tot(x, y):
        s = x * x
        return (-2 + 4 * s) / (1 + s) ** 3 - np.exp(-x * x) * gy(y)

    attract = {}
    for B in (0.5, 2.0):
        band = lambda p: cheb_fiber(B, p)[0]
        ps = np.linspace(-3, 3, 61)
        assert np.argmin([band(p) for p in ps]) == 30  # symmetric strip: the minimum sits at p = 0
        p0 = 0.0
        _, chi = cheb_fiber(B, p0)
        val = integrate.dblquad(lambda y, x: U_tot(x, y) * chi(y) ** 2, -40, 40, -1, 1,
                                epsabs=1e-12, epsrel=1e-11)[0]
        tail = 2 * integrate.quad(lambda x: (-2 + 4 * x * x) / (1 + x * x) ** 3, 40, np.inf)[0]
        attract[B] = (p0, val + tail)
    out["attractivity_sign_indefinite"] = attract

    # symmetric double well W = y^4 - 6 y^2 on the line: refined-sampling minimizers at B = 1
    def dw_band(p, L=6.0, N=4001):
        y = np.linspace(-L, L, N)
        h = y[1] - y[0]
        d = 2 / h ** 2 + (y[1:-1] - p) ** 2 + y[1:-1] ** 4 - 6 * y[1:-1] ** 2
        e = -np.ones(N - 3) / h ** 2
        return linalg.eigh_tridiagonal(d, e, select="i", select_range=(0, 0))[0][0]

    ps = np.linspace(0.5, 3.0, 251)
    vals = np.array([dw_band(p) for p in ps])
    i = int(np.argmin(vals))
    cf = np.polyfit(ps[i - 2:i + 3], vals[i - 2:i + 3], 2)
    out["double_well_p0_B1"] = -cf[1] / (2 * cf[0])

    # double-well thresholds W = y^4 - 6 y^2 by Fourier spectral on a wide periodic box
    out["double_well_nu"] = (fourier_bound_states(lambda y: y ** 4 - 6 * y ** 2 - 200.0, L=8.0, N=512)[:4] + 200.0).tolist()

    for key, val in out.items():
        print(key, "=", val)


if __name__ == "__main__":
    main()

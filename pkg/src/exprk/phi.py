"""Phi functions of exponential integrators.

phi_0(z) = exp(z) and, for j >= 1,

    phi_j(z) = integral_0^1 exp((1-theta) z) theta^(j-1)/(j-1)! dtheta,

equivalently phi_{j+1}(z) = (phi_j(z) - 1/j!)/z with phi_j(0) = 1/j!.
The scheme coefficients are linear combinations of phi_j(c h A), so the
matrix-valued phi_j at a handful of scales c is everything the integrator
needs; build_phi_cache computes them once per (A, h).
"""

from fractions import Fraction
from math import factorial
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .operators import (DenseOperator, DiagonalOperator, LinearOperator,
                        SymTridiagonalOperator, ZeroOperator)

# Below this modulus the downward recurrence from exp(z) loses digits to
# cancellation, so a truncated Taylor series is used instead.
PHI_TAYLOR_RADIUS = 1.0
PHI_TAYLOR_TERMS = 25


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class CacheMissError(KeyError):
    """A phi matrix was requested that the cache was not built for."""


def phi_scalar(j, z):
    """Evaluate phi_j at a scalar argument (real or complex).

    Uses the truncated Taylor series sum_m z^m / (m+j)! for |z| < 1 and the
    recurrence from exp(z) otherwise; accurate to machine precision in both
    regimes.
    """
    if j < 0:
        raise ValueError("phi index must be >= 0")
    want_complex = isinstance(z, complex) or np.iscomplexobj(z)
    zc = complex(z)
    if j == 0:
        val = np.exp(zc)
    elif abs(zc) < PHI_TAYLOR_RADIUS:
        term = 1.0 / factorial(j)
        val = term
        for m in range(1, PHI_TAYLOR_TERMS):
            term *= zc / (m + j)
            val += term
    else:
        val = np.exp(zc)
        for k in range(j):
            val = (val - 1.0 / factorial(k)) / zc
    val = complex(val)
    return val if want_complex else val.real


def phi_quadrature_oracle(j, z, tol=1e-12):
    """Evaluate phi_j(z) straight from its defining integral.

    Independent of the series/recurrence route; intended as a test oracle.
    Raises QuadratureError when the quadrature error estimate exceeds the
    absolute tolerance tol.
    """
    if j < 1:
        raise ValueError("the integral representation needs j >= 1")
    z = float(z)
    fac = factorial(j - 1)

    def integrand(theta):
        return np.exp((1.0 - theta) * z) * theta ** (j - 1) / fac

    from scipy.integrate import quad

    val, err = quad(integrand, 0.0, 1.0, epsabs=tol * 0.5, epsrel=1e-13, limit=200)
    if err > tol:
        raise QuadratureError(f"phi_{j}({z}): estimated error {err:.2e} > tol {tol:.2e}")
    return val


def matrix_exp(m):
    """Matrix exponential (Pade approximation with scaling and squaring)."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return scipy.linalg.expm(m)


def phi_matrix(j, m):
    """Matrix phi_j(M) via one exponential of an augmented block matrix.

    Embed M in the n(j+1)-dimensional block matrix W with W[0,0] = M and
    identity blocks on the block superdiagonal; then exp(W) carries
    [exp(M), phi_1(M), ..., phi_j(M)] in its top block row, and phi_j(M) is
    the top-right block.  One exponential per (j, M), no recurrence, so no
    cancellation for ill-conditioned M.
    """
    if j < 1:
        raise ValueError("phi index must be >= 1 (use matrix_exp for j = 0)")
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    n = m.shape[0]
    w = np.zeros((n * (j + 1), n * (j + 1)))
    w[:n, :n] = m
    for k in range(j):
        rows = slice(k * n, (k + 1) * n)
        cols = slice((k + 1) * n, (k + 2) * n)
        w[rows, cols] = np.eye(n)
    return scipy.linalg.expm(w)[:n, j * n:(j + 1) * n]


def phi_symmetric(j, m):
    """Spectral evaluation of phi_j(M) for symmetric M (test oracle)."""
    m = np.asarray(m, dtype=float)
    if not np.allclose(m, m.T, atol=1e-12 * (1 + np.abs(m).max())):
        raise ValueError("spectral route needs a symmetric matrix")
    w, v = np.linalg.eigh(m)
    return (v * _phi_values(j, w)) @ v.T


def _phi_values(j, zs):
    """phi_j over a 1-d array of real arguments."""
    return np.array([phi_scalar(j, z) for z in np.asarray(zs, dtype=float)])


class PhiRequest(NamedTuple):
    """One phi matrix the cache must hold: phi_j(scale * h * A)."""

    j: int
    scale: Fraction


def phi_request(j, scale):
    """Normalize (j, scale) to a PhiRequest with an exact rational scale."""
    j = int(j)
    if j < 0:
        raise ValueError("phi index must be >= 0")
    scale = Fraction(scale)
    if not 0 < scale <= 1:
        raise ValueError("scale must lie in (0, 1]")
    return PhiRequest(j, scale)


class PhiCache:
    """Read-only table of phi_j(scale * h * A) matrices.

    Keyed by exact rational (j, scale) pairs so lookups never suffer float
    drift; carries the operator fingerprint and the step size it was built
    for, which the stepper validates before use.
    """

    def __init__(self, fingerprint, h, n, table):
        self.fingerprint = fingerprint
        self.h = float(h)
        self.n = int(n)
        self._table = {}
        for key, mat in table.items():
            mat = np.asarray(mat, dtype=float)
            mat.flags.writeable = False
            self._table[phi_request(*key)] = mat

    def get(self, j, scale):
        """Return the cached phi_j(scale * h * A); KeyError on a miss."""
        key = phi_request(j, scale)
        try:
            return self._table[key]
        except KeyError:
            raise CacheMissError(
                f"phi_{key.j} at scale {key.scale} not in cache "
                f"(built with {len(self._table)} entries)") from None

    def __contains__(self, key):
        return phi_request(*key) in self._table

    def __len__(self):
        return len(self._table)

    def keys(self):
        return set(self._table)


def build_phi_cache(a, h, requests):
    """Build the phi matrices phi_j(scale * h * A) for each request.

    Structured operators get spectral evaluation: diagonal and symmetric
    tridiagonal A cost one eigendecomposition total, after which each entry is
    a scaled outer product.  Dense A pays one augmented exponential per
    request.  Duplicate requests collapse; each matrix is computed once.
    """
    if not isinstance(a, LinearOperator):
        raise TypeError("a must be a LinearOperator")
    h = float(h)
    if not (np.isfinite(h) and h > 0):
        raise ValueError("step size must be positive and finite")
    keys = sorted({phi_request(*r) for r in requests})
    table = {}
    if isinstance(a, ZeroOperator):
        eye = np.eye(a.n)
        for j, scale in keys:
            table[(j, scale)] = eye / factorial(j)
    elif isinstance(a, DiagonalOperator):
        for j, scale in keys:
            table[(j, scale)] = np.diag(_phi_values(j, float(scale) * h * a.diag))
    elif isinstance(a, SymTridiagonalOperator):
        w, v = a.eigendecomposition()
        for j, scale in keys:
            table[(j, scale)] = (v * _phi_values(j, float(scale) * h * w)) @ v.T
    else:
        m = a.dense()
        for j, scale in keys:
            scaled = float(scale) * h * m
            table[(j, scale)] = matrix_exp(scaled) if j == 0 else phi_matrix(j, scaled)
    return PhiCache(a.fingerprint, h, a.n, table)

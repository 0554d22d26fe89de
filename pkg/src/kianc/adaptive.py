"""NLMS adaptive control algorithms and their quadratic costs.

Three feedforward controllers share one structure: a control filter matrix W
maps the reference signal x to driving signals y = W x, and each iteration
takes a normalized gradient step on a quadratic residual cost.

* multipoint control minimizes the microphone residual power |e|^2,
* total interpolation minimizes e^H A e, the kernel-interpolated residual
  energy over the region with a single kernel,
* individual interpolation splits the residual into primary and secondary
  components and minimizes the region energy of their separately
  interpolated sum.

The step normalizers (spectral norms of the iteration-independent Hessian
factors) are computed once at construction, not per iteration.
"""

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class SpectralNormResult(NamedTuple):
    value: float
    converged: bool
    iterations: int


def spectral_norm(mat, tol=1e-8, max_iter=10_000):
    """Largest singular value via power iteration on M^H M.

    Deterministic start vector: all-ones tilted by an index ramp. A plain
    all-ones start is exactly orthogonal to every antisymmetric eigenvector,
    and mirror-symmetric array geometries do put the dominant eigenvector in
    that class, silently converging inside the symmetric subspace; the ramp
    breaks the degeneracy while staying reproducible. Stops once the
    relative change of the estimate stays below `tol` twice in a row.
    Non-convergence is reported through the `converged` flag (and a warning)
    with the best estimate so far.
    """
    mat = np.asarray(mat)
    if mat.size == 0:
        return SpectralNormResult(0.0, True, 0)
    gram = mat.conj().T @ mat
    n = gram.shape[0]
    v = 1.0 + np.arange(1, n + 1) / n + 0j
    v /= np.linalg.norm(v)
    estimate = 0.0
    settled = 0
    for it in range(1, max_iter + 1):
        u = gram @ v
        norm_u = np.linalg.norm(u)
        if norm_u == 0.0:
            return SpectralNormResult(0.0, True, it)
        new_estimate = float(np.real(np.vdot(v, u)))
        v = u / norm_u
        settled = settled + 1 if abs(new_estimate - estimate) <= tol * abs(new_estimate) else 0
        if settled >= 2:
            return SpectralNormResult(float(np.sqrt(max(new_estimate, 0.0))), True, it)
        estimate = new_estimate
    warnings.warn(f"spectral norm power iteration did not converge in {max_iter} iterations")
    return SpectralNormResult(float(np.sqrt(max(estimate, 0.0))), False, max_iter)


@dataclass(frozen=True)
class NlmsParams:
    """Normalized step size mu0 in (0, 2) and zero-division guard epsilon."""

    mu0: float = 0.5
    epsilon: float = 1e-3

    def __post_init__(self):
        if not 0.0 < self.mu0 < 2.0:
            raise ValueError(f"mu0 must lie in (0, 2), got {self.mu0}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


def drive(w, x):
    """Driving signals y = W x."""
    return np.asarray(w) @ np.asarray(x)


def decompose_error(e, g_hat, y):
    """Split microphone signals into primary estimate and secondary part.

    s = G_hat y is the modeled secondary contribution and d_hat = e - s the
    primary-noise estimate; the parts add back to e exactly.
    """
    s = np.asarray(g_hat) @ np.asarray(y)
    return np.asarray(e) - s, s


def cost_total(e, a):
    """Interpolated region residual energy Re(e^H A e) of the total method."""
    e = np.asarray(e)
    return float(np.real(np.vdot(e, np.asarray(a) @ e)))


def cost_individual(d_hat, y, a_dd, a_yd, a_yy):
    """Region residual energy of the individually interpolated field.

    J = d^H A_dd d + y^H A_yd d + d^H A_yd^H y + y^H A_yy y with d = d_hat;
    the Hermitian form is real up to rounding and the real part is returned.
    """
    d_hat = np.asarray(d_hat)
    y = np.asarray(y)
    value = (
        np.vdot(d_hat, np.asarray(a_dd) @ d_hat)
        + 2.0 * np.real(np.vdot(y, np.asarray(a_yd) @ d_hat))
        + np.vdot(y, np.asarray(a_yy) @ y)
    )
    return float(np.real(value))


class TotalKiNlms:
    """NLMS minimizing the single-kernel interpolated region energy e^H A e.

    The combined factor G_hat^H A and the normalizer |G_hat^H A G_hat|_2 are
    iteration-independent and computed once here.
    """

    label = "TotalKI"

    def __init__(self, g_hat, a, params=NlmsParams()):
        self.g_hat = np.asarray(g_hat)
        self.a = np.asarray(a)
        self.params = params
        self._gha = self.g_hat.conj().T @ self.a
        self.normalizer = spectral_norm(self._gha @ self.g_hat).value

    def update(self, w, x, e):
        """One NLMS step; returns the new control filter."""
        x = np.asarray(x)
        step = self.params.mu0 / (self.normalizer * np.real(np.vdot(x, x)) + self.params.epsilon)
        return w - step * np.outer(self._gha @ e, x.conj())


class MpcNlms(TotalKiNlms):
    """Multipoint pressure control: the region matrix replaced by identity.

    The same substitution applies inside the step normalizer, which becomes
    the spectral norm of G_hat^H G_hat.
    """

    label = "MPC"

    def __init__(self, g_hat, params=NlmsParams()):
        g_hat = np.asarray(g_hat)
        super().__init__(g_hat, np.eye(g_hat.shape[0]), params)


class IndividualKiNlms:
    """NLMS on the individually interpolated primary/secondary region energy.

    The gradient factor A_yd e + (A_yy - A_yd G_hat) W x reuses the measured
    residual e; the parenthesized matrix is iteration-independent and cached,
    as is the normalizer |A_yy|_2. With equal kernels everywhere this update
    reduces to the total-interpolation rule.
    """

    label = "IndividualKI"

    def __init__(self, g_hat, a_yd, a_yy, params=NlmsParams()):
        self.g_hat = np.asarray(g_hat)
        self.a_yd = np.asarray(a_yd)
        self.a_yy = np.asarray(a_yy)
        self.params = params
        self._residual_mat = self.a_yy - self.a_yd @ self.g_hat
        self.normalizer = spectral_norm(self.a_yy).value

    def update(self, w, x, e):
        """One NLMS step; returns the new control filter."""
        x = np.asarray(x)
        step = self.params.mu0 / (self.normalizer * np.real(np.vdot(x, x)) + self.params.epsilon)
        factor = self.a_yd @ e + self._residual_mat @ (w @ x)
        return w - step * np.outer(factor, x.conj())


def update_total_ki(w, x, e, g_hat, a, params=NlmsParams()):
    """Single total-interpolation step without a prebuilt controller.

    Recomputes the normalizer each call; loops should construct TotalKiNlms
    (or MpcNlms for A = I) once instead.
    """
    return TotalKiNlms(g_hat, a, params).update(w, x, e)


def update_individual_ki(w, x, e, g_hat, a_yd, a_yy, params=NlmsParams()):
    """Single individual-interpolation step without a prebuilt controller."""
    return IndividualKiNlms(g_hat, a_yd, a_yy, params).update(w, x, e)

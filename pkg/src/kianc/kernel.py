"""Directional sound-field kernels, interpolation filters and region integrals.

The kernel is a weighted superposition of plane waves over the unit sphere
with a von Mises-Fisher directional weight exp(beta * xi.eta). It evaluates
in closed form through the order-zero spherical Bessel function at a complex
argument, and every field it interpolates satisfies the Helmholtz equation.
The prior direction eta of a source is the unit vector from the target-region
center toward that source; sharpness beta = 0 recovers the uniform
(direction-agnostic) kernel j0(k * distance).

Region integrals of interpolation-filter outer products reduce to Hermitian
positive-semidefinite matrices assembled by Monte Carlo quadrature; these are
computed once per frequency, offline, before adaptation starts.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .geometry import SampleSet

# below this magnitude sin(z)/z switches to its Taylor series in w = z^2
_J0_SERIES_CUTOFF = 1e-4


def _j0_complex(z):
    """Order-zero spherical Bessel function sin(z)/z for complex argument.

    Even in z, so the branch of any square root feeding it is irrelevant.
    Near zero the series 1 - w/6 + w^2/120 (w = z^2) avoids 0/0.
    """
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < _J0_SERIES_CUTOFF
    if np.any(small):
        w = z[small] ** 2
        out[small] = 1.0 - w / 6.0 + w * w / 120.0
    rest = ~small
    if np.any(rest):
        out[rest] = np.sin(z[rest]) / z[rest]
    return out


@dataclass(frozen=True)
class KernelParams:
    """Directional weight parameters plus interpolation regularization.

    Attributes
    ----------
    beta : float
        sharpness of the directional weight, >= 0; 0 means uniform
    eta : (3,) unit array
        prior direction (from the region center toward the source)
    lam : float
        Tikhonov regularization of the Gram solve, > 0
    """

    beta: float
    eta: np.ndarray
    lam: float = 1e-3

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        eta = np.asarray(self.eta, dtype=float).reshape(3)
        norm = np.linalg.norm(eta)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"eta must be a unit vector, |eta| = {norm}")
        eta = eta.copy()
        eta.flags.writeable = False
        object.__setattr__(self, "eta", eta)


def kappa_matrix(pts_a, pts_b, k, beta, eta):
    """Pairwise kernel values kappa(a_i, b_j) as an (N, M) complex matrix.

    With r12 = b_j - a_i the kernel is

        kappa = j0( sqrt( (j beta eta - k r12) . (j beta eta - k r12) ) )

    evaluated through the expanded argument
    w = k^2 |r12|^2 - beta^2 - 2j beta k (r12 . eta), which makes the
    conjugate symmetry kappa(a, b) = conj(kappa(b, a)) exact in floating
    point. beta = 0 reduces to j0(k |r12|).
    """
    pts_a = np.atleast_2d(np.asarray(pts_a, dtype=float))
    pts_b = np.atleast_2d(np.asarray(pts_b, dtype=float))
    r12 = pts_b[None, :, :] - pts_a[:, None, :]
    dist_sq = np.einsum("nmi,nmi->nm", r12, r12)
    w = (k.k * k.k * dist_sq - beta * beta).astype(complex)
    if beta != 0.0:
        eta = np.asarray(eta, dtype=float)
        w -= 2j * beta * k.k * (r12 @ eta)
    return _j0_complex(np.sqrt(w))


def kappa(r1, r2, k, beta, eta):
    """Kernel value for a single pair of points; see `kappa_matrix`."""
    return complex(kappa_matrix(r1, r2, k, beta, eta)[0, 0])


def kappa_sphere_oracle(r1, r2, k, beta, eta, n_samples, seed, chunk=200_000):
    """Monte Carlo sphere integral the closed-form kernel must reproduce.

    Averages exp(beta * xi.eta) * exp(j k xi.(r2 - r1)) over uniformly random
    unit vectors xi, which equals (1 / 4 pi) times the integral over the unit
    sphere. Test oracle only; the main pipeline always uses `kappa`.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    diff = np.asarray(r2, dtype=float) - np.asarray(r1, dtype=float)
    eta = np.asarray(eta, dtype=float)
    total = 0.0 + 0.0j
    remaining = int(n_samples)
    while remaining > 0:
        m = min(chunk, remaining)
        xi = rng.standard_normal((m, 3))
        xi /= np.linalg.norm(xi, axis=1, keepdims=True)
        vals = np.exp(beta * (xi @ eta) + 1j * k.k * (xi @ diff))
        total += vals.sum()
        remaining -= m
    return total / n_samples


@dataclass
class GramMatrix:
    """Kernel Gram matrix of the microphone array with a cached solver.

    The regularized system (K + lambda I) is factorized once (Cholesky; the
    Gram matrix is Hermitian PSD) and reused for every interpolation filter
    and region-integral assembly built from it.
    """

    entries: np.ndarray
    params: KernelParams
    mics: np.ndarray
    k: object
    _cho: tuple = field(default=None, repr=False)

    def _factor(self):
        if self._cho is None:
            m = self.entries.shape[0]
            regularized = self.entries + self.params.lam * np.eye(m)
            self._cho = scipy.linalg.cho_factor(regularized, lower=True)
        return self._cho

    def solve(self, rhs):
        """(K + lambda I)^{-1} rhs for vector or matrix right-hand sides."""
        return scipy.linalg.cho_solve(self._factor(), np.asarray(rhs, dtype=complex))


def gram(mics, k, params):
    """Gram matrix K[m, m'] = kappa(r_m, r_m') of the microphone positions."""
    mics = np.atleast_2d(np.asarray(mics, dtype=float))
    entries = kappa_matrix(mics, mics, k, params.beta, params.eta)
    return GramMatrix(entries=entries, params=params, mics=mics, k=k)


def interp_filter(r, gram_matrix):
    """Interpolation filter z(r) = ((K + lambda I)^{-1})^T kappa(r).

    The estimate of the field at r from microphone samples e is z(r)^T e.
    """
    return interp_filter_matrix(np.atleast_2d(np.asarray(r, dtype=float)), gram_matrix)[0]


def interp_filter_matrix(points, gram_matrix):
    """Rows z(r_i)^T of the interpolation filter for many points at once.

    Row i applied to the microphone vector e estimates the field at point i.
    """
    pts = points.points if isinstance(points, SampleSet) else points
    params = gram_matrix.params
    kmat = kappa_matrix(pts, gram_matrix.mics, gram_matrix.k, params.beta, params.eta)
    # rows kappa(r)^T (K + lam I)^{-1}, computed through the Hermitian factor
    return gram_matrix.solve(kmat.conj().T).conj().T


def interp_matrix_total(mics, k, params, samples):
    """Region integral A of z*(r) z(r)^T for the single-kernel cost e^H A e.

    Monte Carlo assembly over the sample set: A = w * Z^H Z with Z the
    filter-matrix rows at the samples, hence Hermitian PSD by construction.
    """
    g = gram(mics, k, params)
    z = interp_filter_matrix(samples, g)
    return samples.weight * (z.conj().T @ z)


@dataclass(frozen=True)
class IndividualFilters:
    """Cached per-point filters of the split primary/secondary interpolation.

    Attributes
    ----------
    z_d : (N, M) complex array
        rows estimate the primary field at each point from d-hat
    zeta : (N, L) complex array
        rows estimate the secondary field at each point from the driving
        signals y, with the secondary-path model folded in
    """

    z_d: np.ndarray
    zeta: np.ndarray


def individual_filters(mics, k, primary_params, secondary_dirs, beta_secondary, lam, g_hat, points):
    """Build the split interpolation filters at the given points.

    The primary field is interpolated with the primary-direction kernel. The
    field of secondary source l is interpolated with a kernel oriented along
    that source's own direction eta_l and contracted with the modeled
    transfer column, so zeta[:, l] maps y_l directly to field estimates.

    Parameters
    ----------
    mics : (M, 3) array
    k : Wavenumber
    primary_params : KernelParams
        kernel of the primary-field estimate (its lam is ignored; `lam` rules)
    secondary_dirs : (L, 3) array of unit vectors
        prior direction of each secondary source
    beta_secondary : float
        sharpness shared by all secondary kernels
    lam : float
        regularization shared by all Gram solves
    g_hat : (M, L) complex array
        secondary-path model
    points : SampleSet or (N, 3) array
    """
    mics = np.atleast_2d(np.asarray(mics, dtype=float))
    secondary_dirs = np.atleast_2d(np.asarray(secondary_dirs, dtype=float))
    g_hat = np.asarray(g_hat)
    n_l = secondary_dirs.shape[0]
    if g_hat.shape != (mics.shape[0], n_l):
        raise ValueError(
            f"secondary-path model shape {g_hat.shape} does not match "
            f"{mics.shape[0]} mics x {n_l} sources"
        )
    pts = points.points if isinstance(points, SampleSet) else points

    p_params = KernelParams(beta=primary_params.beta, eta=primary_params.eta, lam=lam)
    z_d = interp_filter_matrix(pts, gram(mics, k, p_params))

    zeta = np.empty((pts.shape[0], n_l), dtype=complex)
    for l in range(n_l):
        params_l = KernelParams(beta=beta_secondary, eta=secondary_dirs[l], lam=lam)
        g_l = gram(mics, k, params_l)
        # zeta[:, l] = kappa_l(r)^T (K_l + lam I)^{-1} g_hat_l
        zeta[:, l] = kappa_matrix(pts, mics, k, beta_secondary, secondary_dirs[l]) @ g_l.solve(g_hat[:, l])
    return IndividualFilters(z_d=z_d, zeta=zeta)


@dataclass(frozen=True)
class InterpMatrices:
    """Precomputed region-integral matrices with their sampling provenance.

    `a` is the single-kernel matrix of the total interpolation; `a_dd`,
    `a_yd`, `a_yy` belong to the split interpolation. Builders fill the
    fields they own and leave the others None.
    """

    a: np.ndarray = None
    a_dd: np.ndarray = None
    a_yd: np.ndarray = None
    a_yy: np.ndarray = None
    n_samples: int = 0
    seed: int = None


def interp_matrices_individual(mics, k, primary_params, secondary_dirs, beta_secondary, lam, g_hat, samples, seed=None):
    """Region integrals of the split interpolation over one sample set.

    A_dd = w sum z_d* z_d^T, A_yd = w sum zeta* z_d^T, A_yy = w sum zeta* zeta^T,
    all accumulated over the same Monte Carlo samples so that choosing equal
    kernels for the primary and every secondary source collapses them to
    A_yd = G_hat^H A and A_yy = G_hat^H A G_hat exactly.
    """
    filters = individual_filters(
        mics, k, primary_params, secondary_dirs, beta_secondary, lam, g_hat, samples
    )
    w = samples.weight
    return InterpMatrices(
        a_dd=w * (filters.z_d.conj().T @ filters.z_d),
        a_yd=w * (filters.zeta.conj().T @ filters.z_d),
        a_yy=w * (filters.zeta.conj().T @ filters.zeta),
        n_samples=len(samples),
        seed=seed,
    )


def estimate_fields(d_hat, y, filters):
    """Field estimates (u_p_hat, u_s_hat, u_e_hat) at the filters' points.

    u_p_hat = z_d d_hat estimates the primary field, u_s_hat = zeta y the
    secondary field, and their sum estimates the residual field.
    """
    u_p_hat = filters.z_d @ np.asarray(d_hat)
    u_s_hat = filters.zeta @ np.asarray(y)
    return u_p_hat, u_s_hat, u_p_hat + u_s_hat


def save_matrices(path, mats):
    """Persist precomputed region matrices to an npz sidecar file."""
    payload = {"n_samples": mats.n_samples, "seed": -1 if mats.seed is None else mats.seed}
    for name in ("a", "a_dd", "a_yd", "a_yy"):
        value = getattr(mats, name)
        if value is not None:
            payload[name] = value
    np.savez(path, **payload)


def load_matrices(path):
    """Load region matrices saved by `save_matrices`."""
    with np.load(path) as data:
        seed = int(data["seed"])
        return InterpMatrices(
            a=data["a"] if "a" in data else None,
            a_dd=data["a_dd"] if "a_dd" in data else None,
            a_yd=data["a_yd"] if "a_yd" in data else None,
            a_yy=data["a_yy"] if "a_yy" in data else None,
            n_samples=int(data["n_samples"]),
            seed=None if seed < 0 else seed,
        )

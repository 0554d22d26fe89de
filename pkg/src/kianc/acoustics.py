"""Free-field acoustic forward model.

Monochromatic point sources with the exp(-j omega t) time convention, so the
outgoing free-field transfer function is exp(+j k d) / (4 pi d) and plane
waves read exp(+j k xi.r). All field synthesis here is the physics ground
truth; the kernel module provides the estimates.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import SampleSet


@dataclass(frozen=True)
class Wavenumber:
    """Wavenumber k = omega / c bundled with its angular frequency and speed."""

    k: float
    omega: float
    c: float

    def __post_init__(self):
        if not (self.c > 0 and self.omega > 0):
            raise ValueError("omega and c must be positive")
        if not np.isclose(self.k, self.omega / self.c, rtol=1e-12, atol=0.0):
            raise ValueError(f"inconsistent wavenumber: k={self.k}, omega/c={self.omega / self.c}")

    @classmethod
    def from_frequency(cls, frequency_hz, c):
        omega = 2.0 * np.pi * float(frequency_hz)
        return cls(k=omega / float(c), omega=omega, c=float(c))


def _points_of(points):
    return points.points if isinstance(points, SampleSet) else np.atleast_2d(np.asarray(points, dtype=float))


def green(src, rcv, k):
    """Free-field point-source transfer function exp(j k d) / (4 pi d).

    Parameters
    ----------
    src : (3,) array
    rcv : (3,) array or (N, 3) array
        one receiver gives a complex scalar, several give a complex (N,) array
    k : Wavenumber

    Raises
    ------
    ValueError
        if any receiver coincides with the source (field singularity)
    """
    rcv_arr = np.asarray(rcv, dtype=float)
    scalar = rcv_arr.ndim == 1
    d = np.linalg.norm(np.atleast_2d(rcv_arr) - np.asarray(src, dtype=float), axis=-1)
    if np.any(d < 1e-12):
        raise ValueError(f"receiver coincides with source at {np.asarray(src)}")
    vals = np.exp(1j * k.k * d) / (4.0 * np.pi * d)
    return complex(vals[0]) if scalar else vals


def transfer_matrix(sources, receivers, k):
    """Transfer matrix with entry (m, l) = green(source_l, receiver_m, k).

    Serves both as the true secondary path and as its model; the simulation
    assumes the model was measured exactly in advance.
    """
    src = np.atleast_2d(np.asarray(sources, dtype=float))
    rcv = _points_of(receivers)
    d = np.linalg.norm(rcv[:, None, :] - src[None, :, :], axis=-1)
    bad = np.argwhere(d < 1e-12)
    if bad.size:
        m, l = bad[0]
        raise ValueError(f"receiver {m} coincides with source {l}")
    return np.exp(1j * k.k * d) / (4.0 * np.pi * d)


def primary_field(primary_src, points, k, amplitude=1.0 + 0.0j):
    """Primary noise field amplitude * green(primary_src, r) at every point."""
    return amplitude * green(primary_src, _points_of(points), k)


def total_field(primary_contribution, secondary_sources, y, points, k):
    """Superposition of the primary field and the driven secondary fields.

    Parameters
    ----------
    primary_contribution : (N,) complex array
        primary field sampled at `points`
    secondary_sources : (L, 3) array
    y : (L,) complex array
        secondary source driving signals
    points : SampleSet or (N, 3) array
    k : Wavenumber
    """
    y = np.asarray(y)
    if y.shape[0] != np.atleast_2d(np.asarray(secondary_sources)).shape[0]:
        raise ValueError("driving signal length must match the number of secondary sources")
    g_sec = transfer_matrix(secondary_sources, points, k)
    return np.asarray(primary_contribution) + g_sec @ y

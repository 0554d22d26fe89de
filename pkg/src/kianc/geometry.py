"""Array geometries, target region, evaluation grids and Monte Carlo sampling.

All positions are numpy float arrays in meters: single points have shape (3,),
point lists shape (N, 3). Geometry objects are frozen after construction and
safe to share across concurrent runs.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

# in-plane outward shift applied to every second error microphone, which
# breaks the symmetry that causes the forbidden-frequency problem
MIC_STAGGER_M = 0.03

PAPER_PRIMARY_SOURCE = (-2.8, 0.3, 0.0)
PAPER_SOUND_SPEED = 343.0


def vec3(x, y, z):
    """Validated 3-vector (finite components, float64, read-only)."""
    v = np.array([x, y, z], dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite position components: {v}")
    v.flags.writeable = False
    return v


def as_points(points):
    """Coerce to a read-only (N, 3) float array."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected (N, 3) points, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("non-finite position components")
    pts = pts.copy()
    pts.flags.writeable = False
    return pts


def direction_to(point, origin):
    """Unit vector from `origin` toward `point`.

    Used to orient the directional kernels: the prior direction of a source
    is the unit vector from the target-region center toward that source.
    """
    diff = np.asarray(point, dtype=float) - np.asarray(origin, dtype=float)
    norm = np.linalg.norm(diff)
    if norm == 0.0:
        raise ValueError("point coincides with origin; direction undefined")
    return diff / norm


@dataclass(frozen=True)
class Cuboid:
    """Axis-aligned cuboid given by center and strictly positive half extents."""

    center: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", vec3(*np.asarray(self.center, dtype=float)))
        he = np.asarray(self.half_extents, dtype=float)
        if not np.all(he > 0):
            raise ValueError(f"half extents must be strictly positive, got {he}")
        object.__setattr__(self, "half_extents", vec3(*he))

    @property
    def min_corner(self):
        return self.center - self.half_extents

    @property
    def max_corner(self):
        return self.center + self.half_extents

    @property
    def volume(self):
        return float(np.prod(2.0 * self.half_extents))

    def contains(self, points, tol=0.0):
        """Boolean mask: which points lie inside the cuboid (+/- tol per axis)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        offs = np.abs(pts - self.center)
        return np.all(offs <= self.half_extents + tol, axis=1)


def paper_region():
    """The 0.6 m x 0.6 m x 0.1 m target cuboid centered at the origin."""
    return Cuboid(center=(0.0, 0.0, 0.0), half_extents=(0.3, 0.3, 0.05))


@dataclass(frozen=True)
class SampleSet:
    """Points inside the target region with a common quadrature weight.

    For Monte Carlo sets the weight is volume / sample count; regular
    evaluation grids carry weight 1.
    """

    points: np.ndarray
    weight: float

    def __post_init__(self):
        object.__setattr__(self, "points", as_points(self.points))
        if not self.weight > 0:
            raise ValueError(f"weight must be positive, got {self.weight}")

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class Scenario:
    """Full experiment geometry.

    Attributes
    ----------
    secondary_sources : (L, 3) array
        control loudspeaker positions, strictly outside the region
    error_mics : (M, 3) array
        error microphone positions on or near the region boundary
    primary_source : (3,) array
        position of the noise source to be cancelled
    region : Cuboid
        target region over which noise power is minimized
    num_reference : int
        number of reference channels (the studied setup uses 1)
    sound_speed : float
        propagation speed in m/s
    """

    secondary_sources: np.ndarray
    error_mics: np.ndarray
    primary_source: np.ndarray
    region: Cuboid
    num_reference: int = 1
    sound_speed: float = PAPER_SOUND_SPEED

    def __post_init__(self):
        object.__setattr__(self, "secondary_sources", as_points(self.secondary_sources))
        object.__setattr__(self, "error_mics", as_points(self.error_mics))
        object.__setattr__(self, "primary_source", vec3(*np.asarray(self.primary_source, dtype=float)))
        if self.num_secondary < 1 or self.num_mics < 1 or self.num_reference < 1:
            raise ValueError("need at least one source, microphone and reference channel")
        if not self.sound_speed > 0:
            raise ValueError(f"sound speed must be positive, got {self.sound_speed}")
        if np.any(self.region.contains(self.secondary_sources)):
            raise ValueError("secondary sources must lie strictly outside the target region")
        if not np.all(self.region.contains(self.error_mics, tol=MIC_STAGGER_M + 1e-12)):
            raise ValueError("error microphones must lie within the staggered region boundary")
        dists = np.linalg.norm(
            self.error_mics[:, None, :] - self.error_mics[None, :, :], axis=-1
        )
        np.fill_diagonal(dists, np.inf)
        if np.min(dists) <= 0:
            raise ValueError("error microphone positions must be pairwise distinct")

    @property
    def num_secondary(self):
        return self.secondary_sources.shape[0]

    @property
    def num_mics(self):
        return self.error_mics.shape[0]

    def with_primary_source(self, position):
        """Copy of the scenario with the primary source moved."""
        return Scenario(
            secondary_sources=self.secondary_sources,
            error_mics=self.error_mics,
            primary_source=position,
            region=self.region,
            num_reference=self.num_reference,
            sound_speed=self.sound_speed,
        )


def scenario_fingerprint(scenario):
    """Stable hex digest of all geometric content, for cache keys and metadata."""
    h = hashlib.sha256()
    for arr in (
        scenario.secondary_sources,
        scenario.error_mics,
        scenario.primary_source,
        scenario.region.center,
        scenario.region.half_extents,
        np.array([float(scenario.num_reference), scenario.sound_speed]),
    ):
        h.update(np.ascontiguousarray(arr, dtype=float).tobytes())
    return h.hexdigest()


def _square_border(n, half_side, z, start=0.0):
    """Points equally spaced by arc length on the border of a square.

    The square is |x|, |y| <= half_side at height z. Placement starts at the
    corner (-half_side, -half_side) and proceeds counterclockwise; `start`
    offsets the first point along the perimeter (in units of edge fractions).

    Returns
    -------
    points : (n, 3) array
    normals : (n, 3) array
        outward in-plane unit normal of the border edge each point sits on
        (corner points take the normal of the edge they begin)
    """
    a = half_side
    s_values = (np.arange(n) + start) * (4.0 / n)
    points = np.empty((n, 3))
    normals = np.zeros((n, 3))
    for i, s in enumerate(s_values):
        edge = int(s) % 4
        t = s - int(s)
        if edge == 0:
            xy, nrm = (-a + 2 * a * t, -a), (0.0, -1.0)
        elif edge == 1:
            xy, nrm = (a, -a + 2 * a * t), (1.0, 0.0)
        elif edge == 2:
            xy, nrm = (a - 2 * a * t, a), (0.0, 1.0)
        else:
            xy, nrm = (-a, a - 2 * a * t), (-1.0, 0.0)
        points[i] = (xy[0], xy[1], z)
        normals[i, :2] = nrm
    return points, normals


def _staggered_mic_face(n, half_side, z, stagger):
    """Border mics of one region face, every second one shifted outward."""
    points, normals = _square_border(n, half_side, z)
    points[1::2] += stagger * normals[1::2]
    return points


def build_paper_scenario():
    """Desk-scale free-field layout of the reproduced experiments.

    16 secondary point sources sit on the borders of two 2.0 m x 2.0 m
    squares at z = +/-0.1 m (8 per square, corner-first equal spacing).
    48 error microphones sit on the borders of the top and bottom faces of
    the 0.6 x 0.6 x 0.1 m target cuboid (24 per face), with every second
    microphone shifted outward in the face plane by 0.03 m. The primary
    noise source is at (-2.8, 0.3, 0.0) m and one reference channel taps it
    directly.
    """
    region = paper_region()
    sources = np.vstack(
        [
            _square_border(8, half_side=1.0, z=-0.1)[0],
            _square_border(8, half_side=1.0, z=+0.1)[0],
        ]
    )
    mics = np.vstack(
        [
            _staggered_mic_face(24, half_side=0.3, z=-0.05, stagger=MIC_STAGGER_M),
            _staggered_mic_face(24, half_side=0.3, z=+0.05, stagger=MIC_STAGGER_M),
        ]
    )
    return Scenario(
        secondary_sources=sources,
        error_mics=mics,
        primary_source=PAPER_PRIMARY_SOURCE,
        region=region,
        num_reference=1,
        sound_speed=PAPER_SOUND_SPEED,
    )


def eval_grid(region, counts=(17, 17, 5)):
    """Regular axis-aligned evaluation grid spanning the cuboid, faces included.

    The default 17 x 17 x 5 factorization yields 1445 points and matches the
    region's 0.6 : 0.6 : 0.1 aspect ratio. An axis count of 1 degenerates to
    the center coordinate. Points are ordered x-major (z fastest).
    """
    axes = []
    for lo, hi, n in zip(region.min_corner, region.max_corner, counts):
        if n < 1:
            raise ValueError(f"grid counts must be >= 1, got {counts}")
        axes.append(np.linspace(lo, hi, n) if n > 1 else np.array([(lo + hi) / 2.0]))
    xx, yy, zz = np.meshgrid(*axes, indexing="ij")
    points = np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])
    return SampleSet(points=points, weight=1.0)


def monte_carlo_samples(region, n, seed):
    """Uniform i.i.d. points inside the cuboid with weight volume / n.

    Parameters
    ----------
    region : Cuboid
    n : int
        sample count, >= 1
    seed : int or numpy.random.Generator
        identical seeds reproduce identical point sets bit for bit
    """
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n}")
    rng = np.random.default_rng(seed)
    points = rng.uniform(region.min_corner, region.max_corner, size=(n, 3))
    return SampleSet(points=points, weight=region.volume / n)


def perturb_primary_source(nominal, radial_std, azimuth_std_deg, zenith_std_deg, seed):
    """Gaussian perturbation of a position in spherical coordinates.

    The nominal position is converted to (radius, azimuth, zenith) about the
    origin; independent zero-mean Gaussian offsets with the given standard
    deviations (radius in meters, angles in degrees) are added in that order;
    the result is converted back to Cartesian coordinates. Zenith is measured
    from +z, azimuth from +x in the xy-plane. All-zero deviations return the
    nominal position unchanged.
    """
    nominal = np.asarray(nominal, dtype=float)
    if radial_std == 0.0 and azimuth_std_deg == 0.0 and zenith_std_deg == 0.0:
        return vec3(*nominal)
    radius = np.linalg.norm(nominal)
    if radius == 0.0:
        raise ValueError("cannot perturb the origin in spherical coordinates")
    rng = np.random.default_rng(seed)
    azimuth = np.arctan2(nominal[1], nominal[0])
    zenith = np.arccos(np.clip(nominal[2] / radius, -1.0, 1.0))
    radius += rng.normal(0.0, radial_std)
    azimuth += rng.normal(0.0, np.deg2rad(azimuth_std_deg))
    zenith += rng.normal(0.0, np.deg2rad(zenith_std_deg))
    return vec3(
        radius * np.sin(zenith) * np.cos(azimuth),
        radius * np.sin(zenith) * np.sin(azimuth),
        radius * np.cos(zenith),
    )

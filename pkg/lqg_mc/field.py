import json
from typing import NamedTuple
import numpy as np
import h5py
from scipy import ndimage, signal
from scipy.integrate import cumulative_trapezoid
from em_util.io import write_h5, mkdir
from .errors import DomainError
from .rng import get_rng

GEOMETRIES = ("cylinder", "strip")
# circle-average sample points
N_CIRCLE = 64
# max interpolation points per block in circle averages
BLOCK_POINTS = 2**21


def theta_period(geometry):
    if geometry == "cylinder":
        return 2.0 * np.pi
    if geometry == "strip":
        return np.pi
    raise DomainError(f"unknown geometry: {geometry}, expected one of {GEOMETRIES}")


def theta_grid(n_theta, geometry="cylinder"):
    # cylinder: periodic nodes; strip: cell centres on [0, pi]
    period = theta_period(geometry)
    if geometry == "cylinder":
        return period * np.arange(n_theta) / n_theta
    return period * (np.arange(n_theta) + 0.5) / n_theta


def default_dx(n_theta, geometry="cylinder"):
    # square cells
    return theta_period(geometry) / n_theta


class CylinderField:
    # Field on a finite window of the cylinder R x [0, 2pi) (or the strip
    # R x [0, pi]): the line-average part h1(x) plus the mean-zero part h2(x, theta).
    def __init__(
        self,
        x=None,
        theta=None,
        h1=None,
        h2_modes=None,
        h2=None,
        geometry="cylinder",
        metadata=None,
        input_file=None,
    ):
        if input_file is not None:
            self.load_h5(input_file)
            return
        self.geometry = geometry
        self.x = np.asarray(x, dtype=float)
        self.theta = np.asarray(theta, dtype=float)
        self.h1 = np.zeros(len(self.x)) if h1 is None else np.asarray(h1, dtype=float)
        # complex (n_x, n_modes): a_n + i b_n (strip: b_n = 0)
        self.h2_modes = h2_modes
        if h2 is None:
            h2 = (
                np.zeros((len(self.x), len(self.theta)))
                if h2_modes is None
                else evaluate_modes(h2_modes, self.theta, geometry)
            )
        self.h2 = np.asarray(h2, dtype=float)
        self.metadata = {} if metadata is None else dict(metadata)

    @property
    def total(self):
        return self.h1[:, None] + self.h2

    @property
    def n_x(self):
        return len(self.x)

    @property
    def n_theta(self):
        return len(self.theta)

    @property
    def dx(self):
        return self.x[1] - self.x[0]

    @property
    def dtheta(self):
        return theta_period(self.geometry) / self.n_theta

    @property
    def cell_area(self):
        return self.dx * self.dtheta

    @property
    def n_modes(self):
        return 0 if self.h2_modes is None else self.h2_modes.shape[1]

    def shifted(self, shift_c):
        # h -> h + C; the constant lives in the line average
        out = CylinderField(
            self.x, self.theta, self.h1 + shift_c, self.h2_modes, self.h2,
            self.geometry, self.metadata,
        )
        out.metadata["shift_c"] = self.metadata.get("shift_c", 0.0) + shift_c
        return out

    def restrict(self, x_lo, x_hi=np.inf):
        keep = (self.x >= x_lo) & (self.x <= x_hi)
        modes = None if self.h2_modes is None else self.h2_modes[keep]
        return CylinderField(
            self.x[keep], self.theta, self.h1[keep], modes, self.h2[keep],
            self.geometry, self.metadata,
        )

    def theta_mean_h2(self):
        return self.h2.mean(axis=1)

    def save_h5(self, output_file):
        mkdir(output_file, "parent")
        arrays = [self.x, self.theta, self.h1, self.h2]
        names = ["x", "theta", "h1", "h2"]
        if self.h2_modes is not None:
            arrays += [self.h2_modes.real.copy(), self.h2_modes.imag.copy()]
            names += ["h2_modes_re", "h2_modes_im"]
        write_h5(output_file, arrays, names)
        meta = dict(self.metadata, geometry=self.geometry)
        with open(metadata_path(output_file), "w") as fid:
            json.dump(meta, fid, indent=2, sort_keys=True, default=float)

    def load_h5(self, input_file):
        with h5py.File(input_file, "r") as fid:
            data = {key: fid[key][()] for key in fid}
        with open(metadata_path(input_file)) as fid:
            self.metadata = json.load(fid)
        self.geometry = self.metadata.pop("geometry")
        self.x, self.theta, self.h1, self.h2 = (
            data["x"], data["theta"], data["h1"], data["h2"],
        )
        self.h2_modes = None
        if "h2_modes_re" in data:
            self.h2_modes = data["h2_modes_re"] + 1j * data["h2_modes_im"]

    def print_info(self):
        print(f"Field geometry: {self.geometry}, grid: {self.n_x} x {self.n_theta}")
        print(f"x window: ({self.x[0]:.3f}, {self.x[-1]:.3f}), dx: {self.dx:.4f}")
        print(f"h1 (min, max): ({self.h1.min():.3f}, {self.h1.max():.3f})")
        print(f"h2 modes: {self.n_modes}")


def metadata_path(h5_file):
    return h5_file[:-3] + ".json" if h5_file.endswith(".h5") else h5_file + ".json"


def evaluate_modes(h2_modes, theta, geometry="cylinder"):
    """
    cylinder: h2 = sqrt(2) sum_n (a_n cos n theta + b_n sin n theta)
    strip:    h2 = 2 sum_n a_n cos n theta
    """
    n = np.arange(1, h2_modes.shape[1] + 1)
    cos = np.cos(np.outer(n, theta))
    if geometry == "cylinder":
        sin = np.sin(np.outer(n, theta))
        return np.sqrt(2.0) * (h2_modes.real @ cos + h2_modes.imag @ sin)
    return 2.0 * (h2_modes.real @ cos)


def _stationary_ar1(noise, rho, sigma):
    # y[0] ~ N(0, sigma^2), y[k] = rho y[k-1] + sigma sqrt(1 - rho^2) e[k]
    y0 = sigma * noise[0]
    if len(noise) == 1:
        return np.array([y0])
    rest = signal.lfilter(
        [sigma * np.sqrt(1.0 - rho**2)], [1.0, -rho], noise[1:], zi=[rho * y0]
    )[0]
    return np.concatenate([[y0], rest])


def sample_h2_modes(x, n_modes, seed=None, geometry="cylinder"):
    """
    Lateral GFF modes on the grid x: each a_n (and b_n on the cylinder) is a
    stationary Gauss-Markov process with covariance (1/(2n)) exp(-n |x - x'|).
    """
    rng = get_rng(seed, "field")
    x = np.asarray(x, dtype=float)
    dx = np.diff(x)
    n_comp = 2 if geometry == "cylinder" else 1
    noise = rng.standard_normal((n_comp, n_modes, len(x)))
    modes = np.zeros((n_comp, n_modes, len(x)))
    uniform = len(dx) == 0 or np.allclose(dx, dx[0])
    for n in range(1, n_modes + 1):
        sigma = np.sqrt(1.0 / (2.0 * n))
        for c in range(n_comp):
            if uniform:
                rho = np.exp(-n * dx[0]) if len(dx) else 0.0
                modes[c, n - 1] = _stationary_ar1(noise[c, n - 1], rho, sigma)
            else:
                y = sigma * noise[c, n - 1, 0]
                modes[c, n - 1, 0] = y
                for k, d in enumerate(dx):
                    rho = np.exp(-n * d)
                    y = rho * y + sigma * np.sqrt(1 - rho**2) * noise[c, n - 1, k + 1]
                    modes[c, n - 1, k + 1] = y
    out = modes[0].T.astype(complex)
    if n_comp == 2:
        out = out + 1j * modes[1].T
    return out


def sample_h2_cylinder(window, n_x, n_theta, n_modes, seed=None, geometry="cylinder"):
    """
    Mean-zero-on-lines part of a GFF on a window of the cylinder (or strip).

    Args:
        window: (x_min, x_max).
        n_x, n_theta: grid size.
        n_modes: number of angular modes, 1 <= n_modes < n_theta / 2.

    Returns:
        CylinderField with h1 = 0.
    """
    x = np.linspace(window[0], window[1], n_x)
    return sample_h2_on_grid(x, n_theta, n_modes, seed, geometry)


def sample_h2_on_grid(x, n_theta, n_modes, seed=None, geometry="cylinder"):
    if n_modes < 1 or 2 * n_modes >= n_theta:
        raise DomainError(f"need 1 <= n_modes < n_theta/2, got {n_modes}, {n_theta}")
    theta = theta_grid(n_theta, geometry)
    modes = sample_h2_modes(x, n_modes, seed, geometry)
    return CylinderField(x, theta, None, modes, None, geometry, {"n_modes": n_modes})


def _bridge_interpolate(u_fine, h_fine, x, qv_rate, rng):
    """
    Values at x of a continuous process known at u_fine, filling each gap with
    an independent Brownian bridge of the given quadratic-variation rate.
    """
    left = np.searchsorted(u_fine, x, side="right") - 1
    left = np.clip(left, 0, len(u_fine) - 2)
    z = rng.standard_normal(len(x))
    out = np.zeros(len(x))
    for j, i in enumerate(left):
        u_right, h_right = u_fine[i + 1], h_fine[i + 1]
        if j > 0 and left[j - 1] == i:
            u_left, h_left = x[j - 1], out[j - 1]
        else:
            u_left, h_left = u_fine[i], h_fine[i]
        span = u_right - u_left
        f = (x[j] - u_left) / span
        var = qv_rate * (x[j] - u_left) * (u_right - x[j]) / span
        out[j] = h_left + f * (h_right - h_left) + np.sqrt(max(var, 0.0)) * z[j]
    return out


def line_average_profile(params, excursion, qv_rate=1.0):
    """
    (2/gamma) log Z of a Bessel excursion, reparameterized to have quadratic
    variation qv_rate du, with u = 0 at the maximum.

    Returns:
        u (increasing), h1 at the interior grid points of the excursion.
    """
    gamma = params.gamma
    times = excursion.path.times[1:-1]
    z = excursion.path.values[1:-1]
    # d<(2/gamma) log Z> = (4/gamma^2) dt / Z^2 = qv_rate du
    u = cumulative_trapezoid((4.0 / gamma**2) / qv_rate / z**2, times, initial=0.0)
    h = (2.0 / gamma) * np.log(z)
    return u - u[np.argmax(h)], h


def _assemble_field(
    params, excursion, h2, seed, n_theta, n_modes, height_floor, geometry, qv_rate
):
    rng = get_rng(seed, "field")
    gamma = params.gamma
    floor = -10.0 / gamma if height_floor is None else height_floor
    u, h = line_average_profile(params, excursion, qv_rate)
    above = np.where(h >= floor)[0]
    if len(above) == 0:
        raise DomainError("excursion never rises above the height floor")
    u_lo, u_hi = u[above[0]], u[above[-1]]
    if isinstance(h2, CylinderField):
        x = h2.x
        if x[0] < u[0] or x[-1] > u[-1] or h2.geometry != geometry:
            raise DomainError("h2 grid does not fit inside the excursion window")
    else:
        dx = default_dx(n_theta, geometry)
        x = dx * np.arange(np.ceil(u_lo / dx), np.floor(u_hi / dx) + 1)
    if len(x) < 2:
        raise DomainError("excursion too short for the requested grid")
    h1 = _bridge_interpolate(u, h, x, qv_rate, rng)
    if isinstance(h2, CylinderField):
        field = CylinderField(x, h2.theta, h1, h2.h2_modes, h2.h2, geometry)
    elif h2 == "zero":
        field = CylinderField(x, theta_grid(n_theta, geometry), h1, None, None, geometry)
    else:
        h2 = sample_h2_on_grid(x, n_theta, n_modes, rng, geometry)
        field = CylinderField(x, h2.theta, h1, h2.h2_modes, h2.h2, geometry)
    field.metadata.update(
        {
            "gamma": gamma,
            "qv_rate": qv_rate,
            "height_floor": floor,
            "excursion_dimension": excursion.dimension,
            "excursion_duration": excursion.duration,
            "shift_c": 0.0,
        }
    )
    return field


def assemble_sphere_field(
    params, excursion, h2=None, seed=None, n_theta=64, n_modes=24, height_floor=None
):
    """
    Sphere field on the cylinder from an excursion of nu_delta with
    delta = 4 - 8/gamma^2: h1 = (2/gamma) log Z with quadratic variation du,
    x = 0 at the maximum, window cut where h1 drops below the height floor
    (default -10/gamma). `h2` is None (sample), "zero", or a CylinderField
    whose grid is used as is.
    """
    expected = 4.0 - 8.0 / params.gamma**2
    if not np.isclose(excursion.dimension, expected):
        raise DomainError(
            f"sphere fields need delta = {expected:.6f}, got {excursion.dimension:.6f}"
        )
    return _assemble_field(
        params, excursion, h2, seed, n_theta, n_modes, height_floor, "cylinder", 1.0
    )


def assemble_disk_field(
    params, excursion, h2=None, seed=None, n_theta=32, n_modes=12, height_floor=None
):
    # strip field: delta = 3 - 4/gamma^2, h1 with quadratic variation 2 du
    expected = 3.0 - 4.0 / params.gamma**2
    if not np.isclose(excursion.dimension, expected):
        raise DomainError(
            f"disk fields need delta = {expected:.6f}, got {excursion.dimension:.6f}"
        )
    return _assemble_field(
        params, excursion, h2, seed, n_theta, n_modes, height_floor, "strip", 2.0
    )


def h1_quadratic_variation(field):
    # quadratic variation of h1 per unit x
    return float(np.sum(np.diff(field.h1) ** 2) / (field.x[-1] - field.x[0]))


def sample_field(field, xs, thetas):
    """
    Bilinear interpolation of field.total at arbitrary points. theta wraps on
    the cylinder and reflects (Neumann) on the strip; x is clamped to the window.
    """
    xs = np.asarray(xs, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    total = field.total
    dth = field.dtheta
    if field.geometry == "cylinder":
        padded = np.concatenate([total, total[:, :1]], axis=1)
        ti = np.mod(thetas, 2.0 * np.pi) / dth
    else:
        t = np.mod(thetas, 2.0 * np.pi)
        t = np.where(t > np.pi, 2.0 * np.pi - t, t)
        padded = np.concatenate([total[:, :1], total, total[:, -1:]], axis=1)
        ti = t / dth - 0.5 + 1.0
    xi = (xs - field.x[0]) / field.dx
    coords = np.stack([xi.ravel(), ti.ravel()])
    vals = ndimage.map_coordinates(padded, coords, order=1, mode="nearest")
    return vals.reshape(xs.shape)


def circle_average(field, xs, thetas, radius, n_circle=N_CIRCLE):
    """
    Average of the field over circles of the given radius (scalar or per centre)
    around (xs, thetas), using n_circle points per circle.
    """
    xs = np.asarray(xs, dtype=float).ravel()
    thetas = np.asarray(thetas, dtype=float).ravel()
    radius = np.broadcast_to(np.asarray(radius, dtype=float), xs.shape)
    phase = np.exp(2j * np.pi * np.arange(n_circle) / n_circle)
    out = np.zeros(len(xs))
    block = max(1, BLOCK_POINTS // n_circle)
    for start in range(0, len(xs), block):
        sl = slice(start, start + block)
        pts = (xs[sl] + 1j * thetas[sl])[:, None] + radius[sl][:, None] * phase[None, :]
        out[sl] = sample_field(field, pts.real, pts.imag).mean(axis=1)
    return out


class QuantumMeasureGrid:
    def __init__(self, cell_mass, epsilon_reg, gamma, x, theta):
        self.cell_mass = cell_mass
        self.epsilon_reg = epsilon_reg
        self.gamma = gamma
        self.x = x
        self.theta = theta

    @property
    def total(self):
        return float(self.cell_mass.sum())

    def marginal_x(self):
        return self.cell_mass.sum(axis=1)

    def mass_right_of(self, x0):
        return float(self.cell_mass[self.x >= x0].sum())

    def area_quantile(self, q):
        # x-position where the cumulative area crosses fraction q
        cum = np.cumsum(self.marginal_x())
        return float(np.interp(q * cum[-1], cum, self.x))

    def check(self):
        assert np.all(self.cell_mass >= 0)
        assert np.isfinite(self.total)
        return self


class BoundaryMeasure:
    def __init__(self, edge_mass, epsilon_reg, gamma, positions):
        self.edge_mass = edge_mass
        self.epsilon_reg = epsilon_reg
        self.gamma = gamma
        # strip: x grid of both edges; cylinder: theta grid of the circle
        self.positions = positions

    @property
    def total(self):
        return float(self.edge_mass.sum())


def _check_regularization(field, epsilon_reg):
    if epsilon_reg < 2.0 * max(field.dx, field.dtheta):
        raise DomainError(
            f"epsilon_reg {epsilon_reg:.4g} is below two grid cells "
            f"({2.0 * max(field.dx, field.dtheta):.4g})"
        )


def compute_area_measure(field, epsilon_reg, params, n_circle=N_CIRCLE):
    """
    Circle-average regularized area measure eps^(gamma^2/2) exp(gamma h_eps) per cell.

    :param field: CylinderField
    :param epsilon_reg: circle radius, at least two grid cells
    :param params: GammaParams
    :return: QuantumMeasureGrid
    """
    _check_regularization(field, epsilon_reg)
    gamma = params.gamma
    xx, tt = np.meshgrid(field.x, field.theta, indexing="ij")
    h_eps = circle_average(field, xx, tt, epsilon_reg, n_circle).reshape(xx.shape)
    mass = epsilon_reg ** (gamma**2 / 2.0) * np.exp(gamma * h_eps) * field.cell_area
    return QuantumMeasureGrid(mass, epsilon_reg, gamma, field.x, field.theta)


def compute_boundary_measure(
    field, epsilon_reg, params, circle_x=None, n_circle=N_CIRCLE
):
    """
    Boundary measure eps^(gamma^2/4) exp((gamma/2) h_eps). On the strip it lives
    on both edges (shape (2, n_x)); on the cylinder on the circle x = circle_x.
    """
    _check_regularization(field, epsilon_reg)
    gamma = params.gamma
    factor = epsilon_reg ** (gamma**2 / 4.0)
    if field.geometry == "strip":
        xs = np.concatenate([field.x, field.x])
        ts = np.concatenate([np.zeros(field.n_x), np.full(field.n_x, np.pi)])
        h_eps = circle_average(field, xs, ts, epsilon_reg, n_circle).reshape(2, -1)
        mass = factor * np.exp(gamma / 2.0 * h_eps) * field.dx
        return BoundaryMeasure(mass, epsilon_reg, gamma, field.x)
    circle_x = field.x[0] if circle_x is None else circle_x
    xs = np.full(field.n_theta, circle_x)
    h_eps = circle_average(field, xs, field.theta, epsilon_reg, n_circle)
    mass = factor * np.exp(gamma / 2.0 * h_eps) * field.dtheta
    return BoundaryMeasure(mass, epsilon_reg, gamma, field.theta)


def dirichlet_inner_product(f, g, dx, dtheta, geometry="cylinder"):
    # (f, g)_grad = (1/2pi) int grad f . grad g, forward differences
    fx = np.diff(f, axis=0) / dx
    gx = np.diff(g, axis=0) / dx
    if geometry == "cylinder":
        ft = (np.roll(f, -1, axis=1) - f) / dtheta
        gt = (np.roll(g, -1, axis=1) - g) / dtheta
    else:
        ft = np.diff(f, axis=1) / dtheta
        gt = np.diff(g, axis=1) / dtheta
    return float(((fx * gx).sum() + (ft * gt).sum()) * dx * dtheta / (2.0 * np.pi))


def _wrap_theta(w):
    # complex cylinder coordinate with imaginary part in (-pi, pi]
    return w.real + 1j * np.angle(np.exp(1j * w.imag))


class IdentityMap:
    name = "identity"
    target = "cylinder"

    def __call__(self, w):
        return w

    def derivative(self, w):
        return np.ones_like(w)

    def inverse(self, v):
        return v

    def singular_distance(self, w):
        return np.full(np.shape(w), np.inf)


class TranslationMap(IdentityMap):
    name = "translation"

    def __init__(self, shift):
        self.shift = shift

    def __call__(self, w):
        return w + self.shift

    def inverse(self, v):
        return v - self.shift


class PsiMap(IdentityMap):
    # psi_z(u) = -log(exp(-u) - exp(-z)) on the cylinder
    name = "psi_z"

    def __init__(self, z):
        self.z = complex(z)

    def __call__(self, w):
        return -np.log(np.exp(-w) - np.exp(-self.z))

    def derivative(self, w):
        return 1.0 / (1.0 - np.exp(w - self.z))

    def inverse(self, v):
        return -np.log(np.exp(-v) + np.exp(-self.z))

    def singular_distance(self, w):
        return np.abs(_wrap_theta(np.asarray(w) - self.z))


class ExpToPlaneMap(IdentityMap):
    # cylinder -> punctured plane, w -> e^w (+infinity goes to infinity)
    name = "exp_to_plane"
    target = "plane"

    def __call__(self, w):
        return np.exp(w)

    def derivative(self, w):
        return np.exp(w)

    def inverse(self, v):
        return np.log(v)


class CoordinateChangeReport(NamedTuple):
    map_name: str
    source_mass: float
    target_mass: float
    discrepancy: float
    n_source: int
    n_target: int


def coordinate_change_check(
    field, conformal_map, region, params, epsilon_reg=None, n_circle=N_CIRCLE
):
    """
    Compare mu_h(A) for the pulled-back field h = h~ o phi + Q log|phi'| with
    mu_h~(phi(A)), where h~ = field and A = {region[0] <= x < region[1]}.

    The source side averages h~ over the image of each eps-circle; the target
    side uses radius eps |phi'| at phi(w), the image scale of the same circle.

    Returns:
        CoordinateChangeReport with the relative discrepancy.
    """
    if field.geometry != "cylinder":
        raise DomainError("coordinate changes are checked on the cylinder")
    if conformal_map.target != "cylinder":
        raise DomainError(f"{conformal_map.name} does not map into the cylinder")
    gamma, q = params.gamma, params.q_charge
    eps = 4.0 * max(field.dx, field.dtheta) if epsilon_reg is None else epsilon_reg
    _check_regularization(field, eps)
    xx, tt = np.meshgrid(field.x, field.theta, indexing="ij")
    w = xx + 1j * tt
    in_a = (xx >= region[0]) & (xx < region[1])
    src = w[in_a]
    if len(src) == 0:
        raise DomainError("empty test region")
    if np.min(conformal_map.singular_distance(src)) <= 2.0 * eps:
        raise DomainError(f"region touches a singularity of {conformal_map.name}")

    # source side
    phase = np.exp(2j * np.pi * np.arange(n_circle) / n_circle)
    img = conformal_map(src[:, None] + eps * phase[None, :])
    if img.real.min() < field.x[0] or img.real.max() > field.x[-1]:
        raise DomainError("region maps outside the field window")
    h_src = sample_field(field, img.real, img.imag).mean(axis=1)
    h_src = h_src + q * np.log(np.abs(conformal_map.derivative(src)))
    src_mass = eps ** (gamma**2 / 2.0) * np.exp(gamma * h_src)

    # target side
    pre = conformal_map.inverse(w)
    in_b = (pre.real >= region[0]) & (pre.real < region[1])
    eps_v = eps * np.abs(conformal_map.derivative(pre[in_b]))
    tgt = w[in_b]
    h_tgt = circle_average(field, tgt.real, tgt.imag, eps_v, n_circle)
    tgt_mass = eps_v ** (gamma**2 / 2.0) * np.exp(gamma * h_tgt)

    source_mass = float(src_mass.sum() * field.cell_area)
    target_mass = float(tgt_mass.sum() * field.cell_area)
    return CoordinateChangeReport(
        conformal_map.name,
        source_mass,
        target_mass,
        abs(source_mass - target_mass) / target_mass,
        int(in_a.sum()),
        int(in_b.sum()),
    )


class DistortionRow(NamedTuple):
    w: complex
    displacement: float
    bound: float


def hull_removal_map(z_anchor):
    # F_z(w) = log(e^w - e^z): psi_z seen from the other end of the cylinder
    return lambda w: np.log(np.exp(w) - np.exp(z_anchor))


def distortion_bound_check(z_anchor, probe_points, c1=None):
    """
    Tabulate |F_z(w) - w| against C2 exp(-Re w), C2 = 2 exp(Re z), for the
    hull-removal map F_z(w) = log(e^w - e^z). The bound holds on
    Re w >= Re z + log 2, the default for c1.

    Returns:
        list of DistortionRow(w, displacement, bound)
    """
    z_anchor = complex(z_anchor)
    c1 = z_anchor.real + np.log(2.0) if c1 is None else c1
    probes = np.asarray(probe_points, dtype=complex)
    if np.any(probes.real < c1):
        raise DomainError(f"probe points must satisfy Re w >= {c1:.4f}")
    f = hull_removal_map(z_anchor)
    disp = np.abs(_wrap_theta(f(probes) - probes))
    c2 = 2.0 * np.exp(z_anchor.real)
    return [
        DistortionRow(complex(w), float(d), float(c2 * np.exp(-w.real)))
        for w, d in zip(probes, disp)
    ]


def fit_distortion_constant(rows):
    """
    Fitted K = max displacement * exp(Re w) and the log-linear decay rate of
    the displacement in Re w (close to -1).
    """
    re = np.array([r.w.real for r in rows])
    disp = np.array([r.displacement for r in rows])
    k_fit = float(np.max(disp * np.exp(re)))
    slope = float(np.polyfit(re, np.log(disp), 1)[0]) if len(rows) > 1 else np.nan
    return k_fit, slope

"""Position-basis wavefunctions of one or two modes on uniform grids.

Convention: [x, p] = i, vacuum variance 1/2, p = -i d/dx.  Grid points are
x_j = -L + j dx with dx = 2L/n; the momentum grid is 2 pi fftfreq(n, dx), so
the representable momentum half-range is pi/dx.  Every operation returns a
new state; arrays stored in states are read-only.
"""
from __future__ import annotations

import json
import math
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

BOUNDARY_TOL = 1e-6
NORM_TOL = 1e-9
JOINT_CAP = 2 ** 24


class AliasingError(ValueError):
    """An operation would need momenta (or shifts) beyond the grid's range."""

    def __init__(self, message, required: "GridSpec | None" = None):
        if required is not None:
            message = f"{message}; try n_points={required.n_points}, half_width={required.half_width:g}"
        super().__init__(message)
        self.required = required


class MeasurementError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    n_points: int = 512
    half_width: float = 8.0

    def __post_init__(self):
        n = self.n_points
        if n < 64 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 64, got {n}")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n_points

    @property
    def x(self) -> np.ndarray:
        return -self.half_width + self.dx * np.arange(self.n_points)

    @property
    def k(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, self.dx)

    @property
    def p_max(self) -> float:
        return math.pi / self.dx


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ModeState:
    grid: GridSpec
    amplitudes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", _frozen(self.amplitudes))
        if self.amplitudes.shape != (self.grid.n_points,):
            raise ValueError("amplitude length does not match grid")

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dx)

    def normalized(self) -> "ModeState":
        n = self.norm
        if n < 1e-300:
            raise MeasurementError("cannot normalize a null state")
        return ModeState(self.grid, self.amplitudes / math.sqrt(n))

    def boundary_amplitude(self) -> float:
        a = np.abs(self.amplitudes)
        return float(max(a[0], a[-1]) / max(a.max(), 1e-300))


@dataclass(frozen=True, eq=False)
class JointState:
    grid_s: GridSpec
    grid_a: GridSpec
    amplitudes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", _frozen(self.amplitudes))
        if self.amplitudes.shape != (self.grid_s.n_points, self.grid_a.n_points):
            raise ValueError("amplitude shape does not match grids")

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid_s.dx * self.grid_a.dx)

    def grids(self):
        return (self.grid_s, self.grid_a)


@dataclass(frozen=True)
class AncillaSpec:
    order: int
    chi: float = 0.0
    squeezing_db: float = 0.0

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("ancilla order must be >= 0")
        if self.squeezing_db < 0:
            raise ValueError("squeezing_db must be >= 0")

    @property
    def x_variance(self) -> float:
        """Order 0 is squeezed in x; nonlinear ancillas are squeezed in p - k chi x**(k-1)."""
        f = 10.0 ** (self.squeezing_db / 10.0)
        return 0.5 / f if self.order == 0 else 0.5 * f

    @property
    def noise_variance(self) -> float:
        """Variance of the squeezed quadrature (x for order 0, the nonlinear one otherwise)."""
        return 0.5 * 10.0 ** (-self.squeezing_db / 10.0)

    def wavefunction(self, x):
        """Analytic amplitude exp(i chi x**k) G(x) with G the squeezed Gaussian envelope."""
        x = np.asarray(x, dtype=float)
        v = self.x_variance
        env = (2 * np.pi * v) ** -0.25 * np.exp(-x * x / (4 * v))
        if self.order == 0 or self.chi == 0:
            return env.astype(np.complex128)
        return env * np.exp(1j * self.chi * x ** self.order)

    def local_momentum(self, x):
        if self.order == 0:
            return np.zeros_like(np.asarray(x, dtype=float))
        return self.order * self.chi * np.asarray(x, dtype=float) ** (self.order - 1)

    def support(self, tol: float = BOUNDARY_TOL) -> float:
        """Half-width beyond which the envelope amplitude drops below tol of its peak."""
        return math.sqrt(-4.0 * self.x_variance * math.log(tol))


def required_grid(spec: AncillaSpec, tol: float = BOUNDARY_TOL, margin: float = 1.25) -> GridSpec:
    """Smallest power-of-two grid that holds the ancilla without aliasing."""
    L = spec.support(tol) * margin
    p_env = math.sqrt(-4.0 * (0.25 / spec.x_variance) * math.log(tol))
    p_need = (abs(float(spec.local_momentum(L))) + p_env) * margin
    n = 64
    while math.pi * n / (2 * L) < p_need:
        n *= 2
    return GridSpec(n, float(L))


def _check_boundary(amps, what):
    a = np.abs(amps)
    peak = a.max()
    if peak > 0 and max(a[0], a[-1]) / peak > BOUNDARY_TOL:
        warnings.warn(f"{what}: boundary amplitude {max(a[0], a[-1]) / peak:.2e} exceeds "
                      f"{BOUNDARY_TOL:g} (possible wraparound)", RuntimeWarning, stacklevel=3)


def gaussian(grid: GridSpec, var_x: float = 0.5, mean_x: float = 0.0, mean_p: float = 0.0,
             corr: float = 0.0) -> ModeState:
    """Pure Gaussian with the given x-variance and a quadratic phase corr * x**2 / 2."""
    x = grid.x - mean_x
    amps = np.exp(-x * x / (4 * var_x) + 1j * (mean_p * grid.x + 0.5 * corr * x * x))
    return ModeState(grid, amps).normalized()


def vacuum(grid: GridSpec | None = None) -> ModeState:
    return gaussian(grid or GridSpec())


def make_ancilla(spec: AncillaSpec, grid: GridSpec | None = None) -> ModeState:
    grid = grid or GridSpec()
    x = grid.x
    amps = spec.wavefunction(x)
    mag = np.abs(amps)
    live = mag > BOUNDARY_TOL * mag.max()
    p_env = math.sqrt(-4.0 * (0.25 / spec.x_variance) * math.log(BOUNDARY_TOL))
    p_need = float(np.max(np.abs(spec.local_momentum(x[live])))) + p_env
    if p_need > grid.p_max:
        raise AliasingError(f"ancilla needs momenta up to {p_need:.3g} but grid holds {grid.p_max:.3g}",
                            required_grid(spec))
    _check_boundary(amps, "make_ancilla")
    return ModeState(grid, amps).normalized()


def tensor(a: ModeState, b: ModeState, cap: int = JOINT_CAP) -> JointState:
    if a.grid.n_points * b.grid.n_points > cap:
        raise MemoryError(f"joint grid {a.grid.n_points}x{b.grid.n_points} exceeds cap {cap}")
    return JointState(a.grid, b.grid, np.outer(a.amplitudes, b.amplitudes))


# ---------------------------------------------------------------------------
# exact shears via FFT


def _shift_along(amps: np.ndarray, grid: GridSpec, shift, axis: int) -> np.ndarray:
    """f(u) -> f(u + shift) along ``axis``; ``shift`` broadcasts over the other axis."""
    k = grid.k
    shape = [1] * amps.ndim
    shape[axis] = -1
    spec = np.fft.fft(amps, axis=axis)
    spec = spec * np.exp(1j * k.reshape(shape) * shift)
    return np.fft.ifft(spec, axis=axis)


def _shear(amps, grids, axis, coeff):
    """psi(..., u_axis + coeff * u_other, ...)."""
    other = 1 - axis
    g_other = grids[other]
    shift = coeff * g_other.x
    if abs(coeff) * g_other.half_width > grids[axis].half_width:
        raise AliasingError(f"shear {coeff:g} moves amplitude by up to "
                            f"{abs(coeff) * g_other.half_width:.3g} > half-width {grids[axis].half_width:g}")
    shift = shift.reshape((-1, 1)) if other == 0 else shift.reshape((1, -1))
    return _shift_along(amps, grids[axis], shift, axis)


def qnd(state: JointState, z: float, direction: str = "s->a") -> JointState:
    """QND coupling: x_a -> x_a - z x_s and p_s -> p_s + z p_a (``s->a``), or with roles swapped."""
    if z == 0:
        return state
    if direction == "s->a":
        amps = _shear(state.amplitudes, state.grids(), 1, z)
    elif direction == "a->s":
        amps = _shear(state.amplitudes, state.grids(), 0, z)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return JointState(state.grid_s, state.grid_a, amps)


def beamsplitter(state: JointState, t: float, r: float) -> JointState:
    """x_1 -> t x_1 + r x_2, x_2 -> t x_2 - r x_1 (same for p), via three exact shears."""
    if abs(t * t + r * r - 1.0) > 1e-12:
        raise ValueError(f"t**2 + r**2 = {t * t + r * r!r} != 1")
    if state.grid_s != state.grid_a:
        raise ValueError("beam splitter needs identical grids on both modes")
    if r == 0 and t > 0:
        return state
    phi = math.atan2(r, t)
    if abs(phi) > math.pi / 2:
        # split large rotations so each shear stays within the grid
        half = math.cos(phi / 2), math.sin(phi / 2)
        return beamsplitter(beamsplitter(state, *half), *half)
    a = -math.tan(phi / 2)
    # psi'(u, v) = psi(t u - r v, r u + t v) = psi o U(a) o L(r) o U(a)
    amps = state.amplitudes
    g = state.grids()
    amps = _shear(amps, g, 0, a)
    amps = _shear(amps, g, 1, r)
    amps = _shear(amps, g, 0, a)
    return JointState(state.grid_s, state.grid_a, amps)


# ---------------------------------------------------------------------------
# single-mode Gaussian and diagonal operations


def _x_chirp(amps, grid, a):
    return amps * np.exp(0.5j * a * grid.x ** 2)


def _p_chirp(amps, grid, b):
    return np.fft.ifft(np.fft.fft(amps) * np.exp(-0.5j * b * grid.k ** 2))


def phase_rotate(state: ModeState, theta: float) -> ModeState:
    """Rotate quadratures: x -> x cos(theta) + p sin(theta), p -> p cos(theta) - x sin(theta)."""
    if theta == 0:
        return state
    if abs(theta) > math.pi / 2:
        return phase_rotate(phase_rotate(state, theta / 2), theta / 2)
    g = state.grid
    if abs(math.sin(theta)) * g.half_width > g.p_max:
        raise AliasingError("rotation chirp exceeds momentum range")
    b = math.tan(theta / 2)
    amps = _p_chirp(state.amplitudes, g, b)
    amps = _x_chirp(amps, g, -math.sin(theta))
    amps = _p_chirp(amps, g, b)
    return ModeState(g, amps)


def interpolate(amps: np.ndarray, grid: GridSpec, points) -> np.ndarray:
    """Band-limited (trigonometric) interpolation of grid samples; zero outside the grid."""
    points = np.asarray(points, dtype=float)
    coef = np.fft.fft(amps) / grid.n_points
    k = grid.k.copy()
    n = grid.n_points
    out = np.exp(1j * np.outer(points + grid.half_width, k)) @ coef
    # split the Nyquist term symmetrically so real data stays real
    ny = n // 2
    out += coef[ny] * (np.cos(np.pi / grid.dx * (points + grid.half_width))
                       - np.exp(1j * k[ny] * (points + grid.half_width)))
    out[(points < -grid.half_width) | (points >= grid.half_width)] = 0
    return out


def squeeze(state: ModeState, s: float) -> ModeState:
    """psi(x) -> sqrt(s) psi(s x): x -> x / s, p -> s p."""
    if s <= 0:
        raise ValueError("squeeze factor must be positive")
    if s == 1:
        return state
    g = state.grid
    amps = math.sqrt(s) * interpolate(state.amplitudes, g, s * g.x)
    if s < 1:
        _check_boundary(amps, "squeeze")
    return ModeState(g, amps)


def displace_p(state: ModeState, d: float) -> ModeState:
    g = state.grid
    if abs(d) >= g.p_max / 2:
        raise AliasingError(f"p displacement {d:g} exceeds half the momentum range {g.p_max:.3g}")
    return ModeState(g, state.amplitudes * np.exp(1j * d * g.x))


def displace_x(state: ModeState, d: float) -> ModeState:
    g = state.grid
    return ModeState(g, _shift_along(state.amplitudes, g, -d, 0))


def diagonal_phase(state: ModeState, phase: np.ndarray) -> ModeState:
    return ModeState(state.grid, state.amplitudes * np.exp(1j * phase))


def nonlinear_phase(state: ModeState, chi: float, order: int) -> ModeState:
    """exp(-i chi x**N): p -> p - N chi x**(N-1)."""
    if chi == 0:
        return state
    g = state.grid
    mag = np.abs(state.amplitudes)
    live = mag > BOUNDARY_TOL * mag.max()
    kick = float(np.max(np.abs(order * chi * g.x[live] ** (order - 1)))) if live.any() else 0.0
    if kick > g.p_max:
        raise AliasingError(f"nonlinear kick {kick:.3g} exceeds momentum range {g.p_max:.3g}")
    return ModeState(g, state.amplitudes * np.exp(-1j * chi * g.x ** order))


# ---------------------------------------------------------------------------
# measurement


def sample_from_density(weights: np.ndarray, grid: GridSpec, rng) -> float:
    """Inverse-CDF sample with uniform density inside each grid cell."""
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if total < 1e-12:
        raise MeasurementError("degenerate marginal")
    cdf = np.cumsum(w) / total
    u = rng.random()
    j = int(np.searchsorted(cdf, u, side="right"))
    j = min(j, len(w) - 1)
    lo = cdf[j - 1] if j else 0.0
    frac = (u - lo) / max(cdf[j] - lo, 1e-300)
    return float(grid.x[j] - 0.5 * grid.dx + frac * grid.dx)


def homodyne_x(state: JointState, which: int, rng=None, outcome: float | None = None):
    """Measure x of mode ``which`` (0 = first, 1 = second); returns (outcome, other mode)."""
    if which not in (0, 1):
        raise ValueError("which must be 0 or 1")
    grids = state.grids()
    gm, go = grids[which], grids[1 - which]
    amps = state.amplitudes if which == 1 else state.amplitudes.T
    if outcome is None:
        marginal = np.sum(np.abs(amps) ** 2, axis=0) * go.dx
        outcome = sample_from_density(marginal, gm, rng)
    coef = np.fft.fft(amps, axis=1) / gm.n_points
    phase = np.exp(1j * gm.k * (outcome + gm.half_width))
    ny = gm.n_points // 2
    phase[ny] = math.cos(math.pi / gm.dx * (outcome + gm.half_width))
    cond = coef @ phase
    norm = float(np.sum(np.abs(cond) ** 2) * go.dx)
    if norm < 1e-12:
        raise MeasurementError("conditional state has vanishing norm")
    return float(outcome), ModeState(go, cond / math.sqrt(norm))


def reduced_marginal(state: JointState, which: int) -> np.ndarray:
    axis = 1 - which
    dx = state.grids()[axis].dx
    return np.sum(np.abs(state.amplitudes) ** 2, axis=axis) * dx


# ---------------------------------------------------------------------------
# counter-based substreams


def trajectory_rng(seed: int, index: int, attempt: int = 0) -> np.random.Generator:
    """Philox keyed by (seed, index); the attempt counter separates resamples."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, index], dtype=np.uint64)
    counter = np.array([0, 0, 0, attempt], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


# ---------------------------------------------------------------------------
# persistence

_MAGIC = b"NLPS"
_HEADER = struct.Struct("<4sIId")  # magic, version, n_points, half_width


def save_state(state: ModeState, path, meta: dict | None = None) -> tuple[Path, Path]:
    """Binary container (header + little-endian complex64 pairs) plus a JSON sidecar."""
    path = Path(path)
    g = state.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, 1, g.n_points, g.half_width))
        fh.write(state.amplitudes.astype("<c8").tobytes())
    sidecar = path.with_suffix(path.suffix + ".json")
    info = {"format": "nlphase-state", "version": 1, "dtype": "complex64-le",
            "n_points": g.n_points, "half_width": g.half_width}
    info.update(meta or {})
    sidecar.write_text(json.dumps(info, indent=2, sort_keys=True))
    return path, sidecar


def load_state(path) -> ModeState:
    with open(path, "rb") as fh:
        magic, version, n, L = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != _MAGIC or version != 1:
            raise ValueError(f"{path}: not an nlphase state file")
        data = np.frombuffer(fh.read(), dtype="<c8")
    if data.size != n:
        raise ValueError(f"{path}: expected {n} amplitudes, found {data.size}")
    return ModeState(GridSpec(n, L), data.astype(np.complex128))

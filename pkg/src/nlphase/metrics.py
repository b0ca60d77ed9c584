"""State functionals: overlaps, quadrature moments, nonlinear squeezing."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .statesim import GridSpec, JointState, ModeState

VACUUM = 0.5


def apply_p(amps: np.ndarray, grid: GridSpec, axis: int = 0) -> np.ndarray:
    shape = [1] * amps.ndim
    shape[axis] = -1
    return np.fft.ifft(np.fft.fft(amps, axis=axis) * grid.k.reshape(shape), axis=axis)


def inner(a: ModeState, b: ModeState) -> complex:
    if a.grid != b.grid:
        raise ValueError("states live on different grids")
    return complex(np.vdot(a.amplitudes, b.amplitudes) * a.grid.dx)


def fidelity(a: ModeState, b: ModeState) -> float:
    """|<a|b>|^2 for normalized inputs, clipped into [0, 1]."""
    na, nb = a.norm, b.norm
    f = abs(inner(a, b)) ** 2 / (na * nb)
    return float(min(1.0, max(0.0, f)))


def expect(state: ModeState, op_amps: np.ndarray) -> complex:
    return complex(np.vdot(state.amplitudes, op_amps) * state.grid.dx)


def moments(state: ModeState) -> dict:
    """Means, variances and symmetric covariance of x and p."""
    g = state.grid
    psi = state.amplitudes / np.sqrt(state.norm)
    x = g.x
    ppsi = apply_p(psi, g)
    dx = g.dx
    mx = float(np.sum(x * np.abs(psi) ** 2) * dx)
    mp = float(np.real(np.vdot(psi, ppsi)) * dx)
    vx = float(np.sum(x * x * np.abs(psi) ** 2) * dx) - mx ** 2
    vp = float(np.sum(np.abs(ppsi) ** 2) * dx) - mp ** 2
    # <(xp + px)/2> = Re <x psi | p psi>
    cxp = float(np.real(np.vdot(x * psi, ppsi)) * dx) - mx * mp
    return {"mean": np.array([mx, mp]), "cov": np.array([[vx, cxp], [cxp, vp]])}


def joint_moments(state: JointState) -> dict:
    """Mean vector and symmetrized covariance of (x1, p1, x2, p2)."""
    g1, g2 = state.grid_s, state.grid_a
    psi = state.amplitudes / np.sqrt(state.norm)
    w = g1.dx * g2.dx
    x1 = g1.x[:, None] * psi
    x2 = g2.x[None, :] * psi
    p1 = apply_p(psi, g1, axis=0)
    p2 = apply_p(psi, g2, axis=1)
    ops = [x1, p1, x2, p2]
    mean = np.array([np.real(np.vdot(psi, o)) * w for o in ops])
    cov = np.empty((4, 4))
    for i in range(4):
        for j in range(4):
            cov[i, j] = np.real(np.vdot(ops[i], ops[j])) * w - mean[i] * mean[j]
    cov = 0.5 * (cov + cov.T)
    return {"mean": mean, "cov": cov}


@dataclass
class VarianceReport:
    order: int
    chi: float
    value: float

    @property
    def vacuum_ratio(self) -> float:
        return self.value / VACUUM

    def to_json(self) -> dict:
        d = asdict(self)
        d["vacuum_ratio"] = self.vacuum_ratio
        return d


def nonlinear_variance(state: ModeState, k: int, chi: float) -> VarianceReport:
    """Var(p - k chi x**(k-1)); order 0 or chi = 0 is plain Var(p)."""
    g = state.grid
    psi = state.amplitudes / np.sqrt(state.norm)
    op = apply_p(psi, g)
    if k >= 1 and chi != 0:
        op = op - k * chi * g.x ** (k - 1) * psi
    mean = float(np.real(np.vdot(psi, op)) * g.dx)
    second = float(np.sum(np.abs(op) ** 2) * g.dx)
    return VarianceReport(k, chi, max(0.0, second - mean ** 2))


def signed_cbrt_variance(state: ModeState) -> float:
    g = state.grid
    w = np.abs(state.amplitudes) ** 2
    w = w / w.sum()
    c = np.cbrt(g.x)
    m = float(np.sum(w * c))
    return float(np.sum(w * c * c)) - m * m


def eq17_criterion(a3: ModeState, a4: ModeState, chi3: float) -> dict:
    """Compare Var(p - 3 chi3 x**2) of the order-3 ancilla with 1/Var(cbrt(x)) of the order-4 one."""
    lhs = nonlinear_variance(a3, 3, chi3).value
    rhs = 1.0 / signed_cbrt_variance(a4)
    return {"lhs": lhs, "rhs": rhs, "margin": rhs / lhs if lhs > 0 else float("inf"),
            "satisfied": lhs < rhs}

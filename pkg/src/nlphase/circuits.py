"""Gate executions: cubic QND gate, quartic optical scheme, symbolic certification.

Numeric runs keep the signal on its grid and evaluate the ancilla
wavefunctions analytically where the conditional state needs them.  After
a linear coupling and an x readout q of an ancilla prepared in phi, the
surviving modes are multiplied by phi evaluated on an affine function of
their coordinates; a p-squeezed nonlinear ancilla is far too wide and
oscillatory to store on the signal-sized grid, but its closed form is exact.
The ``grid`` backend of the cubic gate does the same computation with
tensor/qnd/homodyne on a joint grid and is used to cross-check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import algebra as alg
from . import gains
from .algebra import QuadPoly, Symbol
from .metrics import fidelity, moments
from .statesim import (AliasingError, AncillaSpec, GridSpec, ModeState,
                       gaussian, homodyne_x, make_ancilla, nonlinear_phase, qnd,
                       required_grid, tensor, trajectory_rng, vacuum)

AMP_TOL = 1e-7  # carrier envelope cut for the quadrature window


class CircuitError(RuntimeError):
    pass


@dataclass
class CircuitConfig:
    gate: str = "cubic"
    chi: float = 0.05                # cubic gate strength, p -> p - 3 chi x**2
    carrier: AncillaSpec = field(default_factory=lambda: AncillaSpec(0, 0.0, 25.0))
    t0: float = 0.9
    t4: float = 0.9
    ancillas: list = field(default_factory=list)
    grid: GridSpec = field(default_factory=GridSpec)
    ancilla_grid: GridSpec | None = None
    trajectories: int = 200
    seed: int = 0
    backend: str = "conditional"
    resample_budget: int = 20
    sampling: str = "stratified"
    input: dict = field(default_factory=lambda: {"kind": "vacuum"})
    sweep: dict | None = None

    def __post_init__(self):
        if self.gate not in ("cubic", "quartic"):
            raise ValueError(f"gate must be cubic or quartic, got {self.gate!r}")
        if not self.ancillas:
            if self.gate == "cubic":
                self.ancillas = [AncillaSpec(3, self.chi, 25.0)]
            else:
                self.ancillas = [AncillaSpec(4, 0.02, 25.0), AncillaSpec(3, 0.1, 25.0)]
        orders = sorted(a.order for a in self.ancillas)
        if self.gate == "cubic" and orders != [3]:
            raise ValueError("cubic gate takes exactly one order-3 ancilla")
        if self.gate == "quartic" and orders != [3, 4]:
            raise ValueError("quartic gate takes ancillas of orders 4 and 3")
        if self.carrier.order != 0:
            raise ValueError("carrier must be an order-0 ancilla")
        if self.backend not in ("conditional", "grid"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.sampling not in ("stratified", "independent"):
            raise ValueError(f"unknown sampling {self.sampling!r}")
        if self.backend == "grid" and self.gate != "cubic":
            raise ValueError("grid backend is available for the cubic gate only")

    @classmethod
    def from_dict(cls, data: dict) -> "CircuitConfig":
        d = dict(data)
        if "carrier" in d:
            d["carrier"] = AncillaSpec(0, 0.0, float(d["carrier"].get("squeezing_db", 25.0)))
        if "ancillas" in d:
            d["ancillas"] = [AncillaSpec(int(a["order"]), float(a.get("chi", 0.0)),
                                         float(a.get("squeezing_db", 0.0))) for a in d["ancillas"]]
        for key in ("grid", "ancilla_grid"):
            if d.get(key) is not None:
                d[key] = GridSpec(int(d[key]["n_points"]), float(d[key]["half_width"]))
        return cls(**d)

    def to_dict(self) -> dict:
        def grid(gs):
            return None if gs is None else {"n_points": gs.n_points, "half_width": gs.half_width}
        return {
            "gate": self.gate, "chi": self.chi,
            "carrier": {"squeezing_db": self.carrier.squeezing_db},
            "t0": self.t0, "t4": self.t4,
            "ancillas": [{"order": a.order, "chi": a.chi, "squeezing_db": a.squeezing_db}
                         for a in self.ancillas],
            "grid": grid(self.grid), "ancilla_grid": grid(self.ancilla_grid),
            "trajectories": self.trajectories, "seed": self.seed, "backend": self.backend,
            "resample_budget": self.resample_budget, "sampling": self.sampling,
            "input": dict(self.input), "sweep": None if self.sweep is None else dict(self.sweep),
        }

    def sweep_points(self) -> list:
        """(squeezing_db or None, config) for every point of the run."""
        if not self.sweep:
            return [(None, self)]
        targets = self.sweep.get("targets", ["all"])
        return [(float(db), self.with_squeezing(float(db), targets)) for db in self.sweep["squeezing_db"]]

    def ancilla(self, order: int) -> AncillaSpec:
        return next(a for a in self.ancillas if a.order == order)

    def input_state(self) -> ModeState:
        spec = dict(self.input)
        kind = spec.pop("kind", "vacuum")
        if kind == "vacuum":
            return vacuum(self.grid)
        if kind == "gaussian":
            return gaussian(self.grid, **spec)
        raise ValueError(f"unknown input kind {kind!r}")

    def with_squeezing(self, db: float, targets: Sequence = ("all",)) -> "CircuitConfig":
        def hit(order):
            return "all" in targets or order in targets
        ancillas = [replace(a, squeezing_db=db) if hit(a.order) else a for a in self.ancillas]
        carrier = replace(self.carrier, squeezing_db=db) if hit(0) and self.gate == "quartic" else self.carrier
        return replace(self, ancillas=ancillas, carrier=carrier, sweep=None)


@dataclass
class TrajectoryRecord:
    index: int
    gate: str
    outcomes: dict
    feedforward: dict
    fidelity: float
    flags: list = field(default_factory=list)
    resamples: int = 0
    sweep_db: float | None = None
    output: ModeState | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        d = {"index": self.index, "gate": self.gate, "outcomes": self.outcomes,
             "feedforward": self.feedforward, "fidelity": self.fidelity,
             "flags": list(self.flags), "resamples": self.resamples}
        if self.sweep_db is not None:
            d["sweep_db"] = self.sweep_db
        return d


def oracle(state: ModeState, chi: float, N: int) -> ModeState:
    """Ideal gate exp(-i chi x**N)."""
    return nonlinear_phase(state, chi, N)


def _pick_index(weights: np.ndarray, rng) -> int:
    cdf = np.cumsum(weights.ravel())
    u = rng.random() * cdf[-1]
    return min(int(np.searchsorted(cdf, u, side="right")), cdf.size - 1)


def first_uniform(config: CircuitConfig, index: int, rng) -> float:
    """Uniform for the first readout; stratified over the trajectory count when enabled."""
    u = rng.random()
    if config.sampling == "stratified" and config.trajectories > 0 and index < config.trajectories:
        return (index + u) / config.trajectories
    return u


def mixture_quantile(points: np.ndarray, weights: np.ndarray, sigma: float, u: float,
                     resolution: float = 0.02) -> float:
    """Quantile u of sum_j w_j N(points_j, sigma**2).

    Masses are deposited cloud-in-cell on a grid of spacing resolution*sigma
    (mean preserving) and convolved with the Gaussian kernel.
    """
    w = weights.ravel()
    keep = w > 1e-16 * w.max()
    c, w = points.ravel()[keep], w[keep] / w[keep].sum()
    h = resolution * sigma
    lo = c.min() - 9 * sigma
    n = int(np.ceil((c.max() + 9 * sigma - lo) / h)) + 2
    pos = (c - lo) / h
    i = np.floor(pos).astype(int)
    f = pos - i
    mass = np.bincount(i, w * (1 - f), n) + np.bincount(i + 1, w * f, n)
    m = int(np.ceil(9 / resolution))
    kern = np.exp(-0.5 * (np.arange(-m, m + 1) * resolution) ** 2)
    pdf = np.convolve(mass, kern / kern.sum(), mode="same")
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]))])
    cdf /= cdf[-1]
    return float(np.interp(u, cdf, lo + h * np.arange(n)))


def _normalized(grid: GridSpec, amps: np.ndarray) -> ModeState:
    norm = float(np.sum(np.abs(amps) ** 2) * grid.dx)
    if not norm > 1e-300:
        raise CircuitError("conditional output has vanishing norm")
    return ModeState(grid, amps / math.sqrt(norm))


# ---------------------------------------------------------------------------
# cubic gate


def cubic_gain(chi: float, chi_a: float) -> float:
    """QND gain z with chi_a z**3 = -chi (cube term of the corrected relation)."""
    if chi_a == 0:
        raise CircuitError("order-3 ancilla needs nonzero chi")
    return gains.real_root(-chi / chi_a, 3)[0]


def cubic_corrections(chi_a: float, z: float, q: float) -> dict:
    """Feed-forward of the cubic gate: quadratic phase (shear) and p displacement."""
    return {"shear": -6.0 * chi_a * z * z * q, "p_disp": -3.0 * chi_a * z * q * q}


def cubic_grid_for(config: CircuitConfig) -> GridSpec:
    """Ancilla grid for the grid backend: room for the ancilla plus the QND shift."""
    spec = config.ancilla(3)
    z = abs(cubic_gain(config.chi, spec.chi))
    base = required_grid(spec)
    L = base.half_width + z * config.grid.half_width
    n = base.n_points
    while 2 * L / n > 2 * base.half_width / base.n_points:
        n *= 2
    return GridSpec(n, L)


def run_cubic(state: ModeState, config: CircuitConfig, index: int = 0,
              forced_q: float | None = None) -> TrajectoryRecord:
    spec = config.ancilla(3)
    g = state.grid
    z = cubic_gain(config.chi, spec.chi)
    rng = trajectory_rng(config.seed, index)
    flags = []
    if forced_q is not None:
        flags.append("forced-outcome")

    if config.backend == "grid":
        ga = config.ancilla_grid or cubic_grid_for(config)
        joint = qnd(tensor(state, make_ancilla(spec, ga)), z)
        q, cond = homodyne_x(joint, 1, rng, outcome=forced_q)
        amps = cond.amplitudes
    else:
        if forced_q is None:
            # q = x_A - z x_s: Gaussian mixture over the signal grid
            u = first_uniform(config, index, rng)
            q = mixture_quantile(-z * g.x, np.abs(state.amplitudes) ** 2,
                                 math.sqrt(spec.x_variance), u)
        else:
            q = float(forced_q)
        # x_A = q + z x_s after the readout
        amps = state.amplitudes * spec.wavefunction(q + z * g.x)
    corr = cubic_corrections(spec.chi, z, q)
    phase = 0.5 * corr["shear"] * g.x ** 2 + corr["p_disp"] * g.x
    out = _normalized(g, amps * np.exp(1j * phase))
    if out.boundary_amplitude() > 1e-6:
        flags.append("boundary")
    fid = fidelity(out, oracle(state, config.chi, 3))
    return TrajectoryRecord(index, "cubic", {"q": q}, {"z": z, **corr}, fid, flags, output=out)


# ---------------------------------------------------------------------------
# quartic optical scheme


def quartic_effective_chi(chi4: float, t0: float, t4: float) -> float:
    """Oracle strength after the 1/t0 pre-squeeze: p -> p + 4 chi4 (r0 r4 / t0 t4)**4 x**3."""
    r0, r4 = math.sqrt(1 - t0 * t0), math.sqrt(1 - t4 * t4)
    return -chi4 * (r0 * r4 / (t0 * t4)) ** 4


@dataclass
class _QuarticGeometry:
    t0: float
    r0: float
    t4: float
    r4: float
    e: np.ndarray
    s: np.ndarray

    @property
    def de(self):
        return self.e[1] - self.e[0]

    def c0(self):
        return (self.e[:, None] + self.r0 * self.s[None, :]) / self.t0


def _shifted_input(state: ModeState, shifts: np.ndarray) -> np.ndarray:
    """psi(s + shift_i) for every shift (rows) by exact FFT translation."""
    g = state.grid
    spec = np.fft.fft(state.amplitudes)
    return np.fft.ifft(spec[None, :] * np.exp(1j * np.outer(shifts, g.k)), axis=1)


def _carrier_window(carrier: AncillaSpec) -> float:
    return math.sqrt(-4.0 * carrier.x_variance * math.log(AMP_TOL))


def _phase_slope_bounds(geo, a4, a3, q4, q3, t3, r3, tan_theta, alpha, beta, live):
    """Range of d(phase)/de of the readout integrand over the live region."""
    c0 = geo.c0()
    X4 = (geo.r4 * c0 + q4) / geo.t4
    c1 = (c0 + geo.r4 * q4) / geo.t4
    X3 = (r3 * c1 + q3) / t3
    c2 = (c1 + r3 * q3) / t3
    slope = (a4.local_momentum(X4) * geo.r4 / (geo.t0 * geo.t4)
             + a3.local_momentum(X3) * r3 / (geo.t0 * geo.t4 * t3)
             + tan_theta * c2 * alpha)
    slope = slope[live]
    return float(slope.min()), float(slope.max())


def run_quartic(state: ModeState, config: CircuitConfig, index: int = 0,
                forced: dict | None = None, attempt: int = 0) -> TrajectoryRecord:
    """One trajectory of the quartic scheme with readouts (q4, q3, y)."""
    a0, a4, a3 = config.carrier, config.ancilla(4), config.ancilla(3)
    chi3, chi4 = a3.chi, a4.chi
    t0, t4 = config.t0, config.t4
    r0, r4 = math.sqrt(1 - t0 * t0), math.sqrt(1 - t4 * t4)
    g = state.grid
    s = g.x
    flags = []
    if forced is not None:
        flags.append("forced-outcome")
    rng = trajectory_rng(config.seed, index, attempt)

    # readout sampling on a coarse carrier window; only envelopes matter here
    W = _carrier_window(a0)
    e_c = np.linspace(-W, W, 257)
    geo_c = _QuarticGeometry(t0, r0, t4, r4, e_c, s)
    w0 = (np.abs(a0.wavefunction(e_c)) ** 2)[:, None] * np.abs(_shifted_input(state, r0 * e_c)) ** 2
    c0 = geo_c.c0()
    if forced is None:
        u = first_uniform(config, index, rng)
        q4 = mixture_quantile(-r4 * c0, w0, t4 * math.sqrt(a4.x_variance), u)
    else:
        q4 = float(forced["q4"])
    ff = gains.quartic_feedforward(chi3, chi4, t0, t4, q4)
    t3, r3 = ff["t3"], ff["r3"]
    c1 = (c0 + r4 * q4) / t4
    if forced is None:
        w1 = w0 * np.abs(a4.wavefunction((r4 * c0 + q4) / t4)) ** 2
        i = _pick_index(w1, rng)
        q3 = float(t3 * rng.normal(0.0, math.sqrt(a3.x_variance)) - r3 * c1.ravel()[i])
    else:
        q3 = float(forced["q3"])
    ff = gains.quartic_feedforward(chi3, chi4, t0, t4, q4, q3)
    theta = ff["theta"] if forced is None or "theta" not in forced else float(forced["theta"])
    tan_theta = math.tan(theta)
    cos_theta = math.cos(theta)
    if abs(cos_theta) < gains.COS_GUARD:
        raise gains.RotationGuardError("rotation too close to pi/2")

    alpha = 1.0 / (t0 * t4 * t3)
    beta = ((r0 * s / t0 + r4 * q4) / t4 + r3 * q3) / t3

    # resolution of the readout integrand from its analytic phase slope
    live = w0 > AMP_TOL ** 2 * w0.max()
    lo, hi = _phase_slope_bounds(geo_c, a4, a3, q4, q3, t3, r3, tan_theta, alpha, beta, live)
    spec_in = np.abs(np.fft.fft(state.amplitudes))
    k_in = float(np.max(np.abs(g.k[spec_in > AMP_TOL * spec_in.max()])))
    env = 4.0 / math.sqrt(a0.x_variance) + r0 * k_in
    center = 0.5 * (lo + hi)
    half_band = 0.5 * (hi - lo) + env
    M = 256
    while math.pi / (2 * W / M) < 1.25 * half_band:
        M *= 2
    if M > 2 ** 16:
        raise AliasingError(f"readout integrand needs {M} carrier samples")
    e = np.linspace(-W, W, M, endpoint=False)
    geo = _QuarticGeometry(t0, r0, t4, r4, e, s)
    c0 = geo.c0()
    c1 = (c0 + r4 * q4) / t4
    c2 = (c1 + r3 * q3) / t3
    phi = (a0.wavefunction(e)[:, None] * _shifted_input(state, r0 * e)
           * a4.wavefunction((r4 * c0 + q4) / t4)
           * a3.wavefunction((r3 * c1 + q3) / t3))
    # demodulated readout integrand: chirp of the rotated detector times e^{-i center e}
    F = phi * np.exp(0.5j * tan_theta * c2 ** 2 - 1j * center * e[:, None])

    if forced is None:
        # signal position first (Parseval marginal), then y given that row
        row_w = np.sum(np.abs(F) ** 2, axis=0)
        j = _pick_index(row_w, rng)
        npad = max(16 * M, 2 ** 15)
        spec_row = np.abs(np.fft.fft(F[:, j], n=npad)) ** 2
        order = np.fft.fftshift(np.arange(npad))
        omegas = 2 * np.pi * np.fft.fftfreq(npad, geo.de)[order]
        dens = spec_row[order]
        cdf = np.cumsum(dens)
        u = rng.random() * cdf[-1]
        b = min(int(np.searchsorted(cdf, u, side="right")), npad - 1)
        lo_c = cdf[b - 1] if b else 0.0
        frac = (u - lo_c) / max(cdf[b] - lo_c, 1e-300)
        d_om = omegas[1] - omegas[0]
        omega = omegas[b] - 0.5 * d_om + frac * d_om + center
        y = omega * cos_theta / alpha
        edge = dens[: npad // 8].sum() + dens[-npad // 8:].sum()
        if edge > 1e-8 * cdf[-1]:
            flags.append("readout-aliasing")
    else:
        y = float(forced.get("y", 0.0))
        omega = y * alpha / cos_theta

    # conditional signal: project the carrier on the rotated-quadrature eigenstate
    amp = np.exp(-1j * (omega - center) * e) @ F
    amp = amp * np.exp(-1j * y * beta / cos_theta)
    p_disp = gains.quartic_displacement(chi3, chi4, t0, t4, t3, r3, theta, q4, q3, y)
    out = _normalized(g, amp * np.exp(1j * p_disp * s))
    if out.boundary_amplitude() > 1e-6:
        flags.append("boundary")
    target = oracle(state, quartic_effective_chi(chi4, t0, t4), 4)
    fid = fidelity(out, target)
    return TrajectoryRecord(
        index, "quartic", {"q4": q4, "q3": q3, "y": y},
        {"r3_over_t3": ff["r3_over_t3"], "t3": t3, "theta": theta, "p_disp": p_disp,
         "carrier_samples": M},
        fid, flags, resamples=attempt, output=out)


def run_trajectory(config: CircuitConfig, index: int, state: ModeState | None = None) -> TrajectoryRecord:
    state = state if state is not None else config.input_state()
    if config.gate == "cubic":
        return run_cubic(state, config, index)
    for attempt in range(config.resample_budget + 1):
        try:
            return run_quartic(state, config, index, attempt=attempt)
        except gains.RotationGuardError:
            continue
    raise CircuitError(f"trajectory {index}: rotation guard tripped {config.resample_budget + 1} times")


def run_many(config: CircuitConfig, threads: int = 1) -> list:
    """All trajectories of one configuration, ordered by index regardless of threads."""
    state = config.input_state()
    idx = range(config.trajectories)
    if threads <= 1:
        return [run_trajectory(config, i, state) for i in idx]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda i: run_trajectory(config, i, state), idx))


def bootstrap_ci(values: Sequence[float], seed: int = 0, n_boot: int = 2000,
                 level: float = 0.95) -> tuple[float, float]:
    """Percentile bootstrap interval of the mean."""
    v = np.asarray(values, dtype=float)
    rng = np.random.default_rng(seed)
    means = v[rng.integers(0, v.size, size=(n_boot, v.size))].mean(axis=1)
    a = 0.5 * (1 - level)
    return float(np.quantile(means, a)), float(np.quantile(means, 1 - a))


def summarize(records: list, seed: int = 0, squeezing_db: float | None = None) -> dict:
    """Aggregate statistics of one sweep point; empty input gives null statistics."""
    f = np.array([r.fidelity for r in records], dtype=float)
    flag_counts: dict = {}
    for r in records:
        for fl in r.flags:
            flag_counts[fl] = flag_counts.get(fl, 0) + 1
    out = {"squeezing_db": squeezing_db, "n": int(f.size),
           "resamples": int(sum(r.resamples for r in records)), "flag_counts": flag_counts}
    if f.size == 0:
        out.update(mean_fidelity=None, std_fidelity=None, min_fidelity=None, max_fidelity=None,
                   mean_infidelity=None, ci95=None)
        return out
    out.update(mean_fidelity=float(f.mean()), std_fidelity=float(f.std()),
               min_fidelity=float(f.min()), max_fidelity=float(f.max()),
               mean_infidelity=float(1 - f.mean()), ci95=list(bootstrap_ci(f, seed)))
    return out


def run_config(config: CircuitConfig, threads: int = 1) -> tuple[list, list]:
    """Every sweep point of a configuration: (records, per-point summaries)."""
    records, points = [], []
    for db, cfg in config.sweep_points():
        recs = run_many(cfg, threads)
        for r in recs:
            r.sweep_db = db
        records.extend(recs)
        points.append(summarize(recs, config.seed, db))
    return records, points


def quadrature_noise(records: list) -> dict:
    """Total x-variance of the outputs: mean conditional variance + variance of conditional means."""
    means, varis = [], []
    for r in records:
        m = moments(r.output)
        means.append(m["mean"][0])
        varis.append(m["cov"][0, 0])
    means = np.array(means)
    return {"total_x_var": float(np.mean(varis) + np.var(means)),
            "mean_cond_var": float(np.mean(varis))}


# ---------------------------------------------------------------------------
# symbolic certification


def certify_qnd(N: int, scheme: str = "qnd-inline", outcomes: gains.OutcomeVector | None = None) -> dict:
    """Exact residual of the derived relation after the gain program's rewrite rules."""
    _, p = alg.derive_final_relation(N, scheme if scheme != "beamsplitter" else "beamsplitter")
    if scheme == "beamsplitter":
        p = p.subs(gains.bs_substitution(N))
    target = QuadPoly.sym(Symbol("chi", N))
    res = alg.residual(p, N, target).reduce(gains.qnd_rules(N))
    if outcomes is not None:
        res = res.subs({Symbol("q", k): QuadPoly.lift(v) for k, v in outcomes.q.items()})
    report = {"order": N, "scheme": scheme, "residual": res.to_text(), "zero": res.is_zero(),
              "conditions": [f"z({N})^{N} = chi({N})"] + [
                  f"z({k + 1})^{k + 1} = {gains.equation_rhs(N, k).to_text()}" for k in range(N - 2, -1, -1)]}
    return report


def derive_quartic() -> dict:
    """Heisenberg run of the quartic optical scheme with its feed-forward."""
    P = QuadPoly.sym
    f = alg.HeisenbergFrame.fresh(["s", "A0", "A4", "A3"])
    f = alg.bs_apply(f, "A0", "s", P(Symbol("t", 0)), P(Symbol("r", 0)))
    f = alg.bs_apply(f, "A0", "A4", P(Symbol("t", 4)), P(Symbol("r", 4)))
    f = alg.measure_x(f, "A4", Symbol("q", 4))
    f = alg.bs_apply(f, "A0", "A3", P(Symbol("t", 3)), P(Symbol("r", 3)))
    f = alg.measure_x(f, "A3", Symbol("q", 3))
    f = alg.measure_rotated(f, "A0", Symbol("y"), Symbol("p_A", 0))
    modes = dict(f.modes)
    modes["s"] = (f.x("s"), f.p("s") + gains.quartic_displacement_poly())
    f = f._replace(modes=modes)
    f = alg.substitute_ancilla_nonlinearity(f, 4, 4 * P(Symbol("chi", 4)), keep_noise=True)
    f = alg.substitute_ancilla_nonlinearity(f, 3, 3 * P(Symbol("chi", 3)), keep_noise=True)
    return {"frame": f, "x_out": f.x("s"), "p_out": f.p("s")}


def quartic_expected() -> tuple[QuadPoly, QuadPoly]:
    """Target output operators, with the cube-root factor written as r3 / (t3 r4)."""
    P = QuadPoly.sym
    t0, r0, t4, r4, t3, r3 = (P(Symbol(k, i)) for k, i in
                              (("t", 0), ("r", 0), ("t", 4), ("r", 4), ("t", 3), ("r", 3)))
    x_in, x_a0 = P(Symbol("x_in")), P(Symbol("x_A", 0))
    x_out = t0 * x_in - r0 * x_a0
    p_out = ((P(Symbol("p_in")) + 4 * P(Symbol("chi", 4)) * r0 * r4 ** 4 / t4 ** 4 * (r0 * x_in + t0 * x_a0) ** 3) / t0
             + r0 * r4 / (t0 * t4) * P(Symbol("n_A", 4))
             + r0 * r4 / (t0 * t4) * (r3 / (t3 * r4)) * P(Symbol("n_A", 3)))
    return x_out, p_out


QUARTIC_PAIRS = [(Symbol("t", k), Symbol("r", k)) for k in (0, 4, 3)]


def certify_quartic(tan_theta: QuadPoly | None = None) -> dict:
    d = derive_quartic()
    x_exp, p_exp = quartic_expected()
    pairs = QUARTIC_PAIRS
    dx = (d["x_out"] - x_exp).reduce_unit_pairs(pairs)
    diff = d["p_out"] - p_exp
    diff = diff.subs({Symbol("tan_theta"): gains.quartic_tan_theta() if tan_theta is None else tan_theta})
    diff = diff.subs({Symbol("chi", 4): gains.quartic_chi4_elimination()})
    diff = diff.clear_denominators([r for _, r in pairs]).reduce_unit_pairs(pairs)
    p = d["p_out"]
    noise4 = p.coeff(Symbol("n_A", 4))
    noise3 = p.coeff(Symbol("n_A", 3))
    return {
        "scheme": "quartic-optical",
        "x_zero": dx.is_zero(),
        "p_zero": diff.is_zero(),
        "zero": dx.is_zero() and diff.is_zero(),
        "residual_terms": len(diff.terms),
        "noise_A4_coefficient": noise4.to_text(),
        "noise_A3_coefficient": noise3.to_text(),
        "cube_root_substitution": "r(3)/t(3) = r(4) * cbrt(4 chi(4) (-q(4)) / (chi(3) t(4))), "
                                  "-q(4) = r(0) r(4) x_in + t(0) r(4) x_A(0) - t(4) x_A(4) (pre-readout)",
        "relations": [f"{r.outcome} = {r.expr.to_text()}" for r in d["frame"].relations],
    }


def symbolic_run(N: int, scheme: str) -> dict:
    if scheme == "quartic-optical":
        if N != 4:
            raise alg.AlgebraError("the optical scheme is defined for N = 4")
        return certify_quartic()
    return certify_qnd(N, scheme)

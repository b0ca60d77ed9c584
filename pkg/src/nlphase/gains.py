"""Feed-forward gain programs for the adaptive nonlinear-gate circuits.

The QND chain leaves the signal with

    p_out = p_in + sum_k x_in**k * sum_{m=k+1}^{N} C(m-1, k) q_m**(m-1-k) z_m**(k+1)

and the gate is realized when every coefficient below x_in**(N-1) vanishes
while the top one equals the target.  Equation k only involves z_{k+1} and
gains of higher order, so it is solved top-down.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .algebra import QuadPoly, Symbol

TOL = 1e-10
COS_GUARD = 1e-6


class GainError(ValueError):
    def __init__(self, message, equation=None):
        super().__init__(message if equation is None else f"{message} (equation k={equation})")
        self.equation = equation


class RotationGuardError(GainError):
    """|cos(theta)| too small; the trajectory should be resampled."""


@dataclass
class OutcomeVector:
    q: dict = field(default_factory=dict)
    y: float | None = None

    def __post_init__(self):
        self.q = {int(k): v for k, v in self.q.items()}
        if 1 in self.q:
            raise GainError("q(1) is never measured")

    @classmethod
    def from_json(cls, data: Mapping) -> "OutcomeVector":
        def num(v):
            return Fraction(v) if isinstance(v, str) else v
        return cls(q={int(k): num(v) for k, v in data.get("q", {}).items()},
                   y=num(data["y"]) if data.get("y") is not None else None)


@dataclass
class GainStep:
    order: int
    kind: str            # coupling | ratio | phase | displacement
    power: int           # the step solves value**power = rhs
    rhs: QuadPoly        # closed form in earlier outcomes and higher-order gains
    value: complex | float | None = None
    flags: list = field(default_factory=list)

    def to_json(self) -> dict:
        val = self.value
        if isinstance(val, complex):
            val = {"re": val.real, "im": val.imag}
        return {
            "order": self.order,
            "kind": self.kind,
            "expr": {"op": "root", "degree": self.power, "arg": {"op": "poly", "text": self.rhs.to_text()}},
            "value": val,
            "flags": list(self.flags),
        }


@dataclass
class GainProgram:
    N: int
    scheme: str
    target: object
    steps: list
    convention: str = "coefficient"
    flags: list = field(default_factory=list)

    @property
    def non_real(self) -> bool:
        return "non-real" in self.flags

    def value(self, kind: str, order: int):
        for s in self.steps:
            if s.kind == kind and s.order == order:
                return s.value
        raise KeyError((kind, order))

    def to_json(self) -> dict:
        tgt = self.target
        if isinstance(tgt, Fraction):
            tgt = f"{tgt.numerator}/{tgt.denominator}"
        return {"order": self.N, "scheme": self.scheme, "convention": self.convention,
                "target": tgt, "flags": list(self.flags),
                "steps": [s.to_json() for s in self.steps]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


GAIN_PROGRAM_SCHEMA = {
    "type": "object",
    "required": ["order", "scheme", "convention", "target", "steps", "flags"],
    "properties": {
        "order": {"type": "integer", "minimum": 3},
        "scheme": {"enum": ["qnd", "beamsplitter", "quartic-optical"]},
        "convention": {"type": "string"},
        "flags": {"type": "array", "items": {"type": "string"}},
        "steps": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["order", "kind", "expr", "value", "flags"],
                "properties": {
                    "order": {"type": "integer", "minimum": 0},
                    "kind": {"enum": ["coupling", "ratio", "phase", "displacement"]},
                    "expr": {"type": "object", "required": ["op"]},
                },
            },
        },
    },
}


# ---------------------------------------------------------------------------
# QND chain


def equation_rhs(N: int, k: int) -> QuadPoly:
    """z_{k+1}**(k+1) = -sum_{m=k+2}^{N} C(m-1, k) q_m**(m-1-k) z_m**(k+1)."""
    out = QuadPoly()
    for m in range(k + 2, N + 1):
        term = QuadPoly.const(-math.comb(m - 1, k)) * QuadPoly.sym(Symbol("z", m), k + 1)
        if m - 1 - k:
            term = term * QuadPoly.sym(Symbol("q", m), m - 1 - k)
        out = out + term
    return out


def qnd_rules(N: int, target: QuadPoly | None = None) -> dict:
    """Rewrite rules z_N**N -> target and z_{k+1}**(k+1) -> rhs_k."""
    target = QuadPoly.sym(Symbol("chi", N)) if target is None else QuadPoly.lift(target)
    rules = {Symbol("z", N): (N, target)}
    for k in range(N - 2, -1, -1):
        rules[Symbol("z", k + 1)] = (k + 1, equation_rhs(N, k))
    return rules


def _num(v):
    return float(v) if isinstance(v, Fraction) else v


def real_root(v, n: int):
    """Real n-th root when it exists, else the principal complex root; returns (root, is_real)."""
    if isinstance(v, complex):
        if abs(v.imag) > TOL * max(1.0, abs(v)):
            return cmath.exp(cmath.log(v) / n) if v != 0 else 0.0, False
        v = v.real
    v = float(v)
    if v == 0:
        return 0.0, True
    if n % 2 == 1:
        return math.copysign(abs(v) ** (1.0 / n), v), True
    if v > 0:
        return v ** (1.0 / n), True
    return cmath.exp(cmath.log(complex(v)) / n), False


def solve_qnd_gains(N: int, chi_N, outcomes: OutcomeVector, allow_complex: bool = True) -> GainProgram:
    if N < 3:
        raise GainError("order must be at least 3")
    missing = [k for k in range(2, N + 1) if k not in outcomes.q]
    if missing:
        raise GainError(f"missing outcomes q{missing}")
    steps: list[GainStep] = []
    flags: list[str] = []
    zs: dict[int, complex | float] = {}
    if chi_N == 0:
        for k in range(N, 0, -1):
            rhs = QuadPoly.sym(Symbol("chi", N)) if k == N else equation_rhs(N, k - 1)
            steps.append(GainStep(k, "coupling", k, rhs, 0.0))
            zs[k] = 0.0
        return GainProgram(N, "qnd", chi_N, steps, flags=["identity"])

    vals = {Symbol("q", m): _num(v) for m, v in outcomes.q.items()}
    root, ok = real_root(_num(chi_N), N)
    if not ok:
        if not allow_complex:
            raise GainError(f"no real root of order {N} for target {chi_N}", equation=N - 1)
        flags.append("non-real")
    zs[N] = root
    steps.append(GainStep(N, "coupling", N, QuadPoly.sym(Symbol("chi", N)), root,
                          [] if ok else ["non-real"]))
    for k in range(N - 2, -1, -1):
        rhs = equation_rhs(N, k)
        env = dict(vals)
        env.update({Symbol("z", m): zs[m] for m in range(k + 2, N + 1)})
        r = rhs.evaluate(env)
        root, ok = real_root(r, k + 1)
        if not ok:
            if not allow_complex:
                raise GainError(f"even root of negative value {r}", equation=k)
            if "non-real" not in flags:
                flags.append("non-real")
        zs[k + 1] = root
        steps.append(GainStep(k + 1, "coupling", k + 1, rhs, root, [] if ok else ["non-real"]))
    return GainProgram(N, "qnd", chi_N, steps, flags=flags)


def relation_coefficients(N: int, zs: Mapping[int, complex], qs: Mapping[int, float]) -> list:
    """Numeric coefficients of x_in**k (k = 0..N-1) left in p_out by the QND chain."""
    coeffs = []
    for k in range(N):
        c = 0
        for m in range(k + 1, N + 1):
            qpow = m - 1 - k
            c += math.comb(m - 1, k) * (qs[m] ** qpow if qpow else 1) * zs[m] ** (k + 1)
        coeffs.append(c)
    return coeffs


def numeric_residual(program: GainProgram, outcomes: OutcomeVector) -> list:
    """Per-power residuals relative to the largest contributing term."""
    N = program.N
    zs = {s.order: s.value for s in program.steps if s.kind == "coupling"}
    if program.scheme == "beamsplitter":
        zs = {s.order: s.value[1] / s.value[0] for s in program.steps if s.kind == "ratio"}
    qs = {m: _num(v) for m, v in outcomes.q.items()}
    coeffs = relation_coefficients(N, zs, qs)
    target = _num(program.target)
    out = []
    for k, c in enumerate(coeffs):
        scale = max([abs(math.comb(m - 1, k) * (qs[m] ** (m - 1 - k) if m - 1 - k else 1)
                         * zs[m] ** (k + 1)) for m in range(k + 1, N + 1)] + [1e-300])
        want = target if k == N - 1 else 0
        out.append(abs(c - want) / max(scale, abs(want), 1e-300))
    return out


def solve_bs_ratios(N: int, chi_N, outcomes: OutcomeVector) -> GainProgram:
    """Beam-splitter ratios whose effective gains r_k / t_k reproduce the QND program.

    Outcomes are the normalized readouts q_k / t_k.
    """
    zprog = solve_qnd_gains(N, chi_N, outcomes, allow_complex=True)
    steps = []
    for s in zprog.steps:
        zv = s.value
        if isinstance(zv, complex):
            if abs(zv.imag) > TOL * max(1.0, abs(zv)):
                raise GainError(f"effective gain {zv} of order {s.order} is not real; "
                                "no beam splitter realizes it", equation=s.order - 1)
            zv = zv.real
        t = 1.0 / math.sqrt(1.0 + zv * zv)
        steps.append(GainStep(s.order, "ratio", s.power, s.rhs, (t, zv * t)))
    return GainProgram(N, "beamsplitter", chi_N, steps, flags=list(zprog.flags))


def bs_substitution(N: int) -> dict:
    """r_k -> z_k t_k and q_k -> t_k q_k: ratio inversion with readouts normalized by t_k.

    The beam-splitter program consumes q_k / t_k, which is what a QND stage
    of gain r_k / t_k would have read out.
    """
    out = {}
    for k in range(1, N + 1):
        tk = QuadPoly.sym(Symbol("t", k))
        out[Symbol("r", k)] = QuadPoly.sym(Symbol("z", k)) * tk
        out[Symbol("q", k)] = QuadPoly.sym(Symbol("q", k)) * tk
    return out


# ---------------------------------------------------------------------------
# quartic optical scheme


def _split(t):
    if not 0 < t <= 1:
        raise GainError(f"transmissivity {t} outside (0, 1]")
    return t, math.sqrt(max(0.0, 1.0 - t * t))


def quartic_feedforward(chi3, chi4, t0, t4, q4, q3=None) -> dict:
    """Second splitting ratio from q4 and, once q3 is known, the readout phase."""
    if chi3 == 0:
        raise GainError("chi3 = 0 leaves the second splitting ratio undefined")
    _split(t0)
    t4, r4 = _split(t4)
    rho = real_root(-4.0 * chi4 * r4 ** 3 * q4 / (chi3 * t4), 3)[0]
    t3 = 1.0 / math.sqrt(1.0 + rho * rho)
    r3 = rho * t3
    out = {"r3_over_t3": rho, "t3": t3, "r3": r3}
    if q3 is not None:
        tan_theta = (-6.0 * chi3 * r3 ** 2 / t3 * q3
                     - 12.0 * chi4 * r4 ** 2 * t3 ** 2 / t4 ** 2 * (t4 ** 2 - r4 ** 2) * q4 ** 2)
        out["tan_theta"] = tan_theta
        out["theta"] = math.atan(tan_theta)
    return out


def quartic_displacement(chi3, chi4, t0, t4, t3, r3, theta, q4, q3, q2) -> float:
    """Final p displacement of the signal; q2 is the rotated-quadrature readout y."""
    c = math.cos(theta)
    if abs(c) < COS_GUARD:
        raise RotationGuardError("rotation too close to pi/2")
    t0, r0 = _split(t0)
    t4, r4 = _split(t4)
    tan_theta = math.tan(theta)
    return (-4.0 * chi4 * r0 * r4 / (t0 * t4 ** 4) * q4 ** 3
            - 3.0 * chi3 * r0 * r3 / (t0 * t4 * t3 ** 3) * (r4 * r3 / t4 * q4 + q3) ** 2
            - r0 / (t0 * t4 ** 2 * t3 ** 2) * tan_theta * (r4 * q4 + t4 * r3 * q3)
            + r0 / (t0 * t4 * t3 * c) * q2)


def quartic_program(chi3, chi4, t0, t4, q4, q3, y) -> GainProgram:
    """Numeric quartic-optical program for one set of readouts."""
    ff = quartic_feedforward(chi3, chi4, t0, t4, q4, q3)
    pd = quartic_displacement(chi3, chi4, t0, t4, ff["t3"], ff["r3"], ff["theta"], q4, q3, y)
    steps = [
        GainStep(3, "ratio", 3, quartic_ratio_cubed(), (ff["t3"], ff["r3"])),
        GainStep(2, "phase", 1, quartic_tan_theta(), ff["theta"]),
        GainStep(1, "displacement", 1, quartic_displacement_poly(), pd),
    ]
    return GainProgram(4, "quartic-optical", chi4, steps, convention="quartic-optical")


# symbolic forms used by the exact certification

def _S(kind, index=None):
    return QuadPoly.sym(Symbol(kind, index))


def quartic_ratio_cubed() -> QuadPoly:
    """(r3/t3)**3 = -4 chi4 r4**3 q4 / (chi3 t4)."""
    return -4 * _S("chi", 4) * _S("r", 4) ** 3 * _S("q", 4) / (_S("chi", 3) * _S("t", 4))


def quartic_tan_theta() -> QuadPoly:
    t3, r3, t4, r4 = _S("t", 3), _S("r", 3), _S("t", 4), _S("r", 4)
    return (-6 * _S("chi", 3) * r3 ** 2 / t3 * _S("q", 3)
            - 12 * _S("chi", 4) * r4 ** 2 * t3 ** 2 / t4 ** 2 * (t4 ** 2 - r4 ** 2) * _S("q", 4) ** 2)


def quartic_displacement_poly() -> QuadPoly:
    """The displacement with q2 bound to the rotated readout y."""
    t0, r0, t4, r4, t3, r3 = (_S(k, i) for k, i in
                              (("t", 0), ("r", 0), ("t", 4), ("r", 4), ("t", 3), ("r", 3)))
    q4, q3 = _S("q", 4), _S("q", 3)
    chi3, chi4 = _S("chi", 3), _S("chi", 4)
    return (-4 * chi4 * r0 * r4 / (t0 * t4 ** 4) * q4 ** 3
            - 3 * chi3 * r0 * r3 / (t0 * t4 * t3 ** 3) * (r4 * r3 / t4 * q4 + q3) ** 2
            - r0 / (t0 * t4 ** 2 * t3 ** 2) * _S("tan_theta") * (r4 * q4 + t4 * r3 * q3)
            + r0 / (t0 * t4 * t3 * _S("cos_theta")) * _S("y"))


def quartic_chi4_elimination() -> QuadPoly:
    """chi4 expressed through the ratio condition: -chi3 t4 r3**3 / (4 r4**3 q4 t3**3)."""
    return (-_S("chi", 3) * _S("t", 4) * _S("r", 3) ** 3
            / (4 * _S("r", 4) ** 3 * _S("q", 4) * _S("t", 3) ** 3))

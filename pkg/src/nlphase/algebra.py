"""Exact Heisenberg-picture algebra for adaptive quadrature-phase circuits.

Operator expressions are Laurent polynomials with exact rational
coefficients over two families of symbols: quadrature operators of the
modes (``x_in``, ``p_in``, ``x_A(k)``, ``p_A(k)``, ``n_A(k)``) and classical
quantities (outcomes, gains, splitting ratios, trig of measurement phases).
Circuit elements never multiply two operator polynomials together; they
only apply linear symplectic updates and substitute classical relations,
so the commutative representation is faithful.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

# Total order of symbol kinds; symbols sort by (rank of kind, index).
KIND_ORDER = (
    "x_in", "p_in", "x_A", "p_A", "n_A",
    "q", "y", "z", "t", "r", "chi", "theta", "cos_theta", "tan_theta",
)
INDEXED = {"x_A", "p_A", "n_A", "q", "z", "t", "r", "chi"}
OPERATOR_KINDS = {"x_in", "p_in", "x_A", "p_A", "n_A"}
_RANK = {k: i for i, k in enumerate(KIND_ORDER)}


class AlgebraError(ValueError):
    pass


@dataclass(frozen=True)
class Symbol:
    kind: str
    index: int | None = None

    def __post_init__(self):
        if self.kind not in _RANK:
            raise AlgebraError(f"unknown symbol kind {self.kind!r}")
        if (self.kind in INDEXED) != (self.index is not None):
            raise AlgebraError(f"index mismatch for {self.kind!r}: {self.index!r}")
        if self.index is not None and self.index < 0:
            raise AlgebraError("symbol index must be nonnegative")

    @property
    def sort_key(self):
        return (_RANK[self.kind], -1 if self.index is None else self.index)

    def __lt__(self, other: "Symbol"):
        return self.sort_key < other.sort_key

    @property
    def is_operator(self) -> bool:
        return self.kind in OPERATOR_KINDS

    def __str__(self):
        return self.kind if self.index is None else f"{self.kind}({self.index})"

    @classmethod
    def parse(cls, text: str) -> "Symbol":
        if "(" in text:
            kind, rest = text.split("(", 1)
            return cls(kind, int(rest.rstrip(")")))
        return cls(text)


def _mono(items: Iterable[tuple[Symbol, int]]) -> tuple:
    return tuple(sorted(((s, e) for s, e in items if e != 0), key=lambda se: se[0].sort_key))


def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for s, e in b:
        d[s] = d.get(s, 0) + e
    return _mono(d.items())


def _coerce_coeff(c):
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    if isinstance(c, float):
        # floats are admitted only through exact conversion
        return Fraction(c)
    raise TypeError(f"unsupported coefficient {c!r}")


class QuadPoly:
    """Immutable Laurent polynomial with exact rational coefficients."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[tuple, Fraction] | None = None):
        clean = {}
        for mono, c in (terms or {}).items():
            if c != 0:
                for s, e in mono:
                    if e < 0 and s.is_operator:
                        raise AlgebraError(f"negative power of operator {s}")
                clean[mono] = c
        self._terms = dict(sorted(clean.items(), key=lambda kv: _mono_key(kv[0])))
        self._hash = None

    # construction
    @classmethod
    def const(cls, c) -> "QuadPoly":
        return cls({(): _coerce_coeff(c)})

    @classmethod
    def sym(cls, s: Symbol | str, power: int = 1) -> "QuadPoly":
        if isinstance(s, str):
            s = Symbol.parse(s)
        return cls({_mono([(s, power)]): Fraction(1)})

    @classmethod
    def lift(cls, v) -> "QuadPoly":
        if isinstance(v, QuadPoly):
            return v
        if isinstance(v, Symbol):
            return cls.sym(v)
        return cls.const(v)

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    # arithmetic
    def __add__(self, other):
        other = QuadPoly.lift(other)
        d = dict(self._terms)
        for m, c in other._terms.items():
            d[m] = d.get(m, 0) + c
        return QuadPoly(d)

    __radd__ = __add__

    def __neg__(self):
        return QuadPoly({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-QuadPoly.lift(other))

    def __rsub__(self, other):
        return QuadPoly.lift(other) - self

    def __mul__(self, other):
        other = QuadPoly.lift(other)
        d: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                d[m] = d.get(m, 0) + c1 * c2
        return QuadPoly(d)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("integer powers only")
        if n < 0:
            return self.inverse_monomial() ** (-n)
        out, base = QuadPoly.const(1), self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __truediv__(self, other):
        other = QuadPoly.lift(other)
        return self * other.inverse_monomial()

    def __rtruediv__(self, other):
        return QuadPoly.lift(other) * self.inverse_monomial()

    def inverse_monomial(self) -> "QuadPoly":
        """Inverse of a single classical monomial (the only invertible elements used)."""
        if len(self._terms) != 1:
            raise AlgebraError(f"cannot invert non-monomial {self}")
        (m, c), = self._terms.items()
        if any(s.is_operator for s, _ in m):
            raise AlgebraError(f"cannot invert operator monomial {self}")
        return QuadPoly({_mono((s, -e) for s, e in m): 1 / c})

    def __eq__(self, other):
        try:
            other = QuadPoly.lift(other)
        except TypeError:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(self._terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    # inspection
    def symbols(self) -> set[Symbol]:
        return {s for m in self._terms for s, _ in m}

    def is_classical(self) -> bool:
        return not any(s.is_operator for s in self.symbols())

    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    def constant_value(self):
        if not self._terms:
            return Fraction(0)
        if set(self._terms) == {()}:
            return self._terms[()]
        raise AlgebraError(f"{self} is not constant")

    def collect(self, s: Symbol) -> dict[int, "QuadPoly"]:
        """Group terms by the power of ``s``; values exclude ``s``."""
        out: dict[int, dict] = {}
        for m, c in self._terms.items():
            d = dict(m)
            e = d.pop(s, 0)
            out.setdefault(e, {})[_mono(d.items())] = c
        return {e: QuadPoly(t) for e, t in sorted(out.items())}

    def coeff(self, s: Symbol, power: int = 1) -> "QuadPoly":
        return self.collect(s).get(power, QuadPoly())

    def linear_parts(self) -> dict[Symbol, "QuadPoly"]:
        """Coefficients of operator symbols appearing to first power alone."""
        out: dict[Symbol, dict] = {}
        for m, c in self._terms.items():
            ops = [(s, e) for s, e in m if s.is_operator]
            if len(ops) == 1 and ops[0][1] == 1:
                rest = _mono((s, e) for s, e in m if not s.is_operator)
                out.setdefault(ops[0][0], {})[rest] = c
        return {s: QuadPoly(t) for s, t in out.items()}

    def derivative(self, s: Symbol) -> "QuadPoly":
        d = {}
        for m, c in self._terms.items():
            dm = dict(m)
            e = dm.get(s, 0)
            if e == 0:
                continue
            dm[s] = e - 1
            key = _mono(dm.items())
            d[key] = d.get(key, 0) + c * e
        return QuadPoly(d)

    # substitution and reduction
    def subs(self, mapping: Mapping[Symbol, object]) -> "QuadPoly":
        mapping = {k: QuadPoly.lift(v) for k, v in mapping.items()}
        cache: dict = {}

        def power(s, e):
            key = (s, e)
            if key not in cache:
                cache[key] = mapping[s] ** e
            return cache[key]

        out = QuadPoly()
        acc: dict = {}
        for m, c in self._terms.items():
            keep = []
            factor = None
            for s, e in m:
                if s in mapping:
                    p = power(s, e)
                    factor = p if factor is None else factor * p
                else:
                    keep.append((s, e))
            base = _mono(keep)
            if factor is None:
                acc[base] = acc.get(base, 0) + c
            else:
                out = out + QuadPoly({base: c}) * factor
        return out + QuadPoly(acc)

    def reduce(self, rules: Mapping[Symbol, tuple[int, "QuadPoly"]], max_rounds: int = 64) -> "QuadPoly":
        """Rewrite ``s**n -> rhs`` for every rule ``s: (n, rhs)`` until fixpoint."""
        poly = self
        for _ in range(max_rounds):
            changed = False
            out = QuadPoly()
            plain: dict = {}
            for m, c in poly._terms.items():
                d = dict(m)
                factor = QuadPoly.const(1)
                hit = False
                for s, (n, rhs) in rules.items():
                    e = d.get(s, 0)
                    if e >= n:
                        k, rem = divmod(e, n)
                        d[s] = rem
                        factor = factor * rhs ** k
                        hit = True
                if hit:
                    changed = True
                    out = out + QuadPoly({_mono(d.items()): c}) * factor
                else:
                    plain[m] = c
            poly = out + QuadPoly(plain)
            if not changed:
                return poly
        raise AlgebraError("rewrite rules did not terminate")

    def reduce_unit_pairs(self, pairs: Iterable[tuple[Symbol, Symbol]]) -> "QuadPoly":
        """Normal form modulo t**2 + r**2 = 1 for each (t, r): r appears to power 0 or 1."""
        rules = {r: (2, 1 - QuadPoly.sym(t, 2)) for t, r in pairs}
        for r in rules:
            if any(dict(m).get(r, 0) < 0 for m in self._terms):
                raise AlgebraError(f"negative power of {r} blocks unit-pair reduction")
        return self.reduce(rules)

    def clear_denominators(self, syms: Iterable[Symbol]) -> "QuadPoly":
        """Multiply by the monomial that makes every listed symbol's power nonnegative."""
        lift = {}
        for s in syms:
            lo = min((dict(m).get(s, 0) for m in self._terms), default=0)
            if lo < 0:
                lift[s] = -lo
        if not lift:
            return self
        return self * QuadPoly({_mono(lift.items()): Fraction(1)})

    def evaluate(self, values: Mapping[Symbol, object]):
        total = 0
        for m, c in self._terms.items():
            v = c
            for s, e in m:
                v = v * values[s] ** e
            total = total + v
        return total

    # text form
    def to_text(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for m, c in self._terms.items():
            coeff = f"{c.numerator}" if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
            factors = [str(s) if e == 1 else f"{s}^{e}" for s, e in m]
            if factors and c == 1:
                parts.append("*".join(factors))
            else:
                parts.append("*".join([coeff] + factors))
        return " + ".join(parts)

    @classmethod
    def from_text(cls, text: str) -> "QuadPoly":
        text = text.strip()
        if text == "0":
            return cls()
        terms: dict = {}
        for part in text.split(" + "):
            coeff, *factors = part.split("*")
            if not coeff.lstrip("-").replace("/", "").isdigit():
                coeff, factors = "1", [coeff] + factors
            items = []
            for f in factors:
                name, _, exp = f.partition("^")
                items.append((Symbol.parse(name), int(exp) if exp else 1))
            m = _mono(items)
            terms[m] = terms.get(m, 0) + Fraction(coeff)
        return cls(terms)

    def __repr__(self):
        return f"QuadPoly({self.to_text()!r})"

    __str__ = to_text


def _mono_key(m: tuple):
    # degree-ascending then lexicographic on (symbol, exponent)
    return (sum(abs(e) for _, e in m), tuple((s.sort_key, e) for s, e in m))


def S(text: str) -> QuadPoly:
    """Shorthand: ``S("z(3)")`` is the polynomial consisting of that symbol."""
    return QuadPoly.sym(Symbol.parse(text))


# ---------------------------------------------------------------------------
# Heisenberg frame


def _mode_symbols(mode: str) -> tuple[Symbol, Symbol]:
    if mode == "s":
        return Symbol("x_in"), Symbol("p_in")
    if mode.startswith("A") and mode[1:].isdigit():
        k = int(mode[1:])
        return Symbol("x_A", k), Symbol("p_A", k)
    raise AlgebraError(f"unknown mode id {mode!r}")


@dataclass(frozen=True)
class Relation:
    """A recorded measurement: ``outcome = expr``, solved for ``eliminated``."""
    outcome: Symbol
    expr: QuadPoly
    eliminated: Symbol
    solution: QuadPoly


@dataclass(frozen=True)
class HeisenbergFrame:
    modes: dict = field(default_factory=dict)  # mode id -> (x, p)
    retired: frozenset = frozenset()
    relations: tuple = ()
    unit_pairs: tuple = ()  # (t, r) symbol pairs bound by beam splitters

    @classmethod
    def fresh(cls, mode_ids: Iterable[str]) -> "HeisenbergFrame":
        modes = {}
        for m in mode_ids:
            xs, ps = _mode_symbols(m)
            modes[m] = (QuadPoly.sym(xs), QuadPoly.sym(ps))
        return cls(modes=modes)

    def x(self, mode: str) -> QuadPoly:
        return self._get(mode)[0]

    def p(self, mode: str) -> QuadPoly:
        return self._get(mode)[1]

    def _get(self, mode):
        if mode not in self.modes:
            raise AlgebraError(f"unknown mode id {mode!r}")
        return self.modes[mode]

    def _live(self, mode):
        self._get(mode)
        if mode in self.retired:
            raise AlgebraError(f"mode {mode!r} already measured")

    def relation_for(self, k: int) -> Relation:
        for rel in self.relations:
            if rel.eliminated == Symbol("x_A", k):
                return rel
        raise AlgebraError(f"ancilla A{k} not yet measured")

    def _replace(self, **changes) -> "HeisenbergFrame":
        data = dict(modes=self.modes, retired=self.retired, relations=self.relations,
                    unit_pairs=self.unit_pairs)
        data.update(changes)
        return HeisenbergFrame(**data)

    def map_all(self, fn) -> "HeisenbergFrame":
        modes = {m: (fn(x), fn(p)) for m, (x, p) in self.modes.items()}
        return self._replace(modes=modes)


def _classical(v, what):
    v = QuadPoly.lift(v)
    if not v.is_classical():
        raise AlgebraError(f"{what} must be classical, got {v}")
    return v


def qnd_apply(frame: HeisenbergFrame, signal: str, ancilla: str, gain) -> HeisenbergFrame:
    """x_s, p_s + g p_A, x_A - g x_s, p_A."""
    g = _classical(gain, "QND gain")
    frame._live(signal)
    frame._live(ancilla)
    xs, ps = frame.modes[signal]
    xa, pa = frame.modes[ancilla]
    modes = dict(frame.modes)
    modes[signal] = (xs, ps + g * pa)
    modes[ancilla] = (xa - g * xs, pa)
    return frame._replace(modes=modes)


# Orientation of the beam splitter: the first mode keeps +r, the second gets -r.
BS_SIGN = -1


def bs_apply(frame: HeisenbergFrame, m1: str, m2: str, t, r) -> HeisenbergFrame:
    """x1 <- t x1 + r x2, x2 <- t x2 - r x1 (same for p)."""
    t = _classical(t, "transmissivity")
    r = _classical(r, "reflectivity")
    frame._live(m1)
    frame._live(m2)
    x1, p1 = frame.modes[m1]
    x2, p2 = frame.modes[m2]
    modes = dict(frame.modes)
    modes[m1] = (t * x1 + r * x2, t * p1 + r * p2)
    modes[m2] = (t * x2 + BS_SIGN * r * x1, t * p2 + BS_SIGN * r * p1)
    pairs = frame.unit_pairs
    if t.is_monomial() and r.is_monomial() and len(t.symbols()) == 1 and len(r.symbols()) == 1:
        (ts,), (rs,) = t.symbols(), r.symbols()
        if (ts, rs) not in pairs:
            pairs = pairs + ((ts, rs),)
    return frame._replace(modes=modes, unit_pairs=pairs)


def gaussian_correct(frame: HeisenbergFrame, mode: str, squeeze, displace_p=0,
                     displace_x=0) -> HeisenbergFrame:
    """x <- x / squeeze + displace_x, p <- squeeze * p + displace_p."""
    s = _classical(squeeze, "squeeze")
    if s.is_zero():
        raise AlgebraError("squeeze factor is symbolically zero")
    dp = _classical(displace_p, "displacement")
    dx = _classical(displace_x, "displacement")
    frame._live(mode)
    x, p = frame.modes[mode]
    modes = dict(frame.modes)
    modes[mode] = (x / s + dx, s * p + dp)
    return frame._replace(modes=modes)


def _solve_linear(expr: QuadPoly, outcome: Symbol, target: Symbol) -> QuadPoly:
    """Solve ``outcome = expr`` for ``target`` (must enter linearly, monomial coefficient)."""
    parts = expr.collect(target)
    if set(parts) - {0, 1} or 1 not in parts:
        raise AlgebraError(f"{target} does not enter {expr} linearly")
    coef = parts[1]
    if not coef.is_classical() or not coef.is_monomial():
        raise AlgebraError(f"coefficient of {target} is not invertible: {coef}")
    rest = parts.get(0, QuadPoly())
    return (QuadPoly.sym(outcome) - rest) / coef


def measure(frame: HeisenbergFrame, mode: str, outcome: Symbol, expr: QuadPoly,
            eliminate: Symbol) -> HeisenbergFrame:
    """Record ``outcome = expr`` for a detector on ``mode`` and eliminate one operator."""
    frame._live(mode)
    solution = _solve_linear(expr, outcome, eliminate)
    sub = {eliminate: solution}
    modes = {m: (x.subs(sub), p.subs(sub)) for m, (x, p) in frame.modes.items() if m != mode}
    modes[mode] = frame.modes[mode]
    rels = tuple(Relation(r.outcome, r.expr, r.eliminated, r.solution.subs(sub))
                 for r in frame.relations)
    rels = rels + (Relation(outcome, expr, eliminate, solution),)
    return frame._replace(modes=modes, retired=frame.retired | {mode}, relations=rels)


def measure_x(frame: HeisenbergFrame, ancilla: str, outcome: Symbol) -> HeisenbergFrame:
    """x-homodyne on an ancilla; its initial x operator is eliminated everywhere."""
    frame._live(ancilla)
    xa, _ = _mode_symbols(ancilla)
    return measure(frame, ancilla, outcome, frame.x(ancilla), xa)


def measure_rotated(frame: HeisenbergFrame, mode: str, outcome: Symbol,
                    eliminate: Symbol) -> HeisenbergFrame:
    """Detector of sin(theta) x + cos(theta) p, written as cos(theta) (tan(theta) x + p)."""
    frame._live(mode)
    ct, tt = QuadPoly.sym(Symbol("cos_theta")), QuadPoly.sym(Symbol("tan_theta"))
    expr = ct * (tt * frame.x(mode) + frame.p(mode))
    return measure(frame, mode, outcome, expr, eliminate)


def substitute_ancilla_nonlinearity(frame: HeisenbergFrame, k: int, strength=1,
                                    keep_noise: bool = False) -> HeisenbergFrame:
    """Replace p_A(k) by strength * x_A(k)**(k-1) (+ n_A(k) when keeping the noise operator).

    ``x_A(k)`` is taken from the recorded measurement of the ancilla; order 1
    needs no measurement since its replacement is the constant ``strength``.
    """
    strength = QuadPoly.lift(strength)
    if k == 1:
        xval = QuadPoly.const(1)
    else:
        xval = frame.relation_for(k).solution
    repl = strength * xval ** (k - 1)
    if keep_noise:
        repl = repl + QuadPoly.sym(Symbol("n_A", k))
    return frame.map_all(lambda e: e.subs({Symbol("p_A", k): repl}))


def poisson_bracket(f: QuadPoly, g: QuadPoly, modes: Iterable[str]) -> QuadPoly:
    """Formal bracket of the linear parts of f and g over the given modes."""
    lf, lg = f.linear_parts(), g.linear_parts()
    out = QuadPoly()
    for m in modes:
        xs, ps = _mode_symbols(m)
        zero = QuadPoly()
        out = out + lf.get(xs, zero) * lg.get(ps, zero) - lf.get(ps, zero) * lg.get(xs, zero)
    return out


# ---------------------------------------------------------------------------
# derivations

SCHEMES = ("qnd-inline", "qnd-measurement-induced", "beamsplitter")
N_MAX = 8

X_IN, P_IN = Symbol("x_in"), Symbol("p_in")


def z(k):
    return QuadPoly.sym(Symbol("z", k))


def qs(k):
    return Symbol("q", k)


def derive_final_relation(N: int, scheme: str = "qnd-inline", n_max: int = N_MAX,
                          idealize_carrier: bool = True) -> tuple[QuadPoly, QuadPoly]:
    """Output (x, p) of the signal with every ancilla operator eliminated."""
    if N < 3:
        raise AlgebraError("order must be at least 3")
    if N > n_max:
        raise AlgebraError(f"order {N} exceeds configured maximum {n_max}")
    if scheme not in SCHEMES:
        raise AlgebraError(f"unknown scheme {scheme!r}")
    ancillas = [f"A{k}" for k in range(N, 0, -1)]

    if scheme == "qnd-inline":
        f = HeisenbergFrame.fresh(["s"] + ancillas)
        for k in range(N, 0, -1):
            f = qnd_apply(f, "s", f"A{k}", z(k))
            if k > 1:
                f = measure_x(f, f"A{k}", qs(k))
        for k in range(N, 0, -1):
            f = substitute_ancilla_nonlinearity(f, k)
        return f.x("s"), f.p("s")

    if scheme == "qnd-measurement-induced":
        f = HeisenbergFrame.fresh(["s", "A0"] + ancillas)
        # carrier picks up x_in; signal p picks up -p_A0
        f = qnd_apply(f, "s", "A0", -1)
        for k in range(N, 0, -1):
            f = qnd_apply(f, "A0", f"A{k}", z(k))
            if k > 1:
                x_expr = f.x(f"A{k}")
                if idealize_carrier:
                    x_expr = x_expr.subs({Symbol("x_A", 0): 0})
                f = measure(f, f"A{k}", qs(k), x_expr, Symbol("x_A", k))
        for k in range(N, 0, -1):
            f = substitute_ancilla_nonlinearity(f, k)
        # erase the carrier: read out its p and displace the signal by that value
        y = f.p("A0")
        return f.x("s"), f.p("s") + y

    # beam-splitter chain with per-stage Gaussian correction
    f = HeisenbergFrame.fresh(["s"] + ancillas)
    for k in range(N, 0, -1):
        tk, rk = QuadPoly.sym(Symbol("t", k)), QuadPoly.sym(Symbol("r", k))
        f = bs_apply(f, "s", f"A{k}", tk, rk)
        # the order-1 readout only feeds the x correction, never the gain equations
        f = measure_x(f, f"A{k}", qs(k))
        x_s = f.x("s").reduce_unit_pairs(f.unit_pairs)
        modes = dict(f.modes)
        modes["s"] = (x_s, f.p("s"))
        f = f._replace(modes=modes)
        f = gaussian_correct(f, "s", 1 / tk, displace_x=-(rk * QuadPoly.sym(qs(k))))
    for k in range(N, 0, -1):
        f = substitute_ancilla_nonlinearity(f, k)
    x_out = f.x("s").reduce_unit_pairs(f.unit_pairs)
    return x_out, f.p("s")


def closed_form_relation(N: int) -> QuadPoly:
    """p_in + sum_k x^k sum_j binom(N-j, k) q_{N-j+1}^{N-j-k} z_{N-j+1}^{k+1}."""
    out = QuadPoly.sym(P_IN)
    x = QuadPoly.sym(X_IN)
    for k in range(N):
        inner = QuadPoly()
        for j in range(1, N - k + 1):
            m = N - j + 1
            qpow = N - j - k
            term = QuadPoly.const(math.comb(N - j, k)) * z(m) ** (k + 1)
            if qpow:
                term = term * QuadPoly.sym(qs(m), qpow)
            inner = inner + term
        out = out + x ** k * inner
    return out


def residual(p_out: QuadPoly, N: int, target_coeff) -> QuadPoly:
    """p_out - p_in - target * x_in**(N-1)."""
    target_coeff = QuadPoly.lift(target_coeff)
    return p_out - QuadPoly.sym(P_IN) - target_coeff * QuadPoly.sym(X_IN, N - 1)


def bs_effective_coefficients(N: int) -> dict[int, QuadPoly]:
    """Coefficient of p_A(j) left in the signal p after the corrected chain (before substitution)."""
    f = HeisenbergFrame.fresh(["s"] + [f"A{k}" for k in range(N, 0, -1)])
    for k in range(N, 0, -1):
        tk, rk = QuadPoly.sym(Symbol("t", k)), QuadPoly.sym(Symbol("r", k))
        f = bs_apply(f, "s", f"A{k}", tk, rk)
        f = gaussian_correct(f, "s", 1 / tk)
    p = f.p("s")
    return {j: p.coeff(Symbol("p_A", j)) for j in range(1, N + 1)}


def product_bs_coefficient(j: int, N: int) -> QuadPoly:
    """t_j r_j prod_{k=j}^{N} t_k^{-2}, the product form obtained from a per-stage map with p -> t^2 p."""
    out = QuadPoly.sym(Symbol("t", j)) * QuadPoly.sym(Symbol("r", j))
    for k in range(j, N + 1):
        out = out * QuadPoly.sym(Symbol("t", k), -2)
    return out

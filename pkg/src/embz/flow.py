"""Flow geometries and spectral states as measures: dilation flow on the
half-line for semifinite algebras, rotation on a circle of length gamma0,
or a single point. Includes the flow pushforward, the tensor-update law,
and the embezzlement quantifier kappa as a supremum over the flow."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .spectral import StepFunction, distribution_function, l1_distance_exact, _frac
from .states import DensityMatrix, SchmidtSpectrum

MASS_TOL = 1e-12
KAPPA_S_TOL = 1e-11
KAPPA_VALUE_TOL = 1e-12


@dataclass(frozen=True)
class FlowGeometry:
    kind: str  # "real_line" | "circle" | "point"
    gamma0: float | None = None

    def __post_init__(self):
        if self.kind not in ("real_line", "circle", "point"):
            raise ValueError(f"unknown geometry kind {self.kind!r}")
        if self.kind == "circle":
            if self.gamma0 is None or self.gamma0 <= 0:
                raise ValueError("circle geometry needs gamma0 > 0")
        elif self.gamma0 is not None:
            raise ValueError(f"{self.kind} geometry takes no gamma0")


REAL_LINE = FlowGeometry("real_line")
POINT = FlowGeometry("point")


def circle(gamma0: float) -> FlowGeometry:
    return FlowGeometry("circle", float(gamma0))


@dataclass(frozen=True)
class CirclePiece:
    """Density a*exp(-gamma) + b on [lo, hi)."""

    lo: float
    hi: float
    a: float
    b: float

    def mass(self) -> float:
        return self.a * (math.exp(-self.lo) - math.exp(-self.hi)) + self.b * (self.hi - self.lo)

    def min_density(self) -> float:
        return min(
            self.a * math.exp(-self.lo) + self.b,
            self.a * math.exp(-self.hi) + self.b,
        )


@dataclass(frozen=True)
class FlowMeasure:
    """Probability measure on a flow geometry.

    real_line: density is a step function in t (mass 1 exactly by step algebra).
    circle: contiguous exponential-affine pieces covering [0, gamma0) once.
    point: the trivial unit mass, density is None.
    """

    geometry: FlowGeometry
    density: StepFunction | None = None
    pieces: tuple = field(default=())

    def __post_init__(self):
        if self.geometry.kind == "real_line":
            if self.density is None:
                raise ValueError("real-line measure needs a step-function density")
            if abs(float(self.density.integral()) - 1.0) > MASS_TOL:
                raise ValueError("real-line measure must have mass 1")
        elif self.geometry.kind == "circle":
            pieces = tuple(self.pieces)
            if not pieces:
                raise ValueError("circle measure needs at least one piece")
            pieces = tuple(sorted(pieces, key=lambda p: p.lo))
            g0 = self.geometry.gamma0
            if abs(pieces[0].lo) > MASS_TOL or abs(pieces[-1].hi - g0) > 1e-9:
                raise ValueError("circle pieces must cover [0, gamma0)")
            for p1, p2 in zip(pieces, pieces[1:]):
                if abs(p1.hi - p2.lo) > 1e-9:
                    raise ValueError("circle pieces must be contiguous")
            for p in pieces:
                if p.min_density() < -1e-10:
                    raise ValueError("circle density must be nonnegative")
            total = math.fsum(p.mass() for p in pieces)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"circle measure has mass {total!r}, not 1")
            object.__setattr__(self, "pieces", pieces)
        elif self.density is not None or self.pieces:
            raise ValueError("point measure carries no density")

    def mass(self) -> float:
        if self.geometry.kind == "real_line":
            return float(self.density.integral())
        if self.geometry.kind == "circle":
            return math.fsum(p.mass() for p in self.pieces)
        return 1.0


def uniform_circle_measure(gamma0: float) -> FlowMeasure:
    return FlowMeasure(circle(gamma0), pieces=(CirclePiece(0.0, gamma0, 0.0, 1.0 / gamma0),))


def point_measure() -> FlowMeasure:
    return FlowMeasure(POINT)


def spectral_state_semifinite(rho: DensityMatrix) -> FlowMeasure:
    """Measure with density D(t) dt on (0, inf), D the distribution function."""
    return FlowMeasure(REAL_LINE, density=distribution_function(rho))


def _dilate_density(density: StepFunction, factor) -> StepFunction:
    """density(t) -> factor * density(factor * t), exact in rationals."""
    m = _frac(factor)
    if m <= 0:
        raise ValueError("dilation factor must be positive")
    breaks = tuple(b / m for b in density.breaks)
    values = tuple(v * m for v in density.values)
    return StepFunction(breaks, values)


def _rotate_pieces(pieces, gamma0: float, s: float, factor: float | None = None):
    """Rotate a circle density by s: new density at gamma is the old density
    at gamma + s (mod gamma0). The coefficient of exp(-gamma) picks up
    exp(-s), and exp(gamma0) on the wrapped part."""
    s_red = math.fmod(s, gamma0)
    if s_red < 0:
        s_red += gamma0
    if s_red == 0.0:
        return tuple(pieces)
    m = math.exp(-s_red) if factor is None else factor
    wrap = m * math.exp(gamma0)
    out = []
    for p in pieces:
        lo, hi = p.lo - s_red, p.hi - s_red
        if hi <= 0:
            out.append(CirclePiece(lo + gamma0, hi + gamma0, p.a * wrap, p.b))
        elif lo >= 0:
            out.append(CirclePiece(lo, hi, p.a * m, p.b))
        else:
            out.append(CirclePiece(0.0, hi, p.a * m, p.b))
            out.append(CirclePiece(lo + gamma0, gamma0, p.a * wrap, p.b))
    out.sort(key=lambda p: p.lo)
    # snap the wrap seam: endpoints computed from identical expressions are
    # already equal; only the outermost ones need pinning to 0 and gamma0
    fixed = [CirclePiece(0.0 if i == 0 else out[i - 1].hi, p.hi, p.a, p.b) for i, p in enumerate(out)]
    fixed[-1] = CirclePiece(fixed[-1].lo, gamma0, fixed[-1].a, fixed[-1].b)
    return tuple(fixed)


def pushforward(P: FlowMeasure, s: float, scale=None) -> FlowMeasure:
    """Image of P under the flow at time s; mass is preserved exactly.

    On the half-line the density g becomes m * g(m t) with m = exp(-s); a
    rational `scale` may be passed to keep that dilation exact (e.g. an
    integer n for s = -log n). On the circle this is rotation by s.
    """
    if P.geometry.kind == "point":
        return P
    if P.geometry.kind == "real_line":
        m = _frac(scale) if scale is not None else _frac(math.exp(-s))
        return FlowMeasure(REAL_LINE, density=_dilate_density(P.density, m))
    factor = float(scale) if scale is not None else None
    return FlowMeasure(
        P.geometry, pieces=_rotate_pieces(P.pieces, P.geometry.gamma0, s, factor)
    )


def _circle_cells(p_pieces, q_pieces):
    """Common refinement of two contiguous partitions with both coefficient
    pairs per cell."""
    grid = sorted({p.lo for p in p_pieces} | {p.hi for p in p_pieces}
                  | {q.lo for q in q_pieces} | {q.hi for q in q_pieces})

    def coeffs_at(pieces, x):
        for p in pieces:
            if p.lo <= x < p.hi:
                return p.a, p.b
        return pieces[-1].a, pieces[-1].b

    cells = []
    for lo, hi in zip(grid, grid[1:]):
        if hi - lo <= 0:
            continue
        mid = 0.5 * (lo + hi)
        cells.append((lo, hi, coeffs_at(p_pieces, mid), coeffs_at(q_pieces, mid)))
    return cells


def _abs_integral_exp_affine(lo: float, hi: float, a: float, b: float) -> float:
    """Integral of |a exp(-gamma) + b| over [lo, hi), splitting analytically
    at the (at most one) sign change."""

    def signed(x1, x2):
        return a * (math.exp(-x1) - math.exp(-x2)) + b * (x2 - x1)

    if a != 0.0 and b != 0.0 and (b / a) < 0:
        ratio = -b / a
        root = -math.log(ratio)
        if lo < root < hi:
            return abs(signed(lo, root)) + abs(signed(root, hi))
    return abs(signed(lo, hi))


def measure_distance(P: FlowMeasure, Q: FlowMeasure) -> float:
    """L1 distance of the densities; exact piecewise algebra, no quadrature."""
    if P.geometry != Q.geometry:
        raise ValueError("measures live on different flow geometries")
    if P.geometry.kind == "point":
        return 0.0
    if P.geometry.kind == "real_line":
        return float(l1_distance_exact(P.density, Q.density))
    total = 0.0
    for lo, hi, (a1, b1), (a2, b2) in _circle_cells(P.pieces, Q.pieces):
        total += _abs_integral_exp_affine(lo, hi, a1 - a2, b1 - b2)
    return total


def tensor_update(P: FlowMeasure, q: SchmidtSpectrum) -> FlowMeasure:
    """Measure of the state tensored with an ancilla of spectrum q: the
    convex combination sum_i q_i P o theta_{log q_i}."""
    weights = list(q.coeffs)
    if P.geometry.kind == "point":
        return P
    if len(weights) == 1:
        return P
    if P.geometry.kind == "real_line":
        # the weight q_i cancels the dilation prefactor exactly, leaving
        # sum_i g(t / q_i): values unchanged, breakpoints scaled
        grid = set()
        terms = []
        for w in weights:
            breaks = [Fraction(0)] + [_frac(float(b) * w) for b in P.density.breaks[1:]]
            terms.append((breaks, P.density.values))
            grid.update(breaks)
        grid = sorted(grid)

        def eval_term(breaks, values, t):
            for b_lo, b_hi, v in zip(breaks, breaks[1:], values):
                if b_lo <= t < b_hi:
                    return v
            return Fraction(0)

        vals = [sum((eval_term(b, v, lo) for b, v in terms), Fraction(0)) for lo in grid[:-1]]
        return FlowMeasure(REAL_LINE, density=StepFunction(tuple(grid), tuple(vals)))
    # circle: rotate by log q_i (dilation factor exp(-log q_i) = 1/q_i) and mix
    g0 = P.geometry.gamma0
    rotated = [
        _rotate_pieces(P.pieces, g0, math.log(w), factor=1.0 / w) for w in weights
    ]
    grid = sorted({x for pieces in rotated for p in pieces for x in (p.lo, p.hi)})

    def coeffs_at(pieces, x):
        for p in pieces:
            if p.lo <= x < p.hi:
                return p.a, p.b
        return pieces[-1].a, pieces[-1].b

    out = []
    for lo, hi in zip(grid, grid[1:]):
        if hi - lo <= 0:
            continue
        mid = 0.5 * (lo + hi)
        a = math.fsum(w * coeffs_at(pieces, mid)[0] for w, pieces in zip(weights, rotated))
        b = math.fsum(w * coeffs_at(pieces, mid)[1] for w, pieces in zip(weights, rotated))
        out.append(CirclePiece(lo, hi, a, b))
    return FlowMeasure(P.geometry, pieces=tuple(out))


@dataclass(frozen=True)
class KappaResult:
    value: float
    argmax_s: float | None
    attained: bool
    note: str = ""
    profile: tuple = field(default=())  # (s, distance) samples

    def __float__(self) -> float:
        return self.value


def _golden_max(fn, lo: float, hi: float, xtol: float):
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > xtol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    s = c if fc > fd else d
    return s, max(fc, fd)


def kappa(P: FlowMeasure, profile_dims=None) -> KappaResult:
    """sup over flow times s of ||theta_s P - P||.

    Point: 0 exactly. Circle: the objective is smooth between breakpoint
    differences; candidates there plus golden-section refinement give the
    exact supremum to 1e-11 in s. Half-line with compactly supported
    density: the supremum 2 is approached but not attained; the result is
    tagged and carries the finite-time profile at s = -log n.
    """
    if P.geometry.kind == "point":
        return KappaResult(0.0, 0.0, True, note="trivial flow")
    if P.geometry.kind == "real_line":
        dims = profile_dims if profile_dims is not None else [2 ** k for k in range(1, 11)]
        prof = []
        for n in dims:
            dist = measure_distance(P, pushforward(P, -math.log(n), scale=n))
            prof.append((-math.log(n), dist))
        return KappaResult(
            2.0,
            None,
            False,
            note="supremum, approached not attained",
            profile=tuple(prof),
        )
    g0 = P.geometry.gamma0

    def objective(s: float) -> float:
        return measure_distance(P, pushforward(P, s))

    breaks = sorted({p.lo for p in P.pieces} | {g0})
    cands = {0.0, g0}
    for ci in breaks:
        for cj in breaks:
            d = math.fmod(ci - cj, g0)
            if d < 0:
                d += g0
            cands.add(d)
    cands = sorted(cands)
    best_s, best_v = 0.0, 0.0
    for lo, hi in zip(cands, cands[1:]):
        if hi - lo < 1e-13:
            continue
        # coarse scan, then golden refinement around the interval max
        grid = np.linspace(lo, hi, 26)
        vals = [objective(s) for s in grid]
        k = int(np.argmax(vals))
        a = grid[max(k - 1, 0)]
        b = grid[min(k + 1, len(grid) - 1)]
        s_star, v_star = _golden_max(objective, a, b, KAPPA_S_TOL)
        for s, v in [(grid[k], vals[k]), (s_star, v_star), (lo, objective(lo))]:
            if v > best_v + KAPPA_VALUE_TOL or (abs(v - best_v) <= KAPPA_VALUE_TOL and s < best_s):
                best_s, best_v = s, v
    return KappaResult(best_v, best_s, True)


def kappa_direct_sum(components) -> KappaResult:
    """kappa of a finite direct sum: the weighted sum over the summands
    (the bound for discrete centers holds with equality)."""
    total = 0.0
    attained = True
    for weight, measure in components:
        res = kappa(measure)
        total += weight * res.value
        attained = attained and res.attained
    note = "" if attained else "contains an unattained supremum"
    return KappaResult(total, None, attained, note=note)


@dataclass(frozen=True)
class TypeLabel:
    label: str
    lam: float | None


def classify(geometry: FlowGeometry, kappa_max: float) -> TypeLabel:
    """Factor type from the flow geometry and the kappa_max value; for a
    circle flow the modulus is lambda = ((1 - k/2) / (1 + k/2))^2."""
    if not 0.0 <= kappa_max <= 2.0:
        raise ValueError(f"kappa_max must lie in [0, 2], got {kappa_max!r}")
    if geometry.kind == "real_line":
        return TypeLabel("semifinite", None)
    if geometry.kind == "point" or kappa_max == 0.0:
        return TypeLabel("III_1", 1.0)
    if kappa_max == 2.0:
        return TypeLabel("III_0", 0.0)
    lam = ((1 - kappa_max / 2) / (1 + kappa_max / 2)) ** 2
    return TypeLabel("III_lambda", lam)


def random_circle_measure(rng: np.random.Generator, gamma0: float, n_pieces: int = 3) -> FlowMeasure:
    """Seeded random measure in the exponential-affine class, normalized to
    unit mass; used by the randomized property suites."""
    cuts = np.sort(rng.uniform(0, gamma0, size=n_pieces - 1)) if n_pieces > 1 else np.array([])
    bounds = [0.0] + cuts.tolist() + [gamma0]
    pieces = []
    for lo, hi in zip(bounds, bounds[1:]):
        pieces.append(CirclePiece(lo, hi, float(rng.uniform(0, 1)), float(rng.uniform(0, 1))))
    total = math.fsum(p.mass() for p in pieces)
    pieces = tuple(CirclePiece(p.lo, p.hi, p.a / total, p.b / total) for p in pieces)
    return FlowMeasure(circle(gamma0), pieces=pieces)


def measure_to_json(P: FlowMeasure) -> dict:
    geom = {"kind": P.geometry.kind}
    if P.geometry.kind == "circle":
        geom["gamma0"] = P.geometry.gamma0
        pieces = [{"lo": p.lo, "hi": p.hi, "a": p.a, "b": p.b} for p in P.pieces]
    elif P.geometry.kind == "real_line":
        pieces = [
            {"lo": float(lo), "hi": float(hi), "a": 0.0, "b": float(v)}
            for lo, hi, v in zip(P.density.breaks, P.density.breaks[1:], P.density.values)
        ]
    else:
        pieces = []
    return {"geometry": geom, "pieces": pieces}


def measure_from_json(obj: dict) -> FlowMeasure:
    geom = obj["geometry"]
    kind = geom["kind"]
    if kind == "point":
        return point_measure()
    pieces = obj["pieces"]
    if kind == "circle":
        return FlowMeasure(
            circle(float(geom["gamma0"])),
            pieces=tuple(
                CirclePiece(float(p["lo"]), float(p["hi"]), float(p["a"]), float(p["b"]))
                for p in pieces
            ),
        )
    if kind == "real_line":
        if any(float(p.get("a", 0.0)) != 0.0 for p in pieces):
            raise ValueError("real-line densities are piecewise constant (a must be 0)")
        pieces = sorted(pieces, key=lambda p: float(p["lo"]))
        breaks = [Fraction(0)]
        values = []
        for p in pieces:
            if abs(float(p["lo"]) - float(breaks[-1])) > 1e-12:
                raise ValueError("real-line pieces must be contiguous from 0")
            breaks.append(_frac(float(p["hi"])))
            values.append(_frac(float(p["b"])))
        return FlowMeasure(REAL_LINE, density=StepFunction(tuple(breaks), tuple(values)))
    raise ValueError(f"unknown geometry kind {kind!r}")

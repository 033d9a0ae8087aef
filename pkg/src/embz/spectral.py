"""Spectral scales and distribution functions as exact step functions.

Breakpoints and values are binary doubles lifted to rationals, so merged-grid
integration, reflection, and the tensor/amplification laws are carried out
without quadrature; floating error enters only through eigenvalues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .states import DensityMatrix

DEGENERACY_TOL = 1e-12


def _frac(x) -> Fraction:
    # exact: every finite double is a dyadic rational
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous, non-increasing, finitely supported step function.

    Value is values[j] on [breaks[j], breaks[j+1]) and 0 beyond the last
    break. Canonical form: strictly decreasing positive values, adjacent
    equal pieces coalesced, zero tail dropped.
    """

    breaks: tuple  # Fractions, strictly increasing, breaks[0] == 0
    values: tuple  # Fractions, strictly decreasing, positive; len = len(breaks)-1

    def __post_init__(self):
        breaks = tuple(_frac(b) for b in self.breaks)
        values = tuple(_frac(v) for v in self.values)
        if len(breaks) != len(values) + 1:
            raise ValueError("need exactly one more break than values")
        if breaks[0] != 0:
            raise ValueError("first break must be 0")
        if any(b1 >= b2 for b1, b2 in zip(breaks, breaks[1:])):
            raise ValueError("breaks must be strictly increasing")
        if any(v < 0 for v in values):
            raise ValueError("values must be nonnegative")
        if any(v1 < v2 for v1, v2 in zip(values, values[1:])):
            raise ValueError("values must be non-increasing")
        breaks, values = _canonicalize(breaks, values)
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "values", values)

    def __call__(self, t) -> Fraction:
        t = _frac(t)
        if t < 0:
            raise ValueError("step functions live on [0, inf)")
        for b_lo, b_hi, v in zip(self.breaks, self.breaks[1:], self.values):
            if b_lo <= t < b_hi:
                return v
        return Fraction(0)

    def integral(self) -> Fraction:
        return sum(
            (v * (b2 - b1) for b1, b2, v in zip(self.breaks, self.breaks[1:], self.values)),
            Fraction(0),
        )

    def breaks_float(self) -> list:
        return [float(b) for b in self.breaks]

    def values_float(self) -> list:
        return [float(v) for v in self.values]

    @staticmethod
    def indicator(hi) -> "StepFunction":
        """chi_[0, hi)."""
        return StepFunction((Fraction(0), _frac(hi)), (Fraction(1),))

    @staticmethod
    def from_breaks_values(breaks, values) -> "StepFunction":
        return StepFunction(tuple(_frac(b) for b in breaks), tuple(_frac(v) for v in values))


def _canonicalize(breaks, values):
    out_b = [breaks[0]]
    out_v = []
    for b_hi, v in zip(breaks[1:], values):
        if out_v and v == out_v[-1]:
            out_b[-1] = b_hi
        else:
            out_b.append(b_hi)
            out_v.append(v)
    while out_v and out_v[-1] == 0:
        out_v.pop()
        out_b.pop()
    if not out_v:
        raise ValueError("step function must have at least one nonzero piece")
    return tuple(out_b), tuple(out_v)


def _group_spectrum(values_desc, lengths):
    """Group a decreasing float sequence into (representative, total length)
    runs, merging entries within DEGENERACY_TOL of the run leader."""
    groups = []
    for v, ln in zip(values_desc, lengths):
        if groups and groups[-1][0] - v <= DEGENERACY_TOL:
            groups[-1][1] += ln
        else:
            groups.append([v, ln])
    return groups


def assemble_scale(values_desc, lengths) -> StepFunction:
    """Step function from a spectrum given as (value, length) pairs sorted by
    decreasing value; near-degenerate values are merged to one piece."""
    groups = [(v, ln) for v, ln in _group_spectrum(values_desc, [_frac(l) for l in lengths]) if v > 0]
    breaks = [Fraction(0)]
    vals = []
    for v, ln in groups:
        breaks.append(breaks[-1] + ln)
        vals.append(_frac(v))
    return StepFunction(tuple(breaks), tuple(vals))


def spectral_scale(rho: DensityMatrix) -> StepFunction:
    """Decreasing rearrangement of the spectrum: value p_i on the interval of
    its cumulative multiplicity."""
    w = rho.eigenvalues()
    return assemble_scale(w.tolist(), [1] * len(w))


def distribution_function(rho: DensityMatrix) -> StepFunction:
    """Eigenvalue-counting function t -> #{eigenvalues > t} (with multiplicity)."""
    w = rho.eigenvalues()
    groups = [(v, ln) for v, ln in _group_spectrum(w.tolist(), [1] * len(w)) if v > 0]
    # counting from the smallest positive eigenvalue upward
    breaks = [Fraction(0)]
    vals = []
    total = sum((ln for _, ln in groups), Fraction(0))
    running = Fraction(0)
    for v, ln in reversed(groups):
        breaks.append(_frac(v))
        vals.append(total - running)
        running += ln
    return StepFunction(tuple(breaks), tuple(vals))


def reflect(f: StepFunction) -> StepFunction:
    """Generalized inverse t -> inf{s > 0 : f(s) <= t}; an exact involution.

    Reflecting a distribution function yields the spectral scale and vice
    versa (the graph is mirrored about the diagonal).
    """
    k = len(f.values)
    breaks = [Fraction(0)]
    vals = []
    # on [v_{j+1}, v_j) the inverse equals f.breaks[j+1]
    for j in range(k, 0, -1):
        breaks.append(f.values[j - 1])
        vals.append(f.breaks[j])
    return StepFunction(tuple(breaks), tuple(vals))


def _merged_cells(f: StepFunction, g: StepFunction):
    grid = sorted(set(f.breaks) | set(g.breaks))
    for lo, hi in zip(grid, grid[1:]):
        yield lo, hi, f(lo), g(lo)


def l1_distance_exact(f: StepFunction, g: StepFunction) -> Fraction:
    return sum((abs(fv - gv) * (hi - lo) for lo, hi, fv, gv in _merged_cells(f, g)), Fraction(0))


def l1_distance(f: StepFunction, g: StepFunction) -> float:
    """Exact L1 distance of two step functions (merged-grid piecewise sums)."""
    return float(l1_distance_exact(f, g))


def add(f: StepFunction, g: StepFunction) -> StepFunction:
    """Pointwise sum on the merged breakpoint grid."""
    grid = sorted(set(f.breaks) | set(g.breaks))
    vals = [f(lo) + g(lo) for lo in grid[:-1]]
    return StepFunction(tuple(grid), tuple(vals))


def scale_breaks_float(f: StepFunction, factor: float) -> StepFunction:
    """Dilate the support by a float factor: t -> f(t / factor), with
    breakpoints multiplied in double precision (values unchanged)."""
    if factor <= 0:
        raise ValueError("dilation factor must be positive")
    breaks = [Fraction(0)] + [_frac(float(b) * float(factor)) for b in f.breaks[1:]]
    return StepFunction(tuple(breaks), f.values)


def orbit_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """inf over unitaries u of ||u rho u* - sigma||_1.

    Equals the L1 distance of the spectral scales, i.e. the l1 distance of
    the decreasingly sorted eigenvalue lists.
    """
    if rho.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    return l1_distance(spectral_scale(rho), spectral_scale(sigma))


def tensor_scale(f: StepFunction, g: StepFunction) -> StepFunction:
    """Spectral scale of a product state from the factors' scales: all
    pairwise value products, weighted by the product of piece lengths."""
    prods = []
    for fv, flo, fhi in zip(f.values, f.breaks, f.breaks[1:]):
        for gv, glo, ghi in zip(g.values, g.breaks, g.breaks[1:]):
            # float product so the result matches a directly computed
            # product spectrum bit for bit
            prods.append((float(fv) * float(gv), (fhi - flo) * (ghi - glo)))
    prods.sort(key=lambda p: -p[0])
    return assemble_scale([p[0] for p in prods], [p[1] for p in prods])


def tensor_distribution(df: StepFunction, dg: StepFunction) -> StepFunction:
    """Distribution function of a product state by multiplicative convolution:
    D(t) = sum_i m_i dg(t / p_i) over the first factor's spectrum (p_i, m_i)."""
    scale_f = reflect(df)
    grid = set()
    terms = []
    for p, lo, hi in zip(scale_f.values, scale_f.breaks, scale_f.breaks[1:]):
        mult = hi - lo
        # breaks scale by float products so the result matches a directly
        # computed product spectrum bit for bit
        breaks = [Fraction(0)] + [_frac(float(b) * float(p)) for b in dg.breaks[1:]]
        terms.append((breaks, [v * mult for v in dg.values]))
        grid.update(breaks)
    grid = sorted(grid)

    def eval_term(breaks, values, t):
        for b_lo, b_hi, v in zip(breaks, breaks[1:], values):
            if b_lo <= t < b_hi:
                return v
        return Fraction(0)

    vals = []
    for lo in grid[:-1]:
        vals.append(sum((eval_term(b, v, lo) for b, v in terms), Fraction(0)))
    return StepFunction(tuple(grid), tuple(vals))


def amplify(f: StepFunction, n: int) -> StepFunction:
    """Scale of the state tensored with a maximally mixed n-level ancilla:
    t -> (1/n) f(t/n), exactly."""
    if n < 1:
        raise ValueError("ancilla dimension must be >= 1")
    breaks = tuple(b * n for b in f.breaks)
    values = tuple(v / n for v in f.values)
    return StepFunction(breaks, values)


@dataclass(frozen=True)
class OrbitSearchResult:
    value: float
    flagged: bool  # True when the iteration budget ran out while still improving
    restarts: int
    n_at_best: int  # starts that reached the best value within tol

    def __float__(self) -> float:
        return self.value


def _trace_norm_batch(x: np.ndarray) -> np.ndarray:
    return np.abs(np.linalg.eigvalsh(x)).sum(axis=-1)


def _random_unitaries(rng: np.random.Generator, restarts: int, d: int) -> np.ndarray:
    # u = exp(iH) with H Hermitian, entries uniform in [-pi, pi]
    re = rng.uniform(-np.pi, np.pi, size=(restarts, d, d))
    im = rng.uniform(-np.pi, np.pi, size=(restarts, d, d))
    h = (re + np.swapaxes(re, -1, -2)) / 2 + 1j * (im - np.swapaxes(im, -1, -2)) / 2
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w)[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


def brute_force_orbit_distance(
    rho: DensityMatrix,
    sigma: DensityMatrix,
    restarts: int = 200,
    tol: float = 1e-7,
    seed: int = 0,
    max_iters: int = 1500,
) -> OrbitSearchResult:
    """Multi-start minimization of ||u rho u* - sigma||_1 over the unitary
    group; an upper bound on the true infimum, independent of orbit_distance.

    Starts are u = exp(iH) with random Hermitian H; each start is refined by
    geodesic descent along the trace-norm subgradient direction with
    per-start backtracking. All starts advance together; the search stops
    once the best value has stalled, and is flagged if the iteration budget
    runs out while still improving.
    """
    if rho.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    d = rho.dim
    if d > 6:
        raise ValueError("brute-force orbit search is limited to dim <= 6")
    rng = np.random.default_rng(seed)
    u = _random_unitaries(rng, restarts, d)
    rho_m, sigma_m = rho.mat, sigma.mat

    f_u = _trace_norm_batch(u @ rho_m @ np.swapaxes(u.conj(), -1, -2) - sigma_m)
    step = np.full(restarts, 0.5)
    window = 40
    history = []
    stalled = False
    for it in range(max_iters):
        r = u @ rho_m @ np.swapaxes(u.conj(), -1, -2)
        w, v = np.linalg.eigh(r - sigma_m)
        s = (v * np.sign(w)[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)
        g = 1j * (r @ s - s @ r)
        gw, gv = np.linalg.eigh(g)
        phase = np.exp(-1j * step[:, None] * gw)
        u_try = ((gv * phase[..., None, :]) @ np.swapaxes(gv.conj(), -1, -2)) @ u
        f_try = _trace_norm_batch(u_try @ rho_m @ np.swapaxes(u_try.conj(), -1, -2) - sigma_m)
        advanced = f_try < f_u
        u = np.where(advanced[:, None, None], u_try, u)
        f_u = np.where(advanced, f_try, f_u)
        step = np.clip(np.where(advanced, step * 1.2, step * 0.5), 1e-14, 2.0)
        history.append(float(f_u.min()))
        if it > window and history[-1] > history[-window] - 1e-13:
            stalled = True
            break
    best = float(f_u.min())
    return OrbitSearchResult(
        value=best,
        flagged=not stalled,
        restarts=restarts,
        n_at_best=int((f_u <= best + tol).sum()),
    )


def stepfn_to_json(f: StepFunction) -> dict:
    return {"breaks": f.breaks_float(), "values": f.values_float()}


def stepfn_from_json(obj: dict) -> StepFunction:
    breaks = [Fraction(float(b)) for b in obj["breaks"]]
    values = [Fraction(float(v)) for v in obj["values"]]
    if breaks and breaks[0] != 0:
        breaks = [Fraction(0)] + breaks
    return StepFunction(tuple(breaks), tuple(values))


def profile_distance(f: StepFunction, n: int) -> float:
    """||amplified density - density||_L1 at integer dilation n, exactly."""
    return l1_distance(amplify_distribution(f, n), f)


def amplify_distribution(df: StepFunction, n: int) -> StepFunction:
    """Distribution function under a maximally mixed n-level ancilla:
    t -> n df(n t), exactly."""
    if n < 1:
        raise ValueError("ancilla dimension must be >= 1")
    breaks = tuple(b / n for b in df.breaks)
    values = tuple(v * n for v in df.values)
    return StepFunction(breaks, values)

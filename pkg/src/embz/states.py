"""Finite-dimensional quantum states: density matrices, bipartite pure states,
Schmidt decomposition, trace-norm distance, and the canonical purification."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

HERM_TOL = 1e-12
EIG_FLOOR = -1e-12
TRACE_TOL = 1e-12
UNITARY_TOL = 1e-10
SCHMIDT_CUTOFF = 1e-14


def _as_complex_matrix(mat, name: str) -> np.ndarray:
    arr = np.asarray(mat, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, PSD, unit-trace matrix. Validated on construction."""

    mat: np.ndarray

    def __post_init__(self):
        arr = _as_complex_matrix(self.mat, "density matrix")
        if np.abs(arr - arr.conj().T).max() > HERM_TOL:
            raise ValueError("density matrix is not Hermitian to 1e-12")
        w = np.linalg.eigvalsh(arr)
        if w.min() < EIG_FLOOR:
            raise ValueError(f"density matrix has eigenvalue {w.min():.3e} < -1e-12")
        tr = np.trace(arr).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr!r} is not 1 to 1e-12")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "mat", arr)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues sorted decreasing, tiny negatives clamped to 0."""
        w = np.linalg.eigvalsh(self.mat)
        return np.maximum(w, 0.0)[::-1].copy()

    @staticmethod
    def from_diagonal(probs) -> "DensityMatrix":
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1:
            raise ValueError("probabilities must be a vector")
        return DensityMatrix(np.diag(p.astype(complex)))

    @staticmethod
    def pure(dim: int, index: int = 0) -> "DensityMatrix":
        m = np.zeros((dim, dim), dtype=complex)
        m[index, index] = 1.0
        return DensityMatrix(m)

    @staticmethod
    def maximally_mixed(dim: int) -> "DensityMatrix":
        return DensityMatrix(np.eye(dim, dtype=complex) / dim)

    @staticmethod
    def random(rng: np.random.Generator, dim: int) -> "DensityMatrix":
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        rho = a @ a.conj().T
        return DensityMatrix(rho / np.trace(rho).real)


@dataclass(frozen=True)
class PureBipartiteState:
    """Unit vector on C^dimA x C^dimB stored as its coefficient matrix."""

    amplitudes: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.amplitudes, dtype=complex)
        if arr.ndim != 2:
            raise ValueError("amplitudes must be a dimA x dimB matrix")
        norm_sq = float(np.vdot(arr, arr).real)
        if abs(norm_sq - 1.0) > TRACE_TOL:
            raise ValueError(f"state norm^2 = {norm_sq!r} is not 1 to 1e-12")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "amplitudes", arr)

    @property
    def dim_a(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def dim_b(self) -> int:
        return self.amplitudes.shape[1]

    @staticmethod
    def from_schmidt(coeffs) -> "PureBipartiteState":
        """Diagonal state sum_j sqrt(c_j) |jj> from a probability vector."""
        c = np.asarray(coeffs, dtype=float)
        if c.min() < 0 or abs(c.sum() - 1.0) > TRACE_TOL:
            raise ValueError("Schmidt coefficients must be a probability vector")
        return PureBipartiteState(np.diag(np.sqrt(c)).astype(complex))

    @staticmethod
    def bell(dim: int = 2) -> "PureBipartiteState":
        return PureBipartiteState.from_schmidt(np.full(dim, 1.0 / dim))

    @staticmethod
    def random(rng: np.random.Generator, dim_a: int, dim_b: int) -> "PureBipartiteState":
        m = rng.normal(size=(dim_a, dim_b)) + 1j * rng.normal(size=(dim_a, dim_b))
        return PureBipartiteState(m / np.linalg.norm(m))


@dataclass(frozen=True)
class SchmidtSpectrum:
    """Probability vector sorted decreasing; entries below 1e-14 dropped.

    An exact rational representation may ride along (used for the
    harmonic-series family where float summation would lose cancellation);
    `coeffs` is always the float view.
    """

    coeffs: tuple
    exact: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        vals = [float(c) for c in self.coeffs]
        if any(c < -SCHMIDT_CUTOFF for c in vals):
            raise ValueError("Schmidt coefficients must be nonnegative")
        vals = sorted((c for c in vals if c > SCHMIDT_CUTOFF), reverse=True)
        if abs(sum(vals) - 1.0) > TRACE_TOL:
            raise ValueError(f"Schmidt coefficients sum to {sum(vals)!r}, not 1")
        object.__setattr__(self, "coeffs", tuple(vals))
        if self.exact is not None:
            ex = sorted((Fraction(c) for c in self.exact if c > 0), reverse=True)
            if sum(ex) != 1:
                raise ValueError("exact Schmidt coefficients must sum to 1")
            object.__setattr__(self, "exact", tuple(ex))

    def __len__(self) -> int:
        return len(self.coeffs)

    def as_array(self) -> np.ndarray:
        return np.array(self.coeffs)

    @staticmethod
    def uniform(k: int) -> "SchmidtSpectrum":
        return SchmidtSpectrum(tuple([1.0 / k] * k), exact=tuple([Fraction(1, k)] * k))

    @staticmethod
    def point() -> "SchmidtSpectrum":
        return SchmidtSpectrum((1.0,), exact=(Fraction(1),))


def schmidt_decompose(state: PureBipartiteState) -> SchmidtSpectrum:
    """Squared singular values of the coefficient matrix, sorted decreasing."""
    s = np.linalg.svd(state.amplitudes, compute_uv=False)
    return SchmidtSpectrum(tuple((s * s).tolist()))


def marginal(state: PureBipartiteState, side: str = "A") -> DensityMatrix:
    """Reduced density matrix on one side; spectrum = Schmidt spectrum."""
    m = state.amplitudes
    if side == "A":
        rho = m @ m.conj().T
    elif side == "B":
        rho = m.T @ m.conj()
    else:
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix(rho / np.trace(rho).real)


def functional_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Trace norm ||rho - sigma||_1, in [0, 2]."""
    if rho.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    w = np.linalg.eigvalsh(rho.mat - sigma.mat)
    return float(np.abs(w).sum())


def canonical_purification(rho: DensityMatrix) -> PureBipartiteState:
    """Purification with coefficient matrix sqrt(rho); marginal on A is rho."""
    w, v = np.linalg.eigh(rho.mat)
    w = np.maximum(w, 0.0)
    root = (v * np.sqrt(w)) @ v.conj().T
    root = (root + root.conj().T) / 2
    return PureBipartiteState(root / np.linalg.norm(root))


def kron(rho: DensityMatrix, sigma: DensityMatrix) -> DensityMatrix:
    """Tensor product; its spectrum is the pairwise products of spectra."""
    return DensityMatrix(np.kron(rho.mat, sigma.mat))


def conjugate(rho: DensityMatrix, u: np.ndarray) -> DensityMatrix:
    """u rho u* for unitary u."""
    u = _as_complex_matrix(u, "unitary")
    if u.shape[0] != rho.dim:
        raise ValueError(f"unitary dim {u.shape[0]} != state dim {rho.dim}")
    if np.abs(u.conj().T @ u - np.eye(rho.dim)).max() > UNITARY_TOL:
        raise ValueError("matrix is not unitary to 1e-10")
    out = u @ rho.mat @ u.conj().T
    out = (out + out.conj().T) / 2
    return DensityMatrix(out / np.trace(out).real)


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-ish unitary from the QR of a complex Gaussian matrix."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def density_to_json(rho: DensityMatrix) -> dict:
    return {
        "dim": rho.dim,
        "re": rho.mat.real.tolist(),
        "im": rho.mat.imag.tolist(),
    }


def density_from_json(obj: dict) -> DensityMatrix:
    d = int(obj["dim"])
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros((d, d))), dtype=float)
    if re.shape != (d, d) or im.shape != (d, d):
        raise ValueError("matrix entries do not match declared dim")
    return DensityMatrix(re + 1j * im)


def spectrum_to_json(spec: SchmidtSpectrum) -> dict:
    return {"coeffs": list(spec.coeffs)}


def spectrum_from_json(obj: dict) -> SchmidtSpectrum:
    return SchmidtSpectrum(tuple(float(c) for c in obj["coeffs"]))

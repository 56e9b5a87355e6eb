"""Finite-dimensional Hilbert-space linear algebra for bipartite systems.

Vectors and operators are plain complex numpy arrays. The composite index of
``H_A (x) H_B`` is row-major: basis pair ``(a, b)`` sits at ``a * dim_b + b``.
Under that convention the vector/operator isomorphism is a reshape, and the
operator associated to a composite vector maps ``H_B -> H_A``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidDensityError, ShapeError

SCHMIDT_CUTOFF = 1e-12
DENSITY_TOL = 1e-9


@dataclass(frozen=True)
class BipartiteShape:
    dim_a: int
    dim_b: int

    def __post_init__(self):
        if int(self.dim_a) < 1 or int(self.dim_b) < 1:
            raise ShapeError(f"dimensions must be positive, got ({self.dim_a}, {self.dim_b})")

    @property
    def dim(self) -> int:
        return self.dim_a * self.dim_b

    @classmethod
    def of(cls, shape) -> "BipartiteShape":
        if isinstance(shape, cls):
            return shape
        dim_a, dim_b = shape
        return cls(int(dim_a), int(dim_b))


@dataclass(frozen=True)
class SchmidtForm:
    """``psi = sum_l coefficients[l] * a_vectors[l] (x) b_vectors[l]``.

    ``a_vectors`` and ``b_vectors`` are stacked row-wise, shape ``(r, dim)``.
    """

    coefficients: np.ndarray
    a_vectors: np.ndarray
    b_vectors: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.coefficients)

    def reconstruct(self) -> np.ndarray:
        return np.einsum("l,la,lb->ab", self.coefficients, self.a_vectors, self.b_vectors).reshape(-1)


@dataclass(frozen=True)
class DensityReport:
    hermiticity_defect: float
    min_eigenvalue: float
    trace_defect: float
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.hermiticity_defect <= self.tol
            and self.min_eigenvalue >= -self.tol
            and self.trace_defect <= self.tol
        )

    def to_dict(self) -> dict:
        return {
            "hermiticity_defect": self.hermiticity_defect,
            "min_eigenvalue": self.min_eigenvalue,
            "trace_defect": self.trace_defect,
            "tol": self.tol,
            "passed": self.passed,
        }


def _vector(x, name="vector") -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.ndim != 1 or x.size == 0:
        raise ShapeError(f"{name} must be a nonempty 1-d array, got shape {x.shape}")
    return x


def _square(op, name="operator") -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1] or op.size == 0:
        raise ShapeError(f"{name} must be a nonempty square matrix, got shape {op.shape}")
    return op


def basis(dim: int, index: int) -> np.ndarray:
    e = np.zeros(dim, dtype=complex)
    e[index] = 1.0
    return e


def ket(*indices: int, dims=None) -> np.ndarray:
    """Computational basis vector ``|i j ...>``; qubits unless ``dims`` given."""
    dims = dims or (2,) * len(indices)
    out = np.ones(1, dtype=complex)
    for i, d in zip(indices, dims):
        out = np.kron(out, basis(d, i))
    return out


def projector(psi) -> np.ndarray:
    psi = _vector(psi)
    return np.outer(psi, psi.conj())


def tensor_product(x, y, shape=None) -> np.ndarray:
    """Tensor product of ``x in H_A`` and ``y in H_B`` in row-major pairing."""
    x = _vector(x, "x")
    y = _vector(y, "y")
    if shape is not None:
        shape = BipartiteShape.of(shape)
        if (x.size, y.size) != (shape.dim_a, shape.dim_b):
            raise ShapeError(
                f"factor dims ({x.size}, {y.size}) do not match shape ({shape.dim_a}, {shape.dim_b})"
            )
    return np.outer(x, y).reshape(-1)


def matricize(v, shape) -> np.ndarray:
    """Map a composite vector to its operator ``H_B -> H_A`` (entries ``k_ab``)."""
    shape = BipartiteShape.of(shape)
    v = _vector(v)
    if v.size != shape.dim:
        raise ShapeError(f"vector of length {v.size} does not fit shape ({shape.dim_a}, {shape.dim_b})")
    return v.reshape(shape.dim_a, shape.dim_b)


def vectorize(op, shape) -> np.ndarray:
    """Inverse of :func:`matricize`."""
    shape = BipartiteShape.of(shape)
    op = np.asarray(op, dtype=complex)
    if op.shape != (shape.dim_a, shape.dim_b):
        raise ShapeError(f"operator shape {op.shape} does not match ({shape.dim_a}, {shape.dim_b})")
    return op.reshape(-1)


def hs_inner(v1, v2) -> complex:
    """Hilbert-Schmidt scalar product ``Tr(v1^* v2)``, conjugate-linear in ``v1``."""
    v1 = np.asarray(v1, dtype=complex)
    v2 = np.asarray(v2, dtype=complex)
    if v1.shape != v2.shape or v1.ndim != 2:
        raise ShapeError(f"hs_inner needs equal 2-d shapes, got {v1.shape} and {v2.shape}")
    return complex(np.vdot(v1, v2))


def hs_norm(op) -> float:
    return float(np.sqrt(hs_inner(op, op).real))


def partial_trace_b(rho, shape) -> np.ndarray:
    """Trace out ``H_B``: ``(Tr_B rho)_{ij} = sum_m rho_{im, jm}``."""
    shape = BipartiteShape.of(shape)
    rho = _square(rho, "rho")
    if rho.shape[0] != shape.dim:
        raise ShapeError(f"rho of size {rho.shape[0]} does not match composite dim {shape.dim}")
    r = rho.reshape(shape.dim_a, shape.dim_b, shape.dim_a, shape.dim_b)
    return np.einsum("imjm->ij", r)


def partial_trace_a(rho, shape) -> np.ndarray:
    """Trace out ``H_A``: ``(Tr_A rho)_{mn} = sum_i rho_{im, in}``."""
    shape = BipartiteShape.of(shape)
    rho = _square(rho, "rho")
    if rho.shape[0] != shape.dim:
        raise ShapeError(f"rho of size {rho.shape[0]} does not match composite dim {shape.dim}")
    r = rho.reshape(shape.dim_a, shape.dim_b, shape.dim_a, shape.dim_b)
    return np.einsum("imin->mn", r)


def _fix_phase(u: np.ndarray, v: np.ndarray):
    # Largest-magnitude entry of u made real positive; v absorbs the phase.
    k = int(np.argmax(np.abs(u)))
    phase = u[k] / abs(u[k])
    return u / phase, v * phase


def schmidt_decompose(psi, shape, cutoff: float = SCHMIDT_CUTOFF) -> SchmidtForm:
    """Schmidt decomposition by SVD of the matricized vector.

    Coefficients ``<= cutoff`` are dropped. Each ``a_vector`` is phase-fixed so
    that its largest entry is real and positive, which makes the output
    deterministic for basis-aligned inputs.
    """
    shape = BipartiteShape.of(shape)
    psi = _vector(psi, "psi")
    if not np.linalg.norm(psi) > 0:
        raise DegenerateInputError("cannot Schmidt-decompose the zero vector")
    u, s, vh = np.linalg.svd(matricize(psi, shape), full_matrices=False)
    keep = s > cutoff
    a_vecs, b_vecs = [], []
    for ell in np.flatnonzero(keep):
        a, b = _fix_phase(u[:, ell], vh[ell, :])
        a_vecs.append(a)
        b_vecs.append(b)
    return SchmidtForm(
        coefficients=s[keep].copy(),
        a_vectors=np.array(a_vecs, dtype=complex).reshape(-1, shape.dim_a),
        b_vectors=np.array(b_vecs, dtype=complex).reshape(-1, shape.dim_b),
    )


def is_hermitian(op, tol: float = DENSITY_TOL) -> bool:
    op = _square(op)
    return float(np.max(np.abs(op - op.conj().T))) <= tol


def spectral_decompose(rho, cutoff: float = SCHMIDT_CUTOFF, tol: float = DENSITY_TOL):
    """Eigen-decomposition of a Hermitian operator as ``[(lambda_k, psi_k), ...]``.

    Eigenvalues ``<= cutoff`` are omitted; the rest come in descending order.
    Degenerate eigenspaces are returned in whatever basis the solver picks.
    """
    rho = _square(rho, "rho")
    if not is_hermitian(rho, tol):
        raise InvalidDensityError("spectral_decompose requires a Hermitian operator")
    vals, vecs = np.linalg.eigh((rho + rho.conj().T) / 2)
    order = np.argsort(vals)[::-1]
    return [(float(vals[k]), vecs[:, k].copy()) for k in order if vals[k] > cutoff]


def check_density(op, tol: float = DENSITY_TOL) -> DensityReport:
    """Validate Hermiticity, positivity and unit trace.

    The tolerance scales with the dimension: an operator passes when every
    defect is within ``tol * dim``.
    """
    op = _square(op)
    herm = float(np.max(np.abs(op - op.conj().T)))
    min_eig = float(np.linalg.eigvalsh((op + op.conj().T) / 2)[0])
    trace_defect = float(abs(np.trace(op) - 1.0))
    return DensityReport(herm, min_eig, trace_defect, tol * op.shape[0])


def as_density(op, tol: float = DENSITY_TOL) -> np.ndarray:
    """Return ``op`` as a validated density operator or raise."""
    report = check_density(op, tol)
    if not report.passed:
        raise InvalidDensityError(f"not a density operator: {report.to_dict()}")
    return np.asarray(op, dtype=complex)


def trace_distance(r1, r2) -> float:
    """Half the trace norm of ``r1 - r2``."""
    r1 = _square(r1, "r1")
    r2 = _square(r2, "r2")
    if r1.shape != r2.shape:
        raise ShapeError(f"trace_distance needs equal shapes, got {r1.shape} and {r2.shape}")
    diff = r1 - r2
    diff = (diff + diff.conj().T) / 2
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def bell_state(which: str = "PhiPlus") -> np.ndarray:
    s = 1 / np.sqrt(2)
    states = {
        "PhiPlus": s * (ket(0, 0) + ket(1, 1)),
        "PhiMinus": s * (ket(0, 0) - ket(1, 1)),
        "PsiPlus": s * (ket(0, 1) + ket(1, 0)),
        "PsiMinus": s * (ket(0, 1) - ket(1, 0)),
    }
    try:
        return states[which]
    except KeyError:
        raise ValueError(f"unknown Bell state {which!r}; expected one of {sorted(states)}") from None


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unit vector."""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density(dim: int, rng: np.random.Generator, rank=None) -> np.ndarray:
    rank = rank or dim
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real

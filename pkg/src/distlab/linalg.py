"""Dense complex matrix algebra with multipartite index operations.

Matrices are plain ``numpy`` arrays of ``complex128`` in row-major layout.
A composite system is described by a tuple of local dimensions ``dims``;
global indices are lexicographic multi-indices with party 0 slowest-varying,
which is exactly the ordering produced by ``numpy.kron``.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

# Positivity / completeness checks default to 1e-9, exact algebraic
# identities to 1e-12.  Both are overridable per call.
DEFAULT_TOL = 1e-9
ALGEBRA_TOL = 1e-12
HERMITIAN_TOL = 1e-10


def as_matrix(m) -> np.ndarray:
    """Coerce input to a square complex matrix without copying when possible."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def check_dims(dims: Sequence[int], side: int | None = None) -> tuple[int, ...]:
    """Validate a tuple of per-party local dimensions."""
    t = tuple(int(d) for d in dims)
    if len(t) < 1 or any(d < 1 for d in t):
        raise ValueError(f"invalid local dimensions {t}")
    if side is not None and int(np.prod(t)) != side:
        raise ValueError(f"dims {t} do not factor matrix side {side}")
    return t


def hermiticity_defect(m: np.ndarray) -> float:
    """Max entrywise |M - M^dagger|."""
    m = as_matrix(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return hermiticity_defect(m) <= tol


def tensor(*matrices: np.ndarray) -> np.ndarray:
    """Kronecker product, first factor slowest-varying."""
    if not matrices:
        raise ValueError("tensor of zero factors is undefined")
    out = as_matrix(matrices[0])
    for m in matrices[1:]:
        out = np.kron(out, as_matrix(m))
    return out


def _party_list(dims: tuple[int, ...], party: int | Iterable[int]) -> list[int]:
    parties = [party] if isinstance(party, (int, np.integer)) else list(party)
    for p in parties:
        if not 0 <= p < len(dims):
            raise ValueError(f"party {p} out of range for {len(dims)} parties")
    if len(set(parties)) != len(parties):
        raise ValueError(f"repeated party in {parties}")
    return [int(p) for p in parties]


def partial_transpose(m: np.ndarray, dims: Sequence[int], party: int | Iterable[int]) -> np.ndarray:
    """Transpose the indices of the chosen party (or parties) only.

    Involutive and trace-preserving; accepts a single party index or an
    iterable of them (transpositions on distinct parties commute).
    """
    m = as_matrix(m)
    dims = check_dims(dims, m.shape[0])
    parties = _party_list(dims, party)
    k = len(dims)
    t = m.reshape(dims + dims)
    axes = list(range(2 * k))
    for p in parties:
        axes[p], axes[k + p] = axes[k + p], axes[p]
    return t.transpose(axes).reshape(m.shape)


def partial_trace(m: np.ndarray, dims: Sequence[int], party: int) -> np.ndarray:
    """Trace out one party; the result acts on the remaining parties."""
    m = as_matrix(m)
    dims = check_dims(dims, m.shape[0])
    (p,) = _party_list(dims, party)
    k = len(dims)
    t = m.reshape(dims + dims)
    t = np.trace(t, axis1=p, axis2=k + p)
    rest = int(np.prod([d for i, d in enumerate(dims) if i != p], dtype=np.int64))
    return t.reshape(rest, rest)


def hermitian_eigen(m: np.ndarray, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns eigenvalues ascending and the unitary matrix of eigenvectors
    (columns), satisfying ``V @ diag(w) @ V.conj().T == M`` to within 1e-9.
    """
    m = as_matrix(m)
    defect = hermiticity_defect(m)
    if defect > tol:
        raise ValueError(f"matrix is not Hermitian (defect {defect:.3e} > {tol:.1e})")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return w, v


def min_eigenvalue(m: np.ndarray) -> float:
    """Smallest eigenvalue of the Hermitian part of ``m``."""
    m = as_matrix(m)
    if m.shape[0] == 0:
        return 0.0
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])


def is_psd(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``m`` is Hermitian within ``tol`` and its minimum eigenvalue is >= -tol."""
    m = as_matrix(m)
    defect = hermiticity_defect(m)
    if defect > max(tol, HERMITIAN_TOL):
        raise ValueError(f"matrix is not Hermitian (defect {defect:.3e})")
    return min_eigenvalue(m) >= -tol


def _inrange_indices(dims: tuple[int, ...], sub_dims: tuple[int, ...]) -> np.ndarray:
    """Global indices in a ``dims`` system whose multi-index is componentwise < sub_dims.

    Returned in lexicographic multi-index order, so position ``s`` corresponds
    to global index ``s`` of the ``sub_dims`` system.
    """
    idx = np.zeros(1, dtype=np.intp)
    for d, ds in zip(dims, sub_dims):
        idx = (idx[:, None] * d + np.arange(ds, dtype=np.intp)[None, :]).ravel()
    return idx


def embed_matrix(m: np.ndarray, dims: Sequence[int], new_dims: Sequence[int]) -> np.ndarray:
    """Zero-pad each local dimension: scatter ``m`` onto the in-range multi-indices.

    For a single party this is the familiar top-left block; for two or more
    parties the in-range multi-indices are not contiguous in lexicographic
    ordering, so the entries are scattered onto that sub-lattice instead.
    """
    m = as_matrix(m)
    dims = check_dims(dims, m.shape[0])
    new_dims = check_dims(new_dims)
    if len(new_dims) != len(dims):
        raise ValueError(f"party count mismatch: {len(dims)} vs {len(new_dims)}")
    if any(n < d for d, n in zip(dims, new_dims)):
        raise ValueError(f"new_dims {new_dims} must dominate dims {dims} componentwise")
    side = int(np.prod(new_dims, dtype=np.int64))
    out = np.zeros((side, side), dtype=complex)
    idx = _inrange_indices(new_dims, dims)
    out[np.ix_(idx, idx)] = m
    return out


def restrict_matrix(m: np.ndarray, dims: Sequence[int], sub_dims: Sequence[int]) -> np.ndarray:
    """Exact adjoint of :func:`embed_matrix`: keep rows/columns with in-range multi-indices."""
    m = as_matrix(m)
    dims = check_dims(dims, m.shape[0])
    sub_dims = check_dims(sub_dims)
    if len(sub_dims) != len(dims):
        raise ValueError(f"party count mismatch: {len(dims)} vs {len(sub_dims)}")
    if any(s > d for d, s in zip(dims, sub_dims)):
        raise ValueError(f"sub_dims {sub_dims} must not exceed dims {dims}")
    idx = _inrange_indices(dims, sub_dims)
    return m[np.ix_(idx, idx)].copy()


def embed_vector(v: np.ndarray, dims: Sequence[int], new_dims: Sequence[int]) -> np.ndarray:
    """Zero-pad a state vector onto the in-range multi-indices of the larger system."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    dims = check_dims(dims, v.size)
    new_dims = check_dims(new_dims)
    if len(new_dims) != len(dims) or any(n < d for d, n in zip(dims, new_dims)):
        raise ValueError(f"cannot embed dims {dims} into {new_dims}")
    out = np.zeros(int(np.prod(new_dims, dtype=np.int64)), dtype=complex)
    out[_inrange_indices(new_dims, dims)] = v
    return out


def matrix_to_json(m: np.ndarray) -> dict:
    """Wire format shared by every tool: row-major real/imaginary parts."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {a.shape}")
    return {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "re": [float(x) for x in a.real.ravel()],
        "im": [float(x) for x in a.imag.ravel()],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    if not isinstance(obj, dict):
        raise ValueError("matrix JSON must be an object")
    unknown = set(obj) - {"rows", "cols", "re", "im"}
    if unknown:
        raise ValueError(f"unknown matrix fields {sorted(unknown)}")
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from exc
    if re.size != rows * cols or im.size != rows * cols:
        raise ValueError(f"matrix entries do not match {rows}x{cols}")
    return (re + 1j * im).reshape(rows, cols)

"""State families for discrimination experiments.

Provides density-matrix states over a composite system, the generalized Bell
family, the nine Domino product states on (3,3), their completion to an
orthogonal product basis of any (m,n) with m,n >= 3, and the zero-padding
embedding of states into larger local dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    HERMITIAN_TOL,
    as_matrix,
    check_dims,
    embed_matrix,
    hermiticity_defect,
    matrix_from_json,
    matrix_to_json,
    min_eigenvalue,
    partial_trace,
    tensor,
)

STATE_TOL = 1e-9


@dataclass(frozen=True)
class State:
    """Unit-trace PSD matrix over a composite system."""

    rho: np.ndarray
    dims: tuple[int, ...]
    label: str = ""

    def __post_init__(self):
        rho = as_matrix(self.rho)
        dims = check_dims(self.dims, rho.shape[0])
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "dims", dims)
        defect = hermiticity_defect(rho)
        if defect > HERMITIAN_TOL:
            raise ValueError(f"state {self.label!r} is not Hermitian (defect {defect:.3e})")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > STATE_TOL:
            raise ValueError(f"state {self.label!r} has trace {tr}, expected 1")
        mineig = min_eigenvalue(rho)
        if mineig < -STATE_TOL:
            raise ValueError(f"state {self.label!r} has negative eigenvalue {mineig:.3e}")

    @property
    def side(self) -> int:
        return self.rho.shape[0]


@dataclass(frozen=True)
class StateSet:
    """Finite list of states sharing one dimension vector."""

    states: tuple[State, ...]
    label: str = ""

    def __init__(self, states: Iterable[State], label: str = ""):
        states = tuple(states)
        if not states:
            raise ValueError("a state set needs at least one state")
        dims = states[0].dims
        for s in states:
            if s.dims != dims:
                raise ValueError(f"mixed dimension vectors {dims} vs {s.dims}")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "label", label)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.states[0].dims

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self) -> Iterator[State]:
        return iter(self.states)

    def __getitem__(self, i) -> State:
        return self.states[i]

    def subset(self, indices: Sequence[int], label: str = "") -> "StateSet":
        return StateSet([self.states[i] for i in indices], label=label or self.label)

    def matrices(self) -> list[np.ndarray]:
        return [s.rho for s in self.states]


def pure_state(amplitudes: Sequence[complex], dims: Sequence[int], label: str = "") -> State:
    """Normalize an amplitude vector and form its rank-1 projector."""
    v = np.asarray(amplitudes, dtype=complex).reshape(-1)
    dims = check_dims(dims, v.size)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    v = v / norm
    return State(np.outer(v, v.conj()), dims, label=label)


def _ket(d: int, *indices_and_weights) -> np.ndarray:
    """Unnormalized superposition of computational basis kets of C^d."""
    v = np.zeros(d, dtype=complex)
    for idx, w in indices_and_weights:
        v[idx] = w
    return v


def generalized_bell_states(d: int) -> StateSet:
    """The d^2 shift-and-phase maximally entangled states of (d,d).

    Element (a,b) has amplitudes omega^(m b)/sqrt(d) on |m>|m+a mod d>,
    omega = exp(2 pi i / d); (0,0) is the uniform |Phi+>.
    """
    if d < 2:
        raise ValueError("local dimension must be at least 2")
    omega = np.exp(2j * np.pi / d)
    out = []
    for a in range(d):
        for b in range(d):
            v = np.zeros(d * d, dtype=complex)
            for m in range(d):
                v[m * d + (m + a) % d] = omega ** (m * b) / np.sqrt(d)
            out.append(pure_state(v, (d, d), label=f"bell[{a},{b}]"))
    return StateSet(out, label=f"gbell(d={d})")


def bell_states() -> StateSet:
    """The four Bell states of (2,2)."""
    return generalized_bell_states(2)


def domino_states() -> StateSet:
    """The nine orthogonal product states tiling (3,3) like dominoes."""
    plus, minus = 1 / np.sqrt(2), -1 / np.sqrt(2)
    kets = [
        (_ket(3, (0, 1)), _ket(3, (0, plus), (1, plus)), "|0>|0+1>"),
        (_ket(3, (0, 1)), _ket(3, (0, plus), (1, minus)), "|0>|0-1>"),
        (_ket(3, (0, plus), (1, plus)), _ket(3, (2, 1)), "|0+1>|2>"),
        (_ket(3, (0, plus), (1, minus)), _ket(3, (2, 1)), "|0-1>|2>"),
        (_ket(3, (2, 1)), _ket(3, (1, plus), (2, plus)), "|2>|1+2>"),
        (_ket(3, (2, 1)), _ket(3, (1, plus), (2, minus)), "|2>|1-2>"),
        (_ket(3, (1, plus), (2, plus)), _ket(3, (0, 1)), "|1+2>|0>"),
        (_ket(3, (1, plus), (2, minus)), _ket(3, (0, 1)), "|1-2>|0>"),
        (_ket(3, (1, 1)), _ket(3, (1, 1)), "|1>|1>"),
    ]
    out = [pure_state(np.kron(a, b), (3, 3), label=lab) for a, b, lab in kets]
    return StateSet(out, label="domino")


def extended_domino_basis(m: int, n: int) -> StateSet:
    """Complete orthogonal product basis of (m,n) extending the Domino states.

    The nine Domino states are zero-padded into (m,n) and completed with the
    computational product states |i>|j> for every index pair with i >= 3 or
    j >= 3, giving m*n mutually orthogonal product states in total.

    A multipartite variant follows by tensoring each basis state with the
    members of an orthonormal basis of the remaining parties; no dedicated
    constructor is provided for that.
    """
    if m < 3 or n < 3:
        raise ValueError("both local dimensions must be at least 3")
    out = [embed_state(s, (m, n)) for s in domino_states()]
    for i in range(m):
        for j in range(n):
            if i >= 3 or j >= 3:
                v = np.kron(_ket(m, (i, 1)), _ket(n, (j, 1)))
                out.append(pure_state(v, (m, n), label=f"|{i}>|{j}>"))
    return StateSet(out, label=f"domino-ext({m},{n})")


def embed_state(s: State, new_dims: Sequence[int]) -> State:
    """View a state in enlarged local dimensions by zero padding."""
    new_dims = check_dims(new_dims)
    return State(embed_matrix(s.rho, s.dims, new_dims), new_dims, label=s.label)


def embed_set(states: StateSet, new_dims: Sequence[int]) -> StateSet:
    return StateSet([embed_state(s, new_dims) for s in states], label=states.label)


def state_vector(s: State, tol: float = STATE_TOL) -> np.ndarray:
    """Amplitude vector of a pure state; rejects mixed input."""
    w, v = np.linalg.eigh(s.rho)
    if w[-1] < 1 - tol or (s.side > 1 and w[-2] > tol):
        raise ValueError(f"state {s.label!r} is not pure within tol {tol:g}")
    return v[:, -1]


def schmidt_rank(s: State, cut: Iterable[int] = (0,), tol: float = STATE_TOL) -> int:
    """Number of Schmidt coefficients of a pure state across a bipartition.

    ``cut`` lists the parties forming one side; singular values of the
    reshaped amplitude vector above 1e-9 are counted.
    """
    cut = sorted(set(int(p) for p in cut))
    k = len(s.dims)
    if any(p < 0 or p >= k for p in cut):
        raise ValueError(f"cut {cut} out of range for {k} parties")
    if not cut or len(cut) == k:
        raise ValueError("cut must be a proper nonempty subset of the parties")
    psi = state_vector(s, tol=tol)
    rest = [p for p in range(k) if p not in cut]
    t = psi.reshape(s.dims).transpose(cut + rest)
    a = t.reshape(int(np.prod([s.dims[p] for p in cut])), -1)
    return int(np.sum(np.linalg.svd(a, compute_uv=False) > 1e-9))


def pairwise_overlaps(states: StateSet) -> np.ndarray:
    """Matrix of trace(rho_i rho_j) products."""
    mats = states.matrices()
    n = len(mats)
    g = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            g[i, j] = g[j, i] = np.trace(mats[i] @ mats[j]).real
    return g


def mutually_orthogonal(states: StateSet, tol: float = DEFAULT_TOL) -> bool:
    """True iff trace(rho_i rho_j) <= tol for every pair i != j.

    For PSD matrices trace(rho sigma) = 0 is equivalent to disjoint supports,
    so this one-scalar test is support orthogonality.
    """
    g = pairwise_overlaps(states)
    np.fill_diagonal(g, 0.0)
    return bool(np.max(g) <= tol) if len(states) > 1 else True


def mix(p: float, a: State, b: State, label: str = "") -> State:
    """Convex mixture p*a + (1-p)*b."""
    if a.dims != b.dims:
        raise ValueError("mixing states of different dimension vectors")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mixing weight {p} outside [0, 1]")
    return State(p * a.rho + (1 - p) * b.rho, a.dims, label=label)


def state_set_to_json(states: StateSet) -> dict:
    return {
        "dims": list(states.dims),
        "states": [{"label": s.label, "matrix": matrix_to_json(s.rho)} for s in states],
    }


def state_set_from_json(obj: dict) -> StateSet:
    if not isinstance(obj, dict):
        raise ValueError("state set JSON must be an object")
    unknown = set(obj) - {"dims", "states"}
    if unknown:
        raise ValueError(f"unknown state-set fields {sorted(unknown)}")
    dims = check_dims(obj["dims"])
    entries = obj["states"]
    if not isinstance(entries, list) or not entries:
        raise ValueError("state set JSON needs a nonempty 'states' list")
    out = []
    for e in entries:
        unknown = set(e) - {"label", "matrix"}
        if unknown:
            raise ValueError(f"unknown state fields {sorted(unknown)}")
        out.append(State(matrix_from_json(e["matrix"]), dims, label=str(e.get("label", ""))))
    return StateSet(out)


def maximally_mixed(dims: Sequence[int]) -> State:
    dims = check_dims(dims)
    side = int(np.prod(dims))
    return State(np.eye(side) / side, dims, label="maximally-mixed")


def reduced_state(s: State, party: int) -> np.ndarray:
    """Marginal of one party, tracing out all the others."""
    rho, dims = s.rho, list(s.dims)
    for _ in range(len(dims) - 1):
        other = 1 if party == 0 else 0
        rho = partial_trace(rho, dims, other)
        dims.pop(other)
        if other < party:
            party -= 1
    return rho


def product_state(locals_: Sequence[np.ndarray], dims: Sequence[int], label: str = "") -> State:
    """Tensor product of per-party density matrices."""
    dims = check_dims(dims)
    if len(locals_) != len(dims):
        raise ValueError("one local factor per party required")
    return State(tensor(*locals_), dims, label=label)

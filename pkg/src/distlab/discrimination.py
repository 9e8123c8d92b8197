"""Distinguishability checks: perfect, unambiguous, global, and PPT-optimal.

The perfect criterion is the operational one a hit table makes testable: no
outcome may fire on two different states, and every state must be recovered
with certainty.  Unambiguous discrimination designates some outcomes as
inconclusive; the conclusive ones must never err and every state needs a
conclusive detection with positive probability.

PPT distinguishability is decided exactly (up to solver tolerance) by a
semidefinite program over PPT POVMs.  The dimension-independence harnesses
compare a state set against its zero-padded embedding: restricting a POVM of
the larger system reproduces the exact hit table, so distinguishability
cannot be gained by enlarging local dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .linalg import DEFAULT_TOL, embed_matrix, matrix_from_json, matrix_to_json, restrict_matrix
from .povm import (
    Locc1Tree,
    Povm,
    canonical_cuts,
    flatten_locc1,
    ppt_min_eigenvalue,
    random_locc1,
    random_povm,
    random_ppt_povm,
    random_sep_povm,
    restrict_locc1,
    restrict_povm,
    verify_locc1,
    verify_povm,
    verify_sep,
)
from .sdp import PtCone, SdpProblem, SdpSolution, SolveOptions, solve
from .states import StateSet, embed_set, mutually_orthogonal

# a state set counts as PPT-distinguishable when the optimal average success
# probability reaches 1 - 1e-4
DISTINGUISHABLE_MARGIN = 1e-4


@dataclass(frozen=True)
class DiscriminationVerdict:
    """Hit-table analysis of one POVM against one state set."""

    mode: str  # perfect | unambiguous
    povm_kind: str
    passes: bool
    hit_table: np.ndarray  # p(j|i) = tr(M_j rho_i), row per state
    success_probability: float
    violations: tuple[dict, ...]
    tol: float


@dataclass(frozen=True)
class GlobalVerdict:
    distinguishable: bool
    witness: Povm | None


@dataclass(frozen=True)
class PptResult:
    optimum: float
    distinguishable: bool
    povm: Povm
    solution: SdpSolution


@dataclass(frozen=True)
class Theorem1Result:
    opt_small: float
    opt_big: float
    delta: float
    small: PptResult
    big: PptResult


@dataclass(frozen=True)
class HarnessReport:
    trials: int
    seed: int
    kinds: tuple[str, ...]
    dims: tuple[int, ...]
    sub_dims: tuple[int, ...]
    failures: tuple[dict, ...]

    @property
    def passes(self) -> bool:
        return not self.failures


def hit_table(povm: Povm, states: StateSet) -> np.ndarray:
    """p(j|i) = tr(M_j rho_i); rows are states, columns outcomes."""
    if povm.dims != states.dims:
        raise ValueError(f"POVM dims {povm.dims} do not match state dims {states.dims}")
    table = np.empty((len(states), len(povm)))
    for i, s in enumerate(states):
        for j, m in enumerate(povm.elements):
            table[i, j] = np.trace(m @ s.rho).real
    return table


def _checked_table(povm: Povm, states: StateSet, tol: float) -> np.ndarray:
    report = verify_povm(povm, tol)
    if not report.passed:
        raise ValueError(
            f"invalid POVM: completeness residual {report.completeness_residual:.3e}, "
            f"min eigenvalue {min(report.element_min_eigs):.3e}"
        )
    return hit_table(povm, states)


def _live_outcomes(povm: Povm, tol: float) -> list[int]:
    # null outcomes are allowed in a POVM and skipped by the checks
    return [j for j, m in enumerate(povm.elements) if np.trace(m).real > tol]


def check_perfect(povm: Povm, states: StateSet, tol: float = DEFAULT_TOL) -> DiscriminationVerdict:
    """Perfect discrimination: outcomes fire on at most one state, states are certain.

    An outcome is assigned to the single state it hits above ``tol``; every
    state must collect total assigned probability 1 within ``tol``.
    """
    table = _checked_table(povm, states, tol)
    violations: list[dict] = []
    assigned_total = np.zeros(len(states))
    for j in _live_outcomes(povm, tol):
        hits = [i for i in range(len(states)) if table[i, j] > tol]
        if len(hits) > 1:
            violations.append({"kind": "outcome-hits-multiple-states", "outcome": j, "states": hits})
        elif len(hits) == 1:
            assigned_total[hits[0]] += table[hits[0], j]
    for i, total in enumerate(assigned_total):
        if abs(total - 1.0) > tol:
            violations.append({"kind": "state-not-identified", "state": i, "probability": float(total)})
    return DiscriminationVerdict(
        mode="perfect",
        povm_kind=povm.kind,
        passes=not violations,
        hit_table=table,
        success_probability=float(np.mean(assigned_total)),
        violations=tuple(violations),
        tol=tol,
    )


def check_unambiguous(
    povm: Povm,
    states: StateSet,
    inconclusive: Iterable[int] = (),
    tol: float = DEFAULT_TOL,
) -> DiscriminationVerdict:
    """Unambiguous discrimination: conclusive outcomes never err.

    Every conclusive outcome may hit at most one state and every state needs
    conclusive detection probability above ``tol``; the reported success
    probability is the worst conclusive probability over the states.
    """
    inconclusive = set(int(j) for j in inconclusive)
    if not set(range(len(povm))) - inconclusive:
        raise ValueError("at least one outcome must be conclusive")
    table = _checked_table(povm, states, tol)
    violations: list[dict] = []
    conclusive_total = np.zeros(len(states))
    for j in _live_outcomes(povm, tol):
        if j in inconclusive:
            continue
        hits = [i for i in range(len(states)) if table[i, j] > tol]
        if len(hits) > 1:
            violations.append({"kind": "conclusive-outcome-ambiguous", "outcome": j, "states": hits})
        elif len(hits) == 1:
            conclusive_total[hits[0]] += table[hits[0], j]
    for i, total in enumerate(conclusive_total):
        if total <= tol:
            violations.append({"kind": "state-never-detected", "state": i, "probability": float(total)})
    return DiscriminationVerdict(
        mode="unambiguous",
        povm_kind=povm.kind,
        passes=not violations,
        hit_table=table,
        success_probability=float(np.min(conclusive_total)),
        violations=tuple(violations),
        tol=tol,
    )


def global_distinguishable(states: StateSet, tol: float = DEFAULT_TOL) -> GlobalVerdict:
    """Orthogonality decides global distinguishability; orthogonal sets get a witness.

    The witness measures the support projector of each state plus the
    complement of their joint support.
    """
    if not mutually_orthogonal(states, tol):
        return GlobalVerdict(False, None)
    side = states[0].side
    cutoff = max(tol, 1e-12)
    projectors = []
    for s in states:
        w, v = np.linalg.eigh(s.rho)
        keep = v[:, w > cutoff]
        p = keep @ keep.conj().T
        projectors.append((p + p.conj().T) / 2)
    complement = np.eye(side) - sum(projectors)
    witness = Povm(projectors + [complement], states.dims, kind="projective")
    return GlobalVerdict(True, witness)


def ppt_discrimination_problem(
    states: StateSet, cuts: Sequence[Sequence[int]] | None = None
) -> SdpProblem:
    """Average-success-probability SDP over POVMs PPT on the given cuts."""
    dims = states.dims
    cuts = canonical_cuts(dims) if cuts is None else [tuple(c) for c in cuts]
    n = len(states)
    cones = tuple(tuple(PtCone(dims, c) for c in cuts) for _ in range(n))
    objective = [s.rho / n for s in states]
    return SdpProblem(objective, np.eye(states[0].side), cones)


def ppt_distinguishability(
    states: StateSet,
    cuts: Sequence[Sequence[int]] | None = None,
    opts: SolveOptions | None = None,
) -> PptResult:
    """Maximize the average success probability over PPT POVMs.

    The returned POVM is the optimizer; ``distinguishable`` holds when the
    optimum reaches 1 within the decision margin and the solver converged.
    """
    problem = ppt_discrimination_problem(states, cuts)
    solution = solve(problem, opts or SolveOptions(tol=1e-7))
    povm = Povm(solution.matrices, states.dims, kind="ppt")
    distinguishable = solution.status == "optimal" and solution.objective_value >= 1 - DISTINGUISHABLE_MARGIN
    return PptResult(
        optimum=solution.objective_value,
        distinguishable=distinguishable,
        povm=povm,
        solution=solution,
    )


def theorem1_trace_identity(states: StateSet, povm_big: Povm, sub_dims: Sequence[int]) -> float:
    """Max residual between tr(restrict(M_j) rho_i) and tr(M_j embed(rho_i)).

    Both sides are computed through independent routes; they agree exactly in
    exact arithmetic because the embedded state is supported on the in-range
    block.
    """
    sub_dims = tuple(int(d) for d in sub_dims)
    if states.dims != sub_dims:
        raise ValueError(f"states live in {states.dims}, expected {sub_dims}")
    if len(povm_big.dims) != len(sub_dims) or any(
        b < s for b, s in zip(povm_big.dims, sub_dims)
    ):
        raise ValueError(f"POVM dims {povm_big.dims} do not dominate {sub_dims}")
    worst = 0.0
    for m in povm_big.elements:
        small = restrict_matrix(m, povm_big.dims, sub_dims)
        for s in states:
            lhs = np.trace(small @ s.rho)
            rhs = np.trace(m @ embed_matrix(s.rho, sub_dims, povm_big.dims))
            worst = max(worst, abs(lhs - rhs))
    return float(worst)


def theorem1_ppt_invariance(
    states: StateSet,
    new_dims: Sequence[int],
    opts: SolveOptions | None = None,
) -> Theorem1Result:
    """PPT optimum before and after embedding; the two must agree.

    The optimum cannot grow (restriction maps the larger feasible set into
    the smaller one preserving the objective) and cannot shrink (padding an
    optimal POVM with the complement projector is feasible above).
    """
    small = ppt_distinguishability(states, opts=opts)
    big = ppt_distinguishability(embed_set(states, new_dims), opts=opts)
    return Theorem1Result(
        opt_small=small.optimum,
        opt_big=big.optimum,
        delta=big.optimum - small.optimum,
        small=small,
        big=big,
    )


def _trial_seed(seed: int, kind_index: int, offset: int) -> int:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(kind_index, offset))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _sample_of_kind(kind: str, dims, seed: int):
    if kind == "general":
        return random_povm(dims, 4, seed)
    if kind == "ppt":
        return random_ppt_povm(dims, 4, seed)
    if kind == "sep":
        return random_sep_povm(dims, 4, seed)
    if kind == "locc1":
        return random_locc1(dims, 2, seed)
    raise ValueError(f"no sampler for kind {kind!r}")


def _restriction_kind_defect(kind: str, small_povm: Povm, small_tree, tol: float):
    """Residual of the worst violated kind property of the restriction, if any."""
    report = verify_povm(small_povm, tol)
    if report.completeness_residual > tol:
        return "completeness", report.completeness_residual
    worst = min(report.element_min_eigs)
    if worst < -tol:
        return "element-psd", worst
    if kind == "ppt":
        pt_worst = ppt_min_eigenvalue(small_povm)
        if pt_worst < -tol:
            return "ppt", pt_worst
    if kind == "sep" and not verify_sep(small_povm, tol):
        return "sep-witness", float("nan")
    if kind == "locc1" and not verify_locc1(small_tree, tol):
        return "locc1-tree", float("nan")
    return None


def local_global_fuzz(
    states: StateSet,
    kinds: Sequence[str],
    new_dims: Sequence[int],
    trials: int,
    seed: int,
    tol: float = DEFAULT_TOL,
) -> HarnessReport:
    """Sampled evidence for the local-global indistinguishability property.

    Each trial draws a POVM (or measurement tree) of the given kind on the
    enlarged system, restricts it, and checks that (a) the restriction keeps
    its kind, (b) the hit-table trace identity holds to 1e-12, and (c) the
    restriction never discriminates the set when the original fails to
    discriminate the embedded set.  Failures are data, not exceptions.
    """
    new_dims = tuple(int(d) for d in new_dims)
    embedded = embed_set(states, new_dims)
    failures: list[dict] = []
    for kind_index, kind in enumerate(kinds):
        for offset in range(trials):
            trial = _trial_seed(seed, kind_index, offset)
            obj = _sample_of_kind(kind, new_dims, trial)
            if isinstance(obj, Locc1Tree):
                big_povm = flatten_locc1(obj)
                small_tree = restrict_locc1(obj, states.dims)
                small_povm = flatten_locc1(small_tree)
            else:
                big_povm = obj
                small_tree = None
                small_povm = restrict_povm(obj, states.dims)

            defect = _restriction_kind_defect(kind, small_povm, small_tree, tol)
            if defect is not None:
                failures.append(
                    {"seed_offset": offset, "kind": kind, "check": defect[0], "residual": defect[1]}
                )
                continue

            residual = theorem1_trace_identity(states, big_povm, states.dims)
            if residual > 1e-12:
                failures.append(
                    {"seed_offset": offset, "kind": kind, "check": "trace-identity", "residual": residual}
                )
                continue

            big_verdict = check_perfect(big_povm, embedded, tol)
            small_verdict = check_perfect(small_povm, states, tol)
            if small_verdict.passes and not big_verdict.passes:
                failures.append(
                    {
                        "seed_offset": offset,
                        "kind": kind,
                        "check": "discrimination-gained",
                        "residual": float("nan"),
                    }
                )
    return HarnessReport(
        trials=trials,
        seed=seed,
        kinds=tuple(kinds),
        dims=new_dims,
        sub_dims=states.dims,
        failures=tuple(sorted(failures, key=lambda f: (f["kind"], f["seed_offset"]))),
    )


def verdict_to_json(v: DiscriminationVerdict) -> dict:
    return {
        "mode": v.mode,
        "povm_kind": v.povm_kind,
        "passes": v.passes,
        "hit_table": matrix_to_json(v.hit_table.astype(complex)),
        "success_probability": v.success_probability,
        "violations": [dict(x) for x in v.violations],
        "tol": v.tol,
    }


def verdict_from_json(obj: dict) -> DiscriminationVerdict:
    unknown = set(obj) - {"mode", "povm_kind", "passes", "hit_table", "success_probability", "violations", "tol"}
    if unknown:
        raise ValueError(f"unknown verdict fields {sorted(unknown)}")
    return DiscriminationVerdict(
        mode=str(obj["mode"]),
        povm_kind=str(obj["povm_kind"]),
        passes=bool(obj["passes"]),
        hit_table=matrix_from_json(obj["hit_table"]).real,
        success_probability=float(obj["success_probability"]),
        violations=tuple(dict(x) for x in obj["violations"]),
        tol=float(obj["tol"]),
    )


def harness_to_json(r: HarnessReport) -> dict:
    return {
        "trials": r.trials,
        "seed": r.seed,
        "kinds": list(r.kinds),
        "dims": list(r.dims),
        "sub_dims": list(r.sub_dims),
        "failures": [dict(f) for f in r.failures],
        "passes": r.passes,
    }


def harness_from_json(obj: dict) -> HarnessReport:
    unknown = set(obj) - {"trials", "seed", "kinds", "dims", "sub_dims", "failures", "passes"}
    if unknown:
        raise ValueError(f"unknown harness fields {sorted(unknown)}")
    report = HarnessReport(
        trials=int(obj["trials"]),
        seed=int(obj["seed"]),
        kinds=tuple(obj["kinds"]),
        dims=tuple(obj["dims"]),
        sub_dims=tuple(obj["sub_dims"]),
        failures=tuple(dict(f) for f in obj["failures"]),
    )
    if report.passes != bool(obj["passes"]):
        raise ValueError("harness pass flag disagrees with failure list")
    return report

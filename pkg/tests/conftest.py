"""Shared fuzz machinery and the acceptance-criteria reporting hook."""

from contextlib import contextmanager

import numpy as np

from distlab.povm import (
    flatten_locc1,
    is_ppt_povm,
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

FUZZ_DIM_CONFIGS = [
    ((3, 3), (2, 2)),
    ((4, 2), (2, 2)),
    ((3, 2, 3), (2, 2, 2)),
]


def make_random_povm(kind, dims, seed, n_elements=4, branching=2):
    """One seeded POVM (or measurement tree) of the requested kind."""
    if kind == "general":
        return random_povm(dims, n_elements, seed)
    if kind == "ppt":
        return random_ppt_povm(dims, n_elements, seed)
    if kind == "sep":
        return random_sep_povm(dims, n_elements, seed)
    if kind == "locc1":
        return random_locc1(dims, branching, seed)
    raise ValueError(f"no generator for kind {kind!r}")


def restriction_defects(kind, big_dims, sub_dims, seed, tol=1e-9):
    """Check that restriction preserves the given POVM kind for one seed.

    Returns a list of (check-name, residual) pairs for every violated check;
    an empty list means the trial passed.
    """
    defects = []
    obj = make_random_povm(kind, big_dims, seed)

    if kind == "locc1":
        sub_tree = restrict_locc1(obj, sub_dims)
        if not verify_locc1(sub_tree, tol):
            defects.append(("locc1-tree-validity", np.nan))
        flat_then_restrict = restrict_povm(flatten_locc1(obj), sub_dims)
        restrict_then_flat = flatten_locc1(sub_tree)
        commute = max(
            float(np.max(np.abs(a - b)))
            for a, b in zip(flat_then_restrict.elements, restrict_then_flat.elements)
        )
        if commute > 1e-12:
            defects.append(("flatten-restrict-commutation", commute))
        small = restrict_then_flat
    else:
        small = restrict_povm(obj, sub_dims)
        if len(small) != len(obj):
            defects.append(("element-count", float(abs(len(small) - len(obj)))))

    report = verify_povm(small, tol)
    if report.completeness_residual > tol:
        defects.append(("completeness", report.completeness_residual))
    worst = min(report.element_min_eigs)
    if worst < -tol:
        defects.append(("element-psd", worst))

    if kind == "ppt":
        if not is_ppt_povm(obj, tol=tol):
            defects.append(("ppt-input", np.nan))
        worst_pt = ppt_min_eigenvalue(small)
        if worst_pt < -tol:
            defects.append(("ppt-preserved", worst_pt))
    if kind == "sep":
        if not verify_sep(small, tol):
            defects.append(("sep-witness", np.nan))
    return defects


ACCEPTANCE_LINES = []


@contextmanager
def criterion(number, description):
    """Record one acceptance criterion outcome for the terminal summary."""
    try:
        yield
    except BaseException:
        ACCEPTANCE_LINES.append(f"CRITERION {number}: FAIL - {description}")
        raise
    ACCEPTANCE_LINES.append(f"CRITERION {number}: PASS - {description}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

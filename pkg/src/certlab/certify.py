"""Exact certification by structured enumeration with a QP leaf oracle.

Every certificate minimizes (or maximizes) over admissible relabelings by
walking flip sets in size-ascending lexicographic order, re-solving the
SVM dual at each leaf (warm-started from the parent set) and reading off
margins. Prediction values are unique across optimal duals, so the
enumerated optimum equals the corresponding MILP optimum.

`brute_force_oracle` is an intentionally naive re-implementation (fresh
projected-gradient solve per leaf, no shared machinery) kept as the
reference the fast path is tested against.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError
from .svm import (
    DEFAULT_MAX_SWEEPS,
    DEFAULT_TOL,
    SvmProblem,
    margins,
    one_vs_all_split,
    solve_dual,
    solve_dual_pg,
)

DEFAULT_CAPACITY = 1_000_000


@dataclass(frozen=True)
class Budget:
    """Adversary strength: up to r = floor(epsilon * m) label changes."""

    epsilon: float
    m: int
    r: int = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.m < 1:
            raise ValueError("need at least one labeled node")
        # guard against 0.3 * 10 = 2.999... style float artifacts
        object.__setattr__(self, "r", int(math.floor(self.epsilon * self.m + 1e-9)))


@dataclass(frozen=True)
class SampleCertificate:
    node: int
    robust: bool
    worst_objective: float
    witness: tuple

    def __post_init__(self):
        if self.robust != (self.worst_objective > 0.0):
            raise ValueError("robust flag must equal worst_objective > 0")


@dataclass(frozen=True)
class CollectiveCertificate:
    max_misclassified: int
    witness: tuple
    misclassified: np.ndarray  # bool per test node under the witness

    def __post_init__(self):
        object.__setattr__(self, "misclassified",
                           np.asarray(self.misclassified, dtype=bool))


@dataclass(frozen=True)
class MetricsRow:
    epsilon: float
    certified_ratio: float
    certified_accuracy: float
    clean_accuracy: float

    def __post_init__(self):
        if self.certified_accuracy > min(self.certified_ratio, self.clean_accuracy) + 1e-12:
            raise ValueError("certified accuracy cannot exceed ratio or clean accuracy")


def binary_leaf_count(m: int, r: int) -> int:
    return sum(math.comb(m, k) for k in range(r + 1))


def multiclass_leaf_count(m: int, r: int, num_classes: int) -> int:
    return sum(math.comb(m, k) * (num_classes - 1) ** k for k in range(r + 1))


def _check_capacity(leaves: int, cap: int) -> None:
    if leaves > cap:
        raise CapacityError(leaves, cap)


def _scan_flips(Qtrain, y, C, budget: Budget, cap, tol, max_sweeps, visit) -> None:
    """Visit every flip set of size 0..r in lexicographic order.

    `visit(flips, ytil, alpha)` receives the flipped labels and an optimal
    dual point. Each leaf warm-starts from its parent (the set minus its
    largest element); the leaf QP is still solved to tolerance, so warm
    starts affect speed only.
    """
    m = y.size
    _check_capacity(binary_leaf_count(m, budget.r), cap)
    y = np.asarray(y, dtype=np.float64)
    base = solve_dual(SvmProblem(Qtrain, y, C), tol, max_sweeps)
    visit((), y, base.alpha)
    prev = {(): base.alpha}
    for k in range(1, budget.r + 1):
        cur = {}
        for combo in itertools.combinations(range(m), k):
            ytil = y.copy()
            ytil[list(combo)] *= -1.0
            sol = solve_dual(SvmProblem(Qtrain, ytil, C), tol, max_sweeps,
                             alpha0=prev[combo[:-1]])
            visit(combo, ytil, sol.alpha)
            cur[combo] = sol.alpha
        prev = cur


def certify_sample(Qtrain, Qcross_t, y, C, budget: Budget, t: int,
                   cap: int = DEFAULT_CAPACITY, tol: float = DEFAULT_TOL,
                   max_sweeps: int = DEFAULT_MAX_SWEEPS) -> SampleCertificate:
    """Worst case of sign(p_hat_t) * p_t over all admissible relabelings."""
    certs = certify_samples(Qtrain, np.atleast_2d(Qcross_t), y, C, budget, [t],
                            cap=cap, tol=tol, max_sweeps=max_sweeps)
    return certs[0]


def certify_samples(Qtrain, Qcross, y, C, budget: Budget, test_ids,
                    cap: int = DEFAULT_CAPACITY, tol: float = DEFAULT_TOL,
                    max_sweeps: int = DEFAULT_MAX_SWEEPS) -> list[SampleCertificate]:
    """Sample-wise certificates for all rows of Qcross in one enumeration pass."""
    Qcross = np.atleast_2d(np.asarray(Qcross, dtype=np.float64))
    test_ids = [int(t) for t in test_ids]
    if Qcross.shape[0] != len(test_ids):
        raise ValueError("one Qcross row per test node required")
    y = np.asarray(y, dtype=np.float64)
    state = {}

    def visit(flips, ytil, alpha):
        p = margins(alpha, ytil, Qcross)
        if not state:
            state["sign"] = np.sign(p)
            state["best"] = np.where(state["sign"] == 0.0, 0.0, np.abs(p))
            state["witness"] = [() for _ in test_ids]
        else:
            obj = state["sign"] * p
            better = obj < state["best"]
            state["best"] = np.where(better, obj, state["best"])
            for i in np.flatnonzero(better):
                state["witness"][i] = flips

    _scan_flips(Qtrain, y, C, budget, cap, tol, max_sweeps, visit)
    out = []
    for i, t in enumerate(test_ids):
        worst = float(state["best"][i])
        if state["sign"][i] == 0.0:
            # undefined clean sign counts as misclassified outright
            out.append(SampleCertificate(t, False, 0.0, ()))
        else:
            out.append(SampleCertificate(t, worst > 0.0, worst, tuple(state["witness"][i])))
    return out


def certify_collective(Qtrain, Qcross, y, C, budget: Budget, test_ids,
                       cap: int = DEFAULT_CAPACITY, tol: float = DEFAULT_TOL,
                       max_sweeps: int = DEFAULT_MAX_SWEEPS) -> CollectiveCertificate:
    """Maximum number of test predictions a single relabeling can break."""
    Qcross = np.atleast_2d(np.asarray(Qcross, dtype=np.float64))
    test_ids = [int(t) for t in test_ids]
    if not test_ids:
        raise ValueError("collective certification needs a non-empty test set")
    if Qcross.shape[0] != len(test_ids):
        raise ValueError("one Qcross row per test node required")
    y = np.asarray(y, dtype=np.float64)
    state = {}

    def visit(flips, ytil, alpha):
        p = margins(alpha, ytil, Qcross)
        if "sign" not in state:
            state["sign"] = np.sign(p)
            state["zero"] = state["sign"] == 0.0
            state["best"] = -1
        count = int(np.sum((state["sign"] * p <= 0.0) & ~state["zero"]))
        if count > state["best"]:
            state["best"] = count
            state["witness"] = flips
            state["flags"] = (state["sign"] * p <= 0.0) | state["zero"]

    _scan_flips(Qtrain, y, C, budget, cap, tol, max_sweeps, visit)
    pre_counted = int(np.sum(state["zero"]))
    return CollectiveCertificate(
        max_misclassified=state["best"] + pre_counted,
        witness=tuple(state["witness"]),
        misclassified=state["flags"],
    )


# ---------------------------------------------------------------------------
# Multi-class certificates (one-vs-all ensembles sharing one kernel)
# ---------------------------------------------------------------------------

def _ensemble_margins(Qtrain, Qcross_t, labels, num_classes, C, tol, max_sweeps,
                      warm=None):
    """One-vs-all margins p_c for a single test row; returns (p, alphas)."""
    p = np.empty(num_classes)
    alphas = []
    for c in range(1, num_classes + 1):
        yc = one_vs_all_split(labels, c)
        a0 = warm[c - 1] if warm is not None else None
        sol = solve_dual(SvmProblem(Qtrain, yc, C), tol, max_sweeps, alpha0=a0)
        p[c - 1] = margins(sol.alpha, yc, Qcross_t)[0]
        alphas.append(sol.alpha)
    return p, alphas


def _iter_relabelings(labels, num_classes, r):
    """All multi-class relabelings with at most r changed nodes, deterministic order."""
    m = labels.size
    yield (), labels
    for k in range(1, r + 1):
        for combo in itertools.combinations(range(m), k):
            choices = [
                [c for c in range(1, num_classes + 1) if c != labels[i]]
                for i in combo
            ]
            for assignment in itertools.product(*choices):
                relabeled = labels.copy()
                relabeled[list(combo)] = assignment
                yield tuple(zip(combo, assignment)), relabeled


def certify_multiclass_exact(Qtrain, Qcross_t, labels, num_classes, C,
                             budget: Budget, t: int, cap: int = DEFAULT_CAPACITY,
                             tol: float = DEFAULT_TOL,
                             max_sweeps: int = DEFAULT_MAX_SWEEPS) -> SampleCertificate:
    """Minimum of p_chat - max_{c != chat} p_c over admissible relabelings.

    The witness is a tuple of (node, new_class) pairs.
    """
    if num_classes < 2:
        raise ValueError("multi-class certification needs K >= 2")
    labels = np.asarray(labels, dtype=np.int64)
    Qcross_t = np.asarray(Qcross_t, dtype=np.float64).reshape(1, -1)
    _check_capacity(multiclass_leaf_count(labels.size, budget.r, num_classes), cap)
    p_clean, warm = _ensemble_margins(Qtrain, Qcross_t, labels, num_classes, C,
                                      tol, max_sweeps)
    c_hat = int(np.argmax(p_clean)) + 1
    best, best_witness = math.inf, ()
    for witness, relabeled in _iter_relabelings(labels, num_classes, budget.r):
        p, _ = _ensemble_margins(Qtrain, Qcross_t, relabeled, num_classes, C,
                                 tol, max_sweeps, warm=warm)
        others = np.delete(p, c_hat - 1)
        gap = float(p[c_hat - 1] - others.max())
        if gap < best:
            best, best_witness = gap, witness
    return SampleCertificate(t, best > 0.0, best, best_witness)


def certify_multiclass_inexact(Qtrain, Qcross_t, labels, num_classes, C,
                               budget: Budget, t: int, cap: int = DEFAULT_CAPACITY,
                               tol: float = DEFAULT_TOL,
                               max_sweeps: int = DEFAULT_MAX_SWEEPS) -> SampleCertificate:
    """Relaxed multi-class verdict from K decoupled binary problems.

    p_chat is minimized and every other p_c maximized independently, each
    over its own flip budget; the resulting bound never exceeds the exact
    objective, so this certificate never accepts a node the exact one
    rejects. The witness is the flip set minimizing the chat problem.
    """
    if num_classes < 2:
        raise ValueError("multi-class certification needs K >= 2")
    labels = np.asarray(labels, dtype=np.int64)
    Qcross_t = np.asarray(Qcross_t, dtype=np.float64).reshape(1, -1)
    p_clean, _ = _ensemble_margins(Qtrain, Qcross_t, labels, num_classes, C,
                                   tol, max_sweeps)
    c_hat = int(np.argmax(p_clean)) + 1

    def extremal(c, minimize):
        yc = one_vs_all_split(labels, c)
        state = {"best": math.inf if minimize else -math.inf, "witness": ()}

        def visit(flips, ytil, alpha):
            p = float(margins(alpha, ytil, Qcross_t)[0])
            if (p < state["best"]) if minimize else (p > state["best"]):
                state["best"] = p
                state["witness"] = flips

        _scan_flips(Qtrain, yc, C, budget, cap, tol, max_sweeps, visit)
        return state["best"], state["witness"]

    lowest_hat, witness = extremal(c_hat, minimize=True)
    highest_other = max(
        extremal(c, minimize=False)[0]
        for c in range(1, num_classes + 1) if c != c_hat
    )
    worst = lowest_hat - highest_other
    return SampleCertificate(t, worst > 0.0, worst, tuple(witness))


# ---------------------------------------------------------------------------
# Brute-force reference oracle
# ---------------------------------------------------------------------------

def brute_force_oracle(Qtrain, Qcross, y_or_labels, C, budget: Budget, mode: str,
                       num_classes: int = 2, cap: int = DEFAULT_CAPACITY,
                       tol: float = DEFAULT_TOL):
    """Exhaustive reference certifier; simple on purpose.

    Retrains from scratch with the projected-gradient solver at every leaf.
    mode="sample" or "multiclass" returns (robust_flags, worst_objectives)
    per Qcross row; mode="collective" returns a CollectiveCertificate.
    """
    Qcross = np.atleast_2d(np.asarray(Qcross, dtype=np.float64))
    m = np.asarray(y_or_labels).size

    if mode in ("sample", "collective"):
        y = np.asarray(y_or_labels, dtype=np.float64)
        _check_capacity(binary_leaf_count(m, budget.r), cap)
        sol = solve_dual_pg(SvmProblem(Qtrain, y, C), tol)
        sign = np.sign(margins(sol.alpha, y, Qcross))
        leaves = []
        for k in range(budget.r + 1):
            for combo in itertools.combinations(range(m), k):
                ytil = y.copy()
                ytil[list(combo)] *= -1.0
                sol = solve_dual_pg(SvmProblem(Qtrain, ytil, C), tol)
                leaves.append((combo, margins(sol.alpha, ytil, Qcross)))
        if mode == "sample":
            worst = np.min([sign * p for _, p in leaves], axis=0)
            worst = np.where(sign == 0.0, 0.0, worst)
            return worst > 0.0, worst
        zero = sign == 0.0
        best, best_combo, best_flags = -1, (), None
        for combo, p in leaves:
            flags = (sign * p <= 0.0) & ~zero
            if int(flags.sum()) > best:
                best, best_combo, best_flags = int(flags.sum()), combo, flags | zero
        return CollectiveCertificate(best + int(zero.sum()), tuple(best_combo), best_flags)

    if mode != "multiclass":
        raise ValueError(f"unknown oracle mode {mode!r}")
    labels = np.asarray(y_or_labels, dtype=np.int64)
    _check_capacity(multiclass_leaf_count(m, budget.r, num_classes), cap)

    def ensemble(relabeled):
        p = np.empty((num_classes, Qcross.shape[0]))
        for c in range(1, num_classes + 1):
            yc = one_vs_all_split(relabeled, c)
            sol = solve_dual_pg(SvmProblem(Qtrain, yc, C), tol)
            p[c - 1] = margins(sol.alpha, yc, Qcross)
        return p

    p_clean = ensemble(labels)
    c_hat = np.argmax(p_clean, axis=0)
    worst = np.full(Qcross.shape[0], math.inf)
    for k in range(budget.r + 1):
        for combo in itertools.combinations(range(m), k):
            spaces = [[c for c in range(1, num_classes + 1) if c != labels[i]]
                      for i in combo]
            for assignment in itertools.product(*spaces):
                relabeled = labels.copy()
                relabeled[list(combo)] = assignment
                p = ensemble(relabeled)
                for row in range(Qcross.shape[0]):
                    others = np.delete(p[:, row], c_hat[row])
                    worst[row] = min(worst[row], p[c_hat[row], row] - others.max())
    return worst > 0.0, worst


def metrics(certificates, predicted, truth, epsilon: float) -> MetricsRow:
    """Aggregate certified ratio / certified accuracy / clean accuracy.

    `predicted` and `truth` are aligned with the certificates; a prediction
    of 0 (undefined sign) never counts as correct.
    """
    if len(certificates) == 0:
        raise ValueError("metrics need a non-empty test set")
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.size != len(certificates) or truth.size != len(certificates):
        raise ValueError("metrics inputs are misaligned")
    robust = np.array([c.robust for c in certificates])
    correct = (predicted == truth) & (predicted != 0)
    return MetricsRow(
        epsilon=epsilon,
        certified_ratio=float(robust.mean()),
        certified_accuracy=float((robust & correct).mean()),
        clean_accuracy=float(correct.mean()),
    )

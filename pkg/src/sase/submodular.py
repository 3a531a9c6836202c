"""Per-class subset selection: maximize F(S) = sum_{i in V_k \\ S} sum_{j in S} s_ij.

F is non-monotone submodular for s >= 0. Selection runs lazy (Minoux) greedy
to exactly r_k elements, then an optional deterministic double-greedy sweep
over the greedy output that may shrink the set. All gain arithmetic uses two
running float64 vectors:

  col_sum_out[e] = sum_{i not in S+{e}} s_ie
  sel_sum[e]     = sum_{j in S} s_ej
  gain(e | S)    = col_sum_out[e] - sel_sum[e]

Ties always break toward the lowest local index.
"""

from __future__ import annotations

import heapq
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .diagnostics import alignment_error, alignment_loss, center_error, random_subset_baseline
from .io import assignments_checksum, payload_checksum
from .similarity import (
    DEFAULT_MEMORY_CAP,
    expected_augmentation_distance,
    expected_augmentation_similarity,
)
from .types import (
    ClassDiagnostics,
    ClassResult,
    EmbeddingSet,
    LatentPartition,
    SelectionConfig,
    SelectionResult,
    SimilarityMatrix,
    ValidationError,
    validate,
)

__all__ = [
    "objective",
    "marginal_gain",
    "GreedyState",
    "greedy_select",
    "double_greedy_steps",
    "double_greedy_refine",
    "allocate_budgets",
    "select_all",
]

log = logging.getLogger(__name__)


def _selection_indices(S: Iterable[int], n: int) -> np.ndarray:
    sel = np.unique(np.asarray(list(S), dtype=np.int64))
    if sel.size and (sel[0] < 0 or sel[-1] >= n):
        raise ValidationError(f"selection index out of range [0, {n})")
    return sel


def objective(S: Iterable[int], sim: SimilarityMatrix) -> float:
    """F(S) by direct summation, the reference oracle; O(n_k * |S|)."""
    n = sim.n_local
    sel = _selection_indices(S, n)
    if sel.size == 0 or sel.size == n:
        return 0.0
    outside = np.ones(n, dtype=bool)
    outside[sel] = False
    return float(sim.s[np.ix_(np.flatnonzero(outside), sel)].sum())


def marginal_gain(e: int, S: Iterable[int], sim: SimilarityMatrix) -> float:
    """F(S + {e}) - F(S) from row sums; e must not already be in S."""
    n = sim.n_local
    if not 0 <= e < n:
        raise ValidationError(f"candidate index {e} out of range [0, {n})")
    sel = _selection_indices(S, n)
    if np.isin(e, sel):
        raise ValidationError(f"candidate {e} is already selected")
    row = sim.s[e]
    inside = float(row[sel].sum())
    # row.sum() counts every i != e since s_ee = 0
    return float(row.sum()) - inside - inside


@dataclass
class GreedyState:
    """Running state of the lazy greedy sweep over one class."""

    sim: SimilarityMatrix
    selected: list[int] = field(default_factory=list)
    in_set: np.ndarray = field(init=False)
    col_sum_out: np.ndarray = field(init=False)
    sel_sum: np.ndarray = field(init=False)
    objective: float = 0.0
    heap: list[tuple[float, int, int]] = field(init=False)
    check: bool = False

    def __post_init__(self) -> None:
        n = self.sim.n_local
        self.in_set = np.zeros(n, dtype=bool)
        # S is empty: the out-sum is the full column sum (zero diagonal)
        self.col_sum_out = self.sim.s.sum(axis=0, dtype=np.float64)
        self.sel_sum = np.zeros(n, dtype=np.float64)
        self.heap = [(-self.col_sum_out[e], e, 0) for e in range(n)]
        heapq.heapify(self.heap)

    def gain(self, e: int) -> float:
        return float(self.col_sum_out[e] - self.sel_sum[e])

    def round(self) -> int:
        return len(self.selected)

    def commit(self, e: int) -> None:
        self.objective += self.gain(e)
        self.selected.append(e)
        self.in_set[e] = True
        row = self.sim.s[e]
        self.col_sum_out -= row
        self.sel_sum += row
        if self.check:
            reference = objective(self.selected, self.sim)
            assert abs(self.objective - reference) <= 1e-9 * max(
                1.0, abs(self.objective), abs(reference)
            ), f"incremental objective {self.objective} drifted from oracle {reference}"

    def pop_next(self) -> int:
        """Next element to commit: the true max-gain candidate, lowest index on ties."""
        while True:
            neg_gain, e, stamp = heapq.heappop(self.heap)
            if self.in_set[e]:
                continue
            if stamp == self.round():
                return e
            # stale upper bound: refresh and reinsert; valid because gains
            # only shrink as S grows (s >= 0)
            heapq.heappush(self.heap, (-self.gain(e), e, self.round()))


def greedy_select(sim: SimilarityMatrix, r_k: int, *, check: bool = False) -> list[int]:
    """Exactly r_k local indices in selection order.

    Elements are committed even at negative gain; the budget is a hard
    target at this stage and refinement is the only pruning step.
    """
    n = sim.n_local
    if not 0 <= r_k <= n:
        raise ValidationError(f"budget {r_k} out of range [0, {n}]")
    if r_k == 0:
        return []
    state = GreedyState(sim, check=check)
    while len(state.selected) < r_k:
        state.commit(state.pop_next())
    return list(state.selected)


def double_greedy_steps(
    S_T: Iterable[int], sim: SimilarityMatrix
) -> Iterator[tuple[int, float, float, bool]]:
    """Deterministic double-greedy sweep, yielding (e, a_e, b_e, added) per step.

    Grows S_alpha from empty and shrinks S_beta from S_T, scanning S_T in
    ascending index order; F keeps the full class as outer sum throughout.
    """
    n = sim.n_local
    ground = _selection_indices(S_T, n)
    if ground.size == 0:
        raise ValidationError("double-greedy needs a nonempty candidate set")
    col = sim.s.sum(axis=0, dtype=np.float64)
    sel_alpha = np.zeros(n, dtype=np.float64)
    sel_beta = sim.s[:, ground].sum(axis=1, dtype=np.float64)
    for e in ground:
        a_e = float(col[e] - 2.0 * sel_alpha[e])
        b_e = float(2.0 * sel_beta[e] - col[e])
        added = a_e >= b_e
        if added:
            sel_alpha += sim.s[e]
        else:
            sel_beta -= sim.s[e]
        yield int(e), a_e, b_e, added


def double_greedy_refine(S_T: Iterable[int], sim: SimilarityMatrix) -> list[int]:
    """Refined subset of S_T (ascending), possibly smaller than |S_T|."""
    return [e for e, _a, _b, added in double_greedy_steps(S_T, sim) if added]


def _largest_remainder(sizes: list[int], ids: list[int], budget: int) -> list[int]:
    denom = sum(sizes)
    quotas = [size * budget for size in sizes]
    alloc = [q // denom for q in quotas]
    remainders = [q % denom for q in quotas]
    leftover = budget - sum(alloc)
    order = sorted(range(len(ids)), key=lambda t: (-remainders[t], ids[t]))
    for t in order[:leftover]:
        alloc[t] += 1
    return alloc


def allocate_budgets(partition: LatentPartition, B: int) -> list[int]:
    """Per-class budgets r_k with sum exactly B, proportional to class sizes.

    Largest-remainder rounding in exact integer arithmetic; remainder ties
    go to the lowest class id; any r_k above its class size is capped and
    the freed budget redistributed among uncapped classes by the same rule.
    """
    sizes = list(partition.sizes())
    n = sum(sizes)
    if not 0 <= B <= n:
        raise ValidationError(f"budget {B} out of range [0, {n}]")
    result = [0] * partition.K
    active = list(range(partition.K))
    budget = B
    while active and budget:
        alloc = _largest_remainder([sizes[k] for k in active], active, budget)
        capped = [t for t, k in enumerate(active) if alloc[t] > sizes[k]]
        if not capped:
            for t, k in enumerate(active):
                result[k] = alloc[t]
            return result
        for t in capped:
            k = active[t]
            result[k] = sizes[k]
            budget -= sizes[k]
        active = [k for t, k in enumerate(active) if t not in set(capped)]
    return result


def _class_result(
    embeddings: EmbeddingSet,
    partition: LatentPartition,
    config: SelectionConfig,
    k: int,
    r_k: int,
    memory_cap: int,
) -> ClassResult:
    members = partition.class_members[k]
    size = int(members.size)
    if r_k == 0:
        return ClassResult(
            class_id=k,
            size=size,
            r_k=0,
            final_size=0,
            selected=(),
            objective_greedy=0.0,
            objective_refined=0.0,
            diagnostics=None,
            random_baseline=None,
        )

    sim = expected_augmentation_similarity(
        embeddings, members, config.tau, class_id=k, memory_cap=memory_cap
    )
    order = greedy_select(sim, r_k)
    objective_greedy = objective(order, sim)
    if config.refine:
        refined = double_greedy_refine(order, sim)
        objective_refined = objective(refined, sim)
    else:
        refined = sorted(order)
        objective_refined = objective_greedy

    distances = expected_augmentation_distance(embeddings, members, class_id=k, memory_cap=memory_cap)
    selected_global = members[np.asarray(refined, dtype=np.int64)]
    loss_subset = loss_full = None
    if embeddings.m >= 2:
        loss_subset = alignment_loss(embeddings, selected_global)
        loss_full = alignment_loss(embeddings, members)
    diagnostics = ClassDiagnostics(
        center_error=center_error(members, selected_global, distances),
        alignment_error=alignment_error(members, selected_global, distances),
        alignment_loss_subset=loss_subset,
        alignment_loss_full=loss_full,
    )
    baseline = None
    if config.baseline_count > 0:
        baseline = random_subset_baseline(
            embeddings,
            members,
            distances,
            subset_size=len(refined),
            count=config.baseline_count,
            seed=config.seed,
            class_id=k,
        )
    log.info(
        "class %d: size %d, budget %d, kept %d, F %.6g -> %.6g",
        k,
        size,
        r_k,
        len(refined),
        objective_greedy,
        objective_refined,
    )
    return ClassResult(
        class_id=k,
        size=size,
        r_k=r_k,
        final_size=len(refined),
        selected=tuple(int(g) for g in selected_global),
        objective_greedy=objective_greedy,
        objective_refined=objective_refined,
        diagnostics=diagnostics,
        random_baseline=baseline,
    )


def select_all(
    embeddings: EmbeddingSet,
    partition: LatentPartition,
    config: SelectionConfig,
    *,
    partition_source: str = "external",
    memory_cap: int = DEFAULT_MEMORY_CAP,
) -> SelectionResult:
    """Run the full per-class pipeline and assemble a SelectionResult.

    Deterministic for fixed inputs and config; classes run in parallel on
    config.threads workers (default: all cores) and any per-class failure
    aborts the whole run with the class id attached.
    """
    validate(embeddings, normalize=config.normalize).raise_if_failed()
    if partition.n != embeddings.n:
        raise ValidationError(
            f"partition covers {partition.n} examples, embeddings have {embeddings.n}"
        )
    input_checksum = payload_checksum(embeddings)
    partition_checksum = assignments_checksum(partition.assignments)
    work = embeddings.normalize() if config.normalize else embeddings

    B = config.resolve_budget(embeddings.n)
    budgets = allocate_budgets(partition, B)

    def run(k: int) -> ClassResult:
        try:
            return _class_result(work, partition, config, k, budgets[k], memory_cap)
        except Exception as exc:
            if str(exc).startswith(f"class {k}:"):
                raise
            raise type(exc)(f"class {k}: {exc}") from exc

    threads = config.threads or os.cpu_count() or 1
    if threads > 1 and partition.K > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            classes = tuple(pool.map(run, range(partition.K)))
    else:
        classes = tuple(run(k) for k in range(partition.K))

    return SelectionResult(
        config=config,
        partition_source=partition_source,
        partition_checksum=partition_checksum,
        input_checksum=input_checksum,
        classes=classes,
        total_selected=sum(c.final_size for c in classes),
    )

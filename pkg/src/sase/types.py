"""Shared domain types: embedding sets, partitions, similarity matrices, configs, results."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ValidationError",
    "FormatError",
    "EmbeddingSet",
    "LatentPartition",
    "SimilarityMatrix",
    "SelectionConfig",
    "ValidationFailure",
    "ValidationReport",
    "ClassDiagnostics",
    "RandomBaseline",
    "ClassResult",
    "SelectionResult",
    "validate",
]


class ValidationError(ValueError):
    """Semantically invalid input: shapes, finiteness, configuration, checksums."""


class FormatError(ValueError):
    """A file or byte stream does not follow the expected wire format."""


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    """n examples with m embedded views of dimension d, stored as float32.

    values has shape (n, m, d). Storage is 32-bit; every downstream
    accumulation happens in 64-bit.
    """

    values: np.ndarray
    normalized: bool = False

    def __post_init__(self) -> None:
        if self.values.ndim != 3:
            raise ValidationError(
                f"embedding values must be 3-D (n, m, d), got {self.values.ndim}-D"
            )
        if self.values.dtype != np.float32:
            raise ValidationError(
                f"embedding values must be float32, got {self.values.dtype}"
            )
        self.values.setflags(write=False)

    @classmethod
    def from_array(cls, array, normalized: bool = False) -> "EmbeddingSet":
        """Build from any float32-convertible 2-D (n, d) or 3-D (n, m, d) array.

        A 2-D array is treated as single-view (m = 1).
        """
        arr = np.asarray(array)
        if arr.dtype == object or arr.dtype.kind not in "fiub":
            raise TypeError(f"expected a float32-convertible array, got dtype {arr.dtype}")
        if arr.ndim == 2:
            arr = arr[:, None, :]
        if arr.ndim != 3:
            raise ValidationError(f"expected a 2-D or 3-D array, got {arr.ndim}-D")
        arr = np.ascontiguousarray(arr, dtype=np.float32)
        return cls(arr, normalized=normalized)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def d(self) -> int:
        return self.values.shape[2]

    def view_means(self) -> np.ndarray:
        """Per-example mean over views, accumulated in float64; shape (n, d)."""
        return self.values.mean(axis=1, dtype=np.float64)

    def normalize(self) -> "EmbeddingSet":
        """Return a copy with every view vector scaled to unit L2 norm.

        Zero vectors cannot be normalized and raise.
        """
        wide = self.values.astype(np.float64)
        norms = np.linalg.norm(wide, axis=2)
        if not np.all(norms > 0.0):
            i, j = (int(t) for t in np.argwhere(norms == 0.0)[0])
            raise ValidationError(f"zero vector cannot be normalized at (example {i}, view {j})")
        out = (wide / norms[:, :, None]).astype(np.float32)
        return EmbeddingSet(out, normalized=True)


@dataclass(frozen=True)
class ValidationFailure:
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    n: int
    m: int
    d: int
    finite: bool
    norm_min: float
    norm_max: float
    norm_mean: float
    failures: tuple[ValidationFailure, ...]

    def raise_if_failed(self) -> None:
        if not self.ok:
            raise ValidationError("; ".join(f.message for f in self.failures))


def validate(embeddings: EmbeddingSet, normalize: bool = False) -> ValidationReport:
    """Check finiteness, dimensions, and norm statistics without mutating input.

    Pass normalize=True to also reject view vectors that a later
    normalization step could not handle (zero norm).
    """
    values = embeddings.values
    n, m, d = values.shape
    failures: list[ValidationFailure] = []

    if min(n, m, d) < 1:
        failures.append(
            ValidationFailure("empty-dimension", f"all dimensions must be >= 1, got ({n}, {m}, {d})")
        )

    finite_mask = np.isfinite(values)
    finite = bool(finite_mask.all())
    if not finite:
        i, j, k = (int(t) for t in np.argwhere(~finite_mask)[0])
        failures.append(
            ValidationFailure("non-finite", f"non-finite value at (example {i}, view {j}, dim {k})")
        )

    if values.size and finite:
        norms = np.linalg.norm(values.astype(np.float64), axis=2)
        norm_min = float(norms.min())
        norm_max = float(norms.max())
        norm_mean = float(norms.mean())
    else:
        norms = np.zeros((0, 0))
        norm_min = norm_max = norm_mean = 0.0

    if finite and embeddings.normalized and norms.size:
        off = float(np.abs(norms - 1.0).max())
        if off > 1e-4:
            failures.append(
                ValidationFailure(
                    "not-normalized",
                    f"normalized flag set but a view norm is off by {off:.3e} (> 1e-4)",
                )
            )

    if finite and normalize and norms.size and norm_min == 0.0:
        i, j = (int(t) for t in np.argwhere(norms == 0.0)[0])
        failures.append(
            ValidationFailure(
                "zero-norm", f"zero vector cannot be normalized at (example {i}, view {j})"
            )
        )

    return ValidationReport(
        ok=not failures,
        n=n,
        m=m,
        d=d,
        finite=finite,
        norm_min=norm_min,
        norm_max=norm_max,
        norm_mean=norm_mean,
        failures=tuple(failures),
    )


@dataclass(frozen=True, eq=False)
class LatentPartition:
    """Disjoint classes covering all n examples.

    assignments holds a dense class id in [0, K) per example; class_members
    holds the sorted global indices of each class; source_ids remembers the
    original label/cluster id each dense class came from.
    """

    assignments: np.ndarray
    K: int
    class_members: tuple[np.ndarray, ...]
    source_ids: tuple[int, ...]

    def __post_init__(self) -> None:
        self.assignments.setflags(write=False)
        for members in self.class_members:
            members.setflags(write=False)

    @classmethod
    def from_assignments(cls, raw) -> "LatentPartition":
        """Densify an arbitrary integer assignment vector.

        Distinct values map to 0..K-1 in ascending value order; values absent
        from the vector simply never produce a class, so empty classes cannot
        occur.
        """
        arr = np.asarray(raw, dtype=np.int64)
        if arr.ndim != 1:
            raise ValidationError(f"assignments must be 1-D, got {arr.ndim}-D")
        if arr.size < 1:
            raise ValidationError("assignments must cover at least one example")
        uniq, dense = np.unique(arr, return_inverse=True)
        dense = dense.astype(np.int64)
        counts = np.bincount(dense, minlength=len(uniq))
        order = np.argsort(dense, kind="stable")
        members = tuple(np.split(order, np.cumsum(counts)[:-1]))
        return cls(
            assignments=dense,
            K=int(len(uniq)),
            class_members=members,
            source_ids=tuple(int(u) for u in uniq),
        )

    @property
    def n(self) -> int:
        return int(self.assignments.shape[0])

    def sizes(self) -> tuple[int, ...]:
        return tuple(int(len(m)) for m in self.class_members)


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """Per-class expected augmentation similarity, thresholded and clamped.

    s is symmetric with zero diagonal and nonnegative entries;
    local_index_map maps local row/column index to global example index.
    """

    class_id: int
    local_index_map: np.ndarray
    s: np.ndarray
    tau: float

    def __post_init__(self) -> None:
        self.s.setflags(write=False)
        self.local_index_map.setflags(write=False)

    @property
    def n_local(self) -> int:
        return int(self.s.shape[0])


@dataclass(frozen=True)
class SelectionConfig:
    """Knobs of a selection run. Exactly one of budget_fraction/budget_total is set."""

    budget_fraction: float | None = None
    budget_total: int | None = None
    tau: float = 0.0
    refine: bool = True
    normalize: bool = True
    seed: int = 0
    kmeans_K: int | None = None
    kmeans_iters: int = 100
    kmeans_tol: float = 1e-4
    baseline_count: int = 20
    threads: int | None = None

    def __post_init__(self) -> None:
        if (self.budget_fraction is None) == (self.budget_total is None):
            raise ValidationError("exactly one of budget_fraction/budget_total must be set")
        if self.budget_fraction is not None and not (0.0 < self.budget_fraction <= 1.0):
            raise ValidationError(f"budget_fraction must be in (0, 1], got {self.budget_fraction}")
        if self.budget_total is not None and self.budget_total < 0:
            raise ValidationError(f"budget_total must be >= 0, got {self.budget_total}")
        if not math.isfinite(self.tau):
            raise ValidationError("tau must be finite")
        if not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.kmeans_K is not None and self.kmeans_K < 1:
            raise ValidationError(f"kmeans_K must be >= 1, got {self.kmeans_K}")
        if self.kmeans_iters < 1:
            raise ValidationError(f"kmeans_iters must be >= 1, got {self.kmeans_iters}")
        if not (math.isfinite(self.kmeans_tol) and self.kmeans_tol >= 0.0):
            raise ValidationError(f"kmeans_tol must be finite and >= 0, got {self.kmeans_tol}")
        if self.baseline_count < 0:
            raise ValidationError(f"baseline_count must be >= 0, got {self.baseline_count}")
        if self.threads is not None and self.threads < 1:
            raise ValidationError(f"threads must be >= 1, got {self.threads}")

    def resolve_budget(self, n: int) -> int:
        """Total budget B for a dataset of n examples."""
        if self.budget_total is not None:
            if self.budget_total > n:
                raise ValidationError(f"budget_total {self.budget_total} exceeds dataset size {n}")
            return self.budget_total
        # floor of fraction * n, with a 1e-9 snap so 0.7 * 10 gives 7, not 6
        return int(math.floor(self.budget_fraction * n + 1e-9))


@dataclass(frozen=True)
class ClassDiagnostics:
    """Unnormalized proxies: center preservation, alignment coverage, alignment loss.

    The loss fields are None for single-view inputs (undefined at m = 1).
    """

    center_error: float
    alignment_error: float
    alignment_loss_subset: float | None
    alignment_loss_full: float | None


@dataclass(frozen=True)
class RandomBaseline:
    """Mean diagnostics over seeded uniform-random subsets of equal size."""

    count: int
    center_error_mean: float
    alignment_error_mean: float
    alignment_loss_subset_mean: float | None


@dataclass(frozen=True)
class ClassResult:
    class_id: int
    size: int
    r_k: int
    final_size: int
    selected: tuple[int, ...]
    objective_greedy: float
    objective_refined: float
    diagnostics: ClassDiagnostics | None
    random_baseline: RandomBaseline | None


@dataclass(frozen=True)
class SelectionResult:
    """Full outcome of a selection run, ready for serialization."""

    config: SelectionConfig
    partition_source: str
    partition_checksum: str
    input_checksum: str
    classes: tuple[ClassResult, ...]
    total_selected: int

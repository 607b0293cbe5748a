"""Error metrics: MAE, error-sign opposition, complementarity score, binning.

The error sign opposition proportion (ESOP) between two branches is the
percentage of objects whose signed depth errors disagree in sign; pairs
where either error is exactly zero count as not-opposite. The
complementarity score CS = ESOP / MAE (percent per meter) rewards branch
pairs that disagree often relative to how wrong they are.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .errors import EmptyInput, LengthMismatch, NonMonotoneEdges, ZeroMAE
from .fusion import soft_fuse

if TYPE_CHECKING:
    from .kitti_io import DepthEnsemble

#: Depth bins (meters) used for binned MAE tables: 0-20, 20-40, 40+.
DEFAULT_DEPTH_EDGES = (0.0, 20.0, 40.0, math.inf)

#: Elevation-error bins (meters) for robustness tables.
DEFAULT_Y_ERROR_EDGES = (0.0, 0.1, 0.2, 0.3, 0.4, math.inf)


def mae(predictions: Sequence[float], truths: Sequence[float]) -> float:
    """Mean absolute error of paired predictions and truths."""
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(truths, dtype=float)
    if p.shape != t.shape:
        raise LengthMismatch(f"{p.shape} predictions vs {t.shape} truths")
    if p.size == 0:
        raise EmptyInput("MAE needs at least one pair")
    return float(np.mean(np.abs(p - t)))


def esop(errors_a: Sequence[float], errors_b: Sequence[float]) -> float:
    """Error sign opposition proportion between two branches, in percent.

    Counts pairs with strictly opposite signs (product < 0); zero errors
    never count as opposite. Invariant under positive rescaling of either
    error sequence.
    """
    a = np.asarray(errors_a, dtype=float)
    b = np.asarray(errors_b, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatch(f"{a.shape} vs {b.shape} errors")
    if a.size == 0:
        raise EmptyInput("ESOP needs at least one pair")
    opposite = np.count_nonzero(a * b < 0)
    return 100.0 * opposite / a.size


def complementarity_score(esop_pct: float, mae_meters: float) -> float:
    """CS = ESOP / MAE, in percent per meter.

    Raises ZeroMAE when the MAE is zero (score undefined).
    """
    if not 0.0 <= esop_pct <= 100.0:
        raise ValueError(f"ESOP is a percentage in [0, 100], got {esop_pct}")
    if mae_meters < 0:
        raise ValueError("MAE cannot be negative")
    if mae_meters == 0:
        raise ZeroMAE("complementarity score is undefined at zero MAE")
    return esop_pct / mae_meters


@dataclass(frozen=True)
class BinnedMae:
    """Per-bin MAE table over half-open bins [edges[i], edges[i+1]).

    Empty bins report count 0 and MAE None.
    """

    edges: tuple[float, ...]
    maes: tuple[float | None, ...]
    counts: tuple[int, ...]


def binned_mae(predictions: Sequence[float], truths: Sequence[float],
               edges: Sequence[float] = DEFAULT_DEPTH_EDGES,
               key: Sequence[float] | None = None) -> BinnedMae:
    """MAE per bin, binning each pair by a key value.

    The key defaults to the truth value (depth-binned tables); pass e.g.
    per-object elevation errors to reproduce robustness-style tables, which
    bin depth error by how wrong the ground elevation was. Samples whose key
    falls outside [edges[0], edges[-1]) are dropped.

    Raises NonMonotoneEdges unless edges are strictly increasing.
    """
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(truths, dtype=float)
    if p.shape != t.shape:
        raise LengthMismatch(f"{p.shape} predictions vs {t.shape} truths")
    if p.size == 0:
        raise EmptyInput("binned MAE needs at least one pair")
    e = np.asarray(edges, dtype=float)
    if e.size < 2 or np.any(np.diff(e) <= 0):
        raise NonMonotoneEdges(
            f"edges must be at least 2 strictly increasing values, got {list(edges)}")
    k = t if key is None else np.asarray(key, dtype=float)
    if k.shape != p.shape:
        raise LengthMismatch(f"{k.shape} keys vs {p.shape} pairs")

    abs_err = np.abs(p - t)
    idx = np.searchsorted(e, k, side="right") - 1
    maes: list[float | None] = []
    counts: list[int] = []
    for i in range(e.size - 1):
        mask = (idx == i) & (k < e[-1])
        n = int(np.count_nonzero(mask))
        counts.append(n)
        maes.append(float(np.mean(abs_err[mask])) if n else None)
    return BinnedMae(edges=tuple(float(v) for v in e),
                     maes=tuple(maes), counts=tuple(counts))


@dataclass
class ComplementarityReport:
    """Aggregate evaluation of a set of prediction ensembles.

    esop maps branch-name pairs (ordered by first appearance) to percent
    values; branch_cs holds ESOP-vs-reference divided by the branch's own
    MAE, None for the reference itself or when undefined. Stored values keep
    full precision; rounding happens only at serialization.
    """

    n_objects: int
    reference: str | None
    branch_names: tuple[str, ...]
    branch_mae: dict[str, float]
    branch_counts: dict[str, int]
    esop: dict[tuple[str, str], float]
    branch_cs: dict[str, float | None]
    fused_mae: float | None
    fused_count: int
    binned: dict[str, BinnedMae] = field(default_factory=dict)
    flags: tuple[str, ...] = ()

    def esop_between(self, a: str, b: str) -> float:
        if (a, b) in self.esop:
            return self.esop[(a, b)]
        return self.esop[(b, a)]


def evaluate_ensembles(ensembles: Iterable["DepthEnsemble"],
                       reference: str | None = None,
                       depth_edges: Sequence[float] = DEFAULT_DEPTH_EDGES,
                       ) -> ComplementarityReport:
    """Build a ComplementarityReport from ensembles with known truth.

    Records without z_star are skipped (and flagged). Branches may be absent
    from individual records (a geometric failure upstream); per-branch
    statistics cover the records where the branch exists, and fusion uses
    whatever branches each record has.

    The reference branch for CS defaults to 'dir' when present, else the
    first branch seen.
    """
    records = [r for r in ensembles]
    usable = [r for r in records if r.z_star is not None]
    flags: list[str] = []
    skipped = len(records) - len(usable)
    if skipped:
        flags.append(f"skipped_no_truth:{skipped}")
    if not usable:
        raise EmptyInput("no ensembles with ground truth to evaluate")

    branch_names: list[str] = []
    for r in usable:
        for b in r.branches:
            if b.name not in branch_names:
                branch_names.append(b.name)

    errors: dict[str, dict[int, float]] = {name: {} for name in branch_names}
    truths = np.array([r.z_star for r in usable])
    for i, r in enumerate(usable):
        for b in r.branches:
            errors[b.name][i] = b.z - r.z_star

    branch_mae: dict[str, float] = {}
    branch_counts: dict[str, int] = {}
    for name in branch_names:
        errs = errors[name]
        branch_counts[name] = len(errs)
        if errs:
            branch_mae[name] = float(np.mean(np.abs(list(errs.values()))))

    esop_table: dict[tuple[str, str], float] = {}
    for i, a in enumerate(branch_names):
        for b in branch_names[i + 1:]:
            shared = sorted(errors[a].keys() & errors[b].keys())
            if not shared:
                flags.append(f"no_overlap:{a}|{b}")
                continue
            esop_table[(a, b)] = esop([errors[a][s] for s in shared],
                                      [errors[b][s] for s in shared])

    if reference is None:
        reference = "dir" if "dir" in branch_names else branch_names[0]
    elif reference not in branch_names:
        raise ValueError(f"reference branch '{reference}' not found")

    branch_cs: dict[str, float | None] = {}
    for name in branch_names:
        if name == reference:
            branch_cs[name] = None
            continue
        key = (name, reference) if (name, reference) in esop_table else (reference, name)
        m = branch_mae.get(name)
        if key not in esop_table or m is None:
            branch_cs[name] = None
            continue
        try:
            branch_cs[name] = complementarity_score(esop_table[key], m)
        except ZeroMAE:
            branch_cs[name] = None
            flags.append(f"zero_mae:{name}")

    fused_pred = []
    fused_truth = []
    for r in usable:
        fused = soft_fuse([(b.z, b.sigma) for b in r.branches])
        fused_pred.append(fused.z_soft)
        fused_truth.append(r.z_star)
    fused_mae = mae(fused_pred, fused_truth)

    binned = {"fused": binned_mae(fused_pred, fused_truth, depth_edges)}
    for name in branch_names:
        errs = errors[name]
        if not errs:
            continue
        rows = sorted(errs.keys())
        preds = [float(truths[i] + errs[i]) for i in rows]
        binned[name] = binned_mae(preds, [float(truths[i]) for i in rows], depth_edges)

    return ComplementarityReport(
        n_objects=len(usable),
        reference=reference,
        branch_names=tuple(branch_names),
        branch_mae=branch_mae,
        branch_counts=branch_counts,
        esop=esop_table,
        branch_cs=branch_cs,
        fused_mae=fused_mae,
        fused_count=len(fused_pred),
        binned=binned,
        flags=tuple(flags),
    )

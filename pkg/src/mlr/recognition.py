"""Eigenspace nearest-neighbor recognition.

A query image is projected onto the learned components and compared
against every stored training projection under four metrics: plain
coefficient distance (msd), variance-scaled distance (smsd), cosine
similarity (mncs) and variance-scaled dot product (smcs). The winner's
recorded command becomes the output. Metrics can be used individually
or combined by rank-sum; all tie-breaks go to the smallest index.

Scaled metrics divide by the singular values; components whose singular
value is below 1e-8 of the largest are skipped entirely so near-zero
variance directions cannot blow up the comparison. smcs is an
unnormalized dot product, so unlike the distance metrics it does not
guarantee that a query beats every other candidate against itself; it is
still maximized, and inside rank-sum only its ordering matters.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateScale, InsufficientData, ShapeError
from .learning import EigenModel, scale_image
from .memory import CommandTriple

METRIC_NAMES = ("msd", "smsd", "mncs", "smcs")
RULES = METRIC_NAMES + ("ranksum",)

# a metric score is "better" when smaller for distances, larger for similarities
_METRIC_MINIMIZES = {"msd": True, "smsd": True, "mncs": False, "smcs": False}

SCALE_EPS = 1e-8
NORM_EPS = 1e-12


def project(model: EigenModel, x: np.ndarray) -> np.ndarray:
    """Coefficients of ``x`` in the eigenspace: components applied to (x - mean)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.d,):
        raise ShapeError(f"input dimension {x.shape} != ({model.d},)")
    return model.components @ (x - model.mu)


def reconstruct(model: EigenModel, omega: np.ndarray) -> np.ndarray:
    """Image vector for the coefficients ``omega``: mean + sum of weighted components."""
    omega = np.asarray(omega, dtype=np.float64)
    if omega.shape != (model.n,):
        raise ShapeError(f"coefficient length {omega.shape} != ({model.n},)")
    return model.mu + model.components.T @ omega


def _check_pair(a, b) -> tuple:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise ShapeError(f"vector shapes differ: {a.shape} vs {b.shape}")
    return a, b


def _usable_scale(scales: np.ndarray, n: int) -> np.ndarray:
    scales = np.asarray(scales, dtype=np.float64)
    if scales.shape != (n,):
        raise ShapeError(f"scale length {scales.shape} != ({n},)")
    top = scales.max(initial=0.0)
    if top <= 0.0:
        raise DegenerateScale("every scaling component is numerically zero")
    return scales >= SCALE_EPS * top


def metric_msd(a, b) -> float:
    """Euclidean distance between two coefficient vectors."""
    a, b = _check_pair(a, b)
    return float(np.linalg.norm(a - b))


def metric_smsd(a, b, scales) -> float:
    """Euclidean distance after dividing each coefficient by its singular value."""
    a, b = _check_pair(a, b)
    usable = _usable_scale(scales, a.shape[0])
    s = np.asarray(scales, dtype=np.float64)[usable]
    return float(np.linalg.norm(a[usable] / s - b[usable] / s))


def metric_mncs(a, b) -> float:
    """Cosine of the angle between two coefficient vectors; 0 when either is ~zero."""
    a, b = _check_pair(a, b)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < NORM_EPS or nb < NORM_EPS:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def metric_smcs(a, b, scales) -> float:
    """Dot product of the variance-scaled coefficient vectors (not normalized)."""
    a, b = _check_pair(a, b)
    usable = _usable_scale(scales, a.shape[0])
    s = np.asarray(scales, dtype=np.float64)[usable]
    return float(np.dot(a[usable] / s, b[usable] / s))


@dataclass
class ProjectedDataset:
    """Training coefficients plus the command each sample recorded."""

    omegas: np.ndarray  # (t, n)
    commands: list  # list[CommandTriple], aligned by index
    source_label: str

    def __post_init__(self):
        if len(self.commands) != self.omegas.shape[0]:
            raise ShapeError(
                f"{self.omegas.shape[0]} projections vs {len(self.commands)} commands"
            )

    def __len__(self) -> int:
        return self.omegas.shape[0]


def build_projected_dataset(model: EigenModel, session) -> ProjectedDataset:
    if len(session) == 0:
        raise InsufficientData("session holds no records")
    w, h = session.manifest.image_width, session.manifest.image_height
    if (w, h) != (model.width, model.height):
        raise ShapeError(f"session geometry {w}x{h} != model {model.width}x{model.height}")
    omegas = np.array([project(model, scale_image(img)) for img in session.images()])
    commands = [rec.command for rec in session.records]
    return ProjectedDataset(omegas, commands, session.label)


def score_all(model: EigenModel, dataset: ProjectedDataset, omega: np.ndarray) -> dict:
    """All four metric score vectors of ``omega`` against every stored sample."""
    stored = dataset.omegas
    diff = stored - omega
    msd = np.sqrt(np.sum(diff * diff, axis=1))

    scales = model.singular_values
    usable = _usable_scale(scales, model.n)
    s = scales[usable]
    scaled_q = omega[usable] / s
    scaled_stored = stored[:, usable] / s
    sdiff = scaled_stored - scaled_q
    smsd = np.sqrt(np.sum(sdiff * sdiff, axis=1))

    qn = np.linalg.norm(omega)
    sn = np.linalg.norm(stored, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        mncs = (stored @ omega) / (sn * qn)
    mncs = np.where((qn < NORM_EPS) | (sn < NORM_EPS), 0.0, mncs)

    smcs = scaled_stored @ scaled_q
    return {"msd": msd, "smsd": smsd, "mncs": mncs, "smcs": smcs}


def _best_index(scores: np.ndarray, minimize: bool) -> int:
    # np.argmin/argmax already break ties toward the smallest index
    return int(np.argmin(scores) if minimize else np.argmax(scores))


def _competition_ranks(scores: np.ndarray, minimize: bool) -> np.ndarray:
    """0-based ranks where ties share the smallest rank among them."""
    key = scores if minimize else -scores
    order = np.argsort(key, kind="stable")
    ranks = np.empty(len(key), dtype=np.int64)
    rank = 0
    for pos, idx in enumerate(order):
        if pos > 0 and key[idx] != key[order[pos - 1]]:
            rank = pos
        ranks[idx] = rank
    return ranks


@dataclass
class RecognitionResult:
    best_index: int
    command: CommandTriple
    per_metric: dict  # metric name -> {"index": int, "score": float}
    scores_of_winner: dict  # metric name -> float
    aggregation: str


def recognize(
    model: EigenModel,
    dataset: ProjectedDataset,
    x: np.ndarray,
    rule: str = "ranksum",
) -> RecognitionResult:
    """Best-matching stored sample for the image vector ``x`` under ``rule``."""
    if rule not in RULES:
        raise ValueError(f"unknown rule {rule!r}; choose one of {RULES}")
    if len(dataset) == 0:
        raise InsufficientData("projected dataset is empty")
    omega = project(model, x)
    tables = score_all(model, dataset, omega)

    per_metric = {}
    for name in METRIC_NAMES:
        idx = _best_index(tables[name], _METRIC_MINIMIZES[name])
        per_metric[name] = {"index": idx, "score": float(tables[name][idx])}

    if rule == "ranksum":
        total = sum(
            _competition_ranks(tables[name], _METRIC_MINIMIZES[name])
            for name in METRIC_NAMES
        )
        best = int(np.argmin(total))
    else:
        best = per_metric[rule]["index"]

    return RecognitionResult(
        best_index=best,
        command=dataset.commands[best],
        per_metric=per_metric,
        scores_of_winner={name: float(tables[name][best]) for name in METRIC_NAMES},
        aggregation=rule,
    )


def tied_best_indices(model: EigenModel, dataset: ProjectedDataset, x: np.ndarray, rule: str):
    """Indices whose score exactly ties the winner under ``rule``."""
    omega = project(model, x)
    tables = score_all(model, dataset, omega)
    if rule == "ranksum":
        total = sum(
            _competition_ranks(tables[name], _METRIC_MINIMIZES[name])
            for name in METRIC_NAMES
        )
        return np.nonzero(total == total.min())[0]
    scores = tables[rule]
    best = scores.min() if _METRIC_MINIMIZES[rule] else scores.max()
    return np.nonzero(scores == best)[0]


def timed_recognize(model, dataset, x, rule: str = "ranksum"):
    """recognize() plus the wall-clock milliseconds it took."""
    t0 = time.perf_counter()
    result = recognize(model, dataset, x, rule)
    return result, (time.perf_counter() - t0) * 1e3

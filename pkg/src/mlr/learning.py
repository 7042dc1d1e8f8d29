"""Eigenspace learning over demonstration images.

Images are grayscaled, flattened into the columns of a data matrix,
centered on their mean, and eigendecomposed. When the pixel dimension
exceeds the sample count the spectrum is computed through the small
Gram matrix phi^T phi and mapped back, which is exact for the nonzero
part of the spectrum and is the only tractable route for image-sized
vectors. The learned model (mean, eigenvalues, singular values,
components) is persisted in the textual ``MLR-MODEL 1`` format.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    CorruptModel,
    InsufficientData,
    InsufficientVariance,
    NumericalError,
    ParseError,
    ShapeError,
    VersionError,
)

MODEL_HEADER = "MLR-MODEL 1"

# ITU-R BT.601 luma weights for the RGB -> gray conversion
GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])

# components whose eigenvalue falls below this fraction of the largest are
# treated as rank deficiency, not signal
RANK_EPS = 1e-12


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


def scale_image(raster: np.ndarray) -> np.ndarray:
    """Grayscale an 8-bit RGB raster and flatten it row-major to a [0,255] vector."""
    raster = np.asarray(raster)
    if raster.ndim != 3 or raster.shape[2] != 3:
        raise ShapeError(f"expected (h, w, 3) raster, got shape {raster.shape}")
    gray = _round_half_up(raster.astype(np.float64) @ GRAY_WEIGHTS)
    return np.clip(gray, 0.0, 255.0).ravel()


def build_data_matrix(vectors) -> np.ndarray:
    """Stack sample vectors as the columns of a (d, t) matrix, preserving order."""
    vectors = [np.asarray(v, dtype=np.float64) for v in vectors]
    if len(vectors) < 2:
        raise InsufficientData(f"need at least 2 vectors, got {len(vectors)}")
    d = vectors[0].shape
    if any(v.ndim != 1 for v in vectors) or any(v.shape != d for v in vectors):
        raise ShapeError("sample vectors must be 1-D and of equal dimension")
    return np.column_stack(vectors)


def compute_mean(matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ShapeError(f"expected a (d, t) matrix, got shape {matrix.shape}")
    if matrix.shape[1] < 1:
        raise InsufficientData("cannot average an empty matrix")
    return matrix.mean(axis=1)


def center(matrix: np.ndarray, mu: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if matrix.ndim != 2 or mu.shape != (matrix.shape[0],):
        raise ShapeError(f"mean of shape {mu.shape} does not match matrix {matrix.shape}")
    return matrix - mu[:, None]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Flip each row so its first entry above 1e-12 in magnitude is positive."""
    out = components.copy()
    for row in out:
        nz = np.nonzero(np.abs(row) > 1e-12)[0]
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    return out


def fit_eigenspace(phi: np.ndarray, n_kept: int, method: str = "auto"):
    """Top eigenpairs of the scatter matrix phi phi^T.

    Returns ``(eigenvalues, singular_values, components)`` with eigenvalues
    descending, ``eigenvalues[i] == singular_values[i]**2`` exactly, and
    components as orthonormal rows of shape (n, d). Directions whose
    eigenvalue is below 1e-12 of the largest are dropped as rank
    deficiency, so fewer than ``n_kept`` rows may come back.

    ``method`` selects the decomposition route: ``"direct"`` works on the
    d x d scatter matrix, ``"gram"`` on the t x t Gram matrix (exact for
    the nonzero spectrum), ``"auto"`` picks gram when d > t.
    """
    phi = np.asarray(phi, dtype=np.float64)
    if phi.ndim != 2:
        raise ShapeError(f"expected a (d, t) matrix, got shape {phi.shape}")
    d, t = phi.shape
    if t < 2:
        raise InsufficientData(f"need at least 2 samples, got {t}")
    if not 1 <= n_kept <= t - 1:
        raise ConfigError(f"n_kept={n_kept} outside valid range [1, {t - 1}]")
    if method not in ("auto", "direct", "gram"):
        raise ConfigError(f"unknown method {method!r}")
    if method == "auto":
        method = "gram" if d > t else "direct"

    try:
        if method == "gram":
            evals, evecs = np.linalg.eigh(phi.T @ phi)
        else:
            evals, evecs = np.linalg.eigh(phi @ phi.T)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"eigendecomposition failed: {e}") from None

    order = np.argsort(evals)[::-1]
    evals = np.maximum(evals[order], 0.0)
    evecs = evecs[:, order]
    if evals[0] <= 0.0:
        raise InsufficientVariance("centered data has an all-zero spectrum")
    usable = evals > RANK_EPS * evals[0]
    evals = evals[usable][:n_kept]
    evecs = evecs[:, usable][:, :n_kept]

    if method == "gram":
        mapped = phi @ evecs
        components = (mapped / np.linalg.norm(mapped, axis=0)).T
    else:
        components = evecs.T
    components = _fix_signs(components)

    singular_values = np.sqrt(evals)
    eigenvalues = singular_values * singular_values
    return eigenvalues, singular_values, components


@dataclass
class EigenModel:
    """Learned eigenspace: mean image, spectrum and orthonormal components."""

    mu: np.ndarray  # (d,)
    eigenvalues: np.ndarray  # (n,) descending
    singular_values: np.ndarray  # (n,), eigenvalues == singular_values**2
    components: np.ndarray  # (n, d) orthonormal rows
    width: int
    height: int
    source_label: str

    @property
    def d(self) -> int:
        return self.mu.shape[0]

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]


def validate_model(model: EigenModel, ortho_tol: float = 1e-5) -> None:
    lam = model.eigenvalues
    if lam.ndim != 1 or np.any(np.diff(lam) > 0) or np.any(lam < 0):
        raise CorruptModel("eigenvalues must be non-negative and descending")
    if model.components.shape != (model.n, model.d):
        raise CorruptModel(
            f"components shape {model.components.shape} != ({model.n}, {model.d})"
        )
    gram = model.components @ model.components.T
    if np.max(np.abs(gram - np.eye(model.n))) > ortho_tol:
        raise CorruptModel("components are not orthonormal")
    if model.width * model.height != model.d:
        raise CorruptModel(f"geometry {model.width}x{model.height} != dimension {model.d}")


def learn_session(session, n_kept: int) -> EigenModel:
    """Learn an eigenspace from a loaded session's images."""
    t = len(session)
    if t < 2:
        raise InsufficientData(f"session has {t} images, need at least 2")
    if not 1 <= n_kept <= t - 1:
        raise ConfigError(f"n_kept={n_kept} outside valid range [1, {t - 1}]")
    w, h = session.manifest.image_width, session.manifest.image_height
    vectors = []
    for i, image in enumerate(session.images()):
        if image.shape != (h, w, 3):
            raise ShapeError(f"image {i} has shape {image.shape}, session says {(h, w, 3)}")
        vectors.append(scale_image(image))
    matrix = build_data_matrix(vectors)
    mu = compute_mean(matrix)
    phi = center(matrix, mu)
    eigenvalues, singular_values, components = fit_eigenspace(phi, n_kept)
    return EigenModel(
        mu=mu,
        eigenvalues=eigenvalues,
        singular_values=singular_values,
        components=components,
        width=w,
        height=h,
        source_label=session.label,
    )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_vec(v: np.ndarray) -> str:
    return " ".join(_fmt(x) for x in v)


def save_model(model: EigenModel, path) -> None:
    validate_model(model)
    lines = [
        MODEL_HEADER,
        str(model.width),
        str(model.height),
        str(model.d),
        str(model.n),
        model.source_label,
        _fmt_vec(model.mu),
        _fmt_vec(model.eigenvalues),
        _fmt_vec(model.singular_values),
    ]
    lines.extend(_fmt_vec(row) for row in model.components)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def _parse_vec(line: str, length: int, what: str) -> np.ndarray:
    try:
        v = np.array([float(x) for x in line.split()], dtype=np.float64)
    except ValueError:
        raise ParseError(f"bad float in {what}") from None
    if v.shape != (length,):
        raise ParseError(f"{what}: expected {length} values, got {v.shape[0]}")
    return v


def load_model(path) -> EigenModel:
    text = Path(path).read_text(encoding="ascii")
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty model file")
    if lines[0] != MODEL_HEADER:
        if lines[0].startswith("MLR-MODEL"):
            raise VersionError(f"unsupported model version {lines[0]!r}")
        raise ParseError(f"bad model header {lines[0]!r}")
    try:
        width, height, d, n = (int(x) for x in lines[1:5])
        source_label = lines[5]
    except (ValueError, IndexError):
        raise ParseError("malformed model geometry header") from None
    if n < 1 or d < 1:
        raise ParseError(f"model declares n={n}, d={d}")
    if len(lines) != 9 + n:
        raise ParseError(f"expected {9 + n} lines, got {len(lines)}")
    model = EigenModel(
        mu=_parse_vec(lines[6], d, "mean"),
        eigenvalues=_parse_vec(lines[7], n, "eigenvalues"),
        singular_values=_parse_vec(lines[8], n, "singular values"),
        components=np.array([_parse_vec(lines[9 + i], d, f"component {i}") for i in range(n)]),
        width=width,
        height=height,
        source_label=source_label,
    )
    validate_model(model)
    return model

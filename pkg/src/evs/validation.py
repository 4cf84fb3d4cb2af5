"""Input validation helpers shared by the estimator-facing surfaces."""
from __future__ import annotations

import numpy as np

from .errors import DataError, ShapeError

THUMBNAIL_SHAPE = (3, 90, 160)


def check_image_batch(X, *, expect_hw: tuple[int, int] | None = None) -> np.ndarray:
    """Coerce to a float32 (N, 3, H, W) batch with values in [0, 1].

    Accepts a single (3, H, W) image, a list of images, or a stacked batch.
    uint8 input is rescaled by 1/255; float input must already be normalized.
    """
    a = np.asarray(X)
    if a.ndim == 3:
        a = a[None]
    if a.ndim != 4 or a.shape[1] != 3:
        raise ShapeError(f"expected (N, 3, H, W) image batch, got {a.shape}")
    if expect_hw is not None and a.shape[2:] != expect_hw:
        raise ShapeError(f"expected spatial dims {expect_hw}, got {a.shape[2:]}")
    if a.dtype == np.uint8:
        a = a.astype(np.float32) / 255.0
    else:
        a = a.astype(np.float32, copy=False)
        if a.size and (a.min() < -1e-6 or a.max() > 1.0 + 1e-6):
            raise DataError(
                f"float images must be normalized to [0, 1], got range "
                f"[{a.min():.4g}, {a.max():.4g}]")
    return np.ascontiguousarray(a)


def check_thumbnail(thumbnail) -> np.ndarray:
    """Validate one classifier input: exactly (3, 90, 160), values in [0, 1]."""
    a = np.asarray(thumbnail)
    if a.ndim != 3 or a.shape != THUMBNAIL_SHAPE:
        raise ShapeError(f"thumbnail must have shape {THUMBNAIL_SHAPE}, got {a.shape}")
    return check_image_batch(a[None], expect_hw=THUMBNAIL_SHAPE[1:])[0]


def check_labels(y, n: int) -> list[str]:
    labels = [str(v) for v in y]
    if len(labels) != n:
        raise ShapeError(f"got {len(labels)} labels for {n} images")
    return labels


def check_is_fitted(est, attr: str = "model_") -> None:
    if getattr(est, attr, None) is None:
        raise DataError(f"{type(est).__name__} is not fitted yet; call fit() first")

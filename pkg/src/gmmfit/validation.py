"""Input validation helpers shared by the estimator API and the CLI."""

from __future__ import annotations

import numpy as np


def check_samples(X, min_samples: int = 1) -> np.ndarray:
    """Coerce sample input to a finite 1-D float array.

    Accepts shape (n,), (n, 1), or anything squeezable to 1-D, matching the
    column-vector convention of estimator pipelines.
    """
    x = np.asarray(X, dtype=float)
    if x.ndim == 2 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 1:
        raise ValueError(f"expected 1-D samples, got shape {np.shape(X)}")
    if x.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    return x


def check_fitted(estimator, attribute: str) -> None:
    if getattr(estimator, attribute, None) is None:
        raise RuntimeError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )

"""Loss terms for the detection/segmentation networks, with analytic gradients.

Every operation returns a :class:`LossValue` carrying the scalar and the
closed-form gradient with respect to the predicted input(s), so external
trainers can cross-check their autodiff and the test suite can verify each
gradient against central finite differences. No autodiff engine is involved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatch, EmptyOmega, RasterTooSmall, ShapeMismatch
from .raster import SOBEL_X, SOBEL_Y, _correlate3, _correlate3_adjoint, ensure_same_shape

CLAMP_EPS = 1e-7
DICE_SMOOTH = 1e-3


@dataclass(frozen=True)
class LossWeights:
    """Balance factors for the total loss: detection + alpha*feature + beta*dynamic."""

    alpha: float = 0.1
    beta: float = 0.15

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("loss weights must be non-negative")


@dataclass(frozen=True)
class LossValue:
    """Scalar loss plus gradient(s) matching the differentiated argument(s).

    ``gradient`` is with respect to the first predicted input; ``gradient_b``
    is present for two-input losses (feature-constraint: second embedding;
    dynamic loss: detection output).
    """

    value: float
    gradient: np.ndarray | None = None
    gradient_b: np.ndarray | None = field(default=None)


def _as_float(x: "LossValue | float") -> float:
    return x.value if isinstance(x, LossValue) else float(x)


def _valid_mask(shape: tuple[int, ...], valid: np.ndarray | None) -> np.ndarray:
    if valid is None:
        return np.ones(shape, dtype=bool)
    valid = np.asarray(valid)
    if valid.shape != shape:
        raise ShapeMismatch(f"valid mask {valid.shape} vs raster {shape}")
    return valid > 0


def ce_loss(
    pred: np.ndarray, target: np.ndarray, valid: np.ndarray | None = None
) -> LossValue:
    """Mean binary cross-entropy over valid pixels.

    Predictions are clamped to [eps, 1-eps] (eps = 1e-7); the gradient is zero
    wherever the clamp is active.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    ensure_same_shape(pred, target)
    v = _valid_mask(pred.shape, valid)
    n = int(v.sum())
    grad = np.zeros_like(pred)
    if n == 0:
        return LossValue(0.0, grad)
    p = np.clip(pred, CLAMP_EPS, 1.0 - CLAMP_EPS)
    per_pixel = -(target * np.log(p) + (1.0 - target) * np.log(1.0 - p))
    value = float(per_pixel[v].sum() / n)
    active = v & (pred > CLAMP_EPS) & (pred < 1.0 - CLAMP_EPS)
    grad[active] = (-target[active] / p[active] + (1.0 - target[active]) / (1.0 - p[active])) / n
    return LossValue(value, grad)


def dice_loss(
    pred: np.ndarray, target: np.ndarray, valid: np.ndarray | None = None
) -> LossValue:
    """Soft Dice loss ``1 - (2*sum(pt) + s) / (sum(p) + sum(t) + s)``, s = 1e-3."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    ensure_same_shape(pred, target)
    v = _valid_mask(pred.shape, valid)
    p_sum = float(pred[v].sum())
    t_sum = float(target[v].sum())
    inter = float((pred[v] * target[v]).sum())
    denom = p_sum + t_sum + DICE_SMOOTH
    numer = 2.0 * inter + DICE_SMOOTH
    value = 1.0 - numer / denom
    grad = np.zeros_like(pred)
    grad[v] = -(2.0 * target[v] * denom - numer) / denom**2
    return LossValue(value, grad)


def mse_loss(
    pred: np.ndarray, target: np.ndarray, weights: np.ndarray | None = None
) -> LossValue:
    """Weighted mean squared error, normalized by the count of pixels with
    positive weight (all pixels when no weights are given)."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    ensure_same_shape(pred, target)
    if weights is None:
        w = np.ones_like(pred)
        n = pred.size
    else:
        w = np.asarray(weights, dtype=np.float64)
        ensure_same_shape(pred, w)
        n = int((w > 0).sum())
    grad = np.zeros_like(pred)
    if n == 0:
        return LossValue(0.0, grad)
    diff = pred - target
    value = float((w * diff * diff).sum() / n)
    grad = 2.0 * w * diff / n
    return LossValue(value, grad)


def detection_loss(
    q_hat: np.ndarray, enc: np.ndarray, w: np.ndarray
) -> LossValue:
    """Weighted MSE between the detection output and the Gaussian encoding.

    The sum runs over Omega (pixels with positive weight); pixels where the
    encoding is -1 are excluded regardless of their weight and contribute
    nothing to either value or gradient.
    """
    q_hat = np.asarray(q_hat, dtype=np.float64)
    enc = np.asarray(enc, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    ensure_same_shape(q_hat, enc, w)
    eff_w = np.where(enc == -1.0, 0.0, w)
    n = int((eff_w > 0).sum())
    if n == 0:
        raise EmptyOmega("no pixel participates in the detection loss")
    diff = q_hat - enc
    value = float((eff_w * diff * diff).sum() / n)
    grad = 2.0 * eff_w * diff / n
    return LossValue(value, grad)


def gradient_mse_loss(
    pred_h: np.ndarray, target_h: np.ndarray, axis: str
) -> LossValue:
    """MSE between Sobel gradients (along ``axis`` in {"x", "y"}) of two rasters.

    The analytic gradient back-propagates through the stencil via the adjoint
    correlation, including the replicate-padding fold at the borders.
    """
    pred_h = np.asarray(pred_h, dtype=np.float64)
    target_h = np.asarray(target_h, dtype=np.float64)
    ensure_same_shape(pred_h, target_h)
    if min(pred_h.shape) < 3:
        raise RasterTooSmall(f"gradient loss needs at least 3x3, got {pred_h.shape}")
    kernel = {"x": SOBEL_X, "y": SOBEL_Y}.get(axis)
    if kernel is None:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    diff = _correlate3(pred_h, kernel) - _correlate3(target_h, kernel)
    n = pred_h.size
    value = float((diff * diff).sum() / n)
    grad = _correlate3_adjoint(2.0 * diff / n, kernel)
    return LossValue(value, grad)


def cfc_loss(a: np.ndarray, b: np.ndarray) -> LossValue:
    """Consistent-feature-constraint: mean squared L2 gap between embeddings,
    ``(1/dim) * ||a - b||^2``. Symmetric; gradients for both arguments."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size != b.size:
        raise DimMismatch(f"embedding dims differ: {a.size} vs {b.size}")
    if a.size == 0:
        raise DimMismatch("embeddings must have positive dimension")
    diff = a - b
    value = float((diff * diff).sum() / a.size)
    grad_a = 2.0 * diff / a.size
    return LossValue(value, grad_a, -grad_a)


def dyn_loss(
    p_hat: np.ndarray, q_hat: np.ndarray, m_pse: np.ndarray
) -> LossValue:
    """Dynamic supervision loss: CE of the segmentation output against the
    pseudo-label plus MSE of the detection output against it."""
    m = np.asarray(m_pse, dtype=np.float64)
    ce = ce_loss(p_hat, m)
    mse = mse_loss(q_hat, m)
    return LossValue(ce.value + mse.value, ce.gradient, mse.gradient)


def total_loss(
    det: "LossValue | float",
    fea: "LossValue | float",
    dyn: "LossValue | float",
    weights: LossWeights = LossWeights(),
) -> float:
    """Total training loss: detection + alpha*feature + beta*dynamic."""
    return _as_float(det) + weights.alpha * _as_float(fea) + weights.beta * _as_float(dyn)


def pretrain_loss(
    preds: tuple[np.ndarray, np.ndarray, np.ndarray],
    targets: tuple[np.ndarray, np.ndarray, np.ndarray],
) -> LossValue:
    """Source-domain pretraining loss for (probability, hover-x, hover-y).

    CE + Dice on the probability, MSE on both hover maps, and gradient-MSE on
    both hover maps, summed with unit weights. The returned gradient is with
    respect to the predicted probability.
    """
    p_hat, hx_hat, hy_hat = preds
    p, hx, hy = targets
    ce = ce_loss(p_hat, p)
    dc = dice_loss(p_hat, p)
    terms = [
        ce,
        dc,
        mse_loss(hx_hat, hx),
        mse_loss(hy_hat, hy),
        gradient_mse_loss(hx_hat, hx, "x"),
        gradient_mse_loss(hy_hat, hy, "y"),
    ]
    value = float(sum(t.value for t in terms))
    return LossValue(value, ce.gradient + dc.gradient)

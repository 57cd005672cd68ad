"""Two-step transfer estimator for a known transferable source set.

Step one pools the target sample with the transferable sources and fits
KRR at the source-rate ridge; step two fits KRR at the debias-rate ridge
on the target residuals of the pooled fit. The estimator is their sum.
The no-debias variant keeps step one and replaces step two with the zero
function, which is what ablations compare against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .kernels import Dataset, KernelConfig, RepresenterFunction
from .krr import KrrModel, fit_krr, predict

__all__ = [
    "SourceCollection",
    "TransferModel",
    "fit_pooled",
    "fit_debias",
    "fit_ah_tkrr",
    "fit_ah_tkrr_wd",
    "predict_transfer",
]


@dataclass(frozen=True)
class SourceCollection:
    """Source studies indexed 1..m plus the transferable index set.

    transferable is an ordered tuple of distinct 1-based indices; pooling
    concatenates the listed studies in exactly this order after the target.
    """

    sources: tuple[Dataset, ...]
    transferable: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "sources", tuple(self.sources))
        idx = tuple(int(i) for i in self.transferable)
        m = len(self.sources)
        for i in idx:
            if not 1 <= i <= m:
                raise ValueError(f"transferable index {i} outside 1..{m}")
        if len(set(idx)) != len(idx):
            raise ValueError(f"transferable indices must be distinct: {idx}")
        d = {s.d for s in self.sources}
        if len(d) > 1:
            raise ValueError(f"sources disagree on covariate dimension: {sorted(d)}")
        object.__setattr__(self, "transferable", idx)

    @property
    def m(self) -> int:
        return len(self.sources)

    @property
    def n_transferable(self) -> int:
        return sum(self.sources[i - 1].n for i in self.transferable)


@dataclass(frozen=True)
class TransferModel:
    """Fitted two-step estimator: pooled fit plus debias fit."""

    pooled: KrrModel
    debias: KrrModel
    lambda1: float
    lambda2: float


def _pooled_dataset(target: Dataset, sources: SourceCollection) -> Dataset:
    if sources.sources and sources.sources[0].d != target.d:
        raise ValueError(
            f"target dimension {target.d} differs from sources {sources.sources[0].d}"
        )
    picked = [sources.sources[i - 1] for i in sources.transferable]
    x = np.concatenate([target.x] + [s.x for s in picked], axis=0)
    y = np.concatenate([target.y] + [s.y for s in picked], axis=0)
    return Dataset(x=x, y=y)


def fit_pooled(
    target: Dataset, sources: SourceCollection, lambda1: float, cfg: KernelConfig
) -> KrrModel:
    """Fit KRR on the target concatenated with the transferable sources.

    With an empty transferable set this runs the same concatenation and fit
    code on the bare target, so it agrees with fit_krr bit for bit.
    """
    return fit_krr(_pooled_dataset(target, sources), lambda1, cfg)


def fit_debias(
    target: Dataset, pooled: KrrModel, lambda2: float, cfg: KernelConfig
) -> KrrModel:
    """Fit KRR on the target residuals y - pooled(x)."""
    w = target.y - predict(pooled, target.x)
    return fit_krr(Dataset(x=target.x, y=w), lambda2, cfg)


def fit_ah_tkrr(
    target: Dataset,
    sources: SourceCollection,
    lambda1: float,
    lambda2: float,
    cfg: KernelConfig,
) -> TransferModel:
    """Two-step fit: pooled step at lambda1, debias step at lambda2."""
    pooled = fit_pooled(target, sources, lambda1, cfg)
    debias = fit_debias(target, pooled, lambda2, cfg)
    return TransferModel(
        pooled=pooled, debias=debias, lambda1=float(lambda1), lambda2=float(lambda2)
    )


def fit_ah_tkrr_wd(
    target: Dataset, sources: SourceCollection, lambda1: float, cfg: KernelConfig
) -> TransferModel:
    """No-debias ablation: pooled step only, debias is the zero function.

    The zero function is stored as zero coefficients on the target anchors
    so the prediction path is identical to the full estimator's.
    """
    pooled = fit_pooled(target, sources, lambda1, cfg)
    zero = RepresenterFunction(
        anchors=target.x, coefficients=np.zeros(target.n), kernel=cfg
    )
    debias = KrrModel(function=zero, ridge=float(lambda1), sample_size=target.n)
    return TransferModel(
        pooled=pooled, debias=debias, lambda1=float(lambda1), lambda2=0.0
    )


def predict_transfer(model: TransferModel, x: NDArray) -> NDArray[np.float64]:
    """Evaluate pooled(x) + debias(x); additivity holds exactly."""
    return predict(model.pooled, x) + predict(model.debias, x)

# -*- coding: utf-8 -*-
"""
SOS LAB - MC: Estadística de series correlacionadas
Medias por lotes (batch means) para errores estándar de cadenas, tamaño
efectivo de muestra y ESS de pesos de importancia.
"""

import numpy as np
import pandas as pd
from scipy.special import logsumexp


def batch_means(series, n_batches: int = 20) -> tuple[float, float]:
    """(media, error estándar) con lotes contiguos de igual tamaño"""
    values = pd.Series(np.asarray(series, dtype=np.float64))
    n = len(values)
    if n == 0:
        return float("nan"), float("nan")
    n_batches = max(1, min(n_batches, n))
    labels = np.arange(n) * n_batches // n
    means = values.groupby(labels).mean()
    mean = float(values.mean())
    if n_batches < 2:
        return mean, float("nan")
    return mean, float(means.std(ddof=1) / np.sqrt(n_batches))


def effective_sample_size(series, n_batches: int = 20) -> float:
    """n_eff = var(serie) / se²; serie constante → n"""
    values = np.asarray(series, dtype=np.float64)
    _, se = batch_means(values, n_batches)
    variance = values.var(ddof=1) if len(values) > 1 else 0.0
    if not np.isfinite(se) or se == 0 or variance == 0:
        return float(len(values))
    return float(min(variance / se**2, len(values)))


def importance_ess(log_weights) -> float:
    """(Σw)² / Σw² calculado en dominio log"""
    log_weights = np.asarray(log_weights, dtype=np.float64)
    if log_weights.size == 0:
        return 0.0
    return float(np.exp(2 * logsumexp(log_weights) - logsumexp(2 * log_weights)))

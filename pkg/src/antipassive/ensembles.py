"""Seeded random system families for randomized checks and experiments."""

from __future__ import annotations

import numpy as np

from .lti import StateSpaceSystem, is_passive


def random_hurwitz(rng: np.random.Generator, n: int) -> np.ndarray:
    """Gaussian matrix shifted left so its spectral abscissa lies in ``[-1, -0.2]``."""
    M = rng.normal(size=(n, n))
    return M - (np.linalg.eigvals(M).real.max() + rng.uniform(0.2, 1.0)) * np.eye(n)


def random_stable(rng: np.random.Generator, n: int, m: int, d_scale: float = 0.3) -> StateSpaceSystem:
    return StateSpaceSystem(
        random_hurwitz(rng, n), rng.normal(size=(n, m)), rng.normal(size=(m, n)), d_scale * rng.normal(size=(m, m))
    )


def random_stable_nonpassive(rng: np.random.Generator, n: int, m: int, attempts: int = 100) -> StateSpaceSystem:
    """Hurwitz system rejected-sampled until its passivity certificate fails."""
    for _ in range(attempts):
        G = random_stable(rng, n, m)
        if is_passive(G).verdict == "NotPassive":
            return G
    raise RuntimeError("no non-passive sample drawn")


def random_passive(rng: np.random.Generator, n: int, m: int) -> StateSpaceSystem:
    """Strictly passive system built to satisfy the KYP conditions with ``P = I``.

    ``A + A' < 0``, ``B = C'`` and ``D + D' > 0``.
    """
    M = rng.normal(size=(n, n))
    K = rng.normal(size=(n, n))
    A = -(M @ M.T) / n - 0.5 * np.eye(n) + (K - K.T)
    C = rng.normal(size=(m, n))
    L = rng.normal(size=(m, m))
    W = rng.normal(size=(m, m))
    D = L @ L.T / m + 0.1 * np.eye(m) + 0.5 * (W - W.T)
    return StateSpaceSystem(A, C.T.copy(), C, D)

"""Central-finite-difference checking of analytic gradients.

The checker perturbs a sample of coordinates of one input array of a scalar
function and compares ``(f(x + h e_i) - f(x - h e_i)) / 2h`` against the
analytic gradient at those coordinates. Meant to run in float64; float32
round-off drowns the signal at the default step size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class GradCheckResult:
    max_rel_err: float
    n_checked: int
    worst_coord: tuple
    analytic_at_worst: float
    fd_at_worst: float

    def __str__(self):
        return (
            f"max rel err {self.max_rel_err:.3e} over {self.n_checked} coords "
            f"(worst at {self.worst_coord}: analytic={self.analytic_at_worst:.6e}, "
            f"fd={self.fd_at_worst:.6e})"
        )


def sample_coords(shape, n: int, rng: np.random.Generator):
    """Pick ``n`` distinct flat coordinates of an array (all of them if small)."""
    total = int(np.prod(shape))
    if total <= n:
        flat = np.arange(total)
    else:
        flat = rng.choice(total, size=n, replace=False)
    return [np.unravel_index(i, shape) for i in flat]


def central_difference(f, x: np.ndarray, coords, h: float = 1e-5):
    fd = np.zeros(len(coords), dtype=np.float64)
    for j, idx in enumerate(coords):
        xp = x.copy()
        xp[idx] += h
        up = f(xp)
        xp[idx] -= 2 * h
        dn = f(xp)
        fd[j] = (up - dn) / (2.0 * h)
    return fd


def check_gradient(f, x: np.ndarray, analytic: np.ndarray, *, h: float = 1e-5,
                   n_coords: int = 100, rng=None, atol: float = 1e-8,
                   coords=None) -> GradCheckResult:
    """Compare ``analytic`` against central differences of ``f`` at sampled coords.

    Relative error per coordinate is ``|a - fd| / max(|a|, |fd|, atol)``; the
    ``atol`` floor keeps genuinely-zero gradients from reporting spurious
    relative error.
    """
    if analytic.shape != x.shape:
        raise ValueError(f"analytic gradient shape {analytic.shape} != input shape {x.shape}")
    rng = rng if rng is not None else np.random.default_rng(0)
    if coords is None:
        coords = sample_coords(x.shape, n_coords, rng)
    fd = central_difference(f, x, coords, h=h)
    ana = np.array([analytic[idx] for idx in coords], dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(ana), np.abs(fd)), atol)
    rel = np.abs(ana - fd) / denom
    worst = int(np.argmax(rel))
    return GradCheckResult(
        max_rel_err=float(rel[worst]),
        n_checked=len(coords),
        worst_coord=coords[worst],
        analytic_at_worst=float(ana[worst]),
        fd_at_worst=float(fd[worst]),
    )

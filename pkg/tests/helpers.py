"""Shared independent oracles for the test suite."""

import numpy as np


def qk_two_piece(k: int, eta_bar: float) -> float:
    """Sign-kernel moment by exact monomial integration of the two pieces.

    int_{-1}^{eta_bar} -eta^k deta + int_{eta_bar}^{1} eta^k deta, each piece
    via the antiderivative eta^{k+1}/(k+1).
    """
    upper = (1.0 - eta_bar ** (k + 1)) / (k + 1)
    lower = (eta_bar ** (k + 1) - (-1.0) ** (k + 1)) / (k + 1)
    return upper - lower


def segment_stokeslet(x0: float, d_perp: float, length: float, f_const) -> np.ndarray:
    """Closed-form Stokeslet integral of a constant density over a straight segment.

    Segment runs along x from 0 to length; the target sits at (x0, d_perp, 0).
    Built from the standard antiderivatives of u^m / (u^2 + d^2)^{p/2}.
    """
    f1, f2, f3 = f_const

    def anti(u):
        r = np.hypot(u, d_perp)
        return (
            np.arcsinh(u / d_perp),  # int du / r
            u / (d_perp**2 * r),     # int du / r^3
            -1.0 / r,                # int u du / r^3
            np.arcsinh(u / d_perp) - u / r,  # int u^2 du / r^3
        )

    hi = anti(x0)
    lo = anti(x0 - length)
    i1 = hi[0] - lo[0]
    j0 = hi[1] - lo[1]
    j1 = hi[2] - lo[2]
    j2 = hi[3] - lo[3]
    sx = f1 * i1 + f1 * j2 + f2 * d_perp * j1
    sy = f2 * i1 + f1 * d_perp * j1 + f2 * d_perp**2 * j0
    sz = f3 * i1
    return np.array([sx, sy, sz])


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    k = np.array(
        [
            [0.0, -axis[2], axis[1]],
            [axis[2], 0.0, -axis[0]],
            [-axis[1], axis[0], 0.0],
        ]
    )
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)

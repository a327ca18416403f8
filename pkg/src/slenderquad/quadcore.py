"""Panel-based Gauss-Legendre quadrature, Legendre transforms, and Vandermonde solvers.

Everything here operates on the reference interval [-1, 1] or on a composite
panel grid covering [0, L]. All returned objects are immutable value types and
all functions are pure, so they can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_ORDER = 64
ETA_BOUND = 10.0


class SingularSystemError(ValueError):
    """Raised when a Vandermonde system has coincident nodes."""


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes and weights on [-1, 1]."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class PanelGrid:
    """Composite grid of `panel_count` equal panels over [0, fiber_length].

    Global node ell of panel m sits at (m-1)*ds + ds/2*(eta_ell + 1); the
    stored global weights already carry the ds/2 panel scale, so a plain dot
    product with sample values integrates over [0, fiber_length].
    """

    fiber_length: float
    panel_count: int
    panel_width: float
    global_nodes: np.ndarray
    global_weights: np.ndarray
    rule: QuadratureRule

    @property
    def node_count(self) -> int:
        return self.panel_count * self.rule.order

    def panel_slice(self, m: int) -> slice:
        n = self.rule.order
        return slice(m * n, (m + 1) * n)

    def panel_of_target(self, target_index: int) -> tuple[int, int]:
        """Panel index and local node index of a global node index."""
        n = self.rule.order
        if not 0 <= target_index < self.node_count:
            raise ValueError(f"target index {target_index} out of range")
        return target_index // n, target_index % n


@dataclass(frozen=True)
class LegendreCoeffs:
    """Expansion coefficients on [-1, 1], in the Legendre or monomial basis."""

    coeffs: np.ndarray
    basis: str = "legendre"


def _legendre_value_and_derivative(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P_n(x) and P_n'(x) by the three-term and derivative recurrences."""
    p_prev = np.ones_like(x)
    p = np.asarray(x, dtype=float).copy()
    dp_prev = np.zeros_like(x)
    dp = np.ones_like(x)
    if n == 0:
        return p_prev, dp_prev
    for k in range(2, n + 1):
        p_next = ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
        dp_next = dp_prev + (2 * k - 1) * p
        p_prev, p = p, p_next
        dp_prev, dp = dp, dp_next
    return p, dp


def gauss_legendre(order: int) -> QuadratureRule:
    """Gauss-Legendre rule computed by Newton iteration on P_n.

    Initial guesses are the Chebyshev-like estimates cos(pi*(k - 1/4)/(n + 1/2));
    only the positive half is iterated and then mirrored, so the node set is
    exactly symmetric about 0.
    """
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must be an integer in [1, {MAX_ORDER}], got {order!r}")
    n = int(order)
    m = n // 2
    k = np.arange(1, m + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(100):
        p, dp = _legendre_value_and_derivative(n, x)
        dx = p / dp
        x = x - dx
        if x.size == 0 or np.max(np.abs(dx)) < 1e-15:
            break
    p, dp = _legendre_value_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)

    nodes = np.concatenate([-x, [0.0] if n % 2 else [], x[::-1]])
    if n % 2:
        _, dp0 = _legendre_value_and_derivative(n, np.array([0.0]))
        w0 = 2.0 / (dp0[0] * dp0[0])
        weights = np.concatenate([w, [w0], w[::-1]])
    else:
        weights = np.concatenate([w, w[::-1]])
    return QuadratureRule(order=n, nodes=nodes, weights=weights)


def panelize(fiber_length: float, panel_count: int, rule: QuadratureRule) -> PanelGrid:
    """Split [0, fiber_length] into equal panels carrying the given rule."""
    if not fiber_length > 0:
        raise ValueError(f"fiber length must be positive, got {fiber_length}")
    if panel_count < 1:
        raise ValueError(f"panel count must be >= 1, got {panel_count}")
    ds = fiber_length / panel_count
    starts = ds * np.arange(panel_count)
    nodes = (starts[:, None] + 0.5 * ds * (rule.nodes[None, :] + 1.0)).ravel()
    weights = np.tile(0.5 * ds * rule.weights, panel_count)
    return PanelGrid(
        fiber_length=float(fiber_length),
        panel_count=int(panel_count),
        panel_width=ds,
        global_nodes=nodes,
        global_weights=weights,
        rule=rule,
    )


def integrate(samples: np.ndarray, grid: PanelGrid) -> float | np.ndarray:
    """Composite integral over [0, L] of values sampled at all grid nodes."""
    samples = np.asarray(samples)
    if samples.shape[0] != grid.node_count:
        raise ValueError("sample count does not match grid")
    return grid.global_weights @ samples


_TRANSFORM_CACHE: dict[int, np.ndarray] = {}
_PTABLE_CACHE: dict[int, np.ndarray] = {}


def legendre_table(rule: QuadratureRule) -> np.ndarray:
    """Matrix P[k, ell] = P_k(eta_ell) for k = 0..order-1."""
    if rule.order not in _PTABLE_CACHE:
        n = rule.order
        table = np.empty((n, n))
        table[0] = 1.0
        if n > 1:
            table[1] = rule.nodes
        for k in range(2, n):
            table[k] = ((2 * k - 1) * rule.nodes * table[k - 1] - (k - 1) * table[k - 2]) / k
        _PTABLE_CACHE[rule.order] = table
    return _PTABLE_CACHE[rule.order]


def legendre_transform_matrix(rule: QuadratureRule) -> np.ndarray:
    """Matrix mapping node samples to Legendre coefficients.

    Uses the discrete orthogonality of P_k at the Gauss-Legendre nodes, which
    is exact for k below the rule order, so the result is the interpolating
    polynomial's coefficient vector.
    """
    if rule.order not in _TRANSFORM_CACHE:
        table = legendre_table(rule)
        scale = (2.0 * np.arange(rule.order) + 1.0) / 2.0
        _TRANSFORM_CACHE[rule.order] = scale[:, None] * table * rule.weights[None, :]
    return _TRANSFORM_CACHE[rule.order]


def to_legendre(samples: np.ndarray, rule: QuadratureRule) -> LegendreCoeffs:
    """Legendre coefficients of the polynomial interpolating samples at the nodes."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (rule.order,):
        raise ValueError(f"expected {rule.order} samples, got shape {samples.shape}")
    return LegendreCoeffs(coeffs=legendre_transform_matrix(rule) @ samples)


def legendre_eval(coeffs: LegendreCoeffs | np.ndarray, eta: float | complex):
    """Evaluate an expansion at a point in [-ETA_BOUND, ETA_BOUND].

    Legendre-basis coefficients go through the three-term recurrence (valid
    for complex arguments); monomial-basis coefficients use Horner's rule.
    """
    if abs(eta) > ETA_BOUND:
        raise ValueError(f"|eta| must not exceed {ETA_BOUND}, got {abs(eta)}")
    if isinstance(coeffs, LegendreCoeffs):
        c, basis = coeffs.coeffs, coeffs.basis
    else:
        c, basis = np.asarray(coeffs), "legendre"
    if basis == "monomial":
        acc = 0.0
        for ck in c[::-1]:
            acc = acc * eta + ck
        return acc
    total = c[0]
    p_prev, p = 1.0, eta
    if len(c) > 1:
        total = total + c[1] * eta
    for k in range(2, len(c)):
        p_prev, p = p, ((2 * k - 1) * eta * p - (k - 1) * p_prev) / k
        total = total + c[k] * p
    return total


def legendre_eval_many(coeffs: np.ndarray, etas: np.ndarray) -> np.ndarray:
    """Evaluate Legendre-basis expansions at many points.

    coeffs may be (n,) for one series or (d, n) for d series sharing the same
    evaluation points; returns (len(etas),) or (len(etas), d).
    """
    etas = np.asarray(etas)
    c = np.atleast_2d(np.asarray(coeffs))
    n = c.shape[1]
    p_prev = np.ones_like(etas)
    out = c[:, 0][None, :] * p_prev[:, None]
    if n > 1:
        p = etas
        out = out + c[:, 1][None, :] * p[:, None]
        for k in range(2, n):
            p_prev, p = p, ((2 * k - 1) * etas * p - (k - 1) * p_prev) / k
            out = out + c[:, k][None, :] * p[:, None]
    if np.asarray(coeffs).ndim == 1:
        return out[:, 0]
    return out


def legendre_deriv_coeffs(coeffs: LegendreCoeffs | np.ndarray) -> np.ndarray:
    """Coefficients of the derivative of a Legendre series on [-1, 1]."""
    if isinstance(coeffs, LegendreCoeffs):
        if coeffs.basis != "legendre":
            raise ValueError("derivative recurrence requires the Legendre basis")
        c = coeffs.coeffs
    else:
        c = np.asarray(coeffs)
    n = len(c)
    d = np.zeros(n)
    # d_k = (2k+1) * (c_{k+1} + c_{k+3} + ...)
    s = 0.0
    s_next = 0.0
    for k in range(n - 2, -1, -1):
        s, s_next = c[k + 1] + s_next, s
        d[k] = (2 * k + 1) * s
    return d


def solve_vandermonde_transpose(nodes: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve A^T b = rhs with A[l, k] = nodes[l]**k by the Bjorck-Pereyra scheme.

    The progressive O(n^2) elimination keeps near machine accuracy on the
    ill-conditioned monomial Vandermonde at Gauss-Legendre nodes, where a
    dense LU factorization loses several digits.
    """
    x = np.asarray(nodes, dtype=float)
    b = np.array(rhs, dtype=float)
    n = len(x)
    if b.shape != (n,):
        raise ValueError("rhs length must match node count")
    if n > MAX_ORDER:
        raise ValueError(f"system size limited to {MAX_ORDER}")
    if len(np.unique(x)) != n:
        raise SingularSystemError("duplicate nodes make the system singular")
    for k in range(n - 1):
        for i in range(n - 2, k - 1, -1):
            b[i + 1] -= x[k] * b[i]
    for k in range(n - 2, -1, -1):
        for i in range(k + 1, n):
            b[i] /= x[i] - x[i - k - 1]
        for i in range(k, n - 1):
            b[i] -= b[i + 1]
    return b


def _locate_panels(targets: np.ndarray, grid: PanelGrid) -> np.ndarray:
    """Panel index per target; boundary points resolve to the left panel."""
    m = np.ceil(targets / grid.panel_width).astype(int) - 1
    return np.clip(m, 0, grid.panel_count - 1)


def interpolate_to_uniform(
    panel_samples: np.ndarray, grid: PanelGrid, targets: np.ndarray
) -> np.ndarray:
    """Evaluate the per-panel Legendre interpolant of node samples at targets.

    panel_samples has one row per global node and may carry extra columns.
    Targets must lie in [0, L]; points exactly on a shared panel edge use the
    lower-index panel.
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    samples = np.asarray(panel_samples, dtype=float)
    if samples.shape[0] != grid.node_count:
        raise ValueError("sample count does not match grid")
    if targets.size and (targets.min() < 0.0 or targets.max() > grid.fiber_length):
        raise ValueError("interpolation target outside [0, L]")
    vector = samples.ndim > 1
    cols = samples.shape[1] if vector else 1
    samples = samples.reshape(grid.node_count, cols)

    transform = legendre_transform_matrix(grid.rule)
    out = np.empty((targets.size, cols))
    owners = _locate_panels(targets, grid)
    for m in np.unique(owners):
        pick = owners == m
        local = -1.0 + 2.0 * (targets[pick] - m * grid.panel_width) / grid.panel_width
        coeffs = transform @ samples[grid.panel_slice(m)]  # (n, cols)
        out[pick] = legendre_eval_many(coeffs.T, local).reshape(-1, cols)
    return out if vector else out[:, 0]

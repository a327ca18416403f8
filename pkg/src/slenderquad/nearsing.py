"""Stokeslet line integral at field points, with near-evaluation special quadrature.

Far from the fiber the integral is smooth and composite Gauss-Legendre handles
it. Close to a panel the kernel is nearly singular: the squared distance
R^2(eta), continued to complex eta through the panel's Legendre expansion, has
a conjugate root pair z1, conj(z1) hugging the interval. Dividing out
omega(eta) = (eta - z1)(eta - conj z1) leaves a smooth factor that is expanded
in monomials and contracted against the analytic moments of eta^k/|eta-z1|^p.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .finitepart import LineDensity
from .geometry import PanelizedCurve
from .quadcore import gauss_legendre, solve_vandermonde_transpose

_RECURSION_RANGE = 0.5  # root-to-interval distance where upward recursion stays accurate
_GRADED_ORDER = 32


class RootNotFoundError(RuntimeError):
    """Newton iteration on R^2(eta) failed to locate a complex root."""


@dataclass(frozen=True)
class RootPair:
    """Upper-half root of R^2(eta) nearest the panel, with its Newton residual."""

    z1: complex
    residual: float

    def __post_init__(self):
        if not self.z1.imag > 0:
            raise ValueError("z1 must lie in the upper half plane")


@dataclass(frozen=True)
class NearEvalConfig:
    """Dispatch and root-finding knobs for near evaluation."""

    switch_factor: float = 1.0
    newton_tol: float = 1e-13
    newton_max_iter: int = 30

    def __post_init__(self):
        if not self.switch_factor > 0:
            raise ValueError("switch_factor must be positive")


def _legendre_series_complex(coeffs: np.ndarray, z: complex) -> tuple[np.ndarray, np.ndarray]:
    """Values and eta-derivatives of (d, n) Legendre series at a complex point.

    Unbounded in z, unlike the public evaluator; Newton iterates may wander
    before converging.
    """
    n = coeffs.shape[1]
    p_prev, p = 1.0 + 0.0j, z
    dp_prev, dp = 0.0j, 1.0 + 0.0j
    vals = coeffs[:, 0].astype(complex)
    ders = np.zeros(coeffs.shape[0], dtype=complex)
    if n > 1:
        vals = vals + coeffs[:, 1] * p
        ders = ders + coeffs[:, 1] * dp
    for k in range(2, n):
        p_prev, p = p, ((2 * k - 1) * z * p - (k - 1) * p_prev) / k
        dp_prev, dp = dp, dp_prev + (2 * k - 1) * p_prev
        vals = vals + coeffs[:, k] * p
        ders = ders + coeffs[:, k] * dp
    return vals, ders


def _chord_guess(coeffs: np.ndarray, xb: np.ndarray) -> complex:
    """Initial root guess from projecting the point onto the panel chord.

    eta0 comes from the projection parameter and the imaginary part is 2d/h
    for point-to-chord distance d and chord length h; exact for straight
    panels.
    """
    signs = (-1.0) ** np.arange(coeffs.shape[1])
    p_left = coeffs @ signs
    p_right = coeffs.sum(axis=1)
    chord = p_right - p_left
    h = np.linalg.norm(chord)
    tpar = (xb - p_left) @ chord / (h * h)
    eta0 = np.clip(2.0 * tpar - 1.0, -1.0, 1.0)
    d = np.linalg.norm(xb - (p_left + tpar * chord))
    return complex(eta0, max(2.0 * d / h, 1e-8))


def find_root(panel_coeffs: np.ndarray, x_bar, cfg: NearEvalConfig | None = None) -> RootPair:
    """Newton iteration for the upper-half root of R^2(eta) = |x_bar - x(eta)|^2."""
    cfg = cfg or NearEvalConfig()
    coeffs = np.asarray(panel_coeffs, dtype=float)
    xb = np.asarray(x_bar, dtype=float)
    z = _chord_guess(coeffs, xb)

    for _ in range(cfg.newton_max_iter):
        vals, ders = _legendre_series_complex(coeffs, z)
        diff = xb - vals
        r2 = np.sum(diff * diff)
        dr2 = -2.0 * np.sum(diff * ders)
        if dr2 == 0:
            raise RootNotFoundError("stationary R^2, Newton step undefined")
        step = r2 / dr2
        # overshoots past unit length leave the panel's basin; damp them
        if abs(step) > 1.0:
            step /= abs(step)
        z = z - step
        if abs(step) <= cfg.newton_tol:
            break
        if abs(z) > 20.0:
            raise RootNotFoundError("Newton iterate escaped the panel neighborhood")
    else:
        raise RootNotFoundError(f"no convergence in {cfg.newton_max_iter} iterations")

    if z.imag < 0:
        z = z.conjugate()
    if z.imag == 0:
        raise RootNotFoundError("converged to a real root; point lies on the curve extension")
    vals, _ = _legendre_series_complex(coeffs, z)
    diff = xb - vals
    return RootPair(z1=complex(z), residual=float(abs(np.sum(diff * diff))))


def _moments_recursion(a: float, b: float, count: int, p: int) -> np.ndarray:
    """Upward recursions for int eta^k / |eta - (a+ib)|^p, stable for near roots.

    Boundary terms with opposite-sign endpoint weights are rewritten through
    w(1)^2 - w(-1)^2 = -4a so that small |a| does not trigger cancellation.
    """
    w1 = np.hypot(1.0 - a, b)
    wm1 = np.hypot(1.0 + a, b)
    w_diff = -4.0 * a / (w1 + wm1)  # w(1) - w(-1)
    w_sum = w1 + wm1
    winv_diff = w_diff / (w1 * wm1)  # 1/w(-1) - 1/w(1)
    winv_sum = 1.0 / w1 + 1.0 / wm1

    first = np.zeros(count)
    first[0] = np.arcsinh((1.0 - a) / b) - np.arcsinh((-1.0 - a) / b)
    if count > 1:
        first[1] = w_diff + a * first[0]
    ab2 = a * a + b * b
    for k in range(2, count):
        boundary = w_diff if k % 2 else w_sum
        first[k] = (boundary + a * (2 * k - 1) * first[k - 1] - (k - 1) * ab2 * first[k - 2]) / k
    if p == 1:
        return first
    third = np.zeros(count)
    third[0] = ((1.0 - a) / w1 + (1.0 + a) / wm1) / (b * b)
    if count > 1:
        third[1] = a * third[0] + winv_diff
    for k in range(2, count):
        boundary = -winv_diff if k % 2 else winv_sum
        third[k] = a * third[k - 1] + (k - 1) * first[k - 2] - boundary
    return third


_graded_rule = None


def _moments_graded(a: float, b: float, count: int, p: int) -> np.ndarray:
    """Composite Gauss-Legendre with panels halving toward the root's projection.

    Refinement stops once the panel length drops below the root distance, after
    which the integrand is analytic well clear of each panel.
    """
    global _graded_rule
    if _graded_rule is None:
        _graded_rule = gauss_legendre(_GRADED_ORDER)
    c = float(np.clip(a, -1.0, 1.0))
    delta = np.hypot(a - c, b)
    breaks = [-1.0]
    if c > -1.0:
        dist = c + 1.0
        levels = int(np.ceil(np.log2(dist / delta))) if dist > delta else 0
        breaks.extend(c - dist * 0.5**j for j in range(1, levels + 1))
    if -1.0 < c < 1.0:
        breaks.append(c)
    if c < 1.0:
        dist = 1.0 - c
        levels = int(np.ceil(np.log2(dist / delta))) if dist > delta else 0
        breaks.extend(c + dist * 0.5**j for j in range(levels, 0, -1))
    breaks.append(1.0)
    pts = np.unique(np.asarray(breaks))

    mids = 0.5 * (pts[1:] + pts[:-1])
    halves = 0.5 * (pts[1:] - pts[:-1])
    nodes = (mids[:, None] + halves[:, None] * _graded_rule.nodes[None, :]).ravel()
    wts = (halves[:, None] * _graded_rule.weights[None, :]).ravel()
    w2 = (nodes - a) ** 2 + b * b
    kern = wts / np.sqrt(w2) if p == 1 else wts / w2**1.5
    powers = np.vander(nodes, count, increasing=True)
    return powers.T @ kern


def qkp_moments(z1: complex, p: int, count: int) -> np.ndarray:
    """Moments q_k^p = int_{-1}^{1} eta^k / |eta - z1|^p deta, k = 0..count-1.

    Upward recursion is used while the root sits within _RECURSION_RANGE of
    the interval, where it holds near machine accuracy; beyond that it sheds
    digits and the graded quadrature takes over.
    """
    if p not in (1, 3):
        raise ValueError(f"p must be 1 or 3, got {p}")
    if not 1 <= count <= 16:
        raise ValueError(f"count must be in [1, 16], got {count}")
    z1 = complex(z1)
    if not z1.imag > 0:
        raise ValueError(f"z1 must have positive imaginary part, got {z1}")
    a, b = z1.real, z1.imag
    distance = np.hypot(max(abs(a) - 1.0, 0.0), b)
    if distance <= _RECURSION_RANGE:
        return _moments_recursion(a, b, count, p)
    return _moments_graded(a, b, count, p)


def _panel_regular(curve: PanelizedCurve, f: LineDensity, m: int, x_bar) -> np.ndarray:
    """Plain Gauss-Legendre Stokeslet contribution of one panel."""
    sl = curve.grid.panel_slice(m)
    r = np.asarray(x_bar, dtype=float)[None, :] - curve.positions[sl]
    rnorm = np.linalg.norm(r, axis=1)
    if np.any(rnorm == 0.0):
        raise ZeroDivisionError("field point coincides with a quadrature node")
    fv = np.asarray(f.samples, dtype=float)[sl]
    w = curve.grid.global_weights[sl]
    rdotf = np.einsum("jc,jc->j", r, fv)
    return (w / rnorm) @ fv + (w * rdotf / rnorm**3) @ r


def eval_S_regular(curve: PanelizedCurve, f: LineDensity, x_bar) -> np.ndarray:
    """Stokeslet integral by composite Gauss-Legendre over all panels."""
    total = np.zeros(3)
    for m in range(curve.grid.panel_count):
        total += _panel_regular(curve, f, m, x_bar)
    return total


def eval_S_special(
    curve: PanelizedCurve, f: LineDensity, m: int, x_bar, root: RootPair
) -> np.ndarray:
    """Product-integration Stokeslet contribution of one panel near x_bar.

    The smooth factors g_p * (omega/R^2)^{p/2} are known at the panel nodes;
    contracting them with the weights solving A^T w = q^p integrates their
    monomial interpolants against the exact kernel moments. At real nodes
    omega/R^2 is a positive real number, so the principal square root is the
    right branch automatically.
    """
    grid = curve.grid
    sl = grid.panel_slice(m)
    eta = grid.rule.nodes
    n = grid.rule.order

    xb = np.asarray(x_bar, dtype=float)
    r = xb[None, :] - curve.positions[sl]
    r2 = np.einsum("jc,jc->j", r, r)
    if np.any(r2 == 0.0):
        raise ZeroDivisionError("field point coincides with a quadrature node")
    a, b = root.z1.real, root.z1.imag
    omega = (eta - a) ** 2 + b * b
    ratio = omega / r2

    fv = np.asarray(f.samples, dtype=float)[sl]
    smooth1 = fv * np.sqrt(ratio)[:, None]
    rdotf = np.einsum("jc,jc->j", r, fv)
    smooth3 = r * (rdotf * ratio**1.5)[:, None]

    w1 = solve_vandermonde_transpose(eta, qkp_moments(root.z1, 1, n))
    w3 = solve_vandermonde_transpose(eta, qkp_moments(root.z1, 3, n))
    return 0.5 * grid.panel_width * (w1 @ smooth1 + w3 @ smooth3)


def eval_S(
    curve: PanelizedCurve, f: LineDensity, x_bar, cfg: NearEvalConfig | None = None
) -> np.ndarray:
    """Stokeslet integral with per-panel dispatch between regular and special quadrature.

    A panel is treated as near when the closest node lies within
    switch_factor times the panel arclength. Root-finding failures and roots
    with Im(z1) >= 1 fall back to the regular rule.
    """
    cfg = cfg or NearEvalConfig()
    grid = curve.grid
    xb = np.asarray(x_bar, dtype=float)
    total = np.zeros(3)
    for m in range(grid.panel_count):
        dist = np.min(np.linalg.norm(xb[None, :] - curve.positions[grid.panel_slice(m)], axis=1))
        if dist > cfg.switch_factor * grid.panel_width:
            total += _panel_regular(curve, f, m, xb)
            continue
        # a chord-estimated root with Im >= 1 is not near; skip the Newton run
        if _chord_guess(curve.panel_coeffs[m], xb).imag >= 1.0:
            total += _panel_regular(curve, f, m, xb)
            continue
        try:
            root = find_root(curve.panel_coeffs[m], xb, cfg)
        except RootNotFoundError as err:
            warnings.warn(f"panel {m}: {err}; falling back to regular quadrature")
            total += _panel_regular(curve, f, m, xb)
            continue
        if root.z1.imag >= 1.0:
            total += _panel_regular(curve, f, m, xb)
        else:
            total += eval_S_special(curve, f, m, xb, root)
    return total

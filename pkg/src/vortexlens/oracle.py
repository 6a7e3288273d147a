"""Independent numerical verification paths.

Two families live here: a fixed-step classical Runge-Kutta integrator for
the moment ODE systems, and Gauss-Legendre quadrature of the generalized
Laguerre integrals behind the free-packet transverse velocity.  Both exist
to check closed forms elsewhere in the package, so they deliberately share
no code with them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

MAX_LAGUERRE_INDEX = 12


class IntegrationError(RuntimeError):
    """Raised when the integrator meets a non-finite state."""

    def __init__(self, t: float):
        super().__init__(f"non-finite state at t = {t}")
        self.t = t


@dataclass(frozen=True)
class ODESpec:
    """First-order system y' = rhs(t, y) with a fixed-step integration plan."""

    rhs: Callable[[float, np.ndarray], np.ndarray]
    y0: tuple[float, ...]
    t0: float
    t_end: float
    step: float

    def __post_init__(self) -> None:
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.t_end < self.t0:
            raise ValueError("t_end must not precede t0")


def integrate_rk4(spec: ODESpec) -> tuple[np.ndarray, np.ndarray]:
    """Classical fourth-order fixed-step integration, sampled at every step.

    The span is subdivided uniformly with the largest step not exceeding
    spec.step, so the final sample lands exactly on t_end.  Returns arrays
    (times, states) of shapes (n+1,) and (n+1, dim).
    """
    y = np.asarray(spec.y0, dtype=float)
    span = spec.t_end - spec.t0
    if span == 0.0:
        return np.array([spec.t0]), y[None, :].copy()
    n = max(1, math.ceil(span / spec.step - 1e-12))
    h = span / n
    ts = spec.t0 + h * np.arange(n + 1)
    out = np.empty((n + 1, y.size))
    out[0] = y
    rhs = spec.rhs
    for i in range(1, n + 1):
        t = ts[i - 1]
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + (0.5 * h) * k1)
        k3 = rhs(t + 0.5 * h, y + (0.5 * h) * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationError(float(ts[i]))
        out[i] = y
    return ts, out


def laguerre(n: int, alpha: int, y):
    """Generalized Laguerre polynomial L_n^alpha(y), stable three-term recurrence."""
    y = np.asarray(y, dtype=float)
    prev = np.ones_like(y)
    if n == 0:
        return prev
    cur = 1.0 + alpha - y
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - y) * cur - (k + alpha) * prev) / (k + 1)
    return cur


def laguerre_derivative(n: int, alpha: int, y, order: int = 1):
    """d^k/dy^k L_n^alpha(y) via the ladder identity (-1)^k L_{n-k}^{alpha+k}."""
    if order < 0:
        raise ValueError("derivative order must be non-negative")
    if order == 0:
        return laguerre(n, alpha, y)
    if order > n:
        return np.zeros_like(np.asarray(y, dtype=float))
    return (-1) ** order * laguerre(n - order, alpha + order, y)


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre plan on [0, y_max] for exp(-y)-damped integrands."""

    integrand: Callable[[np.ndarray], np.ndarray]
    y_max: float
    panels: int
    order: int = 24

    def __post_init__(self) -> None:
        if not (self.y_max > 0 and self.panels > 0 and self.order > 1):
            raise ValueError("y_max, panels and order must be positive")


_GL_NODES: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order not in _GL_NODES:
        _GL_NODES[order] = np.polynomial.legendre.leggauss(order)
    return _GL_NODES[order]


def gauss_legendre_integral(spec: QuadratureSpec) -> float:
    x, w = _gl_nodes(spec.order)
    edges = np.linspace(0.0, spec.y_max, spec.panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = spec.integrand(nodes.ravel()).reshape(nodes.shape)
    return float(np.sum(vals * w[None, :] * half[:, None]))


def _cutoff(n: int, l_abs: int) -> float:
    # exp(-y) tail of degree <= 2n + l + 1 polynomials is certifiably
    # negligible beyond this point (documented in the module tests)
    return max(80.0, 20.0 + 10.0 * (n + l_abs))


def lg_quadrature(n: int, l: int, m_power: int, k_deriv: int = 0) -> float:
    """Laguerre moment integral by numerical quadrature.

    Evaluates X_{m,k} = integral_0^inf y^m L_n^{|l|}(y) d^k L_n^{|l|}/dy^k
    exp(-y) dy; k_deriv = 0 gives the diagonal moments Y_m.  Indices are
    guarded against factorial overflow (n, |l| <= 12); m_power must keep the
    weight integrable (m_power >= 0).
    """
    a = abs(l)
    if n < 0 or n > MAX_LAGUERRE_INDEX or a > MAX_LAGUERRE_INDEX:
        raise ValueError(f"indices out of guarded range: n={n}, l={l}")
    if m_power < 0:
        raise ValueError(f"m_power must be non-negative, got {m_power}")

    def integrand(y: np.ndarray) -> np.ndarray:
        return (
            y**m_power
            * laguerre(n, a, y)
            * laguerre_derivative(n, a, y, k_deriv)
            * np.exp(-y)
        )

    y_max = _cutoff(n, a)
    spec = QuadratureSpec(integrand, y_max, panels=int(math.ceil(y_max / 2.0)))
    return gauss_legendre_integral(spec)


def y_moment_exact(n: int, l_abs: int) -> int:
    """Diagonal moment Y_l = l! C(n+l, n) at the natural power m = l."""
    return math.factorial(l_abs) * math.comb(n + l_abs, n)


def x_moment_exact(n: int, l_abs: int) -> int:
    """First-derivative moment at power l+1: (l+n)!/(n-1)!, zero for n = 0."""
    if n == 0:
        return 0
    return math.factorial(l_abs + n) // math.factorial(n - 1)


def mode_velocity_coefficient_quadrature(n: int, l: int) -> float:
    """m^2 sigma_r^2 <u_perp^2> of the (n, l) mode by direct quadrature.

    Integrates the squared transverse gradient of the focal-plane mode
    profile (radial plus centrifugal pieces) with no algebraic reduction.
    """
    a = abs(l)
    if n < 0 or n > MAX_LAGUERRE_INDEX or a > MAX_LAGUERRE_INDEX:
        raise ValueError(f"indices out of guarded range: n={n}, l={l}")

    def integrand(y: np.ndarray) -> np.ndarray:
        lag = laguerre(n, a, y)
        dlag = laguerre_derivative(n, a, y, 1)
        grad = 0.5 * (a - y) * lag + y * dlag
        radial = 4.0 * grad * grad
        if a > 0:
            return y ** (a - 1) * (radial + a * a * lag * lag) * np.exp(-y)
        # a = 0: the centrifugal term vanishes and grad carries a factor y
        return (radial / y) * np.exp(-y)

    y_max = _cutoff(n, a)
    spec = QuadratureSpec(integrand, y_max, panels=int(math.ceil(y_max / 2.0)))
    norm = lg_quadrature(n, a, a, 0)
    return gauss_legendre_integral(spec) / norm


def mode_velocity_coefficient_moments(n: int, l: int) -> float:
    """Same coefficient assembled from diagonal moments only.

    Integration by parts reduces the gradient integral to
    (Y_{l+1} - 2 l Y_l + 2 l^2 Y_{l-1}) / Y_l, each Y evaluated numerically.
    """
    a = abs(l)
    y_l = lg_quadrature(n, a, a, 0)
    total = lg_quadrature(n, a, a + 1, 0) - 2.0 * a * y_l
    if a >= 1:
        total += 2.0 * a * a * lg_quadrature(n, a, a - 1, 0)
    return total / y_l


def laguerre_generating_partial(alpha: int, s: float, y, n_terms: int):
    """Partial sum of the generating function sum_n L_n^alpha(y) s^n."""
    y = np.asarray(y, dtype=float)
    acc = np.zeros_like(y)
    for k in range(n_terms):
        acc += laguerre(k, alpha, y) * s**k
    return acc


def generating_product_closed_form(
    gamma: int, alpha: int, beta: int, s1: float, s2: float
) -> float:
    """Closed form of integral U_alpha(y,s1) y^gamma U_beta(y,s2) exp(-y) dy."""
    return (
        (1.0 - s1) ** (gamma - alpha)
        * (1.0 - s2) ** (gamma - beta)
        * math.factorial(gamma)
        / (1.0 - s1 * s2) ** (gamma + 1)
    )


def generating_product_quadrature(
    gamma: int, alpha: int, beta: int, s1: float, s2: float, n_terms: int = 24
) -> float:
    """Quadrature of the same product built from generating-function partial sums."""

    def integrand(y: np.ndarray) -> np.ndarray:
        return (
            laguerre_generating_partial(alpha, s1, y, n_terms)
            * y**gamma
            * laguerre_generating_partial(beta, s2, y, n_terms)
            * np.exp(-y)
        )

    y_max = _cutoff(n_terms, gamma + max(alpha, beta))
    spec = QuadratureSpec(integrand, y_max, panels=int(math.ceil(y_max / 2.0)))
    return gauss_legendre_integral(spec)


def _series_binomial(p: int, k: int) -> Fraction:
    """Coefficient of s^k in (1 - s)^p for integer p of either sign."""
    num = Fraction(1)
    for idx in range(k):
        num *= p - idx
    return Fraction((-1) ** k) * num / math.factorial(k)


def generating_product_coefficient(
    gamma: int, alpha: int, beta: int, i: int, j: int
) -> Fraction:
    """Exact coefficient of s1^i s2^j in the closed-form generating product."""
    a = gamma - alpha
    b = gamma - beta
    c = gamma + 1
    total = Fraction(0)
    for k in range(0, min(i, j) + 1):
        total += (
            _series_binomial(a, i - k)
            * _series_binomial(b, j - k)
            * _series_binomial(-c, k)
        )
    return total * math.factorial(gamma)

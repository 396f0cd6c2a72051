"""Limit distribution functions: Tracy-Widom GUE, the finite-M crossover laws
F_{M,p} and F_{M,1}, and the shock product laws built from them.

F_GUE is the Fredholm determinant of the Airy kernel, discretized with
Gauss-Legendre Nystrom quadrature.  F_{M,1} is a gap probability of the
M-point Hermite ensemble.  For p < 1 the Gaussian kernel of F_{M,p} is
diagonal in a scaled Hermite basis with eigenvalues tau^n, tau = q/p, which
turns det(I - lambda K) into an O(1)-conditioned finite determinant on the
whole contour.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

AIRY_GUARD = 200.0
MAX_DOUBLINGS = 7


class ConvergenceError(RuntimeError):
    """Quadrature did not converge under node doubling."""


# -- Airy -------------------------------------------------------------------
def _guard(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < -AIRY_GUARD):
        raise ValueError(f"Airy argument below -{AIRY_GUARD:g} (oscillation overflow guard)")
    return x


def airy_ai(x):
    """Ai(x); arrays accepted."""
    x = _guard(x)
    out = special.airy(x)[0]
    return float(out) if out.ndim == 0 else out


def airy_all(x):
    """(Ai, Ai', Bi, Bi') at ``x``."""
    return special.airy(_guard(x))


def airy_kernel(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """K_2(x_i, y_j), with the diagonal limit Ai'(x)^2 - x Ai(x)^2 where x = y."""
    ax, dax, _, _ = special.airy(x)
    ay, day, _, _ = special.airy(y)
    X, Y = np.meshgrid(x, y, indexing="ij")
    num = np.outer(ax, day) - np.outer(dax, ay)
    den = X - Y
    diag = np.isclose(den, 0.0, atol=1e-13)
    with np.errstate(divide="ignore", invalid="ignore"):
        K = np.where(diag, 0.0, num / np.where(diag, 1.0, den))
    if np.any(diag):
        dd = np.outer(dax, dax) - X * np.outer(ax, ax)
        K = np.where(diag, dd, K)
    return K


# -- quadrature -------------------------------------------------------------
@dataclass(frozen=True)
class Quadrature:
    """Positive-weight rule on ``[a, b]`` (affine map of Gauss-Legendre)."""

    nodes: np.ndarray
    weights: np.ndarray
    domain: tuple

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        a, b = self.domain
        if np.any(self.nodes < a) or np.any(self.nodes > b):
            raise ValueError("nodes outside the integration domain")

    @classmethod
    def legendre(cls, a: float, b: float, n: int) -> "Quadrature":
        x, w = np.polynomial.legendre.leggauss(n)
        half = 0.5 * (b - a)
        return cls(a + half * (x + 1.0), half * w, (a, b))

    @property
    def size(self) -> int:
        return self.nodes.shape[0]


def _doubling(fn: Callable[[int], float], n0: int, accuracy: float, what: str) -> float:
    prev = fn(n0)
    n = n0
    for _ in range(MAX_DOUBLINGS):
        n *= 2
        cur = fn(n)
        if abs(cur - prev) < accuracy:
            return cur
        prev = cur
    raise ConvergenceError(f"{what}: no convergence after {MAX_DOUBLINGS} doublings (n = {n})")


# -- F_GUE ------------------------------------------------------------------
def _airy_upper(s: float, accuracy: float) -> float:
    """Right end b with the kernel trace beyond b below accuracy / 10."""
    b = max(s, 0.0) + 4.0
    while True:
        tail, _ = integrate.quad(lambda x: airy_kernel(np.array([x]), np.array([x]))[0, 0], b, np.inf)
        if tail < accuracy / 10 or b > s + 60:
            return b
        b += 2.0


def _fgue_n(s: float, b: float, n: int) -> float:
    q = Quadrature.legendre(s, b, n)
    sw = np.sqrt(q.weights)
    A = sw[:, None] * airy_kernel(q.nodes, q.nodes) * sw[None, :]
    return float(np.linalg.det(np.eye(n) - A))


def f_gue(s: float, accuracy: float = 1e-10) -> float:
    """Tracy-Widom GUE distribution function."""
    if not accuracy >= 1e-10:
        raise ValueError("accuracy must be at least 1e-10")
    s = float(s)
    if s > 12.0:
        # the determinant equals 1 to double precision
        return 1.0
    if s < -12.0:
        # log F ~ -|s|^3/12; far below any useful accuracy
        return 0.0
    b = _airy_upper(s, accuracy)
    n0 = max(16, int(4 * (b - s)))
    val = _doubling(lambda n: _fgue_n(s, b, n), n0, accuracy, f"f_gue({s})")
    return min(1.0, max(0.0, val))


# -- Hermite functions ------------------------------------------------------
def hermite_functions(x: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal Hermite functions phi_0..phi_{n-1} (weight e^{-x^2}) at ``x``; shape (n, len(x))."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n, x.size))
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, n - 1):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def _hermite_reach(n: int) -> float:
    # phi_k, k < n, is below 1e-40 beyond this radius
    return math.sqrt(2.0 * n + 1.0) + 14.0


def hermite_gram(a: float, n: int, side: str, nodes: int) -> np.ndarray:
    """int phi_j phi_k over (a, inf) (side='right') or (-inf, a) (side='left')."""
    R = _hermite_reach(n)
    if side == "right":
        lo, hi = a, max(a, R)
    else:
        lo, hi = min(a, -R), a
    if hi <= lo:
        return np.zeros((n, n))
    q = Quadrature.legendre(lo, hi, nodes)
    phi = hermite_functions(q.nodes, n) * np.sqrt(q.weights)
    return phi @ phi.T


def _gram_converged(a: float, n: int, side: str, accuracy: float) -> np.ndarray:
    span = 2 * _hermite_reach(n)
    m = max(64, int(3 * span + 4 * n))
    prev = hermite_gram(a, n, side, m)
    for _ in range(MAX_DOUBLINGS):
        m *= 2
        cur = hermite_gram(a, n, side, m)
        if np.max(np.abs(cur - prev)) < max(accuracy * 1e-2, 1e-13):
            return cur
        prev = cur
    raise ConvergenceError("Hermite Gram quadrature did not converge")


# -- F_{M,1} ----------------------------------------------------------------
M1_MAX = 200


def f_M1(s: float, M: int, accuracy: float = 1e-12) -> float:
    """Largest-eigenvalue law of an M x M GUE with unit-variance diagonal.

    det(delta_jk - int_{s/sqrt2}^inf phi_j phi_k) over the first M Hermite functions.
    """
    if not (isinstance(M, (int, np.integer)) and 1 <= M <= M1_MAX):
        raise ValueError(f"M must be an integer in [1, {M1_MAX}]")
    a = float(s) / math.sqrt(2.0)
    if a < 0:
        # the left Gram is small here; its determinant is the probability directly
        H = _gram_converged(a, M, "left", accuracy)
        val = float(np.linalg.det(H))
    else:
        G = _gram_converged(a, M, "right", accuracy)
        val = float(np.linalg.det(np.eye(M) - G))
    return min(1.0, max(0.0, val))


# -- F_{M,p}, p < 1 ---------------------------------------------------------
def mp_max(p: float) -> int:
    """Largest M for which (p/q)^(M-1) stays representable."""
    r = p / (1.0 - p)
    return int(math.floor(math.log(1e300) / math.log(r))) + 1


def _check_mp(M: int, p: float):
    if not 0.5 < p < 1.0:
        if p == 1.0:
            raise ValueError("F_{M,p} is given by a contour formula only for p < 1; use f_M1 at p = 1")
        raise ValueError("p must lie in (1/2, 1)")
    if not (isinstance(M, (int, np.integer)) and M >= 1):
        raise ValueError("M must be a positive integer")
    if M > mp_max(p):
        raise OverflowError(f"contour radius (p/q)^(M-1) overflows for M = {M}, p = {p}")


def _mp_basis(s: float, M: int, p: float, accuracy: float):
    q = 1.0 - p
    tau = q / p
    extra = int(math.ceil(math.log(accuracy * 1e-3) / math.log(tau))) + 4
    N = M + extra
    c = math.sqrt((p - q) / 2.0)
    a = -c * float(s)
    if a < 0:
        H = _gram_converged(a, N, "left", accuracy)
    else:
        H = np.eye(N) - _gram_converged(a, N, "right", accuracy)
    return tau, N, H


def _mp_contour(tau, N, H, M, nodes):
    # lambda = 2 tau^{-(M-1)} e^{i theta}; lambda tau^n = 2 tau^{n-M+1} e^{i theta}
    theta = 2 * math.pi * (np.arange(nodes) + 0.5) / nodes
    n = np.arange(N)
    scale = 2.0 * tau ** (n - M + 1.0)
    total = 0.0 + 0.0j
    eye = np.eye(N)
    for th in theta:
        z = scale * np.exp(1j * th)
        E = z / (1.0 - z)
        tail = np.prod(1.0 - z[M:])
        d = np.linalg.det(eye + E[:, None] * H)
        # dlambda / (2 pi i lambda) = dtheta / 2 pi
        total += tail * d
    return (total / nodes).real


def _mp_residues(tau, N, H, M):
    n = np.arange(N)
    eye = np.eye(N)
    total = 0.0
    for k in range(M):
        x = tau ** (n - k).astype(float)
        x[k] = 0.0
        E = np.where(n == k, -1.0, x / (1.0 - np.where(n == k, 0.0, x)))
        A = eye + E[:, None] * H
        d = np.linalg.det(A)
        hk = np.linalg.solve(A.T, H[k])[k]
        tail = np.prod(1.0 - tau ** (n[M:] - k).astype(float))
        total += tail * d * hk
    return 1.0 - total


def f_Mp(s: float, M: int, p: float, accuracy: float = 1e-10, method: str = "contour") -> float:
    """Crossover law F_{M,p}(s) for p in (1/2, 1).

    ``method='contour'`` integrates with the trapezoid rule on the circle of
    radius 2 (p/q)^(M-1); ``'residue'`` sums the M + 1 residues in closed form.
    """
    _check_mp(M, p)
    tau, N, H = _mp_basis(s, M, p, accuracy)
    if method == "residue":
        val = _mp_residues(tau, N, H, M)
    elif method == "contour":
        val = _doubling(lambda k: _mp_contour(tau, N, H, M, k), 16, accuracy, f"f_Mp({s}, {M}, {p})")
    else:
        raise ValueError(f"unknown method {method!r}")
    return min(1.0, max(0.0, float(val)))


def f_Mp_nystrom_m1(s: float, p: float, nodes: int = 200) -> float:
    """1 - det(I - K) for M = 1, with K discretized directly in z."""
    q = 1.0 - p
    hi = max(-s, 0.0) + 40.0 / (p - q)
    Q = Quadrature.legendre(-float(s), hi, nodes)
    z = Q.nodes
    Z1, Z2 = np.meshgrid(z, z, indexing="ij")
    K = p / math.sqrt(2 * math.pi) * np.exp(-(p * p + q * q) * (Z1**2 + Z2**2) / 4 + p * q * Z1 * Z2)
    sw = np.sqrt(Q.weights)
    return 1.0 - float(np.linalg.det(np.eye(nodes) - sw[:, None] * K * sw[None, :]))


def f_step(s: float, M: int, p: float, accuracy: float = 1e-10) -> float:
    """F_{M,p}, dispatching to the Hermite-ensemble law at p = 1."""
    if p == 1.0:
        return f_M1(s, M)
    return f_Mp(s, M, p, accuracy)


def edge_argument(s: float, M: int, p: float) -> float:
    """(2 sqrt M + s M^(-1/6)) / sqrt(p - q): the scale on which F_{M,p} tends to F_GUE."""
    return (2 * math.sqrt(M) + s * M ** (-1.0 / 6)) / math.sqrt(2 * p - 1)


# -- shock laws -------------------------------------------------------------
def product_shock_law(xi: float, lam: float, accuracy: float = 1e-10) -> float:
    return f_gue(-lam, accuracy) * f_gue(xi - lam, accuracy)


def nonhard_params(beta: float):
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    rho1, rho2 = (1 - beta) / 2, (1 + beta) / 2
    sigma1 = (1 + beta) ** (2 / 3) / (2 ** (1 / 3) * (1 - beta) ** (1 / 3))
    sigma2 = (1 - beta) ** (2 / 3) / (2 ** (1 / 3) * (1 + beta) ** (1 / 3))
    return rho1, rho2, sigma1, sigma2


def nonhard_shock_law(xi: float, lam: float, beta: float, accuracy: float = 1e-10,
                      swap: bool = False) -> float:
    """Two-factor GUE law of the TASEP shock between densities (1-beta)/2 and (1+beta)/2."""
    rho1, rho2, sigma1, sigma2 = nonhard_params(beta)
    if swap:
        rho1, rho2, sigma1, sigma2 = rho2, rho1, sigma2, sigma1
    return (f_gue((xi - lam / rho1) / sigma1, accuracy)
            * f_gue((xi - lam / rho2) / sigma2, accuracy))


def transition_scale(beta: float) -> float:
    """(1-beta)^(2/3) / 2^(2/3): the label and position unit of the beta -> 1 transition."""
    return (1 - beta) ** (2 / 3) / 2 ** (2 / 3)


def tasep_transition_law(xi: float, lam: float, beta: float, accuracy: float = 1e-10) -> float:
    """nonhard_shock_law at (xi w, lam w), w = transition_scale(beta)."""
    w = transition_scale(beta)
    return nonhard_shock_law(xi * w, lam * w, beta, accuracy)


# -- tabulated laws ---------------------------------------------------------
LAW_KINDS = ("Fgue", "FMp", "FM1", "ProductShock", "NonHardShock", "TasepTransition")


@dataclass
class DistLaw:
    """A distribution function with a cached evaluation table.

    ``params``: FMp ``M, p``; FM1 ``M``; ProductShock ``lam``; NonHardShock
    and TasepTransition ``lam, beta``.  Shock laws are functions of xi.
    """

    kind: str
    params: dict = field(default_factory=dict)
    accuracy_target: float = 1e-8
    table: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.kind not in LAW_KINDS:
            raise ValueError(f"unknown law kind {self.kind!r}")
        P = self.params
        if self.kind == "FMp":
            _check_mp(int(P["M"]), float(P["p"]))
        if self.kind == "FM1" and not 1 <= int(P["M"]) <= M1_MAX:
            raise ValueError(f"M must be in [1, {M1_MAX}]")
        if self.kind in ("NonHardShock", "TasepTransition"):
            nonhard_params(float(P["beta"]))

    @property
    def name(self) -> str:
        if not self.params:
            return self.kind
        tail = "_".join(f"{k}{v}" for k, v in sorted(self.params.items()))
        return f"{self.kind}_{tail}"

    def _eval(self, s: float) -> float:
        P, acc = self.params, max(self.accuracy_target * 1e-2, 1e-10)
        if self.kind == "Fgue":
            return f_gue(s, acc)
        if self.kind == "FMp":
            return f_Mp(s, int(P["M"]), float(P["p"]), acc)
        if self.kind == "FM1":
            return f_M1(s, int(P["M"]))
        if self.kind == "ProductShock":
            return product_shock_law(s, float(P["lam"]), acc)
        if self.kind == "NonHardShock":
            return nonhard_shock_law(s, float(P["lam"]), float(P["beta"]), acc)
        return tasep_transition_law(s, float(P["lam"]), float(P["beta"]), acc)

    def __call__(self, s: float) -> float:
        s = float(s)
        for x, v in self.table:
            if x == s:
                return v
        v = self._eval(s)
        self.table.append((s, v))
        self.table.sort()
        return v

    def evaluate(self, grid: Sequence[float]) -> np.ndarray:
        vals = np.array([self(s) for s in grid])
        self.check()
        return vals

    def check(self):
        """Raise if the cached table leaves [0, 1] or decreases."""
        vals = np.array([v for _, v in self.table])
        if vals.size and (vals.min() < 0 or vals.max() > 1):
            raise ValueError(f"{self.name}: values outside [0, 1]")
        if np.any(np.diff(vals) < -self.accuracy_target):
            raise ValueError(f"{self.name}: table is not nondecreasing")

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["s", "value"])
        for s, v in self.table:
            w.writerow([repr(float(s)), repr(float(v))])
        return out.getvalue()

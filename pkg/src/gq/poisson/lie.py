"""Matrix Lie layer: Iwasawa factorisation of SL(n+1, C), dressing data and momentum maps.

``SU`` is the special unitary group and ``SB`` the upper-triangular group with
positive real diagonal and determinant one.  Elements of the symplectic
groupoid are pairs ``(g, gamma)`` with ``g gamma = lam u0``, ``lam`` in the
subgroup ``U_t^perp`` generated by the first-row directions conjugated by
``sigma_t``.
"""

from __future__ import annotations

import functools
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

from .tensors import point_data

ALG_TOL = 1e-10


class LieError(ValueError):
    pass


def _check_square(d) -> np.ndarray:
    d = np.asarray(d, dtype=complex)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise LieError(f"expected a square matrix, got shape {d.shape}")
    return d


def is_su(g, tol: float = ALG_TOL) -> bool:
    g = np.asarray(g, dtype=complex)
    return bool(
        np.abs(g.conj().T @ g - np.eye(len(g))).max() <= tol and abs(np.linalg.det(g) - 1) <= tol
    )


def is_sb(b, tol: float = ALG_TOL) -> bool:
    b = np.asarray(b, dtype=complex)
    d = np.diag(b)
    return bool(
        np.abs(np.tril(b, -1)).max(initial=0.0) <= tol
        and np.abs(d.imag).max() <= tol
        and (d.real > 0).all()
        and abs(np.prod(d.real) - 1) <= tol
    )


def sigma_t(n: int, t: float) -> np.ndarray:
    """Rotation by angle ``arcsin(sqrt t)`` in the plane of the first and last basis vectors."""
    if not 0.0 <= t <= 1.0:
        raise LieError(f"t must lie in [0, 1], got {t}")
    s = np.eye(n + 1, dtype=complex)
    a, b = np.sqrt(1.0 - t), np.sqrt(t)
    s[0, 0] = s[n, n] = a
    s[0, n] = b
    s[n, 0] = -b
    return s


def _qr_positive(d):
    q, r = np.linalg.qr(d)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph, r / ph[:, None]


def iwasawa(d, order: str = "SU.SB"):
    """Factor ``d`` in SL(n+1, C) as ``u b`` (``order="SU.SB"``) or ``b u`` (``order="SB.SU"``)."""
    d = _check_square(d)
    if abs(np.linalg.det(d) - 1.0) > ALG_TOL:
        raise LieError("iwasawa expects a determinant-one matrix")
    if order == "SU.SB":
        return _qr_positive(d)
    if order == "SB.SU":
        q, r = _qr_positive(np.linalg.inv(d))
        # d^{-1} = q r  =>  d = r^{-1} q^{-1}
        return np.linalg.inv(r), q.conj().T
    raise LieError(f"unknown order {order!r}")


def su_sb_split(X):
    """Split a traceless ``X`` into anti-hermitian plus upper-triangular real-diagonal parts."""
    X = _check_square(X)
    if abs(np.trace(X)) > ALG_TOL * max(1.0, np.abs(X).max()):
        raise LieError("su_sb_split expects a traceless matrix")
    L = np.tril(X, -1)
    X_su = L - L.conj().T + 1j * np.diag(np.diag(X).imag)
    return X_su, X - X_su


def momentum_h(gamma) -> np.ndarray:
    """``h_k = log det_k(gamma) = sum_{i<=k} log gamma_ii`` for k = 1..n."""
    gamma = _check_square(gamma)
    d = np.diag(gamma)
    if np.abs(d.imag).max() > ALG_TOL or (d.real <= 0).any():
        raise LieError("momentum_h needs a positive real diagonal")
    return np.cumsum(np.log(d.real))[:-1]


def momentum_c(g, t: float) -> np.ndarray:
    g = _check_square(g)
    n = len(g) - 1
    X = np.linalg.solve(sigma_t(n, t).T, np.eye(n + 1)[0]) @ g
    w = np.abs(X) ** 2
    return np.cumsum(w)[:-1] / w.sum()


class GroupoidElement(NamedTuple):
    gamma: np.ndarray
    u0: np.ndarray
    lam: np.ndarray


def _check_xi(xi, n):
    xi = _check_square(xi)
    mask = np.zeros((n + 1, n + 1), dtype=bool)
    mask[0, 1:] = True
    if len(xi) != n + 1 or np.abs(xi[~mask]).max(initial=0.0) > 0:
        raise LieError("xi must vanish outside the first row, columns 2..n+1")
    return xi


def build_element(g, xi, t: float) -> GroupoidElement:
    g = _check_square(g)
    n = len(g) - 1
    xi = _check_xi(xi, n)
    s = sigma_t(n, t)
    _, p2 = su_sb_split(s @ xi @ s.conj().T)
    lam = expm(p2)
    u0, b = iwasawa(np.linalg.solve(lam, g), "SU.SB")
    return GroupoidElement(np.linalg.inv(b), u0, lam)


def compose_elements(e1: GroupoidElement, e2: GroupoidElement) -> GroupoidElement:
    """``(g, gamma1)(g^gamma1, gamma2) = (g, gamma1 gamma2)``; ``e2`` must start at ``e1.u0``."""
    return GroupoidElement(e1.gamma @ e2.gamma, e2.u0, e1.lam @ e2.lam)


def action_formula(c, h, t: float) -> np.ndarray:
    return 1.0 - t + np.exp(-np.asarray(h)) * (np.asarray(c) + t - 1.0)


class CrossCheck(NamedTuple):
    residual: float
    literal_residual: float
    reconstruction: float
    invariance_ok: bool
    c_src: np.ndarray
    c_tgt: np.ndarray
    h: np.ndarray


def raction_crosscheck(g, xi, t: float, *, tol: float = 1e-8) -> CrossCheck:
    """Compare ``c(u0)`` with the action formula applied to ``c(g)`` and the cocycle of ``gamma``.

    The Lie-side cocycle ``log det_k gamma`` integrates the torus fields with
    respect to the group-level tensor, which is ``kappa`` times the pencil
    normalisation (see :func:`tensor_normalization`); the pencil cocycle is
    therefore ``kappa * log det_k gamma``.  ``literal_residual`` is the same
    comparison with ``kappa`` replaced by 1.
    """
    el = build_element(g, xi, t)
    c_src = momentum_c(g, t)
    c_tgt = momentum_c(el.u0, t)
    h = tensor_normalization() * momentum_h(el.gamma)
    residual = float(np.abs(c_tgt - action_formula(c_src, h, t)).max())
    literal = float(np.abs(c_tgt - action_formula(c_src, momentum_h(el.gamma), t)).max())
    on_wall = np.abs(c_src - (1.0 - t)) <= tol
    invariance_ok = bool((np.abs(c_tgt[on_wall] - (1.0 - t)) <= tol).all())
    recon = float(np.abs(g @ el.gamma - el.lam @ el.u0).max())
    return CrossCheck(residual, literal, recon, invariance_ok, c_src, c_tgt, h)


# ------------------------------------------------------------ sampling


def random_sl(rng: np.random.Generator, n: int) -> np.ndarray:
    m = rng.standard_normal((n + 1, n + 1)) + 1j * rng.standard_normal((n + 1, n + 1))
    return m / np.linalg.det(m) ** (1.0 / (n + 1))


def random_su(rng: np.random.Generator, n: int) -> np.ndarray:
    m = rng.standard_normal((n + 1, n + 1)) + 1j * rng.standard_normal((n + 1, n + 1))
    q, _ = _qr_positive(m)
    return q / np.linalg.det(q) ** (1.0 / (n + 1))


def random_sb(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    b = np.triu(rng.standard_normal((n + 1, n + 1)) + 1j * rng.standard_normal((n + 1, n + 1)), 1)
    d = np.exp(scale * rng.standard_normal(n + 1))
    return b * scale + np.diag(d / np.prod(d) ** (1.0 / (n + 1)))


def random_xi(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    xi = np.zeros((n + 1, n + 1), dtype=complex)
    xi[0, 1:] = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return xi


def block_su(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """Random element of S(U(k) x U(n+1-k)); these satisfy ``c_k = 1 - t`` for every t."""
    if not 1 <= k <= n:
        raise LieError(f"k must lie in 1..{n}")
    m = np.zeros((n + 1, n + 1), dtype=complex)
    m[:k, :k] = random_su(rng, k - 1) if k > 1 else np.eye(1)
    m[k:, k:] = random_su(rng, n - k) if k < n else np.eye(1)
    m[0] *= np.exp(2j * np.pi * rng.random())
    return m / np.linalg.det(m) ** (1.0 / (n + 1))


def sample_stream(seed: int, count: int):
    """Independent child generators from one seed (reproducible under splitting)."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


# ------------------------------------------------------------ SU(2)


def su2_cell(y: complex, theta: float = 0.0) -> np.ndarray:
    e = np.sqrt(1.0 + abs(y) ** 2)
    g = np.array([[-y, 1.0], [-1.0, -np.conj(y)]], dtype=complex) / e
    return g @ np.diag([np.exp(1j * theta), np.exp(-1j * theta)])


def pairing(X, xi) -> float:
    return float(np.trace(X @ xi).imag)


SB2_BASIS = (
    np.diag([1.0, -1.0]).astype(complex),
    np.array([[0, 1], [0, 0]], dtype=complex),
    np.array([[0, 1j], [0, 0]], dtype=complex),
)
SU2_BASIS = (
    np.array([[0, 1j], [1j, 0]]),
    np.array([[0, 1], [-1, 0]], dtype=complex),
    np.array([[1j, 0], [0, -1j]]),
)


def dual_su2_basis():
    """Basis ``X_a`` of su(2) with ``Im Tr(X_a xi_b) = delta_ab`` and the resulting Gram matrix."""
    G = np.array([[pairing(X, xi) for xi in SB2_BASIS] for X in SU2_BASIS])
    C = np.linalg.inv(G).T  # X'_a = sum_c C[c, a] X_c
    dual = [sum(C[c, a] * SU2_BASIS[c] for c in range(3)) for a in range(3)]
    gram = np.array([[pairing(X, xi) for xi in SB2_BASIS] for X in dual])
    return dual, gram


def su2_bivector(g) -> np.ndarray:
    """Coefficients ``B_ab`` of the SU(2) Poisson tensor in the right-trivialised dual basis."""
    gi = g.conj().T
    B = np.empty((3, 3))
    for a, x1 in enumerate(SB2_BASIS):
        p1, _ = su_sb_split(gi @ x1 @ g)
        for b, x2 in enumerate(SB2_BASIS):
            _, p2 = su_sb_split(gi @ x2 @ g)
            B[a, b] = -pairing(p1, p2)
    return B


def _dy(g, V):
    # differential of y = g11/g21 along the tangent vector V at g
    return (V[0, 0] * g[1, 0] - g[0, 0] * V[1, 0]) / g[1, 0] ** 2


def su2_projected(y: complex, theta: float = 0.0) -> float:
    """``{u, v}`` for ``y = u + i v`` from the group tensor pushed to the chart."""
    g = su2_cell(y, theta)
    B = su2_bivector(g)
    dual, _ = dual_su2_basis()
    dys = [_dy(g, X @ g) for X in dual]
    du = np.array([d.real for d in dys])
    dv = np.array([d.imag for d in dys])
    return float(du @ B @ dv)


def _closed_form(y) -> float:
    # i f d_y ^ d_ybar  ->  {u, v} = -f/2
    return -(1.0 + abs(y) ** 2) / 2.0


@functools.lru_cache(maxsize=1)
def tensor_normalization() -> float:
    """Ratio of the group-level SU(2) tensor (Im Tr pairing) to the closed chart form, fixed at one point."""
    y0 = 0.3 + 0.4j
    return su2_projected(y0) / _closed_form(y0)


class SU2Check(NamedTuple):
    residual: float
    theta_residual: float
    omega_residual: float
    gram_residual: float
    kappa: float


def su2_check(y: complex, theta: float = 0.3) -> SU2Check:
    """Group-level tensor vs ``i(1+|y|^2) d_y ^ d_ybar`` and ``Omega`` vs ``-i dy^dybar/(1+|y|^2)^2``.

    The group tensor is compared after dividing by the constant
    :func:`tensor_normalization`; ``theta_residual`` measures independence of
    the torus angle (the push-forward is well defined).
    """
    kappa = tensor_normalization()
    closed = _closed_form(y)
    p = su2_projected(y, theta)
    res = abs(p / kappa - closed) / max(1.0, abs(closed))
    th = abs(p - su2_projected(y, 0.0)) / max(1.0, abs(p))
    pd = point_data(np.array([y]))
    kk = -2.0 / (1.0 + abs(y) ** 2) ** 2
    om = abs(pd.omega[0, 1] - kk) + abs(pd.omega[1, 0] + kk)
    _, gram = dual_su2_basis()
    return SU2Check(float(res), float(th), float(om), float(np.abs(gram - np.eye(3)).max()), kappa)

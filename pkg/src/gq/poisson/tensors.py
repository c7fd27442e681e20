"""Bivector calculus for the Poisson pencil on the maximal cell of CP_n.

Real coordinates: ``y_j = x[2j] + i x[2j+1]`` (0-based).  A bivector is an
antisymmetric ``2n x 2n`` matrix ``P`` with ``{f, g} = df^T P dg``; the
hamiltonian field of ``f`` is therefore ``X_f = P^T df``, i.e.
``X_f(g) = {f, g}``.  Derivatives come from :mod:`gq.poisson.dual`;
``dT[l]`` always denotes the partial derivative of ``T`` along ``x_l``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from . import dual
from .dual import jacobian, sqrt


def real_view(y) -> np.ndarray:
    y = np.asarray(y, dtype=complex)
    x = np.empty(2 * len(y))
    x[0::2], x[1::2] = y.real, y.imag
    return x


def complex_view(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[0::2] + 1j * x[1::2]


# ------------------------------------------------------------- Lu chart


def z_from_y(y) -> np.ndarray:
    """Affine coordinates from Lu coordinates: ``z_n = y_n``, ``z_i = y_i (1 + sum_{j>i}|z_j|^2)^{1/2}``."""
    y = np.asarray(y, dtype=complex)
    z = np.empty_like(y)
    s = 1.0
    for i in range(len(y) - 1, -1, -1):
        z[i] = y[i] * np.sqrt(s)
        s += abs(z[i]) ** 2
    return z


def y_from_z(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    y = np.empty_like(z)
    s = 1.0
    for i in range(len(z) - 1, -1, -1):
        y[i] = z[i] / np.sqrt(s)
        s += abs(z[i]) ** 2
    return y


def _z_of_x(x):
    # Real form of z_from_y; works on duals.
    n = len(x) // 2
    out = [None] * (2 * n)
    s = 1.0
    for i in range(n - 1, -1, -1):
        r = sqrt(s)
        out[2 * i] = x[2 * i] * r
        out[2 * i + 1] = x[2 * i + 1] * r
        s = s + out[2 * i] * out[2 * i] + out[2 * i + 1] * out[2 * i + 1]
    return out


def _liouville(w):
    # alpha = sum_i (b_i da_i - a_i db_i) / (1 + |z|^2), z_i = a_i + i b_i.
    s = 1.0
    for v in w:
        s = s + v * v
    out = []
    for i in range(len(w) // 2):
        out.append(w[2 * i + 1] / s)
        out.append(-w[2 * i] / s)
    return out


def _omega_z(w) -> np.ndarray:
    _, Ja = jacobian(_liouville, w)
    return Ja.T - Ja  # Omega_ij = d_i alpha_j - d_j alpha_i


def _omega_y(x) -> np.ndarray:
    zv, Jz = jacobian(_z_of_x, x)
    return Jz.T @ _omega_z(list(zv)) @ Jz


def _pi0(x) -> np.ndarray:
    m = len(x)
    P = np.zeros((m, m), dtype=object)
    for j in range(m // 2):
        f = -(1.0 + x[2 * j] * x[2 * j] + x[2 * j + 1] * x[2 * j + 1]) / 2.0
        P[2 * j, 2 * j + 1] = f
        P[2 * j + 1, 2 * j] = -f
    return P


def _c(x) -> list:
    out, prod = [], 1.0
    for j in range(len(x) // 2):
        prod = prod / (1.0 + x[2 * j] * x[2 * j] + x[2 * j + 1] * x[2 * j + 1])
        out.append(1.0 - prod)
    return out


def sigma_fields(x) -> np.ndarray:
    """Rows ``k``: fundamental field of ``H_{k+1}``, ``i sum_{j<=k}(y_j d_y_j - conj)``."""
    x = np.asarray(x, dtype=float)
    n = len(x) // 2
    rot = np.empty_like(x)
    rot[0::2], rot[1::2] = -x[1::2], x[0::2]
    S = np.zeros((n, 2 * n))
    for k in range(n):
        S[k, : 2 * (k + 1)] = rot[: 2 * (k + 1)]
    return S


def c_values(y) -> np.ndarray:
    """``c_k = 1 - prod_{i<=k} 1/(1+|y_i|^2)``."""
    return np.asarray(_c(list(real_view(y))), dtype=float)


# ----------------------------------------------------------- point data


def _value_and_derivative(f, x, shape):
    V, J = jacobian(lambda v: f(v).ravel(), x)
    m = len(x)
    value = dual.as_float(V).reshape(shape)
    deriv = np.stack([dual.as_float(J[:, l]).reshape(shape) for l in range(m)])
    return value, deriv


@dataclass(frozen=True)
class PointData:
    """t-independent data at a chart point: ``Omega_lambda``, ``Pi_0``, ``c`` and first derivatives."""

    x: np.ndarray
    omega: np.ndarray
    d_omega: np.ndarray
    pi0: np.ndarray
    d_pi0: np.ndarray
    c: np.ndarray
    dc: np.ndarray
    sigma: np.ndarray

    @property
    def n(self) -> int:
        return len(self.x) // 2


def point_data(y) -> PointData:
    x = real_view(y)
    m = len(x)
    xs = list(x)
    omega, d_omega = _value_and_derivative(_omega_y, xs, (m, m))
    pi0, d_pi0 = _value_and_derivative(_pi0, xs, (m, m))
    cv, Jc = jacobian(_c, xs)
    if abs(np.linalg.det(omega)) < 1e-300 or np.linalg.cond(omega) > 1e14:
        raise np.linalg.LinAlgError("Omega_lambda is numerically singular at this point")
    return PointData(
        x=x,
        omega=omega,
        d_omega=d_omega,
        pi0=pi0,
        d_pi0=d_pi0,
        c=dual.as_float(cv),
        dc=dual.as_float(Jc),
        sigma=sigma_fields(x),
    )


@functools.lru_cache(maxsize=1)
def lambda_sign() -> int:
    """Sign ``s`` in ``Pi_lambda = s Omega^{-1}`` fixed by ``X_{c_k} = sigma_{H_k}`` for Pi_lambda."""
    pd = point_data(np.array([0.3 + 0.4j, -0.2 + 0.1j]))
    inv = np.linalg.inv(pd.omega)
    plus = max(np.abs(inv.T @ pd.dc[k] - pd.sigma[k]).max() for k in range(pd.n))
    minus = max(np.abs(-inv.T @ pd.dc[k] - pd.sigma[k]).max() for k in range(pd.n))
    if plus < 1e-10:
        return 1
    if minus < 1e-10:
        return -1
    raise RuntimeError("momentum condition fails for both orientations")


@dataclass(frozen=True)
class TensorsAtPoint:
    pi0: np.ndarray
    omega: np.ndarray
    pi_lambda: np.ndarray
    pi_t: np.ndarray
    J: np.ndarray
    c: np.ndarray
    sigma: np.ndarray
    I: np.ndarray
    t: float = 0.0
    derivs: dict = field(default_factory=dict, repr=False, compare=False)


def tensors_at(y, t: float, data: PointData | None = None) -> TensorsAtPoint:
    pd = data if data is not None else point_data(y)
    s = lambda_sign()
    pl = s * np.linalg.inv(pd.omega)
    pl = (pl - pl.T) / 2.0
    J = pd.pi0 @ pd.omega
    d_pl = np.stack([-s * pl @ dO @ pl for dO in pd.d_omega])
    d_J = np.stack([dP @ pd.omega + pd.pi0 @ dO for dP, dO in zip(pd.d_pi0, pd.d_omega)])
    powers = [np.eye(len(J))]
    for _ in range(pd.n + 1):
        powers.append(powers[-1] @ J)
    I = np.array([np.trace(powers[k]) / k for k in range(1, pd.n + 1)])
    return TensorsAtPoint(
        pi0=pd.pi0,
        omega=pd.omega,
        pi_lambda=pl,
        pi_t=pd.pi0 + t * pl,
        J=J,
        c=pd.c,
        sigma=pd.sigma,
        I=I,
        t=t,
        derivs={
            "pi0": pd.d_pi0,
            "pi_lambda": d_pl,
            "pi_t": pd.d_pi0 + t * d_pl,
            "J": d_J,
            "omega": pd.d_omega,
            "dc": pd.dc,
            "J_powers": powers,
        },
    )


# ------------------------------------------------------------- Schouten


def schouten_tensor(A, dA, B=None, dB=None) -> np.ndarray:
    """``[A, B]^{ijk} = sum_l (A^{li} d_l B^{jk} + B^{li} d_l A^{jk}) + cyclic``; ``[A, A] = 2 sum_l(A^{li} d_l A^{jk} + cyc)``."""
    if B is None:
        B, dB = A, dA
    T = np.einsum("li,ljk->ijk", A, dB) + np.einsum("li,ljk->ijk", B, dA)
    return T + T.transpose(1, 2, 0) + T.transpose(2, 0, 1)


def jacobiator(P, dP, i: int, j: int, k: int) -> float:
    """``{x_i,{x_j,x_k}} + cyclic`` for the bivector P with derivatives dP."""
    return float(
        P[i] @ dP[:, j, k] + P[j] @ dP[:, k, i] + P[k] @ dP[:, i, j]
    )


def pi0_field(y, t=0.0):
    T = tensors_at(y, t)
    return T.pi0, T.derivs["pi0"]


def pi_lambda_field(y, t=0.0):
    T = tensors_at(y, t)
    return T.pi_lambda, T.derivs["pi_lambda"]


def pi_t_field(y, t=0.0):
    T = tensors_at(y, t)
    return T.pi_t, T.derivs["pi_t"]


def field_with_derivative(f):
    """Turn ``x -> P(x)`` (object-array bivector, dual-friendly) into ``x -> (P, dP)``."""

    def field(x, t=0.0):
        x = [float(v) for v in np.asarray(x, dtype=float)]
        m = len(x)
        return _value_and_derivative(lambda v: np.asarray(f(v), dtype=object), x, (m, m))

    return field


def schouten(field, y, t: float = 0.0) -> float:
    """Max-norm of ``[Pi, Pi]`` at ``y`` for a field returning ``(Pi, dPi)``."""
    P, dP = field(y, t)
    return float(np.abs(schouten_tensor(P, dP)).max())


def _scaled(T, A, dA, B=None, dB=None) -> float:
    # [A,B] is bilinear in (value, derivative); entries grow like powers of
    # 1+|y|^2, so the residual is measured against max(1, |A||dB| + |B||dA|)
    if B is None:
        B, dB = A, dA
    scale = np.abs(A).max() * np.abs(dB).max() + np.abs(B).max() * np.abs(dA).max()
    return float(np.abs(schouten_tensor(A, dA, B, dB)).max()) / max(1.0, scale)


def schouten_residuals(T: TensorsAtPoint) -> dict:
    """Scale-normalised Schouten residuals (absolute wherever the tensors are O(1))."""
    d = T.derivs
    return {
        "schouten_pi0": _scaled(T, T.pi0, d["pi0"]),
        "schouten_mixed": _scaled(T, T.pi0, d["pi0"], T.pi_lambda, d["pi_lambda"]),
        "schouten_lambda": _scaled(T, T.pi_lambda, d["pi_lambda"]),
        "schouten_pi_t": _scaled(T, T.pi_t, d["pi_t"]),
    }


# ------------------------------------------------------- identity suite


def modular_field(T: TensorsAtPoint) -> np.ndarray:
    """``chi^i = rho^{-1} sum_j d_j(rho Pi_t^{ji})`` with ``rho = |Pf Omega_lambda|``."""
    d = T.derivs
    inv = np.linalg.inv(T.omega)
    dlog_rho = np.array([0.5 * np.trace(inv @ dO) for dO in d["omega"]])
    div = np.einsum("jji->i", d["pi_t"])
    return div + dlog_rho @ T.pi_t


def lenard_residual(T: TensorsAtPoint) -> float:
    """``max_k |dI_{k+1} - J^T dI_k|`` with ``d_l I_k = Tr(J^{k-1} d_l J)``."""
    dJ, powers = T.derivs["J"], T.derivs["J_powers"]
    n = len(T.c)
    dI = [np.array([np.trace(powers[k - 1] @ dJl) for dJl in dJ]) for k in range(1, n + 2)]
    return max(
        (float(np.abs(dI[k] - T.J.T @ dI[k - 1]).max()) for k in range(1, n + 1)), default=0.0
    )


@dataclass(frozen=True)
class IdentityResult:
    t: float
    residuals: dict
    skipped: int = 0

    def failures(self, tolerances: dict | None = None) -> dict:
        tol = tolerances or IDENTITY_TOLERANCES
        return {k: v for k, v in self.residuals.items() if not v <= tol.get(k, 1e-8)}

    @property
    def passed(self) -> bool:
        return not self.failures()


def identity_suite(y, t: float, data: PointData | None = None, *, log_tol: float = 1e-6) -> IdentityResult:
    """Residuals of the pencil identities at one point.

    Keys: recursion (J sigma_k = (c_k - 1) sigma_k), local_hamiltonian
    (Pi_t^T d b_k = sigma_k, skipped where |c_k - 1 + t| < log_tol), momentum
    (Pi_lambda^T d c_k = sigma_k), lenard,
    modular (chi = sum sigma_k), involution ({c_i, c_j}_t = 0), antisymmetry
    and the four Schouten brackets.
    """
    T = tensors_at(y, t, data)
    dc = T.derivs["dc"]
    res, skipped = {}, 0
    res["recursion"] = max(
        float(np.abs(T.J @ T.sigma[k] - (T.c[k] - 1.0) * T.sigma[k]).max())
        for k in range(len(T.c))
    )
    local = 0.0
    for k in range(len(T.c)):
        gap = T.c[k] - 1.0 + t
        if abs(gap) < log_tol:
            skipped += 1
            continue
        local = max(local, float(np.abs(T.pi_t.T @ (dc[k] / gap) - T.sigma[k]).max()))
    res["local_hamiltonian"] = local
    res["momentum"] = max(
        float(np.abs(T.pi_lambda.T @ dc[k] - T.sigma[k]).max()) for k in range(len(T.c))
    )
    res["lenard"] = lenard_residual(T)
    res["modular"] = float(np.abs(modular_field(T) - T.sigma.sum(axis=0)).max())
    res["involution"] = max(
        (
            abs(float(dc[i] @ T.pi_t @ dc[j]))
            for i in range(len(T.c))
            for j in range(i + 1, len(T.c))
        ),
        default=0.0,
    )
    res["antisymmetry"] = max(
        float(np.abs(M + M.T).max()) for M in (T.pi0, T.omega, T.pi_lambda, T.pi_t)
    )
    res.update(schouten_residuals(T))
    return IdentityResult(t, res, skipped)


# Tolerances per identity: algebraic, first-derivative, second-derivative.
IDENTITY_TOLERANCES = {
    "recursion": 1e-8,
    "local_hamiltonian": 1e-8,
    "momentum": 1e-8,
    "lenard": 1e-6,
    "modular": 1e-6,
    "involution": 1e-8,
    "antisymmetry": 1e-12,
    "schouten_pi0": 1e-8,
    "schouten_mixed": 1e-8,
    "schouten_lambda": 1e-8,
    "schouten_pi_t": 1e-8,
}

"""Dense SDP solvers for entry-sharing moment problems.

Problem form:  maximize  c . y   subject to   M(y) >= 0 (PSD),  G y + g0 >= 0,
with y[0] = 1 fixed, where M(y) is a symmetric matrix whose every entry equals
some coordinate of y (the moment-matrix structure: entries sharing a monomial
class share a variable).

Two methods:
  * a primal-dual interior-point method (HKM direction, Mehrotra-style
    centering) with a certified duality gap, for small/medium problems;
  * a budgeted ADMM splitting with a PSD-projection step and a validity
    repair (mixing toward the uniform-moment interior point), for problems
    whose class count makes the Schur complement infeasible.

Both are deterministic given their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class MomentSDP:
    side: int                      # B, side of the moment matrix
    n_classes: int                 # number of monomial classes incl. class 0 (constant)
    entry_i: np.ndarray            # ordered entry positions (both (i,j) and (j,i);
    entry_j: np.ndarray            #   diagonal once), class 0 entries excluded
    entry_k: np.ndarray            # variable class per entry, in 1..n_classes-1
    const_entries: tuple           # (i_array, j_array) of class-0 entries (value 1)
    c: np.ndarray                  # objective over classes (c[0] is a constant term)
    G: Optional[np.ndarray] = None    # linear inequalities G y + g0 >= 0 (over y[1:])
    g0: Optional[np.ndarray] = None
    class_count: np.ndarray = field(default=None)  # entries per class (for averaging)

    def __post_init__(self):
        if self.class_count is None:
            self.class_count = np.bincount(self.entry_k, minlength=self.n_classes)

    @property
    def m(self) -> int:
        return self.n_classes - 1

    def assemble(self, y: np.ndarray) -> np.ndarray:
        """M(y) for a full class vector y (y[0] should be 1)."""
        M = np.zeros((self.side, self.side))
        M[self.entry_i, self.entry_j] = y[self.entry_k]
        ci, cj = self.const_entries
        M[ci, cj] = y[0]
        return M

    def class_average(self, W: np.ndarray) -> np.ndarray:
        """Project a matrix onto the structure subspace: average entries per class."""
        y = np.zeros(self.n_classes)
        sums = np.bincount(self.entry_k, weights=W[self.entry_i, self.entry_j],
                           minlength=self.n_classes)
        cnt = np.maximum(self.class_count, 1)
        y = sums / cnt
        y[0] = 1.0
        return y


@dataclass
class SDPResult:
    y: np.ndarray
    objective: float
    gap: float
    primal_residual: float
    iterations: int
    method: str
    status: str
    min_eig: float = float("nan")


def _max_step_psd(S: np.ndarray, dS: np.ndarray) -> float:
    """Largest alpha in (0,1] with S + alpha dS still PD (0.98 safety)."""
    L = np.linalg.cholesky(S)
    Li = np.linalg.inv(L)
    W = Li @ dS @ Li.T
    lam = np.linalg.eigvalsh((W + W.T) / 2).min()
    if lam >= 0:
        return 1.0
    return min(1.0, -0.98 / lam)


def _max_step_pos(t: np.ndarray, dt: np.ndarray) -> float:
    neg = dt < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, float(np.min(-0.98 * t[neg] / dt[neg])))


def solve_ipm(prob: MomentSDP, tol: float = 1e-8, max_iter: int = 80,
              verbose: bool = False) -> SDPResult:
    """HKM primal-dual interior-point method on the LMI (dual) form.

    maximize c[1:] . z  s.t.  S(z) = E0 + sum z_k E_k >= 0,  t(z) = g0 + G z >= 0.
    The returned y = (1, z) is exactly dual feasible, so M(y) is PSD up to the
    final line-search margin; the duality gap certifies near-optimality.
    """
    B, m = prob.side, prob.m
    I_, J_, K_ = prob.entry_i, prob.entry_j, prob.entry_k - 1  # 0-based variables
    have_lin = prob.G is not None and prob.G.shape[0] > 0
    G = prob.G if have_lin else np.zeros((0, m))
    g0 = prob.g0 if have_lin else np.zeros(0)
    p = G.shape[0]
    b = prob.c[1:]

    def op_A(X: np.ndarray, w: np.ndarray) -> np.ndarray:
        out = np.bincount(K_, weights=X[I_, J_], minlength=m)
        if p:
            out = out + G.T @ w
        return out

    def make_S(z: np.ndarray) -> np.ndarray:
        y = np.concatenate([[1.0], z])
        return prob.assemble(y)

    # strictly feasible dual start: the uniform moments (an interior point)
    z = _interior_start(prob)
    S = make_S(z)
    lam0 = np.linalg.eigvalsh(S).min()
    if lam0 <= 0:
        raise RuntimeError("interior start is not PD; moment structure is off")
    t = g0 + G @ z if p else np.zeros(0)
    X = np.eye(B)
    w = np.ones(p)

    status = "max_iter"
    it = 0
    for it in range(1, max_iter + 1):
        Sinv = np.linalg.inv(S)
        Sinv = (Sinv + Sinv.T) / 2
        gap = float(np.tensordot(X, S) + (w @ t if p else 0.0))
        mu = gap / (B + p)
        r_p = -b - op_A(X, w)
        obj = float(b @ z + prob.c[0])
        if verbose:
            print(f"  ipm it={it} obj={obj:.9f} gap={gap:.2e} feas={np.abs(r_p).max():.2e}")
        if gap <= tol * (1 + abs(obj)) and np.abs(r_p).max() <= tol * 10:
            status = "optimal"
            break

        # Schur complement H[k,l] = <E_k, Sinv E_l X> (+ orthant block)
        H = np.empty((m, m))
        for k in range(m):
            sel = K_ == k
            ik, jk = I_[sel], J_[sel]
            Wk = Sinv[:, ik] @ X[jk, :]
            H[k, :] = np.bincount(K_, weights=Wk[I_, J_], minlength=m)
        if p:
            H += G.T @ (G * (w / t)[:, None])
        H = (H + H.T) / 2

        def newton(mu_target: float):
            R = mu_target * Sinv - X
            rhs = np.bincount(K_, weights=R[I_, J_], minlength=m) - r_p
            if p:
                rhs = rhs + G.T @ (mu_target / t - w)
            try:
                dz = np.linalg.solve(H + 1e-12 * np.eye(m), rhs)
            except np.linalg.LinAlgError:
                dz = np.linalg.lstsq(H, rhs, rcond=None)[0]
            dS = make_S(z + dz) - S
            dt = G @ dz if p else np.zeros(0)
            dXr = mu_target * Sinv - X - Sinv @ dS @ X
            dX = (dXr + dXr.T) / 2
            dw = (mu_target / t - w - (w / t) * dt) if p else np.zeros(0)
            return dz, dS, dX, dt, dw

        # predictor (affine scaling) to set the centering weight
        dz, dS, dX, dt, dw = newton(0.0)
        a_p = min(_max_step_psd(X, dX), _max_step_pos(w, dw) if p else 1.0)
        a_d = min(_max_step_psd(S, dS), _max_step_pos(t, dt) if p else 1.0)
        gap_aff = float(np.tensordot(X + a_p * dX, S + a_d * dS)
                        + ((w + a_p * dw) @ (t + a_d * dt) if p else 0.0))
        sigma = min(1.0, max(1e-4, (gap_aff / gap) ** 3))
        dz, dS, dX, dt, dw = newton(sigma * mu)
        a_p = min(_max_step_psd(X, dX), _max_step_pos(w, dw) if p else 1.0)
        a_d = min(_max_step_psd(S, dS), _max_step_pos(t, dt) if p else 1.0)
        X = X + a_p * dX
        w = w + a_p * dw if p else w
        z = z + a_d * dz
        S = make_S(z)
        t = g0 + G @ z if p else t

    y = np.concatenate([[1.0], z])
    gap = float(np.tensordot(X, S) + (w @ t if p else 0.0))
    return SDPResult(y=y, objective=float(b @ z + prob.c[0]), gap=gap,
                     primal_residual=float(np.abs(-b - op_A(X, w)).max()),
                     iterations=it, method="ipm", status=status,
                     min_eig=float(np.linalg.eigvalsh(S).min()))


def _interior_start(prob: MomentSDP) -> np.ndarray:
    """Uniform-moment interior point: y_k = q^{-deg}; encoded via class counts.

    The construction below does not know q; callers pass the uniform vector
    through `uniform_y`.  Fallback: the all-but-identity structure vector.
    """
    if getattr(prob, "_uniform_y", None) is not None:
        return prob._uniform_y[1:].copy()
    raise RuntimeError("MomentSDP needs a `_uniform_y` interior point attached")


def solve_admm(prob: MomentSDP, max_iter: int = 400, rho: float = 1.0,
               warm_y: Optional[np.ndarray] = None, tol: float = 1e-7,
               verbose: bool = False) -> SDPResult:
    """Budgeted ADMM on  max c.y  s.t. M(y) = Z, Z >= 0 (PSD), y[0] = 1.

    The y-update is separable per monomial class because classes partition the
    matrix entries.  Deterministic for fixed inputs and budget; intended for
    problems too large for the Schur complement, with a warm start from the
    best known integral moments.  Linear inequalities are not supported here
    (the big instances run at degree >= 4 where they are implied).
    """
    if prob.G is not None and prob.G.shape[0] > 0:
        raise ValueError("ADMM path does not support linear inequalities")
    B = prob.side
    cnt = np.maximum(prob.class_count.astype(float), 1.0)
    y = warm_y.copy() if warm_y is not None else prob._uniform_y.copy()
    y[0] = 1.0
    M = prob.assemble(y)
    Z = M.copy()
    U = np.zeros_like(M)
    it = 0
    r_prim = d_res = np.inf
    for it in range(1, max_iter + 1):
        W = Z - U
        y_new = prob.class_average(W) + prob.c / (rho * cnt)
        y_new[0] = 1.0
        M = prob.assemble(y_new)
        V = M + U
        V = (V + V.T) / 2
        lam, Q = np.linalg.eigh(V)
        Z_new = (Q * np.maximum(lam, 0.0)) @ Q.T
        U = U + M - Z_new
        r_prim = float(np.linalg.norm(M - Z_new) / max(1.0, np.linalg.norm(M)))
        d_res = float(np.linalg.norm(Z_new - Z) * rho / max(1.0, np.linalg.norm(U) * rho))
        Z = Z_new
        y = y_new
        if verbose and it % 25 == 0:
            print(f"  admm it={it} obj={float(prob.c @ y):.6f} r={r_prim:.2e} s={d_res:.2e}")
        if r_prim < tol and d_res < tol:
            break
        if it % 50 == 0:  # deterministic residual balancing
            if r_prim > 10 * d_res and rho < 1e4:
                rho *= 2.0
                U /= 2.0
            elif d_res > 10 * r_prim and rho > 1e-4:
                rho /= 2.0
                U *= 2.0
    y = prob.class_average(Z)          # PSD side, projected to the structure
    y = repair_psd(prob, y)
    Mfin = prob.assemble(y)
    min_eig = float(np.linalg.eigvalsh(Mfin).min())
    return SDPResult(y=y, objective=float(prob.c @ y), gap=float("nan"),
                     primal_residual=r_prim, iterations=it, method="admm",
                     status="budget" if it == max_iter else "tol", min_eig=min_eig)


def repair_psd(prob: MomentSDP, y: np.ndarray, slack: float = 1e-10) -> np.ndarray:
    """Mix y toward the uniform moments until M(y) is PSD.

    min-eig is concave, so mixing with the strictly PD uniform moment matrix
    by theta = deficit / (deficit + lam_unif) guarantees PSD-ness.
    """
    M = prob.assemble(y)
    lam = float(np.linalg.eigvalsh(M).min())
    if lam >= 0.0:
        return y
    yu = prob._uniform_y
    lam_u = float(np.linalg.eigvalsh(prob.assemble(yu)).min())
    theta = (-lam + slack) / (-lam + lam_u)
    out = (1 - theta) * y + theta * yu
    out[0] = 1.0
    return out

"""Constrained linear solves by an augmented-Lagrangian iteration.

Solves ``K c + R^T lam = L``, ``R c = G`` through the sequence

    [ K   R^T  ] [c_{l+1}  ]   [ L                  ]
    [ R  -mu M ] [lam_{l+1}] = [ G - mu M lam_l     ]

The block matrix does not change between outer iterations, so it is factored
once. Redundant (consistent) constraint rows are harmless: the ``-mu M`` block
keeps the system nonsingular whenever ``K`` is coercive on ``ker R``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)


class SaddleSolveError(RuntimeError):
    """The block system could not be factored."""


@dataclass
class ALParams:
    mu: float = 1e-5
    M_choice: str = "identity"
    tol_constraint: float = 1e-12
    tol_stall: float = 1e-14
    max_outer: int = 200
    lambda0: np.ndarray | None = None

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.tol_constraint <= 0 or self.tol_stall <= 0:
            raise ValueError("tolerances must be positive")
        if self.M_choice not in ("identity", "row_mass"):
            raise ValueError(f"unknown M_choice {self.M_choice!r}")


@dataclass
class SaddleStats:
    iterations: int = 0
    residuals: list = field(default_factory=list)
    converged: bool = False


def _multiplier_metric(R: sp.csr_matrix, choice: str) -> sp.dia_matrix:
    m = R.shape[0]
    if choice == "identity":
        return sp.identity(m, format="csr")
    # lumped constraint-space mass: squared row norms
    d = np.asarray(R.multiply(R).sum(axis=1)).ravel()
    d[d == 0] = 1.0
    return sp.diags(d, format="csr")


class ConstrainedSolver:
    """Factor the block matrix once; solve for any ``(L, G)`` pair."""

    def __init__(self, K, R, params: ALParams | None = None):
        self.params = params or ALParams()
        self.K = sp.csr_matrix(K)
        N = self.K.shape[0]
        if self.K.shape != (N, N):
            raise ValueError("K must be square")
        self.R = sp.csr_matrix(R) if R is not None else sp.csr_matrix((0, N))
        if self.R.shape[1] != N:
            raise ValueError("R and K have inconsistent column counts")
        self.N, self.m = N, self.R.shape[0]
        try:
            if self.m == 0:
                self._lu = spla.splu(self.K.tocsc())
            else:
                self.M = _multiplier_metric(self.R, self.params.M_choice)
                block = sp.bmat([[self.K, self.R.T], [self.R, -self.params.mu * self.M]], format="csc")
                self._lu = spla.splu(block)
        except RuntimeError as exc:
            raise SaddleSolveError(f"factorization failed: {exc}") from exc

    def solve(self, L, G=None):
        """Returns ``(c, lam, stats)``; ``stats.converged`` is False when the
        iteration cap is reached (the last iterate is returned)."""
        params, N, m = self.params, self.N, self.m
        L = np.asarray(L, dtype=float)
        G = np.zeros(m) if G is None else np.asarray(G, dtype=float)
        if L.shape != (N,) or G.shape != (m,):
            raise ValueError("inconsistent saddle-problem dimensions")
        stats = SaddleStats()
        if m == 0:
            c = self._lu.solve(L)
            if not np.all(np.isfinite(c)):
                raise SaddleSolveError("singular stiffness matrix")
            stats.iterations, stats.converged = 1, True
            stats.residuals.append(0.0)
            return c, np.zeros(0), stats

        mu, M, R = params.mu, self.M, self.R
        lam = np.zeros(m) if params.lambda0 is None else np.asarray(params.lambda0, dtype=float).copy()
        target = params.tol_constraint * (1.0 + np.linalg.norm(G))
        c = np.zeros(N)
        prev = np.inf
        for it in range(1, params.max_outer + 1):
            sol = self._lu.solve(np.concatenate([L, G - mu * (M @ lam)]))
            if not np.all(np.isfinite(sol)):
                raise SaddleSolveError("singular block system")
            c_new, lam = sol[:N], sol[N:]
            res = float(np.linalg.norm(R @ c_new - G))
            stats.residuals.append(res)
            change = float(np.linalg.norm(c_new - c)) / (1.0 + float(np.linalg.norm(c_new)))
            c = c_new
            stats.iterations = it
            if res <= target:
                stats.converged = True
                break
            if it > 1 and change < params.tol_stall and res >= prev:
                log.debug("augmented Lagrangian stalled at residual %.3e", res)
                break
            prev = res
        if not stats.converged and stats.iterations == params.max_outer:
            log.warning(
                "augmented Lagrangian: constraint residual %.3e after %d iterations",
                stats.residuals[-1],
                stats.iterations,
            )
        return c, lam, stats


def solve_constrained(K, L, R, G, params: ALParams | None = None):
    """Solve ``K c + R^T lam = L``, ``R c = G``; returns ``(c, lam, stats)``."""
    return ConstrainedSolver(K, R, params).solve(L, G)

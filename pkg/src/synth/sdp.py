"""
Margin-maximizing LMI solver.

Finds parameters w and the largest t such that every block
F0 + sum_j w_j F_j - t I stays positive definite, by a log-det barrier
method with damped Newton steps.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from src.synth.numeric import NumericSolution, SolverStatus

logger = logging.getLogger(__name__)


@dataclass
class LMIBlock:
    """F0 + sum_j w_j F[j]; constant is (n, n), coefficients is (m, n, n)"""

    constant: np.ndarray
    coefficients: np.ndarray
    name: str = ""

    @property
    def size(self) -> int:
        return self.constant.shape[0]

    def value(self, w: np.ndarray) -> np.ndarray:
        if self.coefficients.shape[0] == 0:
            return self.constant.copy()
        return self.constant + np.tensordot(w, self.coefficients, axes=(0, 0))


def _chol_ok(matrix: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(matrix)
        return True
    except np.linalg.LinAlgError:
        return False


def _barrier(blocks: List[LMIBlock], w: np.ndarray, t: float) -> Optional[float]:
    total = 0.0
    for block in blocks:
        g = block.value(w) - t * np.eye(block.size)
        try:
            chol = np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            return None
        total -= 2.0 * np.sum(np.log(np.diag(chol)))
    return total


def minimum_eigenvalue(blocks: List[LMIBlock], w: np.ndarray) -> float:
    return min(float(np.linalg.eigvalsh(b.value(w))[0]) for b in blocks)


def maximize_margin(
    blocks: List[LMIBlock],
    n_params: int,
    mu_start: float = 1.0,
    mu_stop: float = 1e-10,
    mu_shrink: float = 0.2,
    max_newton: int = 60,
    margin_cap: Optional[float] = None,
) -> NumericSolution:
    """Maximize t subject to block(w) - t I > 0 for all blocks"""
    if not blocks:
        return NumericSolution(np.zeros(n_params), float("inf"), SolverStatus.OPTIMAL)

    w = np.zeros(n_params)
    t = minimum_eigenvalue(blocks, w) - 1.0
    mu = mu_start
    iterations = 0
    dim = n_params + 1

    def objective(w_, t_, mu_):
        b = _barrier(blocks, w_, t_)
        return None if b is None else -t_ + mu_ * b

    while mu >= mu_stop:
        for _ in range(max_newton):
            iterations += 1
            grad = np.zeros(dim)
            hess = np.zeros((dim, dim))
            grad[-1] = -1.0
            for block in blocks:
                n = block.size
                g = block.value(w) - t * np.eye(n)
                try:
                    ginv = np.linalg.inv(g)
                except np.linalg.LinAlgError:
                    return NumericSolution(w, t, SolverStatus.NUMERICAL_ERROR, iterations)
                derivs = np.concatenate([block.coefficients, -np.eye(n)[None, :, :]], axis=0)
                ms = ginv[None, :, :] @ derivs
                grad -= mu * np.trace(ms, axis1=1, axis2=2)
                hess += mu * np.einsum("iab,jba->ij", ms, ms)

            scale = max(1.0, float(np.trace(hess)) / dim)
            try:
                step = np.linalg.solve(hess + 1e-12 * scale * np.eye(dim), -grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(hess, -grad, rcond=None)[0]
            decrement = float(-grad @ step)
            if decrement < 1e-10:
                break

            current = objective(w, t, mu)
            alpha = 1.0
            accepted = False
            while alpha > 1e-14:
                w_new = w + alpha * step[:-1]
                t_new = t + alpha * step[-1]
                value = objective(w_new, t_new, mu)
                if value is not None and value <= current - 1e-4 * alpha * decrement:
                    w, t = w_new, t_new
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                break

        if margin_cap is not None and t >= margin_cap:
            break
        mu *= mu_shrink

    margin = minimum_eigenvalue(blocks, w)
    status = SolverStatus.OPTIMAL if margin > 0 else SolverStatus.INFEASIBLE
    logger.debug(
        "maximize_margin: %d params, %d blocks, margin %.3e after %d steps", n_params, len(blocks), margin, iterations
    )
    return NumericSolution(w, margin, status, iterations)

"""Common-descent subproblem: -min over the unit ball of the worst directional
derivative across objectives.

The Euclidean dual is the minimum-norm point in the convex hull of the
gradients, solved here by Frank-Wolfe with away steps and exact line search.
A sampling-based evaluator and a q=2 closed form serve as independent checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NonFiniteGradientError(ValueError):
    """A gradient passed to the subproblem contains NaN/Inf."""


@dataclass(frozen=True)
class MarginalSolution:
    """Criticality value ``omega``, descent ``direction`` (zero at critical
    points), dual simplex ``weights`` and the certified duality gap
    ``residual``."""

    omega: float
    direction: np.ndarray
    weights: np.ndarray
    residual: float

    @property
    def converged(self) -> bool:
        return self.residual <= 1e-8 * max(1.0, self.omega)


def _check_gradients(gradients) -> np.ndarray:
    G = np.atleast_2d(np.asarray(gradients, dtype=float))
    if not np.all(np.isfinite(G)):
        raise NonFiniteGradientError("gradient matrix contains NaN/Inf")
    return G


def solve_marginal(gradients, tolerance: float = 1e-10,
                   max_iters: int | None = None) -> MarginalSolution:
    """Solve -min_{||d||<=1} max_i <g_i, d> via the dual min-norm-point problem.

    Returns omega together with an optimal unit-ball direction and dual
    simplex weights. ``residual`` certifies the remaining duality gap; when
    the iteration cap is hit first, the best-effort solution is returned with
    residual > tolerance rather than raising.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    G = _check_gradients(gradients)
    q, n = G.shape

    if q == 1:
        omega = float(np.linalg.norm(G[0]))
        direction = -G[0] / omega if omega > tolerance else np.zeros(n)
        return MarginalSolution(omega, direction, np.ones(1), 0.0)

    M = G @ G.T
    lam = np.zeros(q)
    lam[int(np.argmin(np.diag(M)))] = 1.0
    cap = max_iters if max_iters is not None else 10 * q * n + 1000
    # Below this the simplex gap is indistinguishable from rounding noise in
    # M @ lam, so further iterations cannot certify a smaller residual.
    gap_floor = 64.0 * np.finfo(float).eps * max(1.0, float(np.abs(M).max()))

    grad = M @ lam
    residual = np.inf
    for _ in range(cap):
        grad = M @ lam
        sq = float(lam @ grad)
        ub = np.sqrt(max(sq, 0.0))
        lb = float(np.min(grad)) / ub if ub > 0 else 0.0
        residual = max(ub - max(lb, 0.0), 0.0)
        if residual <= tolerance or ub <= tolerance:
            break

        s = int(np.argmin(grad))
        support = np.flatnonzero(lam > 0)
        a = support[int(np.argmax(grad[support]))]
        gap_fw = sq - grad[s]
        gap_aw = grad[a] - sq
        if max(gap_fw, gap_aw) <= gap_floor:
            break
        if gap_fw >= gap_aw:
            dlam = -lam.copy()
            dlam[s] += 1.0
            t_max = 1.0
        else:
            dlam = lam.copy()
            dlam[a] -= 1.0
            t_max = lam[a] / (1.0 - lam[a]) if lam[a] < 1.0 else 0.0
        dMd = float(dlam @ M @ dlam)
        dMl = float(dlam @ grad)
        if dMd <= 0:
            t = t_max
        else:
            t = min(t_max, max(0.0, -dMl / dMd))
        if t <= 0:
            break
        lam = lam + t * dlam
        np.clip(lam, 0.0, None, out=lam)
        lam /= lam.sum()

    y = G.T @ lam
    omega = float(np.linalg.norm(y))
    residual = float(min(residual, omega))
    if omega > residual and omega > tolerance:
        direction = -y / omega
    else:
        direction = np.zeros(n)
    return MarginalSolution(omega, direction, lam, residual)


def solve_marginal_q2_closed_form(g1, g2) -> MarginalSolution:
    """Exact two-objective solution.

    The dual minimizer of ||lam*g1 + (1-lam)*g2|| over [0, 1] is
    lam* = clamp(<g2, g2-g1> / ||g1-g2||^2, 0, 1); identical gradients use the
    lam* = 0 convention (weights (0, 1)).
    """
    g1 = _check_gradients(g1)[0]
    g2 = _check_gradients(g2)[0]
    diff = g1 - g2
    dd = float(diff @ diff)
    lam = float(np.clip(g2 @ (g2 - g1) / dd, 0.0, 1.0)) if dd > 0 else 0.0
    y = lam * g1 + (1.0 - lam) * g2
    omega = float(np.linalg.norm(y))
    direction = -y / omega if omega > 0 else np.zeros_like(y)
    return MarginalSolution(omega, direction, np.array([lam, 1.0 - lam]), 0.0)


def brute_force_marginal(gradients, num_directions: int,
                         seed: int = 1234, refine: bool = True) -> float:
    """Sampling-based lower bound on omega, used only as a test oracle.

    Evaluates -max_i <g_i, d> over ``num_directions`` random unit directions
    augmented with the normalized (negated) gradients and random convex
    combinations, then optionally hill-climbs by shrinking-neighborhood
    sampling (the objective is concave on the ball, so local refinement is
    global). Always >= true omega minus the sampling resolution.
    """
    if num_directions < 1000:
        raise ValueError("num_directions must be >= 1000")
    G = _check_gradients(gradients)
    q, n = G.shape
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))

    def value(D: np.ndarray) -> np.ndarray:
        return -(D @ G.T).max(axis=1)

    dirs = rng.standard_normal((num_directions, n))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    dirs /= norms

    extras = []
    for g in G:
        ng = np.linalg.norm(g)
        if ng > 0:
            extras.extend([g / ng, -g / ng])
    combos = rng.dirichlet(np.ones(q), size=min(num_directions, 4096)) @ G
    cn = np.linalg.norm(combos, axis=1, keepdims=True)
    combos = -combos[cn[:, 0] > 0] / cn[cn[:, 0] > 0]
    candidates = np.vstack([dirs] + ([np.array(extras)] if extras else []) +
                           ([combos] if combos.size else []))

    vals = value(candidates)
    best = float(vals.max())
    if best <= 0.0:
        return 0.0
    if not refine:
        return best

    # Shrinking-neighborhood polish around the incumbent; stays pure sampling.
    incumbent = candidates[int(np.argmax(vals))]
    radius = 0.5
    for _ in range(40):
        local = incumbent + radius * rng.standard_normal((128, n))
        nl = np.linalg.norm(local, axis=1, keepdims=True)
        np.maximum(nl, 1.0, out=nl)
        local /= nl
        lv = value(local)
        j = int(np.argmax(lv))
        if lv[j] > best:
            best = float(lv[j])
            incumbent = local[j]
        radius *= 0.65
    return max(best, 0.0)

"""Discounted MDP solving for deterministic transition systems.

Transitions are dense next-state index arrays (one successor per
state/action pair), so Bellman backups reduce to a gather, an add, and a
row max. An LP text exporter provides the equivalent linear program for
cross-checking against external solvers.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class SolverError(RuntimeError):
    """Raised when value iteration fails to converge within its budget."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


def default_eps(rewards: np.ndarray) -> float:
    """Convergence threshold scaled to the reward magnitude."""
    return 1e-6 * max(1.0, float(np.max(np.abs(rewards))))


@dataclass(frozen=True)
class SolveResult:
    """Converged value function with its iteration record."""

    values: np.ndarray
    iterations: int
    residual: float
    residuals: tuple[float, ...]


def _check_shapes(next_idx: np.ndarray, rewards: np.ndarray) -> None:
    if next_idx.shape != rewards.shape or next_idx.ndim != 2:
        raise ValueError(
            f"next_idx {next_idx.shape} and rewards {rewards.shape} must be equal 2-D shapes"
        )
    if not np.all(np.isfinite(rewards)):
        raise ValueError("rewards must be finite")


def value_iteration(
    next_idx: np.ndarray,
    rewards: np.ndarray,
    gamma: float,
    eps: float | None = None,
    max_iter: int = 10_000,
) -> SolveResult:
    """Iterate synchronous Bellman backups until the sup-norm step is <= eps.

    The returned values then carry a Bellman residual of at most gamma*eps
    (contraction), which is within the advertised eps. ``eps`` defaults to
    1e-6 scaled by max(1, max|R|).
    """
    _check_shapes(next_idx, rewards)
    if not 0 <= gamma < 1:
        raise ValueError(f"gamma must be in [0, 1), got {gamma}")
    if eps is None:
        eps = default_eps(rewards)
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")

    values = np.zeros(next_idx.shape[0])
    history = []
    for iteration in range(1, max_iter + 1):
        updated = np.max(rewards + gamma * values[next_idx], axis=1)
        residual = float(np.max(np.abs(updated - values)))
        history.append(residual)
        values = updated
        if residual <= eps:
            return SolveResult(
                values=values,
                iterations=iteration,
                residual=residual,
                residuals=tuple(history),
            )
    raise SolverError(
        f"value iteration did not reach eps={eps:g} within {max_iter} iterations "
        f"(last residual {history[-1]:g})",
        residual=history[-1],
    )


def extract_policy(
    values: np.ndarray,
    next_idx: np.ndarray,
    rewards: np.ndarray,
    gamma: float,
) -> np.ndarray:
    """Greedy action index per state; ties go to the lowest action index.

    With the canonical action ordering this is the documented tie rule:
    no_act, then harvest, then plant in catalog order.
    """
    _check_shapes(next_idx, rewards)
    q = rewards + gamma * values[next_idx]
    return np.argmax(q, axis=1)


def export_lp(
    next_idx: np.ndarray,
    rewards: np.ndarray,
    gamma: float,
    path: str | Path,
) -> Path:
    """Write the MDP's linear program in LP text format.

    minimize sum_s V(s) subject to V(s) - gamma*V(next(s,a)) >= R(s,a) for
    every state/action pair; all variables free. The optimum of this program
    is the value iteration fixed point.
    """
    _check_shapes(next_idx, rewards)
    n_states, n_actions = next_idx.shape
    path = Path(path)
    lines = ["\\ discounted deterministic MDP, Bellman inequalities", "Minimize", " obj: "]
    terms = [f"v{i}" if i == 0 else f"+ v{i}" for i in range(n_states)]
    # keep objective lines short enough for strict LP readers
    for start in range(0, n_states, 12):
        lines.append("   " + " ".join(terms[start : start + 12]))
    lines.append("Subject To")
    for s in range(n_states):
        for a in range(n_actions):
            nxt = int(next_idx[s, a])
            r = float(rewards[s, a])
            if nxt == s:
                body = f"{1.0 - gamma:.17g} v{s}"
            else:
                body = f"v{s} - {gamma:.17g} v{nxt}"
            lines.append(f" c{s}_{a}: {body} >= {r:.17g}")
    lines.append("Bounds")
    lines.extend(f" v{i} free" for i in range(n_states))
    lines.append("End")
    path.write_text("\n".join(lines) + "\n")
    return path

"""Value iteration on a sample model (the convergence reference for learners)."""
from __future__ import annotations

import numpy as np
from scipy import sparse

from .envs.model import SELF_LOOP, ModelHole, SampleModel
from .learning import QTable


def transition_matrices(model: SampleModel, hole_policy: str = SELF_LOOP):
    """Sparse P of shape (S*A, S) and expected rewards R of length S*A; row = s*A + a."""
    S, A = model.n_states, model.n_actions
    rows, cols, probs = [], [], []
    rew = np.zeros(S * A)
    for s in range(S):
        for a in range(A):
            i = s * A + a
            if (s, a) not in model:
                if hole_policy != SELF_LOOP:
                    raise ModelHole(f"model has no transitions for state {s}, action {a}")
                rows.append(i)
                cols.append(s)
                probs.append(1.0)
                continue
            succ = model.successors(s, a)
            rows.extend([i] * len(succ.states))
            cols.extend(succ.states.tolist())
            probs.extend(succ.probs.tolist())
            rew[i] = float(succ.probs @ succ.mean_rewards)
    P = sparse.csr_matrix((probs, (rows, cols)), shape=(S * A, S))
    return P, rew


def bellman(q: np.ndarray, P, rew: np.ndarray, gamma: float) -> np.ndarray:
    return (rew + gamma * (P @ q.max(axis=1))).reshape(q.shape)


def value_iteration(model: SampleModel, gamma: float, tol: float = 1e-10, max_iter: int = 1_000_000,
                    hole_policy: str = SELF_LOOP) -> tuple[QTable, float]:
    """Iterate until ``max |Q - B(Q)| < tol``; returns (Q*, final residual)."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma = {gamma} outside [0, 1)")
    P, rew = transition_matrices(model, hole_policy)
    q = np.zeros((model.n_states, model.n_actions))
    for _ in range(max_iter):
        nxt = bellman(q, P, rew, gamma)
        residual = float(np.abs(nxt - q).max())
        q = nxt
        if residual < tol:
            break
    else:
        raise RuntimeError(f"value iteration did not reach residual {tol} in {max_iter} sweeps")
    residual = float(np.abs(bellman(q, P, rew, gamma) - q).max())
    return QTable(model.n_states, model.n_actions, q), residual

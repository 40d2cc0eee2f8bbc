"""Exact solver for discrete-mode auction sequences.

States are (stage, holdings, integer endowment).  The solver sweeps stages
backward from the terminal payoff, enumerating only holdings that are
reachable, i.e. subsets of the resources already auctioned.  A state whose
holdings can no longer be improved by any affordable future bundle is settled:
its value is the terminal payoff of standing pat and its optimal bid is 0, so
it is short-circuited and excluded from the state count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Union

import numpy as np

from .core import (
    BidDistribution,
    BundleValueTable,
    MODE_DISCRETE,
    ProblemSpec,
    ensure_valid,
    holdings_mask,
)

Policy = Callable[[int, int, int], int]


@dataclass
class DiscreteSolution:
    """Value and bid tables per (stage, holdings mask, endowment).

    stage_values[t][mask] is a vector over endowments 0..e for t in 0..n;
    stage_bids covers t in 0..n-1.  settled holds the (t, mask) pairs that
    were short-circuited; state_count counts the remaining (t, mask, d)
    triples with t < n.
    """

    n: int
    endowment: int
    stage_values: list[dict[int, np.ndarray]]
    stage_bids: list[dict[int, np.ndarray]]
    settled: set[tuple[int, int]]
    state_count: int

    def value(self, t: int, held: Union[int, Iterable[int]], d: int) -> float:
        return float(self.stage_values[t][holdings_mask(held)][d])

    def bid(self, t: int, held: Union[int, Iterable[int]], d: int) -> int:
        return int(self.stage_bids[t][holdings_mask(held)][d])

    def policy(self) -> Policy:
        def bidder(t: int, mask: int, d: int) -> int:
            return int(self.stage_bids[t][mask][d])

        return bidder


def _future_mask(t: int, n: int) -> int:
    """Bitmask of the resources still to be auctioned after stage t."""
    return ((1 << n) - 1) & ~((1 << t) - 1)


def is_settled(held: Union[int, Iterable[int]], t: int, spec: ProblemSpec) -> bool:
    """True when no still-completable bundle beats the current bundle value."""
    mask = holdings_mask(held)
    table = BundleValueTable(spec.bundles)
    return _is_settled_mask(mask, t, spec.n, spec.bundles, table)


def _is_settled_mask(mask, t, n, bundles, table) -> bool:
    reachable = mask | _future_mask(t, n)
    current = table.value(mask)
    for b in bundles:
        if b.value > current and b.mask & reachable == b.mask:
            return False
    return True


def backup_state_discrete(
    held: Union[int, Iterable[int]],
    d: int,
    t: int,
    next_values: Mapping[int, np.ndarray],
    dist: BidDistribution,
) -> tuple[float, int]:
    """One-state optimal backup: value and the smallest maximizing bid.

    next_values maps stage-(t+1) holdings masks to value vectors over
    endowments.  Bids z run over 0..d; winning costs z and adds resource
    t + 1, losing keeps the state.
    """
    mask = holdings_mask(held)
    if d < 0:
        raise ValueError("endowment must be nonnegative")
    win_next = np.asarray(next_values[mask | (1 << t)], dtype=float)
    lose_next = np.asarray(next_values[mask], dtype=float)
    w = np.array([dist.win_probability(z) for z in range(d + 1)])
    q = w * win_next[d::-1] + (1.0 - w) * lose_next[d]
    z = int(np.argmax(q))
    return float(q[z]), z


def solve_discrete(spec: ProblemSpec, early_exit: bool = False) -> DiscreteSolution:
    """Optimal values and bids for every reachable state of a discrete spec.

    With early_exit the per-state bid scan halts at the first decrease of the
    bid objective, a shortcut that is only exact when the objective is
    unimodal in the bid; it is off by default.
    """
    ensure_valid(spec)
    if spec.mode != MODE_DISCRETE:
        raise ValueError("solve_discrete needs a discrete-mode spec")
    n = spec.n
    e = int(round(spec.endowment))
    table = BundleValueTable(spec.bundles)
    f_vals = spec.residual.values(np.arange(e + 1, dtype=float))

    stage_values: list[dict[int, np.ndarray]] = [dict() for _ in range(n + 1)]
    stage_bids: list[dict[int, np.ndarray]] = [dict() for _ in range(n)]
    settled: set[tuple[int, int]] = set()
    state_count = 0

    for mask in range(1 << n):
        stage_values[n][mask] = table.value(mask) + f_vals

    # Lower-triangular index helpers shared by every state: IDX[d, z] = d - z
    # when z <= d, and TRI masks the infeasible bids out.
    zs = np.arange(e + 1)
    tri = zs[None, :] <= zs[:, None]
    idx = np.where(tri, zs[:, None] - zs[None, :], 0)

    for t in range(n - 1, -1, -1):
        dist = spec.distributions[t]
        w = np.array([dist.win_probability(z) for z in range(e + 1)])
        nxt = stage_values[t + 1]
        for mask in range(1 << t):
            if _is_settled_mask(mask, t, n, spec.bundles, table):
                stage_values[t][mask] = table.value(mask) + f_vals
                stage_bids[t][mask] = np.zeros(e + 1, dtype=np.int64)
                settled.add((t, mask))
                continue
            win_next = nxt[mask | (1 << t)]
            lose_next = nxt[mask]
            if early_exit:
                values = np.empty(e + 1)
                bids = np.zeros(e + 1, dtype=np.int64)
                for d in range(e + 1):
                    best_q, best_z = -np.inf, 0
                    for z in range(d + 1):
                        q = w[z] * win_next[d - z] + (1.0 - w[z]) * lose_next[d]
                        if q > best_q:
                            best_q, best_z = q, z
                        elif q < best_q:
                            break
                    values[d], bids[d] = best_q, best_z
            else:
                q = w[None, :] * win_next[idx] + (1.0 - w[None, :]) * lose_next[:, None]
                q[~tri] = -np.inf
                bids = q.argmax(axis=1)
                values = q[zs, bids]
            stage_values[t][mask] = values
            stage_bids[t][mask] = bids.astype(np.int64)
            state_count += e + 1

    return DiscreteSolution(n, e, stage_values, stage_bids, settled, state_count)


def evaluate_policy_exact(
    spec: ProblemSpec, policy: Policy
) -> list[dict[int, np.ndarray]]:
    """Exact expected value of an arbitrary bid policy at every reachable state.

    policy(t, holdings_mask, d) must return an integer bid in 0..d.  Returns
    value tables shaped like DiscreteSolution.stage_values.
    """
    ensure_valid(spec)
    if spec.mode != MODE_DISCRETE:
        raise ValueError("evaluate_policy_exact needs a discrete-mode spec")
    n = spec.n
    e = int(round(spec.endowment))
    table = BundleValueTable(spec.bundles)
    f_vals = spec.residual.values(np.arange(e + 1, dtype=float))

    stage_values: list[dict[int, np.ndarray]] = [dict() for _ in range(n + 1)]
    for mask in range(1 << n):
        stage_values[n][mask] = table.value(mask) + f_vals

    for t in range(n - 1, -1, -1):
        dist = spec.distributions[t]
        w = np.array([dist.win_probability(z) for z in range(e + 1)])
        nxt = stage_values[t + 1]
        for mask in range(1 << t):
            win_next = nxt[mask | (1 << t)]
            lose_next = nxt[mask]
            values = np.empty(e + 1)
            for d in range(e + 1):
                z = policy(t, mask, d)
                if not 0 <= z <= d or int(z) != z:
                    raise ValueError(
                        f"policy bid {z!r} infeasible at stage {t}, mask {mask}, d {d}"
                    )
                z = int(z)
                values[d] = w[z] * win_next[d - z] + (1.0 - w[z]) * lose_next[d]
            stage_values[t][mask] = values

    return stage_values

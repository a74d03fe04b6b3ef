"""Multi-channel fusion ART primitives.

Norms are L1 (sum of elements) and ``x ^ w`` is the element-wise minimum
(fuzzy AND).  No complement coding is applied; callers present raw activity
vectors in [0, 1].
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_ALPHA = 0.001


class ContractError(ValueError):
    """An operation was called with arguments that break its contract."""


@dataclass
class ChannelParams:
    alpha: float = DEFAULT_ALPHA
    beta: float = 1.0
    gamma: float = 1.0
    rho: float = 1.0

    def __setattr__(self, name, value):
        object.__setattr__(self, name, float(value))
        # bounds hold after construction and after every later mutation
        if all(hasattr(self, f) for f in ("alpha", "beta", "gamma", "rho")):
            self.validate()

    def validate(self) -> None:
        if self.alpha < 0:
            raise ContractError(f"choice parameter alpha must be >= 0, got {self.alpha}")
        for name in ("beta", "gamma", "rho"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ContractError(f"{name} must lie in [0, 1], got {v}")


def _as_vector(v, what: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise ContractError(f"{what} must be one-dimensional")
    return arr


def _check_activity(x: np.ndarray, what: str) -> None:
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise ContractError(f"{what} has elements outside [0, 1]")


def _same_length(x: np.ndarray, w: np.ndarray, channel=None) -> None:
    if x.shape != w.shape:
        where = f" on channel {channel}" if channel is not None else ""
        raise ContractError(f"dimension mismatch{where}: input {x.shape[0]} vs weights {w.shape[0]}")


@dataclass
class CategoryNode:
    """One category in a fusion field, holding a weight vector per channel."""

    weights: list[np.ndarray]
    committed: bool = False

    @classmethod
    def uncommitted(cls, dims: Sequence[int]) -> "CategoryNode":
        return cls([np.ones(d) for d in dims], committed=False)


def choice_activation(inputs: Sequence, node: CategoryNode, params: Sequence[ChannelParams]) -> float:
    """Bottom-up activation ``sum_k gamma_k |x_k ^ w_k| / (alpha_k + |w_k|)``."""
    if not (len(inputs) == len(node.weights) == len(params)):
        raise ContractError(
            f"channel count mismatch: {len(inputs)} inputs, {len(node.weights)} weights, {len(params)} params"
        )
    total = 0.0
    for k, (x, w, p) in enumerate(zip(inputs, node.weights, params)):
        x = _as_vector(x, f"input {k}")
        _same_length(x, w, k)
        denom = p.alpha + w.sum()
        if p.gamma == 0.0 or denom == 0.0:
            # an all-zero template with alpha = 0 has no overlap to score
            continue
        total += p.gamma * np.minimum(x, w).sum() / denom
    return float(total)


def template_match(x, w, rho: float) -> tuple[float, bool]:
    """Top-down match ratio ``|x ^ w| / |x|`` and whether it meets ``rho``.

    A zero input places no constraint, so its match is 1.
    """
    x = _as_vector(x, "input")
    w = _as_vector(w, "weights")
    _same_length(x, w)
    norm = x.sum()
    m = 1.0 if norm == 0 else float(np.minimum(x, w).sum() / norm)
    return m, m >= rho


def template_learn(w, x, beta: float) -> np.ndarray:
    """Return ``(1 - beta) w + beta (x ^ w)``; ``w`` is left untouched."""
    if not 0.0 <= beta <= 1.0:
        raise ContractError(f"learning rate must lie in [0, 1], got {beta}")
    x = _as_vector(x, "input")
    w = _as_vector(w, "weights")
    _same_length(x, w)
    return (1.0 - beta) * w + beta * np.minimum(x, w)


def readout(node: CategoryNode, channel: int) -> np.ndarray:
    if not 0 <= channel < len(node.weights):
        raise ContractError(f"unknown channel {channel}; node has {len(node.weights)}")
    return node.weights[channel].copy()


@dataclass
class FusionField:
    """A category field fed by several input channels.

    Nodes are kept in creation order; that order breaks activation ties.
    """

    dims: list[int]
    params: list[ChannelParams]
    nodes: list[CategoryNode] = field(default_factory=list)

    def __post_init__(self):
        if len(self.dims) != len(self.params):
            raise ContractError("one ChannelParams per channel is required")

    def _check_inputs(self, inputs) -> list[np.ndarray]:
        if len(inputs) != len(self.dims):
            raise ContractError(f"expected {len(self.dims)} channels, got {len(inputs)}")
        xs = []
        for k, (x, d) in enumerate(zip(inputs, self.dims)):
            x = _as_vector(x, f"input {k}")
            if x.shape[0] != d:
                raise ContractError(f"dimension mismatch on channel {k}: input {x.shape[0]} vs field {d}")
            _check_activity(x, f"input {k}")
            xs.append(x)
        return xs

    def activations(self, inputs) -> np.ndarray:
        xs = self._check_inputs(inputs)
        return np.array([choice_activation(xs, n, self.params) for n in self.nodes])

    def resonant(self, node: CategoryNode, inputs) -> bool:
        return all(template_match(x, w, p.rho)[1] for x, w, p in zip(inputs, node.weights, self.params))

    def resonance_search(self, inputs) -> int | None:
        """Index of the first node, in descending activation order, that
        passes the vigilance test on every channel."""
        xs = self._check_inputs(inputs)
        if not self.nodes:
            return None
        act = self.activations(xs)
        for j in np.argsort(-act, kind="stable"):
            if self.resonant(self.nodes[j], xs):
                return int(j)
        return None

    def commit(self, inputs) -> int:
        """Recruit an uncommitted node and learn ``inputs`` into it."""
        xs = self._check_inputs(inputs)
        node = CategoryNode.uncommitted(self.dims)
        node.weights = [template_learn(w, x, p.beta) for w, x, p in zip(node.weights, xs, self.params)]
        node.committed = True
        self.nodes.append(node)
        return len(self.nodes) - 1

    def learn(self, inputs) -> int:
        """Resonance search followed by template learning, committing a new
        node when no existing one resonates."""
        xs = self._check_inputs(inputs)
        j = self.resonance_search(xs)
        if j is None:
            return self.commit(xs)
        node = self.nodes[j]
        node.weights = [template_learn(w, x, p.beta) for w, x, p in zip(node.weights, xs, self.params)]
        return j

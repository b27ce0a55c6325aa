"""Hyperparameter-space quadrature rules and weight sparsification.

Three rule kinds over a bounded box:

* ``sparse``: Smolyak combination of nested Clenshaw-Curtis rules
  (1, 3, 5, 9, ... points per level).  Weights are signed for level >= 2 in
  two or more dimensions and sum to the box volume.
* ``qmc``: Sobol low-discrepancy sequence with uniform weights 1/M.
* ``mc``: seeded uniform sampling with uniform weights 1/M.

Sparsification drops small-magnitude weights with a certified budget: for
positive normalized weights, keeping the smallest prefix with mass at least
1 - eps bounds the truncated-mixture cdf error by 2 eps everywhere; for
signed weights the dropped positive/negative masses (eps_plus, eps_minus)
bracket the quantile perturbation.
"""

import itertools
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.stats import qmc as _qmc

from .errors import EpsilonTooLarge, NotNormalized, ResourceLimit

DEFAULT_NODE_CAP = 100_000


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes (one hyperparameter vector per row) and signed weights."""

    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    box: np.ndarray

    @property
    def n_nodes(self):
        return self.nodes.shape[0]


@dataclass(frozen=True)
class SparsifiedRule:
    """Indices kept after dropping small weights, plus the error budget.

    ``kept_indices`` are original indices ordered by decreasing weight
    magnitude.  For positive normalized weights, ``c`` is the kept mass and
    ``eps`` the requested budget; ``eps_minus``/``eps_plus`` are the dropped
    negative/positive masses (zero and 1 - c respectively in that case).
    """

    kept_indices: np.ndarray
    c: float
    eps: Optional[float]
    eps_minus: float
    eps_plus: float

    @property
    def n_kept(self):
        return len(self.kept_indices)


@lru_cache(maxsize=None)
def _cc_rule_1d(level):
    """Nested Clenshaw-Curtis nodes/weights on [0, 1] at a given level.

    Level 1 is the midpoint rule; level l >= 2 has 2^(l-1) + 1 points.
    Nodes are built from sin so that coarse-level points reproduce exactly
    at finer levels (required for duplicate merging).
    """
    if level == 1:
        return np.array([0.5]), np.array([1.0])
    n = 2 ** (level - 1)
    j = np.arange(n + 1)
    nodes = 0.5 + 0.5 * np.sin(math.pi * (2.0 * j - n) / (2.0 * n))
    theta = j * (math.pi / n)
    k = np.arange(1, n // 2 + 1)
    b = np.where(k == n // 2, 1.0, 2.0)
    correction = np.cos(2.0 * np.outer(j, k) * (math.pi / n)) @ (b / (4.0 * k ** 2 - 1.0))
    c = np.where((j == 0) | (j == n), 1.0, 2.0)
    weights = (c / n) * (1.0 - correction)
    return nodes, weights / 2.0


def _compositions(total, parts):
    """All tuples of ``parts`` positive integers summing to ``total``."""
    for cuts in itertools.combinations(range(1, total), parts - 1):
        bounds = (0,) + cuts + (total,)
        yield tuple(bounds[i + 1] - bounds[i] for i in range(parts))


def _check_box(box, dim):
    box = np.asarray(box, dtype=float).reshape(dim, 2)
    if not np.all(np.isfinite(box)) or np.any(box[:, 1] <= box[:, 0]):
        raise ValueError(f"box must have finite lo < hi per dimension, got {box!r}")
    return box


def sparse_grid(dim, level, box, node_cap=DEFAULT_NODE_CAP):
    """Smolyak sparse grid of the given level, mapped affinely to the box.

    Deterministic for fixed (dim, level).  Raises ResourceLimit when the
    raw tensor-node count before merging would exceed ``node_cap``.
    """
    if dim < 1 or level < 1:
        raise ValueError("dim and level must be >= 1")
    box = _check_box(box, dim)

    sizes = {l: len(_cc_rule_1d(l)[0]) for l in range(1, level + 1)}
    raw = 0
    terms = []
    for q in range(max(0, level - dim), level):
        coeff = (-1.0) ** (level - 1 - q) * math.comb(dim - 1, dim + q - level)
        if dim == 1:
            levels_iter = [(q + 1,)]
        else:
            levels_iter = _compositions(dim + q, dim)
        for levels in levels_iter:
            raw += math.prod(sizes[l] for l in levels)
            if raw > node_cap:
                raise ResourceLimit(
                    f"sparse grid would enumerate more than {node_cap} tensor nodes")
            terms.append((coeff, levels))

    nodes = np.zeros((0, dim))
    weights = np.zeros(0)
    for coeff, levels in terms:
        pts, wts = zip(*(_cc_rule_1d(l) for l in levels))
        grid = np.array(list(itertools.product(*pts)))
        w = coeff * np.array([math.prod(ws) for ws in itertools.product(*wts)])
        nodes = np.vstack([nodes, grid])
        weights = np.concatenate([weights, w])

    # merge duplicated nested nodes (exact equality by construction)
    order = np.lexsort(nodes.T[::-1])
    nodes = nodes[order]
    weights = weights[order]
    keep = [0]
    for row in range(1, len(weights)):
        if np.array_equal(nodes[row], nodes[keep[-1]]):
            weights[keep[-1]] += weights[row]
        else:
            keep.append(row)
    nodes = nodes[keep]
    weights = weights[keep]

    span = box[:, 1] - box[:, 0]
    return QuadratureRule(
        nodes=box[:, 0] + nodes * span,
        weights=weights * float(np.prod(span)),
        kind="sparse",
        box=box,
    )


def qmc_rule(dim, n_nodes, box):
    """Sobol sequence over the box with uniform weights 1/M (deterministic)."""
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    box = _check_box(box, dim)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        sample = _qmc.Sobol(d=dim, scramble=False).random(n_nodes)
    nodes = box[:, 0] + sample * (box[:, 1] - box[:, 0])
    return QuadratureRule(
        nodes=nodes,
        weights=np.full(n_nodes, 1.0 / n_nodes),
        kind="qmc",
        box=box,
    )


def mc_rule(dim, n_nodes, box, seed):
    """Uniform Monte Carlo nodes, reproducible from the seed."""
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    box = _check_box(box, dim)
    rng = np.random.default_rng(seed)
    nodes = rng.uniform(box[:, 0], box[:, 1], size=(n_nodes, dim))
    return QuadratureRule(
        nodes=nodes,
        weights=np.full(n_nodes, 1.0 / n_nodes),
        kind="mc",
        box=box,
    )


def sparsify(weights, eps=None, keep=None, threshold=None):
    """Drop small-magnitude weights with a certified error budget.

    Positive normalized weights: pass ``eps`` in (0, 1); keeps the smallest
    magnitude-ordered prefix with mass >= 1 - eps (minimal k).  Signed
    weights: pass ``keep`` (a count) or ``threshold`` (a magnitude floor);
    the dropped positive/negative sums become the quantile budget.
    """
    weights = np.asarray(weights, dtype=float)
    m = len(weights)
    order = np.argsort(-np.abs(weights), kind="stable")

    if eps is not None:
        if not 0.0 <= eps < 1.0:
            raise EpsilonTooLarge(f"eps must lie in [0, 1), got {eps!r}")
        if np.any(weights < 0):
            raise NotNormalized("positive-weight sparsification got negative weights")
        if abs(float(weights.sum()) - 1.0) > 1e-10:
            raise NotNormalized(
                f"weights sum to {float(weights.sum())!r}, expected 1")
        cum = np.cumsum(weights[order])
        k = int(np.searchsorted(cum, 1.0 - eps)) + 1
        k = min(k, m)
        kept = order[:k]
        c = float(cum[k - 1])
        return SparsifiedRule(kept_indices=kept, c=c, eps=float(eps),
                              eps_minus=0.0, eps_plus=1.0 - c)

    if keep is None and threshold is None:
        raise ValueError("signed sparsification needs a cut count or threshold")
    if keep is None:
        keep = int(np.sum(np.abs(weights) >= threshold))
    keep = max(1, min(int(keep), m))
    kept = order[:keep]
    dropped = weights[order[keep:]]
    eps_minus = float(dropped[dropped < 0].sum())
    eps_plus = float(dropped[dropped > 0].sum())
    return SparsifiedRule(kept_indices=kept, c=float(weights[kept].sum()),
                          eps=None, eps_minus=eps_minus, eps_plus=eps_plus)


def rule_to_csv(rule, path):
    """Dump node coordinates and weights, one row per node."""
    dim = rule.nodes.shape[1]
    header = ",".join([f"x{i + 1}" for i in range(dim)] + ["weight"])
    data = np.column_stack([rule.nodes, rule.weights])
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")

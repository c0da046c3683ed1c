"""Random model/distribution generators shared across the test suite."""

from __future__ import annotations

import numpy as np

from ttshap.automata import Bnn, BnnLayer, CnfFormula
from ttshap.compilers import DecisionTree, TreeLeaf, TreeNode
from ttshap.engine import distribution_mass
from ttshap.train import TensorTrain


def random_model_tt(rng, dims, bond=3, n_out=1):
    cores = []
    left = 1
    for t, d in enumerate(dims):
        right = n_out if t == len(dims) - 1 else int(bond)
        cores.append(rng.uniform(-1.0, 1.0, size=(left, d, right)))
        left = right
    return TensorTrain(cores)


def random_dist_tt(rng, dims, bond=2):
    """Nonnegative random train normalized to unit mass."""
    cores = []
    left = 1
    for t, d in enumerate(dims):
        right = 1 if t == len(dims) - 1 else int(bond)
        cores.append(rng.uniform(0.05, 1.0, size=(left, d, right)))
        left = right
    tt = TensorTrain(cores)
    mass = distribution_mass(tt)
    arrays = [c.array.copy() for c in tt.cores]
    arrays[0] /= mass
    return TensorTrain(arrays)


def random_instance(rng, dims):
    return tuple(int(rng.integers(1, d + 1)) for d in dims)


def random_tree(rng, dims, depth=3, n_out=1, values=None):
    """Full-coverage random tree; no feature repeats along a path."""

    def grow(available, level):
        if not available or level >= depth or rng.random() < 0.25 * level:
            if values is not None:
                return TreeLeaf(np.asarray([rng.choice(values)], dtype=float).repeat(n_out))
            return TreeLeaf(rng.uniform(-1.0, 1.0, size=n_out))
        feature = int(rng.choice(sorted(available)))
        children = {
            v: grow(available - {feature}, level + 1)
            for v in range(1, dims[feature - 1] + 1)
        }
        return TreeNode(feature=feature, children=children)

    root = grow(set(range(1, len(dims) + 1)), 0)
    if isinstance(root, TreeLeaf):  # force at least one split
        feature = int(rng.integers(1, len(dims) + 1))
        children = {
            v: grow(set(range(1, len(dims) + 1)) - {feature}, 1)
            for v in range(1, dims[feature - 1] + 1)
        }
        root = TreeNode(feature=feature, children=children)
    return DecisionTree(dims=tuple(dims), root=root, n_out=n_out)


def random_bnn(rng, n_inputs, first_width, depth, max_threshold=3):
    layers = []
    prev = n_inputs
    for level in range(depth):
        width = first_width if level == 0 else int(rng.integers(1, 4))
        weights = rng.choice([-1, 1], size=(width, prev))
        cap = min(max_threshold, prev + 1)
        reified = rng.integers(0, cap + 1, size=width)
        layers.append(BnnLayer(weights=weights, reified=reified))
        prev = width
    return Bnn(layers=layers, n_inputs=n_inputs)


def random_cnf(rng, n, m, arity=3):
    clauses = []
    for _ in range(m):
        size = min(int(rng.integers(1, arity + 1)), n)
        variables = rng.choice(np.arange(1, n + 1), size=size, replace=False)
        clauses.append([int(v) * (1 if rng.random() < 0.5 else -1) for v in variables])
    return CnfFormula(n=n, clauses=clauses)


def brute_force_count(cnf: CnfFormula) -> int:
    import itertools

    return sum(
        cnf.evaluate(bits) for bits in itertools.product((0, 1), repeat=cnf.n)
    )


def max_rel_diff(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)))
    return float(np.max(np.abs(a - b), initial=0.0)) / scale

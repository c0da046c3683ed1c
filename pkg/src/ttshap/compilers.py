"""Compilers that reduce classical models to equivalent tensor trains.

* Decision trees flatten to a disjoint DNF (one clause per root-to-leaf
  path), which becomes a train whose bond indexes clauses.  Clause cores
  are strictly diagonal in the clause bond; the left boundary sums over
  clauses and the right boundary applies the per-clause output vectors.
* Tree ensembles use linearity: the attribution of a weighted sum of
  trees is the weighted sum of per-tree attributions.
* Linear RNNs become stationary trains over an affine-augmented state of
  size ``d + 1``; the recurrence and the train are validated against each
  other by exhaustive rollout.
* Linear models are the bond-2 running-sum special case.

Every compiled train agrees with its source evaluator on the full domain
(exactly for 0/1 trees, to float tolerance otherwise).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .engine import ShapMatrix, shap_tt
from .errors import ValidationError
from .train import TensorTrain


# ---------------------------------------------------------------------------
# decision trees
# ---------------------------------------------------------------------------

@dataclass
class TreeLeaf:
    """Leaf output: a vector of length n_out."""

    value: np.ndarray

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64).reshape(-1)


@dataclass
class TreeNode:
    feature: int
    children: dict[int, "TreeNode | TreeLeaf"]


@dataclass
class DecisionTree:
    """Discrete-feature tree: every internal node splits one feature over
    all of its values, no feature repeats along a path."""

    dims: tuple[int, ...]
    root: "TreeNode | TreeLeaf"
    n_out: int = 1

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self._validate(self.root, used=set())

    def _validate(self, node, used: set[int]) -> None:
        if isinstance(node, TreeLeaf):
            if node.value.size != self.n_out:
                raise ValidationError(
                    f"leaf value has length {node.value.size}, expected {self.n_out}"
                )
            return
        if not 1 <= node.feature <= len(self.dims):
            raise ValidationError(f"split feature {node.feature} out of range 1..{len(self.dims)}")
        if node.feature in used:
            raise ValidationError(f"feature {node.feature} repeats along a path")
        dim = self.dims[node.feature - 1]
        if sorted(node.children) != list(range(1, dim + 1)):
            raise ValidationError(
                f"split on feature {node.feature} must cover values 1..{dim}, "
                f"got {sorted(node.children)}"
            )
        for child in node.children.values():
            self._validate(child, used | {node.feature})

    def evaluate(self, x: Sequence[int]) -> np.ndarray:
        node = self.root
        while isinstance(node, TreeNode):
            node = node.children[int(x[node.feature - 1])]
        return node.value


def leaf_from_json(data: dict[str, Any], n_out_hint: int | None = None) -> TreeLeaf:
    if "label" in data:
        label = int(data["label"])
        size = n_out_hint or label
        vec = np.zeros(max(size, label))
        vec[label - 1] = 1.0
        return TreeLeaf(vec)
    value = data["value"]
    if isinstance(value, (int, float)):
        return TreeLeaf(np.asarray([value]))
    return TreeLeaf(np.asarray(value, dtype=np.float64))


def tree_from_json(data: dict[str, Any]) -> DecisionTree:
    dims = data["dims"]

    def max_label(node) -> int:
        if "label" in node:
            return int(node["label"])
        if "feature" in node:
            return max(max_label(c) for c in node["children"].values())
        return 0

    def leaf_width(node) -> int:
        if "label" in node or "feature" not in node:
            if "label" in node:
                return 0
            v = node["value"]
            return len(v) if isinstance(v, (list, tuple)) else 1
        return max(leaf_width(c) for c in node["children"].values())

    classes = max_label(data["root"])
    n_out = classes if classes > 0 else max(leaf_width(data["root"]), 1)

    def build(node):
        if "feature" in node:
            children = {int(v): build(c) for v, c in node["children"].items()}
            return TreeNode(feature=int(node["feature"]), children=children)
        return leaf_from_json(node, n_out_hint=classes if classes > 0 else None)

    return DecisionTree(dims=tuple(dims), root=build(data["root"]), n_out=n_out)


# ---------------------------------------------------------------------------
# disjoint DNF
# ---------------------------------------------------------------------------

@dataclass
class DisjointDnf:
    """Pairwise-contradictory conjunctive clauses with per-clause outputs.

    A clause is a mapping feature -> required value (at most one predicate
    per feature); an input satisfies at most one clause.
    """

    n: int
    dims: tuple[int, ...]
    clauses: list[dict[int, int]]
    leaf_values: np.ndarray  # (n_clauses, n_out)

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.leaf_values = np.atleast_2d(np.asarray(self.leaf_values, dtype=np.float64))
        if len(self.clauses) != self.leaf_values.shape[0]:
            raise ValidationError(
                f"{len(self.clauses)} clauses but {self.leaf_values.shape[0]} output rows"
            )
        for c, clause in enumerate(self.clauses, start=1):
            for feature, value in clause.items():
                if not 1 <= feature <= self.n:
                    raise ValidationError(f"clause {c}: feature {feature} out of range 1..{self.n}")
                if not 1 <= value <= self.dims[feature - 1]:
                    raise ValidationError(
                        f"clause {c}: value {value} out of range 1..{self.dims[feature - 1]}"
                    )
        witness = self._overlap_witness()
        if witness is not None:
            raise ValidationError(f"clauses overlap: input {witness} satisfies two clauses")

    def _overlap_witness(self) -> tuple[int, ...] | None:
        # Two conjunctive clauses overlap iff they agree on every feature
        # constrained by both; the merged constraints then build a witness.
        for a in range(len(self.clauses)):
            for b in range(a + 1, len(self.clauses)):
                ca, cb = self.clauses[a], self.clauses[b]
                if all(ca[f] == cb[f] for f in ca.keys() & cb.keys()):
                    merged = {**ca, **cb}
                    return tuple(merged.get(f, 1) for f in range(1, self.n + 1))
        return None

    @property
    def n_out(self) -> int:
        return self.leaf_values.shape[1]

    def evaluate(self, x: Sequence[int]) -> np.ndarray:
        out = np.zeros(self.n_out)
        for clause, value in zip(self.clauses, self.leaf_values):
            if all(x[f - 1] == v for f, v in clause.items()):
                out += value
        return out


def tree_to_dnf(tree: DecisionTree, drop_zero_leaves: bool = True) -> DisjointDnf:
    """One clause per leaf, predicates taken from the path constraints.

    Scalar leaves that output exactly 0 contribute nothing and are
    dropped by default, which keeps the clause bond at the number of
    informative paths.
    """
    clauses: list[dict[int, int]] = []
    values: list[np.ndarray] = []

    def walk(node, constraints: dict[int, int]) -> None:
        if isinstance(node, TreeLeaf):
            if drop_zero_leaves and not np.any(node.value):
                return
            clauses.append(dict(constraints))
            values.append(node.value)
            return
        for value, child in sorted(node.children.items()):
            walk(child, {**constraints, node.feature: value})

    walk(tree.root, {})
    if not values:
        leaf_values = np.zeros((0, tree.n_out))
    else:
        leaf_values = np.stack(values)
    return DisjointDnf(n=len(tree.dims), dims=tree.dims, clauses=clauses, leaf_values=leaf_values)


def dnf_to_tt(dnf: DisjointDnf) -> TensorTrain:
    """Train with one bond state per clause; evaluation counts the (at most
    one) satisfied clause weighted by its output vector."""
    n, dims = dnf.n, dnf.dims
    n_clauses = len(dnf.clauses)
    if n_clauses == 0:
        cores = [np.zeros((1, d, 1)) for d in dims[:-1]]
        cores.append(np.zeros((1, dims[-1], dnf.n_out)))
        return TensorTrain(cores)

    def accepts(clause: dict[int, int], feature: int, value: int) -> bool:
        return clause.get(feature, value) == value

    def site_diag(feature: int) -> np.ndarray:
        d = dims[feature - 1]
        core = np.zeros((n_clauses, d, n_clauses))
        for k, clause in enumerate(dnf.clauses):
            for v in range(1, d + 1):
                if accepts(clause, feature, v):
                    core[k, v - 1, k] = 1.0
        return core

    if n == 1:
        core = np.zeros((1, dims[0], dnf.n_out))
        for k, clause in enumerate(dnf.clauses):
            for v in range(1, dims[0] + 1):
                if accepts(clause, 1, v):
                    core[0, v - 1, :] += dnf.leaf_values[k]
        return TensorTrain([core])

    cores = [site_diag(1).sum(axis=0, keepdims=True)]
    for feature in range(2, n):
        cores.append(site_diag(feature))
    cores.append(np.einsum("kvj,jo->kvo", site_diag(n), dnf.leaf_values))
    return TensorTrain(cores)


def compile_tree(tree: DecisionTree) -> TensorTrain:
    return dnf_to_tt(tree_to_dnf(tree))


def ensemble_shap(
    trees: Sequence[DecisionTree],
    weights: Sequence[float],
    dist: TensorTrain,
    x: Sequence[int],
    schedule: str = "sequential",
    threads: int = 1,
) -> ShapMatrix:
    """Weighted sum of per-tree attributions (linearity of the score)."""
    if len(trees) != len(weights):
        raise ValidationError(f"{len(trees)} trees but {len(weights)} weights")
    if not trees:
        raise ValidationError("ensemble is empty")
    total: np.ndarray | None = None
    for index, (tree, weight) in enumerate(zip(trees, weights), start=1):
        try:
            tt = compile_tree(tree)
            phi = shap_tt(tt, dist, x, schedule=schedule, threads=threads)
        except (ValidationError, ValueError) as exc:
            raise ValidationError(f"tree {index}: {exc}") from exc
        total = weight * phi.values if total is None else total + weight * phi.values
    assert total is not None
    return ShapMatrix(total)


# ---------------------------------------------------------------------------
# linear RNNs and linear models
# ---------------------------------------------------------------------------

@dataclass
class LinearRnn:
    """Second-order linear recurrence over a finite alphabet.

    State update on symbol ``s``:  ``h <- (T[:, s, :] + U) h + W[:, s] + b``
    with readout ``y = O.T h`` after the last symbol.
    """

    d: int
    alphabet_size: int
    h0: np.ndarray
    interaction: np.ndarray  # (d, N, d): state-in x symbol x state-out
    input_matrix: np.ndarray  # (d, N)
    transition: np.ndarray  # (d, d)
    bias: np.ndarray  # (d,)
    readout: np.ndarray  # (d, n_out)

    def __post_init__(self):
        self.h0 = np.asarray(self.h0, dtype=np.float64).reshape(-1)
        self.interaction = np.asarray(self.interaction, dtype=np.float64)
        self.input_matrix = np.asarray(self.input_matrix, dtype=np.float64)
        self.transition = np.asarray(self.transition, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        self.readout = np.atleast_2d(np.asarray(self.readout, dtype=np.float64))
        if self.readout.shape[0] != self.d:
            self.readout = self.readout.T
        d, n = self.d, self.alphabet_size
        checks = {
            "h0": (self.h0.shape, (d,)),
            "interaction": (self.interaction.shape, (d, n, d)),
            "input_matrix": (self.input_matrix.shape, (d, n)),
            "transition": (self.transition.shape, (d, d)),
            "bias": (self.bias.shape, (d,)),
        }
        for name, (got, want) in checks.items():
            if got != want:
                raise ValidationError(f"{name} has shape {got}, expected {want}")

    @property
    def n_out(self) -> int:
        return self.readout.shape[1]

    def rollout(self, x: Sequence[int]) -> np.ndarray:
        """Direct recurrence evaluation; the fidelity reference for the train."""
        h = self.h0
        for symbol in x:
            s = int(symbol) - 1
            h = (self.interaction[:, s, :] + self.transition) @ h + self.input_matrix[:, s] + self.bias
        return self.readout.T @ h


def rnn_to_tt(rnn: LinearRnn, n: int) -> TensorTrain:
    """Stationary train over the affine-augmented state ``(h; 1)``.

    The slice for symbol ``s`` is the transpose of the ``(d+1) x (d+1)``
    block matrix ``[[T[:,s,:] + U, W e_s + b], [0, 1]]`` so that the
    left-to-right slice product reproduces the rollout exactly.
    """
    if n < 1:
        raise ValidationError(f"window length must be >= 1, got {n}")
    d, alphabet = rnn.d, rnn.alphabet_size
    slices = np.zeros((alphabet, d + 1, d + 1))
    for s in range(alphabet):
        slices[s, :d, :d] = rnn.interaction[:, s, :] + rnn.transition
        slices[s, :d, d] = rnn.input_matrix[:, s] + rnn.bias
        slices[s, d, d] = 1.0
    core = np.ascontiguousarray(slices.transpose(2, 0, 1))  # (d+1, N, d+1), transposed slices

    left = np.concatenate([rnn.h0, [1.0]])
    right = np.vstack([rnn.readout, np.zeros((1, rnn.n_out))])

    if n == 1:
        single = np.einsum("a,asb,bo->so", left, core, right).reshape(1, alphabet, rnn.n_out)
        return TensorTrain([single])
    first = np.einsum("a,asb->sb", left, core).reshape(1, alphabet, d + 1)
    last = np.einsum("asb,bo->aso", core, right)
    return TensorTrain([first] + [core] * (n - 2) + [last])


def linear_to_tt(values: Sequence[Sequence[float]], bias: float = 0.0) -> TensorTrain:
    """Running-sum train for ``bias + sum_i v_i(x_i)``; bond 2."""
    maps = [np.asarray(v, dtype=np.float64).reshape(-1) for v in values]
    if not maps:
        raise ValidationError("need at least one per-feature value map")
    n = len(maps)
    if n == 1:
        return TensorTrain([(bias + maps[0]).reshape(1, -1, 1)])
    first = np.zeros((1, maps[0].size, 2))
    first[0, :, 0] = 1.0
    first[0, :, 1] = bias + maps[0]
    cores = [first]
    for v in maps[1:-1]:
        mid = np.zeros((2, v.size, 2))
        mid[0, :, 0] = 1.0
        mid[0, :, 1] = v
        mid[1, :, 1] = 1.0
        cores.append(mid)
    last = np.zeros((2, maps[-1].size, 1))
    last[0, :, 0] = maps[-1]
    last[1, :, 0] = 1.0
    cores.append(last)
    return TensorTrain(cores)


def linear_eval(values: Sequence[Sequence[float]], bias: float, x: Sequence[int]) -> float:
    return bias + sum(float(np.asarray(v).reshape(-1)[int(s) - 1]) for v, s in zip(values, x))


# ---------------------------------------------------------------------------
# declarative model specs
# ---------------------------------------------------------------------------

@dataclass
class ModelSpec:
    """Declarative model description ingested from JSON and compiled to a train."""

    kind: str
    payload: dict[str, Any] = field(default_factory=dict)

    KINDS = ("tree", "ensemble", "linear_rnn", "linear", "bnn", "tt")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValidationError(f"unknown model kind {self.kind!r}")

    @classmethod
    def from_json(cls, data: dict[str, Any] | str) -> "ModelSpec":
        if isinstance(data, str):
            data = json.loads(data)
        if isinstance(data, dict) and "cores" in data and "kind" not in data:
            return cls(kind="tt", payload={"tt": data})
        if not isinstance(data, dict) or "kind" not in data:
            raise ValidationError("model spec must be an object with a 'kind' field")
        return cls(kind=data["kind"], payload={k: v for k, v in data.items() if k != "kind"})

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, **self.payload}

    def _rnn(self) -> tuple[LinearRnn, int]:
        p = self.payload
        rnn = LinearRnn(
            d=int(p["d"]),
            alphabet_size=int(p["N"]),
            h0=np.asarray(p["h0"], dtype=np.float64),
            interaction=np.asarray(p["T"], dtype=np.float64),
            input_matrix=np.asarray(p["W"], dtype=np.float64),
            transition=np.asarray(p["U"], dtype=np.float64),
            bias=np.asarray(p["b"], dtype=np.float64),
            readout=np.asarray(p["O"], dtype=np.float64),
        )
        return rnn, int(p["window"])

    def compile(self, bond_cap: int | None = None, dense_cap: int | None = None) -> TensorTrain:
        from . import serialize

        if self.kind == "tree":
            return compile_tree(tree_from_json(self.to_json()))
        if self.kind == "ensemble":
            # Linearity lets per-tree attributions be combined afterwards, but
            # the compiled artifact is a single dense sum of the member trains.
            trees = [tree_from_json(t) for t in self.payload["trees"]]
            weights = [float(w) for w in self.payload["weights"]]
            if len(trees) != len(weights):
                raise ValidationError(f"{len(trees)} trees but {len(weights)} weights")
            from .train import DEFAULT_DENSE_CAP, tt_to_dense
            dims = trees[0].dims
            total = None
            for index, (tree, weight) in enumerate(zip(trees, weights), start=1):
                if tree.dims != dims:
                    raise ValidationError(f"tree {index}: feature space differs from tree 1")
                dense = tt_to_dense(compile_tree(tree), cap=dense_cap or DEFAULT_DENSE_CAP).array
                total = weight * dense if total is None else total + weight * dense
            return _dense_model_to_tt(total, dims)
        if self.kind == "linear_rnn":
            rnn, window = self._rnn()
            return rnn_to_tt(rnn, window)
        if self.kind == "linear":
            return linear_to_tt(self.payload["values"], float(self.payload.get("bias", 0.0)))
        if self.kind == "bnn":
            from .automata import DEFAULT_BOND_CAP, bnn_from_json, bnn_to_tt

            return bnn_to_tt(bnn_from_json(self.to_json()), bond_cap=bond_cap or DEFAULT_BOND_CAP)
        return serialize.tt_from_json(self.payload["tt"])

    def evaluator(self) -> Callable[[Sequence[int]], np.ndarray]:
        """Reference evaluator of the source model (independent of the train)."""
        if self.kind == "tree":
            tree = tree_from_json(self.to_json())
            return tree.evaluate
        if self.kind == "ensemble":
            trees = [tree_from_json(t) for t in self.payload["trees"]]
            weights = [float(w) for w in self.payload["weights"]]

            def run(x: Sequence[int]) -> np.ndarray:
                return sum(w * t.evaluate(x) for t, w in zip(trees, weights))

            return run
        if self.kind == "linear_rnn":
            rnn, _ = self._rnn()
            return rnn.rollout
        if self.kind == "linear":
            values = self.payload["values"]
            bias = float(self.payload.get("bias", 0.0))
            return lambda x: np.asarray([linear_eval(values, bias, x)])
        if self.kind == "bnn":
            from .automata import bnn_from_json, bnn_forward

            bnn = bnn_from_json(self.to_json())
            return lambda x: bnn_forward(bnn, [int(s) - 1 for s in x]).astype(np.float64)
        from . import serialize
        from .train import tt_eval

        tt = serialize.tt_from_json(self.payload["tt"])
        return lambda x: tt_eval(tt, x).array.reshape(-1)

    def dims(self) -> tuple[int, ...]:
        if self.kind == "tree":
            return tuple(int(d) for d in self.payload["dims"])
        if self.kind == "ensemble":
            return tuple(int(d) for d in self.payload["trees"][0]["dims"])
        if self.kind == "linear_rnn":
            return (int(self.payload["N"]),) * int(self.payload["window"])
        if self.kind == "linear":
            return tuple(len(v) for v in self.payload["values"])
        if self.kind == "bnn":
            from .automata import bnn_from_json

            return (2,) * bnn_from_json(self.to_json()).n_inputs
        from . import serialize

        return serialize.tt_from_json(self.payload["tt"]).physical_dims


def _dense_model_to_tt(dense: np.ndarray, dims: Sequence[int]) -> TensorTrain:
    """Exact train of a dense tensor (trailing axes beyond ``dims`` become the
    output leg); used for ensemble sums at desk scale."""
    n = len(dims)
    n_out = int(np.prod(dense.shape[n:], dtype=np.int64)) if dense.ndim > n else 1
    mat = dense.reshape(int(np.prod(dims)), n_out)
    cores = []
    left = 1
    for t, d in enumerate(dims):
        rest = int(np.prod(dims[t + 1:], dtype=np.int64))
        mat = mat.reshape(left * d, rest * n_out)
        if t == n - 1:
            cores.append(mat.reshape(left, d, n_out))
            break
        q, r = np.linalg.qr(mat)
        cores.append(q.reshape(left, d, q.shape[1]))
        left = q.shape[1]
        mat = r
    return TensorTrain(cores)

"""Layered automata, copy tensors, and the binarized-network compiler.

A layered automaton reads one symbol per site, moving through per-site
state layers; it exports directly to a 0/1 train (one core per site,
entry 1 where a transition exists).  Clause acceptors and saturating
threshold counters are the two builders used here:

* a clause acceptor tracks satisfied/unsatisfied and accepts the
  satisfying assignments of a disjunction of literals;
* a threshold counter counts satisfied literals of a neuron, saturating
  at the reified threshold ``R``, and accepts once the count reaches it.

Binarized networks travel through this machinery: layer-1 neurons become
counters, their product automaton becomes a train with the final state
leg left open, and the open leg is contracted with a lookup table that
propagates first-layer activation patterns through the remaining layers.
The resulting bond never exceeds ``prod_j (R_j + 1)``.

Inputs in ``{-1, +1}`` map to symbols ``{1, 2}``; internally neurons see
bits (0/1).  Weight entries may be -1, +1, or 0 for an absent connection
(the reified threshold is bounded by the nonzero fan-in plus one).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Hashable, Sequence

import numpy as np

from .distributions import uniform_tt
from .engine import expected_value
from .errors import (
    InternalConsistencyError,
    ResourceLimitError,
    ValidationError,
)
from .train import TensorTrain

DEFAULT_BOND_CAP = 2 ** 20
LOOKUP_WIDTH_CAP = 20
COUNT_INTEGER_TOL = 1e-6


# ---------------------------------------------------------------------------
# layered automata
# ---------------------------------------------------------------------------

@dataclass
class Ldfa:
    """Layered deterministic automaton over the alphabet ``1..alphabet_size``.

    ``states[t]`` lists the states reachable after ``t`` symbols
    (``states[0]`` holds the entry layer).  ``delta[(t, s, symbol)]`` is
    the unique successor in layer ``t`` of state ``s`` in layer ``t-1``.
    """

    alphabet_size: int
    states: list[list[Hashable]]
    delta: dict[tuple[int, Hashable, int], Hashable]
    initial: Hashable
    accepting: frozenset

    def __post_init__(self):
        if len(self.states) < 2:
            raise ValidationError("automaton needs at least one transition layer")
        if self.initial not in self.states[0]:
            raise ValidationError("initial state missing from the entry layer")
        final = set(self.states[-1])
        if not set(self.accepting) <= final:
            raise ValidationError("accepting states missing from the final layer")
        for (t, s, symbol), target in self.delta.items():
            if not 1 <= t <= self.n_sites:
                raise ValidationError(f"transition site {t} out of range")
            if not 1 <= symbol <= self.alphabet_size:
                raise ValidationError(f"transition symbol {symbol} out of range")
            if s not in set(self.states[t - 1]) or target not in set(self.states[t]):
                raise ValidationError(f"transition ({t}, {s!r}, {symbol}) links unknown states")

    @property
    def n_sites(self) -> int:
        return len(self.states) - 1

    def accepts(self, x: Sequence[int]) -> bool:
        if len(x) != self.n_sites:
            raise ValidationError(f"input has {len(x)} symbols for {self.n_sites} sites")
        state = self.initial
        for t, symbol in enumerate(x, start=1):
            state = self.delta.get((t, state, int(symbol)))
            if state is None:
                return False
        return state in self.accepting


def clause_to_ldfa(literals: Sequence[int], n: int) -> Ldfa:
    """Acceptor of the satisfying assignments of a disjunction of literals.

    ``literals`` uses signed 1-based variable indices (negative means the
    negated variable); symbol 1 is false, symbol 2 is true.  Two states
    per layer track whether some literal has already been satisfied.
    """
    if not literals:
        raise ValidationError("clause is empty")
    satisfied_by: dict[int, set[int]] = {v: set() for v in range(1, n + 1)}
    for literal in literals:
        var = abs(int(literal))
        if not 1 <= var <= n:
            raise ValidationError(f"literal {literal} references variable outside 1..{n}")
        satisfied_by[var].add(2 if literal > 0 else 1)

    states: list[list[Hashable]] = [[0]] + [[0, 1] for _ in range(n)]
    delta: dict[tuple[int, Hashable, int], Hashable] = {}
    for t in range(1, n + 1):
        for symbol in (1, 2):
            hit = symbol in satisfied_by[t]
            delta[(t, 0, symbol)] = 1 if hit else 0
            if t > 1:
                delta[(t, 1, symbol)] = 1
    return Ldfa(
        alphabet_size=2,
        states=states,
        delta=delta,
        initial=0,
        accepting=frozenset({1}),
    )


def neuron_to_ldfa(weights: Sequence[int], threshold: int) -> Ldfa:
    """Saturating counter for ``sum of adjusted literals >= threshold``.

    A literal counts when the input bit matches the weight sign (+1 wants
    the bit set, -1 wants it clear, 0 never counts).  The counter
    saturates at ``threshold``, so each layer has ``threshold + 1``
    states and the acceptor fires exactly on saturation.
    """
    w = [int(v) for v in weights]
    n = len(w)
    if any(v not in (-1, 0, 1) for v in w):
        raise ValidationError(f"weights must be -1, 0, or +1, got {w}")
    fan_in = sum(1 for v in w if v != 0)
    if not 0 <= threshold <= fan_in + 1:
        raise ValidationError(f"threshold {threshold} out of range 0..{fan_in + 1}")

    counters = list(range(threshold + 1))
    states: list[list[Hashable]] = [[0]] + [list(counters) for _ in range(n)]
    delta: dict[tuple[int, Hashable, int], Hashable] = {}
    for t in range(1, n + 1):
        sources = [0] if t == 1 else counters
        for count in sources:
            for symbol in (1, 2):
                bit = symbol - 1
                counts = (w[t - 1] == 1 and bit == 1) or (w[t - 1] == -1 and bit == 0)
                delta[(t, count, symbol)] = min(count + 1, threshold) if counts else count
    return Ldfa(
        alphabet_size=2,
        states=states,
        delta=delta,
        initial=0,
        accepting=frozenset({threshold}),
    )


def ldfa_product(automata: Sequence[Ldfa]) -> Ldfa:
    """Synchronous product; accepts exactly the intersection of the languages."""
    if not automata:
        raise ValidationError("product of zero automata")
    first = automata[0]
    for a in automata[1:]:
        if a.alphabet_size != first.alphabet_size:
            raise ValidationError("product requires identical alphabets")
        if a.n_sites != first.n_sites:
            raise ValidationError("product requires identical site counts")
    n = first.n_sites
    states: list[list[Hashable]] = [
        list(itertools.product(*(a.states[t] for a in automata))) for t in range(n + 1)
    ]
    delta: dict[tuple[int, Hashable, int], Hashable] = {}
    for t in range(1, n + 1):
        for source in states[t - 1]:
            for symbol in range(1, first.alphabet_size + 1):
                targets = tuple(
                    a.delta.get((t, s, symbol)) for a, s in zip(automata, source)
                )
                if all(target is not None for target in targets):
                    delta[(t, source, symbol)] = targets
    return Ldfa(
        alphabet_size=first.alphabet_size,
        states=states,
        delta=delta,
        initial=tuple(a.initial for a in automata),
        accepting=frozenset(itertools.product(*(a.accepting for a in automata))),
    )


def ldfa_to_tt(automaton: Ldfa, open_final: bool = False) -> TensorTrain:
    """0/1 train of the transition structure.

    The left boundary selects the initial state.  By default the right
    boundary is contracted with the accepting indicator so evaluation
    returns the acceptance value; with ``open_final`` the final-state leg
    stays open (right boundary = size of the last layer).
    """
    n = automaton.n_sites
    alphabet = automaton.alphabet_size
    index = [
        {state: k for k, state in enumerate(layer)} for layer in automaton.states
    ]
    cores: list[np.ndarray] = []
    for t in range(1, n + 1):
        core = np.zeros((len(automaton.states[t - 1]), alphabet, len(automaton.states[t])))
        for (site, source, symbol), target in automaton.delta.items():
            if site == t:
                core[index[t - 1][source], symbol - 1, index[t][target]] = 1.0
        cores.append(core)
    cores[0] = cores[0][index[0][automaton.initial]][np.newaxis, :, :]
    if not open_final:
        accept = np.zeros((len(automaton.states[n]), 1))
        for state in automaton.accepting:
            accept[index[n][state], 0] = 1.0
        cores[-1] = np.einsum("avb,bo->avo", cores[-1], accept)
    return TensorTrain(cores)


def copy_tensor_tt(order: int, dim: int) -> TensorTrain:
    """Train form of the all-indices-equal tensor of the given order."""
    if order < 1 or dim < 1:
        raise ValidationError(f"need order >= 1 and dim >= 1, got {order}, {dim}")
    if order == 1:
        return TensorTrain([np.ones((1, dim, 1))])
    eye = np.eye(dim)
    first = eye.reshape(1, dim, dim)
    middle = np.zeros((dim, dim, dim))
    for v in range(dim):
        middle[v, v, v] = 1.0
    last = eye.reshape(dim, dim, 1)
    return TensorTrain([first] + [middle] * (order - 2) + [last])


# ---------------------------------------------------------------------------
# binarized networks
# ---------------------------------------------------------------------------

@dataclass
class BnnLayer:
    weights: np.ndarray  # (width, fan_in) entries in {-1, 0, +1}
    reified: np.ndarray  # (width,) integer thresholds

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.int64)
        self.reified = np.asarray(self.reified, dtype=np.int64).reshape(-1)
        if self.weights.ndim != 2:
            raise ValidationError(f"layer weights must be a matrix, got shape {self.weights.shape}")
        if not np.isin(self.weights, (-1, 0, 1)).all():
            raise ValidationError("layer weights must be -1, 0, or +1")
        if self.reified.size != self.weights.shape[0]:
            raise ValidationError(
                f"{self.reified.size} thresholds for {self.weights.shape[0]} neurons"
            )
        fan_in = np.count_nonzero(self.weights, axis=1)
        if ((self.reified < 0) | (self.reified > fan_in + 1)).any():
            raise ValidationError("thresholds must satisfy 0 <= R <= fan-in + 1")

    @property
    def width(self) -> int:
        return self.weights.shape[0]


@dataclass
class Bnn:
    """Threshold network: every neuron fires when its satisfied-literal count
    reaches its reified threshold."""

    layers: list[BnnLayer]
    n_inputs: int

    def __post_init__(self):
        if not self.layers:
            raise ValidationError("network has no layers")
        expected = self.n_inputs
        for depth, layer in enumerate(self.layers, start=1):
            if layer.weights.shape[1] != expected:
                raise ValidationError(
                    f"layer {depth} expects {layer.weights.shape[1]} inputs, got {expected}"
                )
            expected = layer.width

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def n_outputs(self) -> int:
        return self.layers[-1].width


def bnn_forward(bnn: Bnn, bits: Sequence[int]) -> np.ndarray:
    """Forward pass on a 0/1 bit vector; returns the 0/1 output vector."""
    state = np.asarray(bits, dtype=np.int64).reshape(-1)
    if state.size != bnn.n_inputs:
        raise ValidationError(f"input has {state.size} bits for {bnn.n_inputs} inputs")
    for layer in bnn.layers:
        satisfied = np.where(
            layer.weights == 1, state, np.where(layer.weights == -1, 1 - state, 0)
        )
        state = (satisfied.sum(axis=1) >= layer.reified).astype(np.int64)
    return state


def _pattern_index(bits: Sequence[int]) -> int:
    """First neuron is the most significant bit of the pattern row index."""
    value = 0
    for bit in bits:
        value = (value << 1) | int(bit)
    return value


def bnn_collapse_lookup(bnn: Bnn, width_cap: int = LOOKUP_WIDTH_CAP) -> np.ndarray:
    """Map every first-layer activation pattern through the remaining layers.

    Returns a ``2^width x n_outputs`` table.  With a single layer the
    table is the identity on patterns.
    """
    width = bnn.layers[0].width
    if width > width_cap:
        raise ResourceLimitError(f"lookup table over {width} neurons exceeds cap 2^{width_cap}")
    tail = Bnn(layers=bnn.layers[1:], n_inputs=width) if bnn.depth > 1 else None
    table = np.empty((2 ** width, bnn.n_outputs), dtype=np.float64)
    for bits in itertools.product((0, 1), repeat=width):
        row = _pattern_index(bits)
        if tail is None:
            table[row] = np.asarray(bits, dtype=np.float64)
        else:
            table[row] = bnn_forward(tail, bits).astype(np.float64)
    return table


def bnn_to_tt(bnn: Bnn, bond_cap: int = DEFAULT_BOND_CAP) -> TensorTrain:
    """Compile the network to a train matching its forward pass everywhere.

    Layer-1 neurons become saturating counters, their product automaton
    becomes a train with the final leg open, the product states are
    thresholded into activation patterns, and the pattern leg is
    contracted with the collapse lookup table.
    """
    first = bnn.layers[0]
    thresholds = [int(r) for r in first.reified]
    bond = math.prod(r + 1 for r in thresholds)
    if bond > bond_cap:
        r_max = max(thresholds)
        raise ResourceLimitError(
            f"product bond (R_max+1)^width = ({r_max}+1)^{first.width} reaches {bond}, "
            f"cap is {bond_cap}"
        )
    counters = [
        neuron_to_ldfa(first.weights[j], thresholds[j]) for j in range(first.width)
    ]
    product = ldfa_product(counters)
    tt = ldfa_to_tt(product, open_final=True)
    lookup = bnn_collapse_lookup(bnn)

    final_states = product.states[-1]
    pattern_of = np.zeros((len(final_states), 2 ** first.width))
    for k, counts in enumerate(final_states):
        bits = [1 if count >= r else 0 for count, r in zip(counts, thresholds)]
        pattern_of[k, _pattern_index(bits)] = 1.0
    closing = pattern_of @ lookup
    cores = [c.array for c in tt.cores]
    cores[-1] = np.einsum("avb,bo->avo", cores[-1], closing)
    return TensorTrain(cores)


def bnn_from_json(data: dict[str, Any]) -> Bnn:
    if "layers" not in data:
        raise ValidationError("network JSON must carry a 'layers' list")
    layers = [
        BnnLayer(weights=np.asarray(layer["weights"]), reified=np.asarray(layer["reified"]))
        for layer in data["layers"]
    ]
    n_inputs = int(data.get("inputs", layers[0].weights.shape[1]))
    bnn = Bnn(layers=layers, n_inputs=n_inputs)
    outputs = int(data.get("outputs", bnn.n_outputs))
    if outputs != bnn.n_outputs:
        raise ValidationError(f"declared {outputs} outputs but last layer has {bnn.n_outputs}")
    return bnn


def bnn_to_json(bnn: Bnn) -> dict[str, Any]:
    return {
        "kind": "bnn",
        "layers": [
            {"weights": layer.weights.tolist(), "reified": layer.reified.tolist()}
            for layer in bnn.layers
        ],
        "outputs": bnn.n_outputs,
    }


# ---------------------------------------------------------------------------
# CNF fixtures and model counting
# ---------------------------------------------------------------------------

@dataclass
class CnfFormula:
    """CNF over ``n`` variables; clauses hold signed 1-based indices."""

    n: int
    clauses: list[list[int]] = field(default_factory=list)

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"need at least one variable, got {self.n}")
        if not self.clauses:
            raise ValidationError("formula has no clauses")
        for c, clause in enumerate(self.clauses, start=1):
            if not clause:
                raise ValidationError(f"clause {c} is empty")
            for literal in clause:
                if literal == 0 or abs(literal) > self.n:
                    raise ValidationError(f"clause {c}: literal {literal} out of range")

    def evaluate(self, bits: Sequence[int]) -> bool:
        return all(
            any((bits[abs(l) - 1] == 1) == (l > 0) for l in clause) for clause in self.clauses
        )


def read_dimacs(text: str) -> CnfFormula:
    """Parse the DIMACS CNF subset used for test fixtures."""
    n = None
    clauses: list[list[int]] = []
    current: list[int] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValidationError(f"line {line_no}: malformed problem line {line!r}")
            n = int(parts[2])
            continue
        if n is None:
            raise ValidationError(f"line {line_no}: clause before the problem line")
        for token in line.split():
            literal = int(token)
            if literal == 0:
                if current:
                    clauses.append(current)
                    current = []
            else:
                current.append(literal)
    if current:
        clauses.append(current)
    if n is None:
        raise ValidationError("missing problem line 'p cnf <vars> <clauses>'")
    return CnfFormula(n=n, clauses=clauses)


def cnf_to_bnn(cnf: CnfFormula) -> Bnn:
    """Hidden neuron per clause (fires when a literal holds), conjunctive output.

    Requires clauses of at most three literals.  Signs wire literals; the
    clause threshold is 1 and the output neuron needs all clauses.
    """
    hidden_rows = []
    for c, clause in enumerate(cnf.clauses, start=1):
        if len(clause) > 3:
            raise ValidationError(f"clause {c} has {len(clause)} literals, at most 3 supported")
        row = np.zeros(cnf.n, dtype=np.int64)
        for literal in clause:
            row[abs(literal) - 1] = 1 if literal > 0 else -1
        hidden_rows.append(row)
    m = len(cnf.clauses)
    hidden = BnnLayer(weights=np.stack(hidden_rows), reified=np.ones(m, dtype=np.int64))
    output = BnnLayer(weights=np.ones((1, m), dtype=np.int64), reified=np.asarray([m]))
    return Bnn(layers=[hidden, output], n_inputs=cnf.n)


def cnf_to_tt_via_clause_ldfas(cnf: CnfFormula, bond_cap: int = DEFAULT_BOND_CAP) -> TensorTrain:
    product_size = 2 ** len(cnf.clauses)
    if product_size > bond_cap:
        raise ResourceLimitError(
            f"clause product needs {product_size} states per layer, cap is {bond_cap}"
        )
    product = ldfa_product([clause_to_ldfa(clause, cnf.n) for clause in cnf.clauses])
    return ldfa_to_tt(product)


COUNT_ROUTES = ("via_bnn", "via_clause_ldfas")


def cnf_model_count(cnf: CnfFormula, route: str = "via_clause_ldfas", bond_cap: int = DEFAULT_BOND_CAP) -> int:
    """Count satisfying assignments as ``2^n`` times the uniform expectation
    of the compiled indicator train."""
    if route not in COUNT_ROUTES:
        raise ValidationError(f"unknown route {route!r}, expected one of {COUNT_ROUTES}")
    if route == "via_bnn":
        tt = bnn_to_tt(cnf_to_bnn(cnf), bond_cap=bond_cap)
    else:
        tt = cnf_to_tt_via_clause_ldfas(cnf, bond_cap=bond_cap)
    uniform = uniform_tt([2] * cnf.n)
    raw = float(2 ** cnf.n * expected_value(tt, uniform)[0])
    count = round(raw)
    if abs(raw - count) > COUNT_INTEGER_TOL:
        raise InternalConsistencyError(
            f"model count {raw!r} is not an integer within {COUNT_INTEGER_TOL}"
        )
    return int(count)

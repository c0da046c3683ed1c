"""Exact marginal SHAP attribution for tensor-train models and distributions.

The engine contracts a feature-weight train, per-site value routers, the
model train, and the distribution train into the full attribution matrix
in one pass, with a brute-force coalition-enumeration oracle to verify
every result.  Compilers reduce decision trees, tree ensembles, linear
RNNs, linear models, and binarized threshold networks to equivalent
trains, and the usual distribution classes (uniform, independent,
empirical, Markov) are encoded as trains too.
"""

from .automata import (
    Bnn,
    BnnLayer,
    CnfFormula,
    Ldfa,
    bnn_collapse_lookup,
    bnn_forward,
    bnn_to_tt,
    clause_to_ldfa,
    cnf_model_count,
    cnf_to_bnn,
    copy_tensor_tt,
    ldfa_product,
    ldfa_to_tt,
    neuron_to_ldfa,
    read_dimacs,
)
from .compilers import (
    DecisionTree,
    DisjointDnf,
    LinearRnn,
    ModelSpec,
    TreeLeaf,
    TreeNode,
    compile_tree,
    dnf_to_tt,
    ensemble_shap,
    linear_to_tt,
    rnn_to_tt,
    tree_to_dnf,
)
from .distributions import (
    DistributionSpec,
    empirical_to_tt,
    independent_to_tt,
    markov_to_tt,
    uniform_tt,
    validate_distribution,
)
from .engine import (
    ShapMatrix,
    SiteCore,
    assemble_site_cores,
    efficiency_residual,
    expected_value,
    shap_dense_oracle,
    shap_general_dense,
    shap_tt,
)
from .errors import (
    AxisRangeError,
    InternalConsistencyError,
    ResourceLimitError,
    ShapeMismatchError,
    ValidationError,
)
from .explainer import TensorTrainShapExplainer
from .router import EnumerableDistribution, RouterTensor, marginal_value, router_tensor
from .tensor import DenseTensor, contract, one_hot, outer, reshape
from .train import ScanStats, TensorTrain, scan_product, tt_eval, tt_to_dense
from .weights import (
    WeightCoreSet,
    signed_coefficient,
    weight_cores,
    weight_tensor_dense,
)

__all__ = [
    "AxisRangeError",
    "Bnn",
    "BnnLayer",
    "CnfFormula",
    "DecisionTree",
    "DenseTensor",
    "DisjointDnf",
    "DistributionSpec",
    "EnumerableDistribution",
    "InternalConsistencyError",
    "Ldfa",
    "LinearRnn",
    "ModelSpec",
    "ResourceLimitError",
    "RouterTensor",
    "ScanStats",
    "ShapMatrix",
    "ShapeMismatchError",
    "SiteCore",
    "TensorTrain",
    "TensorTrainShapExplainer",
    "TreeLeaf",
    "TreeNode",
    "ValidationError",
    "WeightCoreSet",
    "assemble_site_cores",
    "bnn_collapse_lookup",
    "bnn_forward",
    "bnn_to_tt",
    "clause_to_ldfa",
    "cnf_model_count",
    "cnf_to_bnn",
    "compile_tree",
    "contract",
    "copy_tensor_tt",
    "dnf_to_tt",
    "efficiency_residual",
    "empirical_to_tt",
    "ensemble_shap",
    "expected_value",
    "independent_to_tt",
    "ldfa_product",
    "ldfa_to_tt",
    "linear_to_tt",
    "marginal_value",
    "markov_to_tt",
    "neuron_to_ldfa",
    "one_hot",
    "outer",
    "read_dimacs",
    "reshape",
    "rnn_to_tt",
    "router_tensor",
    "scan_product",
    "shap_dense_oracle",
    "shap_general_dense",
    "shap_tt",
    "signed_coefficient",
    "tree_to_dnf",
    "tt_eval",
    "tt_to_dense",
    "uniform_tt",
    "validate_distribution",
    "weight_cores",
    "weight_tensor_dense",
]

__version__ = "0.1.0"

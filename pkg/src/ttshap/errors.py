"""Exception hierarchy shared by all ttshap modules.

The CLI maps these onto exit codes: validation problems (including shape
and axis errors) exit 2, resource-cap violations exit 3, and
internal-consistency failures (results that contradict an independent
check) exit 4.
"""


class ValidationError(ValueError):
    """Malformed or inconsistent user input."""


class ShapeMismatchError(ValidationError):
    """Tensor shapes incompatible for the requested operation."""


class AxisRangeError(IndexError):
    """A 1-based axis, site, or symbol index is out of range."""


class ResourceLimitError(RuntimeError):
    """A configured dense-size or bond-size cap would be exceeded."""


class InternalConsistencyError(RuntimeError):
    """Two routes that must agree produced different answers."""

"""Exception types shared across the package."""


class OtsimError(Exception):
    """Base class for all otsim errors."""


class DimensionMismatch(OtsimError, ValueError):
    """Input shapes are inconsistent with each other."""


class NonFiniteInput(OtsimError, ValueError):
    """An input array contains NaN or infinity."""


class DegenerateStructure(OtsimError, ValueError):
    """Structure matrices are indistinguishable (zero mean squared difference),
    so the structure term carries no information and cannot be normalized."""


class BundleFormatError(OtsimError, ValueError):
    """A bundle or pairs file failed to parse or violated a record invariant."""


class EvalError(OtsimError, ValueError):
    """Metric preconditions violated (single-class labels, constant scores, ...)."""

"""
Domain errors shared by every app.

Input-contract failures subclass Django's ``ValidationError`` so callers can
rely on ``code`` and ``params`` the same way forms and model ``clean()``
methods do. Numerical and runtime failures keep to the builtin hierarchy.
"""

from django.core.exceptions import ValidationError

# ============================================================================
# VALIDATION ERRORS
# ============================================================================


class AfcaviValidationError(ValidationError):
    """Base class for rejected inputs. ``params`` carries the offending location."""

    default_code = "invalid"

    def __init__(self, message, code=None, params=None):
        super().__init__(message, code=code or self.default_code, params=params)

    def __str__(self):
        return "; ".join(self.messages)


class MatrixParseError(AfcaviValidationError):
    default_code = "ragged_row"


class NonFiniteValueError(AfcaviValidationError):
    default_code = "non_finite"


class DimensionMismatchError(AfcaviValidationError):
    default_code = "dimension_mismatch"


class ConstantPredictorError(AfcaviValidationError):
    default_code = "constant_predictor"


class MetadataError(AfcaviValidationError):
    default_code = "invalid_metadata"


class BlockTableError(AfcaviValidationError):
    default_code = "invalid_block_table"


class EmptyBlockError(AfcaviValidationError):
    default_code = "empty_block"


class DosageError(AfcaviValidationError):
    default_code = "invalid_dosage"


class HyperparameterError(AfcaviValidationError):
    default_code = "invalid_hyperparameter"


class InfeasiblePriorError(AfcaviValidationError):
    default_code = "infeasible_prior"


class InfeasibleSpecError(AfcaviValidationError):
    default_code = "infeasible_spec"


class DegenerateHeritabilityError(AfcaviValidationError):
    default_code = "degenerate_heritability"


class UndefinedMetricError(AfcaviValidationError):
    default_code = "undefined_metric"


class OracleSizeError(AfcaviValidationError):
    default_code = "oracle_too_large"


class ConfigKeyError(AfcaviValidationError):
    default_code = "unknown_config_key"


class FitConfigError(AfcaviValidationError):
    default_code = "invalid_fit_config"


# ============================================================================
# RUNTIME ERRORS
# ============================================================================


class NumericalFailure(ArithmeticError):
    """A non-finite value appeared while updating coefficient ``snp`` of ``trait``."""

    def __init__(self, trait, snp, iteration):
        self.trait = trait
        self.snp = snp
        self.iteration = iteration
        super().__init__(
            f"Non-finite value for trait {trait}, predictor {snp} "
            f"at iteration {iteration}"
        )

    def __reduce__(self):
        return self.__class__, (self.trait, self.snp, self.iteration)


class BlockFailure(RuntimeError):
    """A block fit of the mapping pipeline failed."""

    def __init__(self, block_id, reason=""):
        self.block_id = block_id
        self.reason = reason
        message = f"Block {block_id} failed"
        super().__init__(f"{message}: {reason}" if reason else message)

    def __reduce__(self):
        return self.__class__, (self.block_id, self.reason)

"""LayerNorm in reference and decomposed forms, and the geometry of its image."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    ConvergenceError,
    DegenerateGainError,
    DegenerateInputError,
    LayerNormDomainError,
    LayerNormGeometryError,
    ResolutionError,
    ShapeError,
)
from .geometry import (  # noqa: E402
    EllipsoidModel,
    OrthogonalSubspace,
    brute_force_axes,
    orthogonal_subspace,
    principal_axes,
    quadratic_form,
    semi_axis_lengths_alt,
    surface_proximity,
)
from .layernorm import (  # noqa: E402
    LayerNormParams,
    StageTrace,
    layer_norm_decomposed,
    layer_norm_matrix_form,
    layer_norm_reference,
    project_and_normalize,
    trace_stages,
)

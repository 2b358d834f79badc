"""Image-source room simulation, regularized inverse filtering and dereverberation metrics."""

from .core import (
    CUBE_ABAR,
    CUBE_DIMS,
    MICROPHONES,
    PISTOLS,
    CoincidentSourceReceiver,
    DimensionMismatch,
    GeometryError,
    ImpulseResponse,
    InversionConfig,
    Point3,
    PointOutsideRoom,
    RateMismatch,
    RoomInvError,
    RoomModel,
    TransferMatrix,
    validate_geometry,
)
from .degrade import DegradationConfig, degrade, degrade_matrix
from .evaluation import (
    EvalConfig,
    EvalReport,
    decay_time,
    dereverberation_ratio,
    impulse_snr,
    local_mse,
    reflection_from_absorptivity,
    remainder_reverberation_time,
    sabine_absorptivity,
    schroeder_curve,
)
from .image_source import image_position, simulate, simulate_matrix, simulate_oracle
from .inversion import InverseFilterSet, apply, exp_window, invert, time_domain_ls_inverse_oracle

__version__ = "0.1.0"

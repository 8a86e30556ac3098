"""Channel characterization of indoor sub-THz links assisted by a static RIS.

The package synthesizes a quantized anomalous-reflection metasurface,
computes its scattering pattern with an array-factor model, reduces the
pattern to a handful of rays, evaluates the bistatic link budget and places
the surface inside an image-method room tracer.
"""

from .errors import (
    ConfigError,
    DomainError,
    EvanescentError,
    IntegrityError,
    InvalidArgumentError,
    RisChannelError,
)
from .metasurface import (
    C0,
    Codebook,
    RisDesign,
    UnitCellState,
    default_codebook,
    ideal_phase_profile,
    reference_design,
    quantize_profile,
    reflection_coefficients,
)
from .fields import (
    PlaneWave,
    RcsPattern,
    SphericalSource,
    far_field_distance,
    half_power_beamwidth,
    near_far_deviation,
    rcs_pattern,
    scattered_field_far,
    scattered_field_near,
)
from .rays import Ray, RayModel, beam_squint, extract_dominant_rays, ray_model_over_band
from .link import LinkBudgetInput, bistatic_received_power, free_space_path_gain
from .tracer import (
    ChannelImpulseResponse,
    PropagationPath,
    Room,
    Scene,
    channel_impulse_response,
    frequency_sweep,
    trace_paths,
)

__version__ = "0.1.0"

"""toonfuse: a desk-scale dual-path style generator that fuses face re-aging
with exemplar portrait stylization in latent space, plus the latent algebra,
inversion tooling, and CLI around it."""

__version__ = "0.1.0"

from .errors import (
    CheckpointFormatError,
    DimensionError,
    FormatError,
    LatentFormatError,
    NumericError,
    ToonFuseError,
    ValidationError,
)
from .latent import (
    AgeValue,
    ControlWeights,
    Convention,
    LatentWPlus,
    LatentZ,
    LatentZPlus,
    adaptive_target_age,
    adaptive_target_age_raw,
    default_m,
    fuse_latents,
    lerp_latents,
    make_control_weights,
)
from .synthesis import (
    ExtrinsicCodes,
    Generator,
    GeneratorConfig,
    ImageBuffer,
    dual_layer_styles,
    extrinsic_transform,
    init_generator,
    latent_gradient,
    map_z_to_w,
    reconstruction_loss,
    synthesize,
    synthesize_dual,
)
from .encoders import (
    AgeEstimator,
    EncoderSet,
    ProjectionReport,
    encode_age,
    encode_inv_wplus,
    encode_inv_zplus,
    estimate_age,
    init_encoders,
    project_latent,
    reaging_latent,
)
from .pipeline import (
    GridResult,
    ToonAgingRequest,
    dual_style_transfer,
    process_frame_dir,
    process_frames,
    random_generate,
    resolve_target_age,
    sam_reage,
    style_age_grid,
    sweep_c,
    sweep_m,
    toon_aging,
)
from .formats import (
    load_checkpoint,
    load_latent_wplus,
    load_latent_zplus,
    save_checkpoint,
    save_latent,
)

__all__ = [name for name in dir() if not name.startswith("_")]

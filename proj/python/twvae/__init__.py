"""Time-warping trajectory autoencoders."""

from ._twvae import (
    Model,
    aligned_rmse,
    dtw,
    load_csv,
    render_glyph,
    save_csv,
    slopes_from_logits,
    synth,
    warp,
    warp_inverse,
    warp_regularizer,
)

__all__ = [
    "Model",
    "aligned_rmse",
    "dtw",
    "load_csv",
    "render_glyph",
    "save_csv",
    "slopes_from_logits",
    "synth",
    "warp",
    "warp_inverse",
    "warp_regularizer",
]

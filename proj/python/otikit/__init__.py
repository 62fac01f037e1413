"""Object texture intensity toolkit: model-free image attackability measures.

The heavy lifting lives in the compiled extension; this package re-exports it.
"""

from ._core import (  # noqa: F401
    __version__,
    band_energy,
    boundary_distance_linear,
    fgsm,
    generate_corpus,
    iti,
    load_image,
    load_mask,
    minimal_epsilon,
    oar,
    oti,
    rank,
    save_planar_raw,
    seg_metrics,
    select_top_alpha,
    spearman,
    texture_map,
    train,
    ToyClassifier,
)

__all__ = [
    "__version__",
    "band_energy",
    "boundary_distance_linear",
    "fgsm",
    "generate_corpus",
    "iti",
    "load_image",
    "load_mask",
    "minimal_epsilon",
    "oar",
    "oti",
    "rank",
    "save_planar_raw",
    "seg_metrics",
    "select_top_alpha",
    "spearman",
    "texture_map",
    "train",
    "ToyClassifier",
]

"""Training-free model generation (MGE) and its evolutionary extension."""

from ._mge import (
    Dataset,
    MgeError,
    NetworkSpec,
    ParamSet,
    accept,
    cumulative_energy,
    dct2,
    evaluate_accuracy,
    evolve,
    fgsm,
    generate_pool,
    idct2,
    importance_mask,
    ks_statistic,
    load_model,
    make_blobs,
    make_lenet,
    make_mlp,
    robust_accuracy,
    sample_latent,
    save_model,
    set_workers,
    time_ratio,
    train,
    workers,
)

__all__ = [name for name in dir() if not name.startswith("_")]

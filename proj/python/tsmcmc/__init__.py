from ._core import (
    DiffDensity,
    TsmcmcError,
    acf,
    correct,
    evaluate,
    fit_diff_density,
    generate_raw,
    kurtosis,
    run,
    simulate_lorenz,
    skewness,
    verify_theory,
)

__all__ = [
    "DiffDensity",
    "TsmcmcError",
    "acf",
    "correct",
    "evaluate",
    "fit_diff_density",
    "generate_raw",
    "kurtosis",
    "run",
    "simulate_lorenz",
    "skewness",
    "verify_theory",
]

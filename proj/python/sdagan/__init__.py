"""Python bindings for the sdagan C++ core."""

from ._sdagan import (
    CheckpointError,
    Error,
    Translator,
    evaluate,
    fft2d,
    fid,
    gradcheck,
    high_freq_ratio,
    ifft2d,
    inception_score,
    matrix_sqrt,
    metrics_backend,
    read_ppm,
    spectral_profile,
    write_ppm,
)

__all__ = [
    "CheckpointError",
    "Error",
    "Translator",
    "evaluate",
    "fft2d",
    "fid",
    "gradcheck",
    "high_freq_ratio",
    "ifft2d",
    "inception_score",
    "matrix_sqrt",
    "metrics_backend",
    "read_ppm",
    "spectral_profile",
    "write_ppm",
]

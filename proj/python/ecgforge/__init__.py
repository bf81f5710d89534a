"""ECG myocardial-infarction classification pipeline."""

from ecgforge._ecgforge import (
    compute_metrics,
    crossval,
    downsample,
    fft_magnitudes,
    generate_synthetic,
    load_record,
    preset_names,
)

__all__ = [
    "compute_metrics",
    "crossval",
    "downsample",
    "fft_magnitudes",
    "generate_synthetic",
    "load_record",
    "preset_names",
]

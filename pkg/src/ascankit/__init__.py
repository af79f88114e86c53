"""A-scan denoising toolkit: adaptive scalar Kalman filtering with backward
smoothing, background subtraction, envelope reconstruction, and metrics."""

from .adapt import default_noise_window, default_q_grid, estimate_r, select_q
from .bench import (
    CORPUS_VERSION,
    GAIN_TOLERANCE_DB,
    CorpusEntry,
    ExpectedStats,
    bench_corpus,
    corpus_entry,
    format_manifest,
    measure_entry,
    parse_manifest,
)
from .baseline import (
    LOWPASS_TAPS,
    baseline_denoise,
    differential_subtract,
    lowpass,
    pipeline_denoise,
)
from .kalman import kf_filter, kf_step, random_walk_params
from .metrics import envelope, psnr, psnr_gain, reconstruct
from .model import (
    DataError,
    DegenerateCovarianceError,
    DegenerateModelError,
    EnvelopeImage,
    FilterParams,
    FilterTrajectory,
    InfinitePsnrError,
    NumericsError,
    QSelectionReport,
    RoiSpec,
    Trace,
    Volume,
    validate_volume,
)
from .rts import denoise_trace, rts_smooth
from .synth import (
    FRACTIONAL_BANDWIDTH,
    SynthSpec,
    SynthTrace,
    clean_samples,
    default_spec,
    synth_trace,
    synth_volume,
)

__version__ = "0.1.0"

__all__ = [
    "CORPUS_VERSION",
    "CorpusEntry",
    "DataError",
    "DegenerateCovarianceError",
    "DegenerateModelError",
    "EnvelopeImage",
    "ExpectedStats",
    "GAIN_TOLERANCE_DB",
    "FilterParams",
    "FilterTrajectory",
    "FRACTIONAL_BANDWIDTH",
    "InfinitePsnrError",
    "LOWPASS_TAPS",
    "NumericsError",
    "QSelectionReport",
    "RoiSpec",
    "SynthSpec",
    "SynthTrace",
    "Trace",
    "Volume",
    "baseline_denoise",
    "bench_corpus",
    "clean_samples",
    "corpus_entry",
    "default_noise_window",
    "default_q_grid",
    "default_spec",
    "denoise_trace",
    "differential_subtract",
    "envelope",
    "estimate_r",
    "format_manifest",
    "kf_filter",
    "kf_step",
    "lowpass",
    "measure_entry",
    "parse_manifest",
    "pipeline_denoise",
    "psnr",
    "psnr_gain",
    "random_walk_params",
    "reconstruct",
    "rts_smooth",
    "select_q",
    "synth_trace",
    "synth_volume",
    "validate_volume",
    "__version__",
]

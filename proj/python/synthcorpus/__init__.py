"""Python bindings for the synthcorpus C++ core."""

from ._core import (
    Error,
    InsufficientData,
    ValidationError,
    anova_two_way,
    bootstrap_eval,
    cer,
    derive_seed,
    edit_align,
    filter_ratios,
    icc2k,
    length_ratio,
    mix_at_snr,
    normalize,
    rebalance_questions,
    rms_dbfs,
    set_level,
    uniqueness_curve,
    wer,
)

__version__ = "0.1.0"

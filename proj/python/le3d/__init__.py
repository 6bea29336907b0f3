"""Python bindings for the le3d drift detection core."""

from ._le3d import (
    Adwin,
    AdwinConfig,
    CommandAck,
    ConfigError,
    ConflictError,
    DecodeError,
    Detector,
    DriftDecision,
    Emulator,
    Error,
    InputError,
    KsResult,
    Kswin,
    NotFoundError,
    PageHinkley,
    RoutingError,
    Sample,
    StaticThreshold,
    StreamProfile,
    decode_decision,
    decode_kind,
    decode_sample,
    encode_decision,
    encode_sample,
    fit_profile,
    kolmogorov_p_value,
    ks_one_sample,
    ks_two_sample,
    ks_two_sample_gap,
    payload_is_private,
    quorum_count,
    run_scenario,
)

__version__ = "0.1.0"

"""structmark: structural watermarking for flat Gaussian latents.

Payload bits ride in the within-group ordering of magnitude-binned blocks of
a key-deterministic Gaussian latent; a nonce-keyed global block permutation
decouples the payload from spatial placement. Detection matches groups
against a shared permutation codebook and thresholds the mean margin
statistic, with tail-extrapolated low-FPR calibration.
"""

from ._backend import backend_name
from .bench import SweepConfig, SweepRow, rows_to_csv, run_sweep
from .calibration import (CalibrationResult, GpdFit, TTestResult, calibrate,
                          fit_tail, null_statistics_random_latents,
                          null_statistics_wrong_key, solve_threshold, t_test,
                          threshold_bootstrap_band)
from .channel import ChannelSpec, apply_channel, parse_channel
from .codebook import Codebook, canonical_codebook, load_codebook, save_codebook
from .codec import (Embedder, Payload, WatermarkedLatent, canonical_latent,
                    embed, embed_latent, encode_groups, randomize_placement,
                    restore_placement)
from .detector import (REFERENCE_TAU, DetectionReport, Verifier, decode_group,
                       detect, group_score, margin)
from .errors import (CalibrationError, DataError, EmptyRequestError,
                     NotACodewordError, ParameterError, PayloadError,
                     StructmarkError)
from .keyspace import (DerivedKey, Nonce, SecretKey, gaussian_stream, kdf,
                       prp, read_key_file, write_key_file)
from .latentfile import LatentFile, read_latent, write_latent
from .template import (DEFAULT_PARAMS, IndexTemplate, TemplateParams,
                       block_values, build_template)

__version__ = "0.1.0"

__all__ = [
    "backend_name",
    "SweepConfig", "SweepRow", "rows_to_csv", "run_sweep",
    "CalibrationResult", "GpdFit", "TTestResult", "calibrate", "fit_tail",
    "null_statistics_random_latents", "null_statistics_wrong_key",
    "solve_threshold", "t_test", "threshold_bootstrap_band",
    "ChannelSpec", "apply_channel", "parse_channel",
    "Codebook", "canonical_codebook", "load_codebook", "save_codebook",
    "Embedder", "Payload", "WatermarkedLatent", "canonical_latent", "embed",
    "embed_latent", "randomize_placement", "restore_placement", "encode_groups",
    "REFERENCE_TAU", "DetectionReport", "Verifier", "decode_group", "detect",
    "group_score", "margin",
    "CalibrationError", "DataError", "EmptyRequestError", "NotACodewordError",
    "ParameterError", "PayloadError", "StructmarkError",
    "DerivedKey", "Nonce", "SecretKey", "gaussian_stream", "kdf", "prp",
    "read_key_file", "write_key_file",
    "LatentFile", "read_latent", "write_latent",
    "DEFAULT_PARAMS", "IndexTemplate", "TemplateParams", "block_values",
    "build_template",
]

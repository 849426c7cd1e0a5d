"""Deduplicating, compressing codebook storage for ensemble volume data.

The pipeline: partition every (run, timestep) volume into uniform blocks,
collapse duplicate blocks across the whole ensemble into a minimum
representative set, optionally compress the representatives (PCA or Haar
wavelet coding), and store everything in a single random-access codebook
file.  A streaming runtime reconstructs volumes under an exact
keep/load/discard working-set policy and computes cross-run agreement from
grids alone.
"""

from .codebook import CodebookReader, open_codebook, write_codebook
from .dedup import (
    BlockSpec,
    DedupResult,
    block_matrix,
    deduplicate,
    grid_dims,
    hash_block,
    partition_volume,
    reassemble_volume,
    round_vector,
)
from .errors import (
    BadMagicError,
    BlockDecodeError,
    BudgetExceededError,
    CodebookFormatError,
    EnsbookError,
    IndexBoundsError,
    ManifestError,
    TruncatedIndexError,
    VersionMismatchError,
    VolumeReadError,
)
from .metrics import QualityReport, compare_codebook, psnr
from .model import (
    EnsembleCoordinate,
    EnsembleManifest,
    EnsembleShape,
    load_manifest,
    read_volume,
    save_manifest,
    write_volume,
)
from .profiler import (
    ProfileEstimate,
    SampleRegion,
    estimate_codebook_size,
    estimate_vis_memory,
    profile,
    sample_regions,
)
from .reduction import (
    PcaModel,
    ReductionConfig,
    fit_pca,
    haar_forward,
    haar_inverse,
    pca_decode,
    pca_encode,
    quantize,
    dequantize,
    rle_huffman_decode,
    rle_huffman_encode,
    soft_threshold,
    universal_threshold,
)
from .runtime import AgreementGrid, WorkingSet, compute_agreement, diff_working_set
from .synth import generate_synthetic_ensemble

__version__ = "0.1.0"

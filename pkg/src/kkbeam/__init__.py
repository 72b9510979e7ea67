"""Compressed plane-wave ultrasound beamforming.

Element RF from coherent plane-wave compounding is decomposed on receive
into a small set of virtual plane-wave traces chosen on a vernier grid in
k-space; images are then formed with separable delay tables whose size no
longer scales with the element count. The package bundles the matching
synthetic-RF simulator, the conventional per-element beamformer for
reference, image quality metrics, and a staged throughput benchmark.
"""

from .bench import (
    STAGES,
    StageTimings,
    bench_csv_text,
    bench_das,
    bench_kk,
    format_bench_table,
    noise_volume,
    write_bench_csv,
)
from .beamform import (
    BeamformConfig,
    DelayLUTSet,
    build_das_luts,
    build_kk_luts,
    cache_model_entries,
    compound_coherent,
    compound_incoherent,
    das,
    direct_das,
    intensity,
    kk,
)
from .compress import compress, compression_ratio, guard_band_samples, shear_and_sum
from .config import PipelineConfig, dump_config
from .core import (
    AcquisitionParams,
    AnalyticRF,
    ComplexImage,
    CompressedRF,
    ImageGrid,
    IntensityImage,
    RFVolume,
    TransducerArray,
    element_positions,
    sample_index,
)
from .errors import (
    ConfigError,
    DataError,
    FileFormatError,
    GeometryError,
    GuardBandError,
    KKBeamError,
    MetricError,
    RoiError,
    WindowOverflowError,
)
from .metrics import Roi, gamma_match, gcnr, lateral_fwhm, peak_position
from .rffile import read_container, write_container
from .sampling import (
    ReceiveAngleSet,
    SupportSample,
    confocal_angles,
    explicit_angles,
    support,
    support_histogram,
    transmit_angles,
    uniform_vernier_angles,
)
from .simulate import (
    Phantom,
    Pulse,
    Scatterer,
    make_pulse,
    merge_phantoms,
    simulate_rf,
    speckle_phantom,
    wire_phantom,
)
from .spectral import (
    TraceSpectrum,
    analytic_signal,
    forward_spectrum,
    fractional_advance,
    inverse_spectrum,
    one_sided_weights,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

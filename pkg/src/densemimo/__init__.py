"""Dense planar arrays with mutual coupling and one-bit data converters."""

from .array_model import (
    ArrayGeometry,
    CouplingMatrix,
    Direction,
    as_coupling,
    coupling_from_impedance,
    coupling_matrix_closed_form,
    coupling_matrix_integral_oracle,
    effective_rank,
    element_effective_area,
    gamma_constant,
    gamma_quadrature,
    null_space_leakage,
    null_space_projector,
    steering_matrix,
    steering_vector,
)
from .channel import ChannelSet, MultipathSpec, multipath_channel, rayleigh_channels, substream
from .downlink import (
    DownlinkConfig,
    DownlinkReport,
    PrecoderState,
    alpha_exact,
    alpha_power_equalizer,
    alpha_uqn,
    dither_power_rule,
    dithered_transmit_covariance,
    downlink_asymptotic_loss,
    downlink_ideal_rate,
    downlink_one_bit_rate,
    downlink_rate_report,
    power_ratio_diagnostic,
    radiated_power,
    zf_precoder,
)
from .harness import SweepConfig, SweepRow, emit_csv, read_csv, run_downlink_sweep, run_uplink_sweep, validate_model
from .quantization import (
    QuantizedLinkStats,
    arcsine_covariance,
    bussgang_split,
    link_stats,
    one_bit_quantize,
    quantizer_monte_carlo,
    uqn_distortion,
)
from .uplink import (
    RateReport,
    UplinkConfig,
    total_noise_covariance,
    uplink_asymptotic_loss,
    uplink_ideal_rates,
    uplink_one_bit_rates,
    uplink_rate_report,
    uplink_uqn_rates_isotropic,
)

__version__ = "0.1.0"

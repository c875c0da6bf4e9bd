"""M-PAM over free-space optical IM/DD: link simulation and analytics."""

from .analytics import (
    SnrPoint,
    electrical_distance_from_Eb,
    genie_bound,
    genie_bound_mc,
    pam_bep,
    q_function,
)
from .channel import (
    ChannelModel,
    GammaGammaParams,
    PointingParams,
    bessel_k,
    pdf_composite,
    pdf_gamma_gamma,
    sample_block_fading,
    sample_gamma_gamma,
    sample_pointing,
)
from .constellation import (
    Constellation,
    GrayMap,
    gray_decode,
    gray_encode,
    min_distance_from_power,
    optical_energy_per_bit,
    power_delta_for_rate_scaling,
)
from .receivers import (
    DfbReceiverState,
    bootstrap_pilots,
    dfb_detect,
    glrt_amplitude_estimate,
    glrt_metric,
    mlsd_search,
    pcsi_detect,
    sss_update,
)
from .simcore import (
    BerEstimate,
    DfbSpec,
    MlsdSpec,
    PcsiSpec,
    SimConfig,
    run_ber_point,
    run_estimator_trace,
    run_sweep,
)

__version__ = "0.1.0"

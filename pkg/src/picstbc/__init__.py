"""Space-time block codes with partial interference cancellation group decoding."""

__version__ = "0.1.0"

from .codes import LinearDispersionCode, build_registry, get_code
from .constellation import Constellation, constellation_by_name, make_qam
from .criteria import (CriterionReport, check_full_rank, check_group_independence,
                       estimate_determinant_constant)
from .decoders import (DecodeResult, ao_decode, ao_sic_decode, decode, ml_decode, mmse_decode,
                       pic_decode, pic_sic_decode, zf_decode)
from .equivchan import EquivalentChannel, GroupingScheme, build_equivalent_channel
from .errors import (BudgetExceeded, DirectOnlyCode, GroupUndecodable, InsufficientData,
                     InvalidColumnType, NotPositiveDefinite, PicError, RankDeficient,
                     UnsupportedOrder)
from .simulator import (SimConfig, SimResult, estimate_coding_gain, estimate_diversity_order,
                        run_sweep, sample_channel, sweep_theta)

__all__ = [
    "BudgetExceeded", "Constellation", "CriterionReport", "DecodeResult", "DirectOnlyCode",
    "EquivalentChannel", "GroupUndecodable", "GroupingScheme", "InsufficientData",
    "InvalidColumnType", "LinearDispersionCode", "NotPositiveDefinite", "PicError",
    "RankDeficient", "SimConfig", "SimResult", "UnsupportedOrder", "ao_decode", "ao_sic_decode",
    "build_equivalent_channel", "build_registry", "check_full_rank", "check_group_independence",
    "constellation_by_name", "decode", "estimate_coding_gain", "estimate_diversity_order",
    "estimate_determinant_constant", "get_code", "make_qam", "ml_decode", "mmse_decode",
    "pic_decode", "pic_sic_decode", "run_sweep", "sample_channel", "sweep_theta", "zf_decode",
]

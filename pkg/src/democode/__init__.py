"""Democratic and near-democratic source coding for communication-constrained optimization."""

from .compressors import (RandomSparsify, Sign, StandardDither, TopK, compress,
                          democratic_wrap)
from .embeddings import (Embedding, EmbeddingMode, democratic_iterative, democratic_lp,
                         dynamic_range_bound, embed, near_democratic)
from .errors import DemocodeError
from .estimators import DemocraticEmbedder, DGDDEFRegressor, DQPSGDClassifier, DSCQuantizer
from .frames import (Frame, FrameKind, KashinParams, build_frame, default_kashin_params,
                     estimate_up_eta, kashin_constants)
from .optim import dgd_def, dq_psgd, scalar_dqgd_baseline, unquantized_gd
from .payload import QuantizedPayload
from .quantizers import (dsc_decode, dsc_encode, gain_shape_decode, gain_shape_quantize,
                         prop1_bound)

__version__ = "0.1.0"

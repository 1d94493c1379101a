"""Learning anomaly scoring functions by maximising two-sample linear rank
statistics, with Mass-Volume curve evaluation."""

from .datagen import Sample, RadLawParams
from .scoregen import ScoreGen, parse_phi
from .rankstats import ScoredPair, ranks, rank_sum, w_phi_stat, w_phi_proxy
from .mvcurve import MVCurve, mv_curve_mc, auc_mv, w_phi_from_mv
from .model import MlpScorer, TrainConfig, mlp_new, train
from .procedure import stage1_fit, stage2_rank, accuracy_at

__version__ = "0.1.0"

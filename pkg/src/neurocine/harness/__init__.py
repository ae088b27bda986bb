from .checkpoint import decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from .cv import CachedBands, FoldReport, fold_seed, mean_error, run_cv, run_fold
from .metrics import MetricsLog, fold_table, read_metrics
from .training import EvalResult, TrainConfig, TrainHistory, augment_noise, evaluate, train

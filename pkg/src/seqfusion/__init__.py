"""Classification of data with static and dynamic features.

Generative sequence models (Gaussian HMM, LSTM) turn time series into
likelihood-based features that a random forest combines with static
attributes.
"""

from .config import preset_hyperparams
from .core import Dataset, Sample, SplitPlan, Standardizer, make_folds, split_ab, split_train_test
from .datasets import load_dataset, save_dataset
from .exceptions import (
    ConfigError,
    DatasetLoadError,
    DegenerateFitError,
    DimensionError,
    LeakageError,
    SeqFusionError,
    StratificationError,
    TrainingError,
)
from .forest import Forest, rf_fit, rf_predict, rf_predict_proba
from .hmm import GaussianHMM, fit_gaussian_hmm, hmm_classifier_fit, hmm_classify, hmm_ratio
from .lstm import LstmNet, TrainConfig, lstm_classifier_fit, lstm_classify, lstm_fit, lstm_ratio
from .pipeline import (
    FEATURE_SOURCES,
    EvalReport,
    HyperParams,
    ModelId,
    enrich,
    evaluate_all,
    train_cv,
    train_traintest,
)
from .synthgen import ArmaSpec, gen_arma, gen_four_block_dataset, sweep

__version__ = "0.1.0"

"""Measure what language models capture about combinatorial optimization instances."""

from .eval import (PowersetStratifiedKFold, WinnerSet, mae, match_rates, set_aware_accuracy,
                   stratified_kfold, stratified_split, winning_set)
from .features import FeatureExtractor, FeatureSpec, FeatureVector, extract_features, feature_catalog
from .instances import (BinPackingInstance, GraphInstance, InstanceFormatError, JobShopInstance,
                        KnapsackInstance, PerformanceTable, ProblemKind, load_performance_table,
                        parse_instance)
from .pooling import ActivationPooler, PoolingStrategy, pool
from .render import (Representation, render, render_code_like, render_natural_language,
                     render_standard)

__version__ = "0.1.0"

from .elasticnet import (CvLambdaResult, PenalizedPath, PenaltyConfig,
                         ZERO_COEF_TOL, cv_select_lambda, fit_penalized_path,
                         kkt_violation, lambda_max)
from .forest import (ForestConfig, ForestModel, bootstrap_indices,
                     fit_random_forest, tree_seeds)
from .logistic import (LogisticConfig, LogisticModel, binomial_deviance,
                       fit_logistic, logistic_nll_grad)
from .tools import (ForestTool, LogisticTool, PenalizedTool, Predictor,
                    predict_proba)

__all__ = [
    "CvLambdaResult", "PenalizedPath", "PenaltyConfig", "ZERO_COEF_TOL",
    "cv_select_lambda", "fit_penalized_path", "kkt_violation", "lambda_max",
    "ForestConfig", "ForestModel", "bootstrap_indices", "fit_random_forest",
    "tree_seeds", "LogisticConfig", "LogisticModel", "binomial_deviance",
    "fit_logistic", "logistic_nll_grad", "ForestTool", "LogisticTool",
    "PenalizedTool", "Predictor", "predict_proba",
]

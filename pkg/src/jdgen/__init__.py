"""Score-based generative sampling with a jump-diffusion forward process.

The forward noising superimposes Poisson-arrival Laplace-distributed jumps
on Gaussian noise under an Ornstein-Uhlenbeck contraction; the generative
direction runs exponential-integrator discretizations of the matching
probability-flow ODE or reverse SDE, driven by a trained network that
approximates the generalized score of the noised marginals.

Public names are imported lazily so that thread caps (JDGEN_THREADS, or the
CLI's --strict) can take effect before numpy/numba load.
"""

import importlib
import os

__version__ = "0.1.0"

_cap = os.environ.get("JDGEN_THREADS")
if _cap:
    for _var in (
        "OPENBLAS_NUM_THREADS",
        "OMP_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
        "NUMBA_NUM_THREADS",
    ):
        os.environ.setdefault(_var, _cap)

_EXPORTS = {
    "RunConfig": "config",
    "EvalConfig": "config",
    "load_config": "config",
    "dump_config": "config",
    "JdgenError": "errors",
    "ConfigError": "errors",
    "NumericsError": "errors",
    "TrainingDiverged": "errors",
    "GenerationAborted": "errors",
    "TableMismatch": "errors",
    "MetricsReport": "evaluation",
    "empirical_quantile": "evaluation",
    "msle": "evaluation",
    "msle_components": "evaluation",
    "make_target_dataset": "evaluation",
    "run_experiment": "evaluation",
    "training_dataset": "evaluation",
    "GenerationResult": "generation",
    "ode_sample": "generation",
    "sde_sample": "generation",
    "KernelTable": "kernels",
    "g1_hat": "kernels",
    "g1": "kernels",
    "g2": "kernels",
    "tabulate": "kernels",
    "interp": "kernels",
    "interp_batch": "kernels",
    "conditional_score": "kernels",
    "conditional_score_batch": "kernels",
    "closed_form_score_stable": "kernels",
    "save_table": "kernels",
    "load_table": "kernels",
    "config_fingerprint": "kernels",
    "ModelConfig": "levy_noise",
    "phi_laplace": "levy_noise",
    "psi": "levy_noise",
    "psi_over_k2": "levy_noise",
    "sample_gl": "levy_noise",
    "sample_increment": "levy_noise",
    "sample_increments": "levy_noise",
    "sample_stationary": "levy_noise",
    "sample_alpha_stable_isotropic": "levy_noise",
    "ScoreNetParams": "score_model",
    "OptimizerState": "score_model",
    "init_params": "score_model",
    "init_optimizer": "score_model",
    "forward": "score_model",
    "loss_and_grad": "score_model",
    "optimizer_step": "score_model",
    "save_params": "score_model",
    "load_params": "score_model",
    "QuadratureRule": "special_math",
    "composite_gauss_legendre": "special_math",
    "integrate": "special_math",
    "bessel_j": "special_math",
    "make_rng": "special_math",
    "derive_rng": "special_math",
    "sample_gamma": "special_math",
    "sample_normal_vec": "special_math",
    "TrainConfig": "training",
    "TrainHistory": "training",
    "sample_forward_state": "training",
    "dsm_minibatch": "training",
    "train": "training",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    try:
        module = _EXPORTS[name]
    except KeyError:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}") from None
    value = getattr(importlib.import_module(f".{module}", __name__), name)
    globals()[name] = value
    return value


def __dir__():
    return __all__

"""Kernelized preference-optimization losses, divergences, kernel mixtures and diagnostics."""

from .divergences import (
    KL,
    Bhattacharyya,
    FDiv,
    Hellinger,
    JensenShannon,
    Renyi,
    Wasserstein1D,
    divergence,
    divergence_grad,
    divergence_regularizer,
)
from .errors import PrefKError
from .kernels import RBF, Identity, MahalanobisScalar, MahalanobisVector, Polynomial, Spectral
from .loss import ObjectiveConfig, Params, TripletSignals, full_objective, grad_check, kernelized_hybrid_loss
from .mixture import HMK, FlatMixture, HMKState, MixtureState, collapse_detect, mixture_step
from .policy import PreferenceRecord, ToyPolicy
from .train import Sizes, TrainConfig, gen_synthetic, train_run

__version__ = "0.1.0"

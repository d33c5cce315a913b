"""Toy CNN engine with split execution, profiling, and augmented training."""

from .data import CLASS_NAMES, generate_dataset, load_dataset, save_dataset
from .network import (LayerSpec, NetworkFormatError, NetworkSpec, backward,
                      forward, infer_shapes, load_network, load_network_file,
                      reference_network, save_network, save_network_file,
                      sgd_step)
from .profile import LayerProfile, choose_split, layer_profile, split_cost
from .split_exec import (MODE_FLOAT, MODE_LOSSY, MODE_QUANT_LOSSLESS,
                         RawTransfer, SplitPlan, evaluate_accuracy,
                         evaluate_plan, forward_split, rd_sweep,
                         transfer_features)
from .training import DEFAULT_QP_MENU, LOSSLESS, train, train_augmented

__all__ = [
    "CLASS_NAMES", "generate_dataset", "load_dataset", "save_dataset",
    "LayerSpec", "NetworkSpec", "NetworkFormatError", "backward", "forward",
    "infer_shapes", "load_network", "load_network_file", "reference_network",
    "save_network", "save_network_file", "sgd_step",
    "LayerProfile", "choose_split", "layer_profile", "split_cost",
    "MODE_FLOAT", "MODE_LOSSY", "MODE_QUANT_LOSSLESS", "RawTransfer",
    "SplitPlan", "evaluate_accuracy", "evaluate_plan", "forward_split",
    "rd_sweep", "transfer_features",
    "DEFAULT_QP_MENU", "LOSSLESS", "train", "train_augmented",
]

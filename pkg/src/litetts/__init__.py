"""Lightweight PPG-conditioned VITS-style TTS: inference core and cost analyzer."""
from .config import ModelConfig, load_config, micro_config
from .fileio import WeightStore, init_weights, load_weights, save_weights

__version__ = "0.1.0"

__all__ = ["ModelConfig", "load_config", "micro_config", "WeightStore", "init_weights",
           "load_weights", "save_weights"]

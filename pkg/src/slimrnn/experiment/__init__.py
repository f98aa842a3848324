from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import ExperimentConfig
from .runs import run_compare, run_training

"""Neural operators over time histories and their training loop."""

from hazardops.operators.checkpoint import load_checkpoint, read_checkpoint, save_checkpoint
from hazardops.operators.deeponet import DeepONet, deeponet_forward
from hazardops.operators.fno import FNO, FourierLayer, fno_forward
from hazardops.operators.hybrid import DeepFNOnet, deepfnonet_train
from hazardops.operators.losses import SAWeights, lambda_ascent_step, sa_loss, standard_loss
from hazardops.operators.normalization import Standardizer
from hazardops.operators.training import TrainResult, TrainSchedule, train

__all__ = [
    "DeepFNOnet", "DeepONet", "FNO", "FourierLayer", "SAWeights", "Standardizer", "TrainResult",
    "TrainSchedule", "deepfnonet_train", "deeponet_forward", "fno_forward", "lambda_ascent_step",
    "load_checkpoint", "read_checkpoint", "sa_loss", "save_checkpoint", "standard_loss", "train",
]

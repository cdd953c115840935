"""Training loop, fine-tuning, and checkpoint persistence."""
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .trainer import EarlyStopper, TrainRun, evaluate_loss, finetune, train, train_steps

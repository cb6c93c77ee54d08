"""Training, evaluation, persistence and GFA ingestion."""

from .evaluation import EvalConfig, EvalReport, evaluate, evaluate_scales
from .gfa import GfaGraph, parse_gfa, read_gfa, write_gfa
from .persistence import export_report, load_checkpoint, load_dataset, save_checkpoint, save_dataset
from .training import TrainConfig, TrainLog, train

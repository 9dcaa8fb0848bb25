"""semlink: learned image transmission over simulated AWGN / Rayleigh links,
with a Gray-coded 256-QAM baseline at equal symbol rate."""

from . import channel, codec, dataset, harness, metrics, qam, training
from .channel import ChannelSpec, ReceivedBlock, SymbolBlock, normalize_power, snr_to_noise_var
from .codec import CodecConfig, CodecModel, init_params, param_count
from .dataset import Dataset, Split, load_cifar10, sample_images, to_bytes, to_float
from .estimators import DnnTransceiver, Qam256Transceiver
from .harness import EvalRecord, run_sweep, write_csv
from .metrics import aggregate, psnr, ssim
from .qam import demap_qam256, map_qam256, ser_closed_form, transmit_qam
from .training import Checkpoint, TrainSchedule, load_checkpoint, save_checkpoint, train

__version__ = "0.1.0"

__all__ = [
    "ChannelSpec",
    "ReceivedBlock",
    "SymbolBlock",
    "normalize_power",
    "snr_to_noise_var",
    "CodecConfig",
    "CodecModel",
    "init_params",
    "param_count",
    "Dataset",
    "Split",
    "load_cifar10",
    "sample_images",
    "to_bytes",
    "to_float",
    "DnnTransceiver",
    "Qam256Transceiver",
    "EvalRecord",
    "run_sweep",
    "write_csv",
    "aggregate",
    "psnr",
    "ssim",
    "demap_qam256",
    "map_qam256",
    "ser_closed_form",
    "transmit_qam",
    "Checkpoint",
    "TrainSchedule",
    "load_checkpoint",
    "save_checkpoint",
    "train",
    "channel",
    "codec",
    "dataset",
    "harness",
    "metrics",
    "qam",
    "training",
]

"""Estimator-style wrappers so both transmission systems compose with the
scikit-learn ecosystem: ``fit`` trains (a no-op for the QAM baseline),
``transform`` sends images through the configured channel and returns the
reconstructions, ``score`` reports mean SSIM against the inputs.

Images are accepted as (N, 32, 32, 3) arrays or flat (N, 3072) rows, byte-
or unit-interval float-valued.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import harness, metrics, training
from .codec import CodecConfig
from .dataset import Dataset, Split, to_bytes, to_float
from .seeding import derive_seed
from .validation import as_image_batch, check_channel_model, check_snr_db


def _coerce_u8(X, name="X"):
    arr = np.asarray(X)
    if np.issubdtype(arr.dtype, np.floating):
        return to_bytes(as_image_batch(arr, np.float64, name))
    return as_image_batch(arr, np.uint8, name)


class Qam256Transceiver(BaseEstimator, TransformerMixin):
    """Stateless Gray-coded 256-QAM link over the simulated channel."""

    def __init__(self, channel="awgn", snr_db=math.inf, seed=0):
        self.channel = channel
        self.snr_db = snr_db
        self.seed = seed

    def fit(self, X=None, y=None):
        check_channel_model(self.channel)
        check_snr_db(self.snr_db)
        return self

    def transform(self, X):
        """Transmit byte images; returns reconstructions as (N, 32, 32, 3) uint8."""
        self.fit()
        imgs = _coerce_u8(X)
        seeds = [derive_seed(self.seed, "estimator-qam", i) for i in range(len(imgs))]
        return harness.transmit_qam_images(imgs, self.channel, float(self.snr_db), seeds)

    def score(self, X, y=None):
        imgs = _coerce_u8(X)
        recon = self.transform(imgs)
        scores = metrics.ssim_batch(to_float(imgs).astype(np.float64), to_float(recon).astype(np.float64))
        return float(scores.mean())


class DnnTransceiver(BaseEstimator, TransformerMixin):
    """Trainable codec link: fit runs the two-phase curriculum on the given
    images, transform reconstructs through the configured channel."""

    def __init__(
        self,
        config=None,
        schedule=None,
        channel="rayleigh",
        snr_db=15.0,
        seed=0,
        deterministic=False,
    ):
        self.config = config
        self.schedule = schedule
        self.channel = channel
        self.snr_db = snr_db
        self.seed = seed
        self.deterministic = deterministic

    def _config(self):
        return self.config if self.config is not None else CodecConfig()

    def _schedule(self):
        if self.schedule is not None:
            return self.schedule
        return training.TrainSchedule(seed=self.seed)

    def fit(self, X, y=None):
        imgs = _coerce_u8(X)
        labels = np.zeros(len(imgs), dtype=np.uint8)
        ds = Dataset(train=Split(imgs, labels), test=Split(imgs, labels))
        self.model_, self.history_ = training.train(
            ds, self._config(), self._schedule(), deterministic=self.deterministic
        )
        return self

    @classmethod
    def from_checkpoint(cls, path, channel="rayleigh", snr_db=15.0, seed=0):
        """Fitted transceiver backed by a stored checkpoint."""
        import torch

        ckpt = training.load_checkpoint(path)
        est = cls(config=ckpt.config, channel=channel, snr_db=snr_db, seed=seed)
        est.model_ = training.model_from_checkpoint(ckpt)
        est.model_.eval()
        est.model_.to(memory_format=torch.channels_last)
        est.history_ = []
        return est

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("DnnTransceiver is not fitted; call fit or from_checkpoint")

    def transform(self, X):
        """Transmit images; returns float reconstructions in [0, 1], (N, 32, 32, 3)."""
        self._check_fitted()
        check_channel_model(self.channel)
        imgs = _coerce_u8(X)
        seeds = [derive_seed(self.seed, "estimator-dnn", i) for i in range(len(imgs))]
        return harness.transmit_dnn_images(self.model_, imgs, self.channel, float(self.snr_db), seeds)

    def score(self, X, y=None):
        imgs = _coerce_u8(X)
        recon = self.transform(imgs).astype(np.float64)
        return float(metrics.ssim_batch(to_float(imgs).astype(np.float64), recon).mean())

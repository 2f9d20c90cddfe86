"""Multi-frame orientation tracking with a periodically reset template.

Tracks the cumulative rotation R_0j of a frame stream by aligning each frame
against a template frame that is replaced every n_track frames. Each
alignment is warm-started from the previous frame's result. On tracking
failure the last relative rotation is frozen and a template reset is forced,
so the stream never aborts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Intrinsics
from .lk import (DegenerateTemplateError, InsufficientOverlapError, Template,
                 TrackerConfig, build_template, track)


@dataclass
class FrameDiagnostics:
    iterations: int = 0
    final_loss: float = 0.0
    converged: bool = True
    tracking_lost: bool = False
    template_reset: bool = False


@dataclass
class OrientationTracker:
    """State machine consuming one ordered frame stream."""

    intrinsics: Intrinsics
    n_track: int = 5
    config: TrackerConfig = field(default_factory=TrackerConfig)

    template: Template | None = field(default=None, init=False)
    R_0k: np.ndarray = field(default_factory=lambda: np.eye(3), init=False)
    R_jk: np.ndarray = field(default_factory=lambda: np.eye(3), init=False)
    frame_index: int = field(default=0, init=False)

    def process_frame(self, img_gray: np.ndarray):
        """Consume the next gray frame; returns (R_0j, FrameDiagnostics).

        R_jk is kept in the template-to-current sense returned by the
        aligner; the cumulative estimate composes its transpose:
        R_0j = R_0k @ R_jk^T.
        """
        diag = FrameDiagnostics()
        if self.template is None:
            R_0j = self._seed_template(img_gray, diag)
        else:
            try:
                result = track(self.template, img_gray, self.R_jk, self.config)
                self.R_jk = result.rotation
                diag.iterations = result.iterations
                diag.final_loss = result.final_loss
                diag.converged = result.converged
            except InsufficientOverlapError:
                diag.tracking_lost = True
            R_0j = self.R_0k @ self.R_jk.T
            if diag.tracking_lost:
                self._reset_template(img_gray, R_0j, diag)
        if (not diag.template_reset
                and self.frame_index % self.n_track == self.n_track - 1):
            self._reset_template(img_gray, R_0j, diag)
        self.frame_index += 1
        return R_0j, diag

    def _seed_template(self, img_gray, diag):
        R_0j = self.R_0k @ self.R_jk.T
        self._reset_template(img_gray, R_0j, diag)
        return R_0j

    def _reset_template(self, img_gray, R_0j, diag):
        try:
            self.template = build_template(img_gray, self.intrinsics)
            self.R_0k = R_0j
            self.R_jk = np.eye(3)
        except DegenerateTemplateError:
            # Keep whatever template we had; retry on a later frame.
            self.template = None
            diag.tracking_lost = True
        diag.template_reset = True

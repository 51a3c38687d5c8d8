"""Minimal deterministic SVG figures.

Hand-rolled on purpose: the output must be byte-identical across reruns and
machines, which rules out plotting libraries that embed timestamps, library
versions, or font metrics. Two kinds are supported: 2-D trajectory overlays
and per-step violation curves.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

__all__ = ["emit_figure", "trajectory_svg", "violation_svg"]

_WIDTH = 640
_HEIGHT = 480
_MARGIN = 48
_PALETTE = ("#1f6f8b", "#cc5a49", "#5a9367", "#8b5a9e", "#c2903f",
            "#4a4a6a", "#a05274", "#4f8a8b")

_HEADER = ('<?xml version="1.0" encoding="UTF-8"?>\n'
           '<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
           'viewBox="0 0 {w} {h}">\n')


def _axis_bounds(lo: float, hi: float) -> tuple[float, float]:
    if hi <= lo:
        pad = 0.5 * max(1.0, abs(lo))
        return lo - pad, lo + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


class _Canvas:
    def __init__(self, x_range, y_range):
        self.x_lo, self.x_hi = _axis_bounds(*x_range)
        self.y_lo, self.y_hi = _axis_bounds(*y_range)
        self.parts = [_HEADER.format(w=_WIDTH, h=_HEIGHT)]
        self.parts.append(f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="#ffffff"/>\n')
        self.parts.append(
            f'<rect x="{_MARGIN}" y="{_MARGIN}" width="{_WIDTH - 2 * _MARGIN}" '
            f'height="{_HEIGHT - 2 * _MARGIN}" fill="none" stroke="#888888"/>\n')

    def to_px(self, x: float, y: float) -> tuple[float, float]:
        fx = (x - self.x_lo) / (self.x_hi - self.x_lo)
        fy = (y - self.y_lo) / (self.y_hi - self.y_lo)
        return (_MARGIN + fx * (_WIDTH - 2 * _MARGIN),
                _HEIGHT - _MARGIN - fy * (_HEIGHT - 2 * _MARGIN))

    def polyline(self, xs, ys, color: str, width: float = 1.5, dash: str | None = None):
        pts = " ".join("{:.3f},{:.3f}".format(*self.to_px(x, y))
                       for x, y in zip(xs, ys))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                          f'stroke-width="{width}"{dash_attr}/>\n')

    def circle(self, x: float, y: float, color: str, r: float = 3.0):
        px, py = self.to_px(x, y)
        self.parts.append(f'<circle cx="{px:.3f}" cy="{py:.3f}" r="{r}" fill="{color}"/>\n')

    def desc(self, text: str):
        self.parts.append(f"<desc>{text}</desc>\n")

    def render(self) -> str:
        return "".join(self.parts) + "</svg>\n"


def trajectory_svg(records) -> str:
    """Overlay of 2-D sampling trajectories, one polyline per record."""
    if not records:
        raise ValueError("no records to draw")
    for r in records:
        if r.states.shape[1] != 2:
            raise ConfigError(
                f"trajectory figures need 2-D states, got dimension {r.states.shape[1]}")
    all_states = np.concatenate([r.states for r in records])
    canvas = _Canvas((all_states[:, 0].min(), all_states[:, 0].max()),
                     (all_states[:, 1].min(), all_states[:, 1].max()))
    for i, r in enumerate(records):
        color = _PALETTE[i % len(_PALETTE)]
        canvas.polyline(r.states[:, 0], r.states[:, 1], color)
        canvas.circle(r.states[0, 0], r.states[0, 1], "#bbbbbb")
        canvas.circle(r.states[-1, 0], r.states[-1, 1], color)
    return canvas.render()


def violation_svg(records) -> str:
    """Per-step max-violation curves on a shared step axis.

    The raw values are embedded verbatim in <desc> elements so the figure is
    also a lossless record of the data it shows.
    """
    if not records:
        raise ValueError("no records to draw")
    n_steps = max(r.per_step_violation.size for r in records)
    top = max(float(r.per_step_violation.max()) for r in records)
    canvas = _Canvas((0.0, float(n_steps)), (0.0, top))
    for i, r in enumerate(records):
        vals = r.per_step_violation
        canvas.desc("violations[{}]: {}".format(
            i, ",".join(repr(float(v)) for v in vals)))
        canvas.polyline(np.arange(1, vals.size + 1), vals, _PALETTE[i % len(_PALETTE)])
    return canvas.render()


def emit_figure(records, kind: str, path) -> None:
    """Write a standalone SVG for a batch of sample records.

    Raises ValueError before touching the filesystem when the batch is empty,
    and ConfigError when trajectory_2d is requested for non-2-D states.
    """
    if kind == "trajectory_2d":
        text = trajectory_svg(records)
    elif kind == "violation_curve":
        text = violation_svg(records)
    else:
        raise ConfigError(f"unknown figure kind {kind!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)

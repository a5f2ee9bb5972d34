"""Egocentric observation rendering.

Each player sees a 15x15 RGB window centered on itself, rotated so the
direction it faces points up (optionally axis-aligned instead).  Marks are
viewer-dependent: a marked agent is drawn in the marked color for everyone
except itself; the window's center pixel always shows the plain agent color.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigError, EnvConfig
from .env import (
    IDX_AGENT,
    IDX_BERRY0,
    IDX_EMPTY,
    IDX_MARKED,
    IDX_OOB,
    OBS_PAD,
    OBS_WINDOW,
    ForageEnv,
)

COLOR_OOB = (0.0, 0.0, 0.0)  # padding outside the grid is black
COLOR_EMPTY = (0.12, 0.12, 0.12)
COLOR_AGENT = (1.0, 1.0, 1.0)
COLOR_MARKED = (0.55, 0.55, 0.55)


def _berry_colors(n: int) -> list[tuple[float, float, float]]:
    # Fully saturated hue wheel: distinct from the gray/white special colors.
    return [colorsys.hsv_to_rgb(k / n, 1.0, 1.0) for k in range(n)]


@dataclass
class Palette:
    """Color table mapping entity indices to RGB in [0, 1].

    Layout matches the env's painted grid: 0 empty, 1 out-of-bounds, 2 agent,
    3 marked agent, 4+k berry type k.
    """

    num_berry_types: int
    lut: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        colors = [COLOR_EMPTY, COLOR_OOB, COLOR_AGENT, COLOR_MARKED]
        colors += _berry_colors(self.num_berry_types)
        lut = np.asarray(colors, dtype=np.float32)
        seen = {tuple(np.round(c, 6)) for c in lut}
        if len(seen) != len(lut):
            raise ConfigError(f"palette colors collide for {self.num_berry_types} berry types")
        self.lut = lut

    @classmethod
    def for_config(cls, config: EnvConfig) -> "Palette":
        return cls(num_berry_types=config.num_berry_types)


def render_index_window(env: ForageEnv, viewer: int, axis_aligned: bool = False) -> np.ndarray:
    """The 15x15 window of palette indices for one viewer.

    This is the compact form the rollout pipeline stores; RGB conversion is a
    LUT lookup.  The viewer's own cell is forced to the plain agent color, so
    its own mark is invisible to it.
    """
    if not (0 <= viewer < env.n_players):
        raise ValueError(f"no such player {viewer}")
    c = env._pos[viewer]
    y, x = divmod(c, env._W)
    win = env._grid[y: y + OBS_WINDOW, x: x + OBS_WINDOW]
    if axis_aligned:
        win = win.copy()
    else:
        win = np.rot90(win, k=env._orient[viewer]).copy()
    win[OBS_PAD, OBS_PAD] = IDX_AGENT
    return win


def render_observation(
    env: ForageEnv, viewer: int, palette: Palette, axis_aligned: bool = False
) -> np.ndarray:
    """The 15x15x3 RGB observation for one viewer, values in [0, 1]."""
    return palette.lut[render_index_window(env, viewer, axis_aligned=axis_aligned)]


def write_ppm(path: str | Path, rgb: np.ndarray) -> None:
    """Dump one observation (or any HxWx3 float image) as binary PPM."""
    data = (np.clip(rgb, 0.0, 1.0) * 255).astype(np.uint8)
    h, w, _ = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P6 {w} {h} 255\n".encode())
        fh.write(data.tobytes())


class FrameDumper:
    """Flag-gated per-step frame dump for debugging rollouts."""

    def __init__(self, out_dir: str | Path, palette: Palette, viewer: int = 0,
                 axis_aligned: bool = False):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.palette = palette
        self.viewer = viewer
        self.axis_aligned = axis_aligned

    def dump(self, env: ForageEnv) -> Path:
        obs = render_observation(env, self.viewer, self.palette, self.axis_aligned)
        path = self.out_dir / f"t{env.timestep:05d}_p{self.viewer}.ppm"
        write_ppm(path, obs)
        return path

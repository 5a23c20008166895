"""Message encoding shared by the TCP/stdio services and their clients.

Everything on the wire is one JSON object per line, UTF-8, newline
terminated, with compact separators and keys in fixed emission order so a
recorded transcript replays byte-identically.

Sensor grids travel run-length encoded: the in-disk cells of the square grid
are enumerated row-major, and each channel is the list of maximal runs of
ones as ``[start, length]`` pairs over that enumeration. The disk mask is a
pure function of the grid shape, so both endpoints derive it independently.
"""

from __future__ import annotations

import json
from typing import Sequence

import numpy as np

__all__ = ["WireError", "dumps", "loads", "disk_mask", "disk_cell_count",
           "encode_grid", "decode_grid"]


class WireError(Exception):
    """Malformed frame or payload."""


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not wire-serializable: {type(obj).__name__}")


def dumps(message: dict) -> str:
    """Canonical one-line frame (no trailing newline)."""
    return json.dumps(message, separators=(",", ":"), default=_json_default)


def loads(line: str) -> dict:
    try:
        message = json.loads(line)
    except json.JSONDecodeError as exc:
        raise WireError(f"bad json: {exc}") from exc
    if not isinstance(message, dict):
        raise WireError("frame must be a JSON object")
    return message


_mask_cache: dict[int, np.ndarray] = {}


def disk_mask(grid_size: int) -> np.ndarray:
    """Boolean (S, S) mask of cells whose centre lies within the sensor disk.

    Matches the simulator's mask: cell offsets are integer multiples of the
    resolution and the radius is half the grid extent, so the mask depends
    on the grid size alone.
    """
    mask = _mask_cache.get(grid_size)
    if mask is None:
        k = grid_size // 2
        off = np.arange(grid_size) - k
        mask = (off[:, None] ** 2 + off[None, :] ** 2) <= k * k
        _mask_cache[grid_size] = mask
    return mask


def disk_cell_count(grid_size: int) -> int:
    return int(disk_mask(grid_size).sum())


def encode_grid(grid: np.ndarray) -> list[list[list[int]]]:
    """Per-channel [start, len] runs of ones over row-major in-disk cells."""
    size, size2, channels = grid.shape
    if size != size2:
        raise WireError("grid must be square")
    mask = disk_mask(size)
    flat = grid[mask]  # (n_cells, channels), row-major order
    out: list[list[list[int]]] = []
    for c in range(channels):
        vals = flat[:, c] != 0
        # run boundaries via the discrete derivative of the 0/1 sequence
        padded = np.diff(np.concatenate(([0], vals.view(np.uint8), [0])))
        starts = np.flatnonzero(padded == 1)
        ends = np.flatnonzero(padded == -1)
        out.append([[int(s), int(e - s)] for s, e in zip(starts, ends)])
    return out


def decode_grid(runs: Sequence[Sequence[Sequence[int]]], grid_size: int,
                channels: int = 4) -> np.ndarray:
    """Inverse of :func:`encode_grid`; cells outside the disk stay zero."""
    if len(runs) != channels:
        raise WireError(f"expected {channels} channels, got {len(runs)}")
    mask = disk_mask(grid_size)
    n_cells = int(mask.sum())
    grid = np.zeros((grid_size, grid_size, channels), dtype=np.uint8)
    rows, cols = np.nonzero(mask)
    for c, channel_runs in enumerate(runs):
        for run in channel_runs:
            if len(run) != 2:
                raise WireError("run must be [start, len]")
            start, length = int(run[0]), int(run[1])
            if length <= 0 or start < 0 or start + length > n_cells:
                raise WireError("run out of bounds")
            sel = slice(start, start + length)
            grid[rows[sel], cols[sel], c] = 1
    return grid

"""Regenerate the sample files in ``fixtures/``: ``python -m roughsig.fixtures [DIR]``."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from .io import write_path_csv
from .path_gen import GenSpec, sample_bm
from .pvar_sewing import PathSamples


def spiral(n: int = 5, rows: int = 100_000) -> PathSamples:
    """t -> (cos n^2 t, sin n^2 t) / n on [0, 2 pi]."""
    t = np.linspace(0.0, 2 * np.pi, rows)
    return PathSamples(t, np.column_stack([np.cos(n * n * t), np.sin(n * n * t)]) / n)


def l_path() -> PathSamples:
    return PathSamples([0.0, 1.0, 2.0], [[0.0, 0.0], [1.0, 0.0], [1.0, 2.0]])


def staircase() -> PathSamples:
    return PathSamples([0.0, 1.0, 2.0, 3.0], [[0.0], [1.0], [0.0], [1.0]])


def write_all(root) -> list[Path]:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    out = []
    for name, path, fmt in [
        ("spiral.csv", spiral(), "%.12g"),
        ("l_path.csv", l_path(), "%.17g"),
        ("staircase.csv", staircase(), "%.17g"),
    ]:
        write_path_csv(root / name, path, fmt)
        out.append(root / name)
    ens = root / "bm_ensemble"
    ens.mkdir(exist_ok=True)
    spec = GenSpec(d=2, n=256, T=1.0, seed=20240101, kind="bm")
    for k in range(16):
        write_path_csv(ens / f"path_{k:04d}.csv", sample_bm(spec.member(k)))
        out.append(ens / f"path_{k:04d}.csv")
    return out


if __name__ == "__main__":
    write_all(sys.argv[1] if len(sys.argv) > 1 else "fixtures")

#!/usr/bin/env python3
"""Regenerate data/synthetic_housing.csv.

A monthly panel shaped like the housing application: a trending, seasonal
level series (starts), eight permit-like level series that lead it, and a
slowly drifting rate.  Deterministic; the committed CSV is this script's
output at the default seed.
"""
from __future__ import annotations

import csv
import pathlib

import numpy as np

SEED = 20221027
N = 276  # 1990-01 .. 2012-12
P_PERMITS = 8


def build(seed: int = SEED):
    rng = np.random.default_rng(seed)
    months = np.arange(N)
    season = 0.18 * np.sin(2 * np.pi * months / 12.0) \
        + 0.08 * np.cos(4 * np.pi * months / 12.0)

    # common cyclical driver with a persistent level
    cycle = np.zeros(N)
    for t in range(1, N):
        cycle[t] = 0.97 * cycle[t - 1] + 0.05 * rng.standard_normal()

    permits = np.empty((N, P_PERMITS))
    for j in range(P_PERMITS):
        level = np.cumsum(0.004 * rng.standard_normal(N)) + 0.002 * months
        idio = 0.04 * rng.standard_normal(N)
        permits[:, j] = np.exp(4.5 + 0.1 * j + level + season + cycle + idio)

    rate = 6.0 + np.cumsum(0.08 * rng.standard_normal(N))
    rate = np.clip(rate, 1.0, 12.0)

    # log starts: unit-root level driven by last month's cycle and rate moves
    h = np.zeros(N)
    for t in range(1, N):
        h[t] = h[t - 1] + 0.25 * (cycle[t - 1] - cycle[t - 2 if t >= 2 else 0]) \
            - 0.01 * (rate[t - 1] - rate[t - 2 if t >= 2 else 0]) \
            + 0.025 * rng.standard_normal()
    starts = np.exp(7.0 + season + h)
    return months, starts, permits, rate


def main() -> None:
    months, starts, permits, rate = build()
    out = pathlib.Path(__file__).resolve().parents[1] / "data" / "synthetic_housing.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date"] + [f"permits_{j}" for j in range(1, P_PERMITS + 1)]
                        + ["rate", "starts"])
        for t in range(N):
            year, month = 1990 + t // 12, 1 + t % 12
            row = [f"{year:04d}-{month:02d}"]
            row += [f"{permits[t, j]:.4f}" for j in range(P_PERMITS)]
            row += [f"{rate[t]:.4f}", f"{starts[t]:.4f}"]
            writer.writerow(row)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()

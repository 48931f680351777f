"""Shared helpers for the experiment scripts."""

import argparse
import json
from pathlib import Path

import numpy as np


def parser(description, reps, seed=2024):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--reps", type=int, default=reps, help=f"replicates per config (default {reps})")
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out", type=Path, default=None, help="directory for CSV/JSON output")
    return p


def dump(out, name, payload):
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    with open(out / name, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)


def write_hist(out, name, values, sigma_sq, bins=50):
    """Histogram of scaled values next to the bin-averaged N(0, sigma_sq) density."""
    if out is None:
        return
    from scipy import stats
    out.mkdir(parents=True, exist_ok=True)
    counts, edges = np.histogram(values, bins=bins)
    width = edges[1] - edges[0]
    sd = sigma_sq ** 0.5
    pred = np.diff(stats.norm.cdf(edges, scale=sd)) / width
    dens = counts / (len(values) * width)
    with open(out / name, "w") as fh:
        fh.write("bin_lo,bin_hi,count,density,predicted\n")
        for lo, hi, c, d, pr in zip(edges[:-1], edges[1:], counts, dens, pred):
            fh.write(f"{lo:.17g},{hi:.17g},{c},{d:.17g},{pr:.17g}\n")

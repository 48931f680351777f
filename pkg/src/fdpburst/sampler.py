"""Draws of (H, W, eps) and one-sided p-values for a configured testing problem.

Every replicate owns three independent Philox streams keyed by
``(seed, replicate_index, role)`` through :class:`numpy.random.SeedSequence`,
so a replicate can be regenerated in isolation on any thread.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, cholesky_banded

from .gauss import std_sf
from .model import ExperimentConfig, assign_groups, custom_cholesky, ensure_valid

ROLE_H, ROLE_W, ROLE_EPS = 0, 1, 2


def stream(seed: int, replicate_index: int, role: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replicate_index), int(role)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ReplicateDraw:
    h: np.ndarray
    w: np.ndarray
    x: np.ndarray
    p: np.ndarray


class NoiseFactor:
    """Maps iid N(0, 1) draws to N(0, Gamma) for the configured correlation."""

    def __init__(self, noise, m: int):
        self.kind = noise.kind
        self.m = m
        if noise.kind == "block":
            self.size = noise.block_size
            self.rho = noise.rho
            self.n_full, self.tail = divmod(m, self.size)
            if self.rho < 0:
                self._chol_full = self._block_chol(self.size)
                self._chol_tail = self._block_chol(self.tail) if self.tail else None
        elif noise.kind == "toeplitz":
            self.band = cholesky_banded(noise.toeplitz_band(m), lower=True)
        elif noise.kind == "custom":
            self.chol = custom_cholesky(noise.matrix)

    def _block_chol(self, size):
        mat = np.full((size, size), self.rho)
        np.fill_diagonal(mat, 1.0)
        return cholesky(mat, lower=True)

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        m = self.m
        if self.kind == "independent":
            return rng.standard_normal(m)
        if self.kind == "block":
            if self.rho >= 0:
                eta = rng.standard_normal(m)
                shared = rng.standard_normal(self.n_full + (1 if self.tail else 0))
                eps = np.sqrt(1.0 - self.rho) * eta
                eps += np.sqrt(self.rho) * np.repeat(shared, self.size)[:m]
                return eps
            z = rng.standard_normal(m)
            out = np.empty(m)
            full = self.n_full * self.size
            out[:full] = (z[:full].reshape(self.n_full, self.size) @ self._chol_full.T).ravel()
            if self.tail:
                out[full:] = self._chol_tail @ z[full:]
            return out
        if self.kind == "toeplitz":
            z = rng.standard_normal(m)
            out = self.band[0] * z
            for d in range(1, self.band.shape[0]):
                out[d:] += self.band[d, : m - d] * z[: m - d]
            return out
        z = rng.standard_normal(m)
        return self.chol @ z


class Sampler:
    """Precomputed per-config state; :meth:`draw` is reentrant."""

    def __init__(self, config: ExperimentConfig, validate: bool = True):
        if validate:
            ensure_valid(config)
        self.config = config
        m = config.m
        self.m = m
        self.pi1 = config.pi1
        self.groups = assign_groups(m, config.loadings)
        self.group_loadings = config.loadings.loadings
        self.group_scale = np.sqrt(1.0 - config.loadings.norms_sq)
        self.noise = NoiseFactor(config.noise, m)
        self.k = config.loadings.k

    def latent(self, replicate_index: int) -> np.ndarray:
        if self.config.latent_mode == "marginal":
            return stream(self.config.seed, replicate_index, ROLE_W).standard_normal(self.k)
        return np.array(self.config.w, dtype=float)

    def statistics(self, replicate_index: int):
        cfg = self.config
        h = stream(cfg.seed, replicate_index, ROLE_H).random(self.m) < self.pi1
        w = self.latent(replicate_index)
        eps = self.noise.draw(stream(cfg.seed, replicate_index, ROLE_EPS))
        if self.k:
            shift = self.group_loadings @ w
            x = shift[self.groups] + self.group_scale[self.groups] * eps
        else:
            x = eps
        x += cfg.mu_a * h
        return h, w, x

    def draw(self, replicate_index: int) -> ReplicateDraw:
        h, w, x = self.statistics(replicate_index)
        return ReplicateDraw(h=h, w=w, x=x, p=std_sf(x))


def draw_replicate(config: ExperimentConfig, replicate_index: int) -> ReplicateDraw:
    return Sampler(config).draw(replicate_index)

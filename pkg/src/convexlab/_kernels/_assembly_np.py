"""Pure-numpy element kernels (fallback when the Cython extension is absent).

All routines accept simplices embedded in an ambient space of possibly higher
dimension; metric quantities go through the Gram matrix of edge vectors.
"""
from __future__ import annotations

import math

import numpy as np

BACKEND = "numpy"


def simplex_measures(vertices: np.ndarray, simplices: np.ndarray) -> np.ndarray:
    """k-volume of each simplex (k+1 vertices) within its affine span."""
    v = vertices[simplices]
    edges = v[:, 1:, :] - v[:, :1, :]
    gram = np.einsum("cim,cjm->cij", edges, edges)
    k = simplices.shape[1] - 1
    if k == 0:
        return np.ones(len(simplices))
    dets = np.linalg.det(gram)
    return np.sqrt(np.maximum(dets, 0.0)) / math.factorial(k)


def stiffness_entries(vertices: np.ndarray, cells: np.ndarray):
    """Per-cell P1 stiffness blocks.

    Returns (local, volumes) where local has shape (ncells, k, k) with
    local[c, i, j] = vol_c * <grad phi_i, grad phi_j>.
    """
    v = vertices[cells]
    edges = v[:, 1:, :] - v[:, :1, :]
    gram = np.einsum("cim,cjm->cij", edges, edges)
    k = cells.shape[1] - 1
    vols = np.sqrt(np.maximum(np.linalg.det(gram), 0.0)) / math.factorial(k)
    grads_rest = np.linalg.solve(gram, edges)  # rows are grad(lambda_i), i>=1
    grads = np.empty((len(cells), k + 1, vertices.shape[1]))
    grads[:, 1:, :] = grads_rest
    grads[:, 0, :] = -grads_rest.sum(axis=1)
    local = np.einsum("cim,cjm->cij", grads, grads) * vols[:, None, None]
    return local, vols


def mass_entries(vertices: np.ndarray, simplices: np.ndarray):
    """Per-simplex consistent P1 mass blocks (exact for products of P1)."""
    vols = simplex_measures(vertices, simplices)
    k = simplices.shape[1]
    base = (np.ones((k, k)) + np.eye(k)) / (k * (k + 1))
    local = vols[:, None, None] * base[None, :, :]
    return local, vols

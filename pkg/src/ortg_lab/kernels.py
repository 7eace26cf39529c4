"""Hot numeric kernels: MLP forward, backprop, and full-batch Adam training.

All kernels operate on a flat float64 parameter vector packed layer by layer
(row-major weight matrix, then bias vector) so a single implementation covers
any layer stack. The training loop reuses preallocated workspaces and writes
matmul/ufunc results through ``out=``, keeping the per-epoch allocation count
at zero on both backends.

The same source is either compiled with numba ``@njit`` or run as plain
NumPy; the backend is chosen once at import time:

* default: numba when importable,
* ``ORTG_LAB_BACKEND=numpy`` forces the pure-NumPy path,
* ``ORTG_LAB_BACKEND=numba`` requires numba and fails loudly without it.

Both paths execute the same operations in the same order (numba's ``np.dot``
binds the same BLAS), so they agree to float64 roundoff; the test suite pins
them together and ``benchmarks/bench_kernels.py`` compares their speed.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on numba-less installs
    HAS_NUMBA = False

_BACKEND_ENV = os.environ.get("ORTG_LAB_BACKEND", "").strip().lower()
if _BACKEND_ENV not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"ORTG_LAB_BACKEND={_BACKEND_ENV!r} not understood; use 'numba' or 'numpy'"
    )
if _BACKEND_ENV == "numba" and not HAS_NUMBA:
    raise RuntimeError("ORTG_LAB_BACKEND=numba but numba is not importable")

USE_NUMBA = HAS_NUMBA and _BACKEND_ENV != "numpy"
BACKEND = "numba" if USE_NUMBA else "numpy"


def param_count(sizes: np.ndarray) -> int:
    """Total packed parameter count for a layer-size vector."""
    total = 0
    for l in range(len(sizes) - 1):
        total += int(sizes[l]) * int(sizes[l + 1]) + int(sizes[l + 1])
    return total


def layer_offsets(sizes: np.ndarray) -> np.ndarray:
    """Start offset of each layer's (W, b) block in the packed vector."""
    offs = np.zeros(len(sizes), dtype=np.int64)
    for l in range(len(sizes) - 1):
        offs[l + 1] = offs[l] + int(sizes[l]) * int(sizes[l + 1]) + int(sizes[l + 1])
    return offs


def _mlp_forward_batch(params, sizes, X):
    """Predictions (n,) of the packed network on a sample matrix (n, d).

    Hidden layers are rectified; the output layer is left linear.
    """
    n_layers = sizes.shape[0] - 1
    A = X
    off = 0
    for l in range(n_layers):
        a = sizes[l]
        b = sizes[l + 1]
        W = params[off:off + a * b].reshape(a, b)
        bias = params[off + a * b:off + a * b + b]
        off += a * b + b
        Z = np.dot(A, W) + bias
        if l < n_layers - 1:
            A = np.maximum(Z, 0.0)
        else:
            A = Z
    return A[:, 0].copy()


def _epoch_loss_grad(params, sizes, offs, X, y, grad, zs, acts, dls, resid):
    """One full-batch forward + backward pass.

    Fills ``grad`` (packed, same layout as ``params``) and returns the MSE.
    ``zs``/``acts``/``dls`` are per-layer (n, width) workspaces and ``resid``
    an (n,) buffer; contents are scratch, reused across epochs.
    """
    n = X.shape[0]
    n_layers = sizes.shape[0] - 1

    A = X
    for l in range(n_layers):
        a = sizes[l]
        b = sizes[l + 1]
        off = offs[l]
        W = params[off:off + a * b].reshape(a, b)
        bias = params[off + a * b:off + a * b + b]
        np.dot(A, W, zs[l])
        np.add(zs[l], bias, zs[l])
        if l < n_layers - 1:
            np.maximum(zs[l], 0.0, acts[l])
            A = acts[l]

    out = zs[n_layers - 1]
    resid[:] = out[:, 0]
    np.subtract(resid, y, resid)
    loss = np.dot(resid, resid) / n

    # Backward. dls[l] is dLoss/dZ_l.
    D = dls[n_layers - 1]
    D[:, 0] = resid
    np.multiply(D, 2.0 / n, D)
    for l in range(n_layers - 1, -1, -1):
        a = sizes[l]
        b = sizes[l + 1]
        off = offs[l]
        A_prev = X if l == 0 else acts[l - 1]
        gW = grad[off:off + a * b].reshape(a, b)
        np.dot(A_prev.T, dls[l], gW)
        grad[off + a * b:off + a * b + b] = np.sum(dls[l], axis=0)
        if l > 0:
            W = params[off:off + a * b].reshape(a, b)
            np.dot(dls[l], W.T, dls[l - 1])
            # Rectifier subgradient at exactly 0 is 0: sign of max(z, 0).
            np.sign(acts[l - 1], zs[l - 1])
            np.multiply(dls[l - 1], zs[l - 1], dls[l - 1])
    return loss


def _make_workspaces(sizes, n):
    zs = []
    acts = []
    dls = []
    for l in range(sizes.shape[0] - 1):
        b = sizes[l + 1]
        zs.append(np.empty((n, b), dtype=np.float64))
        acts.append(np.empty((n, b), dtype=np.float64))
        dls.append(np.empty((n, b), dtype=np.float64))
    return zs, acts, dls


def _mlp_loss_and_grad(params, sizes, X, y, grad):
    """Full-batch MSE loss; packed parameter gradient written into ``grad``."""
    n_layers = sizes.shape[0] - 1
    offs = np.zeros(n_layers + 1, dtype=np.int64)
    for l in range(n_layers):
        offs[l + 1] = offs[l] + sizes[l] * sizes[l + 1] + sizes[l + 1]
    zs, acts, dls = _kernel_make_workspaces(sizes, X.shape[0])
    resid = np.empty(X.shape[0], dtype=np.float64)
    return _kernel_epoch_loss_grad(params, sizes, offs, X, y, grad, zs, acts, dls, resid)


def _mlp_input_grad(params, sizes, x):
    """Gradient (d,) of the scalar network output with respect to the input."""
    n_layers = sizes.shape[0] - 1

    offs = np.zeros(n_layers + 1, dtype=np.int64)
    for l in range(n_layers):
        offs[l + 1] = offs[l] + sizes[l] * sizes[l + 1] + sizes[l + 1]

    A = x.reshape(1, sizes[0])
    zs = []
    for l in range(n_layers):
        a = sizes[l]
        b = sizes[l + 1]
        off = offs[l]
        W = params[off:off + a * b].reshape(a, b)
        bias = params[off + a * b:off + a * b + b]
        Z = np.dot(A, W) + bias
        zs.append(Z)
        if l < n_layers - 1:
            A = np.maximum(Z, 0.0)
        else:
            A = Z

    D = np.ones((1, 1), dtype=np.float64)
    for l in range(n_layers - 1, 0, -1):
        a = sizes[l]
        b = sizes[l + 1]
        off = offs[l]
        W = params[off:off + a * b].reshape(a, b)
        # Rectifier subgradient at exactly 0 is taken as 0 (strict >).
        D = np.where(zs[l - 1] > 0.0, np.dot(D, np.ascontiguousarray(W.T)), 0.0)
    W0 = params[offs[0]:offs[0] + sizes[0] * sizes[1]].reshape(sizes[0], sizes[1])
    gx = np.dot(D, np.ascontiguousarray(W0.T))
    return gx[0].copy()


def _adam_train(params, sizes, X, y, lr, beta1, beta2, eps,
                max_epochs, tol, patience, loss_hist):
    """Full-batch Adam on MSE, in place on ``params``.

    Stops at ``max_epochs`` or once the best loss has not improved by at
    least ``tol`` for ``patience`` consecutive epochs. Per-epoch losses are
    written into ``loss_hist`` (caller-allocated, length >= max_epochs).

    Returns (final_loss, epochs_run, ok). ``ok`` is False when the loss went
    non-finite; params are then left as-is and must be discarded.
    """
    n_layers = sizes.shape[0] - 1
    offs = np.zeros(n_layers + 1, dtype=np.int64)
    for l in range(n_layers):
        offs[l + 1] = offs[l] + sizes[l] * sizes[l + 1] + sizes[l + 1]
    zs, acts, dls = _kernel_make_workspaces(sizes, X.shape[0])
    resid = np.empty(X.shape[0], dtype=np.float64)

    grad = np.empty_like(params)
    m = np.zeros_like(params)
    v = np.zeros_like(params)
    tmp = np.empty_like(params)

    best = np.inf
    stall = 0
    epochs = 0
    ok = True
    for t in range(1, max_epochs + 1):
        loss = _kernel_epoch_loss_grad(
            params, sizes, offs, X, y, grad, zs, acts, dls, resid
        )
        if not np.isfinite(loss):
            ok = False
            break
        loss_hist[t - 1] = loss
        epochs = t
        if best - loss >= tol:
            best = loss
            stall = 0
        else:
            stall += 1
            if stall >= patience:
                break
        # Adam step, in place: params -= lr * (m/bc1) / (sqrt(v/bc2) + eps)
        np.multiply(m, beta1, m)
        np.multiply(grad, 1.0 - beta1, tmp)
        np.add(m, tmp, m)
        np.multiply(v, beta2, v)
        np.multiply(grad, grad, tmp)
        np.multiply(tmp, 1.0 - beta2, tmp)
        np.add(v, tmp, v)
        bc1 = 1.0 - beta1 ** t
        bc2 = 1.0 - beta2 ** t
        np.divide(v, bc2, tmp)
        np.sqrt(tmp, tmp)
        np.add(tmp, eps, tmp)
        np.divide(m, tmp, tmp)
        np.divide(tmp, bc1, tmp)
        np.multiply(tmp, lr, tmp)
        np.subtract(params, tmp, params)

    if ok:
        final_loss = _kernel_epoch_loss_grad(
            params, sizes, offs, X, y, grad, zs, acts, dls, resid
        )
    else:
        final_loss = np.inf
    return final_loss, epochs, ok


if USE_NUMBA:
    _KERNEL_OPTS = dict(cache=True, nogil=True)
    _kernel_forward_batch = njit(**_KERNEL_OPTS)(_mlp_forward_batch)
    _kernel_make_workspaces = njit(**_KERNEL_OPTS)(_make_workspaces)
    _kernel_epoch_loss_grad = njit(**_KERNEL_OPTS)(_epoch_loss_grad)
    _kernel_input_grad = njit(**_KERNEL_OPTS)(_mlp_input_grad)
    _kernel_loss_and_grad = njit(**_KERNEL_OPTS)(_mlp_loss_and_grad)
    _kernel_adam_train = njit(**_KERNEL_OPTS)(_adam_train)
else:
    _kernel_forward_batch = _mlp_forward_batch
    _kernel_make_workspaces = _make_workspaces
    _kernel_epoch_loss_grad = _epoch_loss_grad
    _kernel_input_grad = _mlp_input_grad
    _kernel_loss_and_grad = _mlp_loss_and_grad
    _kernel_adam_train = _adam_train


def mlp_forward_batch(params: np.ndarray, sizes: np.ndarray, X: np.ndarray) -> np.ndarray:
    return _kernel_forward_batch(params, sizes, np.ascontiguousarray(X))


def mlp_loss_and_grad(params: np.ndarray, sizes: np.ndarray, X: np.ndarray,
                      y: np.ndarray, grad: np.ndarray) -> float:
    return float(_kernel_loss_and_grad(params, sizes, np.ascontiguousarray(X), y, grad))


def mlp_input_grad(params: np.ndarray, sizes: np.ndarray, x: np.ndarray) -> np.ndarray:
    return _kernel_input_grad(params, sizes, np.ascontiguousarray(x, dtype=np.float64))


def adam_train(params: np.ndarray, sizes: np.ndarray, X: np.ndarray, y: np.ndarray,
               lr: float, beta1: float, beta2: float, eps: float,
               max_epochs: int, tol: float, patience: int,
               loss_hist: np.ndarray) -> tuple[float, int, bool]:
    final_loss, epochs, ok = _kernel_adam_train(
        params, sizes, np.ascontiguousarray(X), y,
        lr, beta1, beta2, eps, max_epochs, tol, patience, loss_hist,
    )
    return float(final_loss), int(epochs), bool(ok)

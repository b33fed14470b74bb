"""Dense tensor kernels for the detector.

Feature maps are float32 ndarrays shaped [channels, height, width] and
convolution kernels are [out_ch, in_ch, kh, kw].  Reductions (convolution,
pooling means, affine maps) accumulate in float64 before casting back, so
float32 storage still meets 1e-6 oracle tolerances.  Every function is pure
and never mutates its inputs.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _as_pair(padding) -> tuple:
    if isinstance(padding, (tuple, list)):
        ph, pw = padding
    else:
        ph = pw = padding
    if ph < 0 or pw < 0:
        raise ValueError(f"padding must be non-negative, got {(ph, pw)}")
    return int(ph), int(pw)


def conv2d(x: np.ndarray, kernel: np.ndarray, bias=None, stride: int = 1,
           padding=0) -> np.ndarray:
    """2-D cross-correlation (no kernel flip) with zero padding.

    Args:
        x: input map [C_in, H, W].
        kernel: weights [C_out, C_in, kh, kw].
        bias: optional per-output-channel offsets [C_out].
        stride: step between windows, same for both axes.
        padding: zero-padding as an int or an (pad_h, pad_w) pair.

    Returns:
        Map [C_out, H', W'] with H' = floor((H + 2*pad_h - kh)/stride) + 1.
    """
    if x.ndim != 3 or kernel.ndim != 4:
        raise ValueError(
            f"conv2d expects input [C,H,W] and kernel [Cout,Cin,kh,kw], "
            f"got input {x.shape} and kernel {kernel.shape}")
    cin, h, w = x.shape
    cout, kcin, kh, kw = kernel.shape
    if kcin != cin:
        raise ValueError(
            f"conv2d channel mismatch: kernel {kernel.shape} expects "
            f"{kcin} input channels but input is {x.shape}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    ph, pw = _as_pair(padding)
    if h + 2 * ph < kh or w + 2 * pw < kw:
        raise ValueError(
            f"window {kh}x{kw} does not fit padded input "
            f"{h + 2 * ph}x{w + 2 * pw} (input {x.shape}, padding {(ph, pw)})")

    padded = np.pad(x, ((0, 0), (ph, ph), (pw, pw)))
    windows = sliding_window_view(padded, (kh, kw), axis=(1, 2))
    windows = windows[:, ::stride, ::stride]
    _, oh, ow, _, _ = windows.shape
    cols = windows.transpose(1, 2, 0, 3, 4).reshape(oh * ow, cin * kh * kw)
    weights = kernel.reshape(cout, cin * kh * kw)
    out = cols.astype(np.float64) @ weights.astype(np.float64).T
    if bias is not None:
        bias = np.asarray(bias)
        if bias.shape != (cout,):
            raise ValueError(
                f"bias shape {bias.shape} does not match {cout} output channels")
        out = out + bias.astype(np.float64)
    return out.T.reshape(cout, oh, ow).astype(x.dtype)


def maxpool2d(x: np.ndarray, k: int, stride: int = 1, padding: int = 0) -> np.ndarray:
    """Max over k*k windows; padded cells act as -inf and never win."""
    if k <= 0:
        raise ValueError(f"pool size must be positive, got {k}")
    if x.ndim != 3:
        raise ValueError(f"maxpool2d expects [C,H,W], got {x.shape}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    ph, pw = _as_pair(padding)
    _, h, w = x.shape
    if h + 2 * ph < k or w + 2 * pw < k:
        raise ValueError(
            f"window {k}x{k} does not fit padded input "
            f"{h + 2 * ph}x{w + 2 * pw} (input {x.shape}, padding {(ph, pw)})")
    padded = np.pad(x, ((0, 0), (ph, ph), (pw, pw)),
                    constant_values=-np.inf)
    windows = sliding_window_view(padded, (k, k), axis=(1, 2))
    return windows[:, ::stride, ::stride].max(axis=(3, 4))


def global_avg_pool(x: np.ndarray) -> np.ndarray:
    """Per-channel mean over the spatial extent, as float64 [C]."""
    if x.ndim != 3:
        raise ValueError(f"global_avg_pool expects [C,H,W], got {x.shape}")
    return x.mean(axis=(1, 2), dtype=np.float64)


def upsample_nearest(x: np.ndarray, factor: int) -> np.ndarray:
    """Replicate every cell into a factor*factor block."""
    if factor < 1:
        raise ValueError(f"upsample factor must be >= 1, got {factor}")
    if x.ndim != 3:
        raise ValueError(f"upsample_nearest expects [C,H,W], got {x.shape}")
    if factor == 1:
        return x.copy()
    return np.repeat(np.repeat(x, factor, axis=1), factor, axis=2)


def linear(v: np.ndarray, weight: np.ndarray, bias=None) -> np.ndarray:
    """Affine map weight @ v + bias with float64 accumulation."""
    v = np.asarray(v)
    if weight.ndim != 2 or v.ndim != 1:
        raise ValueError(
            f"linear expects vector [n] and weight [m,n], got "
            f"{v.shape} and {weight.shape}")
    if weight.shape[1] != v.shape[0]:
        raise ValueError(
            f"linear shape mismatch: weight {weight.shape} vs input {v.shape}")
    out = weight.astype(np.float64) @ v.astype(np.float64)
    if bias is not None:
        bias = np.asarray(bias)
        if bias.shape != (weight.shape[0],):
            raise ValueError(
                f"bias shape {bias.shape} does not match weight {weight.shape}")
        out = out + bias.astype(np.float64)
    return out


def concat_channels(inputs) -> np.ndarray:
    """Stack maps along the channel axis in argument order."""
    if not inputs:
        raise ValueError("concat_channels needs at least one input")
    base = inputs[0].shape[1:]
    for t in inputs[1:]:
        if t.shape[1:] != base:
            raise ValueError(
                f"spatial mismatch in concat_channels: {t.shape[1:]} vs {base}")
    return np.concatenate(inputs, axis=0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Elementwise logistic function, numerically stable, dtype-preserving."""
    x = np.asarray(x)
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    z = np.exp(-x[pos], dtype=np.float64)
    out[pos] = 1.0 / (1.0 + z)
    z = np.exp(x[~pos].astype(np.float64))
    out[~pos] = z / (1.0 + z)
    return out.astype(x.dtype)


def relu(x: np.ndarray) -> np.ndarray:
    """Elementwise max(x, 0)."""
    return np.maximum(x, np.zeros((), dtype=np.asarray(x).dtype))


def bilinear_resize(x: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample of [C,H,W] to [C,out_h,out_w] (half-pixel centers)."""
    if x.ndim != 3:
        raise ValueError(f"bilinear_resize expects [C,H,W], got {x.shape}")
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output extents must be positive, got {(out_h, out_w)}")
    _, h, w = x.shape
    if (out_h, out_w) == (h, w):
        return x.copy()

    def axis_coords(n_out, n_in):
        src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0.0, n_in - 1.0)
        lo = np.floor(src).astype(np.int64)
        lo = np.minimum(lo, n_in - 2) if n_in > 1 else np.zeros_like(lo)
        frac = src - lo
        return lo, frac

    ylo, yfrac = axis_coords(out_h, h)
    xlo, xfrac = axis_coords(out_w, w)
    x64 = x.astype(np.float64)
    top = (x64[:, ylo][:, :, xlo] * (1 - xfrac) +
           x64[:, ylo][:, :, xlo + (1 if w > 1 else 0)] * xfrac)
    yhi = ylo + (1 if h > 1 else 0)
    bot = (x64[:, yhi][:, :, xlo] * (1 - xfrac) +
           x64[:, yhi][:, :, xlo + (1 if w > 1 else 0)] * xfrac)
    out = top * (1 - yfrac)[None, :, None] + bot * yfrac[None, :, None]
    return out.astype(x.dtype)

"""Independent numpy/scipy evaluation of the banding, pyramid and SSIM
pipelines. Writes fixtures/golden/oracles.json, which the Rust tests load.

Conventions: BT.601 luma, Sobel/8 with edge replication, 7x7 unnormalized
box sum, 5x5 Gaussian (sigma 1), bilinear with half-pixel centres.
"""
import json
import os
import numpy as np
from scipy import ndimage

ROOT = os.path.join(os.path.dirname(__file__), "..", "fixtures", "golden")


def luma(rgb):
    return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]


def edge_map(rgb):
    y = luma(rgb)
    kx = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64) / 8.0
    gx = ndimage.correlate(y, kx, mode="nearest")
    gy = ndimage.correlate(y, kx.T, mode="nearest")
    g = np.sqrt(gx * gx + gy * gy)
    c = 1.0 - np.maximum(1.0 - g, 0.0)
    w = ndimage.correlate(c, np.ones((7, 7)), mode="nearest") ** 2
    return w * g


def gauss5():
    x = np.arange(-2, 3, dtype=np.float64)
    k = np.exp(-(x[:, None] ** 2 + x[None, :] ** 2) / 2.0)
    return k / k.sum()


def bilinear_axis(n_in, n_out):
    m = np.zeros((n_out, n_in))
    for o in range(n_out):
        s = (o + 0.5) * n_in / n_out - 0.5
        s = min(max(s, 0.0), n_in - 1)
        i0 = int(np.floor(s))
        i1 = min(i0 + 1, n_in - 1)
        f = s - i0
        m[o, i0] += 1 - f
        m[o, i1] += f
    return m


def resize(img, h, w):
    mh = bilinear_axis(img.shape[0], h)
    mw = bilinear_axis(img.shape[1], w)
    return np.einsum("ij,jkc,lk->ilc", mh, img, mw)


def pyramid_level(img, eta):
    h, w = img.shape[:2]
    sm = np.stack([ndimage.correlate(img[..., c], gauss5(), mode="nearest") for c in range(3)], axis=2)
    dh, dw = int(round(h / eta)), int(round(w / eta))
    return resize(resize(sm, dh, dw), h, w)


def ssim_luma(a, b):
    x = np.arange(-5, 6, dtype=np.float64)
    g = np.exp(-(x[:, None] ** 2 + x[None, :] ** 2) / (2 * 1.5 ** 2))
    g /= g.sum()
    c1, c2 = 0.01 ** 2, 0.03 ** 2
    vals = []
    for r in range(a.shape[0] - 10):
        for c in range(a.shape[1] - 10):
            pa, pb = a[r:r + 11, c:c + 11], b[r:r + 11, c:c + 11]
            ma, mb = (g * pa).sum(), (g * pb).sum()
            va = (g * (pa - ma) ** 2).sum()
            vb = (g * (pb - mb) ** 2).sum()
            cov = (g * (pa - ma) * (pb - mb)).sum()
            vals.append(((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2)))
    return float(np.mean(vals))


def ramp8(h=64, w=256):
    c = np.arange(w)
    v = np.floor(c * 8 / w) / 7.0
    row = np.repeat(v[None, :], h, axis=0)
    return np.repeat(row[..., None], 3, axis=2)


def step16(h=0.25):
    img = np.zeros((16, 16, 3))
    img[:, 8:, :] = h
    return img


def adam_bowl(x0=0.5, lr=0.05, steps=200, lo=-np.inf, hi=np.inf):
    x, m, v = x0, 0.0, 0.0
    b1, b2, eps = 0.9, 0.999, 1e-8
    for t in range(1, steps + 1):
        g = 2 * x
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mh, vh = m / (1 - b1 ** t), v / (1 - b2 ** t)
        x = x - lr * mh / (np.sqrt(vh) + eps)
        x = min(max(x, lo), hi)
    return x


def fs_row(values, palette):
    """Raster-order error diffusion on a single row; returns working values and indices."""
    buf = [float(v) for v in values]
    seen, idx = [], []
    for c in range(len(buf)):
        v = buf[c]
        q = min(max(v, 0.0), 1.0)
        d = [3 * (q - p) ** 2 for p in palette]
        k = d.index(min(d))
        seen.append(v)
        idx.append(k)
        if c + 1 < len(buf):
            buf[c + 1] += (v - palette[k]) * 7 / 16
    return seen, idx


def main():
    ramp = ramp8()
    levels = [float(edge_map(pyramid_level(ramp, 1.5 ** k)).mean()) for k in range(1, 5)]
    checker = ((np.add.outer(np.arange(16), np.arange(16))) % 2).astype(np.float64)
    out = {
        "step16_height": 0.25,
        "step16_edge_map": edge_map(step16()).tolist(),
        "ramp8_z": float(edge_map(ramp).mean()),
        "ramp8_levels_eta1_5": levels,
        "ramp8_b1_5": float(sum(levels)),
        "ssim_checker16_inverse": ssim_luma(checker, 1 - checker),
        "adam_bowl_x200": adam_bowl(),
        "adam_bowl_x200_clamped01": adam_bowl(lo=0.0, hi=1.0),
    }
    seen, idx = fs_row([0.5] * 4, [0.0, 1.0])
    out["fs_row_gray"] = 0.5
    out["fs_row_working"] = seen
    out["fs_row_indices"] = idx
    with open(os.path.join(ROOT, "oracles.json"), "w") as f:
        json.dump(out, f, indent=1)
    print({k: v for k, v in out.items() if k != "step16_edge_map"})


if __name__ == "__main__":
    main()

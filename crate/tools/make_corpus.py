"""Regenerates the bundled 64x64 PPM corpus and the reference GIF fixture.

Run once; outputs are committed. Requires numpy, scikit-image, Pillow.
"""
import os
import numpy as np
from PIL import Image
from skimage import data, transform

ROOT = os.path.join(os.path.dirname(__file__), "..", "fixtures")
N = 64


def save_ppm(path, rgb):
    rgb = np.clip(np.rint(rgb * 255.0), 0, 255).astype(np.uint8)
    h, w, _ = rgb.shape
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        f.write(rgb.tobytes())


def photo(img):
    img = img.astype(np.float64) / 255.0
    h, w = img.shape[:2]
    s = min(h, w)
    top, left = (h - s) // 2, (w - s) // 2
    img = img[top:top + s, left:left + s, :3]
    return transform.resize(img, (N, N), anti_aliasing=True, order=1)


def main():
    out = os.path.join(ROOT, "corpus")
    os.makedirs(out, exist_ok=True)
    yy, xx = np.mgrid[0:N, 0:N].astype(np.float64)
    u, v = xx / (N - 1), yy / (N - 1)

    gray = np.repeat(u[..., None], 3, axis=2)
    save_ppm(os.path.join(out, "ramp_gray.ppm"), gray)

    sky = np.stack([0.15 + 0.8 * v, 0.35 + 0.4 * v, 0.9 - 0.6 * v], axis=2)
    save_ppm(os.path.join(out, "ramp_sky.ppm"), sky)

    r = np.sqrt((u - 0.5) ** 2 / 0.09 + (v - 0.45) ** 2 / 0.16)
    face = np.clip(1.0 - r, 0.0, 1.0)[..., None]
    bg = np.stack([0.2 + 0.3 * u, 0.25 + 0.2 * v, 0.4 + 0.1 * u], axis=2)
    skin = np.array([0.95, 0.76, 0.62])[None, None, :] * (0.6 + 0.4 * face)
    portrait = np.where(face > 0, skin, bg)
    save_ppm(os.path.join(out, "portrait_smooth.ppm"), portrait)

    check = ((xx // 8 + yy // 8) % 2)[..., None]
    board = np.where(check > 0, np.array([0.9, 0.85, 0.2]), np.array([0.1, 0.2, 0.6]))
    save_ppm(os.path.join(out, "checker.ppm"), board)

    rng = np.random.default_rng(20190612)
    save_ppm(os.path.join(out, "noise.ppm"), rng.random((N, N, 3)))

    save_ppm(os.path.join(out, "photo_astronaut.ppm"), photo(data.astronaut()))
    save_ppm(os.path.join(out, "photo_coffee.ppm"), photo(data.coffee()))
    save_ppm(os.path.join(out, "photo_chelsea.ppm"), photo(data.chelsea()))

    # 4x4 pattern written by Pillow's GIF encoder; indices are (r + c) % 4.
    pal = [0, 0, 0, 255, 0, 0, 0, 255, 0, 0, 0, 255]
    idx = np.fromfunction(lambda r, c: (r + c) % 4, (4, 4)).astype(np.uint8)
    im = Image.fromarray(idx, mode="P")
    im.putpalette(pal)
    im.save(os.path.join(ROOT, "golden", "pillow_4x4.gif"), optimize=False)


if __name__ == "__main__":
    main()

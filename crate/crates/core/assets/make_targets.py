"""Renders the bundled 64x64 hologram/aberration target images (binary PGM)."""
import struct
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFilter, ImageFont
import matplotlib

N = 64


def save(name, arr):
    img = Image.fromarray(np.clip(arr * 255 + 0.5, 0, 255).astype(np.uint8))
    img.save(name)


def boat():
    big = 4 * N
    im = Image.new("L", (big, big), 0)
    d = ImageDraw.Draw(im)
    # sea band with soft waves
    for y in range(int(big * 0.68), big):
        v = int(70 + 40 * np.sin(y * 0.35))
        d.line([(0, y), (big, y)], fill=v)
    # hull
    d.polygon([(40, 160), (216, 160), (188, 196), (70, 196)], fill=235)
    # mast and sails
    d.rectangle([124, 46, 131, 162], fill=200)
    d.polygon([(134, 50), (134, 150), (206, 150)], fill=255)
    d.polygon([(120, 62), (120, 150), (64, 150)], fill=170)
    # sun
    d.ellipse([26, 24, 66, 64], fill=140)
    im = im.filter(ImageFilter.GaussianBlur(1.5)).resize((N, N), Image.LANCZOS)
    return np.asarray(im, float) / 255.0


def letter():
    font_path = Path(matplotlib.get_data_path()) / "fonts/ttf/DejaVuSans-Bold.ttf"
    big = 4 * N
    im = Image.new("L", (big, big), 0)
    d = ImageDraw.Draw(im)
    font = ImageFont.truetype(str(font_path), 200)
    d.text((big / 2, big / 2), "R", fill=255, font=font, anchor="mm")
    im = im.resize((N, N), Image.LANCZOS)
    return np.asarray(im, float) / 255.0


def digit():
    raw = (Path(__file__).parent / "../data/test-images-idx3-ubyte").read_bytes()
    px = np.frombuffer(raw[16:16 + 784], np.uint8).reshape(28, 28)
    im = Image.fromarray(px).resize((N, N), Image.BILINEAR)
    return np.asarray(im, float) / 255.0


for name, fn in [("boat.pgm", boat), ("letter.pgm", letter), ("digit.pgm", digit)]:
    a = fn()
    a = (a - a.min()) / (a.max() - a.min())
    save(name, a)

#!/usr/bin/env python3
"""Generates the committed image fixtures under tests/fixtures/ and prints
the independent-decoder oracle values that are frozen into the tests.

Run once at fixture-creation time; outputs are committed.
"""
import zlib
from pathlib import Path

from PIL import Image

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
OUT.mkdir(parents=True, exist_ok=True)


def report(name, img):
    data = list(img.convert("RGB").tobytes())
    print(f"{name}: size={img.size} rgb_byte_sum={sum(data)} n_samples={len(data)}")


def checkerboard():
    img = Image.new("RGB", (8, 8))
    px = img.load()
    for y in range(8):
        for x in range(8):
            on = (x + y) % 2 == 0
            px[x, y] = (230, 40, 25) if on else (12, 180, 200)
    img.save(OUT / "checker8.png")
    report("checker8.png", Image.open(OUT / "checker8.png"))


def gradient_rgba():
    img = Image.new("RGBA", (6, 4))
    px = img.load()
    for y in range(4):
        for x in range(6):
            px[x, y] = (x * 40, y * 60, 255 - x * 30, 128 + 10 * x)
    img.save(OUT / "gradient_rgba.png")
    report("gradient_rgba.png", Image.open(OUT / "gradient_rgba.png"))


def noise16():
    # deterministic pseudo-noise, no RNG dependency
    img = Image.new("RGB", (16, 16))
    px = img.load()
    v = 12345
    for y in range(16):
        for x in range(16):
            c = []
            for _ in range(3):
                v = (1103515245 * v + 12345) % (1 << 31)
                c.append(v % 256)
            px[x, y] = tuple(c)
    img.save(OUT / "noise16.png")
    report("noise16.png", Image.open(OUT / "noise16.png"))


def ppm_fixtures():
    (OUT / "white1x1.ppm").write_bytes(b"P6\n1 1\n255\n\xff\xff\xff")
    # 4x4 ramp: value = 16*(4*y + x) on all channels
    body = bytearray()
    for y in range(4):
        for x in range(4):
            v = 16 * (4 * y + x)
            body += bytes([v, v, v])
    (OUT / "ramp4.ppm").write_bytes(b"P6\n4 4\n255\n" + bytes(body))
    (OUT / "bad_magic.pgm").write_bytes(b"P5\n2 2\n255\n\x00\x01\x02\x03")
    print("ppm fixtures written")


def main():
    checkerboard()
    gradient_rgba()
    noise16()
    ppm_fixtures()


if __name__ == "__main__":
    main()

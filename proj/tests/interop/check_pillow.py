"""Cross-checks the depth PNG codec against Pillow in both directions."""

import os
import random
import subprocess
import sys

try:
    from PIL import Image
except ImportError:
    print("Pillow not installed; skipping")
    sys.exit(77)

WIDTH, HEIGHT = 320, 288


def main():
    exe, workdir = sys.argv[1], sys.argv[2]
    os.makedirs(workdir, exist_ok=True)
    count = 12
    subprocess.run([exe, "write", workdir, str(count)], check=True)

    # Our encoder, Pillow's decoder.
    for i in range(count):
        stem = os.path.join(workdir, f"depth_{i}")
        with Image.open(stem + ".png") as im:
            if im.size != (WIDTH, HEIGHT) or im.mode != "RGBA":
                sys.exit(f"{stem}.png: unexpected {im.size} {im.mode}")
            got = im.tobytes()
        with open(stem + ".rgba", "rb") as f:
            want = f.read()
        if got != want:
            sys.exit(f"{stem}.png: Pillow sees different pixels")

    # Pillow's encoder, our decoder.
    rng = random.Random(7)
    for i in range(count):
        depth = [rng.randrange(65536) for _ in range(WIDTH * HEIGHT)]
        ab = [rng.randrange(65536) for _ in range(WIDTH * HEIGHT)]
        rgba = bytearray()
        for d, a in zip(depth, ab):
            rgba += bytes((d & 0xFF, d >> 8, a & 0xFF, a >> 8))
        png = os.path.join(workdir, f"pillow_{i}.png")
        Image.frombytes("RGBA", (WIDTH, HEIGHT), bytes(rgba)).save(png, compress_level=i % 10)
        out = png + ".raw"
        subprocess.run([exe, "decode", png, out], check=True)
        with open(out, "rb") as f:
            raw = f.read()
        want = b"".join(v.to_bytes(2, "little") for v in depth) + b"".join(v.to_bytes(2, "little") for v in ab)
        if raw != want:
            sys.exit(f"{png}: decoded planes differ")

    print(f"{count} PNGs read by Pillow, {count} Pillow PNGs decoded")


if __name__ == "__main__":
    main()

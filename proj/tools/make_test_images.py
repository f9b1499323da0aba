"""Writes the small natural test images in tests/data from scikit-image's
bundled sample data."""
import pathlib
import sys

import numpy as np
from PIL import Image
from skimage import data

OUT = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "tests/data")
SOURCES = {
    "astronaut": data.astronaut,
    "coffee": data.coffee,
    "chelsea": data.chelsea,
    "rocket": data.rocket,
    "hubble": data.hubble_deep_field,
}

OUT.mkdir(parents=True, exist_ok=True)
for name, load in SOURCES.items():
    img = Image.fromarray(np.asarray(load())[..., :3])
    img.thumbnail((96, 96), Image.LANCZOS)
    img.save(OUT / f"{name}.png", optimize=False)
    print(name, img.size)

"""Bundled 256x144 desk corpus: seven photographs and three synthetic images."""

from importlib import resources
from pathlib import Path

from ..image import read_ppm


def corpus_paths() -> list:
    root = resources.files(__name__)
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".ppm"))


def load_corpus() -> list:
    """``(name, RasterImage)`` pairs in file-name order."""
    return [(p.stem, read_ppm(p)) for p in corpus_paths()]

"""Shared helpers for the demo scripts."""

from pathlib import Path

_CHARS = " .:-=+*#%@"


def corpus_dir() -> Path:
    """Demos share one generated corpus under demos/_corpus."""
    return Path(__file__).parent / "_corpus"


def ascii_image(pixels, side: int = 28, step: int = 2) -> str:
    img = pixels.reshape(side, side)
    rows = []
    for r in range(0, side, step):
        rows.append("".join(_CHARS[min(9, int(v * 9.99))] for v in img[r]))
    return "\n".join(rows)

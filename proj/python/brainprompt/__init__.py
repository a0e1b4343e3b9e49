"""Prompt-driven volumetric brain extraction.

Volumes are Fortran-ordered numpy arrays of shape (nx, ny, nz); 2-D slices
and masks are (height, width).
"""

from ._core import (
    BrainPromptError,
    builtin_baseline,
    evaluate,
    extract_brain,
    generate_prompt,
    make_phantom,
    metrics,
    read_nifti,
    rle_decode,
    rle_encode,
    write_mask,
    write_nifti,
)

__all__ = [
    "BrainPromptError",
    "builtin_baseline",
    "evaluate",
    "extract_brain",
    "generate_prompt",
    "make_phantom",
    "metrics",
    "read_nifti",
    "rle_decode",
    "rle_encode",
    "write_mask",
    "write_nifti",
]

"""Inversion-based editing of sparse voxel latents."""

__version__ = "0.1.0"

"""Python bindings for the auggs sparse-view Gaussian splatting pipeline."""

from ._auggs import (
    Camera,
    ContractViolation,
    Error,
    FormatError,
    GaussianCloud,
    InvalidParameter,
    IoError,
    LoadError,
    RenderError,
    default_config,
    evaluate,
    load_ply,
    make_fixture,
    psnr,
    render,
    save_ply,
    ssim,
    train,
)

__all__ = [
    "Camera",
    "ContractViolation",
    "Error",
    "FormatError",
    "GaussianCloud",
    "InvalidParameter",
    "IoError",
    "LoadError",
    "RenderError",
    "default_config",
    "evaluate",
    "load_ply",
    "make_fixture",
    "psnr",
    "render",
    "save_ply",
    "ssim",
    "train",
]

"""Patch-wise layer-invariant dynamic quantization for super-resolution."""

from ._core import (
    ContractError,
    Controller,
    IoError,
    LoadError,
    Model,
    assign_bit,
    atc_update,
    calibrate_thresholds,
    cli,
    conv2d,
    derive_stream,
    l1_loss,
    patch_entropy,
    psnr,
    quantile_index,
    quantize,
    quantize_weights,
    run_pipeline,
    sample_gate,
    ssim,
)

__all__ = [
    "ContractError",
    "Controller",
    "IoError",
    "LoadError",
    "Model",
    "assign_bit",
    "atc_update",
    "calibrate_thresholds",
    "cli",
    "conv2d",
    "derive_stream",
    "l1_loss",
    "patch_entropy",
    "psnr",
    "quantile_index",
    "quantize",
    "quantize_weights",
    "run_pipeline",
    "sample_gate",
    "ssim",
]

"""损失与图像指标"""

from .loss import loss, psnr, ssim, ssim_with_grad

__all__ = ["loss", "psnr", "ssim", "ssim_with_grad"]

"""
Photometric loss terms: SSIM, reconstruction error, auto-mask, minimum
reprojection and semantically masked image loss, edge-aware smoothness.

Images are (3, H, W) float64 tensors in [0, 1]. Each source frame t'
contributes a synthesized image Î_{t'->t} with its validity mask and the raw
(unwarped) source image I_{t'} used by the auto-mask comparison.
"""

from typing import NamedTuple, Optional, Sequence

import torch
import torch.nn.functional as F

from src.losses.reduction import masked_mean, select_min, stack_valid
from src.models.camera import DTYPE

SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


def _window_mean(x: torch.Tensor) -> torch.Tensor:
    """3x3 uniform average with reflective padding, (C, H, W) -> (C, H, W)."""
    padded = F.pad(x.unsqueeze(0), (1, 1, 1, 1), mode="reflect")
    return F.avg_pool2d(padded, kernel_size=3, stride=1).squeeze(0)


def ssim(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """
    Per-pixel SSIM map, channel-averaged.

    Args:
        a, b: (C, H, W) images of equal shape

    Returns:
        (H, W) map with values in [-1, 1]
    """
    if a.shape != b.shape:
        raise ValueError(f"ssim needs equal shapes, got {tuple(a.shape)} and {tuple(b.shape)}")
    a = a.to(DTYPE)
    b = b.to(DTYPE)
    mu_a = _window_mean(a)
    mu_b = _window_mean(b)
    sigma_a = _window_mean(a * a) - mu_a * mu_a
    sigma_b = _window_mean(b * b) - mu_b * mu_b
    sigma_ab = _window_mean(a * b) - mu_a * mu_b

    numerator = (2 * mu_a * mu_b + SSIM_C1) * (2 * sigma_ab + SSIM_C2)
    denominator = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (sigma_a + sigma_b + SSIM_C2)
    return (numerator / denominator).mean(dim=0)


def recon_error(target: torch.Tensor, reconstructed: torch.Tensor, alpha: float = 0.85) -> torch.Tensor:
    """re = alpha/2 (1 - SSIM) + (1 - alpha) L1, per pixel, (H, W)."""
    l1 = (target.to(DTYPE) - reconstructed.to(DTYPE)).abs().mean(dim=0)
    if alpha == 0.0:
        return l1
    return alpha / 2.0 * (1.0 - ssim(target, reconstructed)) + (1.0 - alpha) * l1


def recon_loss(
    target: torch.Tensor,
    reconstructed: torch.Tensor,
    valid: Optional[torch.Tensor] = None,
    alpha: float = 0.85,
) -> torch.Tensor:
    """Mean of re over valid pixels (all pixels when `valid` is None)."""
    re = recon_error(target, reconstructed, alpha)
    if valid is None:
        valid = torch.ones_like(re, dtype=torch.bool)
    return masked_mean(re, valid)


def fill_invalid(target: torch.Tensor, reconstructed: torch.Tensor, valid: torch.Tensor) -> torch.Tensor:
    """Replace invalid samples by the target's own values so they do not leak into SSIM windows."""
    return torch.where(valid.unsqueeze(0), reconstructed, target.to(reconstructed.dtype))


class ImageLossResult(NamedTuple):
    value: torch.Tensor
    re: torch.Tensor
    mre: torch.Tensor
    identity_re: torch.Tensor
    best_identity: torch.Tensor
    selected: torch.Tensor
    keep: torch.Tensor


def reprojection_errors(
    target: torch.Tensor,
    synthesized: Sequence[torch.Tensor],
    valid: Sequence[torch.Tensor],
    alpha: float,
) -> torch.Tensor:
    """(S, H, W) re of each synthesized frame, invalid samples filled first."""
    return torch.stack([
        recon_error(target, fill_invalid(target, image, mask), alpha)
        for image, mask in zip(synthesized, valid)
    ])


def identity_errors(target: torch.Tensor, sources: Sequence[torch.Tensor], alpha: float) -> torch.Tensor:
    """(S, H, W) re between the target and each unwarped source."""
    return torch.stack([recon_error(target, source, alpha) for source in sources])


def automask(
    target: torch.Tensor,
    synthesized: Sequence[torch.Tensor],
    sources: Sequence[torch.Tensor],
    valid: Optional[Sequence[torch.Tensor]] = None,
    alpha: float = 0.85,
) -> torch.Tensor:
    """
    Per-pixel gate mu: the best warp beats the best unwarped source.

    Pixels with no valid warp get mu = 0.
    """
    if valid is None:
        valid = [torch.ones(target.shape[-2:], dtype=torch.bool) for _ in synthesized]
    re = reprojection_errors(target, synthesized, valid, alpha)
    best_warp = stack_valid(list(re), list(valid)).min(dim=0).values
    best_identity = identity_errors(target, sources, alpha).min(dim=0).values
    return (best_warp < best_identity).detach()


def masked_image_loss(
    target: torch.Tensor,
    synthesized: Sequence[torch.Tensor],
    sources: Sequence[torch.Tensor],
    masks: Optional[Sequence[torch.Tensor]],
    valid: Sequence[torch.Tensor],
    b: float = 10.0,
    alpha: float = 0.85,
    use_automask: bool = True,
    frozen_selected: Optional[torch.Tensor] = None,
    frozen_keep: Optional[torch.Tensor] = None,
) -> ImageLossResult:
    """
    Image reconstruction loss with semantic-inconsistency penalty.

    mre = re + b M per source; each pixel takes the minimum mre over sources
    and survives only if that minimum beats the best unwarped re. The result
    is the mean over surviving pixels. Masks, the gate and the selected source
    never carry gradients; passing `frozen_selected`/`frozen_keep` reuses an
    earlier selection.

    Args:
        target: (3, H, W) target image I_t
        synthesized: Î_{t'->t} per source
        sources: I_{t'} per source
        masks: M_{t'} per source ((H, W) bool) or None for M = 0
        valid: validity per source
        b: mask penalty
        alpha: SSIM mix weight
        use_automask: gate on the unwarped comparison

    Returns:
        ImageLossResult with the scalar value and per-pixel maps
    """
    re = reprojection_errors(target, synthesized, valid, alpha)
    if masks is None:
        penalty = torch.zeros_like(re)
    else:
        penalty = b * torch.stack([m.to(DTYPE) for m in masks]).detach()
    mre = re + penalty

    candidates = stack_valid(list(mre), list(valid))
    selection = select_min(candidates, frozen_selected)
    identity_re = identity_errors(target, sources, alpha)
    best_identity = identity_re.min(dim=0).values

    any_valid = torch.stack(list(valid)).any(dim=0)
    if frozen_keep is not None:
        keep = frozen_keep & torch.isfinite(selection.value.detach())
    elif use_automask:
        keep = (selection.value.detach() < best_identity.detach()) & any_valid
    else:
        keep = any_valid
    value = masked_mean(selection.value, keep)
    return ImageLossResult(
        value=value,
        re=re,
        mre=mre,
        identity_re=identity_re,
        best_identity=best_identity,
        selected=selection.index,
        keep=keep,
    )


def min_reprojection_loss(
    target: torch.Tensor,
    synthesized: Sequence[torch.Tensor],
    sources: Sequence[torch.Tensor],
    valid: Sequence[torch.Tensor],
    alpha: float = 0.85,
    use_automask: bool = True,
) -> torch.Tensor:
    """Auto-masked per-pixel minimum of re over sources, averaged over surviving pixels."""
    return masked_image_loss(
        target, synthesized, sources, None, valid, alpha=alpha, use_automask=use_automask
    ).value


def _forward_diff(x: torch.Tensor, dim: int) -> torch.Tensor:
    """Forward difference along `dim`, zero in the last row/column."""
    diff = x.diff(dim=dim)
    pad_shape = list(x.shape)
    pad_shape[dim] = 1
    return torch.cat([diff, torch.zeros(pad_shape, dtype=x.dtype)], dim=dim)


def smoothness_loss(depth: torch.Tensor, image: torch.Tensor) -> torch.Tensor:
    """
    Edge-aware smoothness: mean over pixels of |dD| exp(-|dI|) in u and v.

    Args:
        depth: (H, W) depth
        image: (3, H, W) image whose channel-averaged gradient weights the depth gradient
    """
    depth = depth.to(DTYPE)
    image = image.to(DTYPE)
    du_depth = _forward_diff(depth, dim=1).abs()
    dv_depth = _forward_diff(depth, dim=0).abs()
    du_image = _forward_diff(image, dim=2).abs().mean(dim=0)
    dv_image = _forward_diff(image, dim=1).abs().mean(dim=0)
    per_pixel = du_depth * torch.exp(-du_image) + dv_depth * torch.exp(-dv_image)
    return per_pixel.sum() / per_pixel.numel()

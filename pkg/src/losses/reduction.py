"""
Selection and reduction helpers shared by the loss terms.
"""

from typing import NamedTuple, Optional

import torch

INF = float("inf")


class Selection(NamedTuple):
    value: torch.Tensor
    index: torch.Tensor


def stack_valid(values: list[torch.Tensor], valid: list[torch.Tensor]) -> torch.Tensor:
    """Stack per-source maps into (S, H, W), +inf where the source is invalid."""
    stacked = torch.stack(values)
    return torch.where(torch.stack(valid), stacked, torch.full_like(stacked, INF))


def select_min(candidates: torch.Tensor, frozen_index: Optional[torch.Tensor] = None) -> Selection:
    """
    Per-pixel minimum over the source axis of an (S, H, W) stack.

    With `frozen_index` the given sources are read instead of the argmin, so
    the selection stays constant while the values keep their gradients.
    """
    if frozen_index is None:
        value, index = candidates.min(dim=0)
        return Selection(value=value, index=index)
    index = frozen_index.long()
    value = candidates.gather(0, index.unsqueeze(0)).squeeze(0)
    return Selection(value=value, index=index)


def masked_mean(values: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Mean of `values` over `mask`; 0 (still attached to the graph) when the mask is empty."""
    count = int(mask.sum())
    safe = torch.where(mask, values, torch.zeros_like(values))
    if count == 0:
        return safe.sum() * 0.0
    return safe.sum() / count

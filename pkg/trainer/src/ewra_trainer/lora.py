"""Low-rank adapters attached to query/key projections only; everything
else stays frozen."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

Q_K_ATTRIBUTES = ("q_proj", "k_proj")
_ADAPTER_PARAM_RE = re.compile(r"(?:^|\.)(?:q_proj|k_proj)\.lora_[ab]$")


class UnsupportedModelError(RuntimeError):
    """The model exposes no recognizable query/key projections."""


class LoRALinear(nn.Module):
    """Frozen base linear plus a trainable rank-r update B @ A scaled by
    alpha / r. lora_b starts at zero, so attachment preserves the base
    function exactly."""

    def __init__(self, base: nn.Linear, rank: int, alpha: float):
        super().__init__()
        self.base = base
        self.rank = rank
        self.alpha = alpha
        self.scale = alpha / rank
        for param in self.base.parameters():
            param.requires_grad_(False)
        self.lora_a = nn.Parameter(torch.empty(rank, base.in_features))
        self.lora_b = nn.Parameter(torch.zeros(base.out_features, rank))
        nn.init.kaiming_uniform_(self.lora_a, a=math.sqrt(5))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.base(x) + F.linear(F.linear(x, self.lora_a), self.lora_b) * self.scale


@dataclass
class AdapterReport:
    adapted_modules: list[str]
    trainable_names: list[str]
    trainable_params: int
    total_params: int

    def summary(self) -> str:
        return (
            f"{len(self.adapted_modules)} adapted modules, "
            f"{self.trainable_params}/{self.total_params} trainable parameters"
        )


def apply_qk_adapters(model: nn.Module, rank: int, alpha: float) -> AdapterReport:
    """Freeze the whole model, then wrap every q_proj/k_proj linear in a
    LoRALinear. Raises UnsupportedModelError when none are found."""
    for param in model.parameters():
        param.requires_grad_(False)

    adapted: list[str] = []
    for module_name, module in list(model.named_modules()):
        for attribute in Q_K_ATTRIBUTES:
            child = getattr(module, attribute, None)
            if isinstance(child, nn.Linear):
                setattr(module, attribute, LoRALinear(child, rank=rank, alpha=alpha))
                adapted.append(f"{module_name}.{attribute}" if module_name else attribute)
    if not adapted:
        raise UnsupportedModelError(
            "no q_proj/k_proj linear projections found on this model"
        )

    trainable = [name for name, p in model.named_parameters() if p.requires_grad]
    return AdapterReport(
        adapted_modules=adapted,
        trainable_names=trainable,
        trainable_params=sum(
            p.numel() for p in model.parameters() if p.requires_grad
        ),
        total_params=sum(p.numel() for p in model.parameters()),
    )


def audit_trainable_parameters(model: nn.Module) -> list[str]:
    """Names of trainable parameters; raises if any falls outside the q/k
    adapter tensors."""
    trainable = [name for name, p in model.named_parameters() if p.requires_grad]
    offenders = [name for name in trainable if not _ADAPTER_PARAM_RE.search(name)]
    if offenders:
        raise AssertionError(f"non-adapter parameters are trainable: {offenders}")
    return trainable


def adapter_state_dict(model: nn.Module) -> dict:
    return {
        name: param.detach().cpu()
        for name, param in model.named_parameters()
        if _ADAPTER_PARAM_RE.search(name)
    }

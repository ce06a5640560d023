"""Adapter attachment, freezing, and the trainable-parameter audit."""

from __future__ import annotations

import pytest
import torch
from torch import nn

from ewra_trainer.lora import (
    AdapterReport,
    LoRALinear,
    UnsupportedModelError,
    adapter_state_dict,
    apply_qk_adapters,
    audit_trainable_parameters,
)
from ewra_trainer.model import ModelConfig, TinyCausalLM


def tiny_model() -> TinyCausalLM:
    torch.manual_seed(0)
    return TinyCausalLM(ModelConfig(d_model=32, n_layers=2, n_heads=2, d_ff=64, max_seq_len=64))


class TestApplyQkAdapters:
    def test_trainable_params_only_in_qk_adapters(self):
        model = tiny_model()
        report = apply_qk_adapters(model, rank=4, alpha=4)
        names = audit_trainable_parameters(model)
        assert names == report.trainable_names
        assert all(("q_proj" in n or "k_proj" in n) and "lora_" in n for n in names)
        # 2 layers x (q, k) x (a, b)
        assert len(names) == 8

    def test_adapter_dims_match_rank(self):
        model = tiny_model()
        apply_qk_adapters(model, rank=16, alpha=16)
        attn = model.blocks[0].attn
        assert isinstance(attn.q_proj, LoRALinear)
        assert attn.q_proj.lora_a.shape == (16, 32)
        assert attn.q_proj.lora_b.shape == (32, 16)

    def test_attachment_preserves_function(self):
        model = tiny_model()
        ids = torch.randint(0, 255, (2, 10))
        before = model(ids)
        apply_qk_adapters(model, rank=8, alpha=8)
        after = model(ids)
        assert torch.allclose(before, after, atol=1e-6)

    def test_no_qk_projections_is_unsupported(self):
        class NoAttention(nn.Module):
            def __init__(self):
                super().__init__()
                self.dense = nn.Linear(4, 4)

        with pytest.raises(UnsupportedModelError):
            apply_qk_adapters(NoAttention(), rank=4, alpha=4)

    def test_gradients_absent_on_frozen_parameters(self):
        model = tiny_model()
        apply_qk_adapters(model, rank=4, alpha=4)
        ids = torch.randint(0, 255, (2, 12))
        logits = model(ids)
        loss = logits.float().pow(2).mean()
        loss.backward()
        for name, param in model.named_parameters():
            if "lora_" in name:
                assert param.grad is not None, name
            else:
                assert not param.requires_grad and param.grad is None, name

    def test_audit_flags_rogue_trainables(self):
        model = tiny_model()
        apply_qk_adapters(model, rank=4, alpha=4)
        model.lm_head.weight.requires_grad_(True)
        with pytest.raises(AssertionError, match="lm_head"):
            audit_trainable_parameters(model)

    def test_adapter_state_dict_contains_only_adapters(self):
        model = tiny_model()
        apply_qk_adapters(model, rank=4, alpha=4)
        state = adapter_state_dict(model)
        assert state
        assert all("lora_" in key for key in state)

    def test_report_counts(self):
        model = tiny_model()
        report = apply_qk_adapters(model, rank=4, alpha=4)
        assert isinstance(report, AdapterReport)
        assert report.trainable_params < report.total_params
        # 2 layers x (q, k), each rank*(in_features + out_features) params
        assert report.trainable_params == 4 * (4 * 32 + 32 * 4)

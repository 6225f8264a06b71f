"""MLP construction, initialization, and forward evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autograd import Parameter, Tensor
from .errors import ContractError
from .rng import substream


@dataclass(frozen=True)
class MlpConfig:
    input_dim: int
    hidden_dims: tuple[int, ...]
    output_dim: int
    activation: str = "relu"

    def __post_init__(self):
        if len(self.hidden_dims) < 1:
            raise ContractError("MLP needs at least one hidden layer")
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        if any(d < 1 for d in dims):
            raise ContractError(f"all MLP dims must be >= 1, got {dims}")
        if self.activation != "relu":
            raise ContractError(f"unsupported activation {self.activation!r}")

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        return list(zip(dims[:-1], dims[1:]))


def kaiming_uniform(shape: tuple[int, ...], fan_in: int, seed: int, name: str) -> np.ndarray:
    """fan-in scaled uniform init, fully determined by (seed, name)."""
    bound = float(np.sqrt(6.0 / fan_in))
    vals = substream(seed, "init", name).uniform(int(np.prod(shape)), -bound, bound)
    return vals.reshape(shape).astype(np.float32)


def init_mlp_params(cfg: MlpConfig, seed: int, prefix: str) -> dict[str, Parameter]:
    """Kaiming-uniform weights, zero biases; names '{prefix}.w{i}' / '.b{i}'."""
    params: dict[str, Parameter] = {}
    for i, (d_in, d_out) in enumerate(cfg.layer_dims):
        wname, bname = f"{prefix}.w{i}", f"{prefix}.b{i}"
        params[wname] = Parameter(kaiming_uniform((d_in, d_out), d_in, seed, wname), wname)
        params[bname] = Parameter(np.zeros(d_out, dtype=np.float32), bname)
    return params


def mlp_forward(cfg: MlpConfig, params: dict[str, Parameter], x: Tensor,
                prefix: str) -> Tensor:
    """Affine-ReLU stack with an affine final layer."""
    if x.data.ndim != 2 or x.data.shape[1] != cfg.input_dim:
        raise ContractError(
            f"MLP input must be (n, {cfg.input_dim}), got {x.data.shape}")
    n_layers = len(cfg.layer_dims)
    h = x
    for i in range(n_layers):
        w = params[f"{prefix}.w{i}"]
        b = params[f"{prefix}.b{i}"]
        if w.data.shape != cfg.layer_dims[i]:
            raise ContractError(f"parameter {prefix}.w{i} has shape {w.data.shape}, "
                                f"config expects {cfg.layer_dims[i]}")
        h = h @ w + b
        if i < n_layers - 1:
            h = h.relu()
    return h

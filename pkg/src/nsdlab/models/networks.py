"""ConvNet-D and MLP classifiers over flat parameter vectors.

ConvNet block: conv3x3(width) -> instance norm -> relu -> avgpool 2x2,
repeated ``depth`` times, then flatten and a linear classifier.
"""

from __future__ import annotations

import math

import numpy as np

from nsdlab.core.exceptions import ConfigError
from nsdlab.core.types import ModelFamily, ModelSpec
from nsdlab.diffmath import Node, as_node, nn, ops

from .params import ParamLayout, ParamVector, check_same_layout, unflatten_node


def param_shapes(spec: ModelSpec) -> list[tuple[str, tuple[int, ...]]]:
    """Deterministic parameter table for an architecture.

    Raises:
        ConfigError: If the input size is not divisible by ``2**depth`` (ConvNet)
    """
    channels, height, width = spec.input_shape
    shapes: list[tuple[str, tuple[int, ...]]] = []
    if spec.family is ModelFamily.CONVNET:
        factor = 2**spec.depth
        if height % factor or width % factor:
            msg = f"Input {height}x{width} is not divisible by 2**depth = {factor}"
            raise ConfigError(msg)
        in_channels = channels
        for d in range(spec.depth):
            shapes += [
                (f"conv{d}.weight", (spec.width, in_channels, 3, 3)),
                (f"conv{d}.bias", (spec.width,)),
                (f"norm{d}.weight", (spec.width,)),
                (f"norm{d}.bias", (spec.width,)),
            ]
            in_channels = spec.width
        features = spec.width * (height // factor) * (width // factor)
    else:
        features = channels * height * width
        for d in range(spec.depth):
            shapes += [(f"hidden{d}.weight", (features, spec.width)), (f"hidden{d}.bias", (spec.width,))]
            features = spec.width
    shapes += [("fc.weight", (features, spec.num_classes)), ("fc.bias", (spec.num_classes,))]
    return shapes


def classifier_features(spec: ModelSpec) -> int:
    """Input size of the final linear layer."""
    return dict(param_shapes(spec))["fc.weight"][0]


class Model:
    """Forward function bound to an architecture; parameters are passed in."""

    def __init__(self, spec: ModelSpec) -> None:
        self.spec = spec
        self.layout = ParamLayout.from_shapes(param_shapes(spec))

    def __repr__(self) -> str:
        return f"Model({self.spec.family.value}, depth={self.spec.depth}, width={self.spec.width})"

    def init_params(self, rng: np.random.Generator) -> ParamVector:
        """Kaiming-normal weights, zero biases, instance-norm affine at (1, 0)."""
        arrays: dict[str, np.ndarray] = {}
        for entry in self.layout.entries:
            name, shape = entry.name, entry.shape
            if name.startswith("norm") and name.endswith(".weight"):
                arrays[name] = np.ones(shape)
            elif name.endswith(".bias"):
                arrays[name] = np.zeros(shape)
            else:
                fan_in = math.prod(shape[1:]) if len(shape) == 4 else shape[0]
                gain = 1.0 if name == "fc.weight" else 2.0
                arrays[name] = rng.normal(0.0, math.sqrt(gain / fan_in), size=shape)
        return ParamVector.flatten(arrays, self.layout)

    def _params(self, theta: Node | ParamVector) -> dict[str, Node]:
        if isinstance(theta, ParamVector):
            theta = theta.as_node()
        return unflatten_node(theta, self.layout)

    def embed(self, theta: Node | ParamVector, images: Node | np.ndarray) -> Node:
        """Features ``(B, F)`` fed to the classifier."""
        return self._features(self._params(theta), images)

    def forward(self, theta: Node | ParamVector, images: Node | np.ndarray) -> Node:
        """Logits ``(B, C)`` for images ``(B, channels, H, W)``."""
        p = self._params(theta)
        return nn.linear(self._features(p, images), p["fc.weight"], p["fc.bias"])

    def _features(self, p: dict[str, Node], images: Node | np.ndarray) -> Node:
        x = as_node(images)
        if self.spec.family is ModelFamily.CONVNET:
            for d in range(self.spec.depth):
                x = nn.conv2d(x, p[f"conv{d}.weight"], p[f"conv{d}.bias"])
                x = nn.instance_norm(x, p[f"norm{d}.weight"], p[f"norm{d}.bias"])
                x = ops.relu(x)
                x = nn.avg_pool2x2(x)
            x = ops.reshape(x, (x.shape[0], -1))
        else:
            x = ops.reshape(x, (x.shape[0], -1))
            for d in range(self.spec.depth):
                x = ops.relu(nn.linear(x, p[f"hidden{d}.weight"], p[f"hidden{d}.bias"]))
        return x

    def loss(self, theta: Node | ParamVector, images: Node | np.ndarray, labels: np.ndarray) -> Node:
        return nn.softmax_cross_entropy(self.forward(theta, images), labels)

    def predict(self, theta: Node | ParamVector, images: np.ndarray) -> np.ndarray:
        return np.argmax(self.forward(theta, images).value, axis=1)


def build_model(spec: ModelSpec, seed: int | np.random.Generator) -> tuple[ParamVector, Model]:
    """Initialized parameters and the forward function for ``spec``.

    Args:
        spec: Architecture
        seed: Integer seed or generator; equal seeds give equal parameters
    """
    model = Model(spec)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return model.init_params(rng), model


def forward_loss(
    model: Model,
    params: ParamVector | Node,
    images: Node | np.ndarray,
    labels: np.ndarray,
) -> Node:
    """Mean cross-entropy; differentiable w.r.t. parameters and images.

    Raises:
        DataError: If a label is out of range
    """
    return model.loss(params, images, labels)


def param_distance(a: ParamVector, b: ParamVector) -> float:
    """Squared L2 distance between two parameter vectors of the same layout.

    Raises:
        ContractViolationError: On a layout mismatch
    """
    check_same_layout(a, b)
    diff = a.values - b.values
    return float(diff @ diff)

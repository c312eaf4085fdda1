"""Building kernel factors and initial distillation states.

Factor construction follows the Strategy pattern: one builder per
:class:`TransformKind`, applied to the spatial modes (3 and 4). Modes 1 and 2
always use random trainable factors, except for the identity kind.
"""

from __future__ import annotations

import logging
from collections.abc import Callable

import numpy as np

from nsdlab.core.exceptions import ConfigError
from nsdlab.core.types import LabeledImages, LabelRule, TransformKind, TransformSpec
from nsdlab.decomposition.budget import factor_kind
from nsdlab.decomposition.models import (
    DistillState,
    KernelFactor,
    SeparableKernel,
    SpectrumTensor,
    factor_name,
    spectrum_name,
)
from nsdlab.decomposition.planning import DecompositionPlan
from nsdlab.diffmath import Node

from .dct import dct_synthesis_factor
from .haar import haar_synthesis_factor
from .svd import mode_basis


logger = logging.getLogger(__name__)

FactorBuilder = Callable[[int, int, np.random.Generator, "np.ndarray | None", int], np.ndarray]


def _random(t: int, u: int, rng: np.random.Generator, images: np.ndarray | None, mode: int) -> np.ndarray:
    """Uniform [-0.5, 0.5] draws with every output column scaled to unit norm."""
    values = rng.uniform(-0.5, 0.5, size=(t, u))
    return values / np.linalg.norm(values, axis=0, keepdims=True)


def _dct(t: int, u: int, rng: np.random.Generator, images: np.ndarray | None, mode: int) -> np.ndarray:
    return dct_synthesis_factor(t, u)


def _dwt(t: int, u: int, rng: np.random.Generator, images: np.ndarray | None, mode: int) -> np.ndarray:
    return haar_synthesis_factor(t, u)


def _svd(t: int, u: int, rng: np.random.Generator, images: np.ndarray | None, mode: int) -> np.ndarray:
    if images is None:
        msg = "SVD kernels are initialized from real images; none were provided"
        raise ConfigError(msg)
    if images.shape[mode - 1] != u:
        msg = f"Images have extent {images.shape[mode - 1]} at mode {mode}, kernel decodes to {u}"
        raise ConfigError(msg)
    return mode_basis(images, mode - 1, t)


def _identity(t: int, u: int, rng: np.random.Generator, images: np.ndarray | None, mode: int) -> np.ndarray:
    if t != u:
        msg = f"Identity factors need equal extents, got t={t}, u={u} at mode {mode}"
        raise ConfigError(msg)
    return np.eye(t)


_BUILDERS: dict[TransformKind, FactorBuilder] = {
    TransformKind.RANDOM: _random,
    TransformKind.DCT: _dct,
    TransformKind.LDCT: _dct,
    TransformKind.DWT: _dwt,
    TransformKind.SVD: _svd,
    TransformKind.LSVD: _svd,
    TransformKind.IDENTITY: _identity,
}


def make_kernel_factors(
    spec: TransformSpec | TransformKind,
    tensor_dims: tuple[int, int, int, int],
    out_extents: tuple[int, int, int, int],
    *,
    rng: np.random.Generator,
    trainable: bool | None = None,
    images: np.ndarray | None = None,
    kernel_id: int = 0,
) -> SeparableKernel:
    """Build a separable kernel for ``t -> u``.

    Args:
        spec: Transform (or bare kind) for the spatial modes
        tensor_dims: ``(t1, t2, t3, t4)``
        out_extents: ``(u1, u2, u3, u4)``
        rng: Generator for random factors
        trainable: Override trainability of the spatial factors; by default
            only RANDOM and the ``L`` kinds are trainable
        images: Real images ``(B, C, H, W)`` for SVD kinds
        kernel_id: Index of the kernel within its state

    Returns:
        SeparableKernel with one factor per mode

    Raises:
        ConfigError: If the kind cannot produce the requested extents
    """
    kind = spec.kind if isinstance(spec, TransformSpec) else spec
    factors = []
    for mode, (t, u) in enumerate(zip(tensor_dims, out_extents, strict=True), start=1):
        used = factor_kind(kind, mode)
        values = _BUILDERS[used](t, u, rng, images, mode)
        learn = used.trainable
        if trainable is not None and used is kind and kind is not TransformKind.IDENTITY:
            learn = trainable
        leaf = Node.leaf(values, trainable=learn, name=factor_name(kernel_id, mode))
        factors.append(KernelFactor(mode=mode, values=leaf, kind=used, analytic=used.analytic))
    return SeparableKernel(factors=tuple(factors), kernel_id=kernel_id)  # type: ignore[arg-type]


def _class_images(real: LabeledImages, class_id: int, count: int, rng: np.random.Generator) -> np.ndarray:
    pool = np.flatnonzero(real.labels == class_id)
    if pool.size == 0:
        msg = f"No real images of class {class_id} to initialize from"
        raise ConfigError(msg)
    picks = rng.choice(pool, size=count, replace=pool.size < count)
    return real.images[picks]


def fit_spectrum(images: np.ndarray, kernel: SeparableKernel) -> np.ndarray:
    """Least-squares spectrum whose synthesis through ``kernel`` is closest to ``images``.

    ``images`` has the kernel's output extents ``(u1, u2, u3, u4)``. Each mode
    is solved with the pseudo-inverse of its synthesis map ``K_n^T``.
    """
    inverses = [np.linalg.pinv(f.values.value.T) for f in kernel.factors]
    return np.einsum("abcd,ia,jb,kc,ld->ijkl", images, *inverses)


def initial_state(
    plan: DecompositionPlan,
    spec: TransformSpec,
    num_classes: int,
    rng: np.random.Generator,
    *,
    label_rule: LabelRule = LabelRule.PER_CLASS_TENSORS,
    real: LabeledImages | None = None,
) -> DistillState:
    """Create the starting state for a plan.

    With real data (and ``spec.init_from_real``) each spectrum tensor is the
    least-squares fit of ``u1`` real images of its class through the first
    kernel, times ``spec.init_scale``. Identity (raw pixel) states copy the
    real images as they are. Otherwise spectra are uniform in [-0.5, 0.5].
    """
    kind = plan.kind
    images = real.images if real is not None else None
    kernels = tuple(
        make_kernel_factors(kind, plan.tensor_dims, plan.out_extents, rng=rng, images=images, kernel_id=j)
        for j in range(plan.n_kernels)
    )
    from_real = real is not None and (spec.init_from_real or kind is TransformKind.IDENTITY)
    spectra: list[np.ndarray] = []
    for i in range(plan.n_tensors):
        class_id = (i * num_classes) // plan.n_tensors
        if not from_real:
            spectra.append(rng.uniform(-0.5, 0.5, size=plan.tensor_dims))
            continue
        chosen = _class_images(real, class_id, plan.out_extents[0], rng)  # type: ignore[arg-type]
        if kind is TransformKind.IDENTITY:
            spectra.append(chosen)
        else:
            spectra.append(spec.init_scale * fit_spectrum(chosen, kernels[0]))
    logger.debug("Initialized %d spectra (%s)", len(spectra), "real fit" if from_real else "uniform")

    tensors = tuple(
        SpectrumTensor(
            values=Node.leaf(v, trainable=True, name=spectrum_name(i)),
            class_id=(i * num_classes) // plan.n_tensors,
            index=i,
        )
        for i, v in enumerate(spectra)
    )
    return DistillState(
        tensors=tensors,
        kernels=kernels,
        num_classes=num_classes,
        label_rule=label_rule,
        band_probs=spec.band_probs if kind is TransformKind.DWT else None,
    )

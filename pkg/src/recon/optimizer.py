"""Adam over the voxel field's two parameter groups."""

import numpy as np

from ..models.field import VoxelField
from ..models.parameters import OptimizerParams


class Adam:
    """Adaptive-moment optimizer with a separate step size for density and color."""

    def __init__(self, params: OptimizerParams) -> None:
        self.params = params
        self.step_count = 0
        self._moments: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    def _update(self, name: str, param: np.ndarray, grad: np.ndarray, lr: float) -> None:
        p = self.params
        m, v = self._moments.get(name, (np.zeros_like(param), np.zeros_like(param)))
        m = p.beta1 * m + (1.0 - p.beta1) * grad
        v = p.beta2 * v + (1.0 - p.beta2) * grad**2
        self._moments[name] = (m, v)
        m_hat = m / (1.0 - p.beta1**self.step_count)
        v_hat = v / (1.0 - p.beta2**self.step_count)
        param -= lr * m_hat / (np.sqrt(v_hat) + p.eps)

    def step(self, voxel_field: VoxelField) -> None:
        """Apply one update from the accumulated gradients, in place."""
        self.step_count += 1
        self._update("density", voxel_field.density_param, voxel_field.density_grad, self.params.lr_density)
        self._update("color", voxel_field.color_param, voxel_field.color_grad, self.params.lr_color)
        voxel_field.mark_updated()

"""Dynamic loss scaling for half-precision training.

The loss is multiplied by the scale before backward and gradients are
divided by it before the optimizer step. A step with any non-finite
gradient is skipped and the scale halves; after ``growth_interval``
consecutive good steps the scale doubles, capped at ``max_scale``.
Falling below ``min_scale`` aborts: the run cannot make progress.
"""


class ScaleUnderflowError(RuntimeError):
    """Loss scale fell below its floor; training is diverging."""


class DynamicLossScaler:
    def __init__(self, init_scale=2.0**10, growth_factor=2.0, backoff_factor=0.5,
                 growth_interval=2000, max_scale=2.0**16, min_scale=2.0**-4):
        if not min_scale <= init_scale <= max_scale:
            raise ValueError(
                f"need min_scale <= init_scale <= max_scale, got "
                f"{min_scale}, {init_scale}, {max_scale}"
            )
        self.scale = float(init_scale)
        self.growth_factor = float(growth_factor)
        self.backoff_factor = float(backoff_factor)
        self.growth_interval = int(growth_interval)
        self.max_scale = float(max_scale)
        self.min_scale = float(min_scale)
        self.good_steps = 0

    def update(self, found_inf: bool) -> None:
        if found_inf:
            new_scale = self.scale * self.backoff_factor
            self.good_steps = 0
            if new_scale < self.min_scale:
                raise ScaleUnderflowError(
                    f"loss scale {new_scale} fell below the floor {self.min_scale}; "
                    "gradients are persistently non-finite"
                )
            self.scale = new_scale
        else:
            self.good_steps += 1
            if self.good_steps >= self.growth_interval:
                self.scale = min(self.scale * self.growth_factor, self.max_scale)
                self.good_steps = 0

    def state(self) -> dict:
        return {"scale": self.scale, "good_steps": self.good_steps}

    def load_state(self, state: dict) -> None:
        self.scale = float(state["scale"])
        self.good_steps = int(state["good_steps"])

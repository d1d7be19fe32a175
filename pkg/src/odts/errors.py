"""Exception types shared across the package."""


class DomainError(ValueError):
    """A state, rate or observation lies outside the family's domain."""


class ConfigurationError(ValueError):
    """Invalid model, parameter space or experiment configuration."""


class DivergenceError(RuntimeError):
    """A simulated rate overflowed; the chain is numerically divergent."""

    def __init__(self, step, state=None):
        self.step = int(step)
        self.state = state
        msg = f"rate overflow at step {self.step}"
        if state is not None:
            msg += f" (state before the step: {state!r})"
        super().__init__(msg)

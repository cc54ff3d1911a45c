"""Exception types shared across the package.

ConfigError maps to CLI exit code 2, NumericsError and subclasses to 3.
"""


class JdgenError(Exception):
    pass


class ConfigError(JdgenError):
    """Invalid configuration, arguments, or missing prerequisite artifact."""


class NumericsError(JdgenError):
    """Numerical failure while computing (NaN loss, diverged state, ...)."""


class TrainingDiverged(NumericsError):
    def __init__(self, epoch, batch, value):
        self.epoch = epoch
        self.batch = batch
        self.value = value
        super().__init__(f"non-finite loss {value!r} at epoch {epoch}, batch {batch}")


class GenerationAborted(NumericsError):
    def __init__(self, step, mode):
        self.step = step
        self.mode = mode
        super().__init__(f"non-finite state in {mode} sampler at step {step}")


class TableMismatch(ConfigError):
    """Kernel table on disk does not match the active configuration."""

class InvalidArgumentError(ValueError):
    pass


class DivergentMdpError(RuntimeError):
    """Value iteration at gamma = 1 failed to settle (improper MDP or too few iterations)."""


class NotYetExploredError(ValueError):
    """Raised when an empirical policy is inverted before every action has been seen."""


class ConfigError(ValueError):
    """Experiment config failed validation; ``problems`` holds ``field.path: message`` strings."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))

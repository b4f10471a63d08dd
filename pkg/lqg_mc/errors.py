class LqgError(Exception):
    pass


class DomainError(LqgError, ValueError):
    # parameter outside the range where a construction is defined
    pass


class UnsupportedParameterError(DomainError):
    # valid parameter, restricted construction: natural time needs gamma = sqrt(8/3)
    pass


class ConfigError(LqgError, ValueError):
    pass


class RetryLimitError(LqgError, RuntimeError):
    def __init__(self, message, n_tries=0, n_accepted=0):
        self.n_tries = n_tries
        self.n_accepted = n_accepted
        super().__init__(
            f"{message} (tries: {n_tries}, accepted: {n_accepted}, "
            f"acceptance rate: {self.acceptance_rate:.3g})"
        )

    @property
    def acceptance_rate(self):
        if self.n_tries == 0:
            return 0.0
        return self.n_accepted / self.n_tries

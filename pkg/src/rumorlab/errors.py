"""Exception types. Every error carries a short machine-readable ``code``."""


class RumorLabError(Exception):
    def __init__(self, code, message=None):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)


class GraphError(RumorLabError, ValueError):
    pass


class ProtocolError(RumorLabError):
    pass


class ExactError(RumorLabError, ValueError):
    pass


class ConfigError(RumorLabError, ValueError):
    pass

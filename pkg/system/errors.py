from typing import Optional


class CovqecError(Exception):
    """Base of every error raised by covqec"""


def error_factory(class_type: str, base: type = CovqecError) -> type:
    class GenericError(base):
        def __init__(self, message: str, residual: Optional[float] = None):
            super().__init__(message)
            self.type = class_type
            self.message = message
            self.residual = residual

        def __str__(self) -> str:
            if self.residual is None:
                return f'{self.type}:{self.message}'
            return f'{self.type}:{self.message} (residual {self.residual:.3e})'

    return GenericError


class DomainError(error_factory('DomainError')):
    pass


class DimensionError(error_factory('DimensionError')):
    pass


class NotHermitianError(error_factory('NotHermitianError')):
    pass


class TracePreservationError(error_factory('TracePreservationError')):
    pass


class DephasingFitError(error_factory('DephasingFitError')):
    pass


class SdpError(error_factory('SdpError')):
    pass


class CertificationError(error_factory('CertificationError')):
    pass


class BoundViolationError(error_factory('BoundViolationError')):
    pass


class ConfigError(CovqecError):
    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        super().__init__(message)
        self.type = 'ConfigError'
        self.message = message
        self.line = line
        self.key = key

    def __str__(self) -> str:
        where = []
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.key:
            where.append(self.key)
        prefix = f" [{', '.join(where)}]" if where else ""
        return f"ConfigError{prefix}: {self.message}"

"""Exception hierarchy; each class knows the CLI exit code it maps to."""


class CoralSimError(Exception):
    exit_code = 1
    step = None
    t = None

    def __init__(self, msg, **context):
        super().__init__(msg)
        self.msg = msg
        self.context = context

    def to_dict(self):
        return {'msg': self.msg, **self.context}

    def at_step(self, step, t):
        self.step = step
        self.t = t
        self.context.update(step=step, t=t)
        return self

    def __reduce__(self):
        # subclasses take extra keyword arguments; rebuild from msg and context
        return _restore, (type(self), self.msg, dict(self.context))


def _restore(cls, msg, context):
    exc = cls.__new__(cls)
    CoralSimError.__init__(exc, msg, **context)
    for name, value in context.items():
        if name in ('line', 'residual', 'iterations', 'field', 'step', 't'):
            setattr(exc, name, value)
    return exc


class ValidationError(CoralSimError, ValueError):
    exit_code = 1


class ConfigError(ValidationError):
    def __init__(self, msg, line=0, **context):
        super().__init__(f"line {line}: {msg}" if line else msg, line=line, **context)
        self.line = line


class SnapshotError(ValidationError):
    pass


class SnapshotFormatError(SnapshotError):
    pass


class SnapshotTruncatedError(SnapshotError):
    pass


class SnapshotVersionError(SnapshotError):
    pass


class SolverFailure(CoralSimError, RuntimeError):
    exit_code = 2

    def __init__(self, msg, residual=None, iterations=None, **context):
        super().__init__(msg, residual=residual, iterations=iterations, **context)
        self.residual = residual
        self.iterations = iterations


class SimulationError(CoralSimError, RuntimeError):
    exit_code = 2


class CFLViolation(SimulationError):
    pass


class NonFiniteField(SimulationError):
    def __init__(self, field, **context):
        super().__init__(f"non-finite values in field '{field}'", field=field, **context)
        self.field = field

"""Exception types raised across the package."""


class LgmdError(Exception):
    """Base class for all package errors."""


class ParseError(LgmdError, ValueError):
    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class UnsortedTimestamps(LgmdError, ValueError):
    def __init__(self, line):
        self.line = line
        super().__init__(f"line {line}: timestamp decreases")


class OutOfBounds(LgmdError, ValueError):
    def __init__(self, line, x, y, width, height):
        self.line = line
        super().__init__(f"line {line}: pixel ({x}, {y}) outside {width}x{height}")


class DegenerateStimulus(LgmdError, ValueError):
    pass


class InvalidProbability(LgmdError, ValueError):
    pass


class GridMismatch(LgmdError, ValueError):
    pass


class ConfigError(LgmdError, ValueError):
    pass


class NumericalBlowup(LgmdError, ArithmeticError):
    def __init__(self, index, time=None, layer=None):
        self.index = index
        self.time = time
        self.layer = layer
        where = f"neuron {index}"
        if layer is not None:
            where = f"layer {layer}, {where}"
        if time is not None:
            where = f"{where} at t={time:.1f} ms"
        super().__init__(f"non-finite state in {where}")


class EmptyConfusion(LgmdError, ValueError):
    pass


class EmptySample(LgmdError, ValueError):
    pass


class PopulationTooSmall(LgmdError, ValueError):
    pass


class IllConditioned(LgmdError, ArithmeticError):
    pass

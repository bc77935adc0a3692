"""Exception hierarchy for the glassboard engine."""


class GlassboardError(Exception):
    """Base class for all engine errors."""


# -- geometry ---------------------------------------------------------------

class DegenerateProjection(GlassboardError):
    """Eye and content point share (nearly) the same depth; no stable ray-plane
    intersection exists."""


# -- tracking ---------------------------------------------------------------

class EmptyHistory(GlassboardError):
    pass


class InsufficientSamples(GlassboardError):
    pass


class MissingDevice(GlassboardError):
    def __init__(self, role: str):
        super().__init__(f"no pose for required role {role!r}")
        self.role = role


class StalePose(GlassboardError):
    def __init__(self, role: str, age_us: int):
        super().__init__(f"pose for role {role!r} is stale ({age_us} us old)")
        self.role = role
        self.age_us = age_us


# -- board scene ------------------------------------------------------------

class NotInWritingMode(GlassboardError):
    pass


class RolePlayInactive(GlassboardError):
    pass


class NotInModelingMode(GlassboardError):
    pass


# -- protocol ---------------------------------------------------------------

class UnencodableValue(GlassboardError):
    """Message contains values (NaN/inf) that have no canonical wire form."""


class MalformedFrame(GlassboardError):
    pass


class UnknownType(GlassboardError):
    pass


class SchemaViolation(GlassboardError):
    """Structurally valid frame that violates the message schema.

    ``path`` points at the offending field, e.g. ``payload.position[2]``.
    """

    def __init__(self, path: str, reason: str = "invalid value"):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


# -- analytics --------------------------------------------------------------

class RatingOutOfRange(GlassboardError):
    pass


class Infeasible(GlassboardError):
    pass


class EmptySignal(GlassboardError):
    pass


class ZeroBaseline(GlassboardError):
    pass


class ZeroVariance(GlassboardError):
    pass


class DegenerateAgreement(GlassboardError):
    pass


class MissingVariable(GlassboardError):
    def __init__(self, missing: list[str]):
        super().__init__("dataset missing required inputs: " + ", ".join(missing))
        self.missing = missing


class ProviderUnavailable(GlassboardError):
    pass


# -- cli / config -----------------------------------------------------------

class ConfigInvalid(GlassboardError):
    def __init__(self, path: str, reason: str = "invalid value"):
        super().__init__(f"config field {path}: {reason}")
        self.path = path
        self.reason = reason


class PortInUse(GlassboardError):
    pass


class ScriptInvalid(GlassboardError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"script line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason

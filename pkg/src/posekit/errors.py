"""Exception types raised across posekit."""


class PoseKitError(Exception):
    """Base class for all posekit errors."""


class InvalidArgumentError(PoseKitError, ValueError):
    pass


class BehindCameraError(PoseKitError, ValueError):
    pass


class EmptyCloudError(PoseKitError, ValueError):
    pass


class DegenerateConfigurationError(PoseKitError, ValueError):
    pass


class InvalidMeshError(PoseKitError, ValueError):
    pass


class RecordParseError(PoseKitError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RecordValidationError(PoseKitError, ValueError):
    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field is not None:
            prefix += f"field '{field}': "
        super().__init__(prefix + message)


class MatchingError(PoseKitError, ValueError):
    """Predictions and ground truth could not be paired one-to-one."""

    def __init__(self, message, unmatched=()):
        self.unmatched = list(unmatched)
        if self.unmatched:
            shown = ", ".join(f"{fid}/{cat}" for fid, cat in self.unmatched[:20])
            more = "" if len(self.unmatched) <= 20 else f" (+{len(self.unmatched) - 20} more)"
            message = f"{message}: {shown}{more}"
        super().__init__(message)

"""Error hierarchy. Everything the CLI turns into exit code 1 derives from
BridgeError; argparse handles usage errors separately."""


class BridgeError(Exception):
    pass


class BadStateFile(BridgeError):
    """Input is not a readable, well-formed state file."""


class Era5ConversionError(BridgeError):
    pass


class MissingVariables(Era5ConversionError):
    """One or more required fields absent from the source files."""

    def __init__(self, names: list[str]):
        self.names = sorted(names)
        super().__init__(
            f"{len(self.names)} required variable(s) missing from the "
            f"source files: {', '.join(self.names)}"
        )


class StatsConversionError(BridgeError):
    pass


class FetchError(BridgeError):
    pass


class WeightsMissing(BridgeError):
    pass

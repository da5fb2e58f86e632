"""Exception hierarchy shared by every seqfusion module."""


class SeqFusionError(Exception):
    """Base class for all errors raised by seqfusion."""


class DimensionError(SeqFusionError, ValueError):
    """Array shapes disagree with the declared dataset or model dimensions."""


class StratificationError(SeqFusionError, ValueError):
    """A class has too few samples for the requested stratified split."""


class DegenerateFitError(SeqFusionError, ValueError):
    """Model cannot be fit, e.g. more HMM states than observations."""


class TrainingError(SeqFusionError, RuntimeError):
    """Gradient training diverged or received non-finite values."""


class LeakageError(SeqFusionError, RuntimeError):
    """A feature extractor was asked to enrich a sample it was trained on."""


class DatasetLoadError(SeqFusionError, ValueError):
    """On-disk dataset is malformed. Carries file, row and column when known."""

    def __init__(self, message, path=None, row=None, column=None):
        self.path = path
        self.row = row
        self.column = column
        where = []
        if path is not None:
            where.append(f"file={path}")
        if row is not None:
            where.append(f"row={row}")
        if column is not None:
            where.append(f"column={column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ConfigError(SeqFusionError, ValueError):
    """Experiment configuration is invalid."""

"""Matrix Profile and classifier based intrusion detection for Modbus/TCP OT networks."""

from ._icsdetect import (  # noqa: F401
    Alert,
    AlertSource,
    BinLabel,
    Error,
    InputError,
    LabeledDataset,
    PacketLabel,
    PacketRecord,
    PreconditionError,
    TimeSeries,
    UsageError,
    correlate,
    features,
    format_alerts,
    format_capture,
    format_dataset,
    format_series,
    learn,
    modbus,
    mprofile,
    parse_alerts,
    parse_capture,
    parse_dataset,
    parse_series,
    pipeline,
    read_capture,
    read_series,
    simulate,
)

__version__ = "0.1.0"

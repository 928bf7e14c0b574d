"""Semi-supervised edge anomaly detection on continuous-time dynamic graphs.

The heavy lifting lives in the compiled ``_core`` extension; this package
re-exports it.
"""

from ._core import (
    EventStore,
    Experiment,
    Label,
    anomaly_score,
    config_keys,
    config_text,
    ecc_loss,
    echsc_loss,
    generate_community_stream,
    inject_anomalies,
    inject_offbeat_repeats,
    load_dataset,
    roc_auc,
    sample_subgraph,
    spectral_cluster,
)

__all__ = [
    "EventStore",
    "Experiment",
    "Label",
    "anomaly_score",
    "config_keys",
    "config_text",
    "ecc_loss",
    "echsc_loss",
    "generate_community_stream",
    "inject_anomalies",
    "inject_offbeat_repeats",
    "load_dataset",
    "roc_auc",
    "sample_subgraph",
    "spectral_cluster",
]

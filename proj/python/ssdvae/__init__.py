# SPDX-License-Identifier: Apache-2.0
"""Semi-supervised frame VAE for event scripts.

Corpora are lists of lines in the on-disk format::

    F3 F3 -<TAB>verb subj obj mod verb subj obj mod ...
"""

from ._ssdvae import (
    CheckpointError,
    ConfigError,
    ContractError,
    CorpusError,
    Model,
    build_inc,
    config_keys,
    config_text,
    describe_key,
    entropy,
    gumbel_softmax,
    synth,
    train,
)

__all__ = [
    "CheckpointError",
    "ConfigError",
    "ContractError",
    "CorpusError",
    "Model",
    "build_inc",
    "config_keys",
    "config_text",
    "describe_key",
    "entropy",
    "gumbel_softmax",
    "synth",
    "train",
]


def config(**overrides):
    """Config text from keyword overrides; use ``__`` for the dot (``train__epsilon=0.9``)."""
    return config_text({k.replace("__", "."): str(v) for k, v in overrides.items()})

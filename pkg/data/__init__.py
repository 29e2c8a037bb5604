"""Audio and feature file handling.

- wav: PCM16 mono 16 kHz read/write
- features: ARTF feature files, loudness extraction, alignment
- dataset: manifests, crops, train/val/test splits
- synthetic: corpus-free utterances for desk runs and tests
"""

from data.binary import BinaryReader
from data.dataset import Dataset, UtteranceRecord, align_and_crop, split_dataset
from data.features import FeatureFile, extract_loudness, read_features, write_features
from data.synthetic import synthetic_utterance
from data.wav import read_wav, write_wav

__all__ = [
    "BinaryReader",
    "read_wav",
    "write_wav",
    "FeatureFile",
    "read_features",
    "write_features",
    "extract_loudness",
    "UtteranceRecord",
    "Dataset",
    "align_and_crop",
    "split_dataset",
    "synthetic_utterance",
]

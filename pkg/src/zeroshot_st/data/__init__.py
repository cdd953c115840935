"""Synthetic corpus, pseudo-audio, vocabulary, datasets, and batch scheduling."""
from .audio import Codebook, UtteranceFrames, default_codebook, render_pseudo_audio
from .batching import Batch, collate
from .corpus import (
    Lang,
    Lexicon,
    ParallelCorpus,
    Sentence,
    gen_parallel_corpus,
    normalize_words,
    reverse_language,
    translate_sentence,
)
from .datasets import (
    ASR,
    AUDIO,
    MT,
    SETTINGS,
    ST,
    TEXT,
    Dataset,
    Direction,
    Sample,
    assemble_training_set,
    make_dataset,
    make_sample,
    vocab_for_corpus,
)
from .manifest import read_corpus_manifest, write_corpus_manifest
from .schedule import DatasetSchedule, schedule_batches
from .vocab import Vocabulary, build_vocab

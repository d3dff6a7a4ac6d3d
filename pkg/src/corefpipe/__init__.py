"""Mention extraction, singleton-aware mention-pair linking and coreference scoring."""

__version__ = "0.1.0"

from .candidates import Candidate, Source, extract_candidates, post_process_nonnp
from .conll import Chain, Document, Span, read_conll, write_conll
from .features import SCHEMA, CandidateFeaturizer, featurize
from .gbt import GBTClassifier, GbtConfig, GbtModel, predict_proba, train_gbt
from .linker import LinkerConfig, LinkerModel, MentionPairLinker, link, train_linker
from .metrics import ScoreReport, b3, ceaf_phi4, mention_prf, muc, score_corpus
from .pipeline import MentionDetector
from .treebank import ParsedSentence, TreeNode, parse_tree, parse_trees, serialize_tree

__all__ = [
    "Candidate", "Source", "extract_candidates", "post_process_nonnp",
    "Chain", "Document", "Span", "read_conll", "write_conll",
    "SCHEMA", "CandidateFeaturizer", "featurize",
    "GBTClassifier", "GbtConfig", "GbtModel", "predict_proba", "train_gbt",
    "LinkerConfig", "LinkerModel", "MentionPairLinker", "link", "train_linker",
    "ScoreReport", "b3", "ceaf_phi4", "mention_prf", "muc", "score_corpus",
    "MentionDetector",
    "ParsedSentence", "TreeNode", "parse_tree", "parse_trees", "serialize_tree",
]

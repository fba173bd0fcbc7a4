"""Frequent-motif mining on grid topologies.

An encoder maps anchored neighborhoods into an order-embedding space where
subgraph containment shows up as elementwise dominance; motifs are grown
greedily under frequency estimates read off a store of reference vectors,
and an exact backtracking matcher provides ground truth.
"""

from .encoder import (EncoderParams, FeatureSpec, TrainConfig, calibrate_threshold, encode,
                      energy, feature_spec_for, load_params, loss, predict_subgraph, save_params, train)
from .errors import GridMotifError
from .graph import (Graph, Neighborhood, NodeFeatures, NodeType, build_graph, canonical_key,
                    induced_subgraph, is_isomorphic, k_hop_neighborhood)
from .ingest import GraphCorpus, load_corpus, parse_edge_list, parse_json_case, parse_matpower_case
from .oracle import (INDUCED, MONOMORPHISM, MatchSemantics, anchored_contains, brute_force_count,
                     exact_support, vf2_count)
from .sampling import build_dataset, decompose, sample_neighborhood
from .search import mine_motifs, run_trial
from .store import RefStore, build_reference_store, estimate_frequency, load_store, save_store

__version__ = "0.1.0"

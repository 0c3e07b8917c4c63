"""Hierarchical attention Seq2Seq next-sentence lyrics generator.

A from-scratch float64/numpy implementation: GRU recurrences with manual
backward passes, a two-level (word/sentence) encoder over a sliding context
window, additive attention over the last context sentence, beam search
decoding, Adam training with early stopping, and corpus-level BLEU.
"""

__version__ = "0.1.0"

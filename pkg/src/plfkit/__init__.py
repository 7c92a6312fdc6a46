"""Weakly supervised phonological-feature toolkit.

Train an interpretable frame-level feature bottleneck from phone labels,
turn the frame features into utterance-level descriptors (phone error rate
and histogram features), and run the intelligibility/pathology evaluation
protocol on top.
"""

__version__ = "0.1.0"

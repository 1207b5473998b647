"""Double MPEG-4 compression detection from decoded I-frames.

Pipeline: intra-quantization simulator for synthetic data, multi-scale
block-DCT histogram features plus an auxiliary quantization vector, a
three-stream classifier trained with Adam, and frame/GOP/video-level
detection with standard evaluation metrics.
"""

__version__ = "0.1.0"

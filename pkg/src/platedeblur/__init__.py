"""License plate deblurring toolkit.

Synthetic plate degradation (capture physics, motion blur, sensor noise,
low light), a multi-scale window-attention restoration network trained
adversarially with global and per-character critics plus text supervision,
a capture post-processing pipeline (wavelet denoising, correlation-based
alignment, paired cropping), and an evaluation harness.
"""

__version__ = "0.1.0"

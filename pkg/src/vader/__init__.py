"""Virtual axle detection from bridge acceleration signals.

A parametric 1-D/2-D U-Net over raw acceleration series or wavelet
spectrograms, a receptive-field-rule hyperparameter planner, the training
protocol with plateau learning-rate decay and early stopping, spatial
tolerance detection metrics, and a synthetic bridge-crossing simulator for
desk-scale end-to-end validation.
"""

__version__ = "0.1.0"

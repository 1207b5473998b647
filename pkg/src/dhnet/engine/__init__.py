from .adam import AdamState, TrainingAbort, adam_step
from .checkpoint import load_checkpoint, save_checkpoint
from .layers import (
    batchnorm_backward,
    batchnorm_forward,
    concat_backward,
    concat_forward,
    conv2d_backward,
    conv2d_forward,
    dense_backward,
    dense_forward,
    l2_reg,
    maxpool_2x2_backward,
    maxpool_2x2_forward,
    relu_backward,
    relu_forward,
    softmax,
    softmax_xent_backward,
    softmax_xent_forward,
)

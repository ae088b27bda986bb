from .gradcheck import GradReport, grad_check, numeric_gradient, relative_error
from .layers import (
    conv2d, conv2d_backward, conv2d_forward, conv2d_nhwc_backward, conv2d_nhwc_forward, conv_transpose_nhwc,
    dense, dense_backward, dense_forward, dropout, dropout_backward, dropout_forward, maxpool2d,
    maxpool2d_backward, maxpool2d_forward, maxpool_nhwc_backward, maxpool_nhwc_forward, relu, relu_backward,
    relu_forward, softmax, softmax_cross_entropy, temporal_conv1d_backward, temporal_conv1d_forward,
    temporal_maxpool_backward, temporal_maxpool_forward,
)
from .lstm import LstmState, lstm_backward, lstm_forward, lstm_step
from .optim import ADAM_EPS, ParameterStore, adam_step

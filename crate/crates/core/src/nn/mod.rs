//! From-scratch neural building blocks: layer ops with hand-written
//! backward passes, the optimizer, parameter init, a finite-difference
//! gradient checker and a flat checkpoint format.
//!
//! Every op exposes `forward -> (output, cache)` and a matching backward
//! that consumes the cache, so models compose them without an autograd
//! graph.

mod adam;
mod checkpoint;
mod gradcheck;
mod init;
mod ops;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use gradcheck::gradient_check;
pub use init::glorot_uniform;
pub use ops::{
    dense_backward, dense_forward, dropout, dropout_backward, graph_conv_backward,
    graph_conv_forward, l2_loss, l2_loss_with_grad, masked_cross_entropy,
    masked_cross_entropy_with_grad, relu, relu_backward, softmax_backward, softmax_rows,
    temporal_conv_backward, temporal_conv_forward, Activation, DenseCache, DropoutCache,
    GraphConvCache, GraphConvGrads, Mode, TemporalConvCache, TemporalConvGrads,
};

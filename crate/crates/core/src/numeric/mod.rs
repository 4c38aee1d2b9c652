//! Small differentiable-numerics layer: tensors, parameter storage, the
//! layers the controllers use, and their hand-written backward passes.

mod activation;
mod adam;
mod conv;
mod dense;
mod gradcheck;
mod linalg;
mod lstm;
mod params;
mod softmax;
mod tensor;

pub use activation::{relu, relu_backward, sigmoid};
pub use adam::{Adam, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPSILON};
pub use conv::{conv2d_forward, Conv2d};
pub use dense::Dense;
pub use gradcheck::{finite_diff_check, relative_error, GradCheckReport};
pub use lstm::{LstmCache, LstmCell, LstmState};
pub use params::{ParamId, ParamStore};
pub use softmax::{categorical_sample, log_prob_grad_into, softmax};
pub use tensor::Tensor;

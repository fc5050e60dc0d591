//! Model backends that emit [`PredictionTensor`]s.

mod discrete;
mod ensemble;
pub mod io;
mod tensor;

pub use discrete::{example1_model, DiscreteHypothesisModel, ExactStats};
pub use ensemble::{ensemble_predict_samples, ensemble_train, EnsembleModel, LinearClassifier, TrainHyper};
pub use io::{load_predictions, save_predictions};
pub use tensor::{PredictionTensor, SIMPLEX_TOL};

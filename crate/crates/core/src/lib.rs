pub mod bench;
pub mod circuit;
pub mod clifford;
pub mod error;
pub mod io;
pub mod estimator;
pub mod oracle;
pub mod pauli;
pub mod summation;
pub mod trained_mean;
pub mod verify;

pub use circuit::{
    CircuitTemplate, CliffordLayerSpec, Condition, Gate, GateApplication, InputPoint, Observable,
    ObservableTerm, ParameterVector,
};
pub use clifford::{rotation_conjugate, CliffordTableau, DiscreteAngle};
pub use error::{Error, Result};
pub use estimator::{Estimator, GramEstimate, KernelEstimate, SampleSet};
pub use pauli::{PauliElement, PauliLetter};
pub use trained_mean::{TrainingDynamicsConfig, TrainingSet, TrainingTime};

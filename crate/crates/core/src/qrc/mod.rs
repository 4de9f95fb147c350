//! Loop-based Gaussian reservoir computer.
//!
//! Each time step a squeezed pulse whose squeezing phase encodes the input
//! sample meets the loop on a 50:50 coupler. One output arm is measured
//! (x-quadrature moments, ensemble averaged), the other passes a squeezing
//! crystal and becomes the next loop state. A linear ridge readout maps the
//! measured moments to the forecast.

mod experiment;
mod readout;
mod reservoir;

pub use experiment::{
    forecast, forecast_from_rows, run_sweep, ForecastResult, PredictionRow, SweepRow, SweepSpec,
};
pub use readout::{default_lambda, nmse, train_readout, TrainedReadout};
pub use reservoir::{
    add_readout_noise, ideal_rows, noisy_rows, relative_noise_intensity, step_reservoir, Encoding,
    Reservoir, ReservoirConfig,
};

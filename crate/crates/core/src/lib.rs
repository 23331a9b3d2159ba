pub mod cli;
pub mod gauss;
pub mod io;
pub mod loss;
pub mod raster;
pub mod rectifier;
pub mod rig;
pub mod train;

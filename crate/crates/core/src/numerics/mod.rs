pub mod branches;
pub mod contour;
pub mod ivp;
pub mod pencil;
pub mod roots;
pub mod spectrum;

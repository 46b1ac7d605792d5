//! Gradient-vanishing analysis: the principal Lambert W branch, the
//! probability at which a loss's gradient-magnitude bound falls to the
//! cross-entropy level, and loss/gradient curve tables for plotting.

mod curves;
mod lambert;
mod vanishing;

pub use curves::{curve_export, default_grid, write_curve, write_curve_file, CurveRow, CurveSpec};
pub use lambert::lambert_w0;
pub use vanishing::{
    ce_grad, fl_grad_bound, fl_vanishing_threshold, tfl_grad_bound, tfl_vanishing_threshold,
    VanishingReport,
};

//! Propagation from the plate to observation points and receiver arrays.

mod channel;
mod field;

pub use crate::quadrature::SurfaceGrid;
pub use channel::{
    capacity, channel_gain_vector, channel_gradient, channel_vector, channel_vector_for_profile, kirchhoff_contribution,
    impedance_gain_scale, obliquity_angle, path_distance, path_gain_vector, received_power, steering_vector,
    ChannelVector, RowKernel,
};
pub use field::{
    arc_point, dyadic_field_at, equivalent_current, field_at, fields_at_antennas, normalized_arc_power,
    received_power_em, FieldSample, SampledAperture,
};

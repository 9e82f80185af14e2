//! Unit conversions applied at configuration load and report output.
//! Everything inside the model is SI: meters, square meters, cubic meters.

/// Square meters per international acre.
pub const ACRE_M2: f64 = 4_046.856_422_4;
pub const MM_PER_M: f64 = 1000.0;
pub const FOOT_M: f64 = 0.3048;

pub fn acres_to_m2(a: f64) -> f64 {
    a * ACRE_M2
}

pub fn m2_to_acres(m2: f64) -> f64 {
    m2 / ACRE_M2
}

pub fn mm_to_m(mm: f64) -> f64 {
    mm / MM_PER_M
}

pub fn feet_to_m(ft: f64) -> f64 {
    ft * FOOT_M
}

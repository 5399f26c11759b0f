//! Bundled demo scenario matching 802.11be-style multiband probing.

use crate::model::{BandPlan, MultipathChannel};

/// Seven-path indoor channel used by the bundled benchmark scenarios.
pub fn default_channel() -> MultipathChannel {
    MultipathChannel::from_ns_db(
        &[3.0, 5.0, 10.0, 16.0, 22.0, 28.0, 33.0],
        &[0.0, -3.0, -5.0, -4.0, -6.0, -5.5, -7.0],
    )
    .expect("valid preset")
}

/// Four 20 MHz bands at {6, 6.120, 6.320, 6.440} GHz on a 78.125 kHz grid.
pub fn default_band_plan() -> BandPlan {
    BandPlan::from_center_frequencies(&[6.0e9, 6.120e9, 6.320e9, 6.440e9], 78.125e3, 256)
        .expect("valid preset")
}

//! Closed-form rate calculators.

use aol::bounds::{
    barpsi, barpsi_breakpoints, dudley_inf, loc_radius, psi_nms, rate_exponent, tilde_psi,
    xi_bound, BoundInputs, EntropyModel, RadiusSource, Setting,
};

fn main() -> aol::Result<()> {
    println!("psi_nms(100, 10, 1)   = {:.7}", psi_nms(100, 10, 1)?);
    println!("tilde_psi(1, 100)     = {}", tilde_psi(1, 100)?);
    let (low, high) = barpsi_breakpoints(4096, 4.0);
    println!("barpsi breakpoints    = {low}, {high}");
    for delta2 in [0.01, 0.09, 0.5] {
        println!("barpsi(4096, 4, {delta2:.2}) = {}", barpsi(4096, 4.0, delta2)?);
    }
    let finite = EntropyModel::Finite { m: 8.0 };
    let r = loc_radius(&RadiusSource::Model { model: finite }, 1000)?;
    println!("r*(finite, M=8, n=1000) = {r:.7}");
    for model in [EntropyModel::Poly { a: 1.0, p: 3.0 }, EntropyModel::Vc { a: 1.0, v: 3.0 }] {
        let (alpha, value) = dudley_inf(&model, 1000)?;
        let xi = xi_bound(&model, &BoundInputs::new(1000, 0.1, 0.05, 0.01))?;
        println!("{model:?}: dudley inf {value:.4} at alpha {alpha:.4}, xi {xi:.4}");
    }
    for setting in [
        Setting::RegretPoly { p: 2.0 },
        Setting::RegretPoly { p: 4.0 },
        Setting::SkeletonPoly { p: 1.0 },
        Setting::RegretLower { p: 3.0 },
    ] {
        println!("{setting:?}: n^{}", rate_exponent(&setting)?);
    }
    Ok(())
}

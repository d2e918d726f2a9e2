use jscc_core::asymptotics::{exponent_direct, Assumption, AsymptoticSummary};
use jscc_core::bounds::BoundQuery;
use jscc_core::tilted::Variant;
use jscc_core::{
    JointChannelChainF32, JointChannelChainF64, SourceChainF32, SourceChainF64, StochasticMatrix,
    TiltedFamilyF32, TiltedFamilyF64,
};

#[test]
fn f32_tracks_f64_end_to_end() {
    let w32 = StochasticMatrix::<f32>::binary(0.1, 0.2).unwrap();
    let w64 = StochasticMatrix::<f64>::binary(0.1, 0.2).unwrap();
    let s32 = SourceChainF32::stationary(w32.clone()).unwrap();
    let c32 = JointChannelChainF32::singleton(w32).unwrap();
    let s64 = SourceChainF64::stationary(w64.clone()).unwrap();
    let c64 = JointChannelChainF64::singleton(w64).unwrap();

    let a = AsymptoticSummary::new(&s32, &c32, 0.75).unwrap();
    let b = AsymptoticSummary::new(&s64, &c64, 0.75).unwrap();
    assert!((a.optimal_rate as f64 - b.optimal_rate).abs() < 1e-4);
    assert!((a.dispersion as f64 - b.dispersion).abs() < 0.05 * b.dispersion);

    let f32_fam = TiltedFamilyF32::new(&s32, &c32, 0.75, Variant::Up).unwrap();
    let f64_fam = TiltedFamilyF64::new(&s64, &c64, 0.75, Variant::Up).unwrap();
    let e32 = exponent_direct(&f32_fam, 2f32.ln(), Assumption::Two).unwrap();
    let e64 = exponent_direct(&f64_fam, 2f64.ln(), Assumption::Two).unwrap();
    assert!((e32 as f64 - e64).abs() < 1e-5, "{e32} vs {e64}");

    let d32 = BoundQuery::new(&s32, &c32, 750, 1000)
        .unwrap()
        .direct_a2()
        .unwrap();
    let d64 = BoundQuery::new(&s64, &c64, 750, 1000)
        .unwrap()
        .direct_a2()
        .unwrap();
    let (x, y) = (
        d32.value.finite().unwrap() as f64,
        d64.value.finite().unwrap(),
    );
    assert!((x - y).abs() < 1e-2 * y.abs().max(1.0), "{x} vs {y}");
}

use eqvt_flow::{
    compose_flow, coverage_map, decode_flo, encode_flo, make_synthetic_flow, warp_frame, FlowField,
    FlowKind, Frame, WarpMode,
};
use proptest::prelude::*;

fn small_flow() -> impl Strategy<Value = FlowField> {
    (1usize..6, 1usize..6).prop_flat_map(|(w, h)| {
        let n = w * h;
        (
            Just(w),
            Just(h),
            proptest::collection::vec(-8.0f32..8.0, n),
            proptest::collection::vec(-8.0f32..8.0, n),
        )
            .prop_map(|(w, h, u, v)| FlowField::new(w, h, u, v).unwrap())
    })
}

proptest! {
    #[test]
    fn flo_roundtrip_identity(flow in small_flow()) {
        let bytes = encode_flo(&flow);
        let back = decode_flo(&bytes).unwrap();
        prop_assert_eq!(&back, &flow);
        prop_assert_eq!(encode_flo(&back), bytes);
    }

    #[test]
    fn compose_with_zero_preserves_flow(flow in small_flow()) {
        let zero = FlowField::zeros(flow.width(), flow.height());
        for composed in [compose_flow(&zero, &flow).unwrap(), compose_flow(&flow, &zero).unwrap()] {
            for i in 0..flow.u().len() {
                prop_assert!((composed.u()[i] - flow.u()[i]).abs() < 1e-6);
                prop_assert!((composed.v()[i] - flow.v()[i]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn coverage_counts_match_transported_subsamples(flow in small_flow(), s in 1usize..4) {
        let cov = coverage_map(&flow, s);
        // Conservation: every sub-sample either lands in exactly one
        // target pixel or leaves the image.
        prop_assert!(cov.total() <= (s * s * flow.width() * flow.height()) as u64);
    }

    #[test]
    fn integer_shift_warp_equals_index_shift(
        dx in -3i32..4,
        dy in -3i32..4,
        seed in 0u64..64,
    ) {
        let (w, h) = (9usize, 7usize);
        let frame = Frame::from_fn(w, h, |x, y| {
            ((x as u64 * 31 + y as u64 * 17 + seed) % 101) as f32
        });
        let flow = make_synthetic_flow(
            FlowKind::Translate { dx: dx as f64, dy: dy as f64 }, w, h).unwrap();
        let out = warp_frame(&frame, &flow, WarpMode::BackwardBilinear).unwrap();
        for y in 0..h as i32 {
            for x in 0..w as i32 {
                let (sx, sy) = (x - dx, y - dy);
                if sx >= 0 && sy >= 0 && (sx as usize) < w && (sy as usize) < h {
                    prop_assert_eq!(
                        out.at(x as usize, y as usize),
                        frame.at(sx as usize, sy as usize)
                    );
                }
            }
        }
    }
}

use crate::{FlowError, FlowField};

/// Middlebury `.flo` magic number; reads as "PIEH" in ASCII.
pub const FLO_MAGIC: f32 = 202021.25;

const MAX_DIM: i32 = 1 << 16;

/// Decodes a Middlebury `.flo` byte stream: magic float, `i32` width and
/// height, then `height*width*2` little-endian `f32` values interleaved
/// `(u, v)` in row-major order.
pub fn decode_flo(bytes: &[u8]) -> Result<FlowField, FlowError> {
    if bytes.len() < 12 {
        return Err(FlowError::Truncated { needed: 12, have: bytes.len() });
    }
    let magic = f32::from_le_bytes(bytes[0..4].try_into().unwrap());
    if magic != FLO_MAGIC {
        return Err(FlowError::BadMagic { expected: FLO_MAGIC, found: magic });
    }
    let width = i32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let height = i32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if width <= 0 || height <= 0 || width > MAX_DIM || height > MAX_DIM {
        return Err(FlowError::BadDims { width, height });
    }
    let (w, h) = (width as usize, height as usize);
    let needed = 12 + w * h * 2 * 4;
    if bytes.len() != needed {
        return Err(FlowError::Truncated { needed, have: bytes.len() });
    }
    let mut u = Vec::with_capacity(w * h);
    let mut v = Vec::with_capacity(w * h);
    for i in 0..w * h {
        let off = 12 + i * 8;
        u.push(f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()));
        v.push(f32::from_le_bytes(bytes[off + 4..off + 8].try_into().unwrap()));
    }
    FlowField::new(w, h, u, v)
}

/// Encodes a flow field in the exact byte layout accepted by [`decode_flo`].
pub fn encode_flo(flow: &FlowField) -> Vec<u8> {
    let (w, h) = (flow.width(), flow.height());
    let mut out = Vec::with_capacity(12 + w * h * 8);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(w as i32).to_le_bytes());
    out.extend_from_slice(&(h as i32).to_le_bytes());
    for i in 0..w * h {
        out.extend_from_slice(&flow.u()[i].to_le_bytes());
        out.extend_from_slice(&flow.v()[i].to_le_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_built_single_pixel() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&FLO_MAGIC.to_le_bytes());
        bytes.extend_from_slice(&1i32.to_le_bytes());
        bytes.extend_from_slice(&1i32.to_le_bytes());
        bytes.extend_from_slice(&1.5f32.to_le_bytes());
        bytes.extend_from_slice(&(-2.0f32).to_le_bytes());
        assert_eq!(bytes.len(), 20);
        let flow = decode_flo(&bytes).unwrap();
        assert_eq!((flow.width(), flow.height()), (1, 1));
        assert_eq!(flow.u(), &[1.5]);
        assert_eq!(flow.v(), &[-2.0]);
    }

    #[test]
    fn zero_flow_encodes_to_20_zero_payload_bytes() {
        let bytes = encode_flo(&FlowField::zeros(1, 1));
        assert_eq!(bytes.len(), 20);
        assert!(bytes[12..].iter().all(|&b| b == 0));
    }

    #[test]
    fn two_by_two_layout_is_row_major_interleaved() {
        let flow =
            FlowField::new(2, 2, vec![1.0, 2.0, 3.0, 4.0], vec![5.0, 6.0, 7.0, 8.0]).unwrap();
        let bytes = encode_flo(&flow);
        let expect: Vec<f32> = vec![1.0, 5.0, 2.0, 6.0, 3.0, 7.0, 4.0, 8.0];
        for (i, e) in expect.iter().enumerate() {
            let off = 12 + i * 4;
            let got = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
            assert_eq!(got, *e, "word {i}");
        }
    }

    #[test]
    fn bad_magic_rejected() {
        let mut bytes = encode_flo(&FlowField::zeros(1, 1));
        bytes[0..4].copy_from_slice(&0.0f32.to_le_bytes());
        assert!(matches!(decode_flo(&bytes), Err(FlowError::BadMagic { .. })));
    }

    #[test]
    fn truncation_and_bad_dims_rejected() {
        let bytes = encode_flo(&FlowField::zeros(2, 2));
        assert!(matches!(decode_flo(&bytes[..bytes.len() - 1]), Err(FlowError::Truncated { .. })));
        assert!(matches!(decode_flo(&bytes[..8]), Err(FlowError::Truncated { .. })));

        let mut bad = bytes.clone();
        bad[4..8].copy_from_slice(&(-1i32).to_le_bytes());
        assert!(matches!(decode_flo(&bad), Err(FlowError::BadDims { .. })));
        bad[4..8].copy_from_slice(&(1i32 << 20).to_le_bytes());
        assert!(matches!(decode_flo(&bad), Err(FlowError::BadDims { .. })));
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let flow = FlowField::new(
            3,
            2,
            vec![0.25, -1.0, 3.5, 0.0, 9.75, -0.125],
            vec![1.0, 2.0, -3.0, 4.5, 0.0, -8.25],
        )
        .unwrap();
        let bytes = encode_flo(&flow);
        let back = decode_flo(&bytes).unwrap();
        assert_eq!(back, flow);
        assert_eq!(encode_flo(&back), bytes);
    }
}

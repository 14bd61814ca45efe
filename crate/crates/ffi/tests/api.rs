use std::ffi::CStr;
use std::ptr;

use ramsignal_ffi::*;

fn last_error() -> String {
    let p = rsig_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn synthesize_noise_decode() {
    unsafe {
        let mut clean = ptr::null_mut();
        let payload = b"DATA";
        let st = rsig_signal_synthesize(
            payload.as_ptr(),
            payload.len(),
            RSIG_SCHEME_MANCHESTER,
            1000,
            200_000,
            1.0,
            &mut clean,
        );
        assert_eq!(st, RsigStatus::Ok);
        // 1 ms silence + 72 bits + 1 ms silence
        assert_eq!(rsig_signal_len(clean), 74 * 200);
        assert_eq!(rsig_signal_sample_rate(clean), 200_000);

        let mut noisy = ptr::null_mut();
        assert_eq!(
            rsig_channel_apply(clean, 22.0, 5, 100.0, &mut noisy),
            RsigStatus::Ok
        );

        let mut result = ptr::null_mut();
        assert_eq!(
            rsig_demodulate(noisy, RSIG_SCHEME_MANCHESTER, 1000, 0.25, &mut result),
            RsigStatus::Ok
        );
        assert_eq!(rsig_result_frame_count(result), 1);
        let mut info = RsigFrameInfo::default();
        assert_eq!(rsig_result_frame(result, 0, &mut info), RsigStatus::Ok);
        assert!(info.crc_valid);
        assert_eq!(info.payload_bits, 32);

        let mut needed = 0usize;
        assert_eq!(
            rsig_result_payload(result, 0, ptr::null_mut(), 0, &mut needed),
            RsigStatus::BufferTooSmall
        );
        assert_eq!(needed, 4);
        let mut buf = [0u8; 8];
        assert_eq!(
            rsig_result_payload(result, 0, buf.as_mut_ptr(), buf.len(), &mut needed),
            RsigStatus::Ok
        );
        assert_eq!(&buf[..needed], b"DATA");
        assert_eq!(
            rsig_result_frame(result, 1, &mut info),
            RsigStatus::OutOfRange
        );

        rsig_result_free(result);
        rsig_signal_free(noisy);
        rsig_signal_free(clean);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut sig = ptr::null_mut();
        assert_eq!(
            rsig_signal_synthesize(ptr::null(), 0, 7, 1000, 200_000, 1.0, &mut sig),
            RsigStatus::InvalidArgument
        );
        assert!(last_error().contains("scheme"));
        assert_eq!(
            rsig_signal_synthesize(
                ptr::null(),
                4,
                RSIG_SCHEME_OOK,
                1000,
                200_000,
                1.0,
                &mut sig
            ),
            RsigStatus::NullPointer
        );
        assert_eq!(
            rsig_signal_synthesize(
                b"x".as_ptr(),
                1,
                RSIG_SCHEME_OOK,
                1001,
                200_000,
                1.0,
                &mut sig
            ),
            RsigStatus::InvalidArgument
        );
        assert!(sig.is_null());

        let zeros = [0f32; 1000];
        assert_eq!(
            rsig_signal_from_samples(zeros.as_ptr(), zeros.len(), 200_000, &mut sig),
            RsigStatus::Ok
        );
        let mut result = ptr::null_mut();
        assert_eq!(
            rsig_demodulate(sig, RSIG_SCHEME_OOK, 1000, 0.0, &mut result),
            RsigStatus::NoSignal
        );
        let nan = [f32::NAN];
        let mut bad = ptr::null_mut();
        assert_eq!(
            rsig_signal_from_samples(nan.as_ptr(), 1, 10, &mut bad),
            RsigStatus::InvalidArgument
        );
        rsig_signal_free(sig);
        rsig_signal_free(ptr::null_mut());
        rsig_result_free(ptr::null_mut());
        assert_eq!(rsig_signal_len(ptr::null()), 0);
    }
}

#[test]
fn calculators() {
    unsafe {
        let mut v = 0.0;
        assert_eq!(rsig_distance_to_snr(300.0, &mut v), RsigStatus::Ok);
        assert_eq!(v, 22.0);
        assert_eq!(rsig_distance_to_snr(10.0, &mut v), RsigStatus::OutOfRange);
        assert_eq!(
            rsig_faraday_attenuation(2.0, 1.0, 1.0, 2.0, &mut v),
            RsigStatus::Ok
        );
        assert!((v + 3.0103).abs() < 1e-4);
        let (mut p, mut o) = (0.0, 0.0);
        assert_eq!(rsig_exfil_time(128, 10.0, &mut p, &mut o), RsigStatus::Ok);
        assert_eq!((p, o), (1.28, 0.4));
        assert_eq!(
            rsig_exfil_time(0, 10.0, &mut p, &mut o),
            RsigStatus::InvalidArgument
        );
        assert_eq!(
            rsig_exfil_time(1, 10.0, ptr::null_mut(), &mut o),
            RsigStatus::NullPointer
        );
    }
}

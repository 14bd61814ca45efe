#ifndef RAMSIGNAL_H
#define RAMSIGNAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define RSIG_SCHEME_OOK 0

#define RSIG_SCHEME_MANCHESTER 1

typedef enum RsigStatus {
  RSIG_STATUS_OK = 0,
  RSIG_STATUS_NULL_POINTER = 1,
  RSIG_STATUS_INVALID_ARGUMENT = 2,
  RSIG_STATUS_OUT_OF_RANGE = 3,
  RSIG_STATUS_BUFFER_TOO_SMALL = 4,
  RSIG_STATUS_NO_SIGNAL = 5,
  RSIG_STATUS_PANIC = 6,
} RsigStatus;

// Frames recovered by [`rsig_demodulate`].
typedef struct RsigDecodeResult RsigDecodeResult;

// An amplitude envelope.
typedef struct RsigSignal RsigSignal;

// Summary of one recovered frame.
typedef struct RsigFrameInfo {
  size_t start_sample;
  size_t end_sample;
  uint32_t payload_bits;
  bool crc_valid;
  size_t code_violations;
} RsigFrameInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *rsig_last_error(void);

// Frames `payload` (`payload_len` bytes), line-codes it and renders the
// envelope with one bit time of silence either side.
//
// # Safety
// `payload` must point to `payload_len` readable bytes (it may be NULL when
// `payload_len` is 0); `out` must be a valid pointer to write a handle to.
enum RsigStatus rsig_signal_synthesize(const uint8_t *payload,
                                       size_t payload_len,
                                       uint32_t scheme_code,
                                       uint64_t bit_time_us,
                                       uint32_t sample_rate,
                                       double amplitude,
                                       struct RsigSignal **out);

// Copies `len` samples into a new signal.
//
// # Safety
// `samples` must point to `len` readable floats; `out` must be writable.
enum RsigStatus rsig_signal_from_samples(const float *samples,
                                         size_t len,
                                         uint32_t sample_rate,
                                         struct RsigSignal **out);

// Number of samples; 0 for NULL.
//
// # Safety
// `signal` must be NULL or a live handle.
size_t rsig_signal_len(const struct RsigSignal *signal);

// Borrowed view of the samples, valid until the handle is freed.
//
// # Safety
// `signal` must be NULL or a live handle.
const float *rsig_signal_samples(const struct RsigSignal *signal);

// # Safety
// `signal` must be NULL or a live handle.
uint32_t rsig_signal_sample_rate(const struct RsigSignal *signal);

// # Safety
// `signal` must be NULL or a handle not yet freed.
void rsig_signal_free(struct RsigSignal *signal);

// Adds calibrated Gaussian noise. `snr_db` may be +inf (no noise);
// `correlation_us` of 0 gives white noise.
//
// # Safety
// `input` must be a live handle; `out` must be writable.
enum RsigStatus rsig_channel_apply(const struct RsigSignal *input,
                                   double snr_db,
                                   uint64_t seed,
                                   double correlation_us,
                                   struct RsigSignal **out);

// Runs the receiver. A signal without any ON/OFF contrast gives
// `RSIG_STATUS_NO_SIGNAL`; a signal with no frame gives an empty result.
//
// # Safety
// `signal` must be a live handle; `out` must be writable.
enum RsigStatus rsig_demodulate(const struct RsigSignal *signal,
                                uint32_t scheme_code,
                                uint64_t bit_time_us,
                                double sync_tolerance,
                                struct RsigDecodeResult **out);

// # Safety
// `result` must be NULL or a live handle.
size_t rsig_result_frame_count(const struct RsigDecodeResult *result);

// # Safety
// `result` must be a live handle; `out` must be writable.
enum RsigStatus rsig_result_frame(const struct RsigDecodeResult *result,
                                  size_t index,
                                  struct RsigFrameInfo *out);

// Copies frame `index`'s payload as bytes (last byte zero-padded). Always
// stores the required size in `written`; if `buf_len` is too small nothing
// is copied and `RSIG_STATUS_BUFFER_TOO_SMALL` is returned.
//
// # Safety
// `result` must be a live handle; `buf` must have `buf_len` writable bytes
// (may be NULL when `buf_len` is 0); `written` must be writable.
enum RsigStatus rsig_result_payload(const struct RsigDecodeResult *result,
                                    size_t index,
                                    uint8_t *buf,
                                    size_t buf_len,
                                    size_t *written);

// # Safety
// `result` must be NULL or a handle not yet freed.
void rsig_result_free(struct RsigDecodeResult *result);

// Calibrated SNR at `distance_cm` (50 to 700 cm).
//
// # Safety
// `out_db` must be writable.
enum RsigStatus rsig_distance_to_snr(double distance_cm, double *out_db);

// Shield attenuation in dB (never positive).
//
// # Safety
// `out_db` must be writable.
enum RsigStatus rsig_faraday_attenuation(double sigma,
                                         double thickness,
                                         double mu,
                                         double frequency,
                                         double *out_db);

// Payload transmission time and single-frame overhead, in seconds.
//
// # Safety
// `payload_s` and `overhead_s` must be writable.
enum RsigStatus rsig_exfil_time(uint64_t size_bits,
                                double bit_time_ms,
                                double *payload_s,
                                double *overhead_s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RAMSIGNAL_H */

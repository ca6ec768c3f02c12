#ifndef AUCTIONLAB_H
#define AUCTIONLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AlStatus {
  AL_STATUS_OK = 0,
  AL_STATUS_NULL_POINTER = 1,
  AL_STATUS_DOMAIN = 2,
  AL_STATUS_NON_CONVERGENCE = 3,
  AL_STATUS_SOLVER = 4,
  AL_STATUS_SIZE = 5,
  AL_STATUS_IDENTIFICATION = 6,
  AL_STATUS_UNDEFINED_STATISTIC = 7,
  AL_STATUS_SINGULAR = 8,
  AL_STATUS_DEGENERATE_OBSERVATION = 9,
  AL_STATUS_PARSE = 10,
  AL_STATUS_IO = 11,
  AL_STATUS_PANIC = 12,
} AlStatus;

// A tabulated bid function.
typedef struct AlBidFunction AlBidFunction;

// One bidder's value/bid observations in round order.
typedef struct AlSubject AlSubject;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length plus one, or 0 when
// there is no error.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t al_last_error_message(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *al_version(void);

// Risk-neutral first-price equilibrium bid with `n` bidders.
//
// # Safety
// `out_bid` must be null or valid for writes.
enum AlStatus al_fp_bid(double theta, uint32_t n, double *out_bid);

// Dominant-strategy bid of the credible second-price auction.
double al_csp_bid(double theta);

// Seller's best response to two bids: the higher bidder wins (ties go to
// slot 0) at `min(b_high, b_low + gamma)`.
//
// # Safety
// Output pointers must be null or valid for writes.
enum AlStatus al_seller_best_response(double bid1,
                                      double bid2,
                                      double gamma,
                                      uint32_t *out_winner,
                                      double *out_price);

// Solves the symmetric NCSP equilibrium. `grid_size = 0` and `tol <= 0`
// select the defaults (1001 points, 1e-8).
//
// # Safety
// `out_fn` must be null or valid for writes.
enum AlStatus al_solve_ncsp(double gamma,
                            uint32_t n,
                            size_t grid_size,
                            double tol,
                            struct AlBidFunction **out_fn);

// Number of grid points; 0 for a null handle.
//
// # Safety
// `f` must be null or a live handle.
size_t al_bidfn_len(const struct AlBidFunction *f);

// Bid at `theta`, interpolated linearly.
//
// # Safety
// `f` must be null or a live handle; `out_bid` null or valid for writes.
enum AlStatus al_bidfn_eval(const struct AlBidFunction *f, double theta, double *out_bid);

// Copies the grid and bids into caller buffers of length `len`, which must
// equal `al_bidfn_len(f)`.
//
// # Safety
// Buffers must be valid for `len` writes.
enum AlStatus al_bidfn_copy(const struct AlBidFunction *f,
                            double *thetas,
                            double *bids,
                            size_t len);

// # Safety
// `f` must be null or a handle not yet freed.
void al_bidfn_free(struct AlBidFunction *f);

// Creates a subject from `len` value/bid pairs in round order.
//
// # Safety
// `thetas` and `bids` must be valid for `len` reads; `out_subject` valid for writes.
enum AlStatus al_subject_new(const double *thetas,
                             const double *bids,
                             size_t len,
                             struct AlSubject **out_subject);

// # Safety
// `s` must be null or a handle not yet freed.
void al_subject_free(struct AlSubject *s);

// Houtman–Maks index under the first-price test with two bidders holding
// equilibrium beliefs. `out_kept` (optional) receives the size of the largest
// consistent subset.
//
// # Safety
// `s` must be a live handle; outputs null or valid for writes.
enum AlStatus al_hmi_fp(const struct AlSubject *s, double *out_hmi, size_t *out_kept);

// Houtman–Maks index under the NCSP test with seller tolerance `gamma`.
//
// # Safety
// `s` must be a live handle; outputs null or valid for writes.
enum AlStatus al_hmi_ncsp(const struct AlSubject *s,
                          double gamma,
                          double *out_hmi,
                          size_t *out_kept);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AUCTIONLAB_H */

#ifndef BSSN_LAB_H
#define BSSN_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define BSSN_PORT_C 0

#define BSSN_PORT_D 1

#define BSSN_PORT_HARM_C 2

#define BSSN_PORT_HARM_D 3

typedef enum BssnStatus {
  BSSN_STATUS_OK = 0,
  BSSN_STATUS_NULL_POINTER = 1,
  BSSN_STATUS_INVALID_ARGUMENT = 2,
  // The expression has a vanishing denominator at these parameters.
  BSSN_STATUS_SINGULAR = 3,
  // Mandel Q of a port with zero mean photon number.
  BSSN_STATUS_UNDEFINED = 4,
  BSSN_STATUS_INTERNAL = 5,
} BssnStatus;

// Opaque handle: output operators of the map at fixed parameters and cutoffs.
typedef struct BssnLab BssnLab;

typedef struct BssnComplex {
  double re;
  double im;
} BssnComplex;

// Coupling coefficients of the reduced family.
typedef struct BssnFamily {
  struct BssnComplex z[4];
  struct BssnComplex w[3];
} BssnFamily;

// Output-port statistics for coherent fundamental inputs and vacuum harmonics.
typedef struct BssnPortStats {
  double mean_n;
  // Meaningful only when `mandel_q_defined` is set.
  double mandel_q;
  bool mandel_q_defined;
  double squeeze_min;
  double squeeze_argmin;
} BssnPortStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *bssn_last_error(void);

const char *bssn_version(void);

// Builds the output operators at `cutoffs` (four entries, modes a, b, A, B).
enum BssnStatus bssn_lab_new(double kappa,
                             double eta,
                             double theta_bs,
                             const size_t *cutoffs,
                             struct BssnLab **out);

// Accepts null.
void bssn_lab_free(struct BssnLab *handle);

enum BssnStatus bssn_lab_family(const struct BssnLab *handle, struct BssnFamily *out);

// Statistics of `port` for coherent inputs `|x⟩_a |y⟩_b` (real amplitudes).
enum BssnStatus bssn_lab_port_stats(const struct BssnLab *handle,
                                    uint32_t port_id,
                                    double x,
                                    double y,
                                    struct BssnPortStats *out);

// Squeezing witness of `port` at quadrature angle `theta`.
enum BssnStatus bssn_lab_squeeze(const struct BssnLab *handle,
                                 uint32_t port_id,
                                 double x,
                                 double y,
                                 double theta,
                                 double *out);

// Dimension of the constraint nullspace at `theta_bs`.
enum BssnStatus bssn_nullspace_dimension(double theta_bs,
                                         const size_t *cutoffs,
                                         size_t margin,
                                         bool drop_energy,
                                         size_t *out);

enum BssnStatus bssn_s_fund(double kappa,
                            double eta,
                            double theta_bs,
                            double theta,
                            double x,
                            double y,
                            double *out);

enum BssnStatus bssn_q_fund(double kappa, double x, double y, double *out);

enum BssnStatus bssn_q_sh(double kappa, double eta, double x, double y, double *out);

enum BssnStatus bssn_s_sh(double kappa, double eta, double x, double y, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BSSN_LAB_H */

/* y[j] = M @ x[j] for three consecutive length-n vectors (split complex).
   mr/mi hold M transposed so the inner loop runs down contiguous columns. */
#ifndef MSGATE_MATVEC_H
#define MSGATE_MATVEC_H
#include <stddef.h>

static inline void msgate_matvec3(const double *restrict mr,
                                  const double *restrict mi,
                                  const double *restrict xr,
                                  const double *restrict xi,
                                  double *restrict yr, double *restrict yi,
                                  ptrdiff_t n)
{
    double *restrict y0r = yr, *restrict y0i = yi;
    double *restrict y1r = yr + n, *restrict y1i = yi + n;
    double *restrict y2r = yr + 2 * n, *restrict y2i = yi + 2 * n;
    for (ptrdiff_t m = 0; m < 3 * n; ++m) {
        yr[m] = 0.0;
        yi[m] = 0.0;
    }
    for (ptrdiff_t k = 0; k < n; ++k) {
        const double *restrict cr = mr + k * n;
        const double *restrict ci = mi + k * n;
        const double x0r = xr[k], x0i = xi[k];
        const double x1r = xr[n + k], x1i = xi[n + k];
        const double x2r = xr[2 * n + k], x2i = xi[2 * n + k];
        for (ptrdiff_t m = 0; m < n; ++m) {
            const double a = cr[m], b = ci[m];
            y0r[m] += a * x0r - b * x0i;
            y0i[m] += a * x0i + b * x0r;
            y1r[m] += a * x1r - b * x1i;
            y1i[m] += a * x1i + b * x1r;
            y2r[m] += a * x2r - b * x2i;
            y2i[m] += a * x2i + b * x2r;
        }
    }
}
#endif

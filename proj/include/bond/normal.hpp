#pragma once

namespace bond {

// Standard normal density, CDF, survival function, and quantile.
// The quantile uses a rational approximation polished with one Newton step
// against the erfc-based CDF; absolute error is far below 1e-9 everywhere.
double normal_pdf(double x);
double normal_cdf(double x);
double normal_sf(double x);
double normal_quantile(double p);

}  // namespace bond

#pragma once

namespace prevalid {

// Thin wrappers around the boost::math distributions used for analytical
// p-values; kept out of line so Boost headers stay in one translation unit.

double normal_cdf(double x);
double normal_upper_tail(double x);
double student_t_cdf(double x, double df);
double student_t_upper_tail(double x, double df);
double student_t_quantile(double prob, double df);
double chi_squared_cdf(double x, double df);
double chi_squared_upper_tail(double x, double df);
double chi_squared_pdf(double x, double df);

}  // namespace prevalid

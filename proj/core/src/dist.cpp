#include "prevalid/dist.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace prevalid {

double normal_cdf(double x) {
  return boost::math::cdf(boost::math::normal_distribution<>(), x);
}

double normal_upper_tail(double x) {
  return boost::math::cdf(boost::math::complement(boost::math::normal_distribution<>(), x));
}

double student_t_cdf(double x, double df) {
  return boost::math::cdf(boost::math::students_t_distribution<>(df), x);
}

double student_t_upper_tail(double x, double df) {
  return boost::math::cdf(boost::math::complement(boost::math::students_t_distribution<>(df), x));
}

double student_t_quantile(double prob, double df) {
  return boost::math::quantile(boost::math::students_t_distribution<>(df), prob);
}

double chi_squared_cdf(double x, double df) {
  if (x <= 0.0) return 0.0;
  return boost::math::cdf(boost::math::chi_squared_distribution<>(df), x);
}

double chi_squared_upper_tail(double x, double df) {
  if (x <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<>(df), x));
}

double chi_squared_pdf(double x, double df) {
  if (x <= 0.0) return 0.0;
  return boost::math::pdf(boost::math::chi_squared_distribution<>(df), x);
}

}  // namespace prevalid

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ldpkit {

// Error taxonomy maps onto process exit codes (see cli): bad configuration -> 1,
// a certified property found violated -> 2, numerical non-convergence -> 3.
struct config_error : std::runtime_error {
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};
struct violation_error : std::runtime_error {
  explicit violation_error(const std::string& what) : std::runtime_error(what) {}
};
struct convergence_error : std::runtime_error {
  explicit convergence_error(const std::string& what) : std::runtime_error(what) {}
};

std::uint64_t fnv1a64(std::string_view s);
std::uint64_t splitmix64(std::uint64_t x);

// Trapezoidal rule over equally spaced node values.
double trapezoid(const std::vector<double>& node_values, double dt);

double median(std::vector<double> xs);  // by copy; input order untouched

// Wilson score interval for a binomial proportion at normal quantile z.
struct WilsonInterval {
  double p_hat = 0.0, lo = 0.0, hi = 1.0;
};
WilsonInterval wilson_interval(std::int64_t hits, std::int64_t n, double z = 1.959963984540054);

// Least-squares fit y = a + b*x; returns (a, b).
struct LineFit {
  double intercept = 0.0, slope = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Upper-tail probability of a standard normal, evaluated by the Mills-ratio
// continued fraction (independent of std::erfc; used as the dual route in the
// Gaussian tail cross-checks). Accurate to ~1e-15 relative for z >= 1.
double normal_tail_cf(double z);
// Same quantity through the C library error function.
double normal_tail_erfc(double z);

// RFC 4180 CSV: quotes fields containing comma/quote/newline, "." decimal point.
std::string csv_escape(const std::string& field);
std::string csv_row(const std::vector<std::string>& fields);
std::string format_double(double v);  // shortest round-trip representation

}  // namespace ldpkit

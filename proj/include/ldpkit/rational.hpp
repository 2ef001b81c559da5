#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "ldpkit/util.hpp"

namespace ldpkit {

// Exact rational with 64-bit terms and 128-bit cross products. Growth/regularity
// exponents (rho_j, beta_j) are carried as rationals so the subcriticality
// classification 2*beta*(1+rho) vs 2+rho is decided without float rounding.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d) : num(n), den(d) { normalize(); }
  static Rational integer(std::int64_t n) { return Rational(n, 1); }

  void normalize() {
    if (den == 0) throw config_error("rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  double value() const { return double(num) / double(den); }

  friend Rational operator+(Rational a, Rational b) {
    __int128 n = __int128(a.num) * b.den + __int128(b.num) * a.den;
    __int128 d = __int128(a.den) * b.den;
    return from128(n, d);
  }
  friend Rational operator-(Rational a, Rational b) {
    __int128 n = __int128(a.num) * b.den - __int128(b.num) * a.den;
    __int128 d = __int128(a.den) * b.den;
    return from128(n, d);
  }
  friend Rational operator*(Rational a, Rational b) {
    return from128(__int128(a.num) * b.num, __int128(a.den) * b.den);
  }
  friend bool operator==(const Rational& a, const Rational& b) {
    return __int128(a.num) * b.den == __int128(b.num) * a.den;
  }
  friend bool operator<(const Rational& a, const Rational& b) {
    return __int128(a.num) * b.den < __int128(b.num) * a.den;
  }
  friend bool operator<=(const Rational& a, const Rational& b) { return a < b || a == b; }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }

  // Accepts "p/q", integers, and plain decimals ("0.75" -> 3/4, exactly).
  static Rational parse(const std::string& text);

  std::string str() const {
    return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
  }

 private:
  static Rational from128(__int128 n, __int128 d) {
    if (d < 0) {
      n = -n;
      d = -d;
    }
    __int128 an = n < 0 ? -n : n;
    __int128 g = gcd128(an, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    constexpr __int128 lim = __int128(INT64_MAX);
    if (n > lim || n < -lim || d > lim)
      throw config_error("rational: overflow after reduction");
    Rational r;
    r.num = std::int64_t(n);
    r.den = std::int64_t(d);
    return r;
  }
  static __int128 gcd128(__int128 a, __int128 b) {
    while (b != 0) {
      __int128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }
};

inline Rational Rational::parse(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) throw config_error("rational: empty value");
  auto slash = s.find('/');
  try {
    if (slash != std::string::npos) {
      return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
    }
    auto dot = s.find('.');
    if (dot == std::string::npos) return Rational(std::stoll(s), 1);
    std::string ip = s.substr(0, dot), fp = s.substr(dot + 1);
    bool neg = !ip.empty() && ip[0] == '-';
    if (fp.size() > 18) throw config_error("rational: too many decimal digits: " + text);
    std::int64_t den = 1;
    for (std::size_t i = 0; i < fp.size(); ++i) den *= 10;
    std::int64_t whole = ip.empty() || ip == "-" || ip == "+" ? 0 : std::stoll(ip);
    std::int64_t frac = fp.empty() ? 0 : std::stoll(fp);
    __int128 n = __int128(whole < 0 ? -whole : whole) * den + frac;
    if (neg || whole < 0) n = -n;
    return from128(n, den);
  } catch (const std::invalid_argument&) {
    throw config_error("rational: cannot parse: " + text);
  } catch (const std::out_of_range&) {
    throw config_error("rational: out of range: " + text);
  }
}

}  // namespace ldpkit

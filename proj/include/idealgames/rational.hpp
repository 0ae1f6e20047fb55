#pragma once

#include <string>
#include <string_view>

#include <gmpxx.h>

#include "idealgames/error.hpp"

namespace idealgames {

using Rational = mpq_class;

// Accepts "3", "-2", "1/3", "-0.05", "2.5". Decimals convert exactly.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw Error(Errc::Parse, "empty number");
  bool neg = false;
  std::size_t pos = 0;
  if (s[0] == '-' || s[0] == '+') {
    neg = s[0] == '-';
    pos = 1;
  }
  std::string body = s.substr(pos);
  auto all_digits = [](const std::string& t) {
    if (t.empty()) return false;
    for (char c : t)
      if (c < '0' || c > '9') return false;
    return true;
  };
  Rational out;
  if (auto slash = body.find('/'); slash != std::string::npos) {
    const std::string num = body.substr(0, slash), den = body.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den)) throw Error(Errc::Parse, "bad fraction: " + s);
    mpz_class d(den);
    if (d == 0) throw Error(Errc::Parse, "zero denominator: " + s);
    out = Rational(mpz_class(num), d);
  } else if (auto dot = body.find('.'); dot != std::string::npos) {
    const std::string ip = body.substr(0, dot), fp = body.substr(dot + 1);
    if ((!ip.empty() && !all_digits(ip)) || (!fp.empty() && !all_digits(fp)) || (ip.empty() && fp.empty()))
      throw Error(Errc::Parse, "bad decimal: " + s);
    mpz_class scale = 1;
    for (std::size_t i = 0; i < fp.size(); ++i) scale *= 10;
    out = Rational(mpz_class(ip.empty() ? "0" : ip) * scale + mpz_class(fp.empty() ? "0" : fp), scale);
  } else {
    if (!all_digits(body)) throw Error(Errc::Parse, "bad number: " + s);
    out = Rational(mpz_class(body));
  }
  out.canonicalize();
  return neg ? Rational(-out) : out;
}

inline std::string to_string(const Rational& q) { return q.get_str(); }

inline Rational abs(const Rational& q) { return q < 0 ? Rational(-q) : q; }

}  // namespace idealgames

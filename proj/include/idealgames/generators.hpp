#pragma once

// Strictly increasing integer generators (iota_n), n >= 1, used as
// interval schedules [iota_n, iota_{n+1}) and as Talagrand witnesses.
//
// Two shapes matter to the symbolic classifier:
//   affine     iota_n = a*n + b with a >= 1 (blocks of constant length a);
//   expanding  block lengths tend to infinity.
// Values are memoized up to the largest queried index. Generators are pure,
// so the cache is only a speedup and is guarded by a mutex for sharing.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "idealgames/error.hpp"
#include "idealgames/nat.hpp"

namespace idealgames {

namespace detail {

using BigFloat = boost::multiprecision::cpp_bin_float_50;

// ceil of a nonnegative high-precision float as a Nat; kNatMax on overflow.
inline Nat ceil_to_nat(const BigFloat& x) {
  using boost::multiprecision::cpp_int;
  const cpp_int c = static_cast<cpp_int>(boost::multiprecision::ceil(x));
  if (c < 0) return 0;
  if (c >> 127 != 0) return kNatMax;
  const cpp_int mask = (cpp_int(1) << 64) - 1;
  const auto lo = static_cast<std::uint64_t>(c & mask);
  const auto hi = static_cast<std::uint64_t>(c >> 64);
  return (static_cast<Nat>(hi) << 64) | lo;
}

}  // namespace detail

class Generator {
 public:
  enum class Kind { Affine, Expanding };

  // iota_n = a*n + b. Requires a >= 1 and iota_1 = a + b >= 1.
  static std::shared_ptr<const Generator> affine(std::string name, std::int64_t a, std::int64_t b) {
    if (a < 1 || a + b < 1) throw Error(Errc::InvalidArgument, "affine generator needs a >= 1 and a + b >= 1");
    auto g = std::shared_ptr<Generator>(new Generator(std::move(name), Kind::Affine));
    g->a_ = a;
    g->b_ = b;
    return g;
  }

  // Expanding generator from a closed form; closed(n) may return kNatMax on overflow.
  static std::shared_ptr<const Generator> closed(std::string name, std::function<Nat(Index)> fn) {
    auto g = std::shared_ptr<Generator>(new Generator(std::move(name), Kind::Expanding));
    g->closed_ = std::move(fn);
    return g;
  }

  // Expanding generator from a first value and a successor rule.
  static std::shared_ptr<const Generator> recursive(std::string name, Nat first, std::function<Nat(Nat)> next) {
    auto g = std::shared_ptr<Generator>(new Generator(std::move(name), Kind::Expanding));
    g->first_ = first;
    g->next_ = std::move(next);
    return g;
  }

  const std::string& name() const { return name_; }
  Kind kind() const { return kind_; }
  bool is_affine() const { return kind_ == Kind::Affine; }
  std::int64_t slope() const { return a_; }
  std::int64_t offset() const { return b_; }

  // iota_n for n >= 1.
  Nat at(Index n) const {
    if (n == 0) throw Error(Errc::InvalidArgument, "generator index starts at 1");
    if (is_affine()) {
      const Nat v = sat_add(sat_mul(static_cast<Nat>(a_), n), 0);
      return b_ >= 0 ? sat_add(v, static_cast<Nat>(b_)) : v - static_cast<Nat>(-b_);
    }
    std::lock_guard lock(mu_);
    extend_to_index(n);
    if (cache_[n - 1] == kNatMax) throw Error(Errc::Overflow, name_ + " generator exceeds 128 bits at index " + std::to_string(n));
    return cache_[n - 1];
  }

  // The j with iota_j <= v < iota_{j+1}; 0 when v < iota_1.
  Index block_of(Nat v) const {
    if (is_affine()) {
      const Nat first = static_cast<Nat>(a_ + b_);
      if (v < first) return 0;
      const Nat shifted = b_ >= 0 ? v - static_cast<Nat>(b_) : v + static_cast<Nat>(-b_);
      return static_cast<Index>(shifted / static_cast<Nat>(a_));
    }
    std::lock_guard lock(mu_);
    extend_until([&](Nat last) { return last > v; });
    if (v < cache_.front()) return 0;
    const auto it = std::upper_bound(cache_.begin(), cache_.end(), v);
    return static_cast<Index>(it - cache_.begin());
  }

  // Least j with iota_j >= c.
  Index first_at_least(Nat c) const {
    if (is_affine()) {
      const Nat first = static_cast<Nat>(a_ + b_);
      if (c <= first) return 1;
      const Nat shifted = b_ >= 0 ? c - static_cast<Nat>(b_) : c + static_cast<Nat>(-b_);
      return static_cast<Index>((shifted + static_cast<Nat>(a_) - 1) / static_cast<Nat>(a_));
    }
    std::lock_guard lock(mu_);
    extend_until([&](Nat last) { return last >= c; });
    const auto it = std::lower_bound(cache_.begin(), cache_.end(), c);
    if (it == cache_.end() || *it == kNatMax) throw Error(Errc::Overflow, name_ + " generator exceeds 128 bits");
    return static_cast<Index>(it - cache_.begin()) + 1;
  }

 private:
  Generator(std::string name, Kind kind) : name_(std::move(name)), kind_(kind) {}

  Nat compute(Index n) const {
    if (closed_) return closed_(n);
    if (n == 1) return first_;
    const Nat prev = cache_[n - 2];
    return prev == kNatMax ? kNatMax : next_(prev);
  }

  void extend_to_index(Index n) const {
    while (cache_.size() < n) {
      const Nat v = compute(cache_.size() + 1);
      if (!cache_.empty() && v != kNatMax && v <= cache_.back())
        throw Error(Errc::InvalidArgument, name_ + " generator is not strictly increasing");
      cache_.push_back(v);
      if (v == kNatMax) {
        // pad so that index n is addressable; all further values overflow too
        while (cache_.size() < n) cache_.push_back(kNatMax);
      }
    }
  }

  template <typename Stop>
  void extend_until(Stop stop) const {
    if (cache_.empty()) extend_to_index(1);
    while (!stop(cache_.back()) && cache_.back() != kNatMax) extend_to_index(cache_.size() + 1);
  }

  std::string name_;
  Kind kind_;
  std::int64_t a_ = 0;
  std::int64_t b_ = 0;
  std::function<Nat(Index)> closed_;
  Nat first_ = 0;
  std::function<Nat(Nat)> next_;

  mutable std::mutex mu_;
  mutable std::vector<Nat> cache_;
};

using GeneratorPtr = std::shared_ptr<const Generator>;

namespace detail {

inline std::map<std::string, GeneratorPtr, std::less<>> build_registry() {
  std::map<std::string, GeneratorPtr, std::less<>> reg;
  reg["pow2"] = Generator::closed("pow2", [](Index n) { return n >= 127 ? kNatMax : Nat{1} << n; });
  reg["expE"] = Generator::closed("expE", [](Index n) {
    if (n > 88) return kNatMax;
    return ceil_to_nat(boost::multiprecision::exp(BigFloat(n)));
  });
  reg["linear"] = Generator::affine("linear", 1, 0);
  reg["square"] = Generator::closed("square", [](Index n) { return sat_mul(n, n); });
  // Summable-ideal witness: iota_1 = 2, iota_{n+1} = ceil(e * iota_n) + 1, so
  // every block [iota_n, iota_{n+1}) carries harmonic mass >= ln(e) = 1.
  reg["harm"] = Generator::recursive("harm", 2, [](Nat prev) {
    const BigFloat e = boost::math::constants::e<BigFloat>();
    const std::uint64_t lo = static_cast<std::uint64_t>(prev);
    const std::uint64_t hi = static_cast<std::uint64_t>(prev >> 64);
    BigFloat p = BigFloat(hi) * boost::multiprecision::pow(BigFloat(2), 64) + BigFloat(lo);
    const Nat c = ceil_to_nat(e * p);
    return c == kNatMax ? kNatMax : sat_add(c, 1);
  });
  reg["odd"] = Generator::affine("odd", 2, -1);
  return reg;
}

inline const std::map<std::string, GeneratorPtr, std::less<>>& registry() {
  static const auto reg = build_registry();
  return reg;
}

}  // namespace detail

// Registered generators: pow2, expE, linear, square, harm, odd.
inline GeneratorPtr find_generator(std::string_view name) {
  const auto& reg = detail::registry();
  const auto it = reg.find(name);
  if (it == reg.end()) throw Error(Errc::InvalidArgument, "unknown generator: " + std::string(name));
  return it->second;
}

inline std::vector<std::string> generator_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : detail::registry()) out.push_back(name);
  return out;
}

}  // namespace idealgames

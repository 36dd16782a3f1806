#pragma once

#include <gmpxx.h>

#include <atomic>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

namespace hltrees {

using Int = mpz_class;
using Rat = mpq_class;

/// Bad arguments or malformed instances. CLI exit code 2.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// A search refused to run or ran past its candidate budget. CLI exit code 3.
class BudgetError : public std::runtime_error {
 public:
  BudgetError(const std::string& site, const Int& required)
      : std::runtime_error("budget exceeded at " + site + ": " + required.get_str() +
                           " candidate units required"),
        required_(required) {}
  const Int& required() const { return required_; }

 private:
  Int required_;
};

/// Shared candidate counter for the enumeration-heavy searches. One unit is
/// one candidate visited (a slot value tried, a subset emitted, ...).
class Budget {
 public:
  explicit Budget(std::uint64_t cap) : cap_(cap) {}

  /// HLTREES_BUDGET from the environment, else 10^8.
  static std::uint64_t default_cap();

  void charge(std::uint64_t units, const char* site) {
    std::uint64_t before = used_.fetch_add(units);
    if (before + units > cap_) throw BudgetError(site, Int(before) + Int(units));
  }

  /// Refuses up front when a closed-form count already exceeds the cap.
  void require_within(const Int& total, const char* site) const {
    if (total > Int(cap_)) throw BudgetError(site, total);
  }

  std::uint64_t used() const { return used_.load(); }
  std::uint64_t cap() const { return cap_; }

 private:
  std::uint64_t cap_;
  std::atomic<std::uint64_t> used_{0};
};

using BudgetRef = std::shared_ptr<Budget>;

/// Accepts "p/q" or "p"; the result is canonicalized.
Rat parse_rational(const std::string& text);
std::string format_rational(const Rat& value);

/// Least integer >= value.
Int ceil_rat(const Rat& value);

Int int_pow(const Int& base, unsigned long exp);

}  // namespace hltrees

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "hltrees/density_search.hpp"

namespace hltrees {

/// Closed interval with exact rational endpoints enclosing one real value.
/// Sums, products and differences are exact; only square roots widen, to
/// dyadic endpoints with 2^-frac_bits spread.
struct RatInterval {
  Rat lo, hi;

  static RatInterval exact(const Rat& v) { return {v, v}; }
  RatInterval operator+(const RatInterval& o) const { return {lo + o.lo, hi + o.hi}; }
  RatInterval operator-(const RatInterval& o) const { return {lo - o.hi, hi - o.lo}; }
  RatInterval operator*(const RatInterval& o) const;
  RatInterval square() const;  // requires lo >= 0
  Rat width() const { return hi - lo; }

  /// Three-way verdicts: value when the comparison is decided.
  std::optional<bool> le(const Rat& c) const;
  std::optional<bool> le(const RatInterval& o) const;
  std::optional<bool> ge(const Rat& c) const;
};

/// Dyadic t/2^p with t/2^p <= sqrt(x) < (t+1)/2^p.
Rat sqrt_lower(const Rat& x, int frac_bits);
Rat sqrt_upper(const Rat& x, int frac_bits);
RatInterval sqrt_interval(const RatInterval& x, int frac_bits);

/// Nested square-root triple gamma0 = sqrt(beta + rho^2 - alpha),
/// gamma1 = sqrt(gamma0 + gamma0^2), gamma2 = sqrt(gamma1 + gamma1^2).
/// gamma0^2 is exact; the others are certified intervals.
struct GammaTriple {
  Rat alpha, beta, rho;
  Rat gamma0_sq;  // exact
  RatInterval gamma0, gamma1, gamma2;
  int frac_bits = 0;
};

GammaTriple gammas(const Rat& alpha, const Rat& beta, const Rat& rho,
                   int frac_bits = 128);

/// Exact gate gamma0 <= (alpha/(4qb))^4, decided by comparing squares.
bool check_gamma_smallness(const GammaTriple& g, const Rat& alpha, const Int& q, int b);
bool check_gamma_smallness_sq(const Rat& gamma0_sq, const Rat& alpha, const Int& q,
                              int b);

/// The density-increment bookkeeping: iteration count K0, increment scale r
/// (an exact power; materialized only when it fits), the geometric count Q0,
/// the negligibility threshold theta0, and the delta/epsilon ladders
///   delta_0 = r, delta_{n+1} = sqrt(delta_n + delta_n^2),
///   eps_0 = eps, eps_{n+1} = eps_n - (delta_{3n}+delta_{3n+1}+delta_{3n+2}).
struct IncrementSchedule {
  std::vector<int> b_vec;
  int b_last = 2;
  Rat eps;
  Int K0;
  Int Q0;
  Rat theta0;
  Rat r_base;           // r = r_base ^ (2 ^ r_exponent_log2)
  Int r_exponent_log2;  // 3 K0 - 1
  bool numeric = false;  // false: r kept symbolic, ladders not materialized
  Rat r;                 // exact value when numeric
  std::vector<RatInterval> deltas;   // 3 K0 entries when numeric
  std::vector<RatInterval> eps_seq;  // K0 + 1 entries when numeric
  int frac_bits = 0;
};

using UdhlOracle = std::function<Int(const std::vector<int>& b_vec, int k, const Rat& eps)>;

/// digit_cap bounds the decimal size of the materialized r; beyond it the
/// schedule keeps r symbolic.
IncrementSchedule build_schedule(const std::vector<int>& b_vec, int b_last, int k,
                                 const Rat& eps, const UdhlOracle& udhl_fn,
                                 int frac_bits = 128, long digit_cap = 1'000'000);

/// Rebuilds the ladders at a different interval precision.
IncrementSchedule rebuild_at_precision(const IncrementSchedule& sched, int frac_bits);

enum class PropertyVerdict { Pass, Fail, NotEvaluated };

struct PropertyReport {
  struct Entry {
    std::string name;
    PropertyVerdict verdict;
    std::string detail;
  };
  std::vector<Entry> entries;
  bool all_pass() const;
};

/// The six ladder properties. The two telescoping identities are verified by
/// formal expansion (no roots involved); the inequalities use the certified
/// intervals, widened until decided or the precision cap is hit.
PropertyReport check_properties(const IncrementSchedule& sched, int max_frac_bits = 1 << 16);

/// Count of entries >= eps_prime, asserted to be >= (eps - eps_prime) * N
/// whenever the mean is >= eps.
long markov_lower(const std::vector<Rat>& values, const Rat& eps, const Rat& eps_prime);

/// Count of entries >= eps - delta, asserted to be >= (1 - delta) * N when the
/// mean is >= eps and at most delta^3 * N entries reach eps + delta^2.
long markov_concentration(const std::vector<Rat>& values, const Rat& eps,
                          const Rat& delta);

struct DensenessResult {
  bool dense = false;
  std::optional<LevelProductPoint> failing_point;
  std::optional<Node> failing_child;  // strong variant: the child that failed
};

/// True iff level(w) is at most the first selection level met by s and every
/// section over the level product of s has relative density >= eps at w.
DensenessResult is_dense(const LevelSelection& sel, const Node& w,
                         const VectorStrongSubtree& s, const Rat& eps);

/// Denseness at every immediate successor of w.
DensenessResult is_strongly_dense(const LevelSelection& sel, const Node& w,
                                  const VectorStrongSubtree& s, const Rat& eps);

}  // namespace hltrees

#include "hltrees/increment_calculus.hpp"

#include <algorithm>
#include <map>

namespace hltrees {

RatInterval RatInterval::operator*(const RatInterval& o) const {
  Rat a = lo * o.lo, b = lo * o.hi, c = hi * o.lo, d = hi * o.hi;
  return {std::min(std::min(a, b), std::min(c, d)),
          std::max(std::max(a, b), std::max(c, d))};
}

RatInterval RatInterval::square() const {
  if (lo < 0) throw DomainError("interval square expects a nonnegative interval");
  return {lo * lo, hi * hi};
}

std::optional<bool> RatInterval::le(const Rat& c) const {
  if (hi <= c) return true;
  if (lo > c) return false;
  return std::nullopt;
}

std::optional<bool> RatInterval::le(const RatInterval& o) const {
  if (hi <= o.lo) return true;
  if (lo > o.hi) return false;
  return std::nullopt;
}

std::optional<bool> RatInterval::ge(const Rat& c) const {
  if (lo >= c) return true;
  if (hi < c) return false;
  return std::nullopt;
}

namespace {

Rat dyadic(const Int& t, int frac_bits) {
  Rat r(t, Int(1) << frac_bits);
  r.canonicalize();
  return r;
}

// Dyadic enclosure of sqrt(x) with 2^-frac_bits spread; collapses to a point
// when x is an exact square at this scale.
RatInterval sqrt_bounds(const Rat& x, int frac_bits) {
  if (x < 0) throw DomainError("square root of a negative rational");
  Rat v = x;
  v.canonicalize();
  Int scaled_num = v.get_num() << (2 * frac_bits);
  Int m, div_rem;
  mpz_fdiv_qr(m.get_mpz_t(), div_rem.get_mpz_t(), scaled_num.get_mpz_t(),
              v.get_den().get_mpz_t());
  Int t, sqrt_rem;
  mpz_sqrtrem(t.get_mpz_t(), sqrt_rem.get_mpz_t(), m.get_mpz_t());
  Rat lo = dyadic(t, frac_bits);
  if (div_rem == 0 && sqrt_rem == 0) return {lo, lo};
  return {lo, dyadic(t + 1, frac_bits)};
}

}  // namespace

Rat sqrt_lower(const Rat& x, int frac_bits) { return sqrt_bounds(x, frac_bits).lo; }

Rat sqrt_upper(const Rat& x, int frac_bits) { return sqrt_bounds(x, frac_bits).hi; }

RatInterval sqrt_interval(const RatInterval& x, int frac_bits) {
  if (x.lo < 0) throw DomainError("square root of a negative interval");
  return {sqrt_bounds(x.lo, frac_bits).lo, sqrt_bounds(x.hi, frac_bits).hi};
}

GammaTriple gammas(const Rat& alpha_in, const Rat& beta_in, const Rat& rho_in,
                   int frac_bits) {
  Rat alpha = alpha_in, beta = beta_in, rho = rho_in;
  alpha.canonicalize();
  beta.canonicalize();
  rho.canonicalize();
  if (!(alpha > 0 && alpha <= beta && beta <= 1))
    throw DomainError("need 0 < alpha <= beta <= 1");
  if (!(rho > 0 && rho <= 1)) throw DomainError("need 0 < rho <= 1");
  Rat g0_sq = beta + rho * rho - alpha;
  if (g0_sq < 0) throw DomainError("beta + rho^2 below alpha");
  GammaTriple out;
  out.alpha = alpha;
  out.beta = beta;
  out.rho = rho;
  out.frac_bits = frac_bits;
  out.gamma0_sq = g0_sq;
  out.gamma0 = sqrt_interval(RatInterval::exact(g0_sq), frac_bits);
  // gamma1^2 = gamma0 + gamma0^2 with the square known exactly
  RatInterval g1_sq = out.gamma0 + RatInterval::exact(g0_sq);
  out.gamma1 = sqrt_interval(g1_sq, frac_bits);
  RatInterval g2_sq = out.gamma1 + g1_sq;
  out.gamma2 = sqrt_interval(g2_sq, frac_bits);
  return out;
}

bool check_gamma_smallness_sq(const Rat& gamma0_sq_in, const Rat& alpha_in,
                              const Int& q, int b) {
  Rat gamma0_sq = gamma0_sq_in, alpha = alpha_in;
  gamma0_sq.canonicalize();
  alpha.canonicalize();
  if (q < 1) throw DomainError("q must be >= 1");
  if (b < 2) throw DomainError("b must be >= 2");
  Rat bound = alpha / (4 * Rat(q) * b);
  Rat bound4 = bound * bound * bound * bound;
  // gamma0 <= bound^4 with both sides nonnegative: compare squares
  return gamma0_sq <= bound4 * bound4;
}

bool check_gamma_smallness(const GammaTriple& g, const Rat& alpha, const Int& q, int b) {
  return check_gamma_smallness_sq(g.gamma0_sq, alpha, q, b);
}

namespace {

long decimal_digits(const Int& v) {
  return static_cast<long>(mpz_sizeinbase(v.get_mpz_t(), 10));
}

void compute_ladders(IncrementSchedule& sched, int frac_bits) {
  sched.frac_bits = frac_bits;
  sched.deltas.clear();
  sched.eps_seq.clear();
  if (!sched.numeric) return;
  long steps = 3 * sched.K0.get_si();
  RatInterval delta = RatInterval::exact(sched.r);
  RatInterval delta_sq = RatInterval::exact(sched.r * sched.r);
  sched.deltas.push_back(delta);
  for (long n = 1; n < steps; ++n) {
    RatInterval arg = delta + delta_sq;  // equals the next square
    delta = sqrt_interval(arg, frac_bits);
    delta_sq = arg;
    sched.deltas.push_back(delta);
  }
  RatInterval eps_n = RatInterval::exact(sched.eps);
  sched.eps_seq.push_back(eps_n);
  for (long n = 0; n < sched.K0.get_si(); ++n) {
    eps_n = eps_n - (sched.deltas[3 * n] + sched.deltas[3 * n + 1] + sched.deltas[3 * n + 2]);
    sched.eps_seq.push_back(eps_n);
  }
}

}  // namespace

IncrementSchedule build_schedule(const std::vector<int>& b_vec, int b_last, int k,
                                 const Rat& eps_in, const UdhlOracle& udhl_fn,
                                 int frac_bits, long digit_cap) {
  Rat eps = eps_in;
  eps.canonicalize();
  if (b_vec.empty()) throw DomainError("empty branching list");
  for (int b : b_vec)
    if (b < 2) throw DomainError("branching numbers must be >= 2");
  if (b_last < 2) throw DomainError("b_last must be >= 2");
  if (k < 1) throw DomainError("k must be >= 1");
  if (!(eps > 0 && eps <= 1)) throw DomainError("eps must be in (0,1]");
  if (!udhl_fn) throw DomainError("no oracle for the iteration count");

  IncrementSchedule out;
  out.b_vec = b_vec;
  out.b_last = b_last;
  out.eps = eps;
  out.K0 = udhl_fn(b_vec, 2, eps / (4 * b_last));
  if (out.K0 < 1) throw DomainError("oracle returned an iteration count below 1");

  Int prod = 1, prod_pw = 1;
  for (int b : b_vec) {
    prod *= b;
    prod_pw *= int_pow(Int(b), b);
  }
  if (!mpz_fits_ulong_p(out.K0.get_mpz_t()) ||
      decimal_digits(prod_pw) * out.K0.get_si() > digit_cap)
    throw DomainError("iteration count too large to materialize the schedule counts");
  unsigned long k0 = out.K0.get_ui();

  Int num = int_pow(prod_pw, k0) - int_pow(prod, k0);
  Int den = prod_pw - prod;
  Int q, rem;
  mpz_fdiv_qr(q.get_mpz_t(), rem.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  if (rem != 0) throw DomainError("geometric-sum quotient not exact");
  out.Q0 = q;
  out.theta0 = eps / (8 * Rat(out.Q0));
  out.theta0.canonicalize();

  out.r_base = eps / (16 * Rat(int_pow(prod, k0)) * b_last);
  out.r_base.canonicalize();
  out.r_exponent_log2 = 3 * out.K0 - 1;
  out.numeric = false;
  if (out.r_exponent_log2 <= 62 && out.K0 <= 4096) {
    Int exponent = Int(1) << out.r_exponent_log2.get_ui();
    long base_digits = decimal_digits(out.r_base.get_num()) +
                       decimal_digits(out.r_base.get_den());
    if (Int(base_digits) * exponent <= digit_cap) {
      unsigned long e = exponent.get_ui();
      out.r = Rat(int_pow(out.r_base.get_num(), e), int_pow(out.r_base.get_den(), e));
      out.r.canonicalize();
      out.numeric = true;
    }
  }
  compute_ladders(out, frac_bits);
  return out;
}

IncrementSchedule rebuild_at_precision(const IncrementSchedule& sched, int frac_bits) {
  IncrementSchedule out = sched;
  compute_ladders(out, frac_bits);
  return out;
}

bool PropertyReport::all_pass() const {
  for (const auto& e : entries)
    if (e.verdict != PropertyVerdict::Pass) return false;
  return true;
}

namespace {

// Formal expansion of delta_n^2 over the basis {r^2, delta_0, ...,
// delta_{n-1}} by the defining rule delta_{j+1}^2 = delta_j + delta_j^2.
struct FormalCombo {
  Int r_sq_coeff;
  std::map<long, Int> delta_coeffs;
  Int eps_coeff;

  bool operator==(const FormalCombo&) const = default;
};

FormalCombo expand_delta_sq(long n) {
  FormalCombo out{1, {}, 0};
  for (long j = 0; j < n; ++j) out.delta_coeffs[j] = 1;
  return out;
}

FormalCombo expand_eps(long n) {
  FormalCombo out{0, {}, 1};
  for (long j = 0; j < 3 * n; ++j) out.delta_coeffs[j] = -1;
  return out;
}

bool overlaps(const RatInterval& a, const RatInterval& b) {
  return a.lo <= b.hi && b.lo <= a.hi;
}

struct PropertyChecker {
  const IncrementSchedule& s;
  PropertyReport report;

  void add(const std::string& name, PropertyVerdict v, const std::string& detail = "") {
    report.entries.push_back({name, v, detail});
  }

  PropertyVerdict from_opt(std::optional<bool> v) {
    if (!v) return PropertyVerdict::NotEvaluated;
    return *v ? PropertyVerdict::Pass : PropertyVerdict::Fail;
  }

  void check_p1() {
    if (!s.numeric) {
      add("P1", PropertyVerdict::NotEvaluated, "symbolic r");
      return;
    }
    RatInterval root = RatInterval::exact(s.r);  // r^(2^-n) by iterated roots
    for (size_t n = 0; n < s.deltas.size(); ++n) {
      if (n > 0) root = sqrt_interval(root, s.frac_bits);
      RatInterval bound = RatInterval::exact(Rat(2)) * root;
      auto v = s.deltas[n].le(bound);
      if (!v || !*v) {
        add("P1", from_opt(v), "at n=" + std::to_string(n));
        return;
      }
    }
    add("P1", PropertyVerdict::Pass);
  }

  void check_p2() {
    // telescoping identity, checked formally from the defining rules
    long steps = s.numeric ? static_cast<long>(s.deltas.size()) : 3 * s.K0.get_si();
    for (long n = 0; n + 1 < steps; ++n) {
      FormalCombo lhs{0, {}, 0};
      for (long i = 0; i <= n; ++i) lhs.delta_coeffs[i] = 1;
      FormalCombo rhs = expand_delta_sq(n + 1);
      rhs.r_sq_coeff -= 1;
      if (!(lhs == rhs)) {
        add("P2", PropertyVerdict::Fail, "formal expansion differs at n=" + std::to_string(n));
        return;
      }
    }
    if (s.numeric) {
      // interval consistency of the materialized ladder
      RatInterval delta_sq = RatInterval::exact(s.r * s.r);
      RatInterval sum{Rat(0), Rat(0)};
      for (size_t n = 0; n + 1 < s.deltas.size(); ++n) {
        sum = sum + s.deltas[n];
        delta_sq = s.deltas[n] + delta_sq;  // delta_{n+1}^2
        RatInterval rhs = delta_sq - RatInterval::exact(s.r * s.r);
        if (!overlaps(sum, rhs)) {
          add("P2", PropertyVerdict::Fail, "ladder inconsistent at n=" + std::to_string(n));
          return;
        }
      }
    }
    add("P2", PropertyVerdict::Pass, "exact identity");
  }

  void check_p3() {
    if (!s.numeric) {
      add("P3", PropertyVerdict::NotEvaluated, "symbolic r");
      return;
    }
    RatInterval sum{Rat(0), Rat(0)};
    for (const auto& d : s.deltas) sum = sum + d;
    add("P3", from_opt(sum.le(s.eps / 2)));
  }

  void check_p4() {
    for (long n = 0; n < s.K0.get_si(); ++n) {
      FormalCombo lhs = expand_eps(n + 1);
      FormalCombo rhs{0, {}, 1};
      for (long i = 0; i <= 3 * n + 2; ++i) rhs.delta_coeffs[i] = -1;
      if (!(lhs == rhs)) {
        add("P4", PropertyVerdict::Fail, "formal expansion differs at n=" + std::to_string(n));
        return;
      }
    }
    if (s.numeric) {
      for (size_t n = 1; n < s.eps_seq.size(); ++n) {
        RatInterval direct = RatInterval::exact(s.eps);
        for (size_t i = 0; i < 3 * n; ++i) direct = direct - s.deltas[i];
        if (!overlaps(direct, s.eps_seq[n])) {
          add("P4", PropertyVerdict::Fail, "ladder inconsistent at n=" + std::to_string(n));
          return;
        }
      }
    }
    add("P4", PropertyVerdict::Pass, "exact identity");
  }

  void check_p5() {
    if (!s.numeric) {
      add("P5", PropertyVerdict::NotEvaluated, "symbolic r");
      return;
    }
    for (size_t n = 0; n < s.eps_seq.size(); ++n) {
      auto lo = s.eps_seq[n].ge(s.eps / 2);
      auto hi = s.eps_seq[n].le(s.eps);
      if (!lo || !hi || !*lo || !*hi) {
        auto v = (!lo || !hi) ? std::nullopt
                              : std::optional<bool>(*lo && *hi);
        add("P5", from_opt(v), "at n=" + std::to_string(n));
        return;
      }
    }
    add("P5", PropertyVerdict::Pass);
  }

  void check_p6() {
    if (!s.numeric) {
      add("P6", PropertyVerdict::NotEvaluated, "symbolic r");
      return;
    }
    Int prod = 1;
    for (int b : s.b_vec) prod *= b;
    unsigned long k0 = s.K0.get_ui();
    Rat mid = (s.eps / 2) / (4 * Rat(int_pow(prod, k0)) * s.b_last);
    Rat mid4 = mid * mid * mid * mid;
    const RatInterval& pivot = s.deltas[3 * k0 - 3];
    auto pv = pivot.le(mid4);
    if (!pv || !*pv) {
      add("P6", from_opt(pv), "pivot bound");
      return;
    }
    for (unsigned long n = 0; n < k0; ++n) {
      if (3 * n != 3 * k0 - 3) {
        auto v = s.deltas[3 * n].le(pivot);
        if (!v || !*v) {
          add("P6", from_opt(v), "at n=" + std::to_string(n));
          return;
        }
      }
      Rat loose = (s.eps / 2) / (4 * Rat(int_pow(prod, n + 1)) * s.b_last);
      Rat loose4 = loose * loose * loose * loose;
      if (!(mid4 <= loose4)) {
        add("P6", PropertyVerdict::Fail, "bound chain at n=" + std::to_string(n));
        return;
      }
    }
    add("P6", PropertyVerdict::Pass);
  }

  void run() {
    check_p1();
    check_p2();
    check_p3();
    check_p4();
    check_p5();
    check_p6();
  }
};

}  // namespace

PropertyReport check_properties(const IncrementSchedule& sched, int max_frac_bits) {
  IncrementSchedule current = sched;
  while (true) {
    PropertyChecker checker{current, {}};
    checker.run();
    bool undecided = false;
    for (const auto& e : checker.report.entries)
      if (e.verdict == PropertyVerdict::NotEvaluated && current.numeric) undecided = true;
    if (!undecided || current.frac_bits * 2 > max_frac_bits) return checker.report;
    current = rebuild_at_precision(current, current.frac_bits * 2);
  }
}

long markov_lower(const std::vector<Rat>& values, const Rat& eps_in,
                  const Rat& eps_prime_in) {
  Rat eps = eps_in, eps_prime = eps_prime_in;
  eps.canonicalize();
  eps_prime.canonicalize();
  if (values.empty()) throw DomainError("need at least one value");
  if (!(eps > 0 && eps <= 1)) throw DomainError("eps must be in (0,1]");
  if (!(eps_prime > 0 && eps_prime < eps)) throw DomainError("need 0 < eps' < eps");
  Rat sum = 0;
  std::vector<Rat> vals;
  vals.reserve(values.size());
  for (Rat a : values) {
    a.canonicalize();
    if (a < 0 || a > 1) throw DomainError("values must lie in [0,1]");
    sum += a;
    vals.push_back(std::move(a));
  }
  const long n = static_cast<long>(vals.size());
  if (sum < eps * n) throw DomainError("mean below eps");
  long count = 0;
  for (const auto& a : vals)
    if (a >= eps_prime) ++count;
  if (Rat(count) < (eps - eps_prime) * n)
    throw std::logic_error("tail bound violated");  // cannot happen on valid inputs
  return count;
}

long markov_concentration(const std::vector<Rat>& values, const Rat& eps_in,
                          const Rat& delta_in) {
  Rat eps = eps_in, delta = delta_in;
  eps.canonicalize();
  delta.canonicalize();
  if (values.empty()) throw DomainError("need at least one value");
  if (!(eps > 0 && eps <= 1)) throw DomainError("eps must be in (0,1]");
  if (!(delta > 0)) throw DomainError("delta must be positive");
  Rat sum = 0;
  std::vector<Rat> vals;
  vals.reserve(values.size());
  for (Rat a : values) {
    a.canonicalize();
    if (a < 0 || a > 1) throw DomainError("values must lie in [0,1]");
    sum += a;
    vals.push_back(std::move(a));
  }
  const long n = static_cast<long>(vals.size());
  if (sum < eps * n) throw DomainError("mean below eps");
  long upper = 0;
  for (const auto& a : vals)
    if (a >= eps + delta * delta) ++upper;
  if (Rat(upper) > delta * delta * delta * n)
    throw DomainError("upper tail above delta^3 N");
  long count = 0;
  for (const auto& a : vals)
    if (a >= eps - delta) ++count;
  if (Rat(count) < (1 - delta) * n)
    throw std::logic_error("concentration bound violated");  // cannot happen
  return count;
}

DensenessResult is_dense(const LevelSelection& sel, const Node& w,
                         const VectorStrongSubtree& s, const Rat& eps_in) {
  Rat eps = eps_in;
  eps.canonicalize();
  auto res = validate(sel.ambient, s);
  if (!res.ok) throw DomainError("subtree invalid: " + res.violated_clause);
  if (!sel.target.contains(w)) throw DomainError("node-not-in-tree: " + node_to_string(w));

  DensenessResult out;
  int min_level = sel.level_set.at(s.level_set().front());
  if (w.level() > min_level) {
    out.dense = false;
    return out;
  }
  for (int j = 0; j < s.height(); ++j) {
    int w_level = sel.level_set.at(s.level_set()[j]);
    Int cone = int_pow(Int(sel.target.branching), w_level - w.level());
    for (const auto& pt : s.level_points(j)) {
      const auto& sec = sel.section(pt);
      Int hits = 0;
      for (const auto& node : sec)
        if (w.is_prefix_of(node)) hits += 1;
      Rat dens(hits, cone);
      dens.canonicalize();
      if (dens < eps) {
        out.dense = false;
        out.failing_point = pt;
        return out;
      }
    }
  }
  out.dense = true;
  return out;
}

DensenessResult is_strongly_dense(const LevelSelection& sel, const Node& w,
                                  const VectorStrongSubtree& s, const Rat& eps) {
  if (sel.target.is_maximal(w))
    throw DomainError("no-successors: node " + node_to_string(w) + " is maximal");
  for (int p = 0; p < sel.target.branching; ++p) {
    Node child = w.child(p);
    auto res = is_dense(sel, child, s, eps);
    if (!res.dense) {
      res.failing_child = child;
      return res;
    }
  }
  return {true, std::nullopt, std::nullopt};
}

}  // namespace hltrees

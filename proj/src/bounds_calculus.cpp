#include "hltrees/bounds_calculus.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace hltrees {

namespace {

std::shared_ptr<BoundExpr> node(ExprKind kind) {
  auto e = std::make_shared<BoundExpr>();
  e->kind = kind;
  return e;
}

}  // namespace

ExprPtr make_int(Int v) {
  auto e = node(ExprKind::IntConst);
  e->int_value = std::move(v);
  return e;
}

ExprPtr make_rat(Rat v) {
  v.canonicalize();
  if (v.get_den() == 1) return make_int(v.get_num());
  auto e = node(ExprKind::RatConst);
  e->rat_value = std::move(v);
  return e;
}

ExprPtr make_var(const std::string& name) {
  auto e = node(ExprKind::Var);
  e->name = name;
  return e;
}

namespace {

ExprPtr binary(ExprKind kind, ExprPtr a, ExprPtr b) {
  auto e = node(kind);
  e->args = {std::move(a), std::move(b)};
  return e;
}

}  // namespace

ExprPtr add(ExprPtr a, ExprPtr b) { return binary(ExprKind::Add, std::move(a), std::move(b)); }
ExprPtr sub(ExprPtr a, ExprPtr b) { return binary(ExprKind::Sub, std::move(a), std::move(b)); }
ExprPtr mul(ExprPtr a, ExprPtr b) { return binary(ExprKind::Mul, std::move(a), std::move(b)); }

ExprPtr div_expr(ExprPtr a, ExprPtr b) {
  // integer-constant quotients are just rationals
  if (a->kind == ExprKind::IntConst && b->kind == ExprKind::IntConst && b->int_value != 0)
    return make_rat(Rat(a->int_value, b->int_value));
  return binary(ExprKind::Div, std::move(a), std::move(b));
}

ExprPtr pow_expr(ExprPtr base, ExprPtr exponent) {
  return binary(ExprKind::Pow, std::move(base), std::move(exponent));
}

ExprPtr ceil_expr(ExprPtr a) {
  auto e = node(ExprKind::Ceil);
  e->args = {std::move(a)};
  return e;
}

ExprPtr iter_expr(const std::string& var, ExprPtr body, ExprPtr count, ExprPtr start) {
  auto e = node(ExprKind::Iter);
  e->iter_var = var;
  e->iter_body = std::move(body);
  e->args = {std::move(count), std::move(start)};
  return e;
}

ExprPtr call_expr(const std::string& name, std::vector<int> b_vec,
                  std::vector<ExprPtr> args, int phi_index) {
  auto e = node(ExprKind::Call);
  e->name = name;
  e->b_vec = std::move(b_vec);
  e->args = std::move(args);
  e->phi_index = phi_index;
  return e;
}

ExprPtr labeled(ExprPtr e, const std::string& label) {
  auto copy = std::make_shared<BoundExpr>(*e);
  copy->label = label;
  return copy;
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a.get() == b.get()) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind || a->name != b->name || a->b_vec != b->b_vec ||
      a->phi_index != b->phi_index || a->iter_var != b->iter_var)
    return false;
  if (a->kind == ExprKind::IntConst && a->int_value != b->int_value) return false;
  if (a->kind == ExprKind::RatConst && a->rat_value != b->rat_value) return false;
  if (a->args.size() != b->args.size()) return false;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (!expr_equal(a->args[i], b->args[i])) return false;
  if ((a->iter_body == nullptr) != (b->iter_body == nullptr)) return false;
  if (a->iter_body && !expr_equal(a->iter_body, b->iter_body)) return false;
  return true;
}

Phi1Provider Phi1Provider::symbolic_only() {
  Phi1Provider p;
  p.name_ = "none";
  return p;
}

Phi1Provider Phi1Provider::constant(Int value) {
  Phi1Provider p;
  p.name_ = "stub(" + value.get_str() + ")";
  p.fn_ = [value](const Int&, const Int&, const Int&) { return value; };
  return p;
}

Phi1Provider Phi1Provider::function(
    std::string name, std::function<Int(const Int&, const Int&, const Int&)> fn) {
  Phi1Provider p;
  p.name_ = std::move(name);
  p.fn_ = std::move(fn);
  return p;
}

Int Phi1Provider::operator()(const Int& b, const Int& m, const Int& r) const {
  if (!fn_)
    throw DomainError(
        "first-height provider refuses numeric evaluation (configure a provider)");
  Int value = fn_(b, m, r);
  // spot-check monotonicity against previously sampled calls
  for (const auto& s : samples_) {
    bool le = b <= s[0] && m <= s[1] && r <= s[2];
    bool ge = b >= s[0] && m >= s[1] && r >= s[2];
    if (le && value > s[3])
      throw DomainError("first-height provider not monotone nondecreasing");
    if (ge && value < s[3])
      throw DomainError("first-height provider not monotone nondecreasing");
  }
  if (samples_.size() < 256) samples_.push_back({b, m, r, value});
  return value;
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

namespace {

struct CapExceeded {
  std::string subterm;
};

std::string expr_brief(const BoundExpr& e) {
  if (!e.label.empty()) return e.label;
  switch (e.kind) {
    case ExprKind::IntConst:
      return e.int_value.get_str();
    case ExprKind::RatConst:
      return format_rational(e.rat_value);
    case ExprKind::Var:
      return e.name;
    case ExprKind::Add:
      return "sum";
    case ExprKind::Sub:
      return "difference";
    case ExprKind::Mul:
      return "product";
    case ExprKind::Div:
      return "quotient";
    case ExprKind::Pow:
      return "power";
    case ExprKind::Ceil:
      return "ceil";
    case ExprKind::Iter:
      return "iter";
    case ExprKind::Call:
      return e.name;
  }
  return "expr";
}

Int eval_top_of(const ExprPtr& expr);

struct Value {
  bool is_int = true;
  Int i;
  Rat q;

  static Value of_int(Int v) { return {true, std::move(v), Rat()}; }
  static Value of_rat(Rat v) {
    v.canonicalize();
    if (v.get_den() == 1) return of_int(v.get_num());
    return {false, Int(), std::move(v)};
  }
  Rat as_rat() const { return is_int ? Rat(i) : q; }
};

long digits_of(const Int& v) { return static_cast<long>(mpz_sizeinbase(v.get_mpz_t(), 10)); }

class Evaluator {
 public:
  Evaluator(const EvalLimits& limits, const Phi1Provider& phi1)
      : limits_(limits), phi1_(phi1) {}

  Value eval(const ExprPtr& e, const std::map<std::string, Value>& env) {
    switch (e->kind) {
      case ExprKind::IntConst:
        return Value::of_int(e->int_value);
      case ExprKind::RatConst:
        return Value::of_rat(e->rat_value);
      case ExprKind::Var: {
        auto it = env.find(e->name);
        if (it == env.end()) throw DomainError("unbound variable: " + e->name);
        return it->second;
      }
      case ExprKind::Add:
      case ExprKind::Sub:
      case ExprKind::Mul:
      case ExprKind::Div: {
        Value a = eval(e->args[0], env);
        Value b = eval(e->args[1], env);
        return arith(e, a, b);
      }
      case ExprKind::Pow: {
        Value base = eval(e->args[0], env);
        Value exp = eval(e->args[1], env);
        return power(e, base, exp);
      }
      case ExprKind::Ceil: {
        Value a = eval(e->args[0], env);
        return Value::of_int(ceil_rat(a.as_rat()));
      }
      case ExprKind::Iter:
        return iterate(e, env);
      case ExprKind::Call:
        return Value::of_int(call(e, env));
    }
    throw DomainError("unknown expression kind");
  }

  Int eval_top(const ExprPtr& e) {
    Value v = eval(e, {});
    if (!v.is_int) throw DomainError("bound expression evaluated to a non-integer");
    return v.i;
  }

  Int eval_udhl_base(int b, const Int& k, const Rat& eps);

 private:
  void check_int(const Int& v, const BoundExpr& site) {
    if (digits_of(v) > limits_.digit_cap) throw CapExceeded{expr_brief(site)};
  }
  void check_rat(const Rat& v, const BoundExpr& site) {
    if (digits_of(v.get_num()) + digits_of(v.get_den()) > limits_.digit_cap)
      throw CapExceeded{expr_brief(site)};
  }
  void check_value(const Value& v, const BoundExpr& site) {
    if (v.is_int)
      check_int(v.i, site);
    else
      check_rat(v.q, site);
  }

  Value arith(const ExprPtr& e, const Value& a, const Value& b) {
    Value out;
    if (e->kind == ExprKind::Div) {
      if (b.as_rat() == 0) throw DomainError("division by zero");
      out = Value::of_rat(a.as_rat() / b.as_rat());
    } else if (a.is_int && b.is_int) {
      Int r;
      if (e->kind == ExprKind::Add) r = a.i + b.i;
      if (e->kind == ExprKind::Sub) r = a.i - b.i;
      if (e->kind == ExprKind::Mul) r = a.i * b.i;
      out = Value::of_int(std::move(r));
    } else {
      Rat r;
      if (e->kind == ExprKind::Add) r = a.as_rat() + b.as_rat();
      if (e->kind == ExprKind::Sub) r = a.as_rat() - b.as_rat();
      if (e->kind == ExprKind::Mul) r = a.as_rat() * b.as_rat();
      out = Value::of_rat(std::move(r));
    }
    check_value(out, *e);
    return out;
  }

  Value power(const ExprPtr& e, const Value& base, const Value& exp) {
    if (!exp.is_int) throw DomainError("exponent must be an integer");
    Int ev = exp.i;
    bool negative = ev < 0;
    if (negative && base.is_int)
      throw DomainError("negative exponent for an integer base");
    Int mag = negative ? Int(-ev) : ev;
    if (!mpz_fits_ulong_p(mag.get_mpz_t())) throw CapExceeded{expr_brief(*e)};
    unsigned long n = mag.get_ui();
    // size estimate before computing
    long base_digits = base.is_int
                           ? digits_of(base.i)
                           : digits_of(base.q.get_num()) + digits_of(base.q.get_den());
    if (base_digits > 0 && Int(base_digits) * Int(n) > limits_.digit_cap)
      throw CapExceeded{expr_brief(*e)};
    Value out;
    if (base.is_int) {
      out = Value::of_int(int_pow(base.i, n));
    } else {
      Rat r(int_pow(base.q.get_num(), n), int_pow(base.q.get_den(), n));
      if (negative) r = 1 / r;
      out = Value::of_rat(std::move(r));
    }
    check_value(out, *e);
    return out;
  }

  Value iterate(const ExprPtr& e, const std::map<std::string, Value>& env) {
    Value count = eval(e->args[0], env);
    if (!count.is_int || count.i < 0)
      throw DomainError("iteration count must be a nonnegative integer");
    if (count.i > Int(limits_.iter_cap))
      throw CapExceeded{"iteration count of " + expr_brief(*e)};
    Value x = eval(e->args[1], env);
    long n = count.i.get_si();
    for (long i = 0; i < n; ++i) {
      auto inner = env;
      inner[e->iter_var] = x;
      x = eval(e->iter_body, inner);
    }
    return x;
  }

  Int call(const ExprPtr& e, const std::map<std::string, Value>& env);
  Int eval_phi(int k, const Int& b, const Int& m, const Int& r);
  Int eval_mil(const std::vector<int>& b_vec, const Int& m, const Int& k, const Int& r);

  const EvalLimits& limits_;
  const Phi1Provider& phi1_;
  std::map<std::string, Int> memo_;
};

std::string key_of(const std::string& name, const std::vector<int>& b_vec,
                   const std::vector<std::string>& args, int phi_index = 0) {
  std::ostringstream out;
  out << name;
  if (phi_index) out << "[" << phi_index << "]";
  out << "(";
  for (size_t i = 0; i < b_vec.size(); ++i) out << (i ? "," : "") << b_vec[i];
  out << "|";
  for (size_t i = 0; i < args.size(); ++i) out << (i ? "," : "") << args[i];
  out << ")";
  return out.str();
}

Int Evaluator::eval_udhl_base(int b, const Int& k, const Rat& eps) {
  if (b < 2) throw DomainError("branching number must be >= 2");
  if (k < 1) throw DomainError("k must be >= 1");
  if (!(eps > 0 && eps <= 1)) throw DomainError("eps must be in (0,1]");
  Rat e = eps;
  e.canonicalize();
  const Int p = e.get_num();
  const Int q = e.get_den();
  for (long n = 1; n <= limits_.iter_cap; ++n) {
    Int N(n);
    // M = sum_{i < min(k, N+1)} C(N, i), built incrementally
    Int M = 0, binom = 1;
    for (Int i = 0; i < k && i <= N; ++i) {
      M += binom;
      binom = binom * (N - i);
      Int div = i + 1;
      mpz_divexact(binom.get_mpz_t(), binom.get_mpz_t(), div.get_mpz_t());
      if (digits_of(M) > limits_.digit_cap) throw CapExceeded{"udhl_base tail sum"};
    }
    // b^(pN) > M^q (b-1)^(pN)
    Int pn = p * N;
    if (!mpz_fits_ulong_p(pn.get_mpz_t()) || !mpz_fits_ulong_p(q.get_mpz_t()))
      throw CapExceeded{"udhl_base exponent"};
    if (Int(digits_of(Int(b))) * pn > limits_.digit_cap ||
        Int(digits_of(M)) * q > limits_.digit_cap)
      throw CapExceeded{"udhl_base comparison"};
    Int lhs = int_pow(Int(b), pn.get_ui());
    Int rhs = int_pow(M, q.get_ui()) * int_pow(Int(b - 1), pn.get_ui());
    if (lhs > rhs) return N;
  }
  throw CapExceeded{"udhl_base scan"};
}

Int Evaluator::eval_phi(int k, const Int& b, const Int& m, const Int& r) {
  if (k < 1) throw DomainError("family index must be >= 1");
  std::string key = key_of("phi", {}, {b.get_str(), m.get_str(), r.get_str()}, k);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  Int result;
  if (k == 1) {
    result = phi1_(b, m, r);
  } else {
    Int zeta = eval_phi(1, b, m, r);
    if (zeta > Int(limits_.iter_cap)) throw CapExceeded{"phi unrolling count"};
    Int x = k - 1;
    long steps = zeta.get_si();
    for (long i = 0; i < steps; ++i) {
      Int zx = eval_phi(1, b, x, r);
      if (!mpz_fits_ulong_p(zx.get_mpz_t())) throw CapExceeded{"phi tower exponent"};
      if (Int(digits_of(b)) * zx > limits_.digit_cap) throw CapExceeded{"phi tower"};
      Int tower = int_pow(b, zx.get_ui());
      if (!mpz_fits_ulong_p(tower.get_mpz_t())) throw CapExceeded{"phi tower exponent"};
      if (Int(digits_of(r)) * tower > limits_.digit_cap) throw CapExceeded{"phi tower"};
      Int omega = int_pow(r, tower.get_ui());
      x = eval_phi(k - 1, b, x, omega) + 1;
      if (digits_of(x) > limits_.digit_cap) throw CapExceeded{"phi unrolling"};
    }
    result = x;
  }
  memo_[key] = result;
  return result;
}

Int Evaluator::eval_mil(const std::vector<int>& b_vec, const Int& m, const Int& k,
                        const Int& r) {
  if (r <= 0) throw DomainError("color count must be >= 1");
  if (k < 1 || m < k) throw DomainError("need m >= k >= 1");
  if (r == 1) return m;  // one color: any height-m certificate is monochromatic
  if (!mpz_fits_sint_p(k.get_mpz_t())) throw CapExceeded{"mil height"};
  Int big = 1;
  for (int b : b_vec) {
    if (b < 2) throw DomainError("branching numbers must be >= 2");
    big *= int_pow(Int(b), b);
  }
  return eval_phi(static_cast<int>(k.get_si()), big, m, r);
}

Int Evaluator::call(const ExprPtr& e, const std::map<std::string, Value>& env) {
  std::vector<Value> args;
  args.reserve(e->args.size());
  for (const auto& a : e->args) args.push_back(eval(a, env));
  std::vector<std::string> arg_keys;
  for (const auto& v : args)
    arg_keys.push_back(v.is_int ? v.i.get_str() : format_rational(v.q));
  std::string key = key_of(e->name, e->b_vec, arg_keys, e->phi_index);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;

  Int result;
  if (e->name == "phi") {
    if (args.size() != 3 || !args[0].is_int || !args[1].is_int || !args[2].is_int)
      throw DomainError("phi expects three integer arguments");
    result = eval_phi(e->phi_index, args[0].i, args[1].i, args[2].i);
  } else if (e->name == "mil") {
    if (args.size() != 3 || !args[0].is_int || !args[1].is_int || !args[2].is_int)
      throw DomainError("mil expects integer arguments m, k, r");
    result = eval_mil(e->b_vec, args[0].i, args[1].i, args[2].i);
  } else if (e->name == "udhl_base") {
    if (args.size() != 2 || !args[0].is_int)
      throw DomainError("udhl_base expects k and eps");
    if (e->b_vec.size() != 1) throw DomainError("udhl_base expects one branching number");
    result = eval_udhl_base(e->b_vec[0], args[0].i, args[1].as_rat());
  } else if (e->name == "udhl") {
    if (args.size() != 2 || !args[0].is_int) throw DomainError("udhl expects k and eps");
    if (!mpz_fits_sint_p(args[0].i.get_mpz_t())) throw CapExceeded{"udhl height"};
    result = eval_top_of(udhl_bound(e->b_vec, static_cast<int>(args[0].i.get_si()),
                                    args[1].as_rat()));
  } else if (e->name == "ls") {
    if (args.size() != 2 || !args[0].is_int) throw DomainError("ls expects k and eps");
    if (!mpz_fits_sint_p(args[0].i.get_mpz_t())) throw CapExceeded{"ls height"};
    result = eval_top_of(ls_bound(e->b_vec, static_cast<int>(args[0].i.get_si()),
                                  args[1].as_rat()));
  } else {
    throw DomainError("unknown bound function: " + e->name);
  }
  check_int(result, *e);
  memo_[key] = result;
  return result;
}

}  // namespace

namespace {

thread_local Evaluator* g_active_evaluator = nullptr;

// evaluates a freshly built expression inside the active evaluator, sharing
// its memo table and limits
Int eval_top_of(const ExprPtr& expr) {
  if (!g_active_evaluator) throw DomainError("no active evaluator");
  return g_active_evaluator->eval_top(expr);
}

}  // namespace

EvalOutcome evaluate(const ExprPtr& expr, const EvalLimits& limits,
                     const Phi1Provider& phi1) {
  Evaluator ev(limits, phi1);
  Evaluator* prev = g_active_evaluator;
  g_active_evaluator = &ev;
  EvalOutcome out;
  try {
    out.value = ev.eval_top(expr);
  } catch (const CapExceeded& cap) {
    out.overflowed = true;
    out.overflow_subterm = cap.subterm;
  } catch (...) {
    g_active_evaluator = prev;
    throw;
  }
  g_active_evaluator = prev;
  return out;
}

Int udhl_base(int b, const Int& k, const Rat& eps, const EvalLimits& limits) {
  Phi1Provider none = Phi1Provider::symbolic_only();
  Evaluator ev(limits, none);
  try {
    return ev.eval_udhl_base(b, k, eps);
  } catch (const CapExceeded& cap) {
    throw BudgetError("udhl_base (" + cap.subterm + ")", Int(limits.digit_cap));
  }
}

// ---------------------------------------------------------------------------
// builders
// ---------------------------------------------------------------------------

namespace {

std::vector<int> repeat_each(const std::vector<int>& b_vec) {
  std::vector<int> out;
  for (int b : b_vec)
    for (int i = 0; i < b; ++i) out.push_back(b);
  return out;
}

Int product_of(const std::vector<int>& b_vec) {
  Int out = 1;
  for (int b : b_vec) out *= b;
  return out;
}

Int product_of_self_powers(const std::vector<int>& b_vec) {
  Int out = 1;
  for (int b : b_vec) out *= int_pow(Int(b), b);
  return out;
}

void require_branching(const std::vector<int>& b_vec) {
  if (b_vec.empty()) throw DomainError("empty branching list");
  for (int b : b_vec)
    if (b < 2) throw DomainError("branching numbers must be >= 2");
}

}  // namespace

ExprPtr mil_bound(const std::vector<int>& b_vec, const Int& m, int k, const Int& r) {
  require_branching(b_vec);
  if (r <= 0 || m < k || k < 1) throw DomainError("need m >= k >= 1 and r >= 1");
  if (r == 1) return make_int(m);
  return call_expr("mil", b_vec, {make_int(m), make_int(k), make_int(r)});
}

MilForms mil_bound_forms(const std::vector<int>& b_vec, const Int& m, int k,
                         const Int& r) {
  require_branching(b_vec);
  if (k < 2) throw DomainError("the two constructions exist above the first height");
  if (r <= 0 || m < k) throw DomainError("need m >= k >= 1 and r >= 1");
  MilForms out;
  out.recursive_form = mil_bound(b_vec, m, k, r);
  if (r == 1) {
    out.iterated_form = make_int(m);
    return out;
  }
  // step function over the repeated branching list, iterated a first-height
  // number of times from the lower height
  ExprPtr first_height =
      labeled(call_expr("mil", b_vec, {make_int(m), make_int(1), make_int(r)}), "M1");
  Int prod = product_of(b_vec);
  ExprPtr colors = pow_expr(make_int(r), pow_expr(make_int(prod),
                                                  sub(first_height, make_int(2))));
  ExprPtr body = add(call_expr("mil", repeat_each(b_vec),
                               {make_var("n"), make_int(k - 1), colors}),
                     make_int(1));
  out.iterated_form = iter_expr("n", body, first_height, make_int(k - 1));
  return out;
}

ExprPtr mil_repeated(const std::vector<int>& b_vec, const Int& m, int k, const Int& r) {
  require_branching(b_vec);
  if (r <= 0 || m < k || k < 1) throw DomainError("need m >= k >= 1 and r >= 1");
  if (r == 1) return make_int(m + 1);
  return add(call_expr("mil", repeat_each(b_vec),
                       {make_int(m), make_int(k), make_int(r)}),
             make_int(1));
}

ExprPtr udhl_bound(const std::vector<int>& b_vec, int k, const Rat& eps) {
  require_branching(b_vec);
  if (k < 1) throw DomainError("k must be >= 1");
  if (!(eps > 0 && eps <= 1)) throw DomainError("eps must be in (0,1]");
  if (b_vec.size() == 1)
    return call_expr("udhl_base", b_vec, {make_int(k), make_rat(eps)});
  std::vector<int> prefix(b_vec.begin(), b_vec.end() - 1);
  Rat half = eps / 2;
  ExprPtr selection_height =
      labeled(call_expr("ls", b_vec, {make_int(k), make_rat(half)}), "m");
  return call_expr("udhl", prefix, {selection_height, make_rat(half)});
}

ExprPtr ls_bound(const std::vector<int>& b_vec_plus, int k, const Rat& eps) {
  require_branching(b_vec_plus);
  if (b_vec_plus.size() < 2) throw DomainError("need d+1 >= 2 branching numbers");
  if (k < 1) throw DomainError("k must be >= 1");
  if (!(eps > 0 && eps <= 1)) throw DomainError("eps must be in (0,1]");
  if (k == 1) return make_int(1);

  std::vector<int> prefix(b_vec_plus.begin(), b_vec_plus.end() - 1);
  const int b_last = b_vec_plus.back();
  const int k_low = k - 1;
  Int prod = product_of(prefix);
  Int prod_pw = product_of_self_powers(prefix);

  ExprPtr iteration_count_base =
      labeled(call_expr("udhl", prefix, {make_int(2), make_rat(eps / (4 * b_last))}),
              "K0");
  ExprPtr r = labeled(
      pow_expr(div_expr(make_rat(eps),
                        mul(make_int(16),
                            mul(pow_expr(make_int(prod), iteration_count_base),
                                make_int(b_last)))),
               pow_expr(make_int(2),
                        sub(mul(make_int(3), iteration_count_base), make_int(1)))),
      "r");
  ExprPtr q0 = labeled(
      div_expr(sub(pow_expr(make_int(prod_pw), iteration_count_base),
                   pow_expr(make_int(prod), iteration_count_base)),
               make_int(prod_pw - prod)),
      "Q0");
  ExprPtr theta0 = labeled(div_expr(make_rat(eps), mul(make_int(8), q0)), "theta0");

  ExprPtr lower_selection =
      labeled(call_expr("ls", b_vec_plus, {make_int(k_low), theta0}), "ls_low");
  ExprPtr f3 = add(call_expr("mil", prefix, {lower_selection, make_int(1), q0}),
                   sub(make_var("n"), make_int(1)));
  ExprPtr colors =
      pow_expr(make_int(b_last),
               pow_expr(make_int(prod), sub(iteration_count_base, make_int(1))));
  ExprPtr f2 = call_expr("mil", repeat_each(prefix), {f3, make_int(k_low), colors});
  ExprPtr f1 = mul(ceil_expr(div_expr(make_int(1), pow_expr(r, make_int(3)))),
                   call_expr("udhl", prefix, {f2, pow_expr(r, make_int(3))}));
  ExprPtr g_body = labeled(add(f1, make_int(1)), "g");
  ExprPtr k1 = labeled(
      mul(iteration_count_base, ceil_expr(div_expr(make_int(2), pow_expr(r, make_int(2))))),
      "K1");
  return iter_expr("n", g_body, k1, make_int(k));
}

// ---------------------------------------------------------------------------
// printing and parsing
// ---------------------------------------------------------------------------

namespace {

struct Printer {
  std::map<const BoundExpr*, int> occurrences;
  std::map<const BoundExpr*, std::string> let_names;
  std::vector<const BoundExpr*> let_order;
  std::map<std::string, int> used_names;

  void count(const ExprPtr& e) {
    if (!e) return;
    if (++occurrences[e.get()] > 1) return;  // children counted once
    for (const auto& a : e->args) count(a);
    count(e->iter_body);
  }

  bool bindable(const BoundExpr* e) const {
    if (e->kind == ExprKind::IntConst || e->kind == ExprKind::RatConst ||
        e->kind == ExprKind::Var)
      return false;
    return !e->label.empty() || occurrences.at(e) > 1;
  }

  void collect(const ExprPtr& e) {
    if (!e || let_names.count(e.get())) return;
    for (const auto& a : e->args) collect(a);
    collect(e->iter_body);
    if (bindable(e.get())) {
      std::string base = e->label.empty() ? "t" : e->label;
      int n = used_names[base]++;
      std::string name = n == 0 && !e->label.empty() ? base : base + std::to_string(n + 1);
      let_names[e.get()] = name;
      let_order.push_back(e.get());
    }
  }

  static int precedence(ExprKind k) {
    switch (k) {
      case ExprKind::Add:
      case ExprKind::Sub:
        return 1;
      case ExprKind::Mul:
      case ExprKind::Div:
      case ExprKind::RatConst:
        return 2;
      case ExprKind::Pow:
        return 3;
      default:
        return 4;
    }
  }

  std::string atom(const BoundExpr* e, bool as_definition) {
    if (!as_definition) {
      auto it = let_names.find(e);
      if (it != let_names.end()) return it->second;
    }
    switch (e->kind) {
      case ExprKind::IntConst:
        return e->int_value.get_str();
      case ExprKind::RatConst:
        return e->rat_value.get_num().get_str() + "/" + e->rat_value.get_den().get_str();
      case ExprKind::Var:
        return e->name;
      case ExprKind::Add:
        return infix(e, " + ");
      case ExprKind::Sub:
        return infix(e, " - ");
      case ExprKind::Mul:
        return infix(e, " * ");
      case ExprKind::Div:
        return infix(e, " / ");
      case ExprKind::Pow: {
        std::string lhs = child(e->args[0].get(), 4);  // pow binds tightly, right-assoc
        std::string rhs = child(e->args[1].get(), 3);
        return lhs + " ^ " + rhs;
      }
      case ExprKind::Ceil:
        return "ceil(" + child(e->args[0].get(), 0) + ")";
      case ExprKind::Iter:
        return "iter(fun " + e->iter_var + " => " + child(e->iter_body.get(), 0) + ", " +
               child(e->args[0].get(), 0) + ", " + child(e->args[1].get(), 0) + ")";
      case ExprKind::Call: {
        std::string out = e->name;
        if (e->name == "phi") out += "[" + std::to_string(e->phi_index) + "]";
        out += "(";
        out += "[";
        for (size_t i = 0; i < e->b_vec.size(); ++i)
          out += (i ? ", " : "") + std::to_string(e->b_vec[i]);
        out += "]";
        for (const auto& a : e->args) out += ", " + child(a.get(), 0);
        out += ")";
        return out;
      }
    }
    return "?";
  }

  std::string child(const BoundExpr* e, int context_prec) {
    std::string body = atom(e, false);
    int prec = let_names.count(e) ? 4 : precedence(e->kind);
    if (prec < context_prec || (prec == context_prec && prec != 4))
      return "(" + body + ")";
    return body;
  }

  std::string infix(const BoundExpr* e, const std::string& op) {
    int prec = precedence(e->kind);
    // left-associative: the right child needs parens at equal precedence
    std::string lhs = child(e->args[0].get(), prec);
    const BoundExpr* r = e->args[1].get();
    std::string rhs = atom(r, false);
    int rprec = let_names.count(r) ? 4 : precedence(r->kind);
    if (rprec <= prec) rhs = "(" + rhs + ")";
    return lhs + op + rhs;
  }

  std::string run(const ExprPtr& root) {
    count(root);
    collect(root);
    std::ostringstream out;
    for (const auto* e : let_order)
      out << "let " << let_names.at(e) << " = " << atom(e, true) << " in\n";
    out << atom(root.get(), true);
    return out.str();
  }
};

// --- parser ---

struct Token {
  enum Kind { Ident, Number, Symbol, End } kind;
  std::string text;
};

struct Lexer {
  std::string src;
  size_t pos = 0;

  Token next() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    if (pos >= src.size()) return {Token::End, ""};
    char c = src[pos];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos;
      while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
      return {Token::Number, src.substr(start, pos - start)};
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos;
      while (pos < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
        ++pos;
      return {Token::Ident, src.substr(start, pos - start)};
    }
    if (c == '=' && pos + 1 < src.size() && src[pos + 1] == '>') {
      pos += 2;
      return {Token::Symbol, "=>"};
    }
    ++pos;
    return {Token::Symbol, std::string(1, c)};
  }
};

struct Parser {
  Lexer lex;
  Token cur;
  std::map<std::string, ExprPtr> lets;

  explicit Parser(const std::string& text) : lex{text} { cur = lex.next(); }

  [[noreturn]] void fail(const std::string& what) {
    throw DomainError("parse error: " + what + " near '" + cur.text + "'");
  }

  bool accept(const std::string& sym) {
    if (cur.kind == Token::Symbol && cur.text == sym) {
      cur = lex.next();
      return true;
    }
    return false;
  }

  void expect(const std::string& sym) {
    if (!accept(sym)) fail("expected '" + sym + "'");
  }

  bool accept_ident(const std::string& word) {
    if (cur.kind == Token::Ident && cur.text == word) {
      cur = lex.next();
      return true;
    }
    return false;
  }

  ExprPtr parse() {
    ExprPtr e = expr();
    if (cur.kind != Token::End) fail("trailing input");
    return e;
  }

  ExprPtr expr() {
    if (accept_ident("let")) {
      if (cur.kind != Token::Ident) fail("expected a name");
      std::string name = cur.text;
      cur = lex.next();
      expect("=");
      ExprPtr value = expr();
      if (!accept_ident("in")) fail("expected 'in'");
      ExprPtr tagged = labeled(value, name);
      lets[name] = tagged;
      return expr();
    }
    return additive();
  }

  ExprPtr additive() {
    ExprPtr lhs = multiplicative();
    while (true) {
      if (accept("+"))
        lhs = add(lhs, multiplicative());
      else if (accept("-"))
        lhs = sub(lhs, multiplicative());
      else
        return lhs;
    }
  }

  ExprPtr multiplicative() {
    ExprPtr lhs = power();
    while (true) {
      if (accept("*"))
        lhs = mul(lhs, power());
      else if (accept("/"))
        lhs = div_expr(lhs, power());
      else
        return lhs;
    }
  }

  ExprPtr power() {
    ExprPtr base = atom();
    if (accept("^")) return pow_expr(base, power());
    return base;
  }

  std::vector<int> bracket_list() {
    expect("[");
    std::vector<int> out;
    while (true) {
      if (cur.kind != Token::Number) fail("expected an integer");
      out.push_back(std::stoi(cur.text));
      cur = lex.next();
      if (accept("]")) return out;
      expect(",");
    }
  }

  ExprPtr atom() {
    if (accept("(")) {
      ExprPtr e = expr();
      expect(")");
      return e;
    }
    if (accept("-")) {
      if (cur.kind != Token::Number) fail("expected a number after '-'");
      Int v(cur.text, 10);
      cur = lex.next();
      return make_int(-v);
    }
    if (cur.kind == Token::Number) {
      Int v(cur.text, 10);
      cur = lex.next();
      return make_int(std::move(v));
    }
    if (cur.kind != Token::Ident) fail("expected an expression");
    std::string name = cur.text;
    cur = lex.next();
    if (name == "ceil") {
      expect("(");
      ExprPtr e = expr();
      expect(")");
      return ceil_expr(e);
    }
    if (name == "iter") {
      expect("(");
      if (!accept_ident("fun")) fail("expected 'fun'");
      if (cur.kind != Token::Ident) fail("expected a variable");
      std::string var = cur.text;
      cur = lex.next();
      expect("=>");
      ExprPtr body = expr();
      expect(",");
      ExprPtr count = expr();
      expect(",");
      ExprPtr start = expr();
      expect(")");
      return iter_expr(var, body, count, start);
    }
    if (name == "mil" || name == "udhl" || name == "ls" || name == "udhl_base" ||
        name == "phi") {
      int phi_index = 0;
      if (name == "phi") {
        expect("[");
        if (cur.kind != Token::Number) fail("expected a family index");
        phi_index = std::stoi(cur.text);
        cur = lex.next();
        expect("]");
      }
      expect("(");
      std::vector<int> b_vec = bracket_list();
      std::vector<ExprPtr> args;
      while (accept(",")) args.push_back(expr());
      expect(")");
      return call_expr(name, std::move(b_vec), std::move(args), phi_index);
    }
    if (auto it = lets.find(name); it != lets.end()) return it->second;
    return make_var(name);
  }
};

}  // namespace

std::string print_expr(const ExprPtr& expr) {
  Printer printer;
  return printer.run(expr);
}

ExprPtr parse_expr(const std::string& text) { return Parser(text).parse(); }

}  // namespace hltrees

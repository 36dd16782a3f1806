#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hltrees/basics.hpp"

namespace hltrees {

struct BoundExpr;
using ExprPtr = std::shared_ptr<const BoundExpr>;

enum class ExprKind {
  IntConst,
  RatConst,
  Var,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Ceil,
  Iter,  // n-fold iteration of a one-variable body
  Call,  // named bound function
};

/// Immutable expression node. Shared subterms make the tree a DAG; printing
/// restores the sharing through let-bindings. Named calls: "mil", "mil_rep",
/// "phi" (with a family index), "udhl", "ls", "udhl_base".
struct BoundExpr {
  ExprKind kind;
  Int int_value;           // IntConst
  Rat rat_value;           // RatConst
  std::string name;        // Var / Call name
  std::vector<int> b_vec;  // Call branching-list argument
  int phi_index = 0;       // Call "phi"
  std::vector<ExprPtr> args;
  std::string iter_var;  // Iter: bound variable of the body
  ExprPtr iter_body;     // Iter: args = {count, start}
  std::string label;     // printing hint for let-bindings
};

ExprPtr make_int(Int v);
ExprPtr make_rat(Rat v);
ExprPtr make_var(const std::string& name);
ExprPtr add(ExprPtr a, ExprPtr b);
ExprPtr sub(ExprPtr a, ExprPtr b);
ExprPtr mul(ExprPtr a, ExprPtr b);
ExprPtr div_expr(ExprPtr a, ExprPtr b);
ExprPtr pow_expr(ExprPtr base, ExprPtr exponent);
ExprPtr ceil_expr(ExprPtr a);
ExprPtr iter_expr(const std::string& var, ExprPtr body, ExprPtr count, ExprPtr start);
ExprPtr call_expr(const std::string& name, std::vector<int> b_vec,
                  std::vector<ExprPtr> args, int phi_index = 0);
ExprPtr labeled(ExprPtr e, const std::string& label);

bool expr_equal(const ExprPtr& a, const ExprPtr& b);

/// First-height bound provider. The default refuses numeric evaluation; the
/// stub returns a constant. Providers are spot-checked for monotonicity in
/// each argument against previously sampled calls.
class Phi1Provider {
 public:
  static Phi1Provider symbolic_only();
  static Phi1Provider constant(Int value);
  static Phi1Provider function(std::string name,
                               std::function<Int(const Int&, const Int&, const Int&)> fn);

  bool numeric() const { return static_cast<bool>(fn_); }
  const std::string& name() const { return name_; }
  Int operator()(const Int& b, const Int& m, const Int& r) const;

 private:
  std::string name_ = "none";
  std::function<Int(const Int&, const Int&, const Int&)> fn_;
  mutable std::vector<std::array<Int, 4>> samples_;  // b, m, r, value
};

struct EvalLimits {
  long digit_cap = 1'000'000;  // decimal digits per intermediate value
  long iter_cap = 1'000'000;   // loop iterations per iterated construct
};

struct EvalOutcome {
  bool overflowed = false;
  Int value;                     // meaningful when !overflowed
  std::string overflow_subterm;  // names the offending subterm
};

/// Bottom-up exact evaluation. Any intermediate past the caps aborts to the
/// distinguished overflow outcome, never a truncated number. Named calls
/// below the top expand through the recursion rules with memoization.
EvalOutcome evaluate(const ExprPtr& expr, const EvalLimits& limits,
                     const Phi1Provider& phi1);

// ---- bound builders (symbolic; evaluation resolves the named calls) ----

/// Monochromatic-family height bound. r = 1 returns m directly (one color);
/// the first-height case delegates to the pluggable provider over the
/// product of b_i^{b_i}; larger heights go through the one-variable family
/// recursion. m >= k >= 1 and r >= 1 required.
ExprPtr mil_bound(const std::vector<int>& b_vec, const Int& m, int k, const Int& r);

struct MilForms {
  ExprPtr iterated_form;   // iteration of the step function over repeats
  ExprPtr recursive_form;  // one-variable family recursion
};

/// Both constructions of the same bound; they agree under a constant
/// provider wherever both evaluate.
MilForms mil_bound_forms(const std::vector<int>& b_vec, const Int& m, int k,
                         const Int& r);

/// The bound with each b_i repeated b_i times, plus one.
ExprPtr mil_repeated(const std::vector<int>& b_vec, const Int& m, int k, const Int& r);

/// Least N with (b/(b-1))^(eps N) > sum_{i<k} C(N,i), decided by the exact
/// cross-power comparison b^(pN) > M^q (b-1)^(pN) for eps = p/q.
Int udhl_base(int b, const Int& k, const Rat& eps, const EvalLimits& limits = {});

/// Dense-level bound, recursing on the dimension through the selection bound
/// at halved density.
ExprPtr udhl_bound(const std::vector<int>& b_vec, int k, const Rat& eps);

/// Selection bound: 1 at height one, else the iterated composite of the three
/// per-step height controls.
ExprPtr ls_bound(const std::vector<int>& b_vec_plus, int k, const Rat& eps);

// ---- text and tree forms ----

/// Stable, parse-round-trippable text with let-bindings for shared subterms.
std::string print_expr(const ExprPtr& expr);
ExprPtr parse_expr(const std::string& text);

}  // namespace hltrees

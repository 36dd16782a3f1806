#include <cmath>

#include "doctest.h"
#include "hltrees/bounds_calculus.hpp"

using namespace hltrees;

TEST_CASE("base scan values") {
  CHECK(udhl_base(2, 1, Rat(1)) == 1);
  CHECK(udhl_base(2, 2, Rat(1)) == 2);
  CHECK(udhl_base(2, 2, Rat(1, 2)) == 6);
  CHECK(udhl_base(3, 2, Rat(1)) == 4);  // (3/2)^N first beats N+1 at N=4
}

TEST_CASE("base scan shape") {
  for (int b : {2, 3}) {
    Int prev = 0;
    for (int k = 1; k <= 4; ++k) {
      Int v = udhl_base(b, k, Rat(1, 2));
      CHECK(v >= k);       // at least k levels are needed
      CHECK(v >= prev);    // nondecreasing in k
      prev = v;
    }
    // nonincreasing as eps grows
    CHECK(udhl_base(b, 3, Rat(1, 4)) >= udhl_base(b, 3, Rat(1, 2)));
    CHECK(udhl_base(b, 3, Rat(1, 2)) >= udhl_base(b, 3, Rat(1)));
  }
}

TEST_CASE("base scan agrees with floating-point evaluation away from ties") {
  for (int b : {2, 3, 4})
    for (int k = 1; k <= 3; ++k)
      for (const Rat& eps : {Rat(1), Rat(1, 2), Rat(1, 3), Rat(2, 3)}) {
        Int n = udhl_base(b, k, eps);
        double e = eps.get_d();
        double ratio = std::log2(double(b) / (b - 1));
        auto tail = [&](long N) {
          double sum = 0, binom = 1;
          for (long i = 0; i < k && i <= N; ++i) {
            sum += binom;
            binom = binom * double(N - i) / double(i + 1);
          }
          return sum;
        };
        // the returned N satisfies the inequality, N-1 does not (checked in
        // floating point only when the margin is clear)
        long N = n.get_si();
        double lhs = e * N * ratio, rhs = std::log2(tail(N));
        if (std::abs(lhs - rhs) > 1e-6) CHECK(lhs > rhs);
        if (N > 1) {
          double lhs0 = e * (N - 1) * ratio, rhs0 = std::log2(tail(N - 1));
          if (std::abs(lhs0 - rhs0) > 1e-6) CHECK(lhs0 < rhs0);
        }
      }
}

TEST_CASE("single-color shortcut and family recursion") {
  EvalLimits limits;
  auto stub = Phi1Provider::constant(3);

  SUBCASE("one color returns the height") {
    auto e = mil_bound({2}, 5, 2, 1);
    CHECK(e->kind == ExprKind::IntConst);
    CHECK(evaluate(e, limits, stub).value == 5);
    CHECK(evaluate(mil_repeated({2}, 5, 2, 1), limits, stub).value == 6);
  }
  SUBCASE("domain checks") {
    CHECK_THROWS_AS(mil_bound({2}, 1, 2, 3), DomainError);
    CHECK_THROWS_AS(mil_bound({2}, 2, 2, 0), DomainError);
    CHECK_THROWS_AS(mil_bound({1}, 2, 2, 2), DomainError);
  }
  SUBCASE("first height delegates to the provider") {
    CHECK(evaluate(mil_bound({2}, 4, 1, 7), limits, stub).value == 3);
    CHECK_THROWS_AS(evaluate(mil_bound({2}, 4, 1, 7), limits,
                             Phi1Provider::symbolic_only()),
                    DomainError);
  }
  SUBCASE("constant provider collapses the recursion to c + k - 1") {
    for (int k = 2; k <= 4; ++k) {
      auto out = evaluate(mil_bound({2}, k + 1, k, 2), limits, stub);
      REQUIRE_FALSE(out.overflowed);
      CHECK(out.value == 3 + k - 1);
    }
  }
}

TEST_CASE("the two constructions agree under constant providers") {
  EvalLimits limits;
  auto stub = Phi1Provider::constant(3);
  for (int b : {2, 3, 4}) {
    for (Int m : {Int(2), Int(3), Int(4)}) {
      for (Int r : {Int(2), Int(3), Int(4)}) {
        auto forms = mil_bound_forms({b}, m, 2, r);
        auto lhs = evaluate(forms.iterated_form, limits, stub);
        auto rhs = evaluate(forms.recursive_form, limits, stub);
        if (!lhs.overflowed && !rhs.overflowed) {
          INFO("b=", b, " m=", m.get_str(), " r=", r.get_str());
          CHECK(lhs.value == rhs.value);
        }
      }
    }
  }
  // a taller instance
  auto forms = mil_bound_forms({2}, 4, 3, 2);
  auto lhs = evaluate(forms.iterated_form, limits, stub);
  auto rhs = evaluate(forms.recursive_form, limits, stub);
  REQUIRE_FALSE(lhs.overflowed);
  REQUIRE_FALSE(rhs.overflowed);
  CHECK(lhs.value == rhs.value);
}

TEST_CASE("iterated construction needs a first-height value of at least two") {
  EvalLimits limits;
  auto tiny = Phi1Provider::constant(1);
  auto forms = mil_bound_forms({2}, 3, 2, 2);
  CHECK_THROWS_AS(evaluate(forms.iterated_form, limits, tiny), DomainError);
}

TEST_CASE("zero iterations return the start value") {
  EvalLimits limits;
  auto e = iter_expr("n", add(make_var("n"), make_int(1)), make_int(0), make_int(9));
  CHECK(evaluate(e, limits, Phi1Provider::symbolic_only()).value == 9);
}

TEST_CASE("evaluation caps") {
  EvalLimits tight;
  tight.digit_cap = 100;
  auto none = Phi1Provider::symbolic_only();

  CHECK(evaluate(make_int(42), tight, none).value == 42);

  auto tower = pow_expr(make_int(2), pow_expr(make_int(2), make_int(10)));
  auto out = evaluate(tower, tight, none);
  CHECK(out.overflowed);  // 2^1024 has 309 digits

  EvalLimits loose;
  CHECK_FALSE(evaluate(tower, loose, none).overflowed);

  auto huge_iter = iter_expr("n", make_var("n"), pow_expr(make_int(2), make_int(100)),
                             make_int(0));
  auto res = evaluate(huge_iter, loose, none);
  CHECK(res.overflowed);
  CHECK(res.overflow_subterm.find("iteration count") != std::string::npos);
}

TEST_CASE("selection bound collapses at height one") {
  EvalLimits limits;
  auto e = ls_bound({2, 2}, 1, Rat(1, 2));
  CHECK(e->kind == ExprKind::IntConst);
  CHECK(evaluate(e, limits, Phi1Provider::symbolic_only()).value == 1);
}

TEST_CASE("dimension recursion bottoms out in the base scan") {
  EvalLimits limits;
  auto none = Phi1Provider::symbolic_only();
  // two coordinates at height one: the selection bound is 1, so the whole
  // bound equals the one-dimensional base value at half density
  auto e = udhl_bound({2, 3}, 1, Rat(1, 2));
  auto out = evaluate(e, limits, none);
  REQUIRE_FALSE(out.overflowed);
  CHECK(out.value == udhl_base(2, 1, Rat(1, 4)));

  auto base = udhl_bound({2}, 2, Rat(1, 2));
  CHECK(evaluate(base, limits, none).value == 6);
}

TEST_CASE("real selection bounds exceed any cap honestly") {
  EvalLimits limits;
  limits.digit_cap = 10'000;
  limits.iter_cap = 10'000;
  auto stub = Phi1Provider::constant(3);
  auto e = ls_bound({2, 2}, 2, Rat(1, 2));
  auto out = evaluate(e, limits, stub);
  CHECK(out.overflowed);
  CHECK_FALSE(out.overflow_subterm.empty());
}

TEST_CASE("provider monotonicity is spot-checked") {
  auto bad = Phi1Provider::function("bad", [](const Int&, const Int& m, const Int&) {
    return m == 2 ? Int(10) : Int(1);
  });
  EvalLimits limits;
  (void)bad(Int(4), Int(2), Int(2));
  CHECK_THROWS_AS(bad(Int(4), Int(3), Int(2)), DomainError);
}

TEST_CASE("printing round-trips") {
  auto exprs = {
      mil_bound({2, 3}, 5, 2, 4),
      udhl_bound({2, 2}, 2, Rat(3, 4)),
      ls_bound({2, 2}, 2, Rat(1, 2)),
      ls_bound({2, 3, 2}, 3, Rat(2, 3)),
      mil_bound_forms({2}, 3, 2, 2).iterated_form,
      add(mul(make_int(3), make_rat(Rat(1, 2))), pow_expr(make_int(2), make_int(8))),
      sub(make_int(7), sub(make_int(5), make_int(2))),
  };
  for (const auto& e : exprs) {
    std::string text = print_expr(e);
    ExprPtr back = parse_expr(text);
    INFO(text);
    CHECK(expr_equal(e, back));
    // printing is stable
    CHECK(print_expr(back) == text);
  }
}

TEST_CASE("parser rejects junk") {
  CHECK_THROWS_AS(parse_expr("let = 3"), DomainError);
  CHECK_THROWS_AS(parse_expr("mil(2, 3)"), DomainError);
  CHECK_THROWS_AS(parse_expr("3 +"), DomainError);
  CHECK_THROWS_AS(parse_expr("频率"), DomainError);
}

TEST_CASE("evaluation equals parsed evaluation") {
  EvalLimits limits;
  auto stub = Phi1Provider::constant(2);
  auto e = mil_repeated({2}, 4, 2, 3);
  auto direct = evaluate(e, limits, stub);
  auto reparsed = evaluate(parse_expr(print_expr(e)), limits, stub);
  REQUIRE_FALSE(direct.overflowed);
  CHECK(direct.value == reparsed.value);
}

#include "hltrees/density_search.hpp"

TEST_CASE("exact window numbers stay below the base bound") {
  struct Cell {
    int k;
    Rat eps;
    int window;
  };
  for (const Cell& c : {Cell{1, Rat(1), 3}, Cell{2, Rat(1), 3}, Cell{2, Rat(1, 2), 4}}) {
    auto exact = udhl_exact({2}, c.k, c.eps, c.window);
    REQUIRE(exact.value.has_value());
    CHECK(Int(*exact.value) <= udhl_base(2, c.k, c.eps));
  }
}

TEST_CASE("family recursion unrolls the first-height provider") {
  // identity-in-m provider: the second family member must evaluate to m + 1
  // (m unrolling steps adding one each) and the third to 2m + 2 at m = 1, 2
  EvalLimits limits;
  auto ident = Phi1Provider::function(
      "ident", [](const Int&, const Int& m, const Int&) { return m; });
  for (long m = 2; m <= 5; ++m)
    CHECK(evaluate(mil_bound({2}, m, 2, 2), limits, ident).value == m + 1);
  // the third member reaches 2m + 2; its inner towers need a looser digit cap
  auto ident2 = Phi1Provider::function(
      "ident", [](const Int&, const Int& m2, const Int&) { return m2; });
  EvalLimits loose;
  loose.digit_cap = 20'000'000;
  auto out = evaluate(mil_bound({2}, 3, 3, 2), loose, ident2);
  REQUIRE_FALSE(out.overflowed);
  CHECK(out.value == 8);
}

TEST_CASE("halving density never shrinks the composed bound") {
  EvalLimits limits;
  auto none = Phi1Provider::symbolic_only();
  for (int k = 1; k <= 3; ++k) {
    Int strict = evaluate(udhl_bound({2, 2}, 1, Rat(1)), limits, none).value;
    Int loose = evaluate(udhl_bound({2, 2}, 1, Rat(1, 2)), limits, none).value;
    CHECK(loose >= strict);
  }
  for (const Rat& hi : {Rat(1), Rat(1, 2)}) {
    Rat lo = hi / 2;
    CHECK(udhl_base(2, 3, lo) >= udhl_base(2, 3, hi));
  }
}

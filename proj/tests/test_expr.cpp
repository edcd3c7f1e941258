#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fsishape/expr.hpp"
#include "fsishape/validation.hpp"

using namespace fsi;

TEST_CASE("parsing follows standard precedence") {
  CHECK(Expr::parse("x*y + sin(x)").eval(0, 3) == doctest::Approx(0.0));
  CHECK(Expr::parse("2^3 * x").eval(1, 0) == doctest::Approx(8.0));
  CHECK(Expr::parse("-x^2").eval(3, 0) == doctest::Approx(-9.0));
  CHECK(Expr::parse("2 - 3 - 4").eval(0, 0) == doctest::Approx(-5.0));
  CHECK(Expr::parse("12 / 3 / 2").eval(0, 0) == doctest::Approx(2.0));
  CHECK(Expr::parse("1 + 2*x^2").eval(2, 0) == doctest::Approx(9.0));
  CHECK(Expr::parse("x^-1").eval(4, 0) == doctest::Approx(0.25));
}

TEST_CASE("parse errors carry the byte offset") {
  try {
    Expr::parse("x + ");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("offset 4") != std::string::npos);
  }
  CHECK_THROWS_AS(Expr::parse("x + unknownvar"), Error);
  CHECK_THROWS_AS(Expr::parse("sin(x"), Error);
  CHECK_THROWS_AS(Expr::parse("bump(x, 0, 1)"), Error); // non-constant argument
  CHECK_THROWS_AS(Expr::parse("x ^ y"), Error);
}

TEST_CASE("evaluation errors are reported, not silent") {
  CHECK_THROWS_AS(Expr::parse("1/x").eval(0, 0), Error);
  CHECK_THROWS_AS(Expr::parse("sqrt(x)").eval(-1, 0), Error);
  CHECK(Expr::parse("sqrt(x)").eval(4, 0) == doctest::Approx(2.0));
}

TEST_CASE("symbolic gradient matches hand results") {
  Expr e = Expr::parse("x*y");
  CHECK(e.diff(0).eval(2, 5) == doctest::Approx(5.0));
  CHECK(e.diff(1).eval(2, 5) == doctest::Approx(2.0));
  Expr s = Expr::parse("sin(x)");
  CHECK(s.diff(0).eval(0, 0) == doctest::Approx(1.0));
  CHECK(s.diff(1).eval(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("gradient matches central differences at random points") {
  std::mt19937_64 rng(7);
  const char* sources[] = {
      "x*y + sin(x)*cos(y)",
      "exp(0.3*x) * (y^2 - x)",
      "bump(0.2, -0.1, 0.8) * (x + 2*y)",
      "sqrt(x^2 + y^2 + 1) / (2 + sin(y))",
      "bumprat(0, 0, 0.9, 1, x*y)",
  };
  for (const char* src : sources) {
    Expr e = Expr::parse(src);
    Expr dx = e.diff(0), dy = e.diff(1);
    for (int k = 0; k < 20; ++k) {
      double x = uniform(rng, -0.6, 0.6), y = uniform(rng, -0.6, 0.6);
      double h = 1e-6;
      double fdx = (e.eval(x + h, y) - e.eval(x - h, y)) / (2 * h);
      double fdy = (e.eval(x, y + h) - e.eval(x, y - h)) / (2 * h);
      CHECK(std::fabs(dx.eval(x, y) - fdx) <= 1e-6 * (1.0 + std::fabs(fdx)));
      CHECK(std::fabs(dy.eval(x, y) - fdy) <= 1e-6 * (1.0 + std::fabs(fdy)));
    }
  }
}

TEST_CASE("bump vanishes identically outside its disk and is smooth inside") {
  Expr b = Expr::parse("bump(0.5, 0, 0.25)");
  CHECK(b.eval(0.76, 0) == 0.0);
  CHECK(b.eval(0.75, 0) == 0.0);
  CHECK(b.eval(-2, 7) == 0.0);
  CHECK(b.eval(0.5, 0) == doctest::Approx(std::exp(-1.0)));
  // derivative stays finite and zero across the support boundary
  Expr dbx = b.diff(0);
  CHECK(dbx.eval(0.7499999, 0.0) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(dbx.eval(0.76, 0) == 0.0);
}

TEST_CASE("differentiation is linear and obeys the product rule pointwise") {
  std::mt19937_64 rng(11);
  Expr e1 = Expr::parse("sin(x)*y + x^3");
  Expr e2 = Expr::parse("exp(0.2*y) - x*y");
  double a = 2.75;
  Expr lin = a * e1 + e2;
  Expr dlin = lin.diff(0);
  Expr dprod = (e1 * e2).diff(0);
  for (int k = 0; k < 30; ++k) {
    double x = uniform(rng, -1, 1), y = uniform(rng, -1, 1);
    double want = a * e1.diff(0).eval(x, y) + e2.diff(0).eval(x, y);
    CHECK(dlin.eval(x, y) == doctest::Approx(want).epsilon(1e-12));
    double pr = e1.diff(0).eval(x, y) * e2.eval(x, y) + e1.eval(x, y) * e2.diff(0).eval(x, y);
    double denom = std::max(1.0, std::fabs(pr));
    CHECK(std::fabs(dprod.eval(x, y) - pr) / denom <= 1e-12);
  }
}

TEST_CASE("printing round-trips through the parser") {
  std::mt19937_64 rng(3);
  const char* sources[] = {
      "x*y + sin(x)*cos(y) - 2^4",
      "-x^2 + 3.5/(y + 2.0) - exp(x*y)",
      "bump(0.1, 0.2, 0.75) * (x - y)",
      "sqrt(x^2 + 1)",
  };
  for (const char* src : sources) {
    Expr e = Expr::parse(src);
    Expr d = e.diff(0); // exercise bumprat printing too
    for (Expr* ex : {&e, &d}) {
      Expr re = Expr::parse(ex->str());
      for (int k = 0; k < 20; ++k) {
        double x = uniform(rng, -0.9, 0.9), y = uniform(rng, -0.9, 0.9);
        CHECK(re.eval(x, y) == doctest::Approx(ex->eval(x, y)).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("vector fields expose exact gradients") {
  VectorField v = VectorField::parse("x^2*y", "cos(x) + y");
  Mat2 g = v.grad_eval({1.0, 2.0});
  CHECK(g(0, 0) == doctest::Approx(4.0));
  CHECK(g(0, 1) == doctest::Approx(1.0));
  CHECK(g(1, 0) == doctest::Approx(-std::sin(1.0)));
  CHECK(g(1, 1) == doctest::Approx(1.0));
}

#include "symflag/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace symflag;

namespace {

double factorial(int n) { return std::tgamma(n + 1.0); }

}  // namespace

// int_T s^a t^b = a! b! / (a + b + 2)! on the reference triangle.
TEST(TriangleRule, ExactOnMonomialsUpToOrder) {
  for (int order = 1; order <= kMaxTriangleOrder; ++order) {
    const QuadratureRule& rule = triangle_rule(order);
    EXPECT_GE(rule.order, order);
    for (int a = 0; a <= order; ++a)
      for (int b = 0; a + b <= order; ++b) {
        double sum = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q)
          sum += rule.weights[q] * std::pow(rule.nodes[q][0], a) * std::pow(rule.nodes[q][1], b);
        EXPECT_NEAR(sum, factorial(a) * factorial(b) / factorial(a + b + 2), 1e-14)
            << "order " << order << " monomial " << a << "," << b;
      }
  }
}

TEST(TriangleRule, NodesInsideReferenceTriangle) {
  for (int order = 1; order <= kMaxTriangleOrder; ++order)
    for (const auto& n : triangle_rule(order).nodes) {
      EXPECT_GE(n[0], 0.0);
      EXPECT_GE(n[1], 0.0);
      EXPECT_LE(n[0] + n[1], 1.0 + 1e-15);
    }
}

TEST(TriangleRule, RejectsUnsupportedOrder) { EXPECT_ANY_THROW(triangle_rule(kMaxTriangleOrder + 1)); }

TEST(SegmentRule, GaussLegendreExactness) {
  for (int order = 1; order <= 19; ++order) {
    const QuadratureRule& rule = segment_rule(order);
    EXPECT_EQ(rule.nodes.size(), static_cast<std::size_t>((order + 2) / 2));
    for (int k = 0; k <= order; ++k) {
      double sum = 0.0;
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) sum += rule.weights[q] * std::pow(rule.nodes[q][0], k);
      EXPECT_NEAR(sum, 1.0 / (k + 1), 1e-14) << "order " << order << " degree " << k;
    }
  }
}

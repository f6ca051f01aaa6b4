#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "qcheat/qc_expansion.hpp"

using namespace qcheat;

namespace {

struct LevelOne {
  GroupSpec spec = make_quaternionic_spec(1);
  TensorSymbols ts{1};
  CoframeExpansion ce = build_coframe(spec, ts);
  ExpansionCoefficients ec = expansion_coefficients(spec, ts);
};

const LevelOne& level_one() {
  static const LevelOne l;
  return l;
}

bool mentions(const SymPoly& p, std::uint32_t kind) {
  for (const auto& [mo, e] : p.terms())
    for (const auto& [atoms, c] : e.terms())
      for (Atom a : atoms)
        if (atom::kind(a) == kind) return true;
  return false;
}

}  // namespace

TEST(QcExpansion, ClosedFormsEqualFrameInversion) {
  for (unsigned n = 1; n <= 2; ++n) {
    auto spec = make_quaternionic_spec(n);
    TensorSymbols ts(n);
    auto ce = build_coframe(spec, ts);
    auto closed = closed_form_coefficients(spec, ts);
    auto inverted = inverted_coefficients(spec, ce);
    EXPECT_TRUE(closed == inverted) << n;
    EXPECT_FALSE(closed.s_h[0][1].is_zero());
  }
}

TEST(QcExpansion, CoefficientsAreHomogeneous) {
  const auto& l = level_one();
  for (std::size_t a = 0; a < 4; ++a) {
    for (const auto& p : l.ec.s_h[a])
      if (!p.is_zero()) EXPECT_EQ(p.homogeneous_weight(), 2);
    for (const auto& p : l.ec.r_h[a])
      if (!p.is_zero()) EXPECT_EQ(p.homogeneous_weight(), 3);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    for (const auto& p : l.ec.s_v[i])
      if (!p.is_zero()) EXPECT_EQ(p.homogeneous_weight(), 1);
    for (const auto& p : l.ec.r_v[i]) {
      if (!p.is_zero()) EXPECT_EQ(p.homogeneous_weight(), 2);
      EXPECT_FALSE(mentions(p, atom::kCurvature));
    }
    for (const auto& p : l.ec.s_v[i]) EXPECT_FALSE(mentions(p, atom::kCurvature));
  }
}

TEST(QcExpansion, SymbolFreeModelHasNoCorrections) {
  auto spec = make_quaternionic_spec(1);
  TensorSymbols flat(1, false, false);
  auto ec = expansion_coefficients(spec, flat);
  for (const auto* block : {&ec.s_h, &ec.r_h, &ec.s_v, &ec.r_v})
    for (const auto& row : *block)
      for (const auto& p : row) EXPECT_TRUE(p.is_zero());
  for (const auto& d : divergence_coefficient(spec, ec)) EXPECT_TRUE(d.is_zero());
  EXPECT_TRUE(build_P2(spec, ec).total.terms().empty());
  // without torsion symbols T^{i'}_{ab} = -2J^i_{ab} cannot hold
  EXPECT_THROW(reduce_c1(spec, flat), InvariantViolation);
}

TEST(QcExpansion, DivergenceAgreesWithBracketRoute) {
  const auto& l = level_one();
  auto d = divergence_coefficient(l.spec, l.ec);
  auto db = divergence_from_brackets(l.spec, l.ce, l.ec);
  ASSERT_EQ(d.size(), db.size());
  for (std::size_t a = 0; a < d.size(); ++a) {
    EXPECT_EQ(d[a], db[a]) << a;
    if (!d[a].is_zero()) EXPECT_EQ(d[a].homogeneous_weight(), 1);
  }
}

TEST(QcExpansion, PerturbationOperators) {
  const auto& l = level_one();
  auto p2 = build_P2(l.spec, l.ec);
  EXPECT_FALSE(p2.total.has_vertical_pair());
  EXPECT_EQ(p2.total.orders(), std::vector<int>{0});
  EXPECT_FALSE(p2.p21.terms().empty());
  EXPECT_FALSE(p2.p22.terms().empty());
  auto coord = p2.total.to_coordinates();
  for (int o : coord.orders()) EXPECT_EQ(o, 0);
  EXPECT_TRUE(build_P1(l.spec, l.ce, l.ec).is_zero());
}

TEST(QcExpansion, RewriteSystemIsConfluent) {
  TensorSymbols ts(1);
  auto rel = qc_normal_relations(ts);
  RewriteSystem ref(rel);
  EXPECT_EQ(ref.rank(), 37u);
  EXPECT_FALSE(ref.is_pivot(atom::kKappa));
  std::mt19937 gen(9);
  std::vector<Atom> probe = ts.atoms();
  for (int trial = 0; trial < 5; ++trial) {
    auto shuffled = rel;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    RewriteSystem rw(shuffled);
    EXPECT_EQ(rw.rank(), ref.rank());
    for (std::size_t k = 0; k < probe.size(); k += 7) {
      SymExpr e = SymExpr::symbol(probe[k]);
      EXPECT_EQ(rw.normal_form(e), ref.normal_form(e));
    }
  }
  auto bad = rel;
  bad.push_back({"contradiction", SymExpr(1)});
  EXPECT_THROW(RewriteSystem{bad}, InvariantViolation);
}

TEST(QcExpansion, TorsionNormalisation) {
  TensorSymbols ts(1);
  RewriteSystem rw(qc_normal_relations(ts));
  auto spec = make_quaternionic_spec(1);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = 0; b < 4; ++b)
        EXPECT_EQ(rw.normal_form(ts.T(4 + i, a, b)), SymExpr(Rational(-2 * spec.structure(i)(a, b))));
}

TEST(QcExpansion, ReductionIsLinearInKappa) {
  const auto& l = level_one();
  auto red = reduce_c1(l.spec, l.ts);
  ASSERT_FALSE(red.is_zero());
  const std::string last = red.final_line();
  EXPECT_NE(last.find("kappa"), std::string::npos);
  EXPECT_EQ(last.find("T^"), std::string::npos);
  EXPECT_EQ(last.find("R^"), std::string::npos);
  // frozen regression values of the level-one reduction
  ASSERT_EQ(red.kappa_coefficients.size(), 4u);
  EXPECT_EQ(red.kappa_coefficients[0], make_rational(-2, 3));
  EXPECT_EQ(red.kappa_coefficients[1], make_rational(1, 3));
  EXPECT_EQ(red.kappa_coefficients[2], make_rational(-1, 3));
  EXPECT_EQ(red.kappa_coefficients[3], Rational(4));
  EXPECT_EQ(red.classes[3].rule(), 4);
  EXPECT_NE(red.log.find("[moment rule (4)]"), std::string::npos);
  EXPECT_NE(red.log.find("rewrite system: 40 relations, rank 37"), std::string::npos);
  EXPECT_EQ(red.log.substr(red.log.size() - last.size() - 1), last + "\n");
}

TEST(QcExpansion, ReductionOrderIndependent) {
  const auto& l = level_one();
  auto rel = qc_normal_relations(l.ts);
  std::reverse(rel.begin(), rel.end());
  auto a = reduce_c1(l.spec, l.ts), b = reduce_c1(l.spec, l.ts, rel);
  EXPECT_EQ(a.final_line(), b.final_line());
}

TEST(QcExpansion, TorsionOnlyReducesToZero) {
  for (unsigned n = 1; n <= 2; ++n) {
    auto red = reduce_c1(make_quaternionic_spec(n), TensorSymbols(n, true, false));
    EXPECT_TRUE(red.is_zero());
    EXPECT_EQ(red.final_line(), "c1 = 0");
  }
}

TEST(QcExpansion, LevelTwoHasTheSameClasses) {
  auto one = reduce_c1(make_quaternionic_spec(1), TensorSymbols(1));
  auto two = reduce_c1(make_quaternionic_spec(2), TensorSymbols(2));
  EXPECT_EQ(one.classes, two.classes);
  EXPECT_NE(two.log.find("rewrite system: 106 relations, rank 106"), std::string::npos);
}

TEST(QcExpansion, MomentClassBookkeeping) {
  // 4 factor slots and 2 derivative slots
  EXPECT_EQ(detail::matchings(4, 2, 0), 3);
  EXPECT_EQ(detail::matchings(4, 2, 2), 12);
  EXPECT_EQ(detail::matchings(4, 2, 1), 0);
  EXPECT_EQ(detail::matchings(2, 0, 0), 1);
  MomentClass r1{2, 0, 0, 1}, r2{2, 2, 0, 0}, r3{0, 0, 0, 1}, r4{4, 0, 0, 2}, g{1, 1, 0, 0};
  EXPECT_EQ(r1.rule(), 1);
  EXPECT_EQ(r2.rule(), 2);
  EXPECT_EQ(r3.rule(), 3);
  EXPECT_EQ(r4.rule(), 4);
  EXPECT_EQ(g.rule(), 0);
  EXPECT_EQ(r4.shape(), "xxxx∂z∂z");
}

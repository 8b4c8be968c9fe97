#include "rflab/errors.hpp"
#include "rflab/translation.hpp"
#include "support.hpp"

#include <cmath>
#include <limits>

using namespace rflab;
using rflab::testing::vec;

namespace {

const FunctionField kIdentityField(1, [](const LatentVector& z, double, DomainTag) { return z; });

}  // namespace

TEST_SUITE("translation") {

TEST_CASE("strategy names round-trip") {
  for (Strategy s : {Strategy::vanilla, Strategy::inversion, Strategy::treft}) {
    CHECK(parse_strategy(to_string(s)) == s);
  }
  CHECK_THROWS_AS(parse_strategy("sdedit"), InvalidArgument);
}

TEST_CASE("inversion step must lie in (0, 1)") {
  CHECK_THROWS_AS((InversionConfig{0.0}.validate()), InvalidArgument);
  CHECK_THROWS_AS((InversionConfig{1.0}.validate()), InvalidArgument);
  CHECK_NOTHROW((InversionConfig{0.3}.validate()));
}

TEST_CASE("vanilla") {
  const ZeroField zero(2);
  const LatentVector z = vec({0.7, -1.1});
  CHECK(vanilla_translate(zero, z, DomainTag::a2b) == z);

  const GaussianSpec spec(vec({3.0, -1.0}), 0.25);
  const GaussianField field(spec);
  RngState rng(2);
  for (int i = 0; i < 20; ++i) {
    const LatentVector x = 5.0 * sample_standard_normal(rng, 2);
    CHECK((vanilla_translate(field, x, DomainTag::a2b) - spec.mu()).cwiseAbs().maxCoeff() < 1e-12);
  }

  const FunctionField half(1, [](const LatentVector&, double, DomainTag) { return vec({0.5}); });
  CHECK(vanilla_translate(half, vec({1.0}), DomainTag::a2b)[0] == 1.5);
}

TEST_CASE("inversion") {
  const InversionConfig half{0.5};
  const ZeroField zero(2);
  CHECK(inversion_translate(zero, vec({1.0, 2.0}), half, DomainTag::a2b) == vec({1.0, 2.0}));
  CHECK(inversion_translate(kIdentityField, vec({2.0}), half, DomainTag::a2b)[0] == doctest::Approx(1.5));

  const GaussianField centred(GaussianSpec(vec({0.0}), 1.0));
  CHECK(inversion_translate(centred, vec({2.0}), half, DomainTag::a2b)[0] == doctest::Approx(1.0).epsilon(1e-15));

  SUBCASE("the second evaluation happens at t_inv") {
    std::vector<double> seen;
    const FunctionField probe(1, [&](const LatentVector& z, double t, DomainTag) {
      seen.push_back(t);
      return z;
    });
    inversion_translate(probe, vec({1.0}), InversionConfig{0.3}, DomainTag::b2a);
    REQUIRE(seen.size() == 2);
    CHECK(seen[0] == 1.0);
    CHECK(seen[1] == 0.3);
  }

  SUBCASE("small steps converge to the identity at first order") {
    const GaussianField field(GaussianSpec(vec({3.0, -1.0}), 0.25));
    const LatentVector z = vec({1.3, 0.4});
    double prev = std::numeric_limits<double>::infinity();
    for (double t_inv : {0.2, 0.1, 0.05, 0.025}) {
      const double change = (inversion_translate(field, z, InversionConfig{t_inv}, DomainTag::a2b) - z).norm();
      CAPTURE(t_inv);
      CHECK(change / t_inv < 20.0);
      CHECK(change < prev);
      prev = change;
    }
  }

  SUBCASE("non-finite intermediates are labelled") {
    const FunctionField blowup(1, [](const LatentVector& z, double t, DomainTag) {
      return t < 1.0 ? vec({std::numeric_limits<double>::quiet_NaN()}) : z;
    });
    CHECK_THROWS_WITH_AS(inversion_translate(blowup, vec({1.0}), half, DomainTag::a2b),
                         doctest::Contains("forward"), Divergence);
  }
}

TEST_CASE("treft") {
  const GaussianField field(GaussianSpec(vec({3.0, -1.0, 2.0}), 0.25));
  RngState rng(12);
  for (int i = 0; i < 20; ++i) {
    const LatentVector z = 4.0 * sample_standard_normal(rng, 3);
    CHECK((treft_translate(field, z, DomainTag::a2b) - z).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(treft_translate(ZeroField(3), vec({1, 2, 3}), DomainTag::a2b).isZero(0.0));
}

TEST_CASE("field evaluations per strategy") {
  const GaussianField base(GaussianSpec(vec({1.0, 1.0}), 0.5));
  CountingField counter(base);
  const LatentVector z = vec({0.2, 0.3});
  const std::pair<Strategy, std::size_t> expected[] = {
      {Strategy::vanilla, 1}, {Strategy::treft, 1}, {Strategy::inversion, 2}};
  for (const auto& [strategy, calls] : expected) {
    counter.reset();
    translate(strategy, counter, z, InversionConfig{}, DomainTag::a2b);
    CHECK(counter.calls() == calls);
  }
}

TEST_CASE("flow angle statistics") {
  RngState rng(40);
  SUBCASE("identical pairs are perfectly aligned") {
    std::vector<std::pair<LatentVector, LatentVector>> pairs;
    for (int i = 0; i < 50; ++i) {
      const LatentVector a = sample_standard_normal(rng, 4);
      pairs.emplace_back(a, a);
    }
    const FlowAngleStats stats = flow_angle_stats(GaussianField(GaussianSpec(LatentVector::Zero(4), 1.0)), pairs);
    for (double c : stats.cos_treft) CHECK(c == doctest::Approx(1.0).epsilon(1e-15));
    // z_b - z_a is zero, so the vanilla angle is undefined.
    for (const auto& c : stats.cos_vanilla) CHECK_FALSE(c.has_value());
  }
  SUBCASE("orthogonal edits are orthogonal to the pretrained flow") {
    std::vector<std::pair<LatentVector, LatentVector>> pairs;
    for (int i = 0; i < 50; ++i) {
      const LatentVector a = sample_standard_normal(rng, 4);
      LatentVector delta = sample_standard_normal(rng, 4);
      delta -= delta.dot(a) / a.squaredNorm() * a;
      pairs.emplace_back(a, a + 1e-3 * a.norm() * delta.normalized());
    }
    const FlowAngleStats stats = flow_angle_stats(GaussianField(GaussianSpec(LatentVector::Zero(4), 1.0)), pairs);
    for (const auto& c : stats.cos_vanilla) {
      REQUIRE(c.has_value());
      CHECK(std::abs(*c) < 1e-9);
    }
    CHECK(median(stats.cos_treft) > 0.999);
  }
  SUBCASE("zero-norm members are skipped and counted") {
    std::vector<std::pair<LatentVector, LatentVector>> pairs{{vec({1, 0}), vec({1, 1})},
                                                             {vec({0, 0}), vec({1, 1})},
                                                             {vec({1, 2}), vec({0, 0})}};
    const FlowAngleStats stats = flow_angle_stats(ZeroField(2), pairs);
    CHECK(stats.skipped == 2);
    CHECK(stats.cos_treft.size() == 1);
    CHECK(stats.pair_ids == std::vector<std::size_t>{0});
  }
}

TEST_CASE("medians") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  const std::vector<std::optional<double>> xs{-0.9, std::nullopt, 0.1, -0.2};
  CHECK(median_abs(xs) == doctest::Approx(0.2));
}

}  // TEST_SUITE

#include "doctest.h"

#include "fixture.hpp"
#include "mge/adversarial.hpp"
#include "mge/errors.hpp"
#include "mge/fitness.hpp"

using namespace mge;
using mge::testing::desk;

namespace {

std::vector<Candidate> small_pool() {
    const auto& f = desk();
    GeneratorConfig cfg;
    cfg.seed = 11;
    return generate_pool(f.base, f.spec, cfg, f.data.validation, 4).accepted;
}

} // namespace

TEST_CASE("quality and diversity are means of per-model scores") {
    const auto& f = desk();
    const auto pool = small_pool();
    const Criterion acc = Criterion::accuracy(f.data.validation);
    const Criterion rob = Criterion::robust_accuracy(f.data.validation, 0.1);
    double acc_sum = 0, rob_sum = 0;
    for (const auto& c : pool) {
        const ParamSet stored = c.params.rounded_f32();
        acc_sum += evaluate_accuracy(f.spec, stored, f.data.validation);
        rob_sum += robust_accuracy(f.spec, stored, f.data.validation, 0.1);
    }
    const double q = quality_fitness(f.spec, pool, acc);
    const double d = diversity_fitness(f.spec, pool, rob);
    CHECK(q == doctest::Approx(acc_sum / 4).epsilon(1e-15));
    CHECK(d == doctest::Approx(rob_sum / 4).epsilon(1e-15));
    CHECK(combined_fitness(q, d, 1.0) == q + d);
    CHECK(combined_fitness(q, d, 0.0) == q);
    CHECK(combined_fitness(0.5, 0.25, 2.0) == 1.0);
}

TEST_CASE("transfer criterion scores on the alternate dataset") {
    const auto& f = desk();
    const auto pool = small_pool();
    const Criterion alt = Criterion::transfer_accuracy(f.data.alternate);
    CHECK(alt.kind() == CriterionKind::transfer_accuracy);
    CHECK(alt.score(f.spec, pool[0].params) == evaluate_accuracy(f.spec, pool[0].params.rounded_f32(), f.data.alternate));
}

TEST_CASE("fitness errors") {
    const auto& f = desk();
    CHECK_THROWS_AS(Criterion::robust_accuracy(f.data.validation, 0.0), ConfigError);
    CHECK_THROWS_AS(Criterion::robust_accuracy(f.data.validation, -0.1), ConfigError);
    const Criterion acc = Criterion::accuracy(f.data.validation);
    CHECK_THROWS_AS(quality_fitness(f.spec, {}, acc), InvalidInputError);
    CHECK_THROWS_AS(combined_fitness(1, 1, -1), ConfigError);
    CHECK_THROWS_AS(parse_criterion_kind("beauty"), ConfigError);
    CHECK(parse_criterion_kind("robust_accuracy") == CriterionKind::robust_accuracy);
    const FitnessConfig bad{acc, acc, -0.5};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

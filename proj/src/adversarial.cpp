#include "mge/adversarial.hpp"

#include "mge/errors.hpp"
#include "mge/parallel.hpp"
#include "mge/train.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <cmath>
#include <sstream>

namespace mge {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

AdvExample step(const NetworkSpec& spec, const ParamSet& params, std::span<const double> x, int loss_label,
                double direction, double eps) {
    if (!(eps >= 0.0)) throw ConfigError("attack epsilon must be >= 0");
    AdvExample ex;
    ex.original.assign(x.begin(), x.end());
    ex.epsilon = eps;
    if (eps == 0.0) {
        ex.perturbed = ex.original;
        return ex;
    }
    const Vec g = input_gradient(spec, params, x, loss_label);
    ex.perturbed.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double p = std::clamp(x[i] + direction * eps * sign(g[i]), 0.0, 1.0);
        // x + eps can round one ulp past the ball
        while (std::abs(p - x[i]) > eps) p = std::nextafter(p, x[i]);
        ex.perturbed[i] = p;
    }
    return ex;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace

AdvExample fgsm(const NetworkSpec& spec, const ParamSet& params, std::span<const double> x, int label, double eps) {
    AdvExample ex = step(spec, params, x, label, 1.0, eps);
    ex.label = label;
    return ex;
}

AdvExample fgsm_targeted(const NetworkSpec& spec, const ParamSet& params, std::span<const double> x, int label,
                         int target, double eps) {
    AdvExample ex = step(spec, params, x, target, -1.0, eps);
    ex.label = label;
    ex.target = target;
    return ex;
}

double robust_accuracy(const NetworkSpec& spec, const ParamSet& params, const Dataset& data, double eps) {
    if (data.size() == 0) throw InvalidInputError("robust_accuracy: empty dataset");
    if (eps == 0.0) return evaluate_accuracy(spec, params, data);
    std::vector<std::uint8_t> ok(data.size(), 0);
    parallel_for(data.size(), [&](std::size_t i) {
        const auto ex = fgsm(spec, params, data.example(i), data.labels[i], eps);
        ok[i] = argmax(forward(spec, params, ex.perturbed)) == data.labels[i];
    });
    const auto correct = std::accumulate(ok.begin(), ok.end(), std::size_t{0});
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::vector<int> default_targets(const Dataset& data) {
    std::vector<int> t(data.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<int>((static_cast<std::size_t>(data.labels[i]) + 1) % data.classes);
    return t;
}

TransferReport transfer_matrix(const NetworkSpec& spec, const PoolMember& source, const std::vector<PoolMember>& pool,
                               const Dataset& sample, double eps, const std::optional<std::vector<int>>& targets) {
    if (pool.empty()) throw InvalidInputError("transfer_matrix: empty pool");
    if (sample.size() == 0) throw InvalidInputError("transfer_matrix: empty sample");
    if (targets && targets->size() != sample.size()) throw InvalidInputError("transfer_matrix: one target per example required");

    const std::size_t n = sample.size();
    std::vector<AdvExample> adv(n), adv_targeted(targets ? n : 0);
    parallel_for(n, [&](std::size_t i) {
        adv[i] = fgsm(spec, source.params, sample.example(i), sample.labels[i], eps);
        adv[i].source_id = source.id;
        if (targets) {
            adv_targeted[i] = fgsm_targeted(spec, source.params, sample.example(i), sample.labels[i], (*targets)[i], eps);
            adv_targeted[i].source_id = source.id;
        }
    });

    TransferReport report;
    report.source_id = source.id;
    report.epsilon = eps;
    report.rows.resize(pool.size());
    parallel_for(pool.size(), [&](std::size_t m) {
        const auto& member = pool[m];
        std::size_t clean = 0, fooled = 0, hit = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (argmax(forward(spec, member.params, sample.example(i))) == sample.labels[i]) ++clean;
            if (argmax(forward(spec, member.params, adv[i].perturbed)) != sample.labels[i]) ++fooled;
            if (targets && argmax(forward(spec, member.params, adv_targeted[i].perturbed)) == (*targets)[i]) ++hit;
        }
        TransferRow row;
        row.id = member.id;
        row.examples = n;
        row.untargeted_hits = fooled;
        const double nd = static_cast<double>(n);
        row.clean = static_cast<double>(clean) / nd;
        row.untargeted = static_cast<double>(fooled) / nd;
        if (targets) row.targeted = static_cast<double>(hit) / nd;
        report.rows[m] = std::move(row);
    });
    return report;
}

std::string TransferReport::to_csv() const {
    std::ostringstream out;
    out << "id,clean,untargeted,targeted\n";
    for (const auto& r : rows)
        out << r.id << ',' << fmt(r.clean) << ',' << fmt(r.untargeted) << ',' << (r.targeted ? fmt(*r.targeted) : "") << '\n';
    return out.str();
}

} // namespace mge

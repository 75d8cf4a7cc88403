#include "params.hpp"

#include "errors.hpp"

namespace auscult {

void RngParamSource::record(std::string_view name, DrawKind kind, double scalar,
                            std::vector<double> values) {
    if (!log_) return;
    log_->draws.push_back(Draw{std::string(name), kind, scalar, std::move(values)});
}

bool RngParamSource::gate(std::string_view name, double p) {
    const bool hit = rng_.bernoulli(p);
    record(name, DrawKind::gate, hit ? 1.0 : 0.0);
    return hit;
}

double RngParamSource::uniform(std::string_view name, double lo, double hi) {
    const double v = rng_.uniform(lo, hi);
    record(name, DrawKind::uniform, v);
    return v;
}

int64_t RngParamSource::randint(std::string_view name, int64_t lo, int64_t hi) {
    const int64_t v = rng_.randint(lo, hi);
    record(name, DrawKind::randint, static_cast<double>(v));
    return v;
}

uint64_t RngParamSource::choice(std::string_view name, uint64_t n) {
    const uint64_t v = rng_.choice(n);
    record(name, DrawKind::choice, static_cast<double>(v));
    return v;
}

std::vector<double> RngParamSource::gaussians(std::string_view name, size_t n, double mu,
                                              double sigma) {
    std::vector<double> v = rng_.gaussian_vector(n, mu, sigma);
    record(name, DrawKind::gaussians, 0.0, v);
    return v;
}

const Draw& ReplayParamSource::take(std::string_view name, DrawKind kind) {
    if (pos_ >= log_->draws.size())
        fail(Errc::config, "replay: draw log exhausted at '" + std::string(name) + "'");
    const Draw& d = log_->draws[pos_++];
    if (d.name != name || d.kind != kind)
        fail(Errc::config, "replay: expected draw '" + std::string(name) + "', log has '" +
                               d.name + "'");
    return d;
}

bool ReplayParamSource::gate(std::string_view name, double) {
    return take(name, DrawKind::gate).scalar != 0.0;
}

double ReplayParamSource::uniform(std::string_view name, double lo, double hi) {
    const double v = take(name, DrawKind::uniform).scalar;
    if (v < lo || v > hi)
        fail(Errc::config, "replay: '" + std::string(name) + "' out of range");
    return v;
}

int64_t ReplayParamSource::randint(std::string_view name, int64_t lo, int64_t hi) {
    const auto v = static_cast<int64_t>(take(name, DrawKind::randint).scalar);
    if (v < lo || v > hi)
        fail(Errc::config, "replay: '" + std::string(name) + "' out of range");
    return v;
}

uint64_t ReplayParamSource::choice(std::string_view name, uint64_t n) {
    const auto v = static_cast<uint64_t>(take(name, DrawKind::choice).scalar);
    if (v >= n) fail(Errc::config, "replay: '" + std::string(name) + "' out of range");
    return v;
}

std::vector<double> ReplayParamSource::gaussians(std::string_view name, size_t n, double,
                                                 double) {
    const Draw& d = take(name, DrawKind::gaussians);
    if (d.values.size() != n)
        fail(Errc::config, "replay: '" + std::string(name) + "' length mismatch");
    return d.values;
}

} // namespace auscult
